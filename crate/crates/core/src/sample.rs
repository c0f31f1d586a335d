//! Seeded random points used by calibrations, certificates and tests.

use alloc::vec::Vec;
use rand::Rng;

use crate::group::CarnotGroup;
use crate::norm::BoxNorm;

/// Coordinates uniform in `[-1, 1]`.
pub fn unit_box<R: Rng + ?Sized>(group: &CarnotGroup, rng: &mut R) -> Vec<f64> {
    (0..group.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Unit box point whose strata are rescaled by independent log-uniform
/// factors in `[10^-spread, 1]`, so that each stratum gets to dominate.
pub fn mixed_scales<R: Rng + ?Sized>(group: &CarnotGroup, rng: &mut R, spread: f64) -> Vec<f64> {
    let mut p = unit_box(group, rng);
    for j in 1..=group.step() {
        let f = libm::pow(10.0, -rng.gen_range(0.0..=spread));
        for x in &mut p[group.stratum_range(j)] {
            *x *= f;
        }
    }
    p
}

/// Point on the unit sphere of `norm`, obtained by dilating a mixed-scale
/// box point. Never returns the identity.
pub fn unit_sphere<R: Rng + ?Sized>(norm: &BoxNorm, rng: &mut R) -> Vec<f64> {
    let group = norm.group();
    loop {
        let mut p = mixed_scales(group, rng, 3.0);
        let r = norm.norm(&p);
        if r > 1e-12 {
            group.dilate_in_place(1.0 / r, &mut p);
            return p;
        }
    }
}

/// Uniform point of the Euclidean ball of radius `r` in dimension `d`.
pub fn euclidean_ball<R: Rng + ?Sized>(d: usize, r: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 <= 1.0 {
            return v.into_iter().map(|x| x * r).collect();
        }
    }
}

/// Haar-uniform point of the closed unit ball of `norm`: the ball is a
/// product of Euclidean balls, one per stratum.
pub fn unit_ball<R: Rng + ?Sized>(norm: &BoxNorm, rng: &mut R) -> Vec<f64> {
    let group = norm.group();
    let mut p = Vec::with_capacity(group.dim());
    for j in 1..=group.step() {
        let eps = norm.epsilon(j);
        let radius = libm::pow(1.0 / eps, j as f64);
        p.extend(euclidean_ball(group.strata()[j - 1], radius, rng));
    }
    p
}
