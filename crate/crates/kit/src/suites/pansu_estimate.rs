//! Pansu-derivative recovery for translated homomorphisms and the residual
//! decay of a smooth map that is not a morphism.

use carnot_core::hom::HomogeneousHom;
use carnot_core::norm::BoxNorm;
use carnot_core::pansu::{estimate_pansu_derivative, EstimateOptions};
use carnot_core::{catalog, CarnotGroup};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{probe_directions, rng, suite_error, working_norm};
use crate::error::KitError;
use crate::report::{Check, SuiteReport, Table};
use crate::runner::Context;

const BLOCK_TOL: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-8;
const DRAWS_PER_ROUND: usize = 64;

fn dyadic(rng: &mut ChaCha8Rng, denom: f64, range: f64) -> f64 {
    let k = (range * denom) as i64;
    rng.gen_range(-k..=k) as f64 / denom
}

/// A random horizontal block that extends to a validated homomorphism.
fn random_hom(g: &CarnotGroup, target: &CarnotGroup, tn: &BoxNorm, rng: &mut ChaCha8Rng) -> Option<HomogeneousHom> {
    for _ in 0..DRAWS_PER_ROUND {
        let a1 = DMatrix::from_fn(target.rank(), g.rank(), |_, _| dyadic(rng, 8.0, 2.0));
        if let Ok(l) = HomogeneousHom::from_horizontal(g, target, &a1, 1e-12) {
            if l.validate(tn, 16, rng.gen()).valid {
                return Some(l);
            }
        }
    }
    None
}

pub fn run(ctx: &Context) -> Result<SuiteReport, KitError> {
    let g = &ctx.group;
    let rounds = ctx.samples.unwrap_or(20);
    let levels = ctx.params.get("scales", 11i32)?;
    let scales: Vec<f64> = (0..levels).map(|k| 0.5f64.powi(k)).collect();
    let n = working_norm(ctx)?;
    let flat = CarnotGroup::new(catalog::euclidean(g.rank())).map_err(suite_error)?;
    let flat_norm = BoxNorm::new(&flat, &[]).map_err(suite_error)?;
    let dirs = probe_directions(g.rank());
    let mut report = SuiteReport::new("pansu-estimate", g.name());

    let mut r = rng(ctx.seed);
    let mut table = Table::new("rounds", &["round", "target", "block_error", "max_residual"]);
    let (mut worst_block, mut worst_res, mut failures, mut missing) = (0.0f64, 0.0f64, Vec::new(), 0);
    for round in 0..rounds {
        for (target, tn) in [(g, &n), (&flat, &flat_norm)] {
            let Some(l) = random_hom(g, target, tn, &mut r) else {
                missing += 1;
                continue;
            };
            let tau: Vec<f64> = (0..target.dim()).map(|_| dyadic(&mut r, 16.0, 1.0)).collect();
            let x0: Vec<f64> = (0..g.dim()).map(|_| dyadic(&mut r, 16.0, 1.0)).collect();
            let f = |x: &[f64]| target.mul(&tau, &l.apply(x));
            match estimate_pansu_derivative(&f, &x0, &scales, &dirs, &n, tn, &EstimateOptions::default()) {
                Ok(est) => {
                    let err = (est.hom.matrix() - l.matrix()).abs().max();
                    let res = est.curve.max_residual();
                    worst_block = worst_block.max(err);
                    worst_res = worst_res.max(res);
                    table.push_cells(vec![round.to_string(), target.name().into(), err.to_string(), res.to_string()]);
                }
                Err(e) => failures.push(format!("round {round} -> {}: {e}", target.name())),
            }
        }
    }
    report.tables.push(table);
    report.record("rounds", rounds);
    report.record("max_block_error", worst_block);
    report.record("max_residual", worst_res);
    report.check(Check::new(
        "homomorphisms",
        missing == 0,
        format!("{missing} of {} draws found no extendable horizontal block", 2 * rounds),
    ));
    report.check(Check::new(
        "estimates",
        failures.is_empty(),
        failures.first().cloned().unwrap_or_else(|| format!("{} estimates", 2 * rounds - missing)),
    ));
    report.check(Check::below("block-recovery", worst_block, BLOCK_TOL));
    report.check(Check::below("residual", worst_res, RESIDUAL_TOL));

    // x ↦ (sin x₁, x₂, …) has differential id at 0 and residual ~ t.
    let smooth = |x: &[f64]| {
        let mut y = x.to_vec();
        y[0] = y[0].sin();
        y
    };
    let mut smooth_dirs = dirs.clone();
    if g.rank() >= 2 {
        smooth_dirs.extend((0..16).map(|k| {
            let a = std::f64::consts::PI * k as f64 / 16.0;
            let mut v = vec![0.0; g.rank()];
            v[0] = a.cos();
            v[1] = a.sin();
            v
        }));
    }
    let mut curve = Table::new("residuals", &["scale", "residual"]);
    match estimate_pansu_derivative(&smooth, &g.identity(), &scales, &smooth_dirs, &n, &n, &EstimateOptions::default()) {
        Ok(est) => {
            let a1 = est.hom.block(1);
            let id_err = (a1 - DMatrix::identity(g.rank(), g.rank())).abs().max();
            let slope = est.curve.finest_decade_slope().unwrap_or(f64::NAN);
            for &(t, res) in &est.curve.points {
                curve.push(&[t, res]);
            }
            report.record("smooth_slope", slope);
            report.record("smooth_block_error", id_err);
            report.check(Check::below("smooth-differential", id_err, BLOCK_TOL));
            report.check(Check::new("smooth-slope", (0.9..=1.5).contains(&slope), format!("{slope:.4} in [0.9, 1.5]")));
        }
        Err(e) => report.check(Check::new("smooth-differential", false, e.to_string())),
    }
    report.tables.push(curve);
    Ok(report)
}
