//! Box-norm calibration with its triangle certificate, plus homogeneity,
//! symmetry and positivity on random points.

use carnot_core::norm::CalibrationOptions;
use carnot_core::{calibrate_box_norm, sample};
use rand::Rng;
use rayon::prelude::*;

use super::rng;
use crate::error::KitError;
use crate::formats::NormFile;
use crate::report::{Check, SuiteReport, Table};
use crate::runner::Context;

const CERT_SLACK: f64 = 1e-12;

pub fn run(ctx: &Context) -> Result<SuiteReport, KitError> {
    let g = &ctx.group;
    let samples = ctx.samples.unwrap_or(1_000_000);
    let points = ctx.params.get("points", 10_000usize)?;
    let opts = CalibrationOptions {
        samples,
        seed: ctx.seed,
        search_samples: ctx.params.get("search_samples", 20_000usize)?,
        max_rounds: ctx.params.get("max_rounds", 20usize)?,
    };
    let mut report = SuiteReport::new("norm-calibration", g.name());
    let norm = match calibrate_box_norm(g, &opts) {
        Ok(n) => n,
        Err(e) => {
            report.check(Check::new("calibration", false, e.to_string()));
            return Ok(report);
        }
    };
    let cert = norm.certificate().cloned().expect("calibrated norms carry a certificate");
    report.check(Check::new("calibration", true, format!("epsilons {:?} after {} rounds", norm.epsilons(), cert.rounds)));
    report.check(Check::new(
        "triangle-certificate",
        cert.worst_ratio <= 1.0 + CERT_SLACK && cert.pairs == samples,
        format!("worst ∥xy∥/(∥x∥+∥y∥) {:.12} over {} pairs", cert.worst_ratio, cert.pairs),
    ));
    report.check(Check::new(
        "pi1-lipschitz",
        cert.pi1_lipschitz <= 1.0 + CERT_SLACK,
        format!("{:.12}", cert.pi1_lipschitz),
    ));

    let mut r = rng(ctx.seed ^ 0x5eed);
    let draws: Vec<(Vec<f64>, f64)> = (0..points)
        .map(|_| {
            let p = sample::mixed_scales(g, &mut r, 3.0);
            let k = r.gen_range(-8..=8);
            let sign = if r.gen::<bool>() { 1.0 } else { -1.0 };
            (p, sign * 2f64.powi(k))
        })
        .collect();
    let stats: Vec<(f64, bool, bool)> = draws
        .par_iter()
        .map(|(p, lambda)| {
            let np = norm.norm(p);
            let dp = g.dilate(*lambda, p).unwrap();
            let rel = (norm.norm(&dp) - lambda.abs() * np).abs() / (lambda.abs() * np);
            (rel, norm.norm(&g.inverse(p)) == np, np > 0.0)
        })
        .collect();
    let homogeneity = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    report.record("epsilons", norm.epsilons());
    report.record("certificate", &cert);
    report.record("max_homogeneity_error", homogeneity);
    report.check(Check::count_zero("homogeneity", stats.iter().filter(|s| s.0 != 0.0).count(), points));
    report.check(Check::count_zero("symmetry-exact", stats.iter().filter(|s| !s.1).count(), points));
    report.check(Check::count_zero("positivity", stats.iter().filter(|s| !s.2).count(), points));

    let mut table = Table::new("epsilons", &["stratum", "epsilon"]);
    for (j, e) in norm.epsilons().iter().enumerate() {
        table.push(&[(j + 2) as f64, *e]);
    }
    report.tables.push(table);
    report.document("norm", NormFile::from_norm(&norm));
    Ok(report)
}
