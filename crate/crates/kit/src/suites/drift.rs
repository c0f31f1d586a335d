//! Endpoint drift on the synthetic fragment family.

use carnot_core::drift::{verify_drift, DriftOptions, DriftReport, SyntheticDrift};
use carnot_core::fragment::Fragment;
use rayon::prelude::*;

use super::{suite_error, working_norm};
use crate::error::KitError;
use crate::formats::FragmentCsv;
use crate::report::{Check, SuiteReport, Table};
use crate::runner::Context;
use crate::svg::Scatter;

const SPREAD_LIMIT: f64 = 3.0;
const FLOW_TOL: f64 = 1e-10;

/// `lhs` at the sample times shared by every report, with σ in the order
/// given.
fn common_rows(reports: &[DriftReport]) -> Vec<(f64, Vec<f64>)> {
    let Some((first, rest)) = reports.split_first() else {
        return Vec::new();
    };
    first
        .rows
        .iter()
        .filter_map(|row| {
            let mut lhs = vec![row.lhs];
            for r in rest {
                lhs.push(r.rows.iter().find(|x| x.rho == row.rho)?.lhs);
            }
            Some((row.rho, lhs))
        })
        .collect()
}

pub fn run(ctx: &Context) -> Result<SuiteReport, KitError> {
    let g = &ctx.group;
    if g.rank() < 2 {
        return Err(KitError::Group(format!("drift needs rank >= 2, {} has rank {}", g.name(), g.rank())));
    }
    let mut sigmas = ctx.params.list("sigmas", &[0.1, 0.05, 0.01])?;
    if sigmas.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
        return Err(KitError::bad_param("sigmas", "values must lie in (0, 1]"));
    }
    sigmas.sort_by(|a, b| b.total_cmp(a));
    let radius = ctx.params.get("radius", 0.9f64)?;
    let samples = ctx.samples.unwrap_or(2001);
    let norm = working_norm(ctx)?;
    let mut e = vec![0.0; g.rank()];
    let mut w = vec![0.0; g.rank()];
    e[0] = 1.0;
    w[1] = 1.0;
    let mut report = SuiteReport::new("drift", g.name());

    let runs: Vec<Result<(Fragment<Vec<f64>>, DriftReport), KitError>> = sigmas
        .par_iter()
        .map(|&sigma| {
            let family = SyntheticDrift { samples, ..SyntheticDrift::new(sigma, ctx.seed) };
            let frag = family.generate(&norm, &e, &w).map_err(|e| KitError::Suite(format!("{e:?}")))?;
            let rep = verify_drift(&norm, &frag, &e, sigma, 0.0, radius, None, &DriftOptions::default()).map_err(suite_error)?;
            Ok((frag, rep))
        })
        .collect();
    let mut frags = Vec::new();
    let mut reps = Vec::new();
    for (sigma, run) in sigmas.iter().zip(runs) {
        match run {
            Ok((f, r)) => {
                frags.push(f);
                reps.push(r);
            }
            Err(err) => {
                report.check(Check::new("drift-hypotheses", false, format!("σ = {sigma}: {err}")));
                return Ok(report);
            }
        }
    }
    report.check(Check::new("drift-hypotheses", true, format!("{} fragments", sigmas.len())));

    let mut table = Table::new("drift", &["sigma", "rho", "lhs", "scale", "ratio"]);
    for (sigma, rep) in sigmas.iter().zip(&reps) {
        for row in &rep.rows {
            table.push(&[*sigma, row.rho, row.lhs, row.scale, row.ratio]);
        }
    }
    report.tables.push(table);
    let maxima: Vec<f64> = reps.iter().map(|r| r.max_ratio).collect();
    let hi = maxima.iter().cloned().fold(0.0, f64::max);
    let lo = maxima.iter().cloned().fold(f64::INFINITY, f64::min);
    report.record("sigmas", &sigmas);
    report.record("max_ratios", &maxima);
    report.check(Check::new(
        "ratio-spread",
        lo > 0.0 && hi / lo < SPREAD_LIMIT,
        format!("max ratios {maxima:?}, spread {:.3} < {SPREAD_LIMIT}", hi / lo),
    ));

    // lhs at each shared ρ must drop with σ.
    let common = common_rows(&reps);
    let broken: Vec<f64> = common.iter().filter(|(_, l)| l.windows(2).any(|p| p[1] >= p[0])).map(|(rho, _)| *rho).collect();
    report.record("common_radii", common.len());
    report.record("non_monotone_radii", &broken);
    report.check(Check::new(
        "lhs-monotone",
        !common.is_empty() && broken.is_empty(),
        format!("{} of {} shared radii out of order", broken.len(), common.len()),
    ));

    let mesh = 2.0 / (samples - 1) as f64;
    let times: Vec<f64> = (0..samples).map(|i| -1.0 + i as f64 * mesh).collect();
    let line: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| {
            let mut p = g.identity();
            p[0] = t;
            p
        })
        .collect();
    let flow = Fragment::new(times, line, |a, b| norm.distance(a, b)).map_err(|e| KitError::Suite(format!("{e:?}")))?;
    let sigma0 = sigmas[0];
    let flat = verify_drift(&norm, &flow, &e, sigma0, 0.0, radius, None, &DriftOptions::default()).map_err(suite_error)?;
    let flow_lhs = flat.rows.iter().map(|r| r.lhs).fold(0.0, f64::max);
    report.record("pure_flow_max_lhs", flow_lhs);
    report.check(Check::below("pure-flow", flow_lhs, FLOW_TOL));

    let mut plot = Scatter::new("fragment projections by σ", "x1", "x2");
    plot.radius = 1.0;
    for (k, (sigma, f)) in sigmas.iter().zip(&frags).enumerate() {
        for p in f.points() {
            plot.push(p[0], p[1], k);
        }
        let csv = FragmentCsv { times: f.times().to_vec(), points: f.points().to_vec() };
        report.tables.push(Table::with_header(&format!("fragment_sigma_{sigma}"), FragmentCsv::header(g.dim()), csv.rows()));
    }
    report.figures.push(("fragment".into(), plot.render()));
    Ok(report)
}
