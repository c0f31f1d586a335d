//! Reachability of the tile centres by short horizontal words with letters
//! bounded below by `ξ` and above by `(nΛ/diam T)∥y⁻¹p∥`.

use carnot_core::cone::{cone_samples, cones_xi_separated, Cone};
use carnot_core::decompose::{AnchorSearch, Decomposer};
use carnot_core::norm::BoxNorm;
use carnot_core::tiling::{calibrate_xi, reachability_check, verify_tile, ReachParams, ReachReport, TileSpec, VerifyOptions};
use rayon::prelude::*;
use serde_json::json;

use super::{rng, suite_error, working_norm};
use crate::error::KitError;
use crate::report::{Check, SuiteReport, Table};
use crate::runner::Context;
use crate::suites::tiling_verify::load_tile;

const PASS_FRACTION: f64 = 0.95;

/// Bases drawn from separated cones around the coordinate axes, each with
/// decomposers over several anchor seeds.
pub struct ConeBases {
    pub bases: Vec<Vec<Vec<f64>>>,
    pub decomposers: Vec<Vec<Decomposer>>,
    pub separation: f64,
}

#[derive(Clone, Debug)]
pub struct ConeSettings {
    pub opening: f64,
    pub bases: usize,
    pub anchors: usize,
    pub seed: u64,
}

pub fn cone_bases(norm: &BoxNorm, s: &ConeSettings) -> Result<ConeBases, KitError> {
    let rank = norm.group().rank();
    let cones = (0..rank)
        .map(|i| {
            let mut e = vec![0.0; rank];
            e[i] = 1.0;
            Cone::new(&e, s.opening).map_err(|e| suite_error(format!("{e:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sep = cones_xi_separated(&cones, 0.5, 8, 256, s.seed);
    let mut r = rng(s.seed);
    let pools: Vec<Vec<Vec<f64>>> = cones.iter().map(|c| cone_samples(c, s.bases, &mut r)).collect();
    let count = pools.iter().map(Vec::len).min().unwrap_or(0).min(s.bases);
    let bases: Vec<Vec<Vec<f64>>> = (0..count).map(|k| pools.iter().map(|p| p[k].clone()).collect()).collect();
    let decomposers = bases
        .iter()
        .map(|b| {
            (0..s.anchors as u64)
                .into_par_iter()
                .map(|seed| Decomposer::new(norm, b, &AnchorSearch { seed, ..AnchorSearch::default() }).map_err(suite_error))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConeBases { bases, decomposers, separation: if sep.separated { sep.min_ratio } else { 0.0 } })
}

fn min_zeta(decs: &[Decomposer]) -> f64 {
    decs.iter().map(|d| d.choice().zeta).fold(f64::INFINITY, f64::min)
}

/// `ξ` shared by all bases: the smallest per-basis calibration.
pub fn derive_xi(tile: &TileSpec, cb: &ConeBases, diam: f64, rho: f64, samples: usize, seed: u64) -> f64 {
    cb.decomposers
        .par_iter()
        .map(|decs| {
            let params = ReachParams { xi: 0.0, big_lambda: 4.0 * diam / min_zeta(decs), diam, rho, samples, seed };
            calibrate_xi(tile, decs, &params)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

fn centre_table(name: &str, rep: &ReachReport) -> Table {
    let mut t = Table::new(name, &["center", "passed", "total", "min_nonzero", "max_bound_ratio"]);
    for (i, c) in rep.per_center.iter().enumerate() {
        t.push(&[i as f64, c.passed as f64, c.total as f64, c.min_nonzero, c.max_bound_ratio]);
    }
    t
}

pub fn run(ctx: &Context) -> Result<SuiteReport, KitError> {
    let g = &ctx.group;
    let (tile, _) = load_tile(ctx)?;
    let norm = working_norm(ctx)?;
    let rho = ctx.params.get("rho", 0.05f64)?;
    let samples = ctx.samples.unwrap_or(if g.rank() == 1 { 20 } else { 16 });
    let diam_depth = ctx.depth.unwrap_or(if tile.centers().len() <= 2 { 8 } else { 4 });
    let opts = VerifyOptions { seed: ctx.seed, ..VerifyOptions::default() };
    let diam = match ctx.params.opt::<f64>("diam")? {
        Some(d) => d,
        None => verify_tile(&tile, &norm, diam_depth, &opts).map_err(|e| suite_error(format!("{e:?}")))?.diam_emp,
    };
    let mut report = SuiteReport::new("reachability", g.name());
    report.record("diam", diam);

    if g.rank() == 1 {
        let dec = Decomposer::new(&norm, &[vec![1.0]], &AnchorSearch { seed: ctx.seed, ..AnchorSearch::default() })
            .map_err(suite_error)?;
        let xi = ctx.params.get("xi", 0.1f64)?;
        let xi_fail = ctx.params.get("xi_fail", 0.4f64)?;
        let base = ReachParams { xi, big_lambda: 4.0 / dec.choice().zeta, diam, rho, samples, seed: ctx.seed };
        let pass = reachability_check(&tile, std::slice::from_ref(&dec), &base);
        let strict = reachability_check(&tile, std::slice::from_ref(&dec), &ReachParams { xi: xi_fail, ..base });
        report.check(Check::new("reach", pass.pass_fraction == 1.0, format!("pass fraction {} at ξ = {xi}", pass.pass_fraction)));
        report.check(Check::new(
            "reach-fails-above",
            pass.pass_fraction > strict.pass_fraction && strict.pass_fraction < 1.0,
            format!("pass fraction {} at ξ = {xi_fail}", strict.pass_fraction),
        ));
        report.record("xi", xi);
        report.record("report", &pass);
        report.record("strict_report", &strict);
        report.tables.push(centre_table("centers", &pass));
        return Ok(report);
    }

    let settings = ConeSettings {
        opening: ctx.params.get("opening", 0.05f64)?,
        bases: ctx.params.get("bases", 2usize)?,
        anchors: ctx.params.get("anchors", 8usize)?,
        seed: ctx.seed,
    };
    let cb = cone_bases(&norm, &settings)?;
    report.check(Check::above("cones-separated", cb.separation, 0.5));
    let xi = match ctx.params.opt::<f64>("xi")? {
        Some(x) => x,
        None => derive_xi(&tile, &cb, diam, rho, samples, ctx.seed.wrapping_add(1)),
    };
    report.record("xi", xi);
    let check_seed = ctx.seed.wrapping_add(2);
    let reps: Vec<(ReachReport, ReachReport)> = cb
        .decomposers
        .par_iter()
        .map(|decs| {
            let params = ReachParams { xi, big_lambda: 4.0 * diam / min_zeta(decs), diam, rho, samples, seed: check_seed };
            let rep = reachability_check(&tile, decs, &params);
            let raised = reachability_check(&tile, decs, &ReachParams { xi: rep.min_nonzero * 1.01, ..params });
            (rep, raised)
        })
        .collect();
    let mut summaries = Vec::new();
    for (k, (rep, raised)) in reps.iter().enumerate() {
        report.check(Check::new(
            &format!("reach-basis{k}"),
            rep.pass_fraction >= PASS_FRACTION && rep.decomposition_failures == 0,
            format!("pass fraction {:.4} at ξ = {xi:.5}, {} failed decompositions", rep.pass_fraction, rep.decomposition_failures),
        ));
        report.check(Check::new(
            &format!("xi-sharp-basis{k}"),
            raised.pass_fraction < 1.0,
            format!("pass fraction {:.4} at 1.01 × smallest letter {:.5}", raised.pass_fraction, rep.min_nonzero),
        ));
        summaries.push(json!({ "basis": cb.bases[k], "report": rep }));
        report.tables.push(centre_table(&format!("centers_basis{k}"), rep));
    }
    report.record("bases", summaries);
    Ok(report)
}
