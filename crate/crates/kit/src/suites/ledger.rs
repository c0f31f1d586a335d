//! The constant ledger on measured inputs, with the automatic shrink of
//! `K₁` and `C₆` when the chosen constants break an inequality.

use carnot_core::decompose::{AnchorSearch, Decomposer};
use carnot_core::drift::{verify_drift, DriftOptions, SyntheticDrift};
use carnot_core::ledger::{auto_shrink, constant_ledger, estimate_conjugation_constant, ConstantLedger, LedgerInputs};
use carnot_core::norm::BoxNorm;
use carnot_core::tiling::{verify_tile, VerifyOptions};
use rayon::prelude::*;

use super::reachability::{cone_bases, derive_xi, ConeSettings};
use super::{std_basis, suite_error, working_norm};
use crate::error::KitError;
use crate::report::{Check, SuiteReport, Table};
use crate::runner::Context;
use crate::suites::tiling_verify::load_tile;

/// Largest drift ratio over the synthetic family.
fn drift_constant(norm: &BoxNorm, sigmas: &[f64], seed: u64) -> Result<f64, KitError> {
    let rank = norm.group().rank();
    let mut e = vec![0.0; rank];
    let mut w = vec![0.0; rank];
    e[0] = 1.0;
    w[1] = 1.0;
    let maxima = sigmas
        .par_iter()
        .map(|&sigma| {
            let f = SyntheticDrift::new(sigma, seed).generate(norm, &e, &w).map_err(suite_error)?;
            let rep = verify_drift(norm, &f, &e, sigma, 0.0, 0.9, None, &DriftOptions::default()).map_err(suite_error)?;
            Ok(rep.max_ratio)
        })
        .collect::<Result<Vec<f64>, KitError>>()?;
    Ok(maxima.into_iter().fold(0.0, f64::max))
}

fn table(l: &ConstantLedger, name: &str) -> Table {
    let mut t = Table::new(name, &["inequality", "lhs_log10", "rhs_log10", "pass", "shrink"]);
    for i in &l.inequalities {
        t.push_cells(vec![
            i.name.into(),
            i.lhs.log10().to_string(),
            i.rhs.log10().to_string(),
            i.pass.to_string(),
            i.shrink.map(|s| format!("{s:?}")).unwrap_or_default(),
        ]);
    }
    t
}

pub fn run(ctx: &Context) -> Result<SuiteReport, KitError> {
    let g = &ctx.group;
    if g.rank() < 2 {
        return Err(KitError::Group(format!("the ledger needs rank >= 2, {} has rank {}", g.name(), g.rank())));
    }
    let (tile, _) = load_tile(ctx)?;
    let norm = working_norm(ctx)?;
    let mut report = SuiteReport::new("ledger", g.name());

    let depth = ctx.depth.unwrap_or(4);
    let opts = VerifyOptions { seed: ctx.seed, ..VerifyOptions::default() };
    let tr = verify_tile(&tile, &norm, depth, &opts).map_err(suite_error)?;
    let diam = ctx.params.get("diam", tr.diam_emp)?;
    let lambda = ctx.params.get("lambda", tr.lambda_emp.min(diam / 5.0))?;

    let dec = Decomposer::new(&norm, &std_basis(g.rank()), &AnchorSearch { seed: ctx.seed, ..AnchorSearch::default() })
        .map_err(suite_error)?;
    let c0 = ctx.params.get("c0", 4.0 * g.dim() as f64 / dec.choice().zeta)?;

    let xi = match ctx.params.opt::<f64>("xi")? {
        Some(x) => x,
        None => {
            let settings = ConeSettings {
                opening: ctx.params.get("opening", 0.05f64)?,
                bases: ctx.params.get("bases", 2usize)?,
                anchors: ctx.params.get("anchors", 8usize)?,
                seed: ctx.seed,
            };
            let cb = cone_bases(&norm, &settings)?;
            let rho = ctx.params.get("rho", 0.05f64)?;
            derive_xi(&tile, &cb, tr.diam_emp, rho, ctx.params.get("reach_samples", 16usize)?, ctx.seed.wrapping_add(1))
        }
    };
    let drift = match ctx.params.opt::<f64>("drift")? {
        Some(d) => d,
        None => drift_constant(&norm, &ctx.params.list("sigmas", &[0.1, 0.05, 0.01])?, ctx.seed)?,
    };
    let radius = (4.0 * c0 * (diam + 1.0)).max(2.0);
    let conj = estimate_conjugation_constant(&norm, radius, ctx.samples.unwrap_or(20_000), ctx.seed);
    let conjugation = ctx.params.get("conjugation", conj.constant)?;

    let inputs = LedgerInputs {
        diam,
        c0,
        m: ctx.params.get("m", 6u32)?,
        lambda,
        xi,
        lip: ctx.params.get("lip", 1.0f64)?,
        s: g.step() as u32,
        conjugation,
        drift,
        c_surj: ctx.params.get("c_surj", 0.1f64)?,
        k1: None,
        c6: None,
    };
    report.record("inputs", &inputs);
    report.record("conjugation_estimate", &conj);
    let raw = match constant_ledger(&inputs) {
        Ok(l) => l,
        Err(e) => {
            report.check(Check::new("ledger-inputs", false, e.to_string()));
            return Ok(report);
        }
    };
    report.check(Check::new("ledger-inputs", true, "preconditions hold"));
    report.record("initial_pass", raw.all_pass());
    report.record("initial_first_failure", raw.first_failure().map(|i| i.name));
    report.tables.push(table(&raw, "ledger_initial"));
    let ledger = if raw.all_pass() {
        raw
    } else {
        match auto_shrink(&inputs) {
            Ok(l) => l,
            Err(e) => {
                report.check(Check::new("auto-shrink", false, e.to_string()));
                return Ok(report);
            }
        }
    };
    for i in &ledger.inequalities {
        report.check(Check::new(i.name, i.pass, format!("{} < {}", i.lhs, i.rhs)));
    }
    report.record("k1", ledger.k1.to_string());
    report.record("c6", ledger.c6.to_string());
    report.record("c2", ledger.c2.to_string());
    report.record("n", ledger.n);
    report.tables.push(table(&ledger, "ledger"));
    report.document("ledger", &ledger);
    Ok(report)
}
