//! Horizontal decomposition round trip, the empirical constant `c₀` and the
//! commutator identity in step-2 groups.

use carnot_core::decompose::{estimate_c0, AnchorSearch, Decomposer};
use carnot_core::sample;
use rayon::prelude::*;
use serde_json::json;

use super::{max_abs_diff, rng, std_basis, suite_error, working_norm};
use crate::error::KitError;
use crate::report::{Check, SuiteReport, Table};
use crate::runner::Context;

const ROUNDTRIP_TOL: f64 = 1e-8;
const COMMUTATOR_TOL: f64 = 1e-12;
const C0_SPREAD: f64 = 0.1;
const WORDS_KEPT: usize = 8;

pub fn run(ctx: &Context) -> Result<SuiteReport, KitError> {
    let g = &ctx.group;
    let targets = ctx.samples.unwrap_or(1000);
    let spread = ctx.params.get("spread", 2.0f64)?;
    let norm = working_norm(ctx)?;
    let search = AnchorSearch { seed: ctx.seed, ..AnchorSearch::default() };
    let dec = Decomposer::new(&norm, &std_basis(g.rank()), &search).map_err(suite_error)?;
    let mut report = SuiteReport::new("decompose-roundtrip", g.name());
    report.record("zeta", dec.choice().zeta);

    let mut r = rng(ctx.seed);
    let vs: Vec<Vec<f64>> = (0..targets).map(|_| sample::mixed_scales(g, &mut r, spread)).collect();
    let words: Vec<_> = vs.par_iter().map(|v| dec.decompose(v)).collect();
    let mut table = Table::new("roundtrip", &["index", "target_norm", "error", "ratio", "length"]);
    let (mut fails, mut bad_len, mut worst, mut worst_ratio) = (Vec::new(), 0, 0.0f64, 0.0f64);
    let mut kept = Vec::new();
    for (i, (v, w)) in vs.iter().zip(&words).enumerate() {
        match w {
            Ok(w) => {
                let err = max_abs_diff(&w.evaluate(g), v) / w.certificate.target_norm.max(1.0);
                worst = worst.max(err);
                worst_ratio = worst_ratio.max(w.certificate.ratio);
                if w.len() != 2 * g.dim() {
                    bad_len += 1;
                }
                table.push(&[i as f64, w.certificate.target_norm, err, w.certificate.ratio, w.len() as f64]);
                if kept.len() < WORDS_KEPT {
                    kept.push(w.clone());
                }
            }
            Err(e) => fails.push(format!("target {i}: {e}")),
        }
    }
    report.tables.push(table);
    report.record("max_relative_error", worst);
    report.record("max_ratio", worst_ratio);
    report.check(Check::new(
        "decompositions",
        fails.is_empty(),
        fails.first().cloned().unwrap_or_else(|| format!("{targets} targets")),
    ));
    report.check(Check::below("roundtrip", worst, ROUNDTRIP_TOL));
    report.check(Check::count_zero("word-length", bad_len, targets));

    let seeds = [ctx.seed.wrapping_add(1), ctx.seed.wrapping_add(2)];
    let (a, b) = rayon::join(|| estimate_c0(&dec, targets, seeds[0]), || estimate_c0(&dec, targets, seeds[1]));
    let spread_c0 = (a.c0 - b.c0).abs() / a.c0.max(b.c0);
    report.record("c0", json!({ "seeds": seeds, "values": [a.c0, b.c0], "relative_spread": spread_c0 }));
    report.check(Check::new(
        "c0-finite",
        a.c0.is_finite() && b.c0.is_finite() && a.failures + b.failures == 0,
        format!("c0 {:.4} and {:.4}, {} failures", a.c0, b.c0, a.failures + b.failures),
    ));
    report.check(Check::below("c0-stable", spread_c0, C0_SPREAD));

    if g.step() == 2 && g.rank() >= 2 {
        // exp(X₁)exp(X₂)exp(−X₁)exp(−X₂) = exp([X₁, X₂]) in step 2.
        let mut x = g.identity();
        let mut y = g.identity();
        x[0] = 1.0;
        y[1] = 1.0;
        let comm = g.product_of([x.as_slice(), &y, &g.inverse(&x), &g.inverse(&y)]);
        let want = g.algebra().bracket(&x, &y).map_err(suite_error)?;
        let err = max_abs_diff(&comm, &want);
        report.record("commutator", &comm);
        report.check(Check::below("commutator", err, COMMUTATOR_TOL));
    }
    report.document("words", kept);
    Ok(report)
}
