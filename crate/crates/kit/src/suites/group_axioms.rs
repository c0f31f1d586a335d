//! Group law: associativity, inverses, identity and the structure of the
//! correction polynomial `Q` in `pq = p + q + Q(p, q)`.

use carnot_core::{sample, CarnotGroup, Exact, Scalar};
use rand::Rng;
use rayon::prelude::*;

use super::{max_abs_diff, rng};
use crate::error::KitError;
use crate::report::{Check, SuiteReport, Table};
use crate::runner::Context;

const ASSOCIATIVITY_TOL: f64 = 1e-9;
const STRUCTURE_TOL: f64 = 1e-10;

#[derive(Default, Clone, Copy)]
struct Sampled {
    assoc: f64,
    inverse_fail: bool,
    identity_fail: bool,
    q1_nonzero: bool,
    structure: f64,
    homogeneity: f64,
    antisymmetry: f64,
    lower_fail: bool,
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

fn examine(g: &CarnotGroup, p: &[f64], q: &[f64], r: &[f64], lambda: f64, bump: f64, stratum: usize) -> Sampled {
    let e = g.identity();
    let pq = g.mul(p, q);
    let left = g.mul(&pq, r);
    let right = g.mul(p, &g.mul(q, r));
    let pinv = g.inverse(p);
    let rank = g.rank();
    let corr = g.bch_correction(p, q);

    let sum: Vec<f64> = (0..g.dim()).map(|i| p[i] + q[i] + corr[i]).collect();
    let structure = pq.iter().zip(&sum).map(|(a, b)| (a - b).abs() / a.abs().max(1.0)).fold(0.0, f64::max);

    let scaled = g.bch_correction(&g.dilate(lambda, p).unwrap(), &g.dilate(lambda, q).unwrap());
    let homogeneity = scaled
        .iter()
        .zip(&corr)
        .zip(g.weights())
        .map(|((s, c), &w)| {
            let want = lambda.powi(w) * c;
            (s - want).abs() / want.abs().max(1.0)
        })
        .fold(0.0, f64::max);

    let swapped = g.bch_correction(&neg(q), &neg(p));
    let antisymmetry = corr.iter().zip(&swapped).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);

    // Q_j only sees strata below j: moving strata >= stratum leaves Q_k,
    // weight(k) <= stratum, bitwise unchanged.
    let (mut p2, mut q2) = (p.to_vec(), q.to_vec());
    for j in stratum..=g.step() {
        for i in g.stratum_range(j) {
            p2[i] += bump;
            q2[i] -= bump;
        }
    }
    let moved = g.bch_correction(&p2, &q2);
    let lower_fail = (0..g.dim())
        .filter(|&k| g.weights()[k] as usize <= stratum)
        .any(|k| moved[k].to_bits() != corr[k].to_bits());

    Sampled {
        assoc: max_abs_diff(&left, &right),
        inverse_fail: g.mul(p, &pinv) != e || g.mul(&pinv, p) != e,
        identity_fail: g.mul(p, &e) != p || g.mul(&e, p) != p,
        q1_nonzero: corr[..rank].iter().any(|&c| c != 0.0),
        structure,
        homogeneity,
        antisymmetry,
        lower_fail,
    }
}

/// Rounds to a multiple of `2^-10` so exact products stay small.
fn dyadic(x: f64) -> f64 {
    (x * 1024.0).round() / 1024.0
}

pub fn run(ctx: &Context) -> Result<SuiteReport, KitError> {
    let g = &ctx.group;
    let n = ctx.samples.unwrap_or(10_000);
    let scale = ctx.params.get("scale", 1.0f64)?;
    let exact_triples = ctx.params.get("exact_samples", 64usize)?;
    let mut report = SuiteReport::new("group-axioms", g.name());

    let violations = g.algebra().spec().validate();
    report.check(Check::new(
        "algebra",
        violations.is_empty(),
        violations.first().map(|v| v.to_string()).unwrap_or_else(|| "stratified, Jacobi holds".into()),
    ));

    let mut r = rng(ctx.seed);
    let draws: Vec<_> = (0..n)
        .map(|_| {
            let mut pt = || sample::unit_box(g, &mut r).into_iter().map(|x| x * scale).collect::<Vec<f64>>();
            let (p, q, s) = (pt(), pt(), pt());
            let sign = if r.gen::<bool>() { 1.0 } else { -1.0 };
            let lambda = sign * r.gen_range(0.1..=3.0);
            let bump = r.gen_range(-1.0..=1.0);
            let stratum = r.gen_range(1..=g.step());
            (p, q, s, lambda, bump, stratum)
        })
        .collect();
    let rows: Vec<Sampled> =
        draws.par_iter().map(|(p, q, s, lambda, bump, stratum)| examine(g, p, q, s, *lambda, *bump, *stratum)).collect();

    let max = |f: fn(&Sampled) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let count = |f: fn(&Sampled) -> bool| rows.iter().filter(|s| f(s)).count();
    let assoc = max(|s| s.assoc);
    report.record("triples", n);
    report.record("max_associativity_defect", assoc);
    report.check(Check::below("associativity", assoc, ASSOCIATIVITY_TOL));
    report.check(Check::count_zero("inverse-exact", count(|s| s.inverse_fail), n));
    report.check(Check::count_zero("identity-exact", count(|s| s.identity_fail), n));

    let exact_fail = draws
        .par_iter()
        .take(exact_triples)
        .filter(|(p, q, s, ..)| {
            let ex = |v: &[f64]| v.iter().map(|&x| Exact::from_f64(dyadic(x))).collect::<Vec<Exact>>();
            let (p, q, s) = (ex(p), ex(q), ex(s));
            g.mul_generic(&g.mul_generic(&p, &q), &s) != g.mul_generic(&p, &g.mul_generic(&q, &s))
        })
        .count();
    report.check(Check::count_zero("associativity-exact", exact_fail, exact_triples.min(n)));

    let structure = max(|s| s.structure);
    let homogeneity = max(|s| s.homogeneity);
    let antisymmetry = max(|s| s.antisymmetry);
    report.record("max_structure_error", structure);
    report.record("max_homogeneity_error", homogeneity);
    report.record("max_antisymmetry_error", antisymmetry);
    report.check(Check::count_zero("q1-zero", count(|s| s.q1_nonzero), n));
    report.check(Check::below("product-structure", structure, STRUCTURE_TOL));
    report.check(Check::below("q-homogeneity", homogeneity, STRUCTURE_TOL));
    report.check(Check::below("q-antisymmetry", antisymmetry, STRUCTURE_TOL));
    report.check(Check::count_zero("q-lower-strata", count(|s| s.lower_fail), n));

    // Histogram of associativity defects by decade.
    let mut table = Table::new("associativity", &["decade", "count"]);
    let zero = rows.iter().filter(|s| s.assoc == 0.0).count();
    table.push_cells(vec!["zero".into(), zero.to_string()]);
    let mut decades: Vec<i32> = rows.iter().filter(|s| s.assoc > 0.0).map(|s| s.assoc.log10().ceil() as i32).collect();
    decades.sort_unstable();
    for chunk in decades.chunk_by(|a, b| a == b) {
        table.push_cells(vec![format!("1e{}", chunk[0]), chunk.len().to_string()]);
    }
    report.tables.push(table);
    Ok(report)
}
