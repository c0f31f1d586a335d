//! The verification suites, one per operation family.

use carnot_core::norm::{calibrate_box_norm, BoxNorm, CalibrationOptions};
use carnot_core::CarnotGroup;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::KitError;
use crate::report::SuiteReport;
use crate::runner::Context;

pub mod decompose_roundtrip;
pub mod density_david;
pub mod drift;
pub mod group_axioms;
pub mod ledger;
pub mod norm_calibration;
pub mod pansu_estimate;
pub mod reachability;
pub mod tiling_verify;

pub const SUITES: [&str; 9] = [
    "group-axioms",
    "norm-calibration",
    "pansu-estimate",
    "decompose-roundtrip",
    "drift",
    "tiling-verify",
    "reachability",
    "ledger",
    "density-david",
];

/// Group used when the config names none.
pub fn default_group(_suite: &str) -> &'static str {
    "heisenberg1"
}

pub fn run(suite: &str, ctx: &Context) -> Result<SuiteReport, KitError> {
    match suite {
        "group-axioms" => group_axioms::run(ctx),
        "norm-calibration" => norm_calibration::run(ctx),
        "pansu-estimate" => pansu_estimate::run(ctx),
        "decompose-roundtrip" => decompose_roundtrip::run(ctx),
        "drift" => drift::run(ctx),
        "tiling-verify" => tiling_verify::run(ctx),
        "reachability" => reachability::run(ctx),
        "ledger" => ledger::run(ctx),
        "density-david" => density_david::run(ctx),
        other => Err(KitError::UnknownSuite(other.to_string())),
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn std_basis(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub(crate) fn suite_error(e: impl std::fmt::Display) -> KitError {
    KitError::Suite(e.to_string())
}

/// The box norm a suite works with: explicit `eps=...` values, or a
/// calibration over `calibration_samples` pairs seeded by the run seed.
pub(crate) fn working_norm(ctx: &Context) -> Result<BoxNorm, KitError> {
    let g = &ctx.group;
    if let Some(raw) = ctx.params.raw("eps") {
        let eps = raw
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| KitError::bad_param("eps", e.to_string())))
            .collect::<Result<Vec<f64>, _>>()?;
        return BoxNorm::new(g, &eps).map_err(|e| KitError::bad_param("eps", format!("{e:?}")));
    }
    let samples = ctx.params.get("calibration_samples", 50_000usize)?;
    calibrate_norm(g, samples, ctx.seed)
}

pub(crate) fn calibrate_norm(g: &CarnotGroup, samples: usize, seed: u64) -> Result<BoxNorm, KitError> {
    calibrate_box_norm(g, &CalibrationOptions { samples, seed, ..Default::default() }).map_err(suite_error)
}

/// `e_i` and `e_i ± e_j` for `i < j`.
pub(crate) fn probe_directions(rank: usize) -> Vec<Vec<f64>> {
    let basis = std_basis(rank);
    let mut out = basis.clone();
    for i in 0..rank {
        for j in i + 1..rank {
            for sign in [1.0, -1.0] {
                out.push((0..rank).map(|k| basis[i][k] + sign * basis[j][k]).collect());
            }
        }
    }
    out
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
