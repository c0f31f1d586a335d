//! Self-similar tile verification over a range of depths.

use std::path::Path;

use carnot_core::tiling::{verify_tile, TileReport, TileSpec, VerifyOptions};
use serde_json::json;

use super::{suite_error, working_norm};
use crate::catalog::{tile_file, tile_lambda};
use crate::error::KitError;
use crate::formats::TileFile;
use crate::report::{Check, SuiteReport, Table};
use crate::runner::Context;
use crate::svg::Scatter;

const PLOT_POINTS: u64 = 4096;
const LAMBDA_TOL: f64 = 0.1;

/// The tile named by `tile=path`, or the shipped tile of the group.
pub fn load_tile(ctx: &Context) -> Result<(TileSpec, TileFile), KitError> {
    let file = match ctx.params.raw("tile") {
        Some(path) => TileFile::load(Path::new(path))?,
        None => tile_file(ctx.group.name()).ok_or_else(|| {
            KitError::Group(format!("no shipped tile for {}; pass tile=<path>", ctx.group.name()))
        })?,
    };
    if file.group != ctx.group.name() {
        return Err(KitError::Group(format!("tile is for {}, not {}", file.group, ctx.group.name())));
    }
    Ok((file.to_spec(&ctx.group)?, file))
}

fn default_depth(spec: &TileSpec) -> u32 {
    if spec.centers().len() <= 2 {
        12
    } else {
        6
    }
}

/// 2-D projection of the deepest cloud with at most `PLOT_POINTS` points,
/// coloured by first-level subtile.
fn plot(spec: &TileSpec, max_depth: u32, axes: (usize, usize)) -> String {
    let mut depth = 1;
    while depth < max_depth && spec.cloud_size(depth + 1) <= PLOT_POINTS {
        depth += 1;
    }
    let dim = spec.group().dim();
    let cloud = spec.attractor(depth);
    let per_letter = spec.cloud_size(depth - 1) as usize;
    let label = |k: usize| if k < dim { format!("x{}", k + 1) } else { "subtile".into() };
    let mut s = Scatter::new(&format!("depth-{depth} cloud of {}", spec.group().name()), &label(axes.0), &label(axes.1));
    s.radius = 1.2;
    for (i, p) in cloud.chunks_exact(dim).enumerate() {
        let letter = i / per_letter;
        let y = if axes.1 < dim { p[axes.1] } else { letter as f64 };
        s.push(p[axes.0], y, letter);
    }
    s.render()
}

pub fn run(ctx: &Context) -> Result<SuiteReport, KitError> {
    let g = &ctx.group;
    let (spec, file) = load_tile(ctx)?;
    let norm = working_norm(ctx)?;
    let depth = ctx.depth.unwrap_or_else(|| default_depth(&spec));
    let min_depth = ctx.params.get("min_depth", depth.saturating_sub(2).max(1))?;
    if min_depth > depth || depth == 0 {
        return Err(KitError::bad_param("min_depth", format!("need 1 <= min_depth <= depth = {depth}")));
    }
    let opts = VerifyOptions {
        grid_depth: ctx.params.opt("grid_depth")?,
        sphere_samples: ctx.params.get("sphere_samples", 64usize)?,
        radii: ctx.params.get("radii", 400usize)?,
        seed: ctx.seed,
    };
    let lambda_ref = match ctx.params.opt::<f64>("lambda")? {
        Some(l) => Some(l),
        None if ctx.params.raw("tile").is_none() => tile_lambda(g.name()),
        None => None,
    };
    let mut report = SuiteReport::new("tiling-verify", g.name());
    let mut reps: Vec<TileReport> = Vec::new();
    for d in min_depth..=depth {
        reps.push(verify_tile(&spec, &norm, d, &opts).map_err(|e| suite_error(format!("{e:?}")))?);
    }

    let mut overlap = Table::new("overlap", &["depth", "fraction"]);
    for r in &reps {
        overlap.push(&[r.depth as f64, r.overlap.fraction]);
        report.check(Check::new(
            &format!("self-similarity-depth{}", r.depth),
            r.self_similarity_defect == 0.0,
            format!("defect {:e}", r.self_similarity_defect),
        ));
    }
    report.tables.push(overlap);
    let last = reps.last().unwrap();
    report.check(Check::above("lambda-positive", last.lambda_emp, 0.0));
    if let Some(l) = lambda_ref {
        let rel = (last.lambda_emp - l).abs() / l;
        report.check(Check::new("lambda", rel < LAMBDA_TOL, format!("λ_emp {:.5} vs {l:.5}, relative {rel:.4}", last.lambda_emp)));
    }
    if g.step() == 1 {
        for r in &reps {
            let bound = 2f64.powi(-(r.depth as i32) + 2);
            report.check(Check::below(&format!("overlap-depth{}", r.depth), r.overlap.fraction, bound));
        }
    } else {
        let fractions: Vec<f64> = reps.iter().map(|r| r.overlap.fraction).collect();
        report.check(Check::new(
            "overlap-decreasing",
            fractions.windows(2).all(|w| w[1] < w[0]),
            format!("{fractions:?} over depths {min_depth}..={depth}"),
        ));
    }
    report.record(
        "depths",
        reps.iter()
            .map(|r| {
                json!({
                    "depth": r.depth,
                    "points": r.points,
                    "self_similarity_defect": r.self_similarity_defect,
                    "overlap": r.overlap,
                    "lambda_emp": r.lambda_emp,
                    "hull_radius": r.hull_radius,
                    "diam_emp": r.diam_emp,
                    "valid": r.valid,
                })
            })
            .collect::<Vec<_>>(),
    );
    report.record("lambda_emp", last.lambda_emp);
    report.record("diam_emp", last.diam_emp);
    report.document("tiles", &file);
    let dim = g.dim();
    report.figures.push(("cloud".into(), plot(&spec, depth, (0, 1))));
    if dim >= 3 {
        report.figures.push(("cloud_x1_x3".into(), plot(&spec, depth, (0, dim - 1))));
    }
    Ok(report)
}
