//! Density ratios and David-condition fractions on a uniform ball cloud and
//! on the vertical axis.

use std::path::Path;

use carnot_core::density::{
    david_fraction, decade_estimates, density_estimates, density_profile, ChartedCloud, DavidOptions, DavidReport, DcGrid,
    DcParams, WeightedCloud,
};
use carnot_core::drift::geometric_radii;
use carnot_core::norm::BoxNorm;
use carnot_core::sample;

use super::{rng, suite_error, working_norm};
use crate::error::KitError;
use crate::formats::CloudCsv;
use crate::report::{Check, SuiteReport, Table};
use crate::runner::Context;

const THETA_RATIO: f64 = 2.0;
const BALL_DAVID: f64 = 0.9;
const AXIS_DAVID: f64 = 0.05;
const AXIS_DIVERGENCE: f64 = 5.0;

struct DavidSetup {
    grid: DcGrid,
    template: DcParams,
    eps: f64,
    parameters: Vec<(f64, f64)>,
    options: DavidOptions,
}

fn david(cloud: &WeightedCloud, norm: &BoxNorm, s: &DavidSetup) -> Result<DavidReport, KitError> {
    let id = |x: &[f64]| x.to_vec();
    let charted = ChartedCloud::new(cloud, &id, norm, s.grid).map_err(suite_error)?;
    david_fraction(&charted, s.eps, &s.parameters, &s.template, &s.options).map_err(suite_error)
}

fn verdicts(name: &str, rep: &DavidReport) -> Table {
    let mut t = Table::new(name, &["index", "member"]);
    for &(i, m) in &rep.verdicts {
        t.push(&[i as f64, if m { 1.0 } else { 0.0 }]);
    }
    t
}

pub fn run(ctx: &Context) -> Result<SuiteReport, KitError> {
    let g = &ctx.group;
    let norm = working_norm(ctx)?;
    let dim = g.dim();
    let count = ctx.samples.unwrap_or(100_000);
    let q = ctx.params.get("q", g.homogeneous_dimension() as f64)?;
    let mut report = SuiteReport::new("density-david", g.name());

    let (points, weights) = match ctx.params.raw("cloud") {
        Some(path) => {
            let c = CloudCsv::load(Path::new(path))?;
            if c.dim != dim {
                return Err(KitError::Input { path: path.into(), reason: format!("cloud has {} coordinates, group has {dim}", c.dim) });
            }
            (c.points, c.weights)
        }
        None => {
            let mut r = rng(ctx.seed);
            let pts: Vec<f64> = (0..count).flat_map(|_| sample::unit_ball(&norm, &mut r)).collect();
            (pts, vec![1.0; count])
        }
    };
    let setup = DavidSetup {
        grid: DcGrid { cell: ctx.params.get("cell", 0.13f64)? },
        template: DcParams {
            beta: 0.5,
            eps: 0.5,
            big_r: 1.0,
            r_min: ctx.params.get("r_min", 0.6f64)?,
            radii: ctx.params.get("dc_radii", 3usize)?,
            min_cells: ctx.params.get("min_cells", 100usize)?,
        },
        eps: ctx.params.get("eps_david", 0.5f64)?,
        parameters: vec![(0.5, 0.8), (0.5, 1.0)],
        options: DavidOptions { max_points: Some(ctx.params.get("david_points", 2000usize)?), seed: ctx.seed },
    };
    let radii = geometric_radii(ctx.params.get("r_lo", 1e-3f64)?, 1.0 + 1e-9, 8);
    let origin = g.identity();

    let cloud = WeightedCloud::new(&norm, &points, &weights).map_err(suite_error)?;
    let with_axis = g.step() >= 2;
    let axis_points: Vec<f64> = if with_axis {
        (0..count)
            .flat_map(|i| {
                let mut p = vec![0.0; dim];
                p[dim - 1] = -1.0 + 2.0 * (i as f64 + 0.5) / count as f64;
                p
            })
            .collect()
    } else {
        Vec::new()
    };

    let (ball_side, axis_side) = rayon::join(
        || -> Result<_, KitError> {
            let est = density_estimates(&cloud, &origin, &radii, q).map_err(suite_error)?;
            let dav = david(&cloud, &norm, &setup)?;
            Ok((est, dav))
        },
        || -> Result<_, KitError> {
            if !with_axis {
                return Ok(None);
            }
            let axis = WeightedCloud::uniform(&norm, &axis_points).map_err(suite_error)?;
            let decades = decade_estimates(&axis, &origin, &radii, q).map_err(suite_error)?;
            let dav = david(&axis, &norm, &setup)?;
            let profile = density_profile(&axis, &origin, &radii, q);
            Ok(Some((decades, dav, profile)))
        },
    );
    let (est, ball_david) = ball_side?;
    let ratio = est.theta_upper / est.theta_lower;
    report.record("q", q);
    report.record("ball_estimate", &est);
    report.record("ball_david", &ball_david.fraction);
    report.check(Check::below("theta-ratio", ratio, THETA_RATIO));
    report.check(Check::above("david-ball", ball_david.fraction, BALL_DAVID));

    let mut profile = Table::new("density", &["cloud", "r", "mass_over_r_q"]);
    for (r, v) in density_profile(&cloud, &origin, &radii, q) {
        profile.push_cells(vec!["ball".into(), r.to_string(), v.to_string()]);
    }
    if let Some((decades, axis_david, axis_profile)) = axis_side? {
        for (r, v) in axis_profile {
            profile.push_cells(vec!["axis".into(), r.to_string(), v.to_string()]);
        }
        let divergence = if decades.len() >= 2 { decades[0].theta_upper / decades[1].theta_upper } else { f64::NAN };
        report.record("axis_decades", &decades);
        report.record("axis_david", axis_david.fraction);
        report.record("axis_divergence", divergence);
        report.check(Check::below("david-axis", axis_david.fraction, AXIS_DAVID));
        report.check(Check::new(
            "axis-divergence",
            divergence > AXIS_DIVERGENCE,
            format!("θ* ratio over the two finest decades {divergence:.3} > {AXIS_DIVERGENCE}"),
        ));
        report.tables.push(verdicts("verdicts_axis", &axis_david));
    }
    report.tables.push(profile);
    report.tables.push(verdicts("verdicts", &ball_david));
    let csv = CloudCsv { dim, points, weights };
    report.tables.push(Table::with_header("cloud", CloudCsv::header(dim), csv.rows()));
    Ok(report)
}
