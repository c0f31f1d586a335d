//! Acceptance run: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use carnot_kit::runner::{run_suite, ExperimentConfig};
use carnot_kit::SuiteReport;

const GROUPS: [&str; 7] = ["euclidean1", "euclidean2", "euclidean3", "heisenberg1", "heisenberg2", "engel", "free-2-3"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(config: ExperimentConfig) -> Result<(SuiteReport, f64), String> {
    let start = Instant::now();
    let out = run_suite(&config).map_err(|e| format!("{} on {}: {e}", config.suite, config.group.as_deref().unwrap_or("?")))?;
    Ok((out.report, start.elapsed().as_secs_f64()))
}

/// Whether the named checks passed; `None` means every check.
fn checks(report: &SuiteReport, names: Option<&[&str]>) -> Result<(), String> {
    match names {
        None => match report.first_failure() {
            None => Ok(()),
            Some(c) => Err(format!("{} {}: {}", report.group, c.name, c.detail)),
        },
        Some(names) => {
            for n in names {
                match report.find(n) {
                    None => return Err(format!("{} has no check {n}", report.group)),
                    Some(c) if !c.pass => return Err(format!("{} {}: {}", report.group, c.name, c.detail)),
                    _ => {}
                }
            }
            Ok(())
        }
    }
}

fn detail(report: &SuiteReport, name: &str) -> String {
    report.find(name).map(|c| c.detail.clone()).unwrap_or_default()
}

fn group_axioms() -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for g in GROUPS {
        let (r, t) = run(ExperimentConfig::new("group-axioms", g, 0))?;
        checks(&r, Some(&["associativity", "inverse-exact", "identity-exact", "associativity-exact"]))?;
        if t >= 5.0 {
            return Err(format!("{g} took {t:.2} s"));
        }
        worst = worst.max(r.result_f64("max_associativity_defect").unwrap_or(f64::NAN));
        slowest = slowest.max(t);
    }
    Ok(format!("max associativity defect {worst:.3e}, slowest group {slowest:.2} s"))
}

fn structure() -> Result<String, String> {
    for g in GROUPS {
        let (r, _) = run(ExperimentConfig::new("group-axioms", g, 1))?;
        checks(&r, Some(&["algebra", "q1-zero", "product-structure", "q-homogeneity", "q-antisymmetry", "q-lower-strata"]))?;
    }
    Ok("structure and Q properties hold on all catalog groups".into())
}

fn calibration() -> Result<String, String> {
    let mut parts = Vec::new();
    for g in ["heisenberg1", "engel"] {
        let mut c = ExperimentConfig::new("norm-calibration", g, 0);
        c.samples = Some(1_000_000);
        let (r, t) = run(c)?;
        checks(&r, None)?;
        parts.push(format!("{g}: {} ({t:.1} s)", detail(&r, "triangle-certificate")));
    }
    Ok(parts.join("; "))
}

fn pansu() -> Result<String, String> {
    let (r, _) = run(ExperimentConfig::new("pansu-estimate", "heisenberg1", 0))?;
    checks(&r, None)?;
    Ok(format!(
        "blocks {}, residual {}, slope {}",
        detail(&r, "block-recovery"),
        detail(&r, "residual"),
        detail(&r, "smooth-slope")
    ))
}

fn decomposition() -> Result<String, String> {
    let mut commutator = String::new();
    for g in GROUPS {
        let (r, _) = run(ExperimentConfig::new("decompose-roundtrip", g, 0))?;
        checks(&r, None)?;
        if g == "heisenberg1" {
            checks(&r, Some(&["commutator"]))?;
            commutator = detail(&r, "commutator");
        }
    }
    Ok(format!("all groups round-trip; commutator {commutator}"))
}

fn drift() -> Result<String, String> {
    let (r, t) = run(ExperimentConfig::new("drift", "heisenberg1", 0))?;
    checks(&r, None)?;
    if t >= 30.0 {
        return Err(format!("took {t:.1} s"));
    }
    Ok(format!("{}; {:.2} s", detail(&r, "ratio-spread"), t))
}

fn tiling() -> Result<String, String> {
    let mut parts = Vec::new();
    for g in ["euclidean1", "euclidean2", "heisenberg1"] {
        let (r, _) = run(ExperimentConfig::new("tiling-verify", g, 0))?;
        checks(&r, None)?;
        let key = if g == "heisenberg1" { "overlap-decreasing" } else { "lambda" };
        parts.push(format!("{g}: {}", detail(&r, key)));
    }
    Ok(parts.join("; "))
}

fn ledger() -> Result<(String, f64), String> {
    let (r, _) = run(ExperimentConfig::new("ledger", "heisenberg1", 0))?;
    checks(&r, None)?;
    let xi = r.results.get("inputs").and_then(|i| i.get("xi")).and_then(|x| x.as_f64()).ok_or("ledger recorded no ξ")?;
    let n = r.checks.len();
    Ok((format!("{n} checks pass, ξ = {xi:.5}"), xi))
}

fn reachability(xi: Option<f64>) -> Result<String, String> {
    let xi = xi.ok_or("no ledger ξ")?;
    let (r1, _) = run(ExperimentConfig::new("reachability", "euclidean1", 0))?;
    checks(&r1, Some(&["reach", "reach-fails-above"]))?;
    let (r, _) = run(ExperimentConfig::new("reachability", "heisenberg1", 0).param("xi", xi))?;
    checks(&r, Some(&["cones-separated", "reach-basis0", "reach-basis1"]))?;
    Ok(format!("euclidean1 {}; heisenberg1 {}", detail(&r1, "reach-fails-above"), detail(&r, "reach-basis0")))
}

fn density() -> Result<String, String> {
    let (r, t) = run(ExperimentConfig::new("density-david", "heisenberg1", 0))?;
    checks(&r, None)?;
    if t >= 60.0 {
        return Err(format!("took {t:.1} s"));
    }
    Ok(format!("θ ratio {}, ball {}, axis {}; {t:.1} s", detail(&r, "theta-ratio"), detail(&r, "david-ball"), detail(&r, "david-axis")))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut record = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Result<String, String>| {
        let start = Instant::now();
        let o = match f() {
            Ok(d) => Outcome { pass: true, detail: d },
            Err(d) => Outcome { pass: false, detail: d },
        };
        let t = start.elapsed().as_secs_f64();
        println!("{} {id:>2} {name}: {} [{t:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o, t));
    };
    record(1, "group axioms", &mut group_axioms);
    record(2, "product structure", &mut structure);
    record(3, "norm calibration", &mut calibration);
    record(4, "pansu derivative", &mut pansu);
    record(5, "decomposition", &mut decomposition);
    record(6, "drift", &mut drift);
    record(7, "tiling", &mut tiling);
    let mut xi = None;
    record(9, "constant ledger", &mut || ledger().map(|(d, x)| {
        xi = Some(x);
        d
    }));
    record(8, "reachability", &mut || reachability(xi));
    record(10, "density and david", &mut density);
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
