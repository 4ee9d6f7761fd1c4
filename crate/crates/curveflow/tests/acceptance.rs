//! Acceptance gate. Runs every shipped preset once through the library,
//! caches the results, and evaluates the project's eleven quantitative
//! acceptance criteria, printing exactly one PASS/FAIL line per criterion.
//! The process exits non-zero when any line fails, so `cargo test` treats a
//! red criterion as a failing test target.
//!
//! Tolerances are pinned here, next to the criterion that owns them.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use curveflow::assembly::{assemble_dW2_diagnostic, assemble_dW_operator, DofMap};
use curveflow::config::{parse_config, parse_config_str};
use curveflow::fdcheck::{derivative_check, random_smooth_field};
use curveflow::functionals::discrete_curvature;
use curveflow::mesh::CurveMesh;
use curveflow::metrics::{metrics_csv, MetricsRow};
use curveflow::orchestrator::{mesh_self_intersects, meshes_intersect, StopReason};
use curveflow::shapes::{build_shape, ShapeSpec};
use curveflow::stepper::FlowModel;

const PRESETS: [&str; 10] = [
    "example1",
    "example2-ellipse",
    "example3-cshape",
    "example4-barriers",
    "example5-barriers",
    "example6-barriers",
    "golgi-single",
    "golgi-moving-barrier",
    "golgi-3layer",
    "golgi-5layer",
];

/// Everything the criteria need from one preset run.
struct PresetRun {
    model: FlowModel,
    rows: Vec<MetricsRow>,
    stop: StopReason,
    initial: Vec<CurveMesh>,
    final_meshes: Vec<CurveMesh>,
    wall_s: f64,
    /// Iterations at which any single curve crossed itself (tracked for the
    /// C-shape run; pairwise crossings abort the run inside the library).
    self_crossings: Vec<usize>,
}

fn preset_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

fn run_preset(name: &str, track_self: bool) -> Result<PresetRun, String> {
    let path = preset_dir().join(format!("{name}.json"));
    let cfg = parse_config(&path).map_err(|e| format!("{name}: parse: {e}"))?;
    let mut runner = cfg.to_runner().map_err(|e| format!("{name}: build: {e}"))?;
    let initial: Vec<CurveMesh> =
        runner.state.vesicles.iter().map(|v| v.mesh.clone()).collect();
    let start = Instant::now();
    let mut self_crossings = Vec::new();
    loop {
        match runner.step_once() {
            Ok(true) => {
                if track_self
                    && runner.state.vesicles.iter().any(|v| mesh_self_intersects(&v.mesh))
                {
                    self_crossings.push(runner.state.completed_iterations);
                }
            }
            Ok(false) => break,
            Err(e) => return Err(format!("{name}: run: {e}")),
        }
    }
    Ok(PresetRun {
        model: cfg.model,
        rows: runner.rows().to_vec(),
        stop: runner.stop_reason().expect("stopped runs report a reason"),
        initial,
        final_meshes: runner.state.vesicles.iter().map(|v| v.mesh.clone()).collect(),
        wall_s: start.elapsed().as_secs_f64(),
        self_crossings,
    })
}

/// Metrics rows of one vesicle, in step order.
fn series<'a>(rows: &'a [MetricsRow], vesicle: usize) -> Vec<&'a MetricsRow> {
    rows.iter().filter(|r| r.vesicle == vesicle).collect()
}

fn n_vesicles(rows: &[MetricsRow]) -> usize {
    rows.iter().map(|r| r.vesicle).max().unwrap_or(0) + 1
}

/// Worst relative length deviation from the step-0 length, over all steps.
fn worst_drift(rows: &[MetricsRow]) -> f64 {
    let mut worst = 0.0_f64;
    for v in 0..n_vesicles(rows) {
        let s = series(rows, v);
        let l0 = s[0].length;
        for r in &s {
            worst = worst.max((r.length - l0).abs() / l0);
        }
    }
    worst
}

/// Largest per-step increase of `pick(row)` over every vesicle's series.
fn worst_increase(rows: &[MetricsRow], pick: fn(&MetricsRow) -> f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for v in 0..n_vesicles(rows) {
        let s = series(rows, v);
        for w in s.windows(2) {
            worst = worst.max(pick(w[1]) - pick(w[0]));
        }
    }
    worst
}

/// Mean y of the margin nodes minus mean y of the central nodes, where
/// margins are the outer 20% of the vesicle's horizontal half-span and the
/// center is the inner 30%.
fn margin_minus_central_y(mesh: &CurveMesh) -> f64 {
    let pts = mesh.nodes();
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
    let half = pts.iter().map(|p| (p.x - cx).abs()).fold(0.0, f64::max);
    let mean = |keep: &dyn Fn(f64) -> bool| {
        let ys: Vec<f64> =
            pts.iter().filter(|p| keep((p.x - cx).abs())).map(|p| p.y).collect();
        ys.iter().sum::<f64>() / ys.len() as f64
    };
    mean(&|d| d > 0.8 * half) - mean(&|d| d < 0.3 * half)
}

/// Minimal vertical extent of the curve over 0.08-wide x-bins covering the
/// central 30% of the horizontal half-span.
fn central_min_thickness(mesh: &CurveMesh) -> f64 {
    let pts = mesh.nodes();
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
    let half = pts.iter().map(|p| (p.x - cx).abs()).fold(0.0, f64::max);
    let lim = 0.3 * half;
    let bin = 0.08;
    let mut best = f64::INFINITY;
    let mut lo = -lim;
    while lo < lim {
        let ys: Vec<f64> = pts
            .iter()
            .filter(|p| p.x - cx >= lo && p.x - cx < lo + bin)
            .map(|p| p.y)
            .collect();
        if ys.len() >= 2 {
            let top = ys.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let bot = ys.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            best = best.min(top - bot);
        }
        lo += bin;
    }
    best
}

struct Gate {
    lines: Vec<(bool, String)>,
}

impl Gate {
    fn record(&mut self, idx: usize, name: &str, result: Result<(bool, String), String>) {
        let (pass, detail) = match result {
            Ok(x) => x,
            Err(e) => (false, format!("could not evaluate: {e}")),
        };
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("[{idx:2}/11] {verdict}  {name}: {detail}");
        self.lines.push((pass, name.to_string()));
    }
}

fn main() -> ExitCode {
    let mut runs: Vec<(&str, Result<PresetRun, String>)> = Vec::new();
    println!("== preset runs ==");
    for name in PRESETS {
        let track_self = name == "example3-cshape";
        let outcome = run_preset(name, track_self);
        match &outcome {
            Ok(r) => {
                let iters = r.rows.last().map(|x| x.step).unwrap_or(0);
                let over = if r.wall_s > 60.0 { "  [exceeds 60 s]" } else { "" };
                println!(
                    "   {name:<22} {:<14} after {iters:>5} iterations  {:6.1} s{over}",
                    r.stop.to_string(),
                    r.wall_s
                );
            }
            Err(e) => println!("   {name:<22} ERROR: {e}"),
        }
        runs.push((name, outcome));
    }
    let get = |name: &str| -> Result<&PresetRun, String> {
        runs.iter()
            .find(|(n, _)| *n == name)
            .and_then(|(_, r)| r.as_ref().ok())
            .ok_or_else(|| format!("preset {name} did not run"))
    };

    println!("== acceptance criteria ==");
    let mut gate = Gate { lines: Vec::new() };

    // 1. Curvature oracle: unit circle |H| = 1 within 1e-3 at n=64, EOC over
    //    n = 16/32/64 at least 1.8.
    gate.record(1, "curvature oracle", (|| {
        let mut errs = Vec::new();
        for n in [16usize, 32, 64] {
            let mesh = build_shape(&ShapeSpec::Circle { radius: 1.0, center: [0.0, 0.0] }, n)
                .map_err(|e| e.to_string())?;
            let h = discrete_curvature(&mesh).map_err(|e| e.to_string())?;
            errs.push(h.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max));
        }
        let eoc = [(errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2()];
        Ok((
            errs[2] <= 1e-3 && eoc[0] >= 1.8 && eoc[1] >= 1.8,
            format!(
                "max||H|-1| = {:.2e} at n=64 (tol 1e-3); EOC {:.2}, {:.2} (need >= 1.8)",
                errs[2], eoc[0], eoc[1]
            ),
        ))
    })());

    // 2. Length-flow oracle: circle radius after 1800 steps of tau = 1e-4
    //    equals R(0.18) = 0.8 within 1%.
    gate.record(2, "length-flow oracle", (|| {
        let r = get("example1")?;
        let last = r.rows.last().ok_or("no rows")?;
        let radius = last.length / (2.0 * std::f64::consts::PI);
        let rel = (radius - 0.8_f64).abs() / 0.8;
        Ok((
            rel <= 0.01 && last.step == 1800,
            format!(
                "R(t=0.18) = {radius:.6} vs 0.8, rel err {rel:.2e} (tol 1e-2), {} steps",
                last.step
            ),
        ))
    })());

    // 3. Model 1 ellipse: stagnation; final W within 1% of 2*pi^2/L for
    //    L = 9.6884482; drift <= 1e-6; W nonincreasing within +1e-8/step.
    gate.record(3, "model 1 ellipse", (|| {
        let r = get("example2-ellipse")?;
        let w_target = 2.0 * std::f64::consts::PI.powi(2) / 9.6884482;
        let w_final = r.rows.last().ok_or("no rows")?.w;
        let w_err = (w_final - w_target).abs() / w_target;
        let drift = worst_drift(&r.rows);
        let dw = worst_increase(&r.rows, |r| r.w);
        Ok((
            r.stop == StopReason::Stagnation && w_err <= 0.01 && drift <= 1e-6 && dw <= 1e-8,
            format!(
                "{}; W err {w_err:.2e} (tol 1e-2), drift {drift:.1e} (tol 1e-6), max dW {dw:.1e} (tol 1e-8)",
                r.stop
            ),
        ))
    })());

    // 4. Model 1 C-shape: converges without self-intersection; final W within
    //    2% of the circle limit 2*pi^2/L at the conserved length.
    gate.record(4, "model 1 C-shape", (|| {
        let r = get("example3-cshape")?;
        let l0 = r.rows.first().ok_or("no rows")?.length;
        let w_target = 2.0 * std::f64::consts::PI.powi(2) / l0;
        let w_final = r.rows.last().ok_or("no rows")?.w;
        let w_err = (w_final - w_target).abs() / w_target;
        let drift = worst_drift(&r.rows);
        Ok((
            r.stop == StopReason::Stagnation
                && r.self_crossings.is_empty()
                && w_err <= 0.02
                && drift <= 1e-6,
            format!(
                "{}; self-crossing steps: {}; W err {w_err:.2e} (tol 2e-2), drift {drift:.1e} (tol 1e-6)",
                r.stop,
                r.self_crossings.len()
            ),
        ))
    })());

    // 5. Constraint enforcement on every constrained preset (example1 is the
    //    pure length-flow mode and carries no multiplier): per-step drift
    //    <= 1e-9 relative, Newton iterations <= 25 always and median <= 4.
    gate.record(5, "constraint enforcement", (|| {
        let mut worst = (0.0_f64, "-");
        let mut newton_max = 0usize;
        let mut all_iters: Vec<usize> = Vec::new();
        for name in PRESETS {
            let r = get(name)?;
            if r.model == FlowModel::LengthFlow {
                continue;
            }
            let d = worst_drift(&r.rows);
            if d > worst.0 {
                worst = (d, name);
            }
            for row in r.rows.iter().filter(|r| r.step > 0) {
                newton_max = newton_max.max(row.newton_iters);
                all_iters.push(row.newton_iters);
            }
        }
        all_iters.sort_unstable();
        let median = all_iters[all_iters.len() / 2];
        Ok((
            worst.0 <= 1e-9 && newton_max <= 25 && median <= 4,
            format!(
                "worst drift {:.1e} ({}) (tol 1e-9); Newton max {newton_max} (<=25), median {median} (<=4)",
                worst.0, worst.1
            ),
        ))
    })());

    // 6. FD shape-derivative suite: assembled dA, g_H, g_D match central
    //    differences, rel err <= 1e-3 at n=128 and halving from n=64 (or at
    //    the identity noise floor).
    gate.record(6, "FD derivative suite", (|| {
        let cfg = parse_config_str(
            r#"{
              "version": 1,
              "model": "model3",
              "shapes": [
                { "shape": { "type": "ellipse", "a": 2.0, "b": 1.0 }, "elements": 64 },
                { "shape": { "type": "circle", "radius": 0.8, "center": [4.0, 0.0] }, "elements": 48 }
              ],
              "tau": 1e-4,
              "alpha": 1.0,
              "beta": 1.0,
              "epsilon": 1e-8,
              "max_iters": 1,
              "sharpness": 20.0,
              "barrier": { "spec": { "type": "primitive", "direction": [0.0, 1.0], "offset": 0.3 } }
            }"#,
        )
        .map_err(|e| e.to_string())?;
        let lines = derivative_check(&cfg).map_err(|e| e.to_string())?;
        let mut pass = true;
        let mut parts = Vec::new();
        for want in ["dA", "g_H", "g_D"] {
            let line = lines.iter().find(|l| l.name == want).ok_or("missing row")?;
            pass &= line.passed;
            parts.push(format!("{} {:.1e}->{:.1e}", line.name, line.err_coarse, line.err_fine));
        }
        Ok((pass, format!("n=64->128 rel errs {} (tol 1e-3, halving/floor)", parts.join(", "))))
    })());

    // 7. Obstacle escape: final H_B <= 1e-3 * initial length, W within 2% of
    //    the circle value, J nonincreasing within +1e-8/step.
    gate.record(7, "obstacle escape", (|| {
        let r = get("example5-barriers")?;
        let first = r.rows.first().ok_or("no rows")?;
        let last = r.rows.last().ok_or("no rows")?;
        let hb_rel = last.h_b / first.length;
        let w_target = 2.0 * std::f64::consts::PI.powi(2) / first.length;
        let w_err = (last.w - w_target).abs() / w_target;
        let dj = worst_increase(&r.rows, |r| r.j);
        Ok((
            hb_rel <= 1e-3 && w_err <= 0.02 && dj <= 1e-8,
            format!(
                "H_B/L0 {hb_rel:.2e} (tol 1e-3); W err {w_err:.2e} (tol 2e-2); max dJ {dj:.1e} (tol 1e-8)"
            ),
        ))
    })());

    // 8. Central thinning: golgi-single's central vertical thickness ends
    //    below 0.8x its initial value, with length conserved and W decreased.
    gate.record(8, "central thinning", (|| {
        let r = get("golgi-single")?;
        let t0 = central_min_thickness(&r.initial[0]);
        let t1 = central_min_thickness(&r.final_meshes[0]);
        let drift = worst_drift(&r.rows);
        let w0 = r.rows.first().ok_or("no rows")?.w;
        let w1 = r.rows.last().ok_or("no rows")?.w;
        Ok((
            t1 < 0.8 * t0 && drift <= 1e-9 && w1 < w0,
            format!(
                "thickness {t0:.3} -> {t1:.3} ({:.2}x, need < 0.8x); drift {drift:.1e}; W {w0:.3} -> {w1:.3}",
                t1 / t0
            ),
        ))
    })());

    // 9. Golgi stacks: both stack presets terminate with no inter-vesicle
    //    crossings (enforced per iteration inside the runner, re-checked on
    //    the final state) and the margin sign test holds: top vesicle's
    //    margins higher than its center, bottom vesicle's lower.
    gate.record(9, "golgi stacks", (|| {
        let mut pass = true;
        let mut parts = Vec::new();
        for name in ["golgi-3layer", "golgi-5layer"] {
            let r = get(name)?;
            let meshes = &r.final_meshes;
            let mut crossed = false;
            for a in 0..meshes.len() {
                for b in a + 1..meshes.len() {
                    crossed |= meshes_intersect(&meshes[a], &meshes[b]);
                }
            }
            let top = margin_minus_central_y(&meshes[0]);
            let bot = margin_minus_central_y(&meshes[meshes.len() - 1]);
            let drift = worst_drift(&r.rows);
            let ok = !crossed && top > 0.0 && bot < 0.0 && drift <= 1e-9;
            pass &= ok;
            parts.push(format!(
                "{name}: top {top:+.4} (>0), bottom {bot:+.4} (<0), crossings {crossed}, drift {drift:.1e}"
            ));
        }
        Ok((pass, parts.join("; ")))
    })());

    // 10. dW1/dW2 cross-check on the unit circle: scalar pairings against 5
    //     seeded smooth fields agree within 5% at n=64 and 2% at n=128.
    gate.record(10, "dW1/dW2 agreement", (|| {
        let mut details = Vec::new();
        let mut pass = true;
        for (n, tol) in [(64usize, 0.05), (128, 0.02)] {
            let mesh = build_shape(&ShapeSpec::Circle { radius: 1.0, center: [0.0, 0.0] }, n)
                .map_err(|e| e.to_string())?;
            let h = discrete_curvature(&mesh).map_err(|e| e.to_string())?;
            let map = DofMap::new(&mesh);
            let dw1 = assemble_dW_operator(&mesh) * map.pack(&h);
            let dw2 = assemble_dW2_diagnostic(&mesh, &h);
            let mut worst = 0.0_f64;
            for seed in 0..5u64 {
                let phi = map.pack(&random_smooth_field(mesh.n_nodes(), seed));
                let s1 = dw1.dot(&phi);
                let s2 = dw2.dot(&phi);
                worst = worst.max((s1 - s2).abs() / s1.abs().max(s2.abs()).max(1e-12));
            }
            pass &= worst <= tol;
            details.push(format!("n={n}: {worst:.2e} (tol {tol})"));
        }
        Ok((pass, details.join(", ")))
    })());

    // 11. Determinism: a second run of a preset reproduces the metrics CSV
    //     byte for byte.
    gate.record(11, "byte-identical reruns", (|| {
        let mut pass = true;
        let mut parts = Vec::new();
        for name in ["example1", "example4-barriers"] {
            let first = get(name)?;
            let again = run_preset(name, false)?;
            let same = metrics_csv(&first.rows) == metrics_csv(&again.rows);
            pass &= same;
            parts.push(format!("{name}: {}", if same { "identical" } else { "DIFFERS" }));
        }
        Ok((pass, parts.join("; ")))
    })());

    let failed = gate.lines.iter().filter(|(p, _)| !p).count();
    println!("== summary: {}/11 passed ==", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
