//! Scenario command line: run a configured evolution to termination,
//! validate a configuration file, or run the finite-difference
//! shape-derivative suite.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};

use curveflow::config::{parse_config, ScenarioConfig};
use curveflow::fdcheck::derivative_check;
use curveflow::mesh::CurveMesh;
use curveflow::metrics::{write_frame, write_metrics};
use curveflow::orchestrator::ScenarioRunner;
use curveflow::svg::{scene_viewbox, write_svg, ViewBox};

#[derive(Parser)]
#[command(name = "curveflow", version, about = "Constrained Willmore flow of closed planar curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario to termination, writing metrics and frames.
    Run {
        /// Scenario configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Write a coordinate frame every N steps (overrides the config).
        #[arg(long, value_name = "N")]
        frames_every: Option<usize>,
        /// Additionally render each written frame as SVG.
        #[arg(long)]
        svg: bool,
    },
    /// Parse and validate a configuration, printing a summary.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check assembled shape derivatives against central finite differences.
    Derivcheck {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { config, out, frames_every, svg } => run(&config, &out, frames_every, svg),
        Command::Check { config } => check(&config),
        Command::Derivcheck { config } => derivcheck(&config),
    }
}

fn load(path: &Path) -> anyhow::Result<ScenarioConfig> {
    parse_config(path).with_context(|| format!("reading config {}", path.display()))
}

fn summarize(cfg: &ScenarioConfig) -> String {
    let shapes: Vec<String> =
        cfg.shapes.iter().map(|s| format!("{} el", s.elements)).collect();
    format!(
        "model {:?}, {} vesicle(s) [{}], tau {}, alpha {}, beta {}, up to {} iterations (epsilon {})",
        cfg.model,
        cfg.shapes.len(),
        shapes.join(", "),
        cfg.tau,
        cfg.alpha,
        cfg.beta,
        cfg.max_iters,
        cfg.epsilon,
    )
}

fn check(path: &Path) -> anyhow::Result<()> {
    let cfg = load(path)?;
    // Also build the meshes so geometric validation runs.
    cfg.to_runner()?;
    println!("OK: {}", summarize(&cfg));
    Ok(())
}

fn frame_paths(runner: &ScenarioRunner) -> Vec<&CurveMesh> {
    runner.state.vesicles.iter().map(|v| &v.mesh).collect()
}

fn write_outputs(
    runner: &ScenarioRunner,
    out: &Path,
    svg: bool,
    vb: &ViewBox,
) -> anyhow::Result<()> {
    let meshes = frame_paths(runner);
    let step = runner.state.completed_iterations;
    write_frame(out, step, runner.state.t, &meshes, runner.state.barrier.as_ref())?;
    if svg {
        write_svg(out, step, &meshes, runner.state.barrier.as_ref(), vb)?;
    }
    Ok(())
}

fn run(config: &Path, out: &Path, frames_every: Option<usize>, svg_flag: bool) -> anyhow::Result<()> {
    let cfg = load(config)?;
    let stride = frames_every.unwrap_or(cfg.output.frame_stride).max(1);
    let svg = svg_flag || cfg.output.svg;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;

    let mut runner = cfg.to_runner()?;
    let vb = scene_viewbox(&frame_paths(&runner), runner.state.barrier.as_ref(), 0.15);

    write_outputs(&runner, out, svg, &vb)?;
    let mut last_written = 0usize;
    loop {
        match runner.step_once() {
            Ok(true) => {
                let step = runner.state.completed_iterations;
                if step % stride == 0 {
                    write_outputs(&runner, out, svg, &vb)?;
                    last_written = step;
                }
            }
            Ok(false) => break,
            Err(err) => {
                // Keep what we have: a partial metrics file makes failed
                // runs diagnosable.
                write_metrics(&out.join("metrics.csv"), runner.rows())?;
                return Err(err.into());
            }
        }
    }
    let final_step = runner.state.completed_iterations;
    if final_step != last_written {
        write_outputs(&runner, out, svg, &vb)?;
    }
    write_metrics(&out.join("metrics.csv"), runner.rows())?;

    let stop = runner.stop_reason().expect("run() only returns on stop");
    println!(
        "done: {} after {} iterations (t = {})",
        stop,
        final_step,
        curveflow::metrics::fmt_g17(runner.state.t)
    );
    for v in 0..runner.state.vesicles.len() {
        if let Some(row) = runner.rows().iter().rev().find(|r| r.vesicle == v) {
            println!(
                "  vesicle {v}: length {:.6}, W {:.6}, J {:.6}",
                row.length, row.w, row.j
            );
        }
    }
    Ok(())
}

fn derivcheck(path: &Path) -> anyhow::Result<()> {
    let cfg = load(path)?;
    let lines = derivative_check(&cfg)?;
    println!("{:<6} {:>6} {:>6} {:>12} {:>12}  result", "check", "n", "2n", "err(n)", "err(2n)");
    let mut all_ok = true;
    for l in &lines {
        println!(
            "{:<6} {:>6} {:>6} {:>12.4e} {:>12.4e}  {}",
            l.name,
            l.n_coarse,
            l.n_fine,
            l.err_coarse,
            l.err_fine,
            if l.passed { "pass" } else { "FAIL" }
        );
        all_ok &= l.passed;
    }
    if !all_ok {
        anyhow::bail!("derivative check failed");
    }
    Ok(())
}
