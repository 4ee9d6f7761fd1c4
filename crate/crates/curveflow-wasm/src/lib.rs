//! Browser bindings for the curveflow engine: drive a configured scenario
//! step by step, render the current state as SVG, sample the barrier
//! indicator as a heatmap, and preview shape/config JSON — enough for the
//! static demo page in `www/` to run every shipped preset interactively.
//!
//! The exported API passes JSON strings at the boundary; the page never
//! needs a framework or a bundler beyond `wasm-pack build --target web`.

use wasm_bindgen::prelude::*;

use curveflow::barrier::{indicator_eval, BarrierSpec};
use curveflow::config::parse_config_str;
use curveflow::mesh::CurveMesh;
use curveflow::orchestrator::{ScenarioRunner, StopReason};
use curveflow::shapes::{build_shape, ShapeSpec};
use curveflow::svg::{render_svg, scene_viewbox, ViewBox};

/// Name/config pairs of every preset shipped with the repository, embedded
/// so the demo page works from a static file server.
const PRESETS: [(&str, &str); 10] = [
    ("example1", include_str!("../../../presets/example1.json")),
    ("example2-ellipse", include_str!("../../../presets/example2-ellipse.json")),
    ("example3-cshape", include_str!("../../../presets/example3-cshape.json")),
    ("example4-barriers", include_str!("../../../presets/example4-barriers.json")),
    ("example5-barriers", include_str!("../../../presets/example5-barriers.json")),
    ("example6-barriers", include_str!("../../../presets/example6-barriers.json")),
    ("golgi-single", include_str!("../../../presets/golgi-single.json")),
    ("golgi-moving-barrier", include_str!("../../../presets/golgi-moving-barrier.json")),
    ("golgi-3layer", include_str!("../../../presets/golgi-3layer.json")),
    ("golgi-5layer", include_str!("../../../presets/golgi-5layer.json")),
];

/// JSON array of the embedded preset names.
#[wasm_bindgen]
pub fn preset_names() -> String {
    let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
    serde_json::to_string(&names).expect("static names serialize")
}

/// The embedded config text for `name`, or the empty string.
#[wasm_bindgen]
pub fn preset_config(name: &str) -> String {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| (*text).to_string())
        .unwrap_or_default()
}

fn validate_config_impl(text: &str) -> Result<String, String> {
    let cfg = parse_config_str(text).map_err(|e| e.to_string())?;
    cfg.to_runner().map_err(|e| e.to_string())?;
    let elements: Vec<String> =
        cfg.shapes.iter().map(|s| s.elements.to_string()).collect();
    Ok(format!(
        "OK: {:?}, {} vesicle(s) [{} elements], tau {:e}, up to {} iterations",
        cfg.model,
        cfg.shapes.len(),
        elements.join(", "),
        cfg.tau,
        cfg.max_iters,
    ))
}

/// Parses and fully validates a config, returning a one-line summary
/// starting with `OK:` or an error message starting with `error:`.
#[wasm_bindgen]
pub fn validate_config(text: &str) -> String {
    match validate_config_impl(text) {
        Ok(s) => s,
        Err(e) => format!("error: {e}"),
    }
}

fn shape_preview_impl(shape_json: &str, elements: usize) -> Result<String, String> {
    let spec: ShapeSpec = serde_json::from_str(shape_json).map_err(|e| e.to_string())?;
    let mesh = build_shape(&spec, elements).map_err(|e| e.to_string())?;
    let vb = scene_viewbox(&[&mesh], None, 0.15);
    Ok(render_svg(&[&mesh], None, &vb))
}

/// Builds a shape from its JSON spec and renders it as a standalone SVG.
#[wasm_bindgen]
pub fn shape_preview_svg(shape_json: &str, elements: usize) -> Result<String, JsError> {
    shape_preview_impl(shape_json, elements).map_err(|e| JsError::new(&e))
}

struct RunnerCore {
    runner: ScenarioRunner,
    vb: ViewBox,
}

impl RunnerCore {
    fn new(config_json: &str) -> Result<Self, String> {
        let cfg = parse_config_str(config_json).map_err(|e| e.to_string())?;
        let runner = cfg.to_runner().map_err(|e| e.to_string())?;
        let meshes: Vec<&CurveMesh> =
            runner.state.vesicles.iter().map(|v| &v.mesh).collect();
        // Fixed window over the whole run so the animation does not jitter;
        // generous margin because shapes deform beyond their initial box.
        let vb = scene_viewbox(&meshes, runner.state.barrier.as_ref(), 0.35);
        Ok(Self { runner, vb })
    }

    fn step(&mut self, n: usize) -> Result<bool, String> {
        for _ in 0..n.max(1) {
            match self.runner.step_once() {
                Ok(true) => {}
                Ok(false) => return Ok(false),
                Err(e) => return Err(e.to_string()),
            }
        }
        Ok(true)
    }

    fn frame_svg(&self) -> String {
        let meshes: Vec<&CurveMesh> =
            self.runner.state.vesicles.iter().map(|v| &v.mesh).collect();
        render_svg(&meshes, self.runner.state.barrier.as_ref(), &self.vb)
    }

    /// Latest metrics row per vesicle as a JSON array.
    fn metrics_json(&self) -> String {
        let rows = self.runner.rows();
        let m = self.runner.state.vesicles.len();
        let latest = &rows[rows.len().saturating_sub(m)..];
        let objs: Vec<serde_json::Value> = latest
            .iter()
            .map(|r| {
                serde_json::json!({
                    "step": r.step,
                    "t": r.t,
                    "vesicle": r.vesicle,
                    "length": r.length,
                    "W": r.w,
                    "H_B": r.h_b,
                    "D": r.d,
                    "J": r.j,
                    "lambda": r.lambda,
                    "newton_iters": r.newton_iters,
                })
            })
            .collect();
        serde_json::to_string(&objs).expect("metrics serialize")
    }

    /// Barrier indicator sampled on an `nx` x `ny` grid over the view
    /// window, scaled to 0..=255, row-major with the top row first (matching
    /// canvas ImageData orientation). Empty when the scenario has no barrier.
    fn heatmap(&self, nx: usize, ny: usize) -> Vec<u8> {
        let Some(barrier) = self.runner.state.barrier.as_ref() else {
            return Vec::new();
        };
        sample_indicator(barrier, &self.vb, nx, ny)
    }
}

fn sample_indicator(barrier: &BarrierSpec, vb: &ViewBox, nx: usize, ny: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        // Canvas rows run top-down; the view window's min_y is stored in SVG
        // (y-flipped) space, so world y at the top row is -vb.min_y.
        let fy = (row as f64 + 0.5) / ny as f64;
        let y = -(vb.min_y + vb.height * fy);
        for col in 0..nx {
            let fx = (col as f64 + 0.5) / nx as f64;
            let x = vb.min_x + vb.width * fx;
            let v = indicator_eval(barrier, nalgebra::Point2::new(x, y)).value;
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

/// An interactive scenario: construct from config JSON, then alternate
/// `step` and `frame_svg` from an animation loop.
#[wasm_bindgen]
pub struct WasmRunner {
    core: RunnerCore,
}

#[wasm_bindgen]
impl WasmRunner {
    #[wasm_bindgen(constructor)]
    pub fn new(config_json: &str) -> Result<WasmRunner, JsError> {
        RunnerCore::new(config_json)
            .map(|core| WasmRunner { core })
            .map_err(|e| JsError::new(&e))
    }

    /// Advances up to `n` iterations; `false` once the run has terminated.
    pub fn step(&mut self, n: usize) -> Result<bool, JsError> {
        self.core.step(n).map_err(|e| JsError::new(&e))
    }

    pub fn frame_svg(&self) -> String {
        self.core.frame_svg()
    }

    pub fn metrics_json(&self) -> String {
        self.core.metrics_json()
    }

    pub fn heatmap(&self, nx: usize, ny: usize) -> Vec<u8> {
        self.core.heatmap(nx, ny)
    }

    pub fn completed_iterations(&self) -> usize {
        self.core.runner.state.completed_iterations
    }

    pub fn time(&self) -> f64 {
        self.core.runner.state.t
    }

    /// `"max_iterations"`, `"stagnation"`, or empty while still running.
    pub fn stop_reason(&self) -> String {
        match self.core.runner.stop_reason() {
            Some(StopReason::MaxIterations) => "max_iterations".into(),
            Some(StopReason::Stagnation) => "stagnation".into(),
            None => String::new(),
        }
    }

    /// View window as JSON `[min_x, min_y, width, height]` so overlays can
    /// align with the SVG coordinate system.
    pub fn viewbox_json(&self) -> String {
        let vb = &self.core.vb;
        format!("[{},{},{},{}]", vb.min_x, vb.min_y, vb.width, vb.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_embedded_and_valid() {
        let names: Vec<String> = serde_json::from_str(&preset_names()).unwrap();
        assert_eq!(names.len(), 10);
        for name in names {
            let text = preset_config(&name);
            assert!(!text.is_empty(), "{name} missing");
            let summary = validate_config(&text);
            assert!(summary.starts_with("OK:"), "{name}: {summary}");
        }
        assert_eq!(preset_config("nope"), "");
    }

    #[test]
    fn runner_steps_and_renders() {
        let mut core = RunnerCore::new(&preset_config("example4-barriers")).unwrap();
        assert!(core.step(3).unwrap());
        assert_eq!(core.runner.state.completed_iterations, 3);
        let svg = core.frame_svg();
        assert!(svg.starts_with("<svg") && svg.contains("path"));
        let rows: Vec<serde_json::Value> = serde_json::from_str(&core.metrics_json()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0]["step"], 3);
        let px = core.heatmap(32, 16);
        assert_eq!(px.len(), 32 * 16);
        // The ellipse sits between two slabs: interior samples empty, the
        // top-left corner lies inside the upper slab region.
        assert_eq!(px[8 * 32 + 16], 0);
        assert_eq!(px[0], 255);
    }

    #[test]
    fn heatmap_is_empty_without_a_barrier() {
        let core = RunnerCore::new(&preset_config("example2-ellipse")).unwrap();
        assert!(core.heatmap(8, 8).is_empty());
    }

    #[test]
    fn heatmap_rows_follow_the_flipped_viewbox() {
        // Wall at world y = 2 in a window covering world y in [0, 3]; the
        // view box stores SVG (y-flipped) coordinates, so its min_y is -3.
        let barrier =
            BarrierSpec::Primitive { direction: [0.0, 1.0], offset: 2.0, sharpness: 25.0 };
        let vb = ViewBox { min_x: 0.0, min_y: -3.0, width: 3.0, height: 3.0 };
        let px = sample_indicator(&barrier, &vb, 1, 3);
        // Rows sample world y = 2.5, 1.5, 0.5: only the top row is walled.
        assert_eq!(px, vec![255, 0, 0]);
    }

    #[test]
    fn shape_preview_and_validation_report_errors() {
        let svg =
            shape_preview_impl(r#"{ "type": "circle", "radius": 1.0 }"#, 16).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(shape_preview_impl(r#"{ "type": "circle", "radius": -1.0 }"#, 16).is_err());
        assert!(validate_config("{").starts_with("error:"));
    }
}
