//! Versioned JSON scenario configuration. Parsing is fail-closed: unknown
//! keys anywhere in the document are rejected, the version is checked before
//! anything else, and cross-field constraints are validated before a runner
//! is built.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::barrier::BarrierSpec;
use crate::error::CurveflowError;
use crate::orchestrator::{MovingBarrierRule, ScenarioRunner};
use crate::shapes::{build_shape, ShapeSpec};
use crate::stepper::{FlowModel, FlowParameters, VesicleState};
use crate::Result;

pub const CONFIG_VERSION: u64 = 1;

/// One initial vesicle: a shape recipe plus its element count.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    pub shape: ShapeSpec,
    pub elements: usize,
}

/// Barrier geometry and, optionally, the rule that moves it every step.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierConfig {
    pub spec: BarrierSpec,
    #[serde(default)]
    pub moving_rule: Option<MovingBarrierRule>,
}

/// Where and how often to write outputs.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub directory: Option<String>,
    #[serde(default = "default_frame_stride")]
    pub frame_stride: usize,
    #[serde(default)]
    pub svg: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_frame_stride() -> usize {
    10
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: None, frame_stride: default_frame_stride(), svg: false, seed: 0 }
    }
}

/// A complete scenario description.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u64,
    pub model: FlowModel,
    pub shapes: Vec<ShapeConfig>,
    pub tau: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    /// Default logistic sharpness inherited by barrier primitives that do
    /// not set their own.
    #[serde(default)]
    pub sharpness: Option<f64>,
    #[serde(default)]
    pub barrier: Option<BarrierConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_newton_tol() -> f64 {
    1e-9
}

fn default_newton_max_iter() -> usize {
    25
}

/// Copies `sharpness` into every `"type": "primitive"` object below `v`
/// that does not already set one.
fn inherit_sharpness(v: &mut Value, sharpness: f64) {
    match v {
        Value::Object(map) => {
            if map.get("type").and_then(Value::as_str) == Some("primitive")
                && !map.contains_key("sharpness")
            {
                map.insert("sharpness".into(), sharpness.into());
            }
            for child in map.values_mut() {
                inherit_sharpness(child, sharpness);
            }
        }
        Value::Array(items) => {
            for child in items {
                inherit_sharpness(child, sharpness);
            }
        }
        _ => {}
    }
}

/// Parses and validates a scenario configuration from JSON text.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| CurveflowError::Parse(e.to_string()))?;
    let root = value
        .as_object()
        .ok_or_else(|| CurveflowError::Parse("top level must be a JSON object".into()))?;
    match root.get("version") {
        None => return Err(CurveflowError::Parse("missing required field `version`".into())),
        Some(v) if v.as_u64() == Some(CONFIG_VERSION) => {}
        Some(v) => {
            return Err(CurveflowError::Parse(format!(
                "unsupported config version {v}; this build reads version {CONFIG_VERSION}"
            )))
        }
    }
    if let Some(sharpness) = value.get("sharpness").and_then(Value::as_f64) {
        if let Some(barrier) = value.get_mut("barrier") {
            if let Some(spec) = barrier.get_mut("spec") {
                inherit_sharpness(spec, sharpness);
            }
        }
    }
    let mut cfg: ScenarioConfig =
        serde_json::from_value(value).map_err(|e| CurveflowError::Parse(e.to_string()))?;
    if let Some(b) = cfg.barrier.as_mut() {
        b.spec = b.spec.validated()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

impl ScenarioConfig {
    /// Cross-field consistency checks; every violation is an error, never a
    /// silent fallback.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CurveflowError::Validation(msg));
        if self.shapes.is_empty() {
            return fail("at least one shape is required".into());
        }
        for (i, s) in self.shapes.iter().enumerate() {
            if s.elements < 3 {
                return fail(format!("shape {i}: at least 3 elements required, got {}", s.elements));
            }
        }
        if !(self.tau > 0.0) {
            return fail(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.epsilon > 0.0) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.newton_tol > 0.0) {
            return fail(format!("newton_tol must be positive, got {}", self.newton_tol));
        }
        if self.newton_max_iter == 0 {
            return fail("newton_max_iter must be at least 1".into());
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return fail(format!("alpha and beta must be ≥ 0, got {} and {}", self.alpha, self.beta));
        }
        if let Some(k) = self.sharpness {
            if !(k > 0.0) {
                return fail(format!("sharpness must be positive, got {k}"));
            }
        }
        if self.output.frame_stride == 0 {
            return fail("output.frame_stride must be at least 1".into());
        }
        match self.model {
            FlowModel::LengthFlow | FlowModel::Model1 => {
                if self.alpha != 0.0 || self.beta != 0.0 {
                    return fail(format!(
                        "model without penalty terms requires alpha = beta = 0, got {} and {}",
                        self.alpha, self.beta
                    ));
                }
                if self.barrier.is_some() {
                    return fail("this model does not use a barrier; remove it".into());
                }
            }
            FlowModel::Model2 => {
                if !(self.alpha > 0.0) {
                    return fail("model2 requires alpha > 0".into());
                }
                if self.beta != 0.0 {
                    return fail("model2 requires beta = 0".into());
                }
                if self.barrier.is_none() {
                    return fail("model2 requires a barrier".into());
                }
            }
            FlowModel::Model3 => {
                if self.shapes.len() < 2 {
                    return fail("model3 requires at least two shapes".into());
                }
                if !(self.beta > 0.0) {
                    return fail("model3 requires beta > 0".into());
                }
                if self.alpha > 0.0 && self.barrier.is_none() {
                    return fail("alpha > 0 requires a barrier".into());
                }
                if self.alpha == 0.0 && self.barrier.is_some() {
                    return fail("a barrier requires alpha > 0".into());
                }
            }
        }
        if let Some(b) = &self.barrier {
            if let Some(rule) = &b.moving_rule {
                let norm = (rule.axis[0].powi(2) + rule.axis[1].powi(2)).sqrt();
                if norm < 1e-12 {
                    return fail("moving_rule.axis must be non-zero".into());
                }
                if !(rule.gap > 0.0) {
                    return fail(format!("moving_rule.gap must be positive, got {}", rule.gap));
                }
                if !(rule.window_fraction > 0.0 && rule.window_fraction <= 1.0) {
                    return fail(format!(
                        "moving_rule.window_fraction must lie in (0, 1], got {}",
                        rule.window_fraction
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn flow_parameters(&self) -> FlowParameters {
        FlowParameters {
            tau: self.tau,
            alpha: self.alpha,
            beta: self.beta,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
        }
    }

    /// Builds the initial meshes and wraps everything into a runnable
    /// scenario.
    pub fn to_runner(&self) -> Result<ScenarioRunner> {
        let mut vesicles = Vec::with_capacity(self.shapes.len());
        for s in &self.shapes {
            let mesh = build_shape(&s.shape, s.elements)?;
            let target_length = mesh.length();
            vesicles.push(VesicleState { mesh, target_length });
        }
        ScenarioRunner::new(
            vesicles,
            self.barrier.as_ref().map(|b| b.spec.clone()),
            self.barrier.as_ref().and_then(|b| b.moving_rule),
            self.model,
            self.flow_parameters(),
            self.epsilon,
            self.max_iters,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(model: &str) -> String {
        format!(
            r#"{{
              "version": 1,
              "model": "{model}",
              "shapes": [{{ "shape": {{ "type": "circle", "radius": 1.0 }}, "elements": 16 }}],
              "tau": 1e-4,
              "epsilon": 1e-8,
              "max_iters": 10
            }}"#
        )
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config_str(&minimal("model1")).unwrap();
        assert_eq!(cfg.version, 1);
        assert_eq!(cfg.model, FlowModel::Model1);
        assert_eq!(cfg.alpha, 0.0);
        assert_eq!(cfg.beta, 0.0);
        assert_eq!(cfg.newton_tol, 1e-9);
        assert_eq!(cfg.newton_max_iter, 25);
        assert_eq!(cfg.output.frame_stride, 10);
        assert!(!cfg.output.svg);
        assert_eq!(cfg.output.seed, 0);
        assert!(cfg.barrier.is_none());
        assert!(cfg.to_runner().is_ok());
    }

    #[test]
    fn unknown_top_level_key_is_rejected_by_name() {
        let bad = minimal("model1").replace("\"tau\"", "\"volune\": 3, \"tau\"");
        let err = parse_config_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("volune"), "error must name the bad key: {msg}");
    }

    #[test]
    fn unknown_nested_key_is_rejected() {
        let bad = minimal("model1")
            .replace("\"radius\": 1.0", "\"radius\": 1.0, \"colour\": \"red\"");
        let err = parse_config_str(&bad).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn version_is_checked_first() {
        let bad = minimal("model1").replace("\"version\": 1", "\"version\": 2");
        let err = parse_config_str(&bad).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
        let missing = minimal("model1").replace("\"version\": 1,", "");
        let err = parse_config_str(&missing).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn sharpness_is_inherited_only_where_unset() {
        let text = r#"{
          "version": 1,
          "model": "model2",
          "shapes": [{ "shape": { "type": "circle", "radius": 1.0 }, "elements": 16 }],
          "tau": 1e-4,
          "alpha": 2.0,
          "epsilon": 1e-8,
          "max_iters": 10,
          "sharpness": 40.0,
          "barrier": {
            "spec": {
              "type": "sum",
              "terms": [
                { "type": "primitive", "direction": [0, 1], "offset": 1.5 },
                { "type": "primitive", "direction": [0, -1], "offset": 1.5, "sharpness": 10.0 }
              ]
            }
          }
        }"#;
        let cfg = parse_config_str(text).unwrap();
        match &cfg.barrier.as_ref().unwrap().spec {
            BarrierSpec::Sum { terms } => {
                match &terms[0] {
                    BarrierSpec::Primitive { sharpness, .. } => assert_eq!(*sharpness, 40.0),
                    other => panic!("unexpected {other:?}"),
                }
                match &terms[1] {
                    BarrierSpec::Primitive { sharpness, .. } => assert_eq!(*sharpness, 10.0),
                    other => panic!("unexpected {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn default_sharpness_applies_when_no_override() {
        let text = r#"{
          "version": 1,
          "model": "model2",
          "shapes": [{ "shape": { "type": "circle", "radius": 1.0 }, "elements": 16 }],
          "tau": 1e-4,
          "alpha": 2.0,
          "epsilon": 1e-8,
          "max_iters": 10,
          "barrier": {
            "spec": { "type": "primitive", "direction": [0, 1], "offset": 1.5 }
          }
        }"#;
        let cfg = parse_config_str(text).unwrap();
        match &cfg.barrier.as_ref().unwrap().spec {
            BarrierSpec::Primitive { sharpness, .. } => {
                assert_eq!(*sharpness, crate::barrier::DEFAULT_SHARPNESS)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn model_constraints_are_enforced() {
        // model3 with a single shape
        let err = parse_config_str(
            &minimal("model3").replace("\"max_iters\": 10", "\"max_iters\": 10, \"beta\": 1.0"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("two shapes"), "{err}");

        // model2 without a barrier
        let err = parse_config_str(
            &minimal("model2").replace("\"max_iters\": 10", "\"max_iters\": 10, \"alpha\": 1.0"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("barrier"), "{err}");

        // length flow with a penalty weight
        let err = parse_config_str(
            &minimal("length_flow")
                .replace("\"max_iters\": 10", "\"max_iters\": 10, \"alpha\": 1.0"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
    }

    #[test]
    fn positivity_is_enforced() {
        let err =
            parse_config_str(&minimal("model1").replace("\"tau\": 1e-4", "\"tau\": 0.0"))
                .unwrap_err();
        assert!(err.to_string().contains("tau"), "{err}");
        let err = parse_config_str(
            &minimal("model1").replace("\"epsilon\": 1e-8", "\"epsilon\": -1.0"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("epsilon"), "{err}");
    }

    #[test]
    fn moving_rule_is_validated() {
        let text = r#"{
          "version": 1,
          "model": "model2",
          "shapes": [{ "shape": { "type": "circle", "radius": 1.0 }, "elements": 16 }],
          "tau": 1e-4,
          "alpha": 2.0,
          "epsilon": 1e-8,
          "max_iters": 10,
          "barrier": {
            "spec": { "type": "primitive", "direction": [0, 1], "offset": 1.5 },
            "moving_rule": { "axis": [0, 1], "gap": GAP, "window_fraction": 0.5 }
          }
        }"#;
        assert!(parse_config_str(&text.replace("GAP", "0.1")).is_ok());
        let err = parse_config_str(&text.replace("GAP", "0.0")).unwrap_err();
        assert!(err.to_string().contains("gap"), "{err}");
        let bad_wf = text.replace("GAP", "0.1").replace("0.5", "1.5");
        let err = parse_config_str(&bad_wf).unwrap_err();
        assert!(err.to_string().contains("window_fraction"), "{err}");
    }
}
