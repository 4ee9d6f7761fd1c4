//! Multi-vesicle scenario loop: cyclic Gauss–Seidel sweeps over the
//! vesicles, moving-barrier updates, stopping tests and metrics recording.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::barrier::BarrierSpec;
use crate::distance::distance_field;
use crate::error::CurveflowError;
use crate::functionals::{barrier_functional, distance_functional, willmore_energy};
use crate::mesh::{segments_intersect, CurveMesh};
use crate::metrics::MetricsRow;
use crate::stepper::{advance_vesicle, FlowModel, FlowParameters, StepReport, VesicleState};
use crate::Result;

/// Moves every barrier plane aligned with ±`axis` each step so that it sits
/// `gap` away from the extreme mesh point, where the extremum is taken over
/// nodes inside the central `window_fraction` of the lateral extent of all
/// vesicles (lateral = perpendicular to `axis`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovingBarrierRule {
    pub axis: [f64; 2],
    pub gap: f64,
    #[serde(default = "default_window_fraction")]
    pub window_fraction: f64,
}

fn default_window_fraction() -> f64 {
    0.5
}

/// Why a scenario run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The configured iteration budget was exhausted.
    MaxIterations,
    /// For every vesicle the last three energy changes were below ε.
    Stagnation,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopReason::MaxIterations => write!(f, "max_iterations"),
            StopReason::Stagnation => write!(f, "stagnation"),
        }
    }
}

/// Processing order for iteration `n` (0-based) over `m` vesicles: the
/// natural order rotated by `n mod m`.
pub fn schedule_order(n: usize, m: usize) -> Vec<usize> {
    (0..m).map(|k| (n + k) % m).collect()
}

/// Decides, before running iteration `next_iteration` (1-based), whether the
/// loop should stop instead. `j_history[v]` holds vesicle v's energy at steps
/// 0..=completed. Stagnation requires, for every vesicle, the three most
/// recent consecutive changes to all be below `epsilon`.
pub fn stopping_check(
    j_history: &[Vec<f64>],
    epsilon: f64,
    next_iteration: usize,
    max_iterations: usize,
) -> Option<StopReason> {
    if next_iteration > max_iterations {
        return Some(StopReason::MaxIterations);
    }
    let stagnant = !j_history.is_empty()
        && j_history.iter().all(|h| {
            h.len() >= 4
                && h.windows(2).rev().take(3).all(|w| (w[1] - w[0]).abs() < epsilon)
        });
    if stagnant {
        return Some(StopReason::Stagnation);
    }
    None
}

/// Re-positions the barrier planes parallel to `rule.axis`: a primitive with
/// direction ≈ +axis gets offset `s_max + gap`, one with direction ≈ −axis
/// gets `gap − s_min`, where s ranges over axis-coordinates of the window
/// nodes. Primitives in other directions are left alone.
pub fn update_moving_barrier(
    barrier: &mut BarrierSpec,
    rule: &MovingBarrierRule,
    meshes: &[&CurveMesh],
) -> Result<()> {
    let axis = Vector2::new(rule.axis[0], rule.axis[1]);
    if axis.norm() < 1e-12 {
        return Err(CurveflowError::Validation("moving barrier axis is zero".into()));
    }
    let axis = axis.normalize();
    let perp = Vector2::new(-axis.y, axis.x);

    let mut lat_min = f64::INFINITY;
    let mut lat_max = f64::NEG_INFINITY;
    for mesh in meshes {
        for p in mesh.nodes() {
            let l = perp.dot(&p.coords);
            lat_min = lat_min.min(l);
            lat_max = lat_max.max(l);
        }
    }
    let center = 0.5 * (lat_min + lat_max);
    let half = 0.5 * rule.window_fraction * (lat_max - lat_min);

    let mut s_min = f64::INFINITY;
    let mut s_max = f64::NEG_INFINITY;
    let mut hit = false;
    for mesh in meshes {
        for p in mesh.nodes() {
            let l = perp.dot(&p.coords);
            if (l - center).abs() <= half + 1e-12 {
                let s = axis.dot(&p.coords);
                s_min = s_min.min(s);
                s_max = s_max.max(s);
                hit = true;
            }
        }
    }
    if !hit {
        return Err(CurveflowError::EmptyBarrierWindow);
    }

    barrier.for_each_primitive_mut(&mut |direction, offset, _| {
        let d = Vector2::new(direction[0], direction[1]);
        let along = d.normalize().dot(&axis);
        if along > 0.999 {
            *offset = s_max + rule.gap;
        } else if along < -0.999 {
            *offset = rule.gap - s_min;
        }
    });
    Ok(())
}

/// True when any chord of `a`'s node polygon crosses any chord of `b`'s.
pub fn meshes_intersect(a: &CurveMesh, b: &CurveMesh) -> bool {
    let pa = a.nodes();
    let pb = b.nodes();
    for i in 0..pa.len() {
        let a0 = pa[i];
        let a1 = pa[(i + 1) % pa.len()];
        for j in 0..pb.len() {
            let b0 = pb[j];
            let b1 = pb[(j + 1) % pb.len()];
            if segments_intersect(a0, a1, b0, b1) {
                return true;
            }
        }
    }
    false
}

/// True when any two non-adjacent chords of `mesh`'s node polygon cross.
/// Adjacent chords share a node and always "touch"; they are skipped.
pub fn mesh_self_intersects(mesh: &CurveMesh) -> bool {
    let p = mesh.nodes();
    let n = p.len();
    for i in 0..n {
        let a0 = p[i];
        let a1 = p[(i + 1) % n];
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(a0, a1, p[j], p[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

/// Full scenario state at one instant.
#[derive(Debug, Clone)]
pub struct ScenarioState {
    pub vesicles: Vec<VesicleState>,
    pub barrier: Option<BarrierSpec>,
    pub t: f64,
    pub completed_iterations: usize,
}

/// Incremental driver of a scenario: construct once, then call
/// [`ScenarioRunner::step_once`] until it reports a stop (or use
/// [`ScenarioRunner::run`]). Metrics rows accumulate internally, one row per
/// vesicle per recorded step, including step 0.
pub struct ScenarioRunner {
    pub state: ScenarioState,
    model: FlowModel,
    params: FlowParameters,
    moving_rule: Option<MovingBarrierRule>,
    epsilon: f64,
    max_iterations: usize,
    j_history: Vec<Vec<f64>>,
    rows: Vec<MetricsRow>,
    stop: Option<StopReason>,
}

impl ScenarioRunner {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        vesicles: Vec<VesicleState>,
        barrier: Option<BarrierSpec>,
        moving_rule: Option<MovingBarrierRule>,
        model: FlowModel,
        params: FlowParameters,
        epsilon: f64,
        max_iterations: usize,
    ) -> Result<Self> {
        let mut state =
            ScenarioState { vesicles, barrier, t: 0.0, completed_iterations: 0 };
        check_pairwise(&state.vesicles)?;
        if let (Some(barrier), Some(rule)) = (state.barrier.as_mut(), moving_rule.as_ref()) {
            let meshes: Vec<&CurveMesh> = state.vesicles.iter().map(|v| &v.mesh).collect();
            update_moving_barrier(barrier, rule, &meshes)?;
        }
        let mut runner = ScenarioRunner {
            state,
            model,
            params,
            moving_rule,
            epsilon,
            max_iterations,
            j_history: Vec::new(),
            rows: Vec::new(),
            stop: None,
        };
        let zeros = vec![(0.0, 0usize); runner.state.vesicles.len()];
        let js = runner.record_rows(&zeros)?;
        runner.j_history = js.into_iter().map(|j| vec![j]).collect();
        Ok(runner)
    }

    pub fn rows(&self) -> &[MetricsRow] {
        &self.rows
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    pub fn model(&self) -> FlowModel {
        self.model
    }

    /// Runs one iteration. Returns `Ok(true)` if a step was taken and
    /// `Ok(false)` if the stopping test fired first (reason retrievable via
    /// [`ScenarioRunner::stop_reason`]).
    pub fn step_once(&mut self) -> Result<bool> {
        if self.stop.is_some() {
            return Ok(false);
        }
        let next = self.state.completed_iterations + 1;
        if let Some(reason) =
            stopping_check(&self.j_history, self.epsilon, next, self.max_iterations)
        {
            self.stop = Some(reason);
            return Ok(false);
        }

        let m = self.state.vesicles.len();
        let mut reports: Vec<Option<StepReport>> = vec![None; m];
        for i in schedule_order(self.state.completed_iterations, m) {
            let others: Vec<&CurveMesh> = self
                .state
                .vesicles
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, v)| &v.mesh)
                .collect();
            let (new_state, report) = advance_vesicle(
                &self.state.vesicles[i],
                self.model,
                &self.params,
                self.state.barrier.as_ref(),
                &others,
            )
            .map_err(|e| CurveflowError::Scenario {
                vesicle: i,
                iteration: next,
                source: Box::new(e),
            })?;
            self.state.vesicles[i] = new_state;
            reports[i] = Some(report);
        }

        check_pairwise(&self.state.vesicles).map_err(|e| CurveflowError::Scenario {
            vesicle: 0,
            iteration: next,
            source: Box::new(e),
        })?;

        if let (Some(barrier), Some(rule)) =
            (self.state.barrier.as_mut(), self.moving_rule.as_ref())
        {
            let meshes: Vec<&CurveMesh> =
                self.state.vesicles.iter().map(|v| &v.mesh).collect();
            update_moving_barrier(barrier, rule, &meshes)?;
        }

        self.state.t += self.params.tau;
        self.state.completed_iterations = next;

        let lam_iters: Vec<(f64, usize)> = reports
            .iter()
            .map(|r| {
                let r = r.as_ref().expect("all vesicles stepped");
                (r.lambda, r.newton_iters)
            })
            .collect();
        let js = self.record_rows(&lam_iters)?;
        for (h, j) in self.j_history.iter_mut().zip(js) {
            h.push(j);
        }
        Ok(true)
    }

    /// Runs until a stopping criterion fires and returns the reason.
    pub fn run(&mut self) -> Result<StopReason> {
        while self.step_once()? {}
        Ok(self.stop.expect("loop exits only on stop"))
    }

    /// Appends one metrics row per vesicle, evaluated on the current meshes
    /// and barrier, and returns the per-vesicle energies J used for the
    /// stagnation test.
    fn record_rows(&mut self, lam_iters: &[(f64, usize)]) -> Result<Vec<f64>> {
        let step = self.state.completed_iterations;
        let t = self.state.t;
        let mut js = Vec::with_capacity(self.state.vesicles.len());
        for (i, ves) in self.state.vesicles.iter().enumerate() {
            let (lambda, newton_iters) = lam_iters[i];
            let length = ves.mesh.length();
            let w = willmore_energy(&ves.mesh)?;
            let h_b = self
                .state
                .barrier
                .as_ref()
                .map(|b| barrier_functional(&ves.mesh, b))
                .unwrap_or(0.0);
            let d = if self.model == FlowModel::Model3 && self.state.vesicles.len() > 1 {
                let others: Vec<&CurveMesh> = self
                    .state
                    .vesicles
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i)
                    .map(|(_, v)| &v.mesh)
                    .collect();
                distance_functional(&ves.mesh, &distance_field(&ves.mesh, &others)?)?
            } else {
                0.0
            };
            let j = match self.model {
                FlowModel::LengthFlow => length,
                _ => {
                    w + lambda * (length - ves.target_length)
                        + self.params.alpha * h_b
                        + self.params.beta * d
                }
            };
            js.push(j);
            self.rows.push(MetricsRow {
                step,
                t,
                vesicle: i,
                length,
                w,
                h_b,
                d,
                j,
                lambda,
                newton_iters,
            });
        }
        Ok(js)
    }
}

fn check_pairwise(vesicles: &[VesicleState]) -> Result<()> {
    for a in 0..vesicles.len() {
        for b in (a + 1)..vesicles.len() {
            if meshes_intersect(&vesicles[a].mesh, &vesicles[b].mesh) {
                return Err(CurveflowError::VesicleIntersection { a, b });
            }
        }
    }
    Ok(())
}

/// Result of a completed scenario run.
pub struct ScenarioOutcome {
    pub state: ScenarioState,
    pub rows: Vec<MetricsRow>,
    pub stop: StopReason,
    pub iterations: usize,
}

/// Convenience wrapper: construct a runner, run to completion, return the
/// final state with all metrics rows.
#[allow(clippy::too_many_arguments)]
pub fn run_scenario(
    vesicles: Vec<VesicleState>,
    barrier: Option<BarrierSpec>,
    moving_rule: Option<MovingBarrierRule>,
    model: FlowModel,
    params: FlowParameters,
    epsilon: f64,
    max_iterations: usize,
) -> Result<ScenarioOutcome> {
    let mut runner =
        ScenarioRunner::new(vesicles, barrier, moving_rule, model, params, epsilon, max_iterations)?;
    let stop = runner.run()?;
    let iterations = runner.state.completed_iterations;
    Ok(ScenarioOutcome { state: runner.state, rows: runner.rows, stop, iterations })
}
