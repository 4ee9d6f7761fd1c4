//! One implicit time step of a single vesicle: solve the two subproblems,
//! find the length-constraint multiplier by Newton's method, update node
//! positions, and re-adjust midpoints.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_div_form, assemble_main_system, assemble_scalar_mass, assemble_scalar_stiffness,
    DofMap,
};
use crate::barrier::BarrierSpec;
use crate::distance::{distance_field, DistanceField};
use crate::error::CurveflowError;
use crate::functionals::{
    barrier_functional, distance_functional, willmore_energy,
};
use crate::mesh::CurveMesh;
use crate::Result;

/// Which energy drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowModel {
    /// Pure length gradient flow (no constraint, no Willmore term).
    LengthFlow,
    /// Willmore energy under exact length conservation.
    Model1,
    /// Model 1 plus the barrier penalty α·H_B.
    Model2,
    /// Model 2 plus the inter-vesicle repulsion β·D.
    Model3,
}

/// Numerical parameters of the flow.
#[derive(Debug, Clone, Copy)]
pub struct FlowParameters {
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

/// One vesicle's evolving mesh together with its conserved target length.
#[derive(Debug, Clone)]
pub struct VesicleState {
    pub mesh: CurveMesh,
    pub target_length: f64,
}

/// Paired velocity/curvature solution of one subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub v: Vec<Vector2<f64>>,
    pub h: Vec<Vector2<f64>>,
}

/// Quantities recorded for one step of one vesicle.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub lambda: f64,
    pub newton_iters: usize,
    pub length_before: f64,
    pub length_after: f64,
    pub w: f64,
    pub h_b: f64,
    pub d: f64,
    pub j: f64,
    pub max_displacement: f64,
}

/// Solves the main subproblem: `(M + αC_H + βC_D)V₁ + A_W·H₁ = −αg_H − βg_D`
/// with the split row `τK·V₁ − M·H₁ = −K·x`.
pub fn solve_subproblem_main(
    mesh: &CurveMesh,
    params: &FlowParameters,
    barrier: Option<&BarrierSpec>,
    field: Option<&DistanceField>,
) -> Result<SubproblemSolution> {
    let sys = assemble_main_system(mesh, params.tau, params.alpha, params.beta, barrier, field)?;
    let (v, h) = sys.solve_schur()?;
    let map = DofMap::new(mesh);
    Ok(SubproblemSolution { v: map.unpack(&v), h: map.unpack(&h) })
}

/// Solves the area subproblem: `M·V₂ + M·H₂ = 0` with the same split row,
/// which forces `V₂ = −H₂` and reduces to the per-component scalar system
/// `(M + τK)·V₂ = −K·x`.
pub fn solve_subproblem_area(mesh: &CurveMesh, params: &FlowParameters) -> Result<SubproblemSolution> {
    let m = assemble_scalar_mass(mesh);
    let k = assemble_scalar_stiffness(mesh);
    let n = mesh.n_nodes();
    let lu = (&m + params.tau * &k).lu();
    let mut v = vec![Vector2::zeros(); n];
    for comp in 0..2 {
        let x = nalgebra::DVector::from_iterator(n, mesh.nodes().iter().map(|p| p.coords[comp]));
        let rhs = -(&k * x);
        let sol = lu.solve(&rhs).ok_or(CurveflowError::SingularSystem)?;
        for i in 0..n {
            v[i][comp] = sol[i];
        }
    }
    let h = v.iter().map(|u| -u).collect();
    Ok(SubproblemSolution { v, h })
}

/// Combines the two velocity fields at a given multiplier.
fn combined_velocity(v1: &[Vector2<f64>], v2: &[Vector2<f64>], lambda: f64) -> Vec<Vector2<f64>> {
    v1.iter().zip(v2.iter()).map(|(a, b)| a + lambda * b).collect()
}

/// Materializes the candidate mesh `Γ + τ(V₁ + λV₂)` with midpoints
/// re-adjusted, i.e. exactly the mesh the update rule would produce.
fn candidate_mesh(
    mesh: &CurveMesh,
    v1: &[Vector2<f64>],
    v2: &[Vector2<f64>],
    lambda: f64,
    tau: f64,
) -> Result<CurveMesh> {
    mesh.displaced(&combined_velocity(v1, v2, lambda), tau).adjust_midpoints()
}

/// Finds the Lagrange multiplier λ such that the updated curve keeps the
/// target length, as a root of
/// `f(λ) = A(Γ + τ(V₁+λV₂)) − A(Γ⁰)`,
/// by Newton's method with derivative `τ∫div_Γ V₂` on the λ-updated curve
/// and initial guess `λ₀ = −(∫div_Γ V₂)⁻¹ ∫div_Γ V₁`. Falls back to
/// bisection if Newton stalls. Returns (λ, iterations used).
#[allow(clippy::too_many_arguments)]
pub fn newton_multiplier(
    mesh: &CurveMesh,
    v1: &[Vector2<f64>],
    v2: &[Vector2<f64>],
    tau: f64,
    target_length: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, usize)> {
    let div = assemble_div_form(mesh);
    let map = DofMap::new(mesh);
    let div_v1 = div.dot(&map.pack(v1));
    let div_v2 = div.dot(&map.pack(v2));
    if div_v2.abs() < 1e-12 {
        return Err(CurveflowError::DegenerateConstraint { value: div_v2 });
    }
    let lambda0 = -div_v1 / div_v2;
    let v2_dofs = map.pack(v2);

    let f_eval = |lambda: f64| -> Result<(f64, CurveMesh)> {
        let cand = candidate_mesh(mesh, v1, v2, lambda, tau)?;
        Ok((cand.length() - target_length, cand))
    };

    let mut lambda = lambda0;
    let (mut f, mut cand) = f_eval(lambda)?;
    let f0_abs = f.abs();
    let mut iters = 0usize;
    while f.abs() > tol * target_length {
        if iters >= max_iter {
            return Err(CurveflowError::NewtonNoConvergence { iters, residual: f });
        }
        if iters == 3 && f.abs() > 0.1 * f0_abs {
            // Newton is stalling; bracket and bisect instead.
            return bisect_multiplier(
                mesh, v1, v2, tau, target_length, tol, max_iter, lambda0, iters,
            );
        }
        let df = tau * assemble_div_form(&cand).dot(&v2_dofs);
        if df.abs() < 1e-300 {
            return Err(CurveflowError::DegenerateConstraint { value: df });
        }
        lambda -= f / df;
        let next = f_eval(lambda)?;
        f = next.0;
        cand = next.1;
        iters += 1;
    }
    Ok((lambda, iters))
}

#[allow(clippy::too_many_arguments)]
fn bisect_multiplier(
    mesh: &CurveMesh,
    v1: &[Vector2<f64>],
    v2: &[Vector2<f64>],
    tau: f64,
    target_length: f64,
    tol: f64,
    max_iter: usize,
    lambda0: f64,
    start_iters: usize,
) -> Result<(f64, usize)> {
    let f_eval = |lambda: f64| -> Result<f64> {
        Ok(candidate_mesh(mesh, v1, v2, lambda, tau)?.length() - target_length)
    };
    let mut lo = lambda0 - 10.0 * lambda0.abs() - 1.0;
    let mut hi = lambda0 + 10.0 * lambda0.abs() + 1.0;
    let mut f_lo = f_eval(lo)?;
    let mut f_hi = f_eval(hi)?;
    let mut widen = 0;
    while f_lo.signum() == f_hi.signum() && widen < 4 {
        let span = hi - lo;
        lo -= span;
        hi += span;
        f_lo = f_eval(lo)?;
        f_hi = f_eval(hi)?;
        widen += 1;
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(CurveflowError::NewtonNoConvergence { iters: start_iters, residual: f_lo });
    }
    let mut iters = start_iters;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f_eval(mid)?;
        iters += 1;
        if f_mid.abs() <= tol * target_length {
            return Ok((mid, iters));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if iters > max_iter * 20 {
            break;
        }
    }
    Err(CurveflowError::NewtonNoConvergence { iters, residual: f_lo })
}

/// Advances one vesicle by one step of the configured flow. Returns the new
/// state and a report of the step's multiplier, Newton effort and functional
/// values (evaluated on the updated mesh).
pub fn advance_vesicle(
    state: &VesicleState,
    model: FlowModel,
    params: &FlowParameters,
    barrier: Option<&BarrierSpec>,
    others: &[&CurveMesh],
) -> Result<(VesicleState, StepReport)> {
    let mesh = &state.mesh;
    let length_before = mesh.length();

    let (velocity, lambda, newton_iters) = match model {
        FlowModel::LengthFlow => {
            let s2 = solve_subproblem_area(mesh, params)?;
            (s2.v, 0.0, 0usize)
        }
        _ => {
            let field = if model == FlowModel::Model3 && !others.is_empty() {
                Some(distance_field(mesh, others)?)
            } else {
                None
            };
            let s1 = solve_subproblem_main(mesh, params, barrier, field.as_ref())?;
            let s2 = solve_subproblem_area(mesh, params)?;
            let (lambda, iters) = newton_multiplier(
                mesh,
                &s1.v,
                &s2.v,
                params.tau,
                state.target_length,
                params.newton_tol,
                params.newton_max_iter,
            )?;
            (combined_velocity(&s1.v, &s2.v, lambda), lambda, iters)
        }
    };

    let new_mesh = mesh.displaced(&velocity, params.tau).adjust_midpoints()?;
    new_mesh.check_simple()?;

    let max_displacement = new_mesh
        .nodes()
        .iter()
        .zip(mesh.nodes().iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let length_after = new_mesh.length();
    let w = willmore_energy(&new_mesh)?;
    let h_b = barrier.map(|b| barrier_functional(&new_mesh, b)).unwrap_or(0.0);
    let d = if model == FlowModel::Model3 && !others.is_empty() {
        distance_functional(&new_mesh, &distance_field(&new_mesh, others)?)?
    } else {
        0.0
    };
    let j = match model {
        FlowModel::LengthFlow => length_after,
        _ => {
            w + lambda * (length_after - state.target_length)
                + params.alpha * h_b
                + params.beta * d
        }
    };

    let report = StepReport {
        lambda,
        newton_iters,
        length_before,
        length_after,
        w,
        h_b,
        d,
        j,
        max_displacement,
    };
    Ok((VesicleState { mesh: new_mesh, target_length: state.target_length }, report))
}
