//! The four shape functionals driving the flow: Willmore energy `W`,
//! curve length `A`, barrier overlap `H_B`, and inter-vesicle repulsion `D`,
//! plus the discrete curvature field they share.

use nalgebra::Vector2;

use crate::assembly::{assemble_scalar_mass, assemble_scalar_stiffness, for_each_quad};
use crate::barrier::{indicator_eval, BarrierSpec};
use crate::distance::{DistanceField, ZERO_DISTANCE_FLOOR};
use crate::element::ReferenceElement;
use crate::error::CurveflowError;
use crate::mesh::CurveMesh;
use crate::Result;

/// Nodal curvature vector field solving `M·H = K·x` (the weak form of
/// `−Δ_Γ x = h`): on a circle of radius R the field has magnitude `1/R` and
/// points along the outward normal under this sign convention.
pub fn discrete_curvature(mesh: &CurveMesh) -> Result<Vec<Vector2<f64>>> {
    let m = assemble_scalar_mass(mesh);
    let k = assemble_scalar_stiffness(mesh);
    let lu = m.lu();
    let n = mesh.n_nodes();
    let mut h = vec![Vector2::zeros(); n];
    for comp in 0..2 {
        let x = nalgebra::DVector::from_iterator(n, mesh.nodes().iter().map(|p| p.coords[comp]));
        let rhs = &k * x;
        let sol = lu.solve(&rhs).ok_or(CurveflowError::SingularSystem)?;
        for i in 0..n {
            h[i][comp] = sol[i];
        }
    }
    Ok(h)
}

/// Willmore energy `W = ½∫‖h‖² dΓ`, evaluated by quadrature of the
/// interpolated discrete curvature field.
pub fn willmore_energy(mesh: &CurveMesh) -> Result<f64> {
    let h = discrete_curvature(mesh)?;
    Ok(willmore_energy_of_field(mesh, &h))
}

/// Willmore energy of a given nodal curvature field (shared with callers
/// that already computed the field).
pub fn willmore_energy_of_field(mesh: &CurveMesh, h: &[Vector2<f64>]) -> f64 {
    let rule = ReferenceElement::production();
    let mut w = 0.0;
    for_each_quad(mesh, &rule, |_, qd| {
        let mut hq = Vector2::zeros();
        for i in 0..3 {
            hq += qd.basis[i] * h[qd.nodes[i]];
        }
        w += 0.5 * qd.w * hq.norm_squared() * qd.j;
    });
    w
}

/// Barrier overlap `H_B = ∫ 1_B(x) dΓ` of the smoothed indicator.
pub fn barrier_functional(mesh: &CurveMesh, barrier: &BarrierSpec) -> f64 {
    let rule = ReferenceElement::production();
    let mut total = 0.0;
    for_each_quad(mesh, &rule, |_, qd| {
        total += qd.w * indicator_eval(barrier, qd.x).value * qd.j;
    });
    total
}

/// Repulsion functional `D = Σ_K ∫_K 1/d_K(x) dΓ` with the squared distance
/// `d_K(x) = ‖x − y_K‖²` to each element's frozen witness.
pub fn distance_functional(mesh: &CurveMesh, field: &DistanceField) -> Result<f64> {
    assert_eq!(field.elements.len(), mesh.n_elements(), "field/mesh element mismatch");
    let rule = ReferenceElement::production();
    let mut total = 0.0;
    let mut contact: Option<(usize, f64)> = None;
    for_each_quad(mesh, &rule, |e, qd| {
        if contact.is_some() {
            return;
        }
        let d = (qd.x - field.elements[e].witness).norm_squared();
        if d < ZERO_DISTANCE_FLOOR {
            contact = Some((e, d));
            return;
        }
        total += qd.w * qd.j / d;
    });
    if let Some((element, d)) = contact {
        return Err(CurveflowError::ZeroDistance { element, d });
    }
    Ok(total)
}
