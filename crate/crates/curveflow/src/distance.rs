//! Per-element closest-point data between vesicles: each element of a mesh
//! gets a frozen witness point on another vesicle, realizing the minimum
//! squared distance from the element's parametric midpoint over a brute-force
//! candidate set (all nodes plus all quadrature-point images of the other
//! meshes).

use nalgebra::Point2;

use crate::element::ReferenceElement;
use crate::error::CurveflowError;
use crate::mesh::CurveMesh;
use crate::Result;

/// Squared distances below this signal contact/overlap and abort the run.
pub const ZERO_DISTANCE_FLOOR: f64 = 1e-12;

/// One element's closest-point record: the witness `y_K` on another vesicle,
/// the squared distance `d_K = ‖c_K − y_K‖²` from the element's midpoint
/// node `c_K`, and which of the consulted meshes owns the witness.
#[derive(Debug, Clone, Copy)]
pub struct ElementWitness {
    pub witness: Point2<f64>,
    pub d_squared: f64,
    pub source: usize,
}

/// Frozen distance data for one mesh against the other vesicles, one record
/// per element; `sources` lists the indices of the meshes consulted.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub elements: Vec<ElementWitness>,
    pub sources: Vec<usize>,
}

/// Collects the candidate witness set of one mesh: every node plus the image
/// of every production quadrature point on every element.
fn candidate_points(mesh: &CurveMesh, rule: &ReferenceElement) -> Vec<Point2<f64>> {
    let mut pts = Vec::with_capacity(mesh.n_nodes() + mesh.n_elements() * rule.rule.len());
    pts.extend_from_slice(mesh.nodes());
    for e in 0..mesh.n_elements() {
        let [p0, p1, p2] = mesh.element_points(e);
        for (q, basis) in rule.basis.iter().enumerate() {
            let _ = q;
            let pos = p0.coords * basis[0] + p1.coords * basis[1] + p2.coords * basis[2];
            pts.push(Point2::from(pos));
        }
    }
    pts
}

/// Computes the per-element witness field of `mesh` against `others` by
/// brute force. Errors if `others` is empty or any element's squared
/// distance falls below the contact floor.
pub fn distance_field(mesh: &CurveMesh, others: &[&CurveMesh]) -> Result<DistanceField> {
    if others.is_empty() {
        return Err(CurveflowError::NoOtherVesicles);
    }
    let rule = ReferenceElement::production();
    let candidates: Vec<(usize, Vec<Point2<f64>>)> = others
        .iter()
        .enumerate()
        .map(|(i, m)| (i, candidate_points(m, &rule)))
        .collect();

    let mut elements = Vec::with_capacity(mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let c_k = mesh.nodes()[mesh.element_nodes(e)[1]];
        let mut best: Option<ElementWitness> = None;
        for (source, pts) in &candidates {
            for p in pts {
                let d2 = (c_k - p).norm_squared();
                if best.map_or(true, |b| d2 < b.d_squared) {
                    best = Some(ElementWitness { witness: *p, d_squared: d2, source: *source });
                }
            }
        }
        let best = best.expect("candidate set nonempty");
        if best.d_squared < ZERO_DISTANCE_FLOOR {
            return Err(CurveflowError::ZeroDistance { element: e, d: best.d_squared });
        }
        elements.push(best);
    }
    Ok(DistanceField { elements, sources: (0..others.len()).collect() })
}
