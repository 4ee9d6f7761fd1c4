//! Assembly of the discrete weak forms: vector mass and stiffness, the
//! Willmore shape-derivative operator, the area form, the semi-implicit
//! barrier and distance contributions, and the split-equation right-hand
//! side, plus the coupled two-field block system and its solvers.
//!
//! In 2D the surface calculus reduces along the curve: for a field `u`,
//! `∇_Γ u = t ⊗ u_s` with `u_s = u′/|x′|`, `div_Γ u = t·u_s`, and
//! `∇_Γ Id = t ⊗ t`. All forms below are written in that reduced form; the
//! parameter-space quadrature weights absorb the measure `dΓ = |x′| ds`.

use nalgebra::{DMatrix, DVector, Matrix2, Point2, Vector2};

use crate::barrier::{indicator_eval, BarrierSpec};
use crate::distance::{DistanceField, ZERO_DISTANCE_FLOOR};
use crate::element::ReferenceElement;
use crate::error::CurveflowError;
use crate::mesh::CurveMesh;
use crate::Result;

/// Node→dof indexing for 2-component vector fields: component-major, so the
/// dof of (node `i`, component `a`) is `a·n_nodes + i` and matrices built
/// from a scalar form are block-diagonal with two identical blocks.
#[derive(Debug, Clone, Copy)]
pub struct DofMap {
    pub n_nodes: usize,
}

impl DofMap {
    pub fn new(mesh: &CurveMesh) -> Self {
        DofMap { n_nodes: mesh.n_nodes() }
    }

    pub fn dof(&self, node: usize, comp: usize) -> usize {
        comp * self.n_nodes + node
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.n_nodes
    }

    /// Packs a nodal vector field into a dof vector.
    pub fn pack(&self, field: &[Vector2<f64>]) -> DVector<f64> {
        let mut v = DVector::zeros(self.n_dofs());
        for (i, u) in field.iter().enumerate() {
            v[self.dof(i, 0)] = u.x;
            v[self.dof(i, 1)] = u.y;
        }
        v
    }

    /// Unpacks a dof vector into a nodal vector field.
    pub fn unpack(&self, dofs: &DVector<f64>) -> Vec<Vector2<f64>> {
        (0..self.n_nodes)
            .map(|i| Vector2::new(dofs[self.dof(i, 0)], dofs[self.dof(i, 1)]))
            .collect()
    }
}

/// Geometry and basis data at one quadrature point of one element.
pub(crate) struct QuadData {
    pub nodes: [usize; 3],
    pub basis: [f64; 3],
    pub dbasis: [f64; 3],
    pub w: f64,
    pub x: Point2<f64>,
    pub t: Vector2<f64>,
    pub j: f64,
}

/// Runs `f` over every quadrature point of every element with precomputed
/// geometry (the mesh is assumed valid, i.e. nondegenerate jacobians).
pub(crate) fn for_each_quad(
    mesh: &CurveMesh,
    rule: &ReferenceElement,
    mut f: impl FnMut(usize, &QuadData),
) {
    for e in 0..mesh.n_elements() {
        let nodes = mesh.element_nodes(e);
        let pts = mesh.element_points(e);
        for q in 0..rule.rule.len() {
            let b = rule.basis[q];
            let db = rule.dbasis[q];
            let xp = pts[0].coords * db[0] + pts[1].coords * db[1] + pts[2].coords * db[2];
            let x = pts[0].coords * b[0] + pts[1].coords * b[1] + pts[2].coords * b[2];
            let j = xp.norm();
            let data = QuadData {
                nodes,
                basis: b,
                dbasis: db,
                w: rule.rule.weights[q],
                x: Point2::from(x),
                t: xp / j,
                j,
            };
            f(e, &data);
        }
    }
}

/// Scalar mass matrix `∫ φ_i φ_j dΓ` (one component).
pub fn assemble_scalar_mass(mesh: &CurveMesh) -> DMatrix<f64> {
    let rule = ReferenceElement::production();
    let n = mesh.n_nodes();
    let mut m = DMatrix::zeros(n, n);
    for_each_quad(mesh, &rule, |_, qd| {
        for i in 0..3 {
            for k in 0..3 {
                m[(qd.nodes[i], qd.nodes[k])] += qd.w * qd.basis[i] * qd.basis[k] * qd.j;
            }
        }
    });
    m
}

/// Scalar stiffness matrix `∫ ∂_s φ_i ∂_s φ_j dΓ = ∫ φ′_i φ′_j / |x′| ds`.
pub fn assemble_scalar_stiffness(mesh: &CurveMesh) -> DMatrix<f64> {
    let rule = ReferenceElement::production();
    let n = mesh.n_nodes();
    let mut k = DMatrix::zeros(n, n);
    for_each_quad(mesh, &rule, |_, qd| {
        for i in 0..3 {
            for l in 0..3 {
                k[(qd.nodes[i], qd.nodes[l])] += qd.w * qd.dbasis[i] * qd.dbasis[l] / qd.j;
            }
        }
    });
    k
}

/// Expands a scalar form to the 2-component vector space (block diagonal).
fn expand_to_vector(scalar: &DMatrix<f64>, map: &DofMap) -> DMatrix<f64> {
    let n = map.n_nodes;
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(scalar);
    out.view_mut((n, n), (n, n)).copy_from(scalar);
    out
}

/// Vector mass matrix `∫ V·Φ dΓ` on the 2-component dof layout.
pub fn assemble_mass(mesh: &CurveMesh) -> DMatrix<f64> {
    expand_to_vector(&assemble_scalar_mass(mesh), &DofMap::new(mesh))
}

/// Vector stiffness matrix `∫ ∇_Γ V : ∇_Γ Φ dΓ`.
pub fn assemble_stiffness(mesh: &CurveMesh) -> DMatrix<f64> {
    expand_to_vector(&assemble_scalar_stiffness(mesh), &DofMap::new(mesh))
}

/// The area form `dA^{n+1}(Φ) = ∫ H^{n+1}·Φ dΓ` over curvature dofs — the
/// same bilinear form as the vector mass matrix, exposed separately for
/// clarity of the multiplier subproblem.
#[allow(non_snake_case)]
pub fn assemble_dA(mesh: &CurveMesh) -> DMatrix<f64> {
    assemble_mass(mesh)
}

/// Willmore shape-derivative operator on curvature dofs:
/// `Φᵀ A_W H = ∫ ∇_ΓΦ:∇_ΓH − ∫ ∇_ΓΦ(∇_ΓId+∇_ΓIdᵀ):∇_ΓH + ½∫ div_ΓH div_ΓΦ`,
/// which in the 2D reduction collapses to
/// `∫ [Φ_s·H_s − (3/2)(t·Φ_s)(t·H_s)] dΓ`.
#[allow(non_snake_case)]
pub fn assemble_dW_operator(mesh: &CurveMesh) -> DMatrix<f64> {
    let rule = ReferenceElement::production();
    let map = DofMap::new(mesh);
    let mut a = DMatrix::zeros(map.n_dofs(), map.n_dofs());
    for_each_quad(mesh, &rule, |_, qd| {
        for i in 0..3 {
            for l in 0..3 {
                let dd = qd.w * qd.dbasis[i] * qd.dbasis[l] / qd.j;
                for comp_a in 0..2 {
                    for comp_b in 0..2 {
                        let delta = if comp_a == comp_b { 1.0 } else { 0.0 };
                        let coeff = delta - 1.5 * qd.t[comp_a] * qd.t[comp_b];
                        a[(map.dof(qd.nodes[i], comp_a), map.dof(qd.nodes[l], comp_b))] +=
                            dd * coeff;
                    }
                }
            }
        }
    });
    a
}

/// Split-equation right-hand side `−∫ ∇_Γx : ∇_ΓΦ dΓ` (stiffness applied to
/// the node-coordinate field, negated).
pub fn assemble_split_rhs(mesh: &CurveMesh) -> DVector<f64> {
    let rule = ReferenceElement::production();
    let map = DofMap::new(mesh);
    let mut b = DVector::zeros(map.n_dofs());
    for_each_quad(mesh, &rule, |_, qd| {
        // ∇_Γx : ∇_ΓΦ with Φ = e_a φ_i reduces to x′_a φ′_i / |x′|;
        // x′/|x′| = t, so the integrand is t_a φ′_i.
        for i in 0..3 {
            for comp in 0..2 {
                b[map.dof(qd.nodes[i], comp)] -= qd.w * qd.t[comp] * qd.dbasis[i];
            }
        }
    });
    b
}

/// Linear form `Φ ↦ ∫ div_ΓΦ dΓ` over velocity dofs; dotted with a nodal
/// field's dofs it evaluates `∫ div_ΓV dΓ` (used by the multiplier Newton).
pub fn assemble_div_form(mesh: &CurveMesh) -> DVector<f64> {
    let rule = ReferenceElement::production();
    let map = DofMap::new(mesh);
    let mut g = DVector::zeros(map.n_dofs());
    for_each_quad(mesh, &rule, |_, qd| {
        for i in 0..3 {
            for comp in 0..2 {
                g[map.dof(qd.nodes[i], comp)] += qd.w * qd.t[comp] * qd.dbasis[i];
            }
        }
    });
    g
}

/// Semi-implicit barrier terms: explicit parts
/// `∫ ∇1_B·Φ + ∫ 1_B div_ΓΦ` into `g_H`, implicit parts
/// `τ∫ [Hess(1_B)V]·Φ + τ∫ (∇1_B·V) div_ΓΦ` into `C_H` acting on velocity
/// dofs, so that `dH^{n+1}(Φ) ≈ g_H·Φ + Φᵀ C_H V`.
#[allow(non_snake_case)]
pub fn assemble_dH_terms(
    mesh: &CurveMesh,
    barrier: &BarrierSpec,
    tau: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let rule = ReferenceElement::production();
    let map = DofMap::new(mesh);
    let mut c = DMatrix::zeros(map.n_dofs(), map.n_dofs());
    let mut g = DVector::zeros(map.n_dofs());
    for_each_quad(mesh, &rule, |_, qd| {
        let ind = indicator_eval(barrier, qd.x);
        for i in 0..3 {
            for a in 0..2 {
                let row = map.dof(qd.nodes[i], a);
                g[row] += qd.w
                    * (ind.grad[a] * qd.basis[i] * qd.j + ind.value * qd.t[a] * qd.dbasis[i]);
                for l in 0..3 {
                    for b in 0..2 {
                        let col = map.dof(qd.nodes[l], b);
                        c[(row, col)] += tau
                            * qd.w
                            * (ind.hess[(a, b)] * qd.basis[i] * qd.basis[l] * qd.j
                                + ind.grad[b] * qd.basis[l] * qd.t[a] * qd.dbasis[i]);
                    }
                }
            }
        }
    });
    (c, g)
}

/// Exact Hessian of `p ↦ 1/‖p−y‖²` expressed through `r = p−y` and
/// `d = ‖r‖²`: `−2I/d² + 8(r⊗r)/d³`.
pub(crate) fn inv_dist_sq_hessian(r: Vector2<f64>, d: f64) -> Matrix2<f64> {
    let i2 = Matrix2::identity();
    -2.0 / (d * d) * i2 + 8.0 / (d * d * d) * (r * r.transpose())
}

/// Semi-implicit distance terms with per-element frozen witnesses: explicit
/// parts `−2∫(1/d²)(x−y_K)·Φ + ∫(1/d)div_ΓΦ` into `g_D`, implicit parts
/// `−2τ∫[𝓗(1/d)V]·Φ − 2τ∫(1/d²)((x−y_K)·V)div_ΓΦ` into `C_D`.
#[allow(non_snake_case)]
pub fn assemble_dD_terms(
    mesh: &CurveMesh,
    field: &DistanceField,
    tau: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let rule = ReferenceElement::production();
    let map = DofMap::new(mesh);
    let mut c = DMatrix::zeros(map.n_dofs(), map.n_dofs());
    let mut g = DVector::zeros(map.n_dofs());
    let mut contact: Option<(usize, f64)> = None;
    for_each_quad(mesh, &rule, |e, qd| {
        if contact.is_some() {
            return;
        }
        let y = field.elements[e].witness;
        let r = qd.x - y;
        let d = r.norm_squared();
        if d < ZERO_DISTANCE_FLOOR {
            contact = Some((e, d));
            return;
        }
        let inv_d = 1.0 / d;
        let inv_d2 = inv_d * inv_d;
        let hess = inv_dist_sq_hessian(r, d);
        for i in 0..3 {
            for a in 0..2 {
                let row = map.dof(qd.nodes[i], a);
                g[row] += qd.w
                    * (-2.0 * inv_d2 * r[a] * qd.basis[i] * qd.j
                        + inv_d * qd.t[a] * qd.dbasis[i]);
                for l in 0..3 {
                    for b in 0..2 {
                        let col = map.dof(qd.nodes[l], b);
                        c[(row, col)] += tau
                            * qd.w
                            * (-2.0 * hess[(a, b)] * qd.basis[i] * qd.basis[l] * qd.j
                                - 2.0 * inv_d2 * r[b] * qd.basis[l] * qd.t[a] * qd.dbasis[i]);
                    }
                }
            }
        }
    });
    if let Some((element, d)) = contact {
        return Err(CurveflowError::ZeroDistance { element, d });
    }
    Ok((c, g))
}

/// Diagnostic evaluation of the alternative Willmore shape-derivative form
/// against all test functions, given a nodal curvature field `h`:
/// `−∫∇_ΓΦ:∇_Γh + ∫D(Φ)∇_ΓId:∇_Γh − ∫div_Γh div_ΓΦ − ½∫|h|²div_ΓΦ`,
/// with `D(Φ)_ij = [∇_ΓΦ_j]_i + [∇_ΓΦ_i]_j`. Retained as a cross-check only.
#[allow(non_snake_case)]
pub fn assemble_dW2_diagnostic(mesh: &CurveMesh, h: &[Vector2<f64>]) -> DVector<f64> {
    assert_eq!(h.len(), mesh.n_nodes(), "curvature field size mismatch");
    let rule = ReferenceElement::production();
    let map = DofMap::new(mesh);
    let mut r = DVector::zeros(map.n_dofs());
    for_each_quad(mesh, &rule, |_, qd| {
        let mut h_val = Vector2::zeros();
        let mut h_prime = Vector2::zeros();
        for i in 0..3 {
            h_val += qd.basis[i] * h[qd.nodes[i]];
            h_prime += qd.dbasis[i] * h[qd.nodes[i]];
        }
        let t_dot_hp = qd.t.dot(&h_prime);
        let h_sq = h_val.norm_squared();
        for i in 0..3 {
            for a in 0..2 {
                let phi_prime_a = qd.dbasis[i]; // Φ = e_a φ_i, so Φ′ = e_a φ′_i
                let t_dot_pp = qd.t[a] * phi_prime_a;
                let term1 = -(h_prime[a] * phi_prime_a) / qd.j;
                let term2 = 2.0 * t_dot_pp * t_dot_hp / qd.j;
                let term3 = -t_dot_pp * t_dot_hp / qd.j;
                let term4 = -0.5 * h_sq * t_dot_pp;
                r[map.dof(qd.nodes[i], a)] += qd.w * (term1 + term2 + term3 + term4);
            }
        }
    });
    r
}

/// The coupled two-field linear system of one implicit step:
/// momentum row `A_VV·V + A_VH·H = b_V`, split row `A_HV·V + A_HH·H = b_H`
/// with `A_HV = τK` and `A_HH = −M` exactly.
pub struct BlockSystem {
    pub a_vv: DMatrix<f64>,
    pub a_vh: DMatrix<f64>,
    pub a_hv: DMatrix<f64>,
    pub a_hh: DMatrix<f64>,
    pub b_v: DVector<f64>,
    pub b_h: DVector<f64>,
    pub dof_map: DofMap,
    scalar_mass: DMatrix<f64>,
}

/// Assembles the main subproblem (the Willmore/barrier/distance-driven pair):
/// `(M + αC_H + βC_D)V + A_W·H = −αg_H − βg_D`, `τK·V − M·H = −K·x`.
pub fn assemble_main_system(
    mesh: &CurveMesh,
    tau: f64,
    alpha: f64,
    beta: f64,
    barrier: Option<&BarrierSpec>,
    field: Option<&DistanceField>,
) -> Result<BlockSystem> {
    let map = DofMap::new(mesh);
    let m_s = assemble_scalar_mass(mesh);
    let k_s = assemble_scalar_stiffness(mesh);
    let m_v = expand_to_vector(&m_s, &map);
    let k_v = expand_to_vector(&k_s, &map);

    let mut a_vv = m_v.clone();
    let mut b_v = DVector::zeros(map.n_dofs());
    if let Some(b) = barrier {
        if alpha != 0.0 {
            let (c_h, g_h) = assemble_dH_terms(mesh, b, tau);
            a_vv += alpha * c_h;
            b_v -= alpha * g_h;
        }
    }
    if let Some(f) = field {
        if beta != 0.0 {
            let (c_d, g_d) = assemble_dD_terms(mesh, f, tau)?;
            a_vv += beta * c_d;
            b_v -= beta * g_d;
        }
    }

    Ok(BlockSystem {
        a_vv,
        a_vh: assemble_dW_operator(mesh),
        a_hv: tau * &k_v,
        a_hh: -&m_v,
        b_v,
        b_h: assemble_split_rhs(mesh),
        dof_map: map,
        scalar_mass: m_s,
    })
}

impl BlockSystem {
    /// Reference solve: one dense LU over the monolithic 2×2 block system.
    pub fn solve_dense(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.dof_map.n_dofs();
        let mut full = DMatrix::zeros(2 * n, 2 * n);
        full.view_mut((0, 0), (n, n)).copy_from(&self.a_vv);
        full.view_mut((0, n), (n, n)).copy_from(&self.a_vh);
        full.view_mut((n, 0), (n, n)).copy_from(&self.a_hv);
        full.view_mut((n, n), (n, n)).copy_from(&self.a_hh);
        let mut rhs = DVector::zeros(2 * n);
        rhs.rows_mut(0, n).copy_from(&self.b_v);
        rhs.rows_mut(n, n).copy_from(&self.b_h);
        let sol = full.lu().solve(&rhs).ok_or(CurveflowError::SingularSystem)?;
        Ok((sol.rows(0, n).into_owned(), sol.rows(n, n).into_owned()))
    }

    /// Production solve: eliminates H through the split row using the
    /// block-diagonal mass (`H = M⁻¹(A_HV·V − b_H)`), solves the reduced
    /// velocity system, then back-substitutes.
    pub fn solve_schur(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.dof_map.n_nodes;
        let nd = self.dof_map.n_dofs();
        let m_lu = self.scalar_mass.clone().lu();

        // P = M_s⁻¹ (τ K_s): the per-component action of M⁻¹ A_HV.
        let k_s = self.a_hv.view((0, 0), (n, n)).into_owned();
        let p = m_lu.solve(&k_s).ok_or(CurveflowError::SingularSystem)?;

        // y = M⁻¹ b_H componentwise.
        let mut y = DVector::zeros(nd);
        for comp in 0..2 {
            let rhs = self.b_h.rows(comp * n, n).into_owned();
            let sol = m_lu.solve(&rhs).ok_or(CurveflowError::SingularSystem)?;
            y.rows_mut(comp * n, n).copy_from(&sol);
        }

        // Reduced system: (A_VV + A_VH·blockdiag(P,P)) V = b_V + A_VH·y.
        let mut eff = self.a_vv.clone();
        for comp_a in 0..2 {
            for comp_b in 0..2 {
                let prod = self.a_vh.view((comp_a * n, comp_b * n), (n, n)) * &p;
                let mut dst = eff.view_mut((comp_a * n, comp_b * n), (n, n));
                dst += &prod;
            }
        }
        let rhs_eff = &self.b_v + &self.a_vh * &y;
        let v = eff.lu().solve(&rhs_eff).ok_or(CurveflowError::SingularSystem)?;

        // Back-substitute: H = M⁻¹(τK·V − b_H) componentwise.
        let mut h = DVector::zeros(nd);
        let kv = &self.a_hv * &v;
        for comp in 0..2 {
            let rhs = kv.rows(comp * n, n) - self.b_h.rows(comp * n, n);
            let sol = m_lu.solve(&rhs).ok_or(CurveflowError::SingularSystem)?;
            h.rows_mut(comp * n, n).copy_from(&sol);
        }
        Ok((v, h))
    }
}
