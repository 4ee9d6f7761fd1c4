//! `CurveMesh`: a closed planar curve discretized by quadratic isoparametric
//! elements, plus the per-element geometry used by assembly and the midpoint
//! re-projection applied after every node update.

use crate::element::{eval_reference_basis, ReferenceElement, BASIS_SECOND_DERIV};
use crate::error::CurveflowError;
use crate::Result;
use nalgebra::{Point2, Vector2};

/// Jacobian threshold below which an element counts as degenerate.
pub const DEGENERATE_JACOBIAN: f64 = 1e-14;

/// A closed loop of quadratic elements. Node `2e` is the first endpoint of
/// element `e`, node `2e+1` its midpoint node, and node `(2e+2) mod 2n` the
/// second endpoint (shared with element `e+1`). Orientation is
/// counterclockwise: the enclosed signed area is positive and the outward
/// normal is the tangent rotated by −90°.
///
/// Meshes are value types: operations that change geometry return new meshes.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveMesh {
    nodes: Vec<Point2<f64>>,
}

/// Pointwise geometry of one element at a parameter value.
#[derive(Debug, Clone, Copy)]
pub struct ElementPoint {
    pub position: Point2<f64>,
    pub tangent: Vector2<f64>,
    /// Outward unit normal (tangent rotated −90° for a CCW curve).
    pub normal: Vector2<f64>,
    /// `|x′(s)|`, the parametrization speed.
    pub jacobian: f64,
}

impl CurveMesh {
    /// Wraps a node list (even length ≥ 16, i.e. ≥ 8 elements) without
    /// validating geometry. Use [`CurveMesh::validate`] where invariants must
    /// hold.
    pub fn from_nodes(nodes: Vec<Point2<f64>>) -> Result<Self> {
        if nodes.len() < 16 || nodes.len() % 2 != 0 {
            return Err(CurveflowError::InvalidShape(format!(
                "node count must be even and ≥ 16, got {}",
                nodes.len()
            )));
        }
        Ok(CurveMesh { nodes })
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() / 2
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Point2<f64>] {
        &self.nodes
    }

    /// Global node indices of element `e` in traversal order.
    pub fn element_nodes(&self, e: usize) -> [usize; 3] {
        let n = self.n_nodes();
        [2 * e, 2 * e + 1, (2 * e + 2) % n]
    }

    /// The three node positions of element `e`.
    pub fn element_points(&self, e: usize) -> [Point2<f64>; 3] {
        let [i0, i1, i2] = self.element_nodes(e);
        [self.nodes[i0], self.nodes[i1], self.nodes[i2]]
    }

    /// Position, unit tangent, outward unit normal and jacobian of element
    /// `e` at parameter `s`.
    pub fn element_geometry(&self, e: usize, s: f64) -> Result<ElementPoint> {
        let [p0, p1, p2] = self.element_points(e);
        let (phi, dphi) = eval_reference_basis(s);
        let position = Point2::new(
            phi[0] * p0.x + phi[1] * p1.x + phi[2] * p2.x,
            phi[0] * p0.y + phi[1] * p1.y + phi[2] * p2.y,
        );
        let deriv = Vector2::new(
            dphi[0] * p0.x + dphi[1] * p1.x + dphi[2] * p2.x,
            dphi[0] * p0.y + dphi[1] * p1.y + dphi[2] * p2.y,
        );
        let jacobian = deriv.norm();
        if jacobian < DEGENERATE_JACOBIAN {
            return Err(CurveflowError::DegenerateElement { element: e, jacobian });
        }
        let tangent = deriv / jacobian;
        let normal = Vector2::new(tangent.y, -tangent.x);
        Ok(ElementPoint { position, tangent, normal, jacobian })
    }

    /// Total curve length by per-element quadrature of the jacobian.
    pub fn length(&self) -> f64 {
        let re = ReferenceElement::production();
        self.length_with(&re)
    }

    pub fn length_with(&self, re: &ReferenceElement) -> f64 {
        let mut total = 0.0;
        for e in 0..self.n_elements() {
            let [p0, p1, p2] = self.element_points(e);
            for (q, &w) in re.rule.weights.iter().enumerate() {
                let d = &re.dbasis[q];
                let dx = d[0] * p0.x + d[1] * p1.x + d[2] * p2.x;
                let dy = d[0] * p0.y + d[1] * p1.y + d[2] * p2.y;
                total += w * dx.hypot(dy);
            }
        }
        total
    }

    /// Signed enclosed area `½∮(x dy − y dx)`; positive iff counterclockwise.
    /// Exact for the discrete curve (the integrand is cubic in `s`).
    pub fn signed_area(&self) -> f64 {
        let re = ReferenceElement::production();
        let mut total = 0.0;
        for e in 0..self.n_elements() {
            let [p0, p1, p2] = self.element_points(e);
            for (q, &w) in re.rule.weights.iter().enumerate() {
                let phi = &re.basis[q];
                let d = &re.dbasis[q];
                let x = phi[0] * p0.x + phi[1] * p1.x + phi[2] * p2.x;
                let y = phi[0] * p0.y + phi[1] * p1.y + phi[2] * p2.y;
                let dx = d[0] * p0.x + d[1] * p1.x + d[2] * p2.x;
                let dy = d[0] * p0.y + d[1] * p1.y + d[2] * p2.y;
                total += w * 0.5 * (x * dy - y * dx);
            }
        }
        total
    }

    /// Returns a mesh with translated nodes (used by invariance tests and the
    /// shape builders).
    pub fn translated(&self, v: Vector2<f64>) -> CurveMesh {
        CurveMesh { nodes: self.nodes.iter().map(|p| p + v).collect() }
    }

    /// Returns a mesh with the node positions displaced by `tau * velocity`
    /// (`velocity` indexed like nodes).
    pub fn displaced(&self, velocity: &[Vector2<f64>], tau: f64) -> CurveMesh {
        assert_eq!(velocity.len(), self.n_nodes());
        CurveMesh {
            nodes: self
                .nodes
                .iter()
                .zip(velocity)
                .map(|(p, v)| p + tau * v)
                .collect(),
        }
    }

    /// Repositions every midpoint node onto the orthogonal projection of its
    /// element's chord midpoint onto that element's own quadratic curve.
    ///
    /// A single projection pass moves the midpoint node, which redefines the
    /// element curve, so the pass is iterated to a fixed point (max node
    /// movement < 1e−13); the result is idempotent well within 1e−12.
    /// Endpoint nodes never move.
    pub fn adjust_midpoints(&self) -> Result<CurveMesh> {
        let mut nodes = self.nodes.clone();
        let n_el = self.n_elements();
        for _pass in 0..60 {
            let mut max_move: f64 = 0.0;
            let mut new_mids = Vec::with_capacity(n_el);
            for e in 0..n_el {
                let n = nodes.len();
                let p0 = nodes[2 * e];
                let p1 = nodes[2 * e + 1];
                let p2 = nodes[(2 * e + 2) % n];
                let chord_mid = nalgebra::center(&p0, &p2);
                let s = project_param_on_element(p0, p1, p2, chord_mid, e)?;
                let (phi, _) = eval_reference_basis(s);
                let proj = Point2::new(
                    phi[0] * p0.x + phi[1] * p1.x + phi[2] * p2.x,
                    phi[0] * p0.y + phi[1] * p1.y + phi[2] * p2.y,
                );
                max_move = max_move.max((proj - p1).norm());
                new_mids.push(proj);
            }
            for (e, m) in new_mids.into_iter().enumerate() {
                nodes[2 * e + 1] = m;
            }
            if max_move < 1e-13 {
                break;
            }
        }
        Ok(CurveMesh { nodes })
    }

    /// Checks that the discrete curve is simple: no two non-adjacent element
    /// arcs intersect (each arc tested as 4 chord segments). Adjacent elements
    /// share one endpoint and are skipped.
    pub fn check_simple(&self) -> Result<()> {
        let n_el = self.n_elements();
        let subs = 4;
        // Polyline sample per element: s = 0, 1/subs, ..., 1.
        let mut segs: Vec<(usize, Point2<f64>, Point2<f64>)> = Vec::with_capacity(n_el * subs);
        for e in 0..n_el {
            let [p0, p1, p2] = self.element_points(e);
            let mut prev = p0;
            for k in 1..=subs {
                let s = k as f64 / subs as f64;
                let (phi, _) = eval_reference_basis(s);
                let p = Point2::new(
                    phi[0] * p0.x + phi[1] * p1.x + phi[2] * p2.x,
                    phi[0] * p0.y + phi[1] * p1.y + phi[2] * p2.y,
                );
                segs.push((e, prev, p));
                prev = p;
            }
        }
        for i in 0..segs.len() {
            for j in (i + 1)..segs.len() {
                let (ea, a0, a1) = segs[i];
                let (eb, b0, b1) = segs[j];
                // Skip same or cyclically adjacent elements (shared endpoint).
                let adj = ea == eb
                    || (ea + 1) % n_el == eb
                    || (eb + 1) % n_el == ea;
                if adj {
                    continue;
                }
                if segments_intersect(a0, a1, b0, b1) {
                    return Err(CurveflowError::SelfIntersection { a: ea, b: eb });
                }
            }
        }
        Ok(())
    }

    /// Runs all mesh invariants: node count, nonzero jacobians at quadrature
    /// points, CCW orientation, simplicity.
    pub fn validate(&self) -> Result<()> {
        let re = ReferenceElement::production();
        for e in 0..self.n_elements() {
            for &s in &re.rule.points {
                self.element_geometry(e, s)?;
            }
        }
        if self.signed_area() <= 0.0 {
            return Err(CurveflowError::InvalidShape(
                "orientation must be counterclockwise (signed area > 0)".into(),
            ));
        }
        self.check_simple()
    }
}

/// Parameter of the closest point on the quadratic curve through
/// `(p0, p1, p2)` to `target`, by Newton on `g′(s) = (x(s)−target)·x′(s)`
/// seeded at `s = ½` and clamped to `[0,1]`.
fn project_param_on_element(
    p0: Point2<f64>,
    p1: Point2<f64>,
    p2: Point2<f64>,
    target: Point2<f64>,
    element: usize,
) -> Result<f64> {
    let xpp = Vector2::new(
        BASIS_SECOND_DERIV[0] * p0.x + BASIS_SECOND_DERIV[1] * p1.x + BASIS_SECOND_DERIV[2] * p2.x,
        BASIS_SECOND_DERIV[0] * p0.y + BASIS_SECOND_DERIV[1] * p1.y + BASIS_SECOND_DERIV[2] * p2.y,
    );
    let mut s: f64 = 0.5;
    for _ in 0..50 {
        let (phi, dphi) = eval_reference_basis(s);
        let x = Vector2::new(
            phi[0] * p0.x + phi[1] * p1.x + phi[2] * p2.x,
            phi[0] * p0.y + phi[1] * p1.y + phi[2] * p2.y,
        );
        let xp = Vector2::new(
            dphi[0] * p0.x + dphi[1] * p1.x + dphi[2] * p2.x,
            dphi[0] * p0.y + dphi[1] * p1.y + dphi[2] * p2.y,
        );
        if xp.norm() < DEGENERATE_JACOBIAN {
            return Err(CurveflowError::DegenerateElement { element, jacobian: xp.norm() });
        }
        let r = x - target.coords;
        let g1 = r.dot(&xp);
        let g2 = xp.dot(&xp) + r.dot(&xpp);
        if g2.abs() < 1e-30 {
            break;
        }
        let step = g1 / g2;
        s = (s - step).clamp(0.0, 1.0);
        if step.abs() < 1e-15 {
            break;
        }
    }
    Ok(s)
}

/// Proper or touching intersection test for closed segments `a0a1`, `b0b1`.
pub(crate) fn segments_intersect(
    a0: Point2<f64>,
    a1: Point2<f64>,
    b0: Point2<f64>,
    b1: Point2<f64>,
) -> bool {
    let cross = |o: Point2<f64>, p: Point2<f64>, q: Point2<f64>| {
        (p.x - o.x) * (q.y - o.y) - (p.y - o.y) * (q.x - o.x)
    };
    let d1 = cross(b0, b1, a0);
    let d2 = cross(b0, b1, a1);
    let d3 = cross(a0, a1, b0);
    let d4 = cross(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on_seg = |p: Point2<f64>, q: Point2<f64>, r: Point2<f64>| {
        r.x <= p.x.max(q.x) && r.x >= p.x.min(q.x) && r.y <= p.y.max(q.y) && r.y >= p.y.min(q.y)
    };
    (d1 == 0.0 && on_seg(b0, b1, a0))
        || (d2 == 0.0 && on_seg(b0, b1, a1))
        || (d3 == 0.0 && on_seg(a0, a1, b0))
        || (d4 == 0.0 && on_seg(a0, a1, b1))
}
