//! Initial-shape construction: analytic curves sampled into [`CurveMesh`]es.
//! Endpoint nodes lie exactly on the analytic curve; each midpoint node is the
//! orthogonal projection of its chord midpoint onto the analytic curve.

use crate::error::CurveflowError;
use crate::mesh::CurveMesh;
use crate::Result;
use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Analytic initial shapes. `c_shape` is an annular arc with two semicircular
/// caps (G¹, bulging into the opening); `cisterna` is a stadium capsule (flat
/// top/bottom, semicircular ends). `explicit` supplies the full node list in
/// mesh order `[v0, m0, v1, m1, …]` (counterclockwise).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Circle {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    CShape {
        r_outer: f64,
        r_inner: f64,
        /// Half-angle of the opening, radians; the gap spans polar angles
        /// (−opening_angle, opening_angle).
        opening_angle: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Cisterna {
        /// Half-length of the straight section.
        half_length: f64,
        /// Radius of the semicircular caps = half the capsule thickness.
        half_thickness: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Explicit { nodes: Vec<[f64; 2]> },
}

/// A closed analytic curve parametrized over `u ∈ [0,1)`, with first and
/// second parameter derivatives (used for Newton projection of midpoints).
trait ParamCurve {
    fn point(&self, u: f64) -> Point2<f64>;
    fn d1(&self, u: f64) -> Vector2<f64>;
    fn d2(&self, u: f64) -> Vector2<f64>;
}

struct Circle {
    r: f64,
    c: Point2<f64>,
}

impl ParamCurve for Circle {
    fn point(&self, u: f64) -> Point2<f64> {
        let t = 2.0 * PI * u;
        self.c + self.r * Vector2::new(t.cos(), t.sin())
    }
    fn d1(&self, u: f64) -> Vector2<f64> {
        let t = 2.0 * PI * u;
        2.0 * PI * self.r * Vector2::new(-t.sin(), t.cos())
    }
    fn d2(&self, u: f64) -> Vector2<f64> {
        let t = 2.0 * PI * u;
        -(2.0 * PI) * (2.0 * PI) * self.r * Vector2::new(t.cos(), t.sin())
    }
}

struct Ellipse {
    a: f64,
    b: f64,
    c: Point2<f64>,
}

impl ParamCurve for Ellipse {
    fn point(&self, u: f64) -> Point2<f64> {
        let t = 2.0 * PI * u;
        self.c + Vector2::new(self.a * t.cos(), self.b * t.sin())
    }
    fn d1(&self, u: f64) -> Vector2<f64> {
        let t = 2.0 * PI * u;
        2.0 * PI * Vector2::new(-self.a * t.sin(), self.b * t.cos())
    }
    fn d2(&self, u: f64) -> Vector2<f64> {
        let t = 2.0 * PI * u;
        -(2.0 * PI) * (2.0 * PI) * Vector2::new(self.a * t.cos(), self.b * t.sin())
    }
}

/// Arclength-parametrized piecewise curve: circular arcs and straight lines
/// traversed at unit speed, rescaled so `u ∈ [0,1)` covers the total length.
struct PiecewiseCurve {
    pieces: Vec<Piece>,
    /// Cumulative arclength at the start of each piece, plus total at the end.
    cumlen: Vec<f64>,
    center: Vector2<f64>,
}

enum Piece {
    /// Circular arc: center, radius, start angle, signed sweep (radians).
    Arc {
        c: Point2<f64>,
        r: f64,
        theta0: f64,
        sweep: f64,
    },
    /// Straight segment from `a` towards unit direction `dir`, length `len`.
    Line {
        a: Point2<f64>,
        dir: Vector2<f64>,
        len: f64,
    },
}

impl Piece {
    fn len(&self) -> f64 {
        match self {
            Piece::Arc { r, sweep, .. } => r * sweep.abs(),
            Piece::Line { len, .. } => *len,
        }
    }

    /// Position and derivatives with respect to local arclength `ℓ ∈ [0,len]`.
    fn at(&self, l: f64) -> (Point2<f64>, Vector2<f64>, Vector2<f64>) {
        match self {
            Piece::Arc { c, r, theta0, sweep } => {
                let sgn = sweep.signum();
                let th = theta0 + sgn * l / r;
                let u = Vector2::new(th.cos(), th.sin());
                let e = Vector2::new(-th.sin(), th.cos());
                (c + *r * u, sgn * e, -u / *r)
            }
            Piece::Line { a, dir, .. } => (a + l * *dir, *dir, Vector2::zeros()),
        }
    }
}

impl PiecewiseCurve {
    fn new(pieces: Vec<Piece>, center: [f64; 2]) -> Self {
        let mut cumlen = vec![0.0];
        for p in &pieces {
            cumlen.push(cumlen.last().unwrap() + p.len());
        }
        PiecewiseCurve { pieces, cumlen, center: Vector2::new(center[0], center[1]) }
    }

    fn total_len(&self) -> f64 {
        *self.cumlen.last().unwrap()
    }

    fn locate(&self, u: f64) -> (&Piece, f64) {
        let total = self.total_len();
        let mut l = (u.rem_euclid(1.0)) * total;
        // Guard the exact-1.0 wrap.
        if l >= total {
            l = 0.0;
        }
        let mut idx = match self
            .cumlen
            .binary_search_by(|probe| probe.partial_cmp(&l).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        if idx >= self.pieces.len() {
            idx = self.pieces.len() - 1;
        }
        (&self.pieces[idx], l - self.cumlen[idx])
    }
}

impl ParamCurve for PiecewiseCurve {
    fn point(&self, u: f64) -> Point2<f64> {
        let (p, l) = self.locate(u);
        p.at(l).0 + self.center
    }
    fn d1(&self, u: f64) -> Vector2<f64> {
        let (p, l) = self.locate(u);
        p.at(l).1 * self.total_len()
    }
    fn d2(&self, u: f64) -> Vector2<f64> {
        let (p, l) = self.locate(u);
        p.at(l).2 * self.total_len() * self.total_len()
    }
}

/// C-shape: outer arc over polar angles `[φ, 2π−φ]` (counterclockwise), a cap
/// semicircle of radius `(R_out−R_in)/2` bulging into the opening, the inner
/// arc traversed with decreasing angle, and the second cap. G¹ and simple for
/// `0 < φ < π` and `R_out > R_in > 0`.
fn c_shape_pieces(r_out: f64, r_in: f64, phi: f64) -> Vec<Piece> {
    let r_cap = 0.5 * (r_out - r_in);
    let r_mid = 0.5 * (r_out + r_in);
    let theta1 = 2.0 * PI - phi;
    let u = |th: f64| Vector2::new(th.cos(), th.sin());
    vec![
        // Outer arc, CCW from φ to 2π−φ.
        Piece::Arc { c: Point2::origin(), r: r_out, theta0: phi, sweep: 2.0 * PI - 2.0 * phi },
        // Cap at θ1: semicircle around R_mid·u(θ1) from outer to inner rim.
        // In the local frame it starts at angle θ1 (radially outward) and
        // sweeps +π, so it bulges in the +e_θ(θ1) direction — into the gap.
        Piece::Arc {
            c: Point2::from(r_mid * u(theta1)),
            r: r_cap,
            theta0: theta1,
            sweep: PI,
        },
        // Inner arc, traversed with decreasing angle.
        Piece::Arc { c: Point2::origin(), r: r_in, theta0: theta1, sweep: -(2.0 * PI - 2.0 * phi) },
        // Cap at φ, from inner to outer rim, bulging in −e_θ(φ) — into the gap.
        Piece::Arc {
            c: Point2::from(r_mid * u(phi)),
            r: r_cap,
            theta0: phi + PI,
            sweep: PI,
        },
    ]
}

/// Stadium capsule, counterclockwise from the bottom-left corner.
fn cisterna_pieces(hl: f64, r: f64) -> Vec<Piece> {
    vec![
        Piece::Line { a: Point2::new(-hl, -r), dir: Vector2::new(1.0, 0.0), len: 2.0 * hl },
        Piece::Arc { c: Point2::new(hl, 0.0), r, theta0: -0.5 * PI, sweep: PI },
        Piece::Line { a: Point2::new(hl, r), dir: Vector2::new(-1.0, 0.0), len: 2.0 * hl },
        Piece::Arc { c: Point2::new(-hl, 0.0), r, theta0: 0.5 * PI, sweep: PI },
    ]
}

/// Builds the quadratic mesh for `spec` with `n_elements` elements. Endpoint
/// nodes sample the curve at uniform parameter; each midpoint node is the
/// orthogonal projection of the chord midpoint onto the analytic curve.
pub fn build_shape(spec: &ShapeSpec, n_elements: usize) -> Result<CurveMesh> {
    if n_elements < 8 {
        return Err(CurveflowError::InvalidShape(format!(
            "element count must be ≥ 8, got {n_elements}"
        )));
    }
    let mesh = match spec {
        ShapeSpec::Circle { radius, center } => {
            if *radius <= 0.0 {
                return Err(CurveflowError::InvalidShape("circle radius must be > 0".into()));
            }
            sample_curve(
                &Circle { r: *radius, c: Point2::new(center[0], center[1]) },
                n_elements,
            )?
        }
        ShapeSpec::Ellipse { a, b, center } => {
            if *a <= 0.0 || *b <= 0.0 {
                return Err(CurveflowError::InvalidShape("ellipse semi-axes must be > 0".into()));
            }
            sample_curve(
                &Ellipse { a: *a, b: *b, c: Point2::new(center[0], center[1]) },
                n_elements,
            )?
        }
        ShapeSpec::CShape { r_outer, r_inner, opening_angle, center } => {
            if !(*r_inner > 0.0 && r_outer > r_inner) {
                return Err(CurveflowError::InvalidShape(
                    "c_shape requires r_outer > r_inner > 0".into(),
                ));
            }
            if !(*opening_angle > 0.0 && *opening_angle < PI) {
                return Err(CurveflowError::InvalidShape(
                    "c_shape opening_angle must lie in (0, π)".into(),
                ));
            }
            sample_curve(
                &PiecewiseCurve::new(c_shape_pieces(*r_outer, *r_inner, *opening_angle), *center),
                n_elements,
            )?
        }
        ShapeSpec::Cisterna { half_length, half_thickness, center } => {
            if !(*half_length > 0.0 && *half_thickness > 0.0) {
                return Err(CurveflowError::InvalidShape(
                    "cisterna requires positive half_length and half_thickness".into(),
                ));
            }
            sample_curve(
                &PiecewiseCurve::new(cisterna_pieces(*half_length, *half_thickness), *center),
                n_elements,
            )?
        }
        ShapeSpec::Explicit { nodes } => {
            if nodes.len() != 2 * n_elements {
                return Err(CurveflowError::InvalidShape(format!(
                    "explicit node list has {} nodes but {} elements need {}",
                    nodes.len(),
                    n_elements,
                    2 * n_elements
                )));
            }
            CurveMesh::from_nodes(nodes.iter().map(|p| Point2::new(p[0], p[1])).collect())?
        }
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Places vertices at `u = i/n` and midpoints at the orthogonal projection of
/// the chord midpoint, found by Newton on the squared distance seeded at the
/// parametric midpoint.
fn sample_curve(curve: &dyn ParamCurve, n: usize) -> Result<CurveMesh> {
    let mut nodes = Vec::with_capacity(2 * n);
    for i in 0..n {
        let u0 = i as f64 / n as f64;
        let u1 = (i + 1) as f64 / n as f64;
        let v0 = curve.point(u0);
        let v1 = curve.point(u1);
        let chord_mid = nalgebra::center(&v0, &v1);
        let u_mid = project_to_curve(curve, chord_mid, 0.5 * (u0 + u1), 0.75 / n as f64);
        nodes.push(v0);
        nodes.push(curve.point(u_mid));
    }
    CurveMesh::from_nodes(nodes)
}

/// Newton minimization of `‖c(u) − target‖²` with step clamp `max_step`.
fn project_to_curve(curve: &dyn ParamCurve, target: Point2<f64>, seed: f64, max_step: f64) -> f64 {
    let mut u = seed;
    for _ in 0..30 {
        let r = curve.point(u) - target;
        let d1 = curve.d1(u);
        let d2 = curve.d2(u);
        let g1 = r.dot(&d1);
        let g2 = d1.dot(&d1) + r.dot(&d2);
        if g2.abs() < 1e-30 {
            break;
        }
        let step = (g1 / g2).clamp(-max_step, max_step);
        u -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    u
}
