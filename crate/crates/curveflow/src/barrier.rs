//! Smoothed obstacle regions: logistic half-plane primitives composed by
//! products (intersections) and sums (unions) into an indicator-like field
//! `1_B` with exact analytic gradient and Hessian.

use nalgebra::{Matrix2, Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::CurveflowError;
use crate::Result;

/// Default logistic sharpness per unit length: transition width ≈ 0.2 length
/// units, below the cisterna half-thickness in the stack presets.
pub const DEFAULT_SHARPNESS: f64 = 25.0;

fn default_sharpness() -> f64 {
    DEFAULT_SHARPNESS
}

/// A smoothed obstacle region. A `primitive` is one logistic half-plane
/// factor `σ(2k(direction·p − offset))`: ≈1 on the side the (unit) direction
/// points into beyond the offset line, ≈0 on the other side, ½ on the line
/// `direction·p = offset`. `product` intersects regions, `sum` unions
/// disjoint ones (values add).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BarrierSpec {
    Primitive {
        direction: [f64; 2],
        offset: f64,
        #[serde(default = "default_sharpness")]
        sharpness: f64,
    },
    Product { factors: Vec<BarrierSpec> },
    Sum { terms: Vec<BarrierSpec> },
}

/// Value, gradient and Hessian of the smoothed indicator at a point.
#[derive(Debug, Clone, Copy)]
pub struct IndicatorValue {
    pub value: f64,
    pub grad: Vector2<f64>,
    pub hess: Matrix2<f64>,
}

impl IndicatorValue {
    fn zero() -> Self {
        IndicatorValue { value: 0.0, grad: Vector2::zeros(), hess: Matrix2::zeros() }
    }

    fn one() -> Self {
        IndicatorValue { value: 1.0, grad: Vector2::zeros(), hess: Matrix2::zeros() }
    }
}

/// Overflow-safe logistic σ(z) = 1/(1+e^{−z}), saturating to 0/1 for |z|
/// large.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl BarrierSpec {
    /// Validates the tree: primitives need positive sharpness and a nonzero
    /// direction; combinators must be nonempty. Returns a copy with all
    /// primitive directions normalized to unit length.
    pub fn validated(&self) -> Result<BarrierSpec> {
        match self {
            BarrierSpec::Primitive { direction, offset, sharpness } => {
                let d = Vector2::new(direction[0], direction[1]);
                let norm = d.norm();
                if norm < 1e-12 {
                    return Err(CurveflowError::Validation(
                        "barrier primitive direction must be nonzero".into(),
                    ));
                }
                if *sharpness <= 0.0 {
                    return Err(CurveflowError::Validation(
                        "barrier primitive sharpness must be > 0".into(),
                    ));
                }
                let d = d / norm;
                Ok(BarrierSpec::Primitive {
                    direction: [d.x, d.y],
                    offset: *offset,
                    sharpness: *sharpness,
                })
            }
            BarrierSpec::Product { factors } => {
                if factors.is_empty() {
                    return Err(CurveflowError::Validation("barrier product is empty".into()));
                }
                let factors = factors.iter().map(|f| f.validated()).collect::<Result<_>>()?;
                Ok(BarrierSpec::Product { factors })
            }
            BarrierSpec::Sum { terms } => {
                if terms.is_empty() {
                    return Err(CurveflowError::Validation("barrier sum is empty".into()));
                }
                let terms = terms.iter().map(|t| t.validated()).collect::<Result<_>>()?;
                Ok(BarrierSpec::Sum { terms })
            }
        }
    }

    /// Visits every primitive in depth-first order, mutably.
    pub fn for_each_primitive_mut(&mut self, f: &mut impl FnMut(&mut [f64; 2], &mut f64, &mut f64)) {
        match self {
            BarrierSpec::Primitive { direction, offset, sharpness } => {
                f(direction, offset, sharpness)
            }
            BarrierSpec::Product { factors } => {
                for fac in factors {
                    fac.for_each_primitive_mut(f);
                }
            }
            BarrierSpec::Sum { terms } => {
                for t in terms {
                    t.for_each_primitive_mut(f);
                }
            }
        }
    }

    /// Collects `(direction, offset)` of every primitive in depth-first order
    /// (used by frame sidecars and the moving-barrier rule).
    pub fn primitives(&self) -> Vec<([f64; 2], f64)> {
        let mut out = Vec::new();
        let mut clone = self.clone();
        clone.for_each_primitive_mut(&mut |d, o, _| out.push((*d, *o)));
        out
    }
}

/// Evaluates the smoothed indicator with exact analytic first and second
/// derivatives of the logistic composition.
pub fn indicator_eval(barrier: &BarrierSpec, p: Point2<f64>) -> IndicatorValue {
    match barrier {
        BarrierSpec::Primitive { direction, offset, sharpness } => {
            let n = Vector2::new(direction[0], direction[1]);
            let z = 2.0 * sharpness * (n.dot(&p.coords) - offset);
            let s = sigmoid(z);
            // σ′ = σ(1−σ), σ″ = σ(1−σ)(1−2σ), chain factor 2k per derivative.
            let s1 = s * (1.0 - s);
            let s2 = s1 * (1.0 - 2.0 * s);
            let c = 2.0 * sharpness;
            IndicatorValue {
                value: s,
                grad: (s1 * c) * n,
                hess: (s2 * c * c) * (n * n.transpose()),
            }
        }
        BarrierSpec::Product { factors } => {
            let mut acc = IndicatorValue::one();
            for f in factors {
                let b = indicator_eval(f, p);
                // (ab)″ = a″b + 2a′⊗b′ + ab″, accumulated pairwise.
                let hess = acc.hess * b.value
                    + b.hess * acc.value
                    + acc.grad * b.grad.transpose()
                    + b.grad * acc.grad.transpose();
                let grad = acc.grad * b.value + b.grad * acc.value;
                acc = IndicatorValue { value: acc.value * b.value, grad, hess };
            }
            acc
        }
        BarrierSpec::Sum { terms } => {
            let mut acc = IndicatorValue::zero();
            for t in terms {
                let b = indicator_eval(t, p);
                acc.value += b.value;
                acc.grad += b.grad;
                acc.hess += b.hess;
            }
            acc
        }
    }
}
