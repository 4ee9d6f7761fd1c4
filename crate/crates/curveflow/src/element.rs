//! Reference element: quadratic Lagrange basis on `[0,1]` with nodes
//! `{0, ½, 1}`, plus Gauss–Legendre quadrature rules on `[0,1]`.

/// Number of nodes per quadratic element.
pub const NODES_PER_ELEMENT: usize = 3;

/// Evaluates the three quadratic Lagrange shape functions and their parameter
/// derivatives at `s ∈ [0,1]`. Basis k is 1 at node k ∈ {0, ½, 1} and 0 at
/// the other two nodes.
pub fn eval_reference_basis(s: f64) -> ([f64; 3], [f64; 3]) {
    let values = [
        (2.0 * s - 1.0) * (s - 1.0), // 2(s-½)(s-1)
        4.0 * s * (1.0 - s),         // -4s(s-1)
        s * (2.0 * s - 1.0),         // 2s(s-½)
    ];
    let derivs = [4.0 * s - 3.0, 4.0 - 8.0 * s, 4.0 * s - 1.0];
    (values, derivs)
}

/// Second parameter derivatives of the basis (constant for quadratics).
pub const BASIS_SECOND_DERIV: [f64; 3] = [4.0, -8.0, 4.0];

/// A Gauss–Legendre rule mapped to `[0,1]`. An `m`-point rule integrates
/// polynomials up to degree `2m−1` exactly.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Builds the `m`-point rule. Nodes are computed as Legendre-polynomial
    /// roots by Newton iteration from Chebyshev initial guesses; this is exact
    /// to machine precision for the small `m` used here.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "quadrature rule needs at least one point");
        let mut points = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for i in 0..m {
            // Root of P_m on [-1,1], then mapped to [0,1].
            let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_deriv(m, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_deriv(m, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            points.push(0.5 * (x + 1.0));
            weights.push(0.5 * w);
        }
        GaussRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Legendre polynomial `P_m(x)` and its derivative via the three-term
/// recurrence.
fn legendre_with_deriv(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Reference element data cached at the quadrature points of a rule:
/// basis values and parameter derivatives per point.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub rule: GaussRule,
    /// `basis[q][k]` = shape function k at quadrature point q.
    pub basis: Vec<[f64; 3]>,
    /// `dbasis[q][k]` = parameter derivative of shape function k at point q.
    pub dbasis: Vec<[f64; 3]>,
}

impl ReferenceElement {
    pub fn new(quad_points: usize) -> Self {
        let rule = GaussRule::new(quad_points);
        let (basis, dbasis) = rule
            .points
            .iter()
            .map(|&s| eval_reference_basis(s))
            .unzip();
        ReferenceElement { rule, basis, dbasis }
    }

    /// The production rule: 4-point Gauss (degree-7 exact), sufficient for
    /// products of quadratic bases and derivatives with curved jacobians.
    pub fn production() -> Self {
        ReferenceElement::new(4)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronecker_property_at_nodes() {
        for (k, s) in [0.0, 0.5, 1.0].into_iter().enumerate() {
            let (vals, _) = eval_reference_basis(s);
            for j in 0..3 {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert_relative_eq!(vals[j], expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn quarter_point_values() {
        let (vals, _) = eval_reference_basis(0.25);
        assert_relative_eq!(vals[0], 3.0 / 8.0, epsilon = 1e-15);
        assert_relative_eq!(vals[1], 3.0 / 4.0, epsilon = 1e-15);
        assert_relative_eq!(vals[2], -1.0 / 8.0, epsilon = 1e-15);
    }

    #[test]
    fn partition_of_unity_and_derivative_sum() {
        for i in 0..=20 {
            let s = i as f64 / 20.0;
            let (vals, ders) = eval_reference_basis(s);
            assert_relative_eq!(vals.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            assert_relative_eq!(ders.iter().sum::<f64>(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        // 10 fixed "random" parameters in (0,1).
        let params = [
            0.0712, 0.1893, 0.2731, 0.3517, 0.4441, 0.5623, 0.6289, 0.7417, 0.8533, 0.9371,
        ];
        let eps = 1e-6;
        for &s in &params {
            let (_, ders) = eval_reference_basis(s);
            let (vp, _) = eval_reference_basis(s + eps);
            let (vm, _) = eval_reference_basis(s - eps);
            for k in 0..3 {
                let fd = (vp[k] - vm[k]) / (2.0 * eps);
                assert!(
                    (fd - ders[k]).abs() < 1e-8,
                    "basis {k} derivative mismatch at s={s}: fd={fd}, exact={}",
                    ders[k]
                );
            }
        }
    }

    #[test]
    fn gauss_rule_degree_exactness() {
        // m-point rule integrates x^p on [0,1] exactly for p <= 2m-1.
        for m in 1..=8 {
            let rule = GaussRule::new(m);
            assert_relative_eq!(rule.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            for p in 0..=(2 * m - 1) {
                let quad: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&x, &w)| w * x.powi(p as i32))
                    .sum();
                let exact = 1.0 / (p as f64 + 1.0);
                assert_relative_eq!(quad, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn four_point_rule_not_exact_beyond_degree_seven() {
        // Sanity that degree-7 exactness is sharp for the production rule.
        let rule = GaussRule::new(4);
        let quad: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * x.powi(8))
            .sum();
        assert!((quad - 1.0 / 9.0).abs() > 1e-10);
    }

    #[test]
    fn second_derivative_constants() {
        let eps = 1e-5;
        for &s in &[0.2, 0.5, 0.8] {
            let (_, dp) = eval_reference_basis(s + eps);
            let (_, dm) = eval_reference_basis(s - eps);
            for k in 0..3 {
                let fd = (dp[k] - dm[k]) / (2.0 * eps);
                assert_relative_eq!(fd, BASIS_SECOND_DERIV[k], epsilon = 1e-7);
            }
        }
    }
}
