//! Finite-difference verification of the assembled shape derivatives: each
//! first-variation vector is paired against a central difference of its
//! functional under seeded random smooth perturbation fields, at the
//! configured resolution and at double resolution.

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{
    assemble_dD_terms, assemble_dH_terms, assemble_div_form, assemble_dW_operator, DofMap,
};
use crate::config::ScenarioConfig;
use crate::distance::distance_field;
use crate::functionals::{
    barrier_functional, discrete_curvature, distance_functional, willmore_energy,
};
use crate::mesh::CurveMesh;
use crate::shapes::build_shape;
use crate::stepper::FlowModel;
use crate::Result;

/// Central-difference displacement size.
pub const FD_EPSILON: f64 = 1e-5;
/// Number of seeded perturbation fields per check.
pub const FD_FIELDS: usize = 5;
/// Relative accuracy demanded at the fine resolution.
pub const FD_TOLERANCE: f64 = 1e-3;
/// Errors below this floor need not halve under refinement: all four
/// derivatives are same-quadrature identities, so their mismatch sits at
/// the O(ε²·f‴) central-difference truncation level (≈1e-8 for the mode-4
/// perturbation fields), which does not shrink with the mesh.
pub const FD_FLOOR: f64 = 1e-6;

/// One derivative-vs-difference comparison at two resolutions.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: &'static str,
    pub n_coarse: usize,
    pub n_fine: usize,
    /// Worst relative error over the perturbation fields, coarse mesh.
    pub err_coarse: f64,
    /// Worst relative error over the perturbation fields, fine mesh.
    pub err_fine: f64,
    pub passed: bool,
}

/// A smooth random nodal field: a low-order Fourier series in the periodic
/// node index with seeded coefficients, scaled to unit maximum amplitude.
pub fn random_smooth_field(n_nodes: usize, seed: u64) -> Vec<Vector2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = Vec::new();
    for m in 1..=4u32 {
        let damp = 1.0 / m as f64;
        coeffs.push((
            m as f64,
            [
                damp * rng.random_range(-1.0..1.0),
                damp * rng.random_range(-1.0..1.0),
                damp * rng.random_range(-1.0..1.0),
                damp * rng.random_range(-1.0..1.0),
            ],
        ));
    }
    let mut field = vec![Vector2::zeros(); n_nodes];
    for (i, f) in field.iter_mut().enumerate() {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / n_nodes as f64;
        for (m, [acx, asx, acy, asy]) in &coeffs {
            let (s, c) = (m * theta).sin_cos();
            f.x += acx * c + asx * s;
            f.y += acy * c + asy * s;
        }
    }
    let peak = field.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-30);
    for f in &mut field {
        *f /= peak;
    }
    field
}

/// Central difference of `functional` along the pure nodal displacement
/// `phi` (midpoints are *not* re-adjusted, matching the variation the
/// assembled derivatives represent).
fn fd_derivative(
    mesh: &CurveMesh,
    phi: &[Vector2<f64>],
    functional: &dyn Fn(&CurveMesh) -> Result<f64>,
) -> Result<f64> {
    let fp = functional(&mesh.displaced(phi, FD_EPSILON))?;
    let fm = functional(&mesh.displaced(phi, -FD_EPSILON))?;
    Ok((fp - fm) / (2.0 * FD_EPSILON))
}

struct RowSpec<'a> {
    name: &'static str,
    /// Assembles the derivative vector (gradient w.r.t. packed node dofs).
    gradient: Box<dyn Fn(&CurveMesh) -> Result<nalgebra::DVector<f64>> + 'a>,
    /// Evaluates the functional whose derivative it claims to be.
    functional: Box<dyn Fn(&CurveMesh, &CurveMesh) -> Result<f64> + 'a>,
}

fn row_errors(mesh: &CurveMesh, spec: &RowSpec, seed: u64) -> Result<f64> {
    let g = (spec.gradient)(mesh)?;
    let map = DofMap::new(mesh);
    let mut worst = 0.0_f64;
    for k in 0..FD_FIELDS as u64 {
        let phi = random_smooth_field(mesh.n_nodes(), seed.wrapping_add(k));
        let lhs = g.dot(&map.pack(&phi));
        let rhs = fd_derivative(mesh, &phi, &|m| (spec.functional)(m, mesh))?;
        let scale = rhs.abs().max(lhs.abs()).max(1e-9);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Ok(worst)
}

/// Runs the derivative checks described by a scenario config: always the
/// length derivative and the Willmore first variation on the first shape;
/// the barrier derivative when a barrier is configured; the repulsion
/// derivative when the scenario has other vesicles. Each check runs at the
/// configured element count and at double that count; it passes when the
/// fine error is below tolerance and either halved from the coarse error or
/// sits at the exactness floor.
pub fn derivative_check(cfg: &ScenarioConfig) -> Result<Vec<CheckLine>> {
    let n = cfg.shapes[0].elements;
    let seed = cfg.output.seed;
    let barrier = cfg.barrier.as_ref().map(|b| b.spec.clone());
    let others: Vec<CurveMesh> = cfg.shapes[1..]
        .iter()
        .map(|s| build_shape(&s.shape, s.elements))
        .collect::<Result<_>>()?;

    let mut rows: Vec<RowSpec> = vec![
        RowSpec {
            name: "dA",
            gradient: Box::new(|m| Ok(assemble_div_form(m))),
            functional: Box::new(|m, _| Ok(m.length())),
        },
        RowSpec {
            name: "dW1",
            gradient: Box::new(|m| {
                let h = discrete_curvature(m)?;
                let a_w = assemble_dW_operator(m);
                Ok(&a_w * DofMap::new(m).pack(&h))
            }),
            functional: Box::new(|m, _| willmore_energy(m)),
        },
    ];
    if let Some(b) = &barrier {
        rows.push(RowSpec {
            name: "g_H",
            gradient: Box::new(move |m| Ok(assemble_dH_terms(m, b, 1.0).1)),
            functional: Box::new(move |m, _| Ok(barrier_functional(m, b))),
        });
    }
    if cfg.model == FlowModel::Model3 && !others.is_empty() {
        let refs: Vec<&CurveMesh> = others.iter().collect();
        let refs2 = refs.clone();
        rows.push(RowSpec {
            name: "g_D",
            // The witness field is frozen on the *base* mesh of each
            // evaluation; the displaced meshes reuse it, matching the
            // variation the assembled derivative represents.
            gradient: Box::new(move |m| {
                let field = distance_field(m, &refs)?;
                Ok(assemble_dD_terms(m, &field, 1.0)?.1)
            }),
            functional: Box::new(move |m, base| {
                let field = distance_field(base, &refs2)?;
                distance_functional(m, &field)
            }),
        });
    }

    let coarse = build_shape(&cfg.shapes[0].shape, n)?;
    let fine = build_shape(&cfg.shapes[0].shape, 2 * n)?;
    let mut lines = Vec::with_capacity(rows.len());
    for spec in &rows {
        let err_coarse = row_errors(&coarse, spec, seed)?;
        let err_fine = row_errors(&fine, spec, seed.wrapping_add(1000))?;
        let passed = err_fine <= FD_TOLERANCE
            && (err_fine <= 0.5 * err_coarse || err_fine <= FD_FLOOR);
        lines.push(CheckLine {
            name: spec.name,
            n_coarse: n,
            n_fine: 2 * n,
            err_coarse,
            err_fine,
            passed,
        });
    }
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;

    #[test]
    fn smooth_field_is_seeded_and_normalized() {
        let a = random_smooth_field(64, 42);
        let b = random_smooth_field(64, 42);
        let c = random_smooth_field(64, 43);
        assert_eq!(a.len(), 64);
        for (p, q) in a.iter().zip(b.iter()) {
            assert_eq!(p, q);
        }
        assert!(a.iter().zip(c.iter()).any(|(p, q)| p != q));
        let peak = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-12);
        // Smoothness: neighbouring values differ by O(1/n).
        for w in a.windows(2) {
            assert!((w[1] - w[0]).norm() < 0.6);
        }
    }

    #[test]
    fn model1_rows_pass_on_an_ellipse() {
        let cfg = parse_config_str(
            r#"{
              "version": 1,
              "model": "model1",
              "shapes": [{ "shape": { "type": "ellipse", "a": 2.0, "b": 1.0 }, "elements": 64 }],
              "tau": 1e-4,
              "epsilon": 1e-8,
              "max_iters": 1
            }"#,
        )
        .unwrap();
        let lines = derivative_check(&cfg).unwrap();
        assert_eq!(lines.len(), 2);
        for line in &lines {
            assert!(
                line.passed,
                "{}: coarse {:.3e} fine {:.3e}",
                line.name, line.err_coarse, line.err_fine
            );
        }
        // dA is a same-quadrature identity: error at the FD noise floor.
        let da = &lines[0];
        assert!(da.err_fine < 1e-6, "dA error {:.3e}", da.err_fine);
    }

    #[test]
    fn barrier_and_repulsion_rows_pass() {
        let cfg = parse_config_str(
            r#"{
              "version": 1,
              "model": "model3",
              "shapes": [
                { "shape": { "type": "circle", "radius": 1.0, "center": [0.0, 0.3] }, "elements": 24 },
                { "shape": { "type": "circle", "radius": 0.8, "center": [3.0, 0.0] }, "elements": 16 }
              ],
              "tau": 1e-4,
              "alpha": 1.0,
              "beta": 1.0,
              "epsilon": 1e-8,
              "max_iters": 1,
              "barrier": {
                "spec": { "type": "primitive", "direction": [0.0, 1.0], "offset": 0.9 }
              }
            }"#,
        )
        .unwrap();
        let lines = derivative_check(&cfg).unwrap();
        let names: Vec<_> = lines.iter().map(|l| l.name).collect();
        assert_eq!(names, vec!["dA", "dW1", "g_H", "g_D"]);
        for line in &lines {
            assert!(
                line.passed,
                "{}: coarse {:.3e} fine {:.3e}",
                line.name, line.err_coarse, line.err_fine
            );
        }
        // The penalty gradients are same-quadrature identities as well.
        assert!(lines[2].err_fine < 1e-6, "g_H error {:.3e}", lines[2].err_fine);
        assert!(lines[3].err_fine < 1e-6, "g_D error {:.3e}", lines[3].err_fine);
    }
}
