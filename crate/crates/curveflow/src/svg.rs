//! SVG rendering of scenario frames. Each quadratic element is drawn as the
//! quadratic Bézier through its three nodes; barrier planes are dashed
//! lines. World y points up, so coordinates are y-flipped for SVG.

use std::path::Path;

use nalgebra::{Point2, Vector2};

use crate::barrier::BarrierSpec;
use crate::mesh::CurveMesh;
use crate::Result;

/// World-space view window shared by every frame of a scenario, so that
/// animations do not jitter.
#[derive(Debug, Clone, Copy)]
pub struct ViewBox {
    pub min_x: f64,
    pub min_y: f64,
    pub width: f64,
    pub height: f64,
}

const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Control point of the quadratic Bézier that passes through `p0`, `pm`
/// (at parameter ½) and `p2`.
pub(crate) fn bezier_control(
    p0: Point2<f64>,
    pm: Point2<f64>,
    p2: Point2<f64>,
) -> Point2<f64> {
    Point2::from(2.0 * pm.coords - 0.5 * (p0.coords + p2.coords))
}

/// Computes a fixed world-space window containing all meshes, the nearby
/// part of each barrier plane, and a fractional margin.
pub fn scene_viewbox(
    meshes: &[&CurveMesh],
    barrier: Option<&BarrierSpec>,
    margin_fraction: f64,
) -> ViewBox {
    fn include(min: &mut Vector2<f64>, max: &mut Vector2<f64>, p: Point2<f64>) {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    let mut min = Vector2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Vector2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for mesh in meshes {
        for p in mesh.nodes() {
            include(&mut min, &mut max, *p);
        }
    }
    let center = Point2::from(0.5 * (min + max));
    if let Some(b) = barrier {
        for (direction, offset) in b.primitives() {
            let d = Vector2::new(direction[0], direction[1]);
            // Point of the plane d·p = offset closest to the scene centre.
            let foot = center + (offset - d.dot(&center.coords)) * d;
            include(&mut min, &mut max, foot);
        }
    }
    let size = max - min;
    let pad = margin_fraction * size.x.max(size.y).max(1e-6);
    ViewBox {
        min_x: min.x - pad,
        min_y: -(max.y + pad),
        width: size.x + 2.0 * pad,
        height: size.y + 2.0 * pad,
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

/// Renders one frame. Every vesicle becomes one closed path of quadratic
/// Bézier segments; every barrier primitive becomes a dashed line group.
pub fn render_svg(meshes: &[&CurveMesh], barrier: Option<&BarrierSpec>, vb: &ViewBox) -> String {
    let stroke = 0.012 * vb.width.max(vb.height);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
        fmt(vb.min_x),
        fmt(vb.min_y),
        fmt(vb.width),
        fmt(vb.height)
    ));

    if let Some(b) = barrier {
        let diag = (vb.width.powi(2) + vb.height.powi(2)).sqrt();
        let center = Point2::new(vb.min_x + 0.5 * vb.width, -(vb.min_y + 0.5 * vb.height));
        for (direction, offset) in b.primitives() {
            let d = Vector2::new(direction[0], direction[1]);
            let foot = center + (offset - d.dot(&center.coords)) * d;
            let along = Vector2::new(-d.y, d.x);
            let a = foot - diag * along;
            let b2 = foot + diag * along;
            out.push_str(&format!(
                "  <g class=\"barrier\" stroke=\"#555555\" stroke-width=\"{}\" stroke-dasharray=\"{} {}\">\n    <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n  </g>\n",
                fmt(0.8 * stroke),
                fmt(3.0 * stroke),
                fmt(2.0 * stroke),
                fmt(a.x),
                fmt(-a.y),
                fmt(b2.x),
                fmt(-b2.y)
            ));
        }
    }

    for (k, mesh) in meshes.iter().enumerate() {
        let nodes = mesh.nodes();
        let n_nodes = nodes.len();
        let mut path = String::new();
        let start = nodes[0];
        path.push_str(&format!("M {} {}", fmt(start.x), fmt(-start.y)));
        for e in 0..mesh.n_elements() {
            let p0 = nodes[2 * e];
            let pm = nodes[2 * e + 1];
            let p2 = nodes[(2 * e + 2) % n_nodes];
            let c = bezier_control(p0, pm, p2);
            path.push_str(&format!(
                " Q {} {} {} {}",
                fmt(c.x),
                fmt(-c.y),
                fmt(p2.x),
                fmt(-p2.y)
            ));
        }
        path.push_str(" Z");
        out.push_str(&format!(
            "  <path class=\"vesicle\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" d=\"{}\"/>\n",
            PALETTE[k % PALETTE.len()],
            fmt(stroke),
            path
        ));
    }

    out.push_str("</svg>\n");
    out
}

/// Writes `frame_<step>.svg` into `dir`.
pub fn write_svg(
    dir: &Path,
    step: usize,
    meshes: &[&CurveMesh],
    barrier: Option<&BarrierSpec>,
    vb: &ViewBox,
) -> Result<()> {
    std::fs::write(dir.join(format!("frame_{step:06}.svg")), render_svg(meshes, barrier, vb))?;
    Ok(())
}
