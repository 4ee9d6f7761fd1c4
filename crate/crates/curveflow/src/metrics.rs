//! CSV outputs: the per-step metrics table and node-coordinate frames.
//! All floating-point values are printed with 17 significant digits so that
//! files are byte-identical across runs and parse back to the same bits.

use std::io::Write;
use std::path::Path;

use nalgebra::Point2;

use crate::barrier::BarrierSpec;
use crate::error::CurveflowError;
use crate::mesh::CurveMesh;
use crate::Result;

/// Formats `x` with 17 significant digits, in fixed or scientific notation
/// following the C `%.17g` rules, with trailing zeroes trimmed. 17 digits
/// are enough for a bit-exact `f64` round trip.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    if x < 0.0 {
        return format!("-{}", fmt_g17(-x));
    }
    // 17 significant digits: one before the point, sixteen after.
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    debug_assert_eq!(digits.len(), 17);

    if exp < -4 || exp >= 17 {
        let trimmed = digits.trim_end_matches('0');
        let (head, tail) = trimmed.split_at(1);
        let mantissa = if tail.is_empty() {
            head.to_string()
        } else {
            format!("{head}.{tail}")
        };
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else if exp >= 0 {
        let cut = (exp + 1) as usize;
        let int_part = &digits[..cut];
        let frac = digits[cut..].trim_end_matches('0');
        if frac.is_empty() {
            int_part.to_string()
        } else {
            format!("{int_part}.{frac}")
        }
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        let frac = digits.trim_end_matches('0');
        format!("0.{zeros}{frac}")
    }
}

/// One row of the metrics table: one vesicle at one completed step.
#[derive(Debug, Clone, Copy)]
pub struct MetricsRow {
    pub step: usize,
    pub t: f64,
    pub vesicle: usize,
    pub length: f64,
    pub w: f64,
    pub h_b: f64,
    pub d: f64,
    pub j: f64,
    pub lambda: f64,
    pub newton_iters: usize,
}

pub const METRICS_HEADER: &str = "step,t,vesicle,length,W,H_B,D,J,lambda,newton_iters";

/// Renders the metrics table as CSV text.
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.step,
            fmt_g17(r.t),
            r.vesicle,
            fmt_g17(r.length),
            fmt_g17(r.w),
            fmt_g17(r.h_b),
            fmt_g17(r.d),
            fmt_g17(r.j),
            fmt_g17(r.lambda),
            r.newton_iters,
        ));
    }
    out
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(metrics_csv(rows).as_bytes())?;
    Ok(())
}

pub const FRAME_HEADER: &str = "vesicle,node,x,y,is_midpoint";

/// Renders all vesicle meshes of one frame as CSV text. Odd global node
/// indices are element midpoints.
pub fn frame_csv(meshes: &[&CurveMesh]) -> String {
    let mut out = String::new();
    out.push_str(FRAME_HEADER);
    out.push('\n');
    for (v, mesh) in meshes.iter().enumerate() {
        for (i, p) in mesh.nodes().iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                v,
                i,
                fmt_g17(p.x),
                fmt_g17(p.y),
                i % 2,
            ));
        }
    }
    out
}

/// Writes `frame_<step>.csv` (and `barrier_<step>.json` when a barrier is
/// present) into `dir`.
pub fn write_frame(
    dir: &Path,
    step: usize,
    t: f64,
    meshes: &[&CurveMesh],
    barrier: Option<&BarrierSpec>,
) -> Result<()> {
    let mut f = std::fs::File::create(dir.join(format!("frame_{step:06}.csv")))?;
    f.write_all(frame_csv(meshes).as_bytes())?;
    if let Some(b) = barrier {
        let primitives: Vec<serde_json::Value> = b
            .primitives()
            .into_iter()
            .map(|(direction, offset)| {
                serde_json::json!({ "direction": direction, "offset": offset })
            })
            .collect();
        let doc = serde_json::json!({ "step": step, "t": t, "primitives": primitives });
        let mut g = std::fs::File::create(dir.join(format!("barrier_{step:06}.json")))?;
        g.write_all(serde_json::to_string_pretty(&doc)?.as_bytes())?;
        g.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses frame CSV text back into per-vesicle node lists.
pub fn read_frame(text: &str) -> Result<Vec<Vec<Point2<f64>>>> {
    let mut vesicles: Vec<Vec<Point2<f64>>> = Vec::new();
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == FRAME_HEADER => {}
        other => {
            return Err(CurveflowError::Parse(format!(
                "bad frame header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(CurveflowError::Parse(format!("frame line {}: {} columns", ln + 2, cols.len())));
        }
        let v: usize = cols[0]
            .parse()
            .map_err(|e| CurveflowError::Parse(format!("frame line {}: {e}", ln + 2)))?;
        let x: f64 = cols[2]
            .parse()
            .map_err(|e| CurveflowError::Parse(format!("frame line {}: {e}", ln + 2)))?;
        let y: f64 = cols[3]
            .parse()
            .map_err(|e| CurveflowError::Parse(format!("frame line {}: {e}", ln + 2)))?;
        if v >= vesicles.len() {
            vesicles.resize(v + 1, Vec::new());
        }
        vesicles[v].push(Point2::new(x, y));
    }
    Ok(vesicles)
}
