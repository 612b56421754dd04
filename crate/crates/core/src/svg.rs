//! SVG drawing of a layout, to scale.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ContainerSpec, Instance, Layout};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    /// Output pixels per length unit.
    pub scale: f64,
    pub margin: f64,
    /// Write each circle's rank in the radius order at its center.
    pub labels: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            scale: 40.0,
            margin: 10.0,
            labels: false,
        }
    }
}

fn num(v: f64) -> String {
    let s = format!("{:.3}", v);
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Renders `lay` (sorted order) for `inst`.
pub fn render(inst: &Instance, lay: &Layout, opts: &SvgOptions) -> Result<String> {
    if lay.len() != inst.len() {
        return Err(Error::LayoutMismatch {
            expected: inst.len(),
            got: lay.len(),
        });
    }
    let s = opts.scale;
    let m = opts.margin;
    let (half_w, half_h) = match inst.container() {
        ContainerSpec::Strip { width } => (0.5 * lay.dimension, 0.5 * width),
        ContainerSpec::Disc => (lay.dimension, lay.dimension),
    };
    // circles may stick out of an infeasible layout, so fit them too
    let (mut ext_x, mut ext_y) = (half_w, half_h);
    for (c, r) in lay.centers.iter().zip(inst.radii()) {
        ext_x = ext_x.max(c.x.abs() + r);
        ext_y = ext_y.max(c.y.abs() + r);
    }
    let width = 2.0 * ext_x * s + 2.0 * m;
    let height = 2.0 * ext_y * s + 2.0 * m;
    // flip y so that +y points up
    let px = |x: f64| m + (x + ext_x) * s;
    let py = |y: f64| m + (ext_y - y) * s;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(width),
        num(height),
        num(width),
        num(height)
    );
    match inst.container() {
        ContainerSpec::Strip { .. } => {
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
                num(px(-half_w)),
                num(py(half_h)),
                num(2.0 * half_w * s),
                num(2.0 * half_h * s)
            );
        }
        ContainerSpec::Disc => {
            let _ = writeln!(
                out,
                r#"<circle class="container" cx="{}" cy="{}" r="{}" fill="none" stroke="black"/>"#,
                num(px(0.0)),
                num(py(0.0)),
                num(lay.dimension * s)
            );
        }
    }
    for (k, (c, r)) in lay.centers.iter().zip(inst.radii()).enumerate() {
        let _ = writeln!(
            out,
            r##"<circle cx="{}" cy="{}" r="{}" fill="#9cc3e6" stroke="#1f4e79"/>"##,
            num(px(c.x)),
            num(py(c.y)),
            num(r * s)
        );
        if opts.labels {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" font-size="{}" text-anchor="middle" dominant-baseline="central">{}</text>"#,
                num(px(c.x)),
                num(py(c.y)),
                num((r * s).min(12.0)),
                k + 1
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
