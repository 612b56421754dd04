//! Text formats for instances and solutions.
//!
//! Instance file: first meaningful line `strip W` or `disc`, then one radius
//! per line. `#` starts a comment, blank lines are ignored.
//!
//! Solution file: `dimension D`, `feasible 0|1`, then one `x y` line per
//! circle in input order. Coordinates use the shortest decimal form that
//! parses back to the same double, so a written file re-validates exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ContainerSpec, Instance, Layout, Point};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn meaningful_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((i + 1, body))
    })
}

fn parse_number(line: usize, token: &str, what: &str) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| parse_err(line, format!("expected {what}, found `{token}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{what} must be finite")));
    }
    Ok(v)
}

/// Parses an instance file. Returns radii in input order and the container.
pub fn parse_instance_parts(text: &str) -> Result<(Vec<f64>, ContainerSpec)> {
    let mut lines = meaningful_lines(text);
    let (first_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing container line (`strip W` or `disc`)"))?;
    let mut words = header.split_whitespace();
    let container = match words.next() {
        Some("strip") => {
            let w = words
                .next()
                .ok_or_else(|| parse_err(first_line, "`strip` needs a width"))?;
            ContainerSpec::strip(parse_number(first_line, w, "strip width")?)
        }
        Some("disc") => ContainerSpec::Disc,
        Some(other) => {
            return Err(parse_err(
                first_line,
                format!("unknown container `{other}`, expected `strip W` or `disc`"),
            ))
        }
        None => unreachable!("meaningful lines are non-empty"),
    };
    if let Some(extra) = words.next() {
        return Err(parse_err(first_line, format!("unexpected `{extra}` after container")));
    }

    let mut radii = Vec::new();
    for (line, body) in lines {
        let mut words = body.split_whitespace();
        let token = words.next().expect("non-empty");
        if words.next().is_some() {
            return Err(parse_err(line, "expected a single radius per line"));
        }
        let r = parse_number(line, token, "radius")?;
        if r <= 0.0 {
            return Err(parse_err(line, format!("radius {r} must be positive")));
        }
        radii.push(r);
    }
    if radii.is_empty() {
        return Err(parse_err(first_line, "instance lists no radii"));
    }
    Ok((radii, container))
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let (radii, container) = parse_instance_parts(text)?;
    Instance::new(&radii, container)
}

pub fn write_instance(inst: &Instance) -> String {
    let mut out = match inst.container() {
        ContainerSpec::Strip { width } => format!("strip {width}\n"),
        ContainerSpec::Disc => "disc\n".to_string(),
    };
    for r in inst.input_radii() {
        let _ = writeln!(out, "{r}");
    }
    out
}

/// A solution as stored on disk: centers in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub dimension: f64,
    pub feasible: bool,
    pub centers: Vec<Point>,
}

impl Solution {
    /// Builds a record from a solver layout (sorted order).
    pub fn from_layout(inst: &Instance, lay: &Layout, feasible: bool) -> Self {
        Self {
            dimension: lay.dimension,
            feasible,
            centers: inst.to_input_order(&lay.centers),
        }
    }

    /// Back to a solver layout, checking the circle count.
    pub fn to_layout(&self, inst: &Instance) -> Result<Layout> {
        if self.centers.len() != inst.len() {
            return Err(Error::LayoutMismatch {
                expected: inst.len(),
                got: self.centers.len(),
            });
        }
        Ok(Layout::new(inst.from_input_order(&self.centers), self.dimension))
    }
}

/// `{:.4}` when that is exact, otherwise the shortest round-trip form.
pub fn format_dimension(d: f64) -> String {
    let four = format!("{d:.4}");
    if four.parse::<f64>().ok() == Some(d) {
        four
    } else {
        format!("{d}")
    }
}

pub fn write_solution(sol: &Solution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dimension {}", format_dimension(sol.dimension));
    let _ = writeln!(out, "feasible {}", u8::from(sol.feasible));
    for c in &sol.centers {
        // `+ 0.0` turns -0 into 0
        let _ = writeln!(out, "{} {}", c.x + 0.0, c.y + 0.0);
    }
    out
}

fn keyed<'a>(line: Option<(usize, &'a str)>, key: &str, last: usize) -> Result<(usize, &'a str)> {
    let (n, body) = line.ok_or_else(|| parse_err(last + 1, format!("missing `{key}` line")))?;
    let mut words = body.split_whitespace();
    if words.next() != Some(key) {
        return Err(parse_err(n, format!("expected `{key} <value>`")));
    }
    let value = words
        .next()
        .ok_or_else(|| parse_err(n, format!("`{key}` needs a value")))?;
    if words.next().is_some() {
        return Err(parse_err(n, format!("trailing text after `{key}`")));
    }
    Ok((n, value))
}

pub fn parse_solution(text: &str) -> Result<Solution> {
    let mut lines = meaningful_lines(text);
    let (n, value) = keyed(lines.next(), "dimension", 0)?;
    let dimension = parse_number(n, value, "dimension")?;
    let (n, value) = keyed(lines.next(), "feasible", n)?;
    let feasible = match value {
        "0" => false,
        "1" => true,
        other => return Err(parse_err(n, format!("feasible flag must be 0 or 1, found `{other}`"))),
    };
    let mut centers = Vec::new();
    for (line, body) in lines {
        let words: Vec<&str> = body.split_whitespace().collect();
        if words.len() != 2 {
            return Err(parse_err(line, "expected `x y`"));
        }
        centers.push(Point::new(
            parse_number(line, words[0], "x coordinate")?,
            parse_number(line, words[1], "y coordinate")?,
        ));
    }
    Ok(Solution {
        dimension,
        feasible,
        centers,
    })
}
