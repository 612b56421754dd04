//! Post-processing of a search result.
//!
//! The open dimension is bisected in `[d - C, d + C]`; every probe is
//! re-optimized by a short tabu search starting from the previous probe's
//! centers. The smallest feasible probe is then inflated in small steps
//! until the layout is feasible with no tolerance at all, and the dimension
//! is reported rounded up to four decimals.

use rand::Rng;

use crate::error::{Error, Result};
use crate::minimizer::{polish_with, MinimizerConfig};
use crate::model::{is_feasible, ContainerSpec, FeasibilityTolerance, Instance, Layout, Point};
use crate::penalty::PenaltyField;
use crate::tabu::{tabu_search, TabuConfig};
use crate::trace::{Event, Phase, TraceSink};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinishConfig {
    /// Half-width `C` of the initial bisection bracket.
    pub bracket_c: f64,
    /// Bisection stops when the bracket is narrower than this.
    pub bisect_tol: f64,
    /// Dimension increment of the inflation loop.
    pub inflate_step: f64,
    pub report_decimals: i32,
    /// Stall limit of the tabu search run at each probe.
    pub probe_stall_limit: usize,
    /// Times `C` may be doubled when the upper bracket is infeasible.
    pub max_bracket_doublings: u32,
    pub max_inflations: usize,
    /// Radius padding used while inflating, so that the final layout is
    /// strictly feasible rather than feasible up to round-off.
    pub inflate_pad: f64,
    /// Lower report values tried after rounding.
    pub max_settle_steps: usize,
    /// Finest decimal grid coordinates are snapped to when certifying.
    pub snap_decimals: i32,
}

impl Default for FinishConfig {
    fn default() -> Self {
        Self {
            bracket_c: 1.0,
            bisect_tol: 1e-4,
            inflate_step: 1e-5,
            report_decimals: 4,
            probe_stall_limit: 5,
            max_bracket_doublings: 4,
            max_inflations: 100_000,
            inflate_pad: 1e-10,
            max_settle_steps: 10,
            snap_decimals: 10,
        }
    }
}

/// Outcome of [`finish`].
#[derive(Debug, Clone, PartialEq)]
pub struct Finished {
    /// Final layout; its dimension is the reported one.
    pub layout: Layout,
    /// Reported dimension, a multiple of `10^-report_decimals`.
    pub dimension: f64,
    /// Dimension at the end of the inflation loop, before rounding.
    pub unrounded: f64,
    /// Number of bisection probes.
    pub probes: usize,
}

/// No constraint violated at all, in floating point as written.
pub fn is_strictly_feasible(inst: &Instance, lay: &Layout) -> bool {
    is_feasible(inst, lay, FeasibilityTolerance::STRICT)
}

/// Smallest `k / 10^decimals` (as the nearest double) that is `>= value`.
pub fn ceil_decimals(value: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    let mut k = (value * scale).floor() - 1.0;
    loop {
        let v = k / scale;
        if v >= value {
            return v;
        }
        k += 1.0;
    }
}

/// Smallest 4-decimal value `>= dimension` at which `lay` is strictly
/// feasible. Falls back to plain ceiling when a pairwise overlap makes the
/// layout infeasible at every dimension.
pub fn round_report(dimension: f64, lay: &Layout, inst: &Instance) -> f64 {
    round_report_with(dimension, lay, inst, 4)
}

pub fn round_report_with(dimension: f64, lay: &Layout, inst: &Instance, decimals: i32) -> f64 {
    let first = ceil_decimals(dimension, decimals);
    let start = ceil_decimals(dimension.max(tight_dimension(inst, lay)), decimals);
    let scale = 10f64.powi(decimals);
    let k0 = (start * scale).round();
    for step in 0..100 {
        let v = (k0 + step as f64) / scale;
        if is_strictly_feasible(inst, &lay.with_dimension(v)) {
            return v;
        }
    }
    first
}

/// Smallest open dimension at which the centers of `lay` satisfy every
/// containment constraint.
pub fn tight_dimension(inst: &Instance, lay: &Layout) -> f64 {
    let radii = inst.radii();
    let reach = lay
        .centers
        .iter()
        .zip(radii)
        .map(|(c, &r)| match inst.container() {
            ContainerSpec::Strip { .. } => r + c.x.abs(),
            ContainerSpec::Disc => r + c.norm(),
        })
        .fold(0.0, f64::max);
    match inst.container() {
        ContainerSpec::Strip { .. } => 2.0 * reach,
        ContainerSpec::Disc => reach,
    }
}

/// Moves the layout to a canonical position: a strip layout is centered
/// along its length, a disc layout is rotated so the largest circle lies on
/// the positive x axis.
pub fn canonicalize(inst: &Instance, lay: &Layout) -> Layout {
    let radii = inst.radii();
    let centers = match inst.container() {
        ContainerSpec::Strip { .. } => {
            let hi = lay
                .centers
                .iter()
                .zip(radii)
                .map(|(c, r)| c.x + r)
                .fold(f64::NEG_INFINITY, f64::max);
            let lo = lay
                .centers
                .iter()
                .zip(radii)
                .map(|(c, r)| c.x - r)
                .fold(f64::INFINITY, f64::min);
            let shift = -0.5 * (hi + lo);
            lay.centers
                .iter()
                .map(|c| Point::new(c.x + shift, c.y))
                .collect()
        }
        ContainerSpec::Disc => {
            let lead = lay.centers[0];
            let rho = lead.norm();
            if rho == 0.0 {
                lay.centers.clone()
            } else {
                let (cos, sin) = (lead.x / rho, lead.y / rho);
                lay.centers
                    .iter()
                    .map(|c| Point::new(c.x * cos + c.y * sin, c.y * cos - c.x * sin))
                    .collect()
            }
        }
    };
    Layout::new(centers, lay.dimension)
}

/// Rounds every coordinate to `decimals` places.
pub fn snap(lay: &Layout, decimals: i32) -> Layout {
    let places = decimals.max(0) as usize;
    let q = |v: f64| -> f64 {
        let s = format!("{v:.places$}");
        let q: f64 = s.parse().expect("formatted float parses");
        // avoid negative zero in output
        q + 0.0
    };
    Layout::new(
        lay.centers.iter().map(|c| Point::new(q(c.x), q(c.y))).collect(),
        lay.dimension,
    )
}

fn inflate_budget() -> MinimizerConfig {
    MinimizerConfig {
        energy_tol: 1e-24,
        grad_tol: 0.0,
        ..MinimizerConfig::full()
    }
}

fn exact_budget() -> MinimizerConfig {
    MinimizerConfig {
        energy_tol: 0.0,
        grad_tol: 0.0,
        max_iters: 2000,
        ..MinimizerConfig::full()
    }
}

fn padded_polish(inst: &Instance, lay: &Layout, pad: f64, budget: &MinimizerConfig) -> Result<Layout> {
    let mut field = PenaltyField::for_instance(inst, lay.dimension).with_pad(pad);
    polish_with(&mut field, lay, budget)
}

/// Bisection on the open dimension followed by inflation to strict
/// feasibility. Returns the strictly feasible layout and its dimension.
pub fn post_process<R: Rng + ?Sized>(
    inst: &Instance,
    lay: &Layout,
    cfg: &FinishConfig,
    tabu: &TabuConfig,
    rng: &mut R,
    sink: &mut dyn TraceSink,
) -> Result<(Layout, f64, usize)> {
    lay.check(inst)?;
    let mut probe_cfg = *tabu;
    probe_cfg.stall_limit = cfg.probe_stall_limit;
    let tol = tabu.tolerance;
    let mut probes = 0;

    let mut c = cfg.bracket_c;
    let mut doublings = 0;
    let (mut upper, mut upper_layout) = loop {
        let upper = lay.dimension + c;
        let out = tabu_search(inst, &lay.with_dimension(upper), &probe_cfg, rng, None, sink)?;
        probes += 1;
        sink.record(&Event::new(Phase::Probe, probes as u64, out.energy, out.energy, upper));
        if out.is_feasible(tol) {
            break (upper, out.layout);
        }
        if doublings == cfg.max_bracket_doublings {
            return Err(Error::NoFeasibleBracket { tried: upper });
        }
        doublings += 1;
        c *= 2.0;
    };
    let mut lower = (lay.dimension - cfg.bracket_c).max(0.0);

    let mut x = lay.clone();
    while upper - lower >= cfg.bisect_tol {
        let mid = 0.5 * (upper + lower);
        let out = tabu_search(inst, &x.with_dimension(mid), &probe_cfg, rng, None, sink)?;
        probes += 1;
        sink.record(&Event::new(Phase::Probe, probes as u64, out.energy, out.energy, mid));
        x = out.layout.clone();
        if out.is_feasible(tol) {
            upper = mid;
            upper_layout = out.layout;
        } else {
            lower = mid;
        }
    }

    let mut dim = upper;
    if let Some(done) = certify(inst, &upper_layout, cfg) {
        return Ok((done, dim, probes));
    }
    let mut current = upper_layout;
    for step in 0..cfg.max_inflations {
        dim += cfg.inflate_step;
        let (found, padded) = settle_at(inst, &current, dim, cfg)?;
        sink.record(&Event::new(Phase::Inflate, step as u64, f64::NAN, f64::NAN, dim));
        if let Some(done) = found {
            return Ok((done, dim, probes));
        }
        current = padded;
    }
    Err(Error::NoFeasibleBracket { tried: dim })
}

/// The first strictly feasible layout among `lay`, its canonical form and
/// the canonical form snapped to successively coarser decimal grids.
/// Snapping recovers optima whose coordinates are short decimals, which
/// floating point minimization only reaches up to round-off.
fn certify(inst: &Instance, lay: &Layout, cfg: &FinishConfig) -> Option<Layout> {
    if is_strictly_feasible(inst, lay) {
        return Some(lay.clone());
    }
    let canonical = canonicalize(inst, lay);
    if is_strictly_feasible(inst, &canonical) {
        return Some(canonical);
    }
    (4..=cfg.snap_decimals.max(4))
        .rev()
        .step_by(2)
        .map(|d| snap(&canonical, d))
        .find(|s| is_strictly_feasible(inst, s))
}

/// Tries to make `lay` strictly feasible at exactly `dimension`. Also
/// returns the padded polish, the starting point for a further attempt.
fn settle_at(
    inst: &Instance,
    lay: &Layout,
    dimension: f64,
    cfg: &FinishConfig,
) -> Result<(Option<Layout>, Layout)> {
    let start = lay.with_dimension(dimension);
    let padded = padded_polish(inst, &start, cfg.inflate_pad, &inflate_budget())?;
    if is_strictly_feasible(inst, &padded) {
        return Ok((Some(padded.clone()), padded));
    }
    let exact = padded_polish(inst, &start, 0.0, &exact_budget())?;
    let found = certify(inst, &exact, cfg).or_else(|| certify(inst, &padded, cfg));
    Ok((found, padded))
}

/// Full post-processing: [`post_process`], rounding of the reported
/// dimension, then attempts to certify the next lower report values.
pub fn finish<R: Rng + ?Sized>(
    inst: &Instance,
    lay: &Layout,
    cfg: &FinishConfig,
    tabu: &TabuConfig,
    rng: &mut R,
    sink: &mut dyn TraceSink,
) -> Result<Finished> {
    let (strict, unrounded, probes) = post_process(inst, lay, cfg, tabu, rng, sink)?;
    let tight = tight_dimension(inst, &strict);
    let mut dimension = round_report_with(tight, &strict, inst, cfg.report_decimals);
    let mut layout = strict.with_dimension(dimension);
    debug_assert!(is_strictly_feasible(inst, &layout));

    let scale = 10f64.powi(cfg.report_decimals);
    let mut k = (dimension * scale).round();
    for _ in 0..cfg.max_settle_steps {
        k -= 1.0;
        let lower = k / scale;
        if lower <= 0.0 {
            break;
        }
        match settle_at(inst, &layout, lower, cfg)?.0 {
            Some(settled) => {
                dimension = lower;
                layout = settled;
            }
            None => break,
        }
    }

    Ok(Finished {
        layout,
        dimension,
        unrounded,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_instance;
    use crate::trace::NoTrace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ceil_to_four_decimals() {
        assert_eq!(ceil_decimals(2f64.sqrt(), 4), 1.4143);
        assert_eq!(ceil_decimals(2.0, 4), 2.0);
        assert_eq!(ceil_decimals(17.07815, 4), 17.0782);
        assert_eq!(ceil_decimals(2.0001, 4), 2.0001);
        assert_eq!(ceil_decimals(1.4143, 4), 1.4143);
    }

    #[test]
    fn round_report_examples() {
        let inst = make_instance(&[0.5], ContainerSpec::strip(1.0)).unwrap();
        let lay = Layout::new(vec![Point::ORIGIN], 2f64.sqrt());
        assert_eq!(round_report(2f64.sqrt(), &lay, &inst), 1.4143);
        assert_eq!(format!("{:.4}", round_report(2.0, &lay, &inst)), "2.0000");
        // a layout that needs more room than the rounded value
        let off = Layout::new(vec![Point::new(0.6, 0.0)], 2.0);
        assert_eq!(round_report(2.0, &off, &inst), 2.2);
    }

    #[test]
    fn tight_dimension_of_row() {
        let inst = make_instance(&[1.0, 1.0], ContainerSpec::strip(2.0)).unwrap();
        let lay = Layout::new(vec![Point::new(-1.0, 0.0), Point::new(1.5, 0.0)], 9.0);
        assert_eq!(tight_dimension(&inst, &lay), 5.0);
        let disc = make_instance(&[1.0, 2.0], ContainerSpec::Disc).unwrap();
        let lay = Layout::new(vec![Point::new(3.0, 4.0), Point::ORIGIN], 9.0);
        assert_eq!(tight_dimension(&disc, &lay), 7.0);
    }

    #[test]
    fn canonical_disc_layout_is_axis_aligned() {
        let inst = make_instance(&[1.0, 1.0], ContainerSpec::Disc).unwrap();
        let lay = Layout::new(vec![Point::new(0.6, 0.8), Point::new(-0.6, -0.8)], 2.0);
        let c = canonicalize(&inst, &lay);
        assert!((c.centers[0].x - 1.0).abs() < 1e-15 && c.centers[0].y.abs() < 1e-15);
        assert!((c.centers[1].x + 1.0).abs() < 1e-15 && c.centers[1].y.abs() < 1e-15);
    }

    #[test]
    fn snapping_rounds_coordinates() {
        let lay = Layout::new(vec![Point::new(0.99999999999997, -1e-14)], 1.0);
        let s = snap(&lay, 10);
        assert_eq!(s.centers[0], Point::new(1.0, 0.0));
        assert!(s.centers[0].y.is_sign_positive());
    }

    fn finish_single(container: ContainerSpec, incoming: f64) -> Finished {
        let inst = make_instance(&[1.0], container).unwrap();
        let lay = Layout::new(vec![Point::new(0.05, 0.0)], incoming);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        finish(&inst, &lay, &FinishConfig::default(), &TabuConfig::default(), &mut rng, &mut NoTrace)
            .unwrap()
    }

    #[test]
    fn single_circle_strip_shrinks_to_diameter() {
        let inst = make_instance(&[1.0], ContainerSpec::strip(2.0)).unwrap();
        let lay = Layout::new(vec![Point::new(0.3, 0.0)], 2.3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (strict, dim, _) = post_process(
            &inst,
            &lay,
            &FinishConfig::default(),
            &TabuConfig::default(),
            &mut rng,
            &mut NoTrace,
        )
        .unwrap();
        assert!((dim - 2.0).abs() < 2e-4, "{dim}");
        assert!(dim >= 2.0);
        assert!(is_strictly_feasible(&inst, &strict.with_dimension(dim)));

        let f = finish_single(ContainerSpec::strip(2.0), 2.3);
        assert_eq!(format!("{:.4}", f.dimension), "2.0000");
        assert!(is_strictly_feasible(&inst, &f.layout));
    }

    #[test]
    fn single_circle_disc_shrinks_to_radius() {
        let f = finish_single(ContainerSpec::Disc, 1.5);
        assert_eq!(format!("{:.4}", f.dimension), "1.0000");
    }

    #[test]
    fn optimal_input_stays_close() {
        let inst = make_instance(&[1.0, 1.0], ContainerSpec::strip(2.0)).unwrap();
        let lay = Layout::new(vec![Point::new(-1.0, 0.0), Point::new(1.0, 0.0)], 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = finish(&inst, &lay, &FinishConfig::default(), &TabuConfig::default(), &mut rng, &mut NoTrace)
            .unwrap();
        assert!(f.dimension <= 4.0 + 1e-4 + 10.0 * 1e-5);
        assert!(is_strictly_feasible(&inst, &f.layout));
    }
}
