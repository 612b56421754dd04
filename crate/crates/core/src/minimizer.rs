//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! The two-loop recursion follows Liu & Nocedal; the line search is the
//! bracketing/zoom scheme with safeguarded cubic interpolation. The solver
//! stops on a small gradient max-norm, on a small objective value (the
//! packing penalty has a known minimum of zero), on the iteration budget, or
//! when the line search cannot make progress.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{Instance, Layout};
use crate::penalty::PenaltyField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerConfig {
    /// Number of correction pairs kept.
    pub memory: usize,
    pub max_iters: usize,
    /// Stop when the gradient max-norm falls to this value.
    pub grad_tol: f64,
    /// Stop when the objective falls to this value.
    pub energy_tol: f64,
    /// Sufficient-decrease constant.
    pub wolfe_c1: f64,
    /// Curvature constant.
    pub wolfe_c2: f64,
    /// Trial points per line search.
    pub max_line_search: usize,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl MinimizerConfig {
    /// Budget for polishing an accepted solution.
    pub fn full() -> Self {
        Self {
            memory: 7,
            max_iters: 500,
            grad_tol: 1e-10,
            energy_tol: 1e-22,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_line_search: 30,
        }
    }

    /// Cheap budget used to screen neighbors.
    pub fn screening() -> Self {
        Self {
            max_iters: 50,
            ..Self::full()
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    fn validate(&self) {
        assert!(self.memory >= 1, "memory must be at least 1");
        assert!(
            0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0,
            "need 0 < c1 < c2 < 1"
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    ConvergedGrad,
    ConvergedEnergy,
    MaxIters,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub status: Status,
    pub iterations: usize,
    pub evaluations: usize,
}

/// A differentiable scalar field. `evaluate` writes the gradient into `grad`
/// and returns the value.
pub trait Objective {
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl<F> Objective for F
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        self(x, grad)
    }
}

impl Objective for PenaltyField<'_> {
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.eval(x, grad).energy
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

struct Correction {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: `d = -H g`.
fn search_direction(history: &VecDeque<Correction>, g: &[f64], d: &mut [f64]) {
    for (di, gi) in d.iter_mut().zip(g) {
        *di = -gi;
    }
    let mut alpha = vec![0.0; history.len()];
    for (k, c) in history.iter().enumerate().rev() {
        let a = c.rho * dot(&c.s, d);
        alpha[k] = a;
        for (di, yi) in d.iter_mut().zip(&c.y) {
            *di -= a * yi;
        }
    }
    if let Some(last) = history.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        for di in d.iter_mut() {
            *di *= gamma;
        }
    }
    for (k, c) in history.iter().enumerate() {
        let b = c.rho * dot(&c.y, d);
        for (di, si) in d.iter_mut().zip(&c.s) {
            *di += (alpha[k] - b) * si;
        }
    }
}

struct Trial {
    step: f64,
    value: f64,
    slope: f64,
}

struct LineSearch<'a, O: Objective> {
    obj: &'a mut O,
    cfg: &'a MinimizerConfig,
    x: &'a [f64],
    d: &'a [f64],
    f0: f64,
    slope0: f64,
    xt: Vec<f64>,
    gt: Vec<f64>,
    evaluations: usize,
    remaining: usize,
    /// Lowest value seen (step, value) for graceful failure.
    best: Option<(f64, f64)>,
}

impl<O: Objective> LineSearch<'_, O> {
    fn probe(&mut self, step: f64) -> Option<Trial> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        for ((xt, x), d) in self.xt.iter_mut().zip(self.x).zip(self.d) {
            *xt = x + step * d;
        }
        let value = self.obj.evaluate(&self.xt, &mut self.gt);
        self.evaluations += 1;
        let slope = dot(&self.gt, self.d);
        if value.is_finite()
            && slope.is_finite()
            && all_finite(&self.gt)
            && value < self.f0
            && self.best.is_none_or(|(_, v)| value < v)
        {
            self.best = Some((step, value));
        }
        Some(Trial { step, value, slope })
    }

    fn armijo(&self, t: &Trial) -> bool {
        t.value <= self.f0 + self.cfg.wolfe_c1 * t.step * self.slope0
    }

    fn curvature(&self, t: &Trial) -> bool {
        t.slope.abs() <= -self.cfg.wolfe_c2 * self.slope0
    }

    /// Returns an accepted step satisfying the strong Wolfe conditions. On
    /// success `xt`/`gt` hold the point and gradient at that step.
    fn run(&mut self, initial: f64) -> Option<Trial> {
        let mut prev = Trial {
            step: 0.0,
            value: self.f0,
            slope: self.slope0,
        };
        let mut step = initial;
        let mut first = true;
        loop {
            let mut t = self.probe(step)?;
            // non-finite: shrink toward the last good step
            let mut shrinks = 0;
            while !(t.value.is_finite() && t.slope.is_finite()) {
                shrinks += 1;
                if shrinks > 30 {
                    return None;
                }
                step = prev.step + 0.5 * (step - prev.step);
                t = self.probe(step)?;
            }
            if !self.armijo(&t) || (!first && t.value >= prev.value) {
                return self.zoom(prev, t);
            }
            if self.curvature(&t) {
                return Some(t);
            }
            if t.slope >= 0.0 {
                return self.zoom(t, prev);
            }
            first = false;
            step = t.step * 2.0;
            if step > 1e20 {
                return None;
            }
            prev = t;
        }
    }

    fn zoom(&mut self, mut lo: Trial, mut hi: Trial) -> Option<Trial> {
        loop {
            let width = (hi.step - lo.step).abs();
            if width <= f64::EPSILON * lo.step.abs().max(1e-300) {
                return None;
            }
            let step = interpolate(&lo, &hi);
            let t = self.probe(step)?;
            if !(t.value.is_finite() && t.slope.is_finite()) {
                hi = t;
                continue;
            }
            if !self.armijo(&t) || t.value >= lo.value {
                hi = t;
            } else {
                if self.curvature(&t) {
                    return Some(t);
                }
                if t.slope * (hi.step - lo.step) >= 0.0 {
                    hi = lo;
                }
                lo = t;
            }
        }
    }
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`,
/// safeguarded to the inner 80% of the interval; falls back to bisection.
fn interpolate(a: &Trial, b: &Trial) -> f64 {
    let (lo, hi) = if a.step < b.step { (a, b) } else { (b, a) };
    let span = hi.step - lo.step;
    let mut t = f64::NAN;
    if a.value.is_finite() && b.value.is_finite() && a.slope.is_finite() && b.slope.is_finite() {
        let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
        let disc = d1 * d1 - a.slope * b.slope;
        if disc >= 0.0 {
            let d2 = disc.sqrt().copysign(b.step - a.step);
            let denom = b.slope - a.slope + 2.0 * d2;
            if denom != 0.0 {
                t = b.step - (b.step - a.step) * (b.slope + d2 - d1) / denom;
            }
        }
    }
    let lower = lo.step + 0.1 * span;
    let upper = hi.step - 0.1 * span;
    if t.is_finite() {
        t.clamp(lower, upper)
    } else {
        0.5 * (lo.step + hi.step)
    }
}

/// Minimizes `objective` from `start`.
///
/// The returned value never exceeds the value at `start`. Fails only when
/// the objective is non-finite at `start`.
pub fn minimize<O: Objective>(
    objective: &mut O,
    start: &[f64],
    cfg: &MinimizerConfig,
) -> Result<Minimum> {
    cfg.validate();
    let n = start.len();
    let mut x = start.to_vec();
    let mut g = vec![0.0; n];
    let mut f = objective.evaluate(&x, &mut g);
    let mut evaluations = 1;
    if !(f.is_finite() && all_finite(&g)) {
        return Err(Error::NonFiniteObjective);
    }

    let mut history: VecDeque<Correction> = VecDeque::with_capacity(cfg.memory);
    let mut d = vec![0.0; n];
    let mut iterations = 0;

    let finish = |x: Vec<f64>, value, status, iterations, evaluations| {
        Ok(Minimum {
            point: x,
            value,
            status,
            iterations,
            evaluations,
        })
    };

    loop {
        if max_norm(&g) <= cfg.grad_tol {
            return finish(x, f, Status::ConvergedGrad, iterations, evaluations);
        }
        if f <= cfg.energy_tol {
            return finish(x, f, Status::ConvergedEnergy, iterations, evaluations);
        }
        if iterations >= cfg.max_iters {
            return finish(x, f, Status::MaxIters, iterations, evaluations);
        }

        search_direction(&history, &g, &mut d);
        let mut slope = dot(&g, &d);
        if slope.is_nan() || slope >= 0.0 || !all_finite(&d) {
            history.clear();
            search_direction(&history, &g, &mut d);
            slope = dot(&g, &d);
        }
        let initial = if history.is_empty() {
            (1.0 / max_norm(&g)).min(1.0)
        } else {
            1.0
        };

        let mut ls = LineSearch {
            obj: objective,
            cfg,
            x: &x,
            d: &d,
            f0: f,
            slope0: slope,
            xt: vec![0.0; n],
            gt: vec![0.0; n],
            evaluations: 0,
            remaining: cfg.max_line_search,
            best: None,
        };
        let accepted = ls.run(initial);
        evaluations += ls.evaluations;
        let best = ls.best;
        let (xt, gt) = (std::mem::take(&mut ls.xt), std::mem::take(&mut ls.gt));

        let Some(t) = accepted else {
            if !history.is_empty() {
                // retry once along steepest descent
                history.clear();
                continue;
            }
            // keep the best point the failed search found
            if let Some((step, _)) = best {
                let xb: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
                let mut gb = vec![0.0; n];
                let fb = objective.evaluate(&xb, &mut gb);
                evaluations += 1;
                if fb < f {
                    return finish(xb, fb, Status::LineSearchFailed, iterations, evaluations);
                }
            }
            return finish(x, f, Status::LineSearchFailed, iterations, evaluations);
        };

        debug_assert!(t.value <= f + cfg.wolfe_c1 * t.step * slope);
        debug_assert!(t.slope.abs() <= -cfg.wolfe_c2 * slope);
        debug_assert!(t.value <= f);

        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back(Correction { s, y, rho: 1.0 / sy });
        }
        x = xt;
        g = gt;
        f = t.value;
        iterations += 1;
    }
}

/// Re-optimizes the centers of `lay` against the penalty energy at the
/// layout's (fixed) dimension.
pub fn polish(inst: &Instance, lay: &Layout, cfg: &MinimizerConfig) -> Result<Layout> {
    let mut field = PenaltyField::for_instance(inst, lay.dimension);
    polish_with(&mut field, lay, cfg)
}

/// Polishes against an arbitrary penalty field (subsets, padded radii).
pub fn polish_with(field: &mut PenaltyField<'_>, lay: &Layout, cfg: &MinimizerConfig) -> Result<Layout> {
    let start = lay.to_coords();
    let min = minimize(field, &start, cfg)?;
    Ok(Layout::from_coords(&min.point, lay.dimension))
}
