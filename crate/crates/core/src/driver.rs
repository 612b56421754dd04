//! The iterated tabu search loop.
//!
//! The open dimension is fixed up front. Each outer round starts from a
//! random layout and runs tabu search; in `Its` mode the incumbent is then
//! repeatedly perturbed and re-searched, replacing it only on strict energy
//! improvement, until it is feasible or has not improved for
//! `accept_stall_limit` perturbations. Rounds repeat until a feasible layout
//! is found or the time budget runs out.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::finisher::{self, FinishConfig, Finished};
use crate::model::{random_layout, ContainerSpec, FeasibilityTolerance, Instance, Layout};
use crate::perturb::{accept, perturb, PerturbConfig};
use crate::tabu::{tabu_search, TabuConfig, TabuOutcome};
use crate::trace::{Event, Phase, TraceSink};

/// Packing density assumed by [`default_dimension`].
pub const DEFAULT_DENSITY: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Tabu search with perturbation and acceptance.
    Its,
    /// Tabu search relaunched from random layouts only.
    MultistartTs,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Its => "its",
            Mode::MultistartTs => "multistart-ts",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "its" => Ok(Mode::Its),
            "multistart-ts" | "multistart_ts" => Ok(Mode::MultistartTs),
            other => Err(format!("unknown mode `{other}` (expected its or multistart-ts)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Pre-set open dimension; [`default_dimension`] when `None`.
    pub target_dimension: Option<f64>,
    pub time_budget: Duration,
    pub seed: u64,
    pub tabu: TabuConfig,
    pub perturb: PerturbConfig,
    pub finish: FinishConfig,
    pub mode: Mode,
    pub tolerance: FeasibilityTolerance,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            target_dimension: None,
            time_budget: Duration::from_secs(60),
            seed: 0,
            tabu: TabuConfig::default(),
            perturb: PerturbConfig::default(),
            finish: FinishConfig::default(),
            mode: Mode::Its,
            tolerance: FeasibilityTolerance::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best_layout: Layout,
    pub best_energy: f64,
    /// Best layout is feasible within the solver tolerance.
    pub feasible: bool,
    pub ts_launch_count: u64,
    pub perturbation_count: u64,
    pub restart_count: u64,
    pub elapsed: Duration,
}

/// Heuristic open dimension used when no target is supplied: the size at
/// which the circles would fill the container at [`DEFAULT_DENSITY`],
/// floored at the largest diameter.
pub fn default_dimension(inst: &Instance) -> f64 {
    let floor = 2.0 * inst.max_radius();
    match inst.container() {
        ContainerSpec::Strip { width } => {
            let area: f64 = inst
                .radii()
                .iter()
                .map(|r| std::f64::consts::PI * r * r)
                .sum();
            (area / (DEFAULT_DENSITY * width)).max(floor)
        }
        ContainerSpec::Disc => {
            let sq: f64 = inst.radii().iter().map(|r| r * r).sum();
            (sq / DEFAULT_DENSITY).sqrt().max(floor)
        }
    }
}

struct Run<'a> {
    inst: &'a Instance,
    params: &'a SolverParams,
    rng: ChaCha8Rng,
    deadline: Instant,
    best: Option<TabuOutcome>,
    ts_launch_count: u64,
    perturbation_count: u64,
    restart_count: u64,
    sink: &'a mut dyn TraceSink,
}

impl Run<'_> {
    fn expired(&self) -> bool {
        Instant::now() >= self.deadline
    }

    fn feasible(&self, out: &TabuOutcome) -> bool {
        out.is_feasible(self.params.tolerance)
    }

    fn search(&mut self, start: &Layout) -> Result<TabuOutcome> {
        let mut tabu = self.params.tabu;
        tabu.tolerance = self.params.tolerance;
        let out = tabu_search(
            self.inst,
            start,
            &tabu,
            &mut self.rng,
            Some(self.deadline),
            &mut *self.sink,
        )?;
        self.ts_launch_count += 1;
        if self.best.as_ref().is_none_or(|b| out.energy < b.energy) {
            self.best = Some(out.clone());
        }
        self.emit(Phase::TabuDone, out.energy, start.dimension);
        Ok(out)
    }

    fn emit(&mut self, phase: Phase, energy: f64, dimension: f64) {
        let best = self.best.as_ref().map_or(f64::INFINITY, |b| b.energy);
        let event = Event::new(phase, self.ts_launch_count, energy, best, dimension);
        self.sink.record(&event);
    }

    fn execute(&mut self, dimension: f64) -> Result<()> {
        let mut first = true;
        loop {
            if !first {
                if self.expired() {
                    break;
                }
                self.restart_count += 1;
            }
            first = false;

            let start = random_layout(self.inst, dimension, &mut self.rng);
            self.emit(Phase::Init, f64::NAN, dimension);
            let mut incumbent = self.search(&start)?;
            if self.feasible(&incumbent) {
                break;
            }

            if self.params.mode == Mode::Its {
                let mut failures = 0;
                while !self.feasible(&incumbent)
                    && failures < self.params.perturb.accept_stall_limit
                    && !self.expired()
                {
                    let perturbed = perturb(
                        self.inst,
                        &incumbent.layout,
                        &self.params.perturb,
                        &mut self.rng,
                    )?;
                    self.perturbation_count += 1;
                    self.emit(Phase::Perturb, f64::NAN, dimension);
                    let candidate = self.search(&perturbed)?;
                    if accept(incumbent.energy, candidate.energy) {
                        self.emit(Phase::Accept, candidate.energy, dimension);
                        incumbent = candidate;
                        failures = 0;
                    } else {
                        self.emit(Phase::Reject, candidate.energy, dimension);
                        failures += 1;
                    }
                }
                if self.feasible(&incumbent) {
                    break;
                }
            }
        }
        Ok(())
    }
}

/// Runs the search at the pre-set dimension and returns the lowest-energy
/// layout found across all rounds.
pub fn solve(inst: &Instance, params: &SolverParams, sink: &mut dyn TraceSink) -> Result<RunResult> {
    if params.time_budget.is_zero() {
        return Err(Error::ZeroTimeBudget);
    }
    // re-validate the width in case the instance was built elsewhere
    if let ContainerSpec::Strip { width } = inst.container() {
        let diameter = 2.0 * inst.max_radius();
        if width < diameter {
            return Err(Error::InfeasibleByWidth { width, diameter });
        }
    }
    let dimension = params
        .target_dimension
        .unwrap_or_else(|| default_dimension(inst));
    if !(dimension.is_finite() && dimension > 0.0) {
        return Err(Error::InvalidDimension(dimension));
    }

    let started = Instant::now();
    let mut run = Run {
        inst,
        params,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        deadline: started + params.time_budget,
        best: None,
        ts_launch_count: 0,
        perturbation_count: 0,
        restart_count: 0,
        sink,
    };
    run.execute(dimension)?;

    let best = run.best.take().expect("at least one tabu search ran");
    let feasible = best.is_feasible(params.tolerance);
    run.emit(Phase::Done, best.energy, dimension);
    Ok(RunResult {
        best_energy: best.energy,
        best_layout: best.layout,
        feasible,
        ts_launch_count: run.ts_launch_count,
        perturbation_count: run.perturbation_count,
        restart_count: run.restart_count,
        elapsed: started.elapsed(),
    })
}

/// [`solve`] followed by [`finish_run`].
pub fn solve_and_finish(
    inst: &Instance,
    params: &SolverParams,
    sink: &mut dyn TraceSink,
) -> Result<(RunResult, Finished)> {
    let run = solve(inst, params, sink)?;
    let finished = finish_run(inst, params, &run, sink)?;
    Ok((run, finished))
}

/// Post-processes the best layout of `run`, whether or not the search
/// reached feasibility.
pub fn finish_run(
    inst: &Instance,
    params: &SolverParams,
    run: &RunResult,
    sink: &mut dyn TraceSink,
) -> Result<Finished> {
    // the finisher gets its own stream so its work does not depend on how
    // many random numbers the time-bounded search consumed
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut tabu = params.tabu;
    tabu.tolerance = params.tolerance;
    finisher::finish(inst, &run.best_layout, &params.finish, &tabu, &mut rng, sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_feasible, make_instance, FeasibilityTolerance};
    use crate::trace::NoTrace;

    fn params(target: f64, secs: f64, seed: u64) -> SolverParams {
        SolverParams {
            target_dimension: Some(target),
            time_budget: Duration::from_secs_f64(secs),
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn default_dimension_examples() {
        let one = make_instance(&[1.0], ContainerSpec::strip(2.0)).unwrap();
        assert_eq!(default_dimension(&one), 2.0);
        let two = make_instance(&[1.0, 1.0], ContainerSpec::strip(2.0)).unwrap();
        let expected = 2.0 * std::f64::consts::PI / 1.7;
        assert!((default_dimension(&two) - expected).abs() < 1e-12);
        assert!((default_dimension(&two) - 3.6960).abs() < 1e-4);
        let disc = make_instance(&[1.0], ContainerSpec::Disc).unwrap();
        assert_eq!(default_dimension(&disc), 2.0);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("its".parse::<Mode>().unwrap(), Mode::Its);
        assert_eq!("multistart-ts".parse::<Mode>().unwrap(), Mode::MultistartTs);
        assert!("ts".parse::<Mode>().is_err());
    }

    #[test]
    fn single_circle_needs_one_launch() {
        let inst = make_instance(&[1.0], ContainerSpec::strip(2.0)).unwrap();
        let res = solve(&inst, &params(2.0, 5.0, 1), &mut NoTrace).unwrap();
        assert!(res.feasible);
        assert_eq!(res.ts_launch_count, 1);
        assert_eq!(res.restart_count, 0);
    }

    #[test]
    fn two_circles_in_a_row() {
        let inst = make_instance(&[1.0, 1.0], ContainerSpec::strip(2.0)).unwrap();
        let res = solve(&inst, &params(4.0, 5.0, 3), &mut NoTrace).unwrap();
        assert!(res.feasible);
        assert!(is_feasible(&inst, &res.best_layout, FeasibilityTolerance::default()));
        let mut xs: Vec<f64> = res.best_layout.centers.iter().map(|c| c.x).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + 1.0).abs() < 1e-9 && (xs[1] - 1.0).abs() < 1e-9, "{xs:?}");
    }

    #[test]
    fn too_tight_target_restarts() {
        let inst = make_instance(&[1.0, 1.0], ContainerSpec::strip(2.0)).unwrap();
        let res = solve(&inst, &params(3.9, 2.0, 0), &mut NoTrace).unwrap();
        assert!(!res.feasible);
        assert!(res.restart_count >= 1);
        assert!(res.ts_launch_count > res.restart_count);
        assert!(res.elapsed >= Duration::from_secs(2));
    }

    #[test]
    fn multistart_launches_once_per_round() {
        let inst = make_instance(&[1.0, 1.0, 0.7], ContainerSpec::strip(2.0)).unwrap();
        let mut p = params(3.0, 1.0, 0);
        p.mode = Mode::MultistartTs;
        let res = solve(&inst, &p, &mut NoTrace).unwrap();
        assert!(!res.feasible);
        assert_eq!(res.ts_launch_count, res.restart_count + 1);
        assert_eq!(res.perturbation_count, 0);
    }

    #[test]
    fn accepted_energies_strictly_decrease() {
        let radii = [3.0, 2.7, 2.5, 2.1, 1.9, 1.6, 1.4, 1.0, 0.8, 0.5];
        let inst = make_instance(&radii, ContainerSpec::strip(6.0)).unwrap();
        let mut events = Vec::new();
        let mut sink = |e: &Event| {
            if matches!(e.phase, Phase::Init | Phase::Accept) {
                events.push(e.clone());
            }
        };
        // deliberately too short to be feasible
        solve(&inst, &params(7.0, 3.0, 2), &mut sink).unwrap();
        let mut last = f64::INFINITY;
        for e in events {
            match e.phase {
                Phase::Init => last = f64::INFINITY,
                _ => {
                    assert!(e.energy < last);
                    last = e.energy;
                }
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        let inst = make_instance(&[1.0], ContainerSpec::strip(2.0)).unwrap();
        let mut p = params(2.0, 1.0, 0);
        p.time_budget = Duration::ZERO;
        assert_eq!(solve(&inst, &p, &mut NoTrace).unwrap_err(), Error::ZeroTimeBudget);
    }
}
