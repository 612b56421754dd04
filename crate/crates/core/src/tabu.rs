//! Tabu search over similar-radius swaps.
//!
//! A move swaps the centers of two circles whose positions in the
//! descending radius order differ by at most two and whose radii differ.
//! Every swap is followed by a short continuous re-optimization. A swapped
//! circle becomes tabu for `T + rand[0, round(N/8)]` iterations; a tabu move
//! is still admitted when its energy beats the best energy of the current
//! call (aspiration).

use std::time::Instant;

use rand::Rng;

use crate::error::Result;
use crate::minimizer::{polish, MinimizerConfig};
use crate::model::{FeasibilityTolerance, Instance, Layout};
use crate::penalty::PenaltyField;
use crate::trace::{Event, Phase, TraceSink};

/// Exchange of two circles, identified by sorted position, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SwapMove {
    pub i: usize,
    pub j: usize,
}

impl SwapMove {
    pub fn new(a: usize, b: usize) -> Self {
        Self {
            i: a.min(b),
            j: a.max(b),
        }
    }
}

/// True when circles at sorted positions `i` and `j` have similar radii.
pub fn is_similar_pair(radii: &[f64], i: usize, j: usize) -> bool {
    i != j && i.abs_diff(j) <= 2 && radii[i] != radii[j]
}

/// All admissible swaps in lexicographic `(i, j)` order.
pub fn enumerate_moves(inst: &Instance) -> Vec<SwapMove> {
    let radii = inst.radii();
    let n = radii.len();
    let mut moves = Vec::with_capacity(2 * n);
    for i in 0..n {
        for j in i + 1..(i + 3).min(n) {
            if radii[i] != radii[j] {
                moves.push(SwapMove { i, j });
            }
        }
    }
    moves
}

/// Exchanges the centers of the two circles of `m`.
pub fn apply_swap(lay: &Layout, m: SwapMove) -> Layout {
    let mut out = lay.clone();
    out.centers.swap(m.i, m.j);
    out
}

/// Per-circle tenure bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct TabuState {
    expiry: Vec<u64>,
    cur_iter: u64,
    base_tenure: u64,
    spread: u64,
}

impl TabuState {
    /// Every circle starts free; iterations are numbered from 1.
    pub fn new(n: usize, base_tenure: u64) -> Self {
        Self {
            expiry: vec![0; n],
            cur_iter: 1,
            base_tenure,
            spread: (n as f64 / 8.0).round() as u64,
        }
    }

    pub fn cur_iter(&self) -> u64 {
        self.cur_iter
    }

    pub fn spread(&self) -> u64 {
        self.spread
    }

    pub fn expiry(&self, i: usize) -> u64 {
        self.expiry[i]
    }

    pub fn is_free(&self, i: usize) -> bool {
        self.expiry[i] < self.cur_iter
    }

    /// Makes circle `i` tabu until `cur_iter + T + rand[0, spread]`.
    pub fn forbid<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> u64 {
        let until = self.cur_iter + self.base_tenure + rng.gen_range(0..=self.spread);
        self.expiry[i] = until;
        until
    }

    pub fn advance(&mut self) {
        self.cur_iter += 1;
    }

    /// Marks every circle tabu through iteration `until`.
    pub fn forbid_all_until(&mut self, until: u64) {
        self.expiry.fill(until);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabuConfig {
    /// Iterations without improving the best energy before giving up.
    pub stall_limit: usize,
    /// Constant part `T` of the tenure.
    pub base_tenure: u64,
    pub neighbor_budget: MinimizerConfig,
    pub polish_budget: MinimizerConfig,
    pub tolerance: FeasibilityTolerance,
}

impl Default for TabuConfig {
    fn default() -> Self {
        Self {
            stall_limit: 20,
            base_tenure: 2,
            neighbor_budget: MinimizerConfig::screening(),
            polish_budget: MinimizerConfig::full(),
            tolerance: FeasibilityTolerance::default(),
        }
    }
}

/// A screened neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub mv: SwapMove,
    pub layout: Layout,
    pub energy: f64,
    pub max_depth: f64,
    /// Admitted through aspiration although one of its circles is tabu.
    pub aspirated: bool,
}

/// Screens every admissible swap of `lay` and keeps those that are either
/// free or beat `best_energy`.
pub fn neighborhood(
    inst: &Instance,
    lay: &Layout,
    state: &TabuState,
    best_energy: f64,
    cfg: &TabuConfig,
) -> Result<Vec<Neighbor>> {
    let mut out = Vec::new();
    let field = PenaltyField::for_instance(inst, lay.dimension);
    for mv in enumerate_moves(inst) {
        let swapped = apply_swap(lay, mv);
        let screened = polish(inst, &swapped, &cfg.neighbor_budget)?;
        let ev = field.energy(&screened.to_coords());
        let free = state.is_free(mv.i) && state.is_free(mv.j);
        if free || ev.energy < best_energy {
            out.push(Neighbor {
                mv,
                layout: screened,
                energy: ev.energy,
                max_depth: ev.max_depth,
                aspirated: !free,
            });
        }
    }
    Ok(out)
}

/// Result of one tabu search call.
#[derive(Debug, Clone, PartialEq)]
pub struct TabuOutcome {
    pub layout: Layout,
    pub energy: f64,
    pub max_depth: f64,
    /// Tabu iterations performed (0 when the polished start is feasible).
    pub iterations: u64,
}

impl TabuOutcome {
    pub fn is_feasible(&self, tol: FeasibilityTolerance) -> bool {
        self.max_depth <= tol.eps()
    }
}

fn deadline_passed(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Runs tabu search from `start` at its fixed dimension and returns the
/// best layout seen, polished with the full budget.
///
/// Stops when the incumbent is feasible, after `stall_limit` consecutive
/// iterations without a strict improvement of the best energy, or when
/// `deadline` has passed (checked between iterations).
pub fn tabu_search<R: Rng + ?Sized>(
    inst: &Instance,
    start: &Layout,
    cfg: &TabuConfig,
    rng: &mut R,
    deadline: Option<Instant>,
    sink: &mut dyn TraceSink,
) -> Result<TabuOutcome> {
    let field = PenaltyField::for_instance(inst, start.dimension);
    let mut current = polish(inst, start, &cfg.polish_budget)?;
    let ev = field.energy(&current.to_coords());
    if ev.max_depth <= cfg.tolerance.eps() {
        return Ok(TabuOutcome {
            layout: current,
            energy: ev.energy,
            max_depth: ev.max_depth,
            iterations: 0,
        });
    }

    let mut best = current.clone();
    let mut best_energy = ev.energy;
    let mut state = TabuState::new(inst.len(), cfg.base_tenure);
    let mut stall = 0;
    let mut iterations = 0;

    while stall < cfg.stall_limit && !deadline_passed(deadline) {
        let candidates = neighborhood(inst, &current, &state, best_energy, cfg)?;
        iterations += 1;
        // first minimum in lexicographic move order
        let chosen = candidates
            .into_iter()
            .reduce(|a, b| if b.energy < a.energy { b } else { a });
        let Some(chosen) = chosen else {
            state.advance();
            stall += 1;
            continue;
        };

        state.forbid(chosen.mv.i, rng);
        state.forbid(chosen.mv.j, rng);
        let mut event = Event::new(
            Phase::TabuStep,
            state.cur_iter(),
            chosen.energy,
            best_energy.min(chosen.energy),
            start.dimension,
        );
        event.swap = Some((chosen.mv.i, chosen.mv.j));
        sink.record(&event);
        state.advance();

        let feasible = chosen.max_depth <= cfg.tolerance.eps();
        current = chosen.layout;
        if chosen.energy < best_energy || (feasible && chosen.energy <= best_energy) {
            best = current.clone();
            best_energy = chosen.energy;
            stall = 0;
        } else {
            stall += 1;
        }
        if feasible {
            break;
        }
    }

    let layout = polish(inst, &best, &cfg.polish_budget)?;
    let ev = field.energy(&layout.to_coords());
    Ok(TabuOutcome {
        layout,
        energy: ev.energy,
        max_depth: ev.max_depth,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_instance, random_layout, ContainerSpec, Point};
    use crate::penalty;
    use crate::trace::NoTrace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn strip(radii: &[f64], w: f64) -> Instance {
        make_instance(radii, ContainerSpec::strip(w)).unwrap()
    }

    #[test]
    fn five_distinct_radii_give_seven_moves() {
        let inst = strip(&[5.0, 4.0, 3.0, 2.0, 1.0], 20.0);
        let moves: Vec<_> = enumerate_moves(&inst).iter().map(|m| (m.i, m.j)).collect();
        assert_eq!(
            moves,
            vec![(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (2, 4), (3, 4)]
        );
    }

    #[test]
    fn equal_radii_have_no_moves() {
        assert!(enumerate_moves(&strip(&[1.0, 1.0, 1.0], 4.0)).is_empty());
        assert!(enumerate_moves(&strip(&[1.0], 4.0)).is_empty());
    }

    #[test]
    fn swap_is_an_involution() {
        let lay = Layout::new(vec![Point::new(0.0, 0.0), Point::new(5.0, 5.0)], 10.0);
        let m = SwapMove::new(0, 1);
        let once = apply_swap(&lay, m);
        assert_eq!(once.centers, vec![Point::new(5.0, 5.0), Point::new(0.0, 0.0)]);
        assert_eq!(apply_swap(&once, m), lay);
    }

    #[test]
    fn swap_changes_energy_when_radii_differ() {
        let inst = strip(&[2.0, 1.0, 0.5], 4.0);
        let lay = Layout::new(
            vec![Point::new(-3.0, 0.0), Point::new(0.0, 0.0), Point::new(1.2, 0.0)],
            8.0,
        );
        let before = penalty::energy(&inst, &lay);
        let after = penalty::energy(&inst, &apply_swap(&lay, SwapMove::new(0, 1)));
        assert!((before - after).abs() > 1e-3, "{before} vs {after}");
    }

    #[test]
    fn tenure_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut state = TabuState::new(40, 2);
        assert_eq!(state.spread(), 5);
        for _ in 0..1000 {
            let cur = state.cur_iter();
            let e = state.forbid(7, &mut rng);
            assert!((cur + 2..=cur + 7).contains(&e));
            assert!(!state.is_free(7));
            state.advance();
        }
    }

    #[test]
    fn empty_neighborhood_when_everything_is_tabu() {
        let inst = strip(&[3.0, 2.0, 1.0], 6.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lay = random_layout(&inst, 4.0, &mut rng);
        let mut state = TabuState::new(3, 2);
        state.forbid_all_until(100);
        // best energy 0 cannot be beaten
        let nb = neighborhood(&inst, &lay, &state, 0.0, &TabuConfig::default()).unwrap();
        assert!(nb.is_empty());
    }

    #[test]
    fn free_neighborhood_has_every_move() {
        let inst = strip(&[3.0, 2.0, 1.5, 1.0], 6.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lay = random_layout(&inst, 6.0, &mut rng);
        let state = TabuState::new(4, 2);
        let nb = neighborhood(&inst, &lay, &state, 0.0, &TabuConfig::default()).unwrap();
        assert_eq!(nb.len(), enumerate_moves(&inst).len());
        assert!(nb.iter().all(|n| !n.aspirated));
    }

    #[test]
    fn aspiration_admits_improving_tabu_move() {
        // the large circle sticks out of the strip end; swapping it with the
        // small one resolves the only violation
        let inst = strip(&[2.0, 1.0], 4.0);
        let lay = Layout::new(vec![Point::new(-4.0, 0.0), Point::new(0.0, 0.0)], 10.0);
        assert!(penalty::energy(&inst, &lay) > 0.0);
        let mut state = TabuState::new(2, 2);
        state.forbid_all_until(50);
        let best = penalty::energy(&inst, &lay);
        let nb = neighborhood(&inst, &lay, &state, best, &TabuConfig::default()).unwrap();
        assert_eq!(nb.len(), 1);
        assert!(nb[0].aspirated);
        assert!(nb[0].energy < best);
    }

    #[test]
    fn feasible_start_returns_immediately() {
        let inst = strip(&[1.0, 0.5], 2.0);
        let lay = Layout::new(vec![Point::new(-1.0, 0.0), Point::new(1.0, 0.0)], 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = tabu_search(&inst, &lay, &TabuConfig::default(), &mut rng, None, &mut NoTrace).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.layout, lay);
    }

    #[test]
    fn two_circles_become_feasible() {
        let inst = strip(&[2.0, 1.0], 4.0);
        let lay = Layout::new(vec![Point::new(0.1, 0.0), Point::new(0.0, 0.1)], 6.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = tabu_search(&inst, &lay, &TabuConfig::default(), &mut rng, None, &mut NoTrace).unwrap();
        assert!(out.iterations <= 20);
        assert!(out.max_depth <= 1e-10);
    }

    #[test]
    fn tabu_search_is_deterministic() {
        let inst = strip(&[3.0, 2.5, 2.0, 1.5, 1.2, 1.0, 0.8], 6.0);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lay = random_layout(&inst, 7.0, &mut rng);
            let mut events = Vec::new();
            let mut sink = |e: &Event| events.push(e.clone());
            let out = tabu_search(&inst, &lay, &TabuConfig::default(), &mut rng, None, &mut sink).unwrap();
            (out, events)
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn best_energy_never_increases_and_tenures_stay_in_range() {
        let inst = strip(&[3.0, 2.6, 2.2, 1.9, 1.5, 1.3, 1.0, 0.9, 0.7], 6.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lay = random_layout(&inst, 8.0, &mut rng);
        let mut events = Vec::new();
        let mut sink = |e: &Event| events.push(e.clone());
        tabu_search(&inst, &lay, &TabuConfig::default(), &mut rng, None, &mut sink).unwrap();
        assert!(!events.is_empty());
        for w in events.windows(2) {
            assert!(w[1].best_energy <= w[0].best_energy);
        }
    }
}
