//! Structured perturbation and the improvement-only acceptance rule.
//!
//! Perturbation removes the small circles, swaps a number of random
//! similar-radius pairs among the large ones (re-optimizing the large-only
//! layout after each swap) and then puts the small circles back one at a
//! time, largest first, each at the best of several random trial positions.

use rand::Rng;

use crate::error::Result;
use crate::minimizer::{polish_with, MinimizerConfig};
use crate::model::{sample_center, Instance, Layout, Point};
use crate::penalty::PenaltyField;
use crate::tabu::{is_similar_pair, SwapMove};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbConfig {
    /// Random large-pair swaps; `None` means `round(N/3)`, at least 1.
    pub swap_num: Option<usize>,
    /// Trial positions per reinserted circle; `None` means `N`.
    pub reinsert_trials: Option<usize>,
    /// A circle is large when `r > factor * mean radius`.
    pub large_threshold_factor: f64,
    /// Consecutive rejected perturbations before a restart.
    pub accept_stall_limit: usize,
    pub budget: MinimizerConfig,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            swap_num: None,
            reinsert_trials: None,
            large_threshold_factor: 0.5,
            accept_stall_limit: 10,
            budget: MinimizerConfig::screening(),
        }
    }
}

impl PerturbConfig {
    pub fn swap_num_for(&self, n: usize) -> usize {
        self.swap_num
            .unwrap_or_else(|| ((n as f64 / 3.0).round() as usize).max(1))
    }

    pub fn reinsert_trials_for(&self, n: usize) -> usize {
        self.reinsert_trials.unwrap_or(n).max(1)
    }
}

/// Splits sorted indices into large (`r > factor * mean`) and small.
pub fn classify(inst: &Instance, factor: f64) -> (Vec<usize>, Vec<usize>) {
    let radii = inst.radii();
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    let threshold = factor * mean;
    (0..radii.len()).partition(|&i| radii[i] > threshold)
}

/// Strict improvement.
pub fn accept(old_energy: f64, new_energy: f64) -> bool {
    new_energy < old_energy
}

/// One small circle put back into the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Reinsertion {
    pub circle: usize,
    pub trial_energies: Vec<f64>,
    pub kept: usize,
}

/// What a perturbation did.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerturbTrace {
    pub removed: Vec<usize>,
    pub swaps: Vec<SwapMove>,
    /// True when no similar-radius pair exists among the large circles.
    pub swaps_skipped: bool,
    pub reinsertions: Vec<Reinsertion>,
}

/// Perturbs `lay`; the result keeps the dimension and is not polished.
pub fn perturb<R: Rng + ?Sized>(
    inst: &Instance,
    lay: &Layout,
    cfg: &PerturbConfig,
    rng: &mut R,
) -> Result<Layout> {
    perturb_traced(inst, lay, cfg, rng).map(|(lay, _)| lay)
}

/// [`perturb`] plus a record of every decision.
pub fn perturb_traced<R: Rng + ?Sized>(
    inst: &Instance,
    lay: &Layout,
    cfg: &PerturbConfig,
    rng: &mut R,
) -> Result<(Layout, PerturbTrace)> {
    let n = inst.len();
    let radii = inst.radii();
    let dimension = lay.dimension;
    let container = inst.container();
    let (large, small) = classify(inst, cfg.large_threshold_factor);
    let mut trace = PerturbTrace {
        removed: small.clone(),
        ..Default::default()
    };

    // placed circles: sorted indices, their radii and interleaved coords
    let mut placed = large.clone();
    let mut placed_radii: Vec<f64> = large.iter().map(|&i| radii[i]).collect();
    let mut coords: Vec<f64> = large
        .iter()
        .flat_map(|&i| [lay.centers[i].x, lay.centers[i].y])
        .collect();

    let pairs: Vec<(usize, usize)> = (0..large.len())
        .flat_map(|a| (a + 1..large.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| is_similar_pair(radii, large[a], large[b]))
        .collect();
    if pairs.is_empty() {
        trace.swaps_skipped = true;
    } else {
        for _ in 0..cfg.swap_num_for(n) {
            let (a, b) = pairs[rng.gen_range(0..pairs.len())];
            coords.swap(2 * a, 2 * b);
            coords.swap(2 * a + 1, 2 * b + 1);
            trace.swaps.push(SwapMove::new(large[a], large[b]));
            let mut field = PenaltyField::new(&placed_radii, container, dimension);
            coords = polish_with(&mut field, &Layout::from_coords(&coords, dimension), &cfg.budget)?
                .to_coords();
        }
    }

    let trials = cfg.reinsert_trials_for(n);
    for &s in &small {
        placed_radii.push(radii[s]);
        let mut field = PenaltyField::new(&placed_radii, container, dimension);
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut energies = Vec::with_capacity(trials);
        let mut kept = 0;
        for t in 0..trials {
            let p = sample_center(container, dimension, radii[s], rng);
            let mut candidate = coords.clone();
            candidate.extend([p.x, p.y]);
            let polished =
                polish_with(&mut field, &Layout::from_coords(&candidate, dimension), &cfg.budget)?
                    .to_coords();
            let e = field.energy(&polished).energy;
            energies.push(e);
            if best.as_ref().is_none_or(|(b, _)| e < *b) {
                best = Some((e, polished));
                kept = t;
            }
        }
        coords = best.map(|(_, c)| c).unwrap_or(coords);
        placed.push(s);
        trace.reinsertions.push(Reinsertion {
            circle: s,
            trial_energies: energies,
            kept,
        });
    }

    let mut centers = vec![Point::ORIGIN; n];
    for (k, &i) in placed.iter().enumerate() {
        centers[i] = Point::new(coords[2 * k], coords[2 * k + 1]);
    }
    Ok((Layout::new(centers, dimension), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_instance, random_layout, ContainerSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn strip(radii: &[f64], w: f64) -> Instance {
        make_instance(radii, ContainerSpec::strip(w)).unwrap()
    }

    #[test]
    fn classify_examples() {
        let (l, s) = classify(&strip(&[4.0, 4.0, 4.0], 10.0), 0.5);
        assert_eq!((l.len(), s.len()), (3, 0));
        let (l, s) = classify(&strip(&[10.0, 1.0, 1.0], 20.0), 0.5);
        assert_eq!(l, vec![0]);
        assert_eq!(s, vec![1, 2]);
        let (l, s) = classify(&strip(&[2.0, 2.0, 1.0, 1.0], 10.0), 0.5);
        assert_eq!((l.len(), s.len()), (4, 0));
    }

    #[test]
    fn accept_is_strict() {
        assert!(accept(1.0, 0.5));
        assert!(!accept(1.0, 1.0));
        assert!(!accept(0.0, 0.1));
    }

    #[test]
    fn default_counts() {
        let cfg = PerturbConfig::default();
        assert_eq!(cfg.swap_num_for(30), 10);
        assert_eq!(cfg.swap_num_for(20), 7);
        assert_eq!(cfg.swap_num_for(1), 1);
        assert_eq!(cfg.reinsert_trials_for(17), 17);
    }

    #[test]
    fn equal_radii_skip_swaps() {
        let inst = strip(&[1.0; 5], 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lay = random_layout(&inst, 6.0, &mut rng);
        let (_, trace) = perturb_traced(&inst, &lay, &PerturbConfig::default(), &mut rng).unwrap();
        assert!(trace.swaps_skipped);
        assert!(trace.swaps.is_empty());
        assert!(trace.removed.is_empty());
    }

    #[test]
    fn only_small_circles_are_reinserted() {
        let inst = strip(&[10.0, 1.0, 1.0], 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lay = random_layout(&inst, 25.0, &mut rng);
        let (out, trace) = perturb_traced(&inst, &lay, &PerturbConfig::default(), &mut rng).unwrap();
        assert_eq!(trace.removed, vec![1, 2]);
        assert_eq!(
            trace.reinsertions.iter().map(|r| r.circle).collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert!(trace.swaps_skipped);
        assert_eq!(out.dimension, lay.dimension);
    }

    #[test]
    fn kept_trial_is_the_minimum() {
        let radii = [3.0, 2.8, 2.5, 2.2, 2.0, 1.8, 1.0, 0.8, 0.6, 0.5];
        let inst = strip(&radii, 7.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lay = random_layout(&inst, 12.0, &mut rng);
        let (out, trace) = perturb_traced(&inst, &lay, &PerturbConfig::default(), &mut rng).unwrap();
        assert!(!trace.reinsertions.is_empty());
        for r in &trace.reinsertions {
            assert_eq!(r.trial_energies.len(), inst.len());
            let min = r.trial_energies.iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(r.trial_energies[r.kept], min);
            assert!(r.trial_energies[..r.kept].iter().all(|&e| e > min));
        }
        assert_eq!(trace.swaps.len(), 3);
        for m in &trace.swaps {
            assert!(is_similar_pair(inst.radii(), m.i, m.j));
        }
        assert_eq!(out.len(), inst.len());
    }

    #[test]
    fn perturbation_is_seeded() {
        let inst = strip(&[3.0, 2.5, 2.0, 1.5, 1.0, 0.5], 6.0);
        let lay = random_layout(&inst, 8.0, &mut ChaCha8Rng::seed_from_u64(0));
        let a = perturb(&inst, &lay, &PerturbConfig::default(), &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = perturb(&inst, &lay, &PerturbConfig::default(), &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }
}
