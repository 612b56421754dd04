//! Structured progress events.

/// What the solver was doing when an event was emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Fresh random layout (first start or restart).
    Init,
    /// One tabu search iteration.
    TabuStep,
    /// A tabu search call returned.
    TabuDone,
    /// Perturbation applied to the incumbent.
    Perturb,
    /// Perturbed-and-searched layout accepted.
    Accept,
    /// Perturbed-and-searched layout rejected.
    Reject,
    /// Post-processing bisection probe.
    Probe,
    /// Post-processing inflation step.
    Inflate,
    /// Run complete.
    Done,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::TabuStep => "tabu_step",
            Phase::TabuDone => "tabu_done",
            Phase::Perturb => "perturb",
            Phase::Accept => "accept",
            Phase::Reject => "reject",
            Phase::Probe => "probe",
            Phase::Inflate => "inflate",
            Phase::Done => "done",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub phase: Phase,
    pub iteration: u64,
    pub energy: f64,
    pub best_energy: f64,
    /// Swapped pair (sorted indices) for tabu steps.
    pub swap: Option<(usize, usize)>,
    /// Container dimension in effect.
    pub dimension: f64,
}

impl Event {
    pub fn new(phase: Phase, iteration: u64, energy: f64, best_energy: f64, dimension: f64) -> Self {
        Self {
            phase,
            iteration,
            energy,
            best_energy,
            swap: None,
            dimension,
        }
    }
}

/// Receiver for progress events.
pub trait TraceSink {
    fn record(&mut self, event: &Event);
}

/// Discards every event.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoTrace;

impl TraceSink for NoTrace {
    fn record(&mut self, _: &Event) {}
}

impl<F: FnMut(&Event)> TraceSink for F {
    fn record(&mut self, event: &Event) {
        self(event)
    }
}
