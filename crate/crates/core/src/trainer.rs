//! The three-step hybrid training process.
//!
//! 1. Low-intensity annealing from random weights (first round) or from the
//!    best SCG point so far (later rounds).
//! 2. Scaled conjugate gradient from the annealer's output. A reasonable
//!    solution ends the cold start; slow progress (more than `iter` accepted
//!    steps) loops back to 1, at most `K3` rounds; a vanishing gradient short
//!    of a reasonable solution falls through to 3.
//! 3. Once per cold start: high-intensity annealing from the best point, then
//!    one more SCG run.
//!
//! A [`RestartPolicy`] answers the questions a user would be asked at these
//! decision points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::annealing::{anneal, AnnealingConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::objective::{NetworkObjective, Objective};
use crate::scg::{minimize_with, Control, ScgConfig, Termination};
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    /// Reasonable-solution threshold on the total squared error.
    pub eps: f64,
    /// SCG runs are cut after `iter_multiplier · nw` accepted steps.
    pub iter_multiplier: usize,
    /// Rounds of steps 1–2 per cold start (K3).
    pub max_rounds: usize,
    pub seed: u64,
    pub scg: ScgConfig,
    /// Overrides for the annealing presets; `None` uses the standard ones.
    pub low_annealing: Option<AnnealingConfig>,
    pub high_annealing: Option<AnnealingConfig>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            iter_multiplier: 10,
            max_rounds: 20,
            seed: 0,
            scg: ScgConfig::default(),
            low_annealing: None,
            high_annealing: None,
        }
    }
}

impl TrainerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::Config("eps must be positive".into()));
        }
        if self.iter_multiplier == 0 || self.max_rounds == 0 {
            return Err(Error::Config(
                "iter_multiplier and max_rounds must be at least 1".into(),
            ));
        }
        self.scg.validate().map_err(Error::Config)
    }
}

/// Strict: `error < eps`.
pub fn is_reasonable(error: f64, eps: f64) -> bool {
    error < eps
}

/// `nw` coordinates drawn uniformly from the open interval (−1, 1).
pub fn random_init<R: Rng + ?Sized>(nw: usize, rng: &mut R) -> Vec<f64> {
    (0..nw)
        .map(|_| loop {
            let v = rng.random_range(-1.0..1.0);
            if v != -1.0 {
                break v;
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    SaLow,
    Scg,
    SaHigh,
}

impl PhaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseKind::SaLow => "sa_low",
            PhaseKind::Scg => "scg",
            PhaseKind::SaHigh => "sa_high",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRecord {
    /// 1-based cold start index.
    pub cold_start: usize,
    /// 1-based round of steps 1–2 (the K3 counter). Step 3 records carry
    /// the round after the last one.
    pub round: usize,
    pub kind: PhaseKind,
    /// Annealing moves, or accepted SCG steps.
    pub iterations: usize,
    /// Error of the annealer's output, or the lowest error seen by SCG.
    pub best_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
}

/// What the policy sees at a decision point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Status {
    pub cold_start: usize,
    pub round: usize,
    /// Best error of the current cold start.
    pub error: f64,
    /// Best error over the whole call.
    pub global_error: f64,
    pub reasonable: bool,
}

/// Decisions otherwise left to a user watching the run.
pub trait RestartPolicy {
    /// Step 2 reached a reasonable solution. `true` runs step 3 anyway in
    /// search of a better one.
    fn refine_reasonable(&mut self, status: &Status) -> bool;

    /// Asked before looping back to step 1. `true` abandons this cold start.
    fn abandon_cold_start(&mut self, _status: &Status) -> bool {
        false
    }

    /// Asked after a cold start ends. `true` begins another one.
    fn another_cold_start(&mut self, status: &Status) -> bool;
}

/// Non-interactive policy: keep cold-starting until a reasonable solution
/// appears or `max_cold_starts` cold starts have run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AutomaticPolicy {
    /// Total cold starts allowed, including the first.
    pub max_cold_starts: usize,
    /// When false, step 3 also runs after a reasonable solution.
    pub always_accept_first_reasonable: bool,
}

impl AutomaticPolicy {
    pub fn new(max_cold_starts: usize) -> Self {
        Self {
            max_cold_starts,
            always_accept_first_reasonable: true,
        }
    }
}

impl RestartPolicy for AutomaticPolicy {
    fn refine_reasonable(&mut self, _status: &Status) -> bool {
        !self.always_accept_first_reasonable
    }

    fn another_cold_start(&mut self, status: &Status) -> bool {
        !status.reasonable && status.cold_start < self.max_cold_starts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingReport {
    /// Best weights over every SCG run of the call (w_m).
    pub weights: Vec<f64>,
    pub error: f64,
    pub reasonable: bool,
    pub cold_starts: usize,
    /// Cold starts cut short by a non-finite error.
    pub aborted_cold_starts: usize,
    pub phases: Vec<PhaseRecord>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
struct Best {
    w: Vec<f64>,
    error: f64,
}

impl Best {
    fn offer(slot: &mut Option<Best>, w: &[f64], error: f64) {
        if !error.is_finite() {
            return;
        }
        match slot {
            Some(b) if b.error <= error => {}
            Some(b) => {
                b.w.copy_from_slice(w);
                b.error = error;
            }
            None => {
                *slot = Some(Best {
                    w: w.to_vec(),
                    error,
                })
            }
        }
    }
}

fn error_of(slot: &Option<Best>) -> f64 {
    slot.as_ref().map_or(f64::INFINITY, |b| b.error)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScgOutcome {
    Reasonable,
    /// More than `iter` accepted steps, or an SCG safeguard fired.
    Slow,
    /// Vanishing gradient short of a reasonable solution.
    Stuck,
}

struct ColdStart<'a, O: ?Sized> {
    objective: &'a O,
    config: &'a TrainerConfig,
    index: usize,
    iter_limit: usize,
    local: Option<Best>,
    global: &'a mut Option<Best>,
    phases: &'a mut Vec<PhaseRecord>,
    on_phase: &'a mut dyn FnMut(&PhaseRecord),
}

impl<O: Objective + ?Sized> ColdStart<'_, O> {
    fn push(&mut self, record: PhaseRecord) {
        (self.on_phase)(&record);
        self.phases.push(record);
    }

    fn status(&self, round: usize) -> Status {
        let error = error_of(&self.local);
        Status {
            cold_start: self.index,
            round,
            error,
            global_error: error_of(self.global),
            reasonable: is_reasonable(error, self.config.eps),
        }
    }

    fn anneal(
        &mut self,
        kind: PhaseKind,
        round: usize,
        w_init: &[f64],
        preset: AnnealingConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>> {
        let result = anneal(|w| self.objective.value(w), w_init, &preset, rng)?;
        self.push(PhaseRecord {
            cold_start: self.index,
            round,
            kind,
            iterations: result.moves,
            best_error: result.error,
            termination: None,
        });
        if !result.error.is_finite() || result.w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("annealing result"));
        }
        Ok(result.w)
    }

    fn scg(&mut self, round: usize, w0: &[f64], stop_on_reasonable: bool) -> Result<ScgOutcome> {
        let eps = self.config.eps;
        let iter_limit = self.iter_limit;
        let mut phase_best = f64::INFINITY;
        let mut reasonable = false;
        let mut slow = false;
        let local = &mut self.local;
        let global = &mut *self.global;
        let result = minimize_with(self.objective, w0, &self.config.scg, |st| {
            if st.accepted || st.passes == 0 {
                phase_best = phase_best.min(st.error);
                Best::offer(local, &st.w, st.error);
                Best::offer(global, &st.w, st.error);
            }
            if stop_on_reasonable && is_reasonable(error_of(local), eps) {
                reasonable = true;
                return Control::Stop;
            }
            if st.k > iter_limit {
                slow = true;
                return Control::Stop;
            }
            Control::Continue
        });
        self.push(PhaseRecord {
            cold_start: self.index,
            round,
            kind: PhaseKind::Scg,
            iterations: result.iterations,
            best_error: phase_best,
            termination: Some(result.termination),
        });
        if !result.error.is_finite() || result.w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scaled conjugate gradient iterate"));
        }
        Ok(if reasonable {
            ScgOutcome::Reasonable
        } else if slow {
            ScgOutcome::Slow
        } else {
            match result.termination {
                Termination::GradientSmall => ScgOutcome::Stuck,
                Termination::MaxIterations
                | Termination::LambdaOverflow
                | Termination::CallbackStop => ScgOutcome::Slow,
            }
        })
    }

    fn best_point(&self) -> Vec<f64> {
        self.local
            .as_ref()
            .map(|b| b.w.clone())
            .expect("an SCG run has recorded its starting point")
    }

    fn run(&mut self, policy: &mut dyn RestartPolicy, rng: &mut ChaCha8Rng) -> Result<()> {
        let nw = self.objective.dimension();
        let low = self
            .config
            .low_annealing
            .unwrap_or_else(|| AnnealingConfig::low_intensity(nw));
        let high = self
            .config
            .high_annealing
            .unwrap_or_else(|| AnnealingConfig::high_intensity(nw));

        let mut round = 1;
        let mut w_init = random_init(nw, rng);
        let mut refining = false;
        loop {
            let w_c = self.anneal(PhaseKind::SaLow, round, &w_init, low, rng)?;
            match self.scg(round, &w_c, true)? {
                ScgOutcome::Reasonable => {
                    if policy.refine_reasonable(&self.status(round)) {
                        refining = true;
                        break;
                    }
                    return Ok(());
                }
                ScgOutcome::Slow if round < self.config.max_rounds => {
                    if policy.abandon_cold_start(&self.status(round)) {
                        return Ok(());
                    }
                    round += 1;
                    w_init = self.best_point();
                }
                ScgOutcome::Slow | ScgOutcome::Stuck => break,
            }
        }

        let round = round + 1;
        let w_i = self.best_point();
        let w_c = self.anneal(PhaseKind::SaHigh, round, &w_i, high, rng)?;
        self.scg(round, &w_c, !refining)?;
        Ok(())
    }
}

/// Trains on any objective; see [`train`] for the network case.
pub fn train_objective<O: Objective + ?Sized>(
    objective: &O,
    config: &TrainerConfig,
    policy: &mut dyn RestartPolicy,
    on_phase: &mut dyn FnMut(&PhaseRecord),
) -> Result<TrainingReport> {
    config.validate()?;
    let nw = objective.dimension();
    if nw == 0 {
        return Err(Error::Config("nothing to train: zero weights".into()));
    }
    let iter_limit = config.iter_multiplier * nw;

    let mut global: Option<Best> = None;
    let mut phases = Vec::new();
    let mut cold_starts = 0;
    let mut aborted = 0;
    loop {
        cold_starts += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(cold_starts as u64);
        let mut cs = ColdStart {
            objective,
            config,
            index: cold_starts,
            iter_limit,
            local: None,
            global: &mut global,
            phases: &mut phases,
            on_phase: &mut *on_phase,
        };
        let outcome = cs.run(policy, &mut rng);
        let local_error = error_of(&cs.local);
        match outcome {
            Ok(()) => {}
            Err(Error::NonFinite(what)) => {
                log::warn!("cold start {cold_starts} aborted: non-finite {what}");
                aborted += 1;
            }
            Err(e) => return Err(e),
        }
        let global_error = error_of(&global);
        let status = Status {
            cold_start: cold_starts,
            round: 0,
            error: local_error,
            global_error,
            reasonable: is_reasonable(global_error, config.eps),
        };
        if !policy.another_cold_start(&status) {
            break;
        }
    }

    let best = global.ok_or(Error::NonFinite("every cold start"))?;
    Ok(TrainingReport {
        reasonable: is_reasonable(best.error, config.eps),
        error: best.error,
        weights: best.w,
        cold_starts,
        aborted_cold_starts: aborted,
        phases,
        seed: config.seed,
    })
}

/// Trains a network shaped like `topology` on a fully labeled dataset.
pub fn train(
    topology: &Topology,
    dataset: &Dataset,
    config: &TrainerConfig,
    policy: &mut dyn RestartPolicy,
) -> Result<TrainingReport> {
    train_observed(topology, dataset, config, policy, &mut |_| {})
}

/// [`train`] with a callback receiving each phase record as it completes.
pub fn train_observed(
    topology: &Topology,
    dataset: &Dataset,
    config: &TrainerConfig,
    policy: &mut dyn RestartPolicy,
    on_phase: &mut dyn FnMut(&PhaseRecord),
) -> Result<TrainingReport> {
    if dataset.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let objective = NetworkObjective::new(topology, dataset)?;
    train_objective(&objective, config, policy, on_phase)
}
