//! Simulated annealing over weight vectors.
//!
//! A move copies the current point, perturbs a few random coordinates by
//! `coef · U(−1, 1)` and evaluates the error. New best points are always
//! taken, improvements over the current point are taken, and worse points are
//! taken with probability `exp((E_current − E_trial) / T)`. The temperature
//! is cooled at the start of a pass only when the previous pass found no new
//! best point.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnealingConfig {
    /// Moves per pass (K1).
    pub moves_per_pass: usize,
    /// Passes (K2).
    pub passes: usize,
    pub initial_temperature: f64,
    pub cooling_factor: f64,
    /// Perturbation half-width.
    pub step_scale: f64,
    /// A best error below this ends the run at the next pass boundary.
    pub eps: f64,
    /// Most coordinates touched by one move.
    pub max_perturbed: usize,
}

/// Coordinates perturbed per move for `nw` weights: ⌊0.05·nw⌋ when that is
/// at least 2, otherwise 2, never more than `nw`.
pub fn perturbation_count(nw: usize) -> usize {
    let nb = (nw / 20).max(2);
    nb.min(nw.max(1))
}

impl AnnealingConfig {
    /// Short, hot, narrow: 100 × 20 moves from T = 1 with steps of 0.2.
    pub fn low_intensity(nw: usize) -> Self {
        Self {
            moves_per_pass: 100,
            passes: 20,
            initial_temperature: 1.0,
            cooling_factor: 0.99,
            step_scale: 0.2,
            eps: 1e-3,
            max_perturbed: perturbation_count(nw),
        }
    }

    /// Long, cool, wide: 5000 × 250 moves from T = 0.1 with steps of 1.
    pub fn high_intensity(nw: usize) -> Self {
        Self {
            moves_per_pass: 5000,
            passes: 250,
            initial_temperature: 0.1,
            cooling_factor: 0.99,
            step_scale: 1.0,
            eps: 1e-3,
            max_perturbed: perturbation_count(nw),
        }
    }

    pub fn total_moves(&self) -> usize {
        self.moves_per_pass * self.passes
    }

    pub fn validate(&self, nw: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.moves_per_pass == 0 || self.passes == 0 {
            return fail("annealing needs at least one move and one pass".into());
        }
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return fail(format!(
                "cooling factor must lie in (0, 1), got {}",
                self.cooling_factor
            ));
        }
        if !(self.initial_temperature > 0.0) {
            return fail("initial temperature must be positive".into());
        }
        if !(self.step_scale > 0.0) {
            return fail("perturbation scale must be positive".into());
        }
        if self.max_perturbed == 0 || self.max_perturbed > nw {
            return fail(format!(
                "coordinates per move must lie in 1..={nw}, got {}",
                self.max_perturbed
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealingResult {
    /// The best point when `improvements > 0`, else the last accepted point.
    pub w: Vec<f64>,
    pub error: f64,
    /// Number of new-best events (k0).
    pub improvements: usize,
    pub reached_eps: bool,
    pub moves: usize,
    pub passes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    NewBest,
    Improved,
    Accepted,
    Rejected,
}

/// One move as seen by an [`AnnealObserver`].
#[derive(Debug)]
pub struct MoveRecord<'a> {
    pub pass: usize,
    pub temperature: f64,
    /// The current point the move started from.
    pub current: &'a [f64],
    pub current_error: f64,
    pub trial: &'a [f64],
    pub trial_error: f64,
    pub outcome: MoveOutcome,
}

/// End-of-pass summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassRecord {
    /// 1-based pass index.
    pub pass: usize,
    /// Temperature used during the pass.
    pub temperature: f64,
    pub improvements: usize,
    pub best_error: f64,
    pub current_error: f64,
}

pub trait AnnealObserver {
    fn on_move(&mut self, _record: &MoveRecord<'_>) {}
    fn on_pass(&mut self, _record: &PassRecord) {}
}

impl AnnealObserver for () {}

/// Collects pass records.
impl AnnealObserver for Vec<PassRecord> {
    fn on_pass(&mut self, record: &PassRecord) {
        self.push(*record);
    }
}

pub fn anneal<F, R>(
    objective: F,
    w_init: &[f64],
    config: &AnnealingConfig,
    rng: &mut R,
) -> Result<AnnealingResult>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    anneal_observed(objective, w_init, config, rng, &mut ())
}

pub fn anneal_observed<F, R, O>(
    mut objective: F,
    w_init: &[f64],
    config: &AnnealingConfig,
    rng: &mut R,
    observer: &mut O,
) -> Result<AnnealingResult>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
    O: AnnealObserver + ?Sized,
{
    let nw = w_init.len();
    config.validate(nw)?;
    if w_init.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("annealing start point"));
    }
    if nw <= 10 {
        log::warn!("annealing over only {nw} weights");
    }

    let e_init = objective(w_init);
    let mut best_error = e_init;
    let mut best = w_init.to_vec();
    let mut current = w_init.to_vec();
    let mut current_error = f64::INFINITY;
    let mut trial = vec![0.0; nw];
    let mut improvements = 0;
    let mut improvements_at_pass_start = 0;
    let mut temperature = config.initial_temperature;
    let mut moves = 0;
    let mut passes = 0;
    let mut indices: Vec<usize> = (0..nw).collect();

    while passes < config.passes {
        if improvements_at_pass_start == improvements {
            temperature *= config.cooling_factor;
        }
        passes += 1;
        improvements_at_pass_start = improvements;

        for _ in 0..config.moves_per_pass {
            moves += 1;
            trial.copy_from_slice(&current);
            let count = rng.random_range(1..=config.max_perturbed);
            // partial Fisher-Yates: the first `count` slots become distinct picks
            for m in 0..count {
                let pick = rng.random_range(m..nw);
                indices.swap(m, pick);
                let j = indices[m];
                trial[j] += config.step_scale * rng.random_range(-1.0..1.0);
            }
            let trial_error = objective(&trial);

            let outcome = if trial_error < best_error {
                MoveOutcome::NewBest
            } else if trial_error < current_error {
                MoveOutcome::Improved
            } else {
                let u: f64 = rng.random();
                if u < ((current_error - trial_error) / temperature).exp() {
                    MoveOutcome::Accepted
                } else {
                    MoveOutcome::Rejected
                }
            };
            observer.on_move(&MoveRecord {
                pass: passes,
                temperature,
                current: &current,
                current_error,
                trial: &trial,
                trial_error,
                outcome,
            });
            match outcome {
                MoveOutcome::NewBest => {
                    best.copy_from_slice(&trial);
                    best_error = trial_error;
                    improvements += 1;
                    std::mem::swap(&mut current, &mut trial);
                    current_error = trial_error;
                }
                MoveOutcome::Improved | MoveOutcome::Accepted => {
                    std::mem::swap(&mut current, &mut trial);
                    current_error = trial_error;
                }
                MoveOutcome::Rejected => {}
            }
        }

        observer.on_pass(&PassRecord {
            pass: passes,
            temperature,
            improvements,
            best_error,
            current_error,
        });
        if improvements > 0 && best_error < config.eps {
            break;
        }
    }

    let reached_eps = improvements > 0 && best_error < config.eps;
    let (w, error) = if improvements > 0 {
        (best, best_error)
    } else {
        (current, current_error)
    };
    Ok(AnnealingResult {
        w,
        error,
        improvements,
        reached_eps,
        moves,
        passes,
    })
}
