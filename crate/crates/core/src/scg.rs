//! Møller's scaled conjugate gradient method.
//!
//! Each pass computes the curvature `δ = pᵀ E''(w) p` along the search
//! direction, adds `λ|p|²` Levenberg-Marquardt style damping until `δ > 0`,
//! steps to the minimizer of the damped quadratic model and adjusts `λ` from
//! the ratio `Δ` of actual to predicted error reduction. Failed steps
//! (`Δ < 0`) keep `w` and `p` and retry with larger damping.

use serde::Serialize;

use crate::objective::Objective;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScgConfig {
    /// Terminate once `|E'(w)| < eps1`.
    pub eps1: f64,
    /// Initial and restart value of λ.
    pub eps2: f64,
    /// Cap on passes through the step loop, accepted or not.
    pub max_iterations: usize,
    /// Give up when λ grows past this without an accepted step.
    pub lambda_cap: f64,
    /// Holds λ at a fixed value (and λ̄ at zero) throughout. Test hook: with
    /// `Some(0.0)` on a convex quadratic the method reduces to linear CG.
    pub frozen_lambda: Option<f64>,
}

impl Default for ScgConfig {
    fn default() -> Self {
        Self {
            eps1: 1e-6,
            eps2: 1e-4,
            max_iterations: 100_000,
            lambda_cap: 1e60,
            frozen_lambda: None,
        }
    }
}

impl ScgConfig {
    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.eps1 > 0.0) || !(self.eps2 > 0.0) {
            return Err("eps1 and eps2 must be positive".into());
        }
        if self.max_iterations == 0 {
            return Err("max_iterations must be at least 1".into());
        }
        if !(self.lambda_cap > 0.0) {
            return Err("lambda_cap must be positive".into());
        }
        Ok(())
    }
}

/// Everything the method tracks, as seen by the progress callback at the end
/// of each pass.
#[derive(Debug, Clone)]
pub struct ScgState {
    /// Accepted-step counter.
    pub k: usize,
    /// Passes through the step loop so far, accepted or not.
    pub passes: usize,
    pub w: Vec<f64>,
    /// `E(w)`.
    pub error: f64,
    /// `−E'(w)`.
    pub r: Vec<f64>,
    /// Search direction.
    pub p: Vec<f64>,
    /// `E''(w) p`.
    pub s: Vec<f64>,
    pub delta: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Comparison parameter Δ of the last pass.
    pub comparison: f64,
    pub lambda: f64,
    pub lambda_bar: f64,
    pub success: bool,
    /// Whether the last pass moved `w`.
    pub accepted: bool,
    /// Whether the last accepted step restarted along `r`.
    pub restarted: bool,
    /// Whether the last pass had to force `δ > 0`.
    pub scaled: bool,
}

impl ScgState {
    pub fn gradient_norm(&self) -> f64 {
        norm_sq(&self.r).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientSmall,
    MaxIterations,
    LambdaOverflow,
    CallbackStop,
}

#[derive(Debug, Clone)]
pub struct ScgResult {
    pub w: Vec<f64>,
    pub error: f64,
    /// Accepted steps.
    pub iterations: usize,
    /// Passes through the step loop.
    pub passes: usize,
    pub termination: Termination,
    /// Lowest-error point seen. Accepted steps never raise the error, so this
    /// is the final point unless the error was non-finite somewhere.
    pub best_w: Vec<f64>,
    pub best_error: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Minimizes without observing progress.
pub fn minimize<O: Objective + ?Sized>(oracle: &O, w0: &[f64], config: &ScgConfig) -> ScgResult {
    minimize_with(oracle, w0, config, |_| Control::Continue)
}

/// Minimizes from `w0`, invoking `progress` once before the first pass and
/// then once at the end of every pass.
pub fn minimize_with<O, F>(oracle: &O, w0: &[f64], config: &ScgConfig, mut progress: F) -> ScgResult
where
    O: Objective + ?Sized,
    F: FnMut(&ScgState) -> Control,
{
    let nw = oracle.dimension();
    assert_eq!(w0.len(), nw, "starting point has the wrong dimension");

    let mut grad = vec![0.0; nw];
    let error = oracle.value_and_gradient(w0, &mut grad);
    let r: Vec<f64> = grad.iter().map(|g| -g).collect();
    let lambda0 = config.frozen_lambda.unwrap_or(config.eps2);
    let mut st = ScgState {
        k: 0,
        passes: 0,
        w: w0.to_vec(),
        error,
        p: r.clone(),
        r,
        s: vec![0.0; nw],
        delta: 0.0,
        mu: 0.0,
        alpha: 0.0,
        beta: 0.0,
        comparison: 0.0,
        lambda: lambda0,
        lambda_bar: 0.0,
        success: true,
        accepted: false,
        restarted: false,
        scaled: false,
    };
    let mut best_w = st.w.clone();
    let mut best_error = st.error;

    let finish = |st: ScgState, termination, best_w, best_error| ScgResult {
        iterations: st.k,
        passes: st.passes,
        w: st.w,
        error: st.error,
        termination,
        best_w,
        best_error,
    };

    if progress(&st) == Control::Stop {
        return finish(st, Termination::CallbackStop, best_w, best_error);
    }
    if norm_sq(&st.r).sqrt() < config.eps1 {
        return finish(st, Termination::GradientSmall, best_w, best_error);
    }

    let mut trial = vec![0.0; nw];
    let mut r_new = vec![0.0; nw];
    // true when s and δ must be recomputed for a new (w, p)
    let mut fresh_direction = true;

    loop {
        if st.passes >= config.max_iterations {
            return finish(st, Termination::MaxIterations, best_w, best_error);
        }
        st.passes += 1;
        st.accepted = false;
        st.restarted = false;
        st.scaled = false;

        let p_sq = norm_sq(&st.p);
        if fresh_direction {
            // second-order information
            oracle.hessian_vector(&st.w, &st.p, &mut st.s);
            st.delta = dot(&st.p, &st.s);
        }

        // scale the Hessian
        st.delta += (st.lambda - st.lambda_bar) * p_sq;
        if st.delta <= 0.0 {
            st.scaled = true;
            st.lambda_bar = 2.0 * (st.lambda - st.delta / p_sq);
            st.delta = -st.delta + st.lambda * p_sq;
            st.lambda = st.lambda_bar;
        }
        debug_assert!(
            st.delta > 0.0 || p_sq == 0.0 || !st.delta.is_finite(),
            "curvature not positive after scaling: {}",
            st.delta
        );

        // step size
        st.mu = dot(&st.p, &st.r);
        if st.mu == 0.0 || !st.mu.is_finite() || !st.delta.is_finite() {
            // degenerate direction: restart along the steepest descent
            st.p.copy_from_slice(&st.r);
            st.lambda = config.frozen_lambda.unwrap_or(config.eps2);
            st.lambda_bar = 0.0;
            st.success = true;
            st.comparison = 0.0;
            fresh_direction = true;
            if progress(&st) == Control::Stop {
                return finish(st, Termination::CallbackStop, best_w, best_error);
            }
            continue;
        }
        st.alpha = st.mu / st.delta;

        // comparison parameter
        for ((t, w), p) in trial.iter_mut().zip(&st.w).zip(&st.p) {
            *t = w + st.alpha * p;
        }
        let trial_error = oracle.value(&trial);
        st.comparison = if trial_error.is_finite() {
            2.0 * st.delta * (st.error - trial_error) / (st.mu * st.mu)
        } else {
            f64::NEG_INFINITY
        };

        // test for error reduction
        let mut restart_pending = false;
        if st.comparison >= 0.0 {
            let new_error = oracle.value_and_gradient(&trial, &mut grad);
            for (rn, g) in r_new.iter_mut().zip(&grad) {
                *rn = -g;
            }
            std::mem::swap(&mut st.w, &mut trial);
            st.error = new_error;
            st.accepted = true;
            if st.error < best_error {
                best_error = st.error;
                best_w.copy_from_slice(&st.w);
            }

            if norm_sq(&r_new).sqrt() < config.eps1 {
                std::mem::swap(&mut st.r, &mut r_new);
                st.k += 1;
                progress(&st);
                return finish(st, Termination::GradientSmall, best_w, best_error);
            }

            if !st.success || st.k.is_multiple_of(nw) {
                st.p.copy_from_slice(&r_new);
                std::mem::swap(&mut st.r, &mut r_new);
                st.lambda = config.frozen_lambda.unwrap_or(config.eps2);
                st.lambda_bar = 0.0;
                st.k += 1;
                st.success = true;
                st.restarted = true;
                restart_pending = true;
            } else {
                st.beta = (norm_sq(&r_new) - dot(&r_new, &st.r)) / st.mu;
                for (p, rn) in st.p.iter_mut().zip(&r_new) {
                    *p = rn + st.beta * *p;
                }
                std::mem::swap(&mut st.r, &mut r_new);
                if st.comparison >= 0.75 {
                    st.lambda *= 0.5;
                }
            }
        } else {
            st.lambda_bar = st.lambda;
            st.success = false;
        }

        if !restart_pending {
            if st.comparison < 0.25 {
                st.lambda *= 4.0;
            }
            if st.success {
                st.lambda_bar = 0.0;
                st.k += 1;
            }
        }

        if let Some(fixed) = config.frozen_lambda {
            st.lambda = fixed;
            st.lambda_bar = 0.0;
        }
        fresh_direction = st.success;

        if progress(&st) == Control::Stop {
            return finish(st, Termination::CallbackStop, best_w, best_error);
        }
        if !st.accepted && st.lambda > config.lambda_cap {
            return finish(st, Termination::LambdaOverflow, best_w, best_error);
        }
    }
}
