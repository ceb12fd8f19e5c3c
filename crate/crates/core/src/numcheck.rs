//! Finite-difference oracles for the analytic gradient and Hessian-vector
//! product.
//!
//! `fd_gradient` only ever sees a value function and `fd_hvp` only ever sees
//! a gradient function, so each stays independent of the code path it checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{Dataset, Pattern};
use crate::error::{Error, Result};
use crate::objective::{NetworkObjective, Objective};
use crate::topology::Topology;

/// Smallest denominator used for relative component errors.
pub const RELATIVE_FLOOR: f64 = 1e-8;

/// Central differences `(f(w + h e_k) − f(w − h e_k)) / 2h` per coordinate.
pub fn fd_gradient<F>(value: F, w: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!("step must be positive, got {h}")));
    }
    let mut probe = w.to_vec();
    let mut out = Vec::with_capacity(w.len());
    for k in 0..w.len() {
        probe[k] = w[k] + h;
        let plus = value(&probe);
        probe[k] = w[k] - h;
        let minus = value(&probe);
        probe[k] = w[k];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite("finite-difference evaluation"));
        }
        out.push((plus - minus) / (2.0 * h));
    }
    Ok(out)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Directional difference of the gradient,
/// `(g(w + t v) − g(w − t v)) / 2t` with `t = h (1 + |w|) / (1 + |v|)`.
pub fn fd_hvp<G>(gradient: G, w: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!("step must be positive, got {h}")));
    }
    if w.len() != v.len() {
        return Err(Error::Dimension {
            what: "direction",
            expected: w.len(),
            actual: v.len(),
        });
    }
    let v_norm = norm(v);
    if v_norm == 0.0 {
        return Ok(vec![0.0; w.len()]);
    }
    let t = h * (1.0 + norm(w)) / (1.0 + v_norm);
    let plus: Vec<f64> = w.iter().zip(v).map(|(a, b)| a + t * b).collect();
    let minus: Vec<f64> = w.iter().zip(v).map(|(a, b)| a - t * b).collect();
    let gp = gradient(&plus);
    let gm = gradient(&minus);
    if gp.iter().chain(&gm).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("finite-difference evaluation"));
    }
    Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * t)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Gradient,
    HessianVector,
    Symmetry,
    Linearity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub kind: CheckKind,
    pub trials: usize,
    /// Largest per-component relative error over all trials.
    pub max_relative_error: f64,
    /// Largest relative L2 error over all trials.
    pub l2_relative_error: f64,
    /// Coordinate of the worst component error, in the trial where it occurred.
    pub worst_index: Option<usize>,
    pub worst_trial: Option<usize>,
    pub step: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckReport {
    fn new(kind: CheckKind, step: f64, tolerance: f64) -> Self {
        Self {
            kind,
            trials: 0,
            max_relative_error: 0.0,
            l2_relative_error: 0.0,
            worst_index: None,
            worst_trial: None,
            step,
            tolerance,
            passed: true,
        }
    }

    /// Folds the comparison of one trial into the report. The pass criterion
    /// is on the component error for gradients and on the L2 error otherwise.
    fn record(&mut self, trial: usize, analytic: &[f64], reference: &[f64]) {
        let cmp = compare(analytic, reference);
        self.trials += 1;
        if cmp.max_relative > self.max_relative_error || self.worst_index.is_none() {
            self.max_relative_error = self.max_relative_error.max(cmp.max_relative);
            self.worst_index = cmp.worst_index;
            self.worst_trial = Some(trial);
        }
        self.l2_relative_error = self.l2_relative_error.max(cmp.l2_relative);
        self.passed = self.measure() <= self.tolerance;
    }

    fn record_scalar(&mut self, trial: usize, a: f64, b: f64) {
        let rel = (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR);
        self.trials += 1;
        if rel > self.max_relative_error || self.worst_trial.is_none() {
            self.max_relative_error = self.max_relative_error.max(rel);
            self.worst_trial = Some(trial);
        }
        self.l2_relative_error = self.l2_relative_error.max(rel);
        self.passed = self.measure() <= self.tolerance;
    }

    /// The error the tolerance applies to.
    pub fn measure(&self) -> f64 {
        match self.kind {
            CheckKind::Gradient => self.max_relative_error,
            _ => self.l2_relative_error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub max_relative: f64,
    pub l2_relative: f64,
    pub worst_index: Option<usize>,
}

/// Component errors use `max(|a|, |b|, 1e-8)` as denominator.
pub fn compare(analytic: &[f64], reference: &[f64]) -> Comparison {
    let mut max_relative = 0.0;
    let mut worst_index = None;
    let mut diff_sq = 0.0;
    for (k, (a, b)) in analytic.iter().zip(reference).enumerate() {
        let diff = (a - b).abs();
        diff_sq += diff * diff;
        let rel = diff / a.abs().max(b.abs()).max(RELATIVE_FLOOR);
        if rel > max_relative || worst_index.is_none() {
            max_relative = f64::max(max_relative, rel);
            worst_index = Some(k);
        }
    }
    let scale = norm(analytic).max(norm(reference)).max(RELATIVE_FLOOR);
    Comparison {
        max_relative,
        l2_relative: diff_sq.sqrt() / scale,
        worst_index,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub gradient: f64,
    pub hessian_vector: f64,
    pub symmetry: f64,
    pub linearity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gradient: 1e-5,
            hessian_vector: 1e-4,
            symmetry: 1e-10,
            linearity: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub trials: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Central-difference step for gradients.
    pub gradient_step: f64,
    /// Base step for gradient differences along a direction.
    pub hvp_step: f64,
    /// Fault injection: flips the sign of one analytic gradient component.
    pub corrupt_gradient: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            tolerances: Tolerances::default(),
            gradient_step: 1e-4,
            hvp_step: 1e-5,
            corrupt_gradient: false,
        }
    }
}

/// A randomly drawn network, weight vector and labeled dataset.
#[derive(Debug, Clone)]
pub struct Instance {
    pub topology: Topology,
    pub dataset: Dataset,
    pub weights: Vec<f64>,
}

/// Draws from the family d ≤ 3, n ≤ 3, one or two hidden layers, widths ≤ 5,
/// at most 5 patterns, weights uniform in (−1, 1).
pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let d = rng.random_range(1..=3);
    let n = rng.random_range(1..=3);
    let num_hidden = rng.random_range(1..=2);
    let width = rng.random_range(2..=5);
    let topology = Topology::new(d, n, num_hidden, width).expect("family is valid");
    let count = rng.random_range(1..=5);
    let patterns = (0..count)
        .map(|_| {
            let x = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            Pattern::labeled(x, rng.random_range(1..=n))
        })
        .collect();
    let dataset = Dataset::new(d, n, patterns).expect("family is valid");
    let weights = random_vector(rng, topology.weight_count());
    Instance {
        topology,
        dataset,
        weights,
    }
}

fn random_vector<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_one(
    trial: usize,
    topology: &Topology,
    dataset: &Dataset,
    w: &[f64],
    rng: &mut ChaCha8Rng,
    config: &CheckConfig,
    reports: &mut [CheckReport; 4],
) -> Result<()> {
    let oracle = NetworkObjective::new(topology, dataset)?;
    let nw = topology.weight_count();

    let (_, mut g) = oracle.gradient(w);
    if config.corrupt_gradient {
        let k = rng.random_range(0..nw);
        g[k] = -g[k];
    }
    let fd = fd_gradient(|x| oracle.value(x), w, config.gradient_step)?;
    reports[0].record(trial, &g, &fd);

    let u = random_vector(rng, nw);
    let v = random_vector(rng, nw);
    let hv = oracle.hvp(w, &v);
    let fd_h = fd_hvp(|x| oracle.gradient(x).1, w, &v, config.hvp_step)?;
    reports[1].record(trial, &hv, &fd_h);

    let hu = oracle.hvp(w, &u);
    reports[2].record_scalar(trial, dot(&u, &hv), dot(&v, &hu));

    let alpha = rng.random_range(-2.0..2.0);
    let beta = rng.random_range(-2.0..2.0);
    let combo: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + beta * b).collect();
    let h_combo = oracle.hvp(w, &combo);
    let expected: Vec<f64> = hu.iter().zip(&hv).map(|(a, b)| alpha * a + beta * b).collect();
    reports[3].record(trial, &h_combo, &expected);
    Ok(())
}

fn fresh_reports(config: &CheckConfig) -> [CheckReport; 4] {
    let t = config.tolerances;
    [
        CheckReport::new(CheckKind::Gradient, config.gradient_step, t.gradient),
        CheckReport::new(CheckKind::HessianVector, config.hvp_step, t.hessian_vector),
        CheckReport::new(CheckKind::Symmetry, 0.0, t.symmetry),
        CheckReport::new(CheckKind::Linearity, 0.0, t.linearity),
    ]
}

/// Runs gradient, Hessian-vector, symmetry and linearity checks over
/// `config.trials` random instances. Trial `i` draws from its own stream of
/// the seeded generator.
pub fn check(config: &CheckConfig) -> Result<Vec<CheckReport>> {
    if config.trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let mut reports = fresh_reports(config);
    for trial in 0..config.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(trial as u64);
        let inst = random_instance(&mut rng);
        check_one(
            trial,
            &inst.topology,
            &inst.dataset,
            &inst.weights,
            &mut rng,
            config,
            &mut reports,
        )?;
    }
    Ok(reports.to_vec())
}

/// Same checks on a fixed network and dataset with random weights.
pub fn check_instance(
    topology: &Topology,
    dataset: &Dataset,
    config: &CheckConfig,
) -> Result<Vec<CheckReport>> {
    if config.trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let mut reports = fresh_reports(config);
    for trial in 0..config.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(trial as u64);
        let w = random_vector(&mut rng, topology.weight_count());
        check_one(trial, topology, dataset, &w, &mut rng, config, &mut reports)?;
    }
    Ok(reports.to_vec())
}
