#![allow(clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scgnet::dataset::cushing_training_data;
use scgnet::objective::{NetworkObjective, Objective};
use scgnet::scg::{minimize, minimize_with, Control, ScgConfig, ScgState, Termination};
use scgnet::Topology;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// f(w) = ½ wᵀ A w − bᵀ w
struct Quadratic {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl Quadratic {
    fn mul(&self, v: &[f64]) -> Vec<f64> {
        self.a.iter().map(|row| dot(row, v)).collect()
    }
}

impl Objective for Quadratic {
    fn dimension(&self) -> usize {
        self.b.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        0.5 * dot(w, &self.mul(w)) - dot(&self.b, w)
    }

    fn value_and_gradient(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let aw = self.mul(w);
        for ((g, a), b) in grad.iter_mut().zip(&aw).zip(&self.b) {
            *g = a - b;
        }
        0.5 * dot(w, &aw) - dot(&self.b, w)
    }

    fn hessian_vector(&self, _w: &[f64], v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.mul(v));
    }
}

/// Random SPD matrix Q diag(eigs) Qᵀ; Q from Gram-Schmidt on a random matrix.
fn spd(rng: &mut ChaCha8Rng, eigs: &[f64]) -> Vec<Vec<f64>> {
    let n = eigs.len();
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for u in &q {
            let c = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
        }
        let len = norm(&v);
        if len > 1e-3 {
            q.push(v.iter().map(|x| x / len).collect());
        }
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| q[k][i] * eigs[k] * q[k][j]).sum())
                .collect()
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
fn solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| row.iter().copied().chain([bi]).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][n] - s) / m[row][row];
    }
    x
}

fn random_problem(seed: u64) -> Quadratic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = rng.random_range(2.0..100.0);
    let mut eigs = vec![1.0, hi];
    eigs.extend((0..3).map(|_| rng.random_range(1.0..hi)));
    let a = spd(&mut rng, &eigs);
    let b = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    Quadratic { a, b }
}

#[test]
fn direct_solver_oracle() {
    let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
    let x = solve(&a, &[3.0, 5.0]);
    assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
}

#[test]
fn spd_quadratics_match_direct_solve() {
    for seed in 0..50 {
        let q = random_problem(seed);
        let res = minimize(&q, &[0.0; 5], &ScgConfig::default());
        let (_, g) = q.gradient(&res.w);
        assert_eq!(res.termination, Termination::GradientSmall, "seed {seed}");
        assert!(norm(&g) < 1e-6, "seed {seed}");
        let exact = solve(&q.a, &q.b);
        let diff: Vec<f64> = res.w.iter().zip(&exact).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-5 * norm(&exact), "seed {seed}");
    }
}

#[test]
fn undamped_run_terminates_like_linear_cg() {
    // one steepest-descent step (the k = 0 restart) followed by five
    // conjugate steps
    for seed in 0..50 {
        let q = random_problem(seed);
        let config = ScgConfig {
            frozen_lambda: Some(0.0),
            ..ScgConfig::default()
        };
        let res = minimize(&q, &[0.0; 5], &config);
        assert_eq!(res.termination, Termination::GradientSmall, "seed {seed}");
        assert!(res.iterations <= 6, "seed {seed}: {} iterations", res.iterations);
    }
}

#[test]
fn directions_are_conjugate_without_damping() {
    let q = random_problem(3);
    let config = ScgConfig {
        frozen_lambda: Some(0.0),
        ..ScgConfig::default()
    };
    let mut directions: Vec<(Vec<f64>, bool)> = Vec::new();
    minimize_with(&q, &[0.5; 5], &config, |st| {
        if st.passes == 0 || st.accepted {
            directions.push((st.p.clone(), st.restarted));
        }
        Control::Continue
    });
    assert!(directions.len() >= 3);
    for pair in directions.windows(2) {
        let (prev, _) = &pair[0];
        let (next, restarted) = &pair[1];
        if *restarted || next == prev {
            continue;
        }
        let cross = dot(next, &q.mul(prev)).abs();
        let scale = norm(next) * norm(&q.mul(prev));
        assert!(cross <= 1e-8 * scale.max(1e-300), "{cross} vs {scale}");
    }
}

#[test]
fn negative_curvature_keeps_delta_positive() {
    let q = Quadratic {
        a: vec![vec![-1.0]],
        b: vec![0.0],
    };
    let mut states = 0;
    let config = ScgConfig::default().with_max_iterations(30);
    minimize_with(&q, &[1.0], &config, |st| {
        if st.passes > 0 {
            states += 1;
            assert!(st.delta > 0.0, "pass {}: δ = {}", st.passes, st.delta);
        }
        if st.passes == 1 {
            assert!(st.scaled);
            assert!((st.delta - 1.0).abs() < 1e-15);
        }
        Control::Continue
    });
    assert!(states > 1);
}

fn cushing_run(seed: u64, passes: usize) -> Vec<ScgState> {
    let t = Topology::new(2, 3, 2, 4).unwrap();
    let data = cushing_training_data();
    let oracle = NetworkObjective::new(&t, &data).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w0: Vec<f64> = (0..oracle.dimension()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut states = Vec::new();
    minimize_with(&oracle, &w0, &ScgConfig::default().with_max_iterations(passes), |st| {
        states.push(st.clone());
        Control::Continue
    });
    states
}

#[test]
fn error_never_increases_and_delta_positive() {
    for seed in 0..5 {
        let states = cushing_run(seed, 400);
        for pair in states.windows(2) {
            assert!(pair[1].error <= pair[0].error, "seed {seed}");
            assert!(pair[1].delta > 0.0, "seed {seed}");
            if !pair[1].accepted {
                assert_eq!(pair[1].w, pair[0].w);
                assert_eq!(pair[1].p, pair[0].p);
            }
        }
    }
}

#[test]
fn restarts_follow_the_rule() {
    let states = cushing_run(1, 600);
    let nw = states[0].w.len();
    let mut restarts = 0;
    for pair in states.windows(2) {
        let (before, after) = (&pair[0], &pair[1]);
        if !after.accepted {
            continue;
        }
        let expected = !before.success || before.k % nw == 0;
        assert_eq!(after.restarted, expected, "k = {}", before.k);
        if after.restarted {
            restarts += 1;
            assert_eq!(after.p, after.r);
            assert_eq!(after.lambda, 1e-4);
            assert_eq!(after.lambda_bar, 0.0);
            assert!(after.success);
        }
    }
    assert!(restarts >= 1);
}

#[test]
fn failed_steps_raise_damping() {
    let mut failures = 0;
    for seed in 0..10 {
        let states = cushing_run(seed, 400);
        for pair in states.windows(2) {
            let (before, after) = (&pair[0], &pair[1]);
            if after.accepted || after.passes == 0 {
                continue;
            }
            failures += 1;
            assert!(after.comparison < 0.0);
            assert!(!after.success);
            assert_eq!(after.lambda, 4.0 * after.lambda_bar);
            assert_eq!(after.k, before.k);
        }
    }
    assert!(failures > 0, "no failed step observed");
}

#[test]
fn accepted_steps_count_matches() {
    let states = cushing_run(2, 200);
    let accepted = states.iter().filter(|s| s.accepted).count();
    assert_eq!(states.last().unwrap().k, accepted);
}
