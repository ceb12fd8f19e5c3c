//! Total squared error over a training set, its gradient by backpropagation
//! and exact Hessian-vector products by the R-operator.
//!
//! For a pattern `a` with one-hot target `r(a)` the error is
//! `E_a = ½ Σ_m (r(a)_m − o(a)_m)²` and `E = Σ_a E_a`. One sweep per pattern
//! runs the forward pass, then (when asked) the R{x}, R{y} forward pass, then a
//! single right-to-left pass that accumulates both `∂E_a/∂w` and
//! `R{∂E_a/∂w} = (E_a''(w) v)`.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forward::{forward_into, ForwardTrace};
use crate::topology::Topology;

/// The quantities a second-order minimizer needs from its objective.
pub trait Objective {
    fn dimension(&self) -> usize;

    fn value(&self, w: &[f64]) -> f64;

    /// Returns `E(w)` and writes `E'(w)` into `grad`.
    fn value_and_gradient(&self, w: &[f64], grad: &mut [f64]) -> f64;

    /// Writes `E''(w) v` into `out`.
    fn hessian_vector(&self, w: &[f64], v: &[f64], out: &mut [f64]);

    fn gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; self.dimension()];
        let e = self.value_and_gradient(w, &mut g);
        (e, g)
    }

    fn hvp(&self, w: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        self.hessian_vector(w, v, &mut out);
        out
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn value(&self, w: &[f64]) -> f64 {
        (**self).value(w)
    }

    fn value_and_gradient(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        (**self).value_and_gradient(w, grad)
    }

    fn hessian_vector(&self, w: &[f64], v: &[f64], out: &mut [f64]) {
        (**self).hessian_vector(w, v, out)
    }
}

/// Per-neuron R-operator quantities of one pattern, indexed by `label - 1`.
#[derive(Debug, Clone)]
pub struct RTrace {
    pub rx: Vec<f64>,
    pub ry: Vec<f64>,
    pub de_dx: Vec<f64>,
    pub de_dy: Vec<f64>,
    pub r_de_dx: Vec<f64>,
    pub r_de_dy: Vec<f64>,
}

impl RTrace {
    fn new(nq: usize) -> Self {
        Self {
            rx: vec![0.0; nq],
            ry: vec![0.0; nq],
            de_dx: vec![0.0; nq],
            de_dy: vec![0.0; nq],
            r_de_dx: vec![0.0; nq],
            r_de_dy: vec![0.0; nq],
        }
    }
}

struct Scratch {
    forward: ForwardTrace,
    r: RTrace,
}

impl Scratch {
    fn new(topology: &Topology) -> Self {
        Self {
            forward: ForwardTrace::new(topology),
            r: RTrace::new(topology.nq()),
        }
    }
}

/// Squared error of a single pattern; `trace` must already hold its forward pass.
fn pattern_error(topology: &Topology, trace: &ForwardTrace, class: usize) -> f64 {
    let half_sq: f64 = trace
        .outputs(topology)
        .iter()
        .enumerate()
        .map(|(m, &o)| {
            let r = if m + 1 == class { 1.0 } else { 0.0 };
            (r - o) * (r - o)
        })
        .sum();
    0.5 * half_sq
}

/// Feed-forward R pass: `R{x_i} = Σ_k (v_ki y_k + w_ki R{y_k})`,
/// `R{y_i} = σ'(x_i) R{x_i}`. Input and bias neurons have `R{y} = 0`.
fn r_forward(topology: &Topology, w: &[f64], v: &[f64], s: &mut Scratch) {
    let y = &s.forward.y;
    let r = &mut s.r;
    r.rx.fill(0.0);
    r.ry.fill(0.0);
    let sizes = topology.layer_sizes();
    for pair in 0..sizes.len() - 1 {
        let src = topology.layer_start(pair);
        let width = sizes[pair];
        let dst = topology.layer_start(pair + 1);
        let offset = topology.pair_offset(pair);
        for j in 0..topology.computing_count(pair + 1) {
            let base = offset + j * width;
            let mut sum = 0.0;
            for i in 0..width {
                sum += v[base + i] * y[src + i] + w[base + i] * r.ry[src + i];
            }
            let yi = y[dst + j];
            r.rx[dst + j] = sum;
            r.ry[dst + j] = yi * (1.0 - yi) * sum;
        }
    }
}

/// Right-to-left pass accumulating the gradient and, when `hv` is given, the
/// Hessian-vector product of one pattern.
fn backward(
    topology: &Topology,
    w: &[f64],
    v: Option<&[f64]>,
    class: usize,
    s: &mut Scratch,
    grad: Option<&mut [f64]>,
    hv: Option<&mut [f64]>,
) {
    let y = &s.forward.y;
    let r = &mut s.r;
    let with_r = v.is_some() && hv.is_some();
    let sizes = topology.layer_sizes();
    let out_layer = sizes.len() - 1;

    // output layer: ∂E_a/∂y_i = y_i − r(a)_i and R{∂E_a/∂y_i} = R{y_i}
    let out_start = topology.layer_start(out_layer);
    for m in 0..topology.n() {
        let i = out_start + m;
        let target = if m + 1 == class { 1.0 } else { 0.0 };
        r.de_dy[i] = y[i] - target;
        if with_r {
            r.r_de_dy[i] = r.ry[i];
        }
    }

    let mut grad = grad;
    let mut hv = hv;
    for pair in (0..out_layer).rev() {
        let src = topology.layer_start(pair);
        let width = sizes[pair];
        let dst = topology.layer_start(pair + 1);
        let offset = topology.pair_offset(pair);
        let computing = topology.computing_count(pair + 1);

        // ∂E_a/∂x_i = ∂E_a/∂y_i σ'(x_i), and its R-image
        // R{∂E_a/∂y_i} σ'(x_i) + ∂E_a/∂y_i σ''(x_i) R{x_i} with σ'' = (1 − 2y)σ'
        for j in 0..computing {
            let i = dst + j;
            let yi = y[i];
            let d1 = yi * (1.0 - yi);
            r.de_dx[i] = r.de_dy[i] * d1;
            if with_r {
                let d2 = (1.0 - 2.0 * yi) * d1;
                r.r_de_dx[i] = r.r_de_dy[i] * d1 + r.de_dy[i] * d2 * r.rx[i];
            }
        }

        // Sources of this pair that compute (not input, not bias) need
        // ∂E_a/∂y for the next pair to the left.
        let src_computing = topology.computing_count(pair);
        if src_computing > 0 {
            r.de_dy[src..src + src_computing].fill(0.0);
            if with_r {
                r.r_de_dy[src..src + src_computing].fill(0.0);
            }
        }

        for j in 0..computing {
            let i = dst + j;
            let base = offset + j * width;
            let dx = r.de_dx[i];
            if let Some(g) = grad.as_deref_mut() {
                for k in 0..width {
                    g[base + k] += dx * y[src + k];
                }
            }
            if let (Some(h), true) = (hv.as_deref_mut(), v.is_some()) {
                let rdx = r.r_de_dx[i];
                for k in 0..width {
                    h[base + k] += rdx * y[src + k] + dx * r.ry[src + k];
                }
            }
            for k in 0..src_computing {
                r.de_dy[src + k] += dx * w[base + k];
                if let Some(v) = v.filter(|_| with_r) {
                    r.r_de_dy[src + k] += r.r_de_dx[i] * w[base + k] + dx * v[base + k];
                }
            }
        }
    }
}

/// Squared error, gradient and Hessian-vector product of a network on a
/// labeled dataset.
#[derive(Debug, Clone)]
pub struct NetworkObjective<'a> {
    topology: &'a Topology,
    features: Vec<&'a [f64]>,
    classes: Vec<usize>,
}

impl<'a> NetworkObjective<'a> {
    pub fn new(topology: &'a Topology, dataset: &'a Dataset) -> Result<Self> {
        dataset.check_topology(topology)?;
        let classes = dataset.labels()?;
        let features = dataset.patterns().iter().map(|p| p.features.as_slice()).collect();
        Ok(Self {
            topology,
            features,
            classes,
        })
    }

    pub fn topology(&self) -> &Topology {
        self.topology
    }

    pub fn pattern_count(&self) -> usize {
        self.classes.len()
    }

    fn check(&self, what: &'static str, len: usize) {
        assert_eq!(
            len,
            self.topology.weight_count(),
            "{what} length does not match the weight count"
        );
    }

    /// Error and gradient contributed by pattern `index` alone.
    pub fn pattern_gradient(&self, w: &[f64], index: usize) -> (f64, Vec<f64>) {
        self.check("weight vector", w.len());
        let mut s = Scratch::new(self.topology);
        let mut g = vec![0.0; w.len()];
        forward_into(self.topology, w, self.features[index], &mut s.forward);
        let e = pattern_error(self.topology, &s.forward, self.classes[index]);
        backward(self.topology, w, None, self.classes[index], &mut s, Some(&mut g), None);
        (e, g)
    }

    /// Computes `E`, `E'` and `E''v` together in one sweep over the patterns.
    pub fn value_gradient_hvp(
        &self,
        w: &[f64],
        v: &[f64],
        grad: &mut [f64],
        hv: &mut [f64],
    ) -> f64 {
        self.check("weight vector", w.len());
        self.check("direction", v.len());
        grad.fill(0.0);
        hv.fill(0.0);
        let mut s = Scratch::new(self.topology);
        let mut total = 0.0;
        for (x, &class) in self.features.iter().zip(&self.classes) {
            forward_into(self.topology, w, x, &mut s.forward);
            total += pattern_error(self.topology, &s.forward, class);
            r_forward(self.topology, w, v, &mut s);
            backward(self.topology, w, Some(v), class, &mut s, Some(grad), Some(hv));
        }
        total
    }
}

impl Objective for NetworkObjective<'_> {
    fn dimension(&self) -> usize {
        self.topology.weight_count()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.check("weight vector", w.len());
        let mut trace = ForwardTrace::new(self.topology);
        let mut total = 0.0;
        for (x, &class) in self.features.iter().zip(&self.classes) {
            forward_into(self.topology, w, x, &mut trace);
            total += pattern_error(self.topology, &trace, class);
        }
        total
    }

    fn value_and_gradient(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        self.check("weight vector", w.len());
        self.check("gradient buffer", grad.len());
        grad.fill(0.0);
        let mut s = Scratch::new(self.topology);
        let mut total = 0.0;
        for (x, &class) in self.features.iter().zip(&self.classes) {
            forward_into(self.topology, w, x, &mut s.forward);
            total += pattern_error(self.topology, &s.forward, class);
            backward(self.topology, w, None, class, &mut s, Some(grad), None);
        }
        total
    }

    fn hessian_vector(&self, w: &[f64], v: &[f64], out: &mut [f64]) {
        self.check("weight vector", w.len());
        self.check("direction", v.len());
        self.check("output buffer", out.len());
        out.fill(0.0);
        let mut s = Scratch::new(self.topology);
        for (x, &class) in self.features.iter().zip(&self.classes) {
            forward_into(self.topology, w, x, &mut s.forward);
            r_forward(self.topology, w, v, &mut s);
            backward(self.topology, w, Some(v), class, &mut s, None, Some(out));
        }
    }
}

/// Builds the objective over `dataset` for networks shaped like `topology`.
pub fn make_oracle<'a>(topology: &'a Topology, dataset: &'a Dataset) -> Result<NetworkObjective<'a>> {
    NetworkObjective::new(topology, dataset)
}

fn check_weights(topology: &Topology, w: &[f64]) -> Result<()> {
    if w.len() != topology.weight_count() {
        return Err(Error::Dimension {
            what: "weight vector",
            expected: topology.weight_count(),
            actual: w.len(),
        });
    }
    Ok(())
}

pub fn squared_error(topology: &Topology, w: &[f64], dataset: &Dataset) -> Result<f64> {
    check_weights(topology, w)?;
    Ok(NetworkObjective::new(topology, dataset)?.value(w))
}

pub fn gradient(topology: &Topology, w: &[f64], dataset: &Dataset) -> Result<(f64, Vec<f64>)> {
    check_weights(topology, w)?;
    Ok(NetworkObjective::new(topology, dataset)?.gradient(w))
}

pub fn hessian_vector(
    topology: &Topology,
    w: &[f64],
    dataset: &Dataset,
    v: &[f64],
) -> Result<Vec<f64>> {
    check_weights(topology, w)?;
    if v.len() != topology.weight_count() {
        return Err(Error::Dimension {
            what: "direction",
            expected: topology.weight_count(),
            actual: v.len(),
        });
    }
    Ok(NetworkObjective::new(topology, dataset)?.hvp(w, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{cushing_training_data, Pattern};

    #[test]
    fn zero_weight_error() {
        let t = Topology::new(2, 3, 2, 4).unwrap();
        let data = cushing_training_data();
        assert_eq!(squared_error(&t, &[0.0; 27], &data).unwrap(), 7.875);
        let oracle = make_oracle(&t, &data).unwrap();
        assert_eq!(oracle.dimension(), 27);
        assert_eq!(oracle.value(&[0.0; 27]), 0.125 * 3.0 * 21.0);
    }

    #[test]
    fn zero_weight_gradient_structure() {
        let t = Topology::new(2, 3, 2, 4).unwrap();
        let data = cushing_training_data();
        let (_, g) = gradient(&t, &[0.0; 27], &data).unwrap();
        let last_pair_start = t.pair_offset(t.num_layers() - 2);
        assert!(g[..last_pair_start].iter().all(|&c| c == 0.0));
        assert!(g[last_pair_start..].iter().any(|&c| c != 0.0));
    }

    #[test]
    fn bias_to_output_hand_value() {
        let t = Topology::new(1, 2, 1, 0).unwrap();
        let data = Dataset::new(1, 2, vec![Pattern::labeled(vec![0.7], 1)]).unwrap();
        let (e, g) = gradient(&t, &[0.0; 6], &data).unwrap();
        assert_eq!(e, 0.25);
        assert_eq!(g[t.weight_index(4, 5).unwrap()], -0.125);
        assert_eq!(g[t.weight_index(4, 6).unwrap()], 0.125);
    }

    #[test]
    fn hvp_of_zero_direction_is_zero() {
        let t = Topology::new(2, 3, 2, 4).unwrap();
        let data = cushing_training_data();
        let w: Vec<f64> = (0..27).map(|k| ((k * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let hv = hessian_vector(&t, &w, &data, &[0.0; 27]).unwrap();
        assert!(hv.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn fused_sweep_matches_separate_calls() {
        let t = Topology::new(2, 3, 2, 4).unwrap();
        let data = cushing_training_data();
        let oracle = make_oracle(&t, &data).unwrap();
        let w: Vec<f64> = (0..27).map(|k| ((k * 5 % 13) as f64 - 6.0) / 6.0).collect();
        let v: Vec<f64> = (0..27).map(|k| ((k * 3 % 7) as f64 - 3.0) / 3.0).collect();
        let mut g = vec![0.0; 27];
        let mut hv = vec![0.0; 27];
        let e = oracle.value_gradient_hvp(&w, &v, &mut g, &mut hv);
        let (e2, g2) = oracle.gradient(&w);
        assert_eq!(e, e2);
        assert_eq!(e, oracle.value(&w));
        assert_eq!(g, g2);
        assert_eq!(hv, oracle.hvp(&w, &v));
    }

    #[test]
    fn dimension_errors() {
        let t = Topology::new(2, 3, 2, 4).unwrap();
        let data = cushing_training_data();
        assert!(squared_error(&t, &[0.0; 26], &data).is_err());
        assert!(hessian_vector(&t, &[0.0; 27], &data, &[0.0; 3]).is_err());
        let wrong = Topology::new(3, 3, 1, 0).unwrap();
        assert!(make_oracle(&wrong, &data).is_err());
        let unlabeled = crate::dataset::cushing_unknown_data();
        assert!(matches!(
            make_oracle(&t, &unlabeled),
            Err(Error::Unlabeled { index: 0 })
        ));
    }
}
