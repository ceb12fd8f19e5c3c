//! Network evaluation with sigmoid units.

use crate::error::{Error, Result};
use crate::topology::Topology;

/// Outputs closer than this are reported as an ambiguous decision.
pub const AMBIGUITY_MARGIN: f64 = 1e-6;

/// Logistic function, evaluated without overflowing `exp` for any finite input.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-neuron inputs and outputs for one pattern, indexed by `label - 1`.
///
/// `x` is zero for neurons that do not compute (input and bias neurons).
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ForwardTrace {
    pub fn new(topology: &Topology) -> Self {
        Self {
            x: vec![0.0; topology.nq()],
            y: vec![0.0; topology.nq()],
        }
    }

    /// The actual output vector o(a).
    pub fn outputs<'a>(&'a self, topology: &Topology) -> &'a [f64] {
        &self.y[topology.nq() - topology.n()..]
    }
}

/// Fills `trace` for `features`. Lengths are the caller's responsibility.
pub(crate) fn forward_into(
    topology: &Topology,
    weights: &[f64],
    features: &[f64],
    trace: &mut ForwardTrace,
) {
    debug_assert_eq!(features.len(), topology.d());
    debug_assert_eq!(weights.len(), topology.weight_count());

    let d = topology.d();
    trace.y[..d].copy_from_slice(features);
    trace.y[d] = 1.0;
    trace.x[..=d].fill(0.0);

    let sizes = topology.layer_sizes();
    for pair in 0..sizes.len() - 1 {
        let src = topology.layer_start(pair);
        let width = sizes[pair];
        let dst = topology.layer_start(pair + 1);
        let offset = topology.pair_offset(pair);
        let computing = topology.computing_count(pair + 1);
        for j in 0..computing {
            let row = &weights[offset + j * width..offset + (j + 1) * width];
            let sum: f64 = row
                .iter()
                .zip(&trace.y[src..src + width])
                .map(|(w, y)| w * y)
                .sum();
            trace.x[dst + j] = sum;
            trace.y[dst + j] = sigmoid(sum);
        }
        if !topology.is_output_layer(pair + 1) {
            trace.x[dst + computing] = 0.0;
            trace.y[dst + computing] = 1.0;
        }
    }
}

fn check_inputs(topology: &Topology, weights: &[f64], features: &[f64]) -> Result<()> {
    if weights.len() != topology.weight_count() {
        return Err(Error::Dimension {
            what: "weight vector",
            expected: topology.weight_count(),
            actual: weights.len(),
        });
    }
    if features.len() != topology.d() {
        return Err(Error::Dimension {
            what: "pattern features",
            expected: topology.d(),
            actual: features.len(),
        });
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pattern features"));
    }
    Ok(())
}

pub fn forward(topology: &Topology, weights: &[f64], features: &[f64]) -> Result<ForwardTrace> {
    check_inputs(topology, weights, features)?;
    let mut trace = ForwardTrace::new(topology);
    forward_into(topology, weights, features, &mut trace);
    Ok(trace)
}

pub fn output_vector(trace: &ForwardTrace, topology: &Topology) -> Vec<f64> {
    trace.outputs(topology).to_vec()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    /// Predicted class, 1-based.
    pub class: usize,
    pub outputs: Vec<f64>,
    pub ambiguous: bool,
}

/// Argmax decision over an output vector, lowest index winning ties.
pub fn decide(outputs: &[f64]) -> Classification {
    let mut best = 0;
    for (m, &o) in outputs.iter().enumerate().skip(1) {
        if o > outputs[best] {
            best = m;
        }
    }
    let ambiguous = outputs
        .iter()
        .enumerate()
        .any(|(m, &o)| m != best && outputs[best] - o < AMBIGUITY_MARGIN);
    Classification {
        class: best + 1,
        outputs: outputs.to_vec(),
        ambiguous,
    }
}

pub fn classify(topology: &Topology, weights: &[f64], features: &[f64]) -> Result<Classification> {
    let trace = forward(topology, weights, features)?;
    Ok(decide(trace.outputs(topology)))
}
