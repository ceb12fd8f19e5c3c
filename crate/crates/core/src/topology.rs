//! Layered network shape and the flat weight-vector layout.
//!
//! Neurons carry 1-based labels numbered left to right, top to bottom within
//! a layer. Every non-output layer ends with a bias neuron whose output is the
//! constant 1. The input layer and the first layer both hold `d + 1` neurons,
//! every further hidden layer holds `hidden_width` neurons (bias included) and
//! the output layer holds `n` computing neurons.
//!
//! Weights are stored layer pair by layer pair. Inside a pair the destination
//! neuron varies slowest and the source neuron fastest, so the weights feeding
//! one neuron are contiguous.

use std::ops::{Deref, DerefMut, Range};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologySpec", into = "TopologySpec")]
pub struct Topology {
    d: usize,
    n: usize,
    num_hidden: usize,
    hidden_width: usize,
    layer_sizes: Vec<usize>,
    /// 0-based index of the first neuron of each layer.
    layer_starts: Vec<usize>,
    /// Offset of the first weight of each layer pair.
    pair_offsets: Vec<usize>,
    nq: usize,
    nw: usize,
}

/// The four numbers a topology is built from; used for persistence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub d: usize,
    pub n: usize,
    pub num_hidden: usize,
    pub hidden_width: usize,
}

impl TryFrom<TopologySpec> for Topology {
    type Error = Error;

    fn try_from(spec: TopologySpec) -> Result<Self> {
        Topology::new(spec.d, spec.n, spec.num_hidden, spec.hidden_width)
    }
}

impl From<Topology> for TopologySpec {
    fn from(t: Topology) -> Self {
        t.spec()
    }
}

impl Topology {
    /// Builds the network shape. `hidden_width` is ignored when
    /// `num_hidden == 1` and is normalized to 0 in that case.
    pub fn new(d: usize, n: usize, num_hidden: usize, hidden_width: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Topology("input dimension d must be positive".into()));
        }
        if n == 0 {
            return Err(Error::Topology("class count n must be positive".into()));
        }
        if num_hidden == 0 {
            return Err(Error::Topology(
                "at least one hidden layer (the first layer) is required".into(),
            ));
        }
        if num_hidden >= 2 && hidden_width < 2 {
            return Err(Error::Topology(format!(
                "hidden layers beyond the first need width >= 2 (bias included), got {hidden_width}"
            )));
        }
        let hidden_width = if num_hidden == 1 { 0 } else { hidden_width };

        let mut layer_sizes = vec![d + 1, d + 1];
        layer_sizes.extend(std::iter::repeat_n(hidden_width, num_hidden - 1));
        layer_sizes.push(n);

        let mut layer_starts = Vec::with_capacity(layer_sizes.len());
        let mut nq = 0;
        for &size in &layer_sizes {
            layer_starts.push(nq);
            nq += size;
        }

        let last = layer_sizes.len() - 1;
        let mut pair_offsets = Vec::with_capacity(last);
        let mut nw = 0;
        for p in 0..last {
            pair_offsets.push(nw);
            let computing = if p + 1 == last {
                layer_sizes[p + 1]
            } else {
                layer_sizes[p + 1] - 1
            };
            nw += layer_sizes[p] * computing;
        }

        Ok(Self {
            d,
            n,
            num_hidden,
            hidden_width,
            layer_sizes,
            layer_starts,
            pair_offsets,
            nq,
            nw,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_hidden(&self) -> usize {
        self.num_hidden
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden_width
    }

    pub fn spec(&self) -> TopologySpec {
        TopologySpec {
            d: self.d,
            n: self.n,
            num_hidden: self.num_hidden,
            hidden_width: self.hidden_width,
        }
    }

    /// Neuron count per layer, input layer first.
    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len()
    }

    /// Total neuron count.
    pub fn nq(&self) -> usize {
        self.nq
    }

    /// Total weight count.
    pub fn weight_count(&self) -> usize {
        self.nw
    }

    /// Labels (1-based, inclusive range as a half-open `Range`) of layer `layer`.
    pub fn layer_labels(&self, layer: usize) -> Range<usize> {
        let start = self.layer_starts[layer] + 1;
        start..start + self.layer_sizes[layer]
    }

    pub(crate) fn layer_start(&self, layer: usize) -> usize {
        self.layer_starts[layer]
    }

    pub(crate) fn pair_offset(&self, pair: usize) -> usize {
        self.pair_offsets[pair]
    }

    /// Number of neurons in `layer` that compute a weighted sum.
    pub fn computing_count(&self, layer: usize) -> usize {
        if layer == 0 {
            0
        } else if layer + 1 == self.layer_sizes.len() {
            self.layer_sizes[layer]
        } else {
            self.layer_sizes[layer] - 1
        }
    }

    pub fn is_output_layer(&self, layer: usize) -> bool {
        layer + 1 == self.layer_sizes.len()
    }

    /// Layer holding the neuron with the given 1-based label.
    pub fn layer_of(&self, label: usize) -> Option<usize> {
        if label == 0 || label > self.nq {
            return None;
        }
        let idx = label - 1;
        self.layer_starts
            .iter()
            .rposition(|&start| start <= idx)
    }

    /// Labels of the output neurons, `nq - n + 1 ..= nq`.
    pub fn output_labels(&self) -> Range<usize> {
        self.layer_labels(self.num_layers() - 1)
    }

    /// Position in the weight vector of the weight from `source_label` into
    /// `dest_label`.
    pub fn weight_index(&self, source_label: usize, dest_label: usize) -> Result<usize> {
        let not_connected = |reason| Error::NotConnected {
            source_label,
            dest_label,
            reason,
        };
        let src_layer = self
            .layer_of(source_label)
            .ok_or(not_connected("source label out of range"))?;
        let dst_layer = self
            .layer_of(dest_label)
            .ok_or(not_connected("destination label out of range"))?;
        if dst_layer == 0 {
            return Err(not_connected("input neurons receive no weights"));
        }
        if dst_layer != src_layer + 1 {
            return Err(not_connected("layers are not adjacent"));
        }
        let j = dest_label - 1 - self.layer_starts[dst_layer];
        if j >= self.computing_count(dst_layer) {
            return Err(not_connected("bias neurons receive no weights"));
        }
        let i = source_label - 1 - self.layer_starts[src_layer];
        Ok(self.pair_offsets[src_layer] + j * self.layer_sizes[src_layer] + i)
    }

    /// Inverse of [`Topology::weight_index`]: `(source_label, dest_label)`.
    pub fn weight_endpoints(&self, index: usize) -> Option<(usize, usize)> {
        if index >= self.nw {
            return None;
        }
        let pair = self.pair_offsets.iter().rposition(|&off| off <= index)?;
        let local = index - self.pair_offsets[pair];
        let width = self.layer_sizes[pair];
        let (j, i) = (local / width, local % width);
        Some((
            self.layer_starts[pair] + i + 1,
            self.layer_starts[pair + 1] + j + 1,
        ))
    }
}

/// The optimization variable: one real per weight, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn zeros(nw: usize) -> Self {
        Self(vec![0.0; nw])
    }

    /// Wraps `values`, rejecting non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weight vector"));
        }
        Ok(Self(values))
    }

    pub fn for_topology(topology: &Topology, values: Vec<f64>) -> Result<Self> {
        if values.len() != topology.weight_count() {
            return Err(Error::Dimension {
                what: "weight vector",
                expected: topology.weight_count(),
                actual: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for WeightVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}
