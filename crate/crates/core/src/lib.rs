//! Batch training of sigmoid classifier networks by a hybrid of scaled
//! conjugate gradient and simulated annealing.
//!
//! The network objective is the total squared error between one-hot desired
//! responses and network outputs. Its gradient comes from backpropagation and
//! its exact Hessian-vector products from the R-operator, which together feed
//! Møller's scaled conjugate gradient method. Low-intensity annealing picks
//! starting points, high-intensity annealing rescues runs stuck in a local
//! minimum, and [`trainer::train`] ties the phases together.
//!
//! ```
//! use scgnet::dataset::cushing_training_data;
//! use scgnet::objective::{make_oracle, Objective};
//! use scgnet::topology::Topology;
//!
//! let topology = Topology::new(2, 3, 2, 4).unwrap();
//! let data = cushing_training_data();
//! let oracle = make_oracle(&topology, &data).unwrap();
//! assert_eq!(oracle.dimension(), 27);
//! assert_eq!(oracle.value(&[0.0; 27]), 7.875);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod annealing;
pub mod dataset;
pub mod error;
pub mod forward;
pub mod model;
pub mod numcheck;
pub mod objective;
pub mod scg;
pub mod topology;
pub mod trainer;

pub use error::{Error, Result};
pub use topology::{Topology, WeightVector};
