//! Curriculum training for node classification driven by per-node loss
//! decrease.
//!
//! Each epoch, the loss of every training node is compared with its loss at
//! the previous epoch. Nodes whose loss fell the most are treated as easy and
//! become the most likely to be sampled. The number of sampled nodes grows
//! with a pacing schedule until the whole training set is used. Only sampled
//! nodes are backpropagated.
//!
//! Modules, bottom-up:
//!
//! * [`pacing`]: schedule fraction per epoch and the resulting sample count.
//! * [`difficulty`]: loss decrease, softmax selection distribution, and the
//!   absolute-loss baseline ranking.
//! * [`sampler`]: seeded RNG streams and Gumbel-top-k sampling.
//! * [`nn`]: the MLP classifier, per-node cross-entropy, and masked gradients.
//! * [`data`]: synthetic heterogeneous datasets, aggregation, CSV format.
//! * [`trainer`]: the training loops, evaluation, and telemetry.
//! * [`cli`]: the `ldts` command-line front end.

pub mod cli;
pub mod data;
pub mod difficulty;
pub mod error;
pub mod nn;
pub mod pacing;
pub mod sampler;
pub mod trainer;

pub use error::{LdtsError, Result};
