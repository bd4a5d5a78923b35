//! Simulation and numeric criteria for persistent hubs in generalised
//! preferential attachment trees and their continuous-time branching
//! embeddings.
//!
//! - [`attachment`]: attachment rules and their exact transform identities.
//! - [`weighted_index`]: `O(log n)` dynamic weighted sampling.
//! - [`pa_tree`]: discrete tree growth with step observers.
//! - [`cmj`]: event-driven continuous-time branching simulation.
//! - [`hubs`]: leader tracking and Monte Carlo persistence diagnostics.
//! - [`criteria`]: certified series criteria and the classifier.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attachment;
pub mod cmj;
pub mod criteria;
pub mod error;
pub mod hubs;
pub mod numfmt;
pub mod pa_tree;
pub mod replicate;
pub mod stats;
pub mod weighted_index;

pub use attachment::{AttachmentSpec, Envelope, FiniteDist, PowerBound, TailRule};
pub use error::{Error, Result};
pub use replicate::SimRng;
pub use weighted_index::WeightedIndex;
