//! Bayesian estimation of intervention distributions and causal effects
//! between categorical variables when the causal DAG is unknown.
//!
//! The pipeline runs from data to effect rankings:
//!
//! 1. [`structlearn`] draws DAGs from the structure posterior (exact
//!    enumeration for tiny graphs, edge-move MCMC otherwise).
//! 2. [`structlearn::adjustment_posterior`] tallies the adjustment set of a
//!    chosen class ([`graph::AdjustmentKind`]) over the sampled DAGs.
//! 3. [`posterior`] turns each adjustment set into a Dirichlet backdoor
//!    posterior over the intervention probability table (IPT) and mixes them.
//! 4. [`effects`] maps IPT draws to Jensen-Shannon or average treatment
//!    effects and summarizes them by posterior means and mean ranks.
//!
//! [`catbn`] provides ground-truth networks and exact intervention oracles,
//! and [`harness`] holds the IDA baselines, metrics and experiment runner.

pub mod catbn;
pub mod data;
pub mod effects;
pub mod error;
pub mod graph;
pub mod harness;
pub mod posterior;
pub mod rng;
pub mod scoring;
pub mod structlearn;

pub use catbn::{CptNetwork, EffectMatrix, Ipt, IptMatrix};
pub use data::Dataset;
pub use effects::{EffectKind, EffectTable};
pub use error::{Error, Result};
pub use graph::{AdjustmentKind, AdjustmentSet, Dag, Pdag};
