//! Discrete-event limit order book simulation with an equitability-aware
//! reinforcement-learning market maker.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::large_enum_variant)]

pub mod exchange;
pub mod kernel;
pub mod metrics;
pub mod rl;
pub mod agents;
pub mod harness;
