//! Nash flows over time in fluid queuing networks with several sources and
//! several sinks with demands.
//!
//! The crate constructs equilibria phase by phase from thin flows with
//! resetting and ships an independent checker that re-simulates the queues
//! and certifies the result with exact rational arithmetic.

pub mod checker;
pub mod decomposition;
pub mod engine;
pub mod export;
pub mod generate;
pub mod io;
pub mod network;
pub mod rational;
pub mod report;
pub mod samples;
pub mod super_sink;
pub mod thin_flow;

pub use network::{
    validate_instance, Arc, ArcId, Instance, InstanceBuilder, NodeId, SinkDemand, Source,
    ValidatedInstance, ValidationError, ValidationErrors,
};
pub use rational::{rat, ExtRat, Rat};
pub use report::{CertReport, Violation};
