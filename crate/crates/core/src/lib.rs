//! Incentive compatible selection of an influential agent in a directed
//! acyclic graph, where influence is measured by progeny.
//!
//! The crate provides the graph model ([`graph`]), the influential-node
//! machinery ([`influence`]), the Geometric Mechanism and baselines
//! ([`mechanism`]), brute-force verifiers for incentive compatibility and
//! fairness ([`verify`]), deterministic graph families ([`generators`]) and
//! the equalized worst-case ratio solver ([`bounds`]).

pub mod bounds;
pub mod exact;
pub mod generators;
pub mod graph;
pub mod influence;
pub mod mechanism;
pub mod verify;

pub use graph::{Agent, Dag, GraphError, ProgenyTable, ReportProfile};
pub use influence::{InfluentialNode, InfluentialSet};
pub use mechanism::{
    Mechanism, MechanismError, MechanismKind, Prob, RatioReport, SelectionDistribution,
};
