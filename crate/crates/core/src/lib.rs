//! Finite Markov decision processes with exact and floating-point scalars.

pub mod error;
pub mod generate;
pub mod graph;
pub mod harness;
pub mod learn_average;
pub mod learn_q;
pub mod linalg;
pub mod mdp;
pub mod metrics;
pub mod model_file;
pub mod rational_forms;
pub mod rng;
pub mod robustness;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use mdp::{
    induce_chain, ActionId, ActionStructure, MarkovChain, Mdp, PriorKnowledge, StateId, StationaryPolicy, Step,
    Trajectory,
};
pub use rng::SimRng;
pub use scalar::{Rational, Scalar};
pub use solvers::QTable;
