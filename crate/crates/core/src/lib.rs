//! Pauli-graph intermediate representation for quantum circuits.
//!
//! Circuits are compiled into a DAG of Pauli rotations, preparations and
//! measurements followed by a single Clifford frame and a classical
//! remapping, optimized under a "hold" or "release" outcome, and
//! re-synthesized by a greedy search over two-qubit entangling gates.
//! [`sim`] is a dense cq-state simulator used as the equivalence oracle.

pub mod bench;
pub mod circuit;
pub mod frame;
pub mod graph;
pub mod nodes;
pub mod opt;
pub mod pauli;
pub mod pipeline;
pub mod sim;
pub mod synth;

pub use circuit::{Circuit, Gate};
pub use frame::PauliFrame;
pub use graph::{Graph, Program};
pub use nodes::{Cvar, Msf, Node};
pub use pauli::{Letter, Pauli};
pub use pipeline::{GateSet, Outcome, SearchConfig};
