//! Compile, optimize and synthesize, plus oracle checks of the result.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::Circuit;
use crate::graph::{circuit_to_graph, GraphError, Program};
use crate::nodes::Msf;
use crate::opt::optimize;
use crate::sim::{
    equiv_hold, equiv_release, hold_inputs, run_circuit, run_circuit_keeping, CqState, Init,
    SimError, EQUIV_TOL,
};
use crate::synth::{synthesize, SynthResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Hold,
    Release,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GateSet {
    Generic,
    Native,
}

impl FromStr for Outcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hold" => Ok(Outcome::Hold),
            "release" => Ok(Outcome::Release),
            _ => Err(format!("unknown outcome `{s}`")),
        }
    }
}

impl FromStr for GateSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "generic" => Ok(GateSet::Generic),
            "native" => Ok(GateSet::Native),
            _ => Err(format!("unknown gate set `{s}`")),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Hold => "hold",
            Outcome::Release => "release",
        })
    }
}

impl fmt::Display for GateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateSet::Generic => "generic",
            GateSet::Native => "native",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchConfig {
    /// Bonus for entanglers that fit into the current depth.
    pub credit: f64,
    /// Weight nodes in BEGIN by `|G| / |BEGIN|` in the gate cost.
    pub free_node_weighting: bool,
    pub gateset: GateSet,
    /// Seeds the random inputs used by verification.
    pub seed: u64,
    /// Realize the final qubit permutation with SWAPs.
    pub emit_swaps: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            credit: 1.0,
            free_node_weighting: false,
            gateset: GateSet::Generic,
            seed: 0,
            emit_swaps: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("compile: {0}")]
    Compile(#[from] GraphError),
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub compile: Duration,
    pub optimize: Duration,
    pub synthesize: Duration,
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub compiled: Program,
    pub optimized: Program,
    pub result: SynthResult,
    pub log: Vec<String>,
    pub timings: Timings,
}

pub fn compile(c: &Circuit) -> Result<Program, PipelineError> {
    let p = circuit_to_graph(c)?;
    check(&p)?;
    Ok(p)
}

fn check(p: &Program) -> Result<(), PipelineError> {
    match p.check_invariants().first() {
        Some(e) => Err(PipelineError::Invariant(e.clone())),
        None => Ok(()),
    }
}

pub fn run(c: &Circuit, outcome: Outcome, cfg: &SearchConfig) -> Result<Compiled, PipelineError> {
    let t = Instant::now();
    let compiled = compile(c)?;
    let compile_time = t.elapsed();
    let t = Instant::now();
    let mut log = Vec::new();
    let optimized = optimize(&compiled, outcome, &mut log);
    check(&optimized)?;
    let optimize_time = t.elapsed();
    let t = Instant::now();
    let mut result = synthesize(&optimized, outcome, cfg);
    result.circuit.n_cbits = result.circuit.n_cbits.max(c.n_cbits);
    Ok(Compiled {
        compiled,
        optimized,
        result,
        log,
        timings: Timings {
            compile: compile_time,
            optimize: optimize_time,
            synthesize: t.elapsed(),
        },
    })
}

/// Runs a program term and keeps only the user's classical bits.
pub fn run_program(p: &Program, init: &Init) -> Result<CqState, SimError> {
    let mut s = CqState::new(p.n_qubits, init)?;
    for node in p.term() {
        s.apply_node(&node)?;
    }
    s.marginalize(|v| p.is_user_cvar(v))?;
    Ok(s)
}

/// Runs a synthesized circuit, undoes the qubit relabeling, applies `μ`
/// and keeps the classical bits below `n_user`.
pub fn run_output(
    circuit: &Circuit,
    permutation: &[usize],
    msf: &Msf,
    n_user: u32,
    init: &Init,
) -> Result<CqState, SimError> {
    let sources = msf.sources();
    let keep = |v: crate::nodes::Cvar| v.0 < n_user || sources.contains(&v);
    let mut s = run_circuit_keeping(circuit, init, &keep)?;
    s.permute_qubits(permutation);
    s.apply_msf(msf)?;
    s.marginalize(|v| v.0 < n_user)?;
    Ok(s)
}

fn equivalent(a: &CqState, b: &CqState, outcome: Outcome) -> bool {
    match outcome {
        Outcome::Hold => equiv_hold(a, b, EQUIV_TOL),
        Outcome::Release => equiv_release(a, b, EQUIV_TOL),
    }
}

/// Oracle check of every stage against the input circuit.
pub fn verify(
    c: &Circuit,
    out: &Compiled,
    outcome: Outcome,
    seed: u64,
) -> Result<bool, PipelineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_user = c.n_cbits as u32;
    for init in hold_inputs(c.n_qubits, &mut rng, 1) {
        let reference = run_circuit(c, &init)?;
        let opt = run_program(&out.optimized, &init)?;
        let r = &out.result;
        let synth = run_output(&r.circuit, &r.permutation, &r.msf, n_user, &init)?;
        if !equivalent(&reference, &opt, outcome) || !equivalent(&reference, &synth, outcome) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for o in [Outcome::Hold, Outcome::Release] {
            assert_eq!(o.to_string().parse::<Outcome>().unwrap(), o);
        }
        for g in [GateSet::Generic, GateSet::Native] {
            assert_eq!(g.to_string().parse::<GateSet>().unwrap(), g);
        }
        assert!("maybe".parse::<Outcome>().is_err());
    }

    #[test]
    fn empty_program_gives_empty_circuit() {
        let c = Circuit::new(2, 0);
        let out = run(&c, Outcome::Hold, &SearchConfig::default()).unwrap();
        assert!(out.result.circuit.gates.is_empty());
        assert!(verify(&c, &out, Outcome::Hold, 1).unwrap());
    }

    #[test]
    fn small_circuit_verifies_in_both_modes() {
        let c =
            Circuit::parse("qubits 2\ncbits 2\nh q0\ncnot q0 q1\nt q1\nmeasz q1 -> c0").unwrap();
        for outcome in [Outcome::Hold, Outcome::Release] {
            for gateset in [GateSet::Generic, GateSet::Native] {
                let cfg = SearchConfig {
                    gateset,
                    ..SearchConfig::default()
                };
                let out = run(&c, outcome, &cfg).unwrap();
                assert!(
                    verify(&c, &out, outcome, 3).unwrap(),
                    "{outcome} {gateset}\n{}",
                    out.result.circuit.emit()
                );
            }
        }
    }
}
