use pcoast_core::bench::random_corpus;
use pcoast_core::pipeline::{run, verify, GateSet, Outcome, SearchConfig};

fn check_corpus(outcome: Outcome, gateset: GateSet) {
    let cfg = SearchConfig {
        gateset,
        ..SearchConfig::default()
    };
    for (k, c) in random_corpus(11, 200, 4, 30).iter().enumerate() {
        let out = run(c, outcome, &cfg).unwrap();
        assert!(
            verify(c, &out, outcome, k as u64).unwrap(),
            "case {k} {outcome} {gateset}\n{}\n{}\n{}\nperm {:?} mu {:?}",
            c.emit(),
            out.optimized.dump(),
            out.result.circuit.emit(),
            out.result.permutation,
            out.result.msf.render()
        );
    }
}

#[test]
fn hold_generic() {
    check_corpus(Outcome::Hold, GateSet::Generic);
}

#[test]
fn hold_native() {
    check_corpus(Outcome::Hold, GateSet::Native);
}

#[test]
fn release_generic() {
    check_corpus(Outcome::Release, GateSet::Generic);
}

#[test]
fn release_native() {
    check_corpus(Outcome::Release, GateSet::Native);
}

#[test]
fn explicit_swaps_verify() {
    let cfg = SearchConfig {
        emit_swaps: true,
        ..SearchConfig::default()
    };
    for (k, c) in random_corpus(12, 60, 4, 30).iter().enumerate() {
        let out = run(c, Outcome::Hold, &cfg).unwrap();
        assert!(out
            .result
            .permutation
            .iter()
            .enumerate()
            .all(|(j, &p)| j == p));
        assert!(
            verify(c, &out, Outcome::Hold, k as u64).unwrap(),
            "case {k}"
        );
    }
}

#[test]
fn corrupted_output_is_caught() {
    let cfg = SearchConfig::default();
    let mut tried = 0;
    for (k, c) in random_corpus(13, 40, 4, 30).iter().enumerate() {
        let out = run(c, Outcome::Hold, &cfg).unwrap();
        if out.result.circuit.gates.is_empty() {
            continue;
        }
        tried += 1;
        // No single-qubit state is fixed by both rotations.
        let caught = [pcoast_core::Gate::RX(0, 0.7), pcoast_core::Gate::RY(0, 0.7)]
            .into_iter()
            .any(|g| {
                let mut bad = out.clone();
                bad.result.circuit.gates.push(g);
                !verify(c, &bad, Outcome::Hold, k as u64).unwrap()
            });
        assert!(caught, "case {k}");
    }
    assert!(tried > 20);
}
