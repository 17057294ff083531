use pcoast_core::bench::random_corpus;
use pcoast_core::graph::circuit_to_graph;
use pcoast_core::sim::{equiv_hold, hold_inputs, run_circuit, CqState, EQUIV_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn compiled_term_is_hold_equivalent_to_circuit() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (k, c) in random_corpus(1, 200, 5, 30).iter().enumerate() {
        let prog = circuit_to_graph(c).unwrap();
        assert!(
            prog.check_invariants().is_empty(),
            "case {k}: {:?}",
            prog.check_invariants()
        );
        for init in hold_inputs(c.n_qubits, &mut rng, 1) {
            let a = run_circuit(c, &init).unwrap();
            let mut b = CqState::new(c.n_qubits, &init).unwrap();
            for node in prog.term() {
                b.apply_node(&node).unwrap();
            }
            b.marginalize(|v| prog.is_user_cvar(v)).unwrap();
            assert!(
                equiv_hold(&a, &b, EQUIV_TOL),
                "case {k}\n{}\n{}",
                c.emit(),
                prog.dump()
            );
        }
    }
}
