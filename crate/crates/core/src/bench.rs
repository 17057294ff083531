//! Benchmark circuit families and the seeded random corpus.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate};
use crate::nodes::Cvar;

/// `exp(−iθ/2 · Z_a Z_b)` as CNOT, RZ, CNOT.
fn zz(c: &mut Circuit, a: usize, b: usize, theta: f64) {
    c.push(Gate::CNOT(a, b))
        .push(Gate::RZ(b, theta))
        .push(Gate::CNOT(a, b));
}

/// Controlled phase as three rotations.
fn cphase(c: &mut Circuit, a: usize, b: usize, phi: f64) {
    c.push(Gate::RZ(a, phi / 2.0)).push(Gate::RZ(b, phi / 2.0));
    zz(c, a, b, -phi / 2.0);
}

/// Quantum Fourier transform without the final qubit reversal.
pub fn qft(n: usize) -> Circuit {
    let mut c = Circuit::new(n, 0);
    for j in 0..n {
        c.push(Gate::H(j));
        for k in j + 1..n {
            cphase(&mut c, k, j, PI / f64::powi(2.0, (k - j) as i32));
        }
    }
    c
}

/// Grover diffusion operator; the multi-controlled Z is expanded as a
/// phase polynomial with `2^n − 1` parity rotations, so `n` is capped at 12.
pub fn grover(n: usize) -> Circuit {
    let n = n.clamp(1, 12);
    let mut c = Circuit::new(n, 0);
    for q in 0..n {
        c.push(Gate::H(q)).push(Gate::X(q));
    }
    for mask in 1u32..(1 << n) {
        let qs: Vec<usize> = (0..n).filter(|&q| (mask >> q) & 1 == 1).collect();
        let sign = if qs.len() % 2 == 0 { -1.0 } else { 1.0 };
        let theta = sign * PI / f64::powi(2.0, n as i32 - 1);
        let last = *qs.last().expect("non-empty mask");
        for w in qs.windows(2) {
            c.push(Gate::CNOT(w[0], w[1]));
        }
        c.push(Gate::RZ(last, theta));
        for w in qs.windows(2).rev() {
            c.push(Gate::CNOT(w[0], w[1]));
        }
    }
    for q in 0..n {
        c.push(Gate::X(q)).push(Gate::H(q));
    }
    c
}

/// Hardware-efficient ansatz: RY/RZ layers with a CNOT ladder.
pub fn hea(n: usize, layers: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n, 0);
    for _ in 0..layers {
        for q in 0..n {
            c.push(Gate::RY(q, rng.gen_range(-PI..PI)));
            c.push(Gate::RZ(q, rng.gen_range(-PI..PI)));
        }
        for q in 0..n.saturating_sub(1) {
            c.push(Gate::CNOT(q, q + 1));
        }
    }
    c
}

/// QAOA ansatz on a ring plus random chords.
pub fn qaoa(n: usize, p: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = if n > 1 {
        (0..n).map(|q| (q, (q + 1) % n)).collect()
    } else {
        vec![]
    };
    if n == 2 {
        edges.truncate(1);
    }
    for _ in 0..n / 2 {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && !edges.contains(&(a, b)) && !edges.contains(&(b, a)) {
            edges.push((a, b));
        }
    }
    let mut c = Circuit::new(n, 0);
    for q in 0..n {
        c.push(Gate::H(q));
    }
    for _ in 0..p {
        let gamma = rng.gen_range(0.0..PI);
        let beta = rng.gen_range(0.0..PI);
        for &(a, b) in &edges {
            zz(&mut c, a, b, gamma);
        }
        for q in 0..n {
            c.push(Gate::RX(q, beta));
        }
    }
    c
}

/// Random circuit over the generic gate set, with one classical bit per qubit.
pub fn random_circuit<R: Rng + ?Sized>(n: usize, gates: usize, rng: &mut R) -> Circuit {
    let mut c = Circuit::new(n, n);
    for _ in 0..gates {
        let q = rng.gen_range(0..n);
        let r = if n > 1 {
            (q + rng.gen_range(1..n)) % n
        } else {
            q
        };
        let angle = rng.gen_range(-PI..PI);
        let g = match rng.gen_range(0..14) {
            0 => Gate::PrepZ(q),
            1 => Gate::MeasZ(q, Cvar(rng.gen_range(0..n) as u32)),
            2 => Gate::H(q),
            3 => Gate::S(q),
            4 => Gate::Sdg(q),
            5 => Gate::X(q),
            6 => Gate::Y(q),
            7 => Gate::Z(q),
            8 => Gate::RX(q, angle),
            9 => Gate::RY(q, angle),
            10 => Gate::RZ(q, angle),
            11 if n > 1 => Gate::CNOT(q, r),
            12 if n > 1 => Gate::CZ(q, r),
            13 if n > 1 => Gate::SWAP(q, r),
            _ => Gate::H(q),
        };
        c.push(g);
    }
    c
}

pub fn random_seeded(n: usize, gates: usize, seed: u64) -> Circuit {
    random_circuit(n, gates, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// The seeded corpus used by the differential tests: `count` circuits on
/// 1 to `max_qubits` qubits with up to `max_gates` gates.
pub fn random_corpus(seed: u64, count: usize, max_qubits: usize, max_gates: usize) -> Vec<Circuit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_qubits);
            let g = rng.gen_range(1..=max_gates);
            random_circuit(n, g, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_circuit, CqState, Init};

    #[test]
    fn family_sizes() {
        assert_eq!(qft(4).gates.len(), 4 + 6 * 5);
        assert_eq!(hea(3, 2, 1).gates.len(), 2 * (6 + 2));
        assert!(grover(3)
            .gates
            .iter()
            .all(|g| g.qubits().iter().all(|&q| q < 3)));
        assert_eq!(qaoa(4, 1, 0).n_qubits, 4);
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(random_corpus(7, 5, 4, 30), random_corpus(7, 5, 4, 30));
        assert_eq!(hea(4, 3, 9), hea(4, 3, 9));
    }

    #[test]
    fn cphase_matches_diagonal() {
        let mut c = Circuit::new(2, 0);
        cphase(&mut c, 0, 1, 0.9);
        let mut s = run_circuit(
            &Circuit::parse("qubits 2\nh q0\nh q1").unwrap(),
            &Init::Zero,
        )
        .unwrap();
        for g in &c.gates {
            s.apply_gate(g).unwrap();
        }
        let m = s.branches.values().next().unwrap();
        let ph = m.at(0, 3) / m.at(0, 0);
        assert!((ph - num_complex::Complex64::from_polar(1.0, -0.9)).norm() < 1e-12);
    }

    #[test]
    fn grover_diffusion_reflects_about_uniform_state() {
        let n = 3;
        let c = grover(n);
        let mut s = CqState::new(n, &Init::Zero).unwrap();
        for g in &c.gates {
            s.apply_gate(g).unwrap();
        }
        // D|0⟩ = (2|s⟩⟨s| − I)|0⟩ up to global phase: amplitude ratio between |0⟩ and |k⟩.
        let m = s.branches.values().next().unwrap();
        let d = 1 << n;
        let a0 = 2.0 / d as f64 - 1.0;
        let ak = 2.0 / d as f64;
        let ratio = m.at(0, 0).re / m.at(1, 1).re;
        assert!((ratio - (a0 * a0) / (ak * ak)).abs() < 1e-9);
    }
}
