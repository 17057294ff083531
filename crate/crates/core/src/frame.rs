//! Pauli frames: Clifford unitaries stored by their inverse conjugation
//! action `p ↦ U† p U` on the single-qubit Z and X generators.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::pauli::{Letter, Pauli, PauliError};

/// Tolerance for recognising an angle as a multiple of π/2.
pub const CLIFFORD_ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("qubit {0} out of range for width {1}")]
    QubitOutOfRange(usize, usize),
    #[error("two-qubit gate needs distinct qubits, got {0} twice")]
    RepeatedQubit(usize),
    #[error("angle {0} is not a multiple of pi/2")]
    NotClifford(f64),
    #[error("malformed frame: {0}")]
    Malformed(String),
}

/// Clifford gates with a direct frame table.
#[derive(Debug, Clone, PartialEq)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
    /// `½(I + σ1_i + σ2_j − σ1_i σ2_j)`.
    Tqe(Letter, Letter, usize, usize),
    PauliGate(Pauli),
    Rot(Pauli, f64),
}

/// If `theta` is a multiple of π/2 within tolerance, returns that multiple mod 4.
pub fn clifford_multiple(theta: f64) -> Option<u8> {
    let k = theta / FRAC_PI_2;
    let r = k.round();
    if (k - r).abs() < CLIFFORD_ANGLE_TOL {
        Some(r.rem_euclid(4.0) as u8)
    } else {
        None
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliFrame {
    n: usize,
    rows: Vec<(Pauli, Pauli)>,
}

impl PauliFrame {
    pub fn identity(n: usize) -> PauliFrame {
        let rows = (0..n)
            .map(|j| {
                (
                    Pauli::single(n, j, Letter::Z),
                    Pauli::single(n, j, Letter::X),
                )
            })
            .collect();
        PauliFrame { n, rows }
    }

    pub fn from_rows(rows: Vec<(Pauli, Pauli)>) -> Result<PauliFrame, FrameError> {
        let f = PauliFrame {
            n: rows.len(),
            rows,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[(Pauli, Pauli)] {
        &self.rows
    }

    pub fn eff_z(&self, j: usize) -> &Pauli {
        &self.rows[j].0
    }

    pub fn eff_x(&self, j: usize) -> &Pauli {
        &self.rows[j].1
    }

    pub fn is_identity(&self) -> bool {
        *self == PauliFrame::identity(self.n)
    }

    fn validate(&self) -> Result<(), FrameError> {
        for (a, b) in &self.rows {
            for p in [a, b] {
                if p.n_qubits() != self.n {
                    return Err(PauliError::WidthMismatch(p.n_qubits(), self.n).into());
                }
                if !p.is_hermitian() {
                    return Err(FrameError::Malformed(format!("entry {p} not Hermitian")));
                }
            }
        }
        for i in 0..self.n {
            for j in 0..self.n {
                let (zi, xi) = &self.rows[i];
                let (zj, xj) = &self.rows[j];
                if zi.lambda(zj) || xi.lambda(xj) || zi.lambda(xj) != (i == j) {
                    return Err(FrameError::Malformed(format!(
                        "rows {i} and {j} violate the commutation table"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_wellformed(&self) -> bool {
        self.validate().is_ok()
    }

    /// `U† P U` for this frame's Clifford `U`.
    pub fn try_lookup(&self, p: &Pauli) -> Result<Pauli, FrameError> {
        if p.n_qubits() != self.n {
            return Err(PauliError::WidthMismatch(p.n_qubits(), self.n).into());
        }
        if !p.is_hermitian() {
            return Err(PauliError::NotHermitian(p.to_string()).into());
        }
        Ok(self.lookup_unchecked(p))
    }

    /// # Panics
    /// On width mismatch or non-Hermitian input.
    pub fn lookup(&self, p: &Pauli) -> Pauli {
        self.try_lookup(p).expect("PauliFrame::lookup")
    }

    fn lookup_unchecked(&self, p: &Pauli) -> Pauli {
        let mut acc = Pauli::identity(self.n).with_phase(p.phase_exp());
        for q in p.support() {
            let (ez, ex) = &self.rows[q];
            match p.letter(q) {
                Letter::X => acc.mul_assign(ex),
                Letter::Z => acc.mul_assign(ez),
                Letter::Y => {
                    // eff_Y = eff_Z ⊙ eff_X = −i · eff_Z · eff_X
                    acc.mul_assign(ez);
                    acc.mul_assign(ex);
                    acc = acc.times_i(3);
                }
                Letter::I => unreachable!(),
            }
        }
        acc
    }

    pub fn fixes(&self, q: &Pauli) -> bool {
        self.lookup(q) == *q
    }

    /// Frame of `U2 · U1` (U1 acts first).
    pub fn try_compose(f2: &PauliFrame, f1: &PauliFrame) -> Result<PauliFrame, FrameError> {
        if f2.n != f1.n {
            return Err(PauliError::WidthMismatch(f2.n, f1.n).into());
        }
        let rows = f2
            .rows
            .iter()
            .map(|(z, x)| (f1.lookup_unchecked(z), f1.lookup_unchecked(x)))
            .collect();
        Ok(PauliFrame { n: f1.n, rows })
    }

    /// # Panics
    /// On width mismatch.
    pub fn compose(f2: &PauliFrame, f1: &PauliFrame) -> PauliFrame {
        PauliFrame::try_compose(f2, f1).expect("PauliFrame::compose")
    }

    pub fn inverse(&self) -> PauliFrame {
        let n = self.n;
        let preimage = |target: &Pauli| {
            let mut q = Pauli::identity(n);
            for k in 0..n {
                let a = target.lambda(&self.rows[k].1);
                let b = target.lambda(&self.rows[k].0);
                q.set_letter(k, Letter::from_bits(b, a));
            }
            let image = self.lookup_unchecked(&q);
            debug_assert!(image.same_letters(target));
            if image == *target {
                q
            } else {
                q.negate()
            }
        };
        let rows = (0..n)
            .map(|j| {
                (
                    preimage(&Pauli::single(n, j, Letter::Z)),
                    preimage(&Pauli::single(n, j, Letter::X)),
                )
            })
            .collect();
        PauliFrame { n, rows }
    }

    fn check_qubit(n: usize, q: usize) -> Result<(), FrameError> {
        if q >= n {
            Err(FrameError::QubitOutOfRange(q, n))
        } else {
            Ok(())
        }
    }

    fn check_pair(n: usize, a: usize, b: usize) -> Result<(), FrameError> {
        Self::check_qubit(n, a)?;
        Self::check_qubit(n, b)?;
        if a == b {
            Err(FrameError::RepeatedQubit(a))
        } else {
            Ok(())
        }
    }

    fn set_single(&mut self, q: usize, z: (Letter, bool), x: (Letter, bool)) {
        let n = self.n;
        let mk = |(l, neg): (Letter, bool)| {
            let p = Pauli::single(n, q, l);
            if neg {
                p.negate()
            } else {
                p
            }
        };
        self.rows[q] = (mk(z), mk(x));
    }

    pub fn from_gate(gate: &CliffordGate, n: usize) -> Result<PauliFrame, FrameError> {
        use Letter::*;
        let mut f = PauliFrame::identity(n);
        match *gate {
            CliffordGate::H(q) => {
                Self::check_qubit(n, q)?;
                f.set_single(q, (X, false), (Z, false));
            }
            CliffordGate::S(q) => {
                Self::check_qubit(n, q)?;
                f.set_single(q, (Z, false), (Y, true));
            }
            CliffordGate::Sdg(q) => {
                Self::check_qubit(n, q)?;
                f.set_single(q, (Z, false), (Y, false));
            }
            CliffordGate::X(q) => {
                Self::check_qubit(n, q)?;
                f.set_single(q, (Z, true), (X, false));
            }
            CliffordGate::Y(q) => {
                Self::check_qubit(n, q)?;
                f.set_single(q, (Z, true), (X, true));
            }
            CliffordGate::Z(q) => {
                Self::check_qubit(n, q)?;
                f.set_single(q, (Z, false), (X, true));
            }
            CliffordGate::Cnot(c, t) => {
                Self::check_pair(n, c, t)?;
                f.rows[c].1 = Pauli::from_sparse(n, &[(c, X), (t, X)]);
                f.rows[t].0 = Pauli::from_sparse(n, &[(c, Z), (t, Z)]);
            }
            CliffordGate::Cz(a, b) => {
                Self::check_pair(n, a, b)?;
                f.rows[a].1 = Pauli::from_sparse(n, &[(a, X), (b, Z)]);
                f.rows[b].1 = Pauli::from_sparse(n, &[(a, Z), (b, X)]);
            }
            CliffordGate::Swap(a, b) => {
                Self::check_pair(n, a, b)?;
                f.rows[a] = (Pauli::single(n, b, Z), Pauli::single(n, b, X));
                f.rows[b] = (Pauli::single(n, a, Z), Pauli::single(n, a, X));
            }
            CliffordGate::Tqe(s1, s2, i, j) => {
                Self::check_pair(n, i, j)?;
                if s1 == I || s2 == I {
                    return Err(FrameError::Malformed(
                        "TQE basis letter must not be I".into(),
                    ));
                }
                for (q, own, other_q, other) in [(i, s1, j, s2), (j, s2, i, s1)] {
                    for (slot, l) in [(0, Z), (1, X)] {
                        let mut p = Pauli::single(n, q, l);
                        if own.anticommutes(l) {
                            p.set_letter(other_q, other);
                        }
                        if slot == 0 {
                            f.rows[q].0 = p;
                        } else {
                            f.rows[q].1 = p;
                        }
                    }
                }
            }
            CliffordGate::PauliGate(ref p) => {
                f = Self::pauli_gate(p, n)?;
            }
            CliffordGate::Rot(ref p, theta) => {
                let k = clifford_multiple(theta).ok_or(FrameError::NotClifford(theta))?;
                if p.n_qubits() != n {
                    return Err(PauliError::WidthMismatch(p.n_qubits(), n).into());
                }
                if !p.is_hermitian() {
                    return Err(PauliError::NotHermitian(p.to_string()).into());
                }
                match k {
                    0 => {}
                    2 => f = Self::pauli_gate(p, n)?,
                    _ => {
                        // R† q R = i^k P q for q anticommuting with P (k = ±1).
                        let twist = if k == 1 { 1 } else { 3 };
                        for row in f.rows.iter_mut() {
                            for e in [&mut row.0, &mut row.1] {
                                if p.lambda(e) {
                                    *e = p.mul(e).times_i(twist);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(f)
    }

    fn pauli_gate(p: &Pauli, n: usize) -> Result<PauliFrame, FrameError> {
        if p.n_qubits() != n {
            return Err(PauliError::WidthMismatch(p.n_qubits(), n).into());
        }
        if !p.is_hermitian() {
            return Err(PauliError::NotHermitian(p.to_string()).into());
        }
        let mut f = PauliFrame::identity(n);
        for row in f.rows.iter_mut() {
            for e in [&mut row.0, &mut row.1] {
                if p.lambda(e) {
                    *e = e.negate();
                }
            }
        }
        Ok(f)
    }

    /// Frame of a random Clifford built from `3n` random gates.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PauliFrame {
        let mut f = PauliFrame::identity(n);
        for _ in 0..3 * n {
            let q = rng.gen_range(0..n);
            let g = match rng.gen_range(0..7) {
                0 => CliffordGate::H(q),
                1 => CliffordGate::S(q),
                2 => CliffordGate::X(q),
                3 => CliffordGate::Z(q),
                4 => CliffordGate::Y(q),
                _ if n > 1 => {
                    let mut t = rng.gen_range(0..n - 1);
                    if t >= q {
                        t += 1;
                    }
                    CliffordGate::Cnot(q, t)
                }
                _ => CliffordGate::H(q),
            };
            let gf = PauliFrame::from_gate(&g, n).expect("valid random gate");
            f = PauliFrame::compose(&gf, &f);
        }
        f
    }
}

impl fmt::Display for PauliFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, (z, x)) in self.rows.iter().enumerate() {
            writeln!(f, "{j}: [{z} | {x}]")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliFrame(")?;
        for (z, x) in &self.rows {
            write!(f, "[{z}|{x}]")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str, n: usize) -> Pauli {
        Pauli::parse_with_width(s, n).unwrap()
    }

    fn gate(g: CliffordGate, n: usize) -> PauliFrame {
        PauliFrame::from_gate(&g, n).unwrap()
    }

    fn random_pauli(n: usize, rng: &mut ChaCha8Rng) -> Pauli {
        let letters: Vec<Letter> = (0..n)
            .map(|_| [Letter::I, Letter::X, Letter::Y, Letter::Z][rng.gen_range(0..4)])
            .collect();
        Pauli::from_letters(&letters).with_phase(2 * rng.gen_range(0..2))
    }

    #[test]
    fn identity_rows() {
        let f = PauliFrame::identity(2);
        assert_eq!(f.rows()[0], (p("Z0", 2), p("X0", 2)));
        assert_eq!(f.rows()[1], (p("Z1", 2), p("X1", 2)));
        assert_eq!(f.lookup(&p("-Y0X1", 2)), p("-Y0X1", 2));
    }

    #[test]
    fn cnot_table() {
        let f = gate(CliffordGate::Cnot(0, 1), 2);
        assert_eq!(f.lookup(&p("Z0", 2)), p("Z0", 2));
        assert_eq!(f.lookup(&p("Z1", 2)), p("Z0Z1", 2));
        assert_eq!(f.lookup(&p("X0", 2)), p("X0X1", 2));
        assert_eq!(f.lookup(&p("X1", 2)), p("X1", 2));
        assert_eq!(f.lookup(&p("Y0", 2)), p("Y0X1", 2));
        assert!(f.fixes(&p("Z0", 2)));
    }

    #[test]
    fn tqe_zx_is_cnot_and_zz_is_cz() {
        assert_eq!(
            gate(CliffordGate::Tqe(Letter::Z, Letter::X, 0, 1), 2),
            gate(CliffordGate::Cnot(0, 1), 2)
        );
        assert_eq!(
            gate(CliffordGate::Tqe(Letter::Z, Letter::Z, 0, 1), 3),
            gate(CliffordGate::Cz(0, 1), 3)
        );
    }

    #[test]
    fn hadamard_swaps_z_and_x() {
        let f = gate(CliffordGate::H(0), 1);
        assert_eq!(f.lookup(&p("Z0", 1)), p("X0", 1));
        assert_eq!(f.lookup(&p("Y0", 1)), p("-Y0", 1));
        assert!(!f.fixes(&p("Z0", 1)));
    }

    #[test]
    fn s_inverse_is_sdg() {
        assert_eq!(
            gate(CliffordGate::S(0), 2).inverse(),
            gate(CliffordGate::Sdg(0), 2)
        );
    }

    #[test]
    fn cnot_is_self_inverse() {
        let f = gate(CliffordGate::Cnot(0, 1), 2);
        assert!(PauliFrame::compose(&f, &f).is_identity());
    }

    #[test]
    fn quarter_turn_rotation_matches_s() {
        // S = e^{iπ/4} R_Z(π/2)
        let r = gate(CliffordGate::Rot(p("Z0", 1), FRAC_PI_2), 1);
        assert_eq!(r, gate(CliffordGate::S(0), 1));
        let r3 = gate(CliffordGate::Rot(p("Z0", 1), -FRAC_PI_2), 1);
        assert_eq!(r3, gate(CliffordGate::Sdg(0), 1));
        let half = gate(CliffordGate::Rot(p("X0", 1), std::f64::consts::PI), 1);
        assert_eq!(half, gate(CliffordGate::X(0), 1));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            PauliFrame::from_gate(&CliffordGate::Cnot(0, 3), 2),
            Err(FrameError::QubitOutOfRange(3, 2))
        ));
        assert!(matches!(
            PauliFrame::from_gate(&CliffordGate::Rot(p("Z0", 1), 0.3), 1),
            Err(FrameError::NotClifford(_))
        ));
        assert!(PauliFrame::from_rows(vec![(p("Z0", 1), p("Z0", 1))]).is_err());
    }

    #[test]
    fn all_gate_tables_are_wellformed() {
        use Letter::*;
        let mut gates = vec![
            CliffordGate::H(1),
            CliffordGate::S(1),
            CliffordGate::Sdg(1),
            CliffordGate::X(1),
            CliffordGate::Y(1),
            CliffordGate::Z(1),
            CliffordGate::Cnot(2, 0),
            CliffordGate::Cz(0, 2),
            CliffordGate::Swap(0, 1),
            CliffordGate::PauliGate(p("-X0Y2", 3)),
            CliffordGate::Rot(p("Y0Z1", 3), 3.0 * FRAC_PI_2),
        ];
        for a in [X, Y, Z] {
            for b in [X, Y, Z] {
                gates.push(CliffordGate::Tqe(a, b, 0, 2));
            }
        }
        for g in gates {
            let f = gate(g.clone(), 3);
            assert!(f.is_wellformed(), "{g:?}");
            if let CliffordGate::Tqe(..) = g {
                assert!(PauliFrame::compose(&f, &f).is_identity());
            }
        }
    }

    proptest! {
        #[test]
        fn composition_law(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..7);
            let f1 = PauliFrame::random(n, &mut rng);
            let f2 = PauliFrame::random(n, &mut rng);
            let q = random_pauli(n, &mut rng);
            let c = PauliFrame::compose(&f2, &f1);
            prop_assert!(c.is_wellformed());
            prop_assert_eq!(c.lookup(&q), f1.lookup(&f2.lookup(&q)));
        }

        #[test]
        fn inverse_law(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..8);
            let f = PauliFrame::random(n, &mut rng);
            let inv = f.inverse();
            prop_assert!(PauliFrame::compose(&f, &inv).is_identity());
            prop_assert!(PauliFrame::compose(&inv, &f).is_identity());
        }

        #[test]
        fn lookup_preserves_products(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..7);
            let f = PauliFrame::random(n, &mut rng);
            let a = random_pauli(n, &mut rng);
            let b = random_pauli(n, &mut rng);
            prop_assert_eq!(f.lookup(&a).lambda(&f.lookup(&b)), a.lambda(&b));
            let ab = a.mul(&b);
            if ab.is_hermitian() {
                prop_assert_eq!(f.lookup(&ab), f.lookup(&a).mul(&f.lookup(&b)));
            }
        }

        #[test]
        fn in_place_tqe_matches_frame_table(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..6);
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            let s1 = Letter::NON_IDENTITY[rng.gen_range(0..3)];
            let s2 = Letter::NON_IDENTITY[rng.gen_range(0..3)];
            let f = gate(CliffordGate::Tqe(s1, s2, i, j), n);
            let q = random_pauli(n, &mut rng);
            let mut r = q.clone();
            r.conjugate_tqe(s1, s2, i, j);
            prop_assert_eq!(r, f.lookup(&q));
        }

        #[test]
        fn mul_letter_matches_mul(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..5);
            let q = rng.gen_range(0..n);
            let l = Letter::NON_IDENTITY[rng.gen_range(0..3)];
            let a = random_pauli(n, &mut rng).with_phase(rng.gen_range(0..4));
            let mut b = a.clone();
            b.mul_letter(q, l);
            prop_assert_eq!(b, a.mul(&Pauli::single(n, q, l)));
        }
    }
}
