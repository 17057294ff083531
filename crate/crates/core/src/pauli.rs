//! Phase-tracked n-qubit Pauli strings in symplectic form.
//!
//! A [`Pauli`] stores one X bit and one Z bit per qubit plus an exponent
//! `phase` so that the operator is `i^phase` times the tensor product of the
//! letters read off the bits, where `(x=1, z=1)` is the Hermitian Y matrix.
//! Products are computed in the `X^x Z^z` basis, in which every Y carries an
//! implicit factor of `i` (Y = iXZ), and converted back by counting Y letters.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest supported register width.
pub const MAX_QUBITS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PauliError {
    #[error("width mismatch: {0} vs {1} qubits")]
    WidthMismatch(usize, usize),
    #[error("width {0} exceeds the cap of {MAX_QUBITS} qubits")]
    TooWide(usize),
    #[error("operand {0} is not Hermitian")]
    NotHermitian(String),
    #[error("cannot parse Pauli string {0:?}: {1}")]
    Parse(String, String),
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const NON_IDENTITY: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

    pub fn from_bits(x: bool, z: bool) -> Letter {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn anticommutes(self, other: Letter) -> bool {
        let (a, b) = self.bits();
        let (c, d) = other.bits();
        (a & d) ^ (b & c)
    }

    /// Letter of the product, ignoring phase.
    pub fn times(self, other: Letter) -> Letter {
        let (a, b) = self.bits();
        let (c, d) = other.bits();
        Letter::from_bits(a ^ c, b ^ d)
    }

    pub fn to_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c.to_ascii_uppercase() {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Pauli {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

fn popcount_and(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(p, q)| (p & q).count_ones()).sum()
}

impl Pauli {
    /// Identity on `n` qubits.
    ///
    /// # Panics
    /// If `n` exceeds [`MAX_QUBITS`].
    pub fn identity(n: usize) -> Pauli {
        assert!(n <= MAX_QUBITS, "width {n} exceeds {MAX_QUBITS}");
        Pauli {
            n,
            x: vec![0; words(n)],
            z: vec![0; words(n)],
            phase: 0,
        }
    }

    pub fn try_identity(n: usize) -> Result<Pauli, PauliError> {
        if n > MAX_QUBITS {
            return Err(PauliError::TooWide(n));
        }
        Ok(Pauli::identity(n))
    }

    pub fn single(n: usize, q: usize, letter: Letter) -> Pauli {
        let mut p = Pauli::identity(n);
        p.set_letter(q, letter);
        p
    }

    pub fn from_sparse(n: usize, letters: &[(usize, Letter)]) -> Pauli {
        let mut p = Pauli::identity(n);
        for &(q, l) in letters {
            p.set_letter(q, l);
        }
        p
    }

    pub fn from_letters(letters: &[Letter]) -> Pauli {
        let mut p = Pauli::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set_letter(q, l);
        }
        p
    }

    /// Parses with an explicit width; the text may not address qubits `>= n`.
    pub fn parse_with_width(s: &str, n: usize) -> Result<Pauli, PauliError> {
        let p: Pauli = s.parse()?;
        if p.n > n {
            return Err(PauliError::Parse(
                s.to_string(),
                format!("qubit index out of range for width {n}"),
            ));
        }
        let mut out = Pauli::try_identity(n)?;
        for q in p.support() {
            out.set_letter(q, p.letter(q));
        }
        out.phase = p.phase;
        Ok(out)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, phase: u8) -> Pauli {
        self.phase = phase & 3;
        self
    }

    pub fn x_bit(&self, q: usize) -> bool {
        (self.x[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        (self.z[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn letter(&self, q: usize) -> Letter {
        assert!(q < self.n, "qubit {q} out of range for width {}", self.n);
        Letter::from_bits(self.x_bit(q), self.z_bit(q))
    }

    pub fn set_letter(&mut self, q: usize, letter: Letter) {
        assert!(q < self.n, "qubit {q} out of range for width {}", self.n);
        let (xb, zb) = letter.bits();
        let mask = 1u64 << (q % 64);
        let w = q / 64;
        if xb {
            self.x[w] |= mask;
        } else {
            self.x[w] &= !mask;
        }
        if zb {
            self.z[w] |= mask;
        } else {
            self.z[w] &= !mask;
        }
    }

    pub fn is_identity(&self) -> bool {
        self.phase == 0 && self.has_trivial_letters()
    }

    /// True when every letter is I, whatever the phase.
    pub fn has_trivial_letters(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, (a, b)) in self.x.iter().zip(&self.z).enumerate() {
            let mut bits = a | b;
            while bits != 0 {
                let t = bits.trailing_zeros() as usize;
                out.push(w * 64 + t);
                bits &= bits - 1;
            }
        }
        out
    }

    fn count_y(&self) -> u32 {
        popcount_and(&self.x, &self.z)
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    /// For a Hermitian Pauli, whether the sign is −1.
    pub fn is_negative(&self) -> bool {
        self.phase == 2
    }

    pub fn negate(&self) -> Pauli {
        let mut p = self.clone();
        p.phase = (p.phase + 2) & 3;
        p
    }

    /// Same letters with coefficient +1.
    pub fn unsigned(&self) -> Pauli {
        let mut p = self.clone();
        p.phase = 0;
        p
    }

    /// Letters agree, phases may differ.
    pub fn same_letters(&self, other: &Pauli) -> bool {
        self.n == other.n && self.x == other.x && self.z == other.z
    }

    fn check_width(&self, other: &Pauli) -> Result<(), PauliError> {
        if self.n != other.n {
            Err(PauliError::WidthMismatch(self.n, other.n))
        } else {
            Ok(())
        }
    }

    pub fn try_mul(&self, other: &Pauli) -> Result<Pauli, PauliError> {
        self.check_width(other)?;
        let mut out = self.clone();
        out.mul_assign_unchecked(other);
        Ok(out)
    }

    /// # Panics
    /// On width mismatch.
    pub fn mul(&self, other: &Pauli) -> Pauli {
        self.try_mul(other).expect("Pauli::mul")
    }

    /// `self <- self * other`.
    pub fn mul_assign(&mut self, other: &Pauli) {
        assert_eq!(self.n, other.n, "Pauli width mismatch");
        self.mul_assign_unchecked(other);
    }

    fn mul_assign_unchecked(&mut self, other: &Pauli) {
        let cross = popcount_and(&self.z, &other.x);
        let mut e = self.phase as u32 + self.count_y() + other.phase as u32 + other.count_y();
        e += 2 * cross;
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a ^= b;
        }
        let y = self.count_y();
        self.phase = ((e + 4 * 64 * self.x.len() as u32 - y) % 4) as u8;
    }

    pub fn try_lambda(&self, other: &Pauli) -> Result<bool, PauliError> {
        self.check_width(other)?;
        Ok(self.lambda_unchecked(other))
    }

    fn lambda_unchecked(&self, other: &Pauli) -> bool {
        let mut acc = 0u64;
        for i in 0..self.x.len() {
            acc ^= (self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i]);
        }
        acc.count_ones() % 2 == 1
    }

    /// Commutation bit: true iff the two operators anticommute.
    ///
    /// # Panics
    /// On width mismatch.
    pub fn lambda(&self, other: &Pauli) -> bool {
        self.try_lambda(other).expect("Pauli::lambda")
    }

    pub fn commutes(&self, other: &Pauli) -> bool {
        !self.lambda(other)
    }

    /// `(−i)^λ · P · Q`, Hermitian whenever both inputs are.
    pub fn try_hermitian_product(&self, other: &Pauli) -> Result<Pauli, PauliError> {
        self.check_width(other)?;
        for p in [self, other] {
            if !p.is_hermitian() {
                return Err(PauliError::NotHermitian(p.to_string()));
            }
        }
        let mut out = self.mul(other);
        if self.lambda_unchecked(other) {
            out.phase = (out.phase + 3) & 3;
        }
        Ok(out)
    }

    /// # Panics
    /// On width mismatch or non-Hermitian input.
    pub fn odot(&self, other: &Pauli) -> Pauli {
        self.try_hermitian_product(other).expect("Pauli::odot")
    }

    /// Multiplies the coefficient by `i^k`.
    pub fn times_i(&self, k: u8) -> Pauli {
        let mut p = self.clone();
        p.phase = (p.phase + k) & 3;
        p
    }

    /// Letters restricted to two qubits, used by local cost evaluation.
    /// `self <- self * σ_q`, tracking the phase exactly.
    pub fn mul_letter(&mut self, q: usize, l: Letter) {
        let a = self.letter(q);
        let (lx, _) = l.bits();
        let r = a.times(l);
        let e = u8::from(a == Letter::Y)
            + u8::from(l == Letter::Y)
            + 2 * u8::from(self.z_bit(q) && lx)
            + 4
            - u8::from(r == Letter::Y);
        self.set_letter(q, r);
        self.phase = (self.phase + e) & 3;
    }

    /// Conjugation `T self T` by the two-qubit entangler
    /// `T = ½(I + σ1_i + σ2_j − σ1_i σ2_j)`.
    pub fn conjugate_tqe(&mut self, s1: Letter, s2: Letter, i: usize, j: usize) {
        let a = self.letter(i).anticommutes(s1);
        let b = self.letter(j).anticommutes(s2);
        match (a, b) {
            (false, false) => {}
            (false, true) => self.mul_letter(i, s1),
            (true, false) => self.mul_letter(j, s2),
            (true, true) => {
                self.mul_letter(i, s1);
                self.mul_letter(j, s2);
                self.phase = (self.phase + 2) & 3;
            }
        }
    }

    /// Replaces the letter at `q` by `image[letter]`, adding its phase.
    /// `image` is indexed by `I, X, Y, Z` as `(letter, phase exponent)`.
    pub fn map_letter(&mut self, q: usize, image: &[(Letter, u8); 4]) {
        let idx = match self.letter(q) {
            Letter::I => 0,
            Letter::X => 1,
            Letter::Y => 2,
            Letter::Z => 3,
        };
        let (l, ph) = image[idx];
        self.set_letter(q, l);
        self.phase = (self.phase + ph) & 3;
    }

    pub fn letters_at(&self, i: usize, j: usize) -> (Letter, Letter) {
        (self.letter(i), self.letter(j))
    }
}

impl PartialOrd for Pauli {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pauli {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, &self.x, &self.z, self.phase).cmp(&(other.n, &other.x, &other.z, other.phase))
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["", "i", "-", "-i"][self.phase as usize];
        write!(f, "{prefix}")?;
        let supp = self.support();
        if supp.is_empty() {
            return write!(f, "I");
        }
        for q in supp {
            write!(f, "{}{}", self.letter(q), q)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}/{}", self.n)
    }
}

impl FromStr for Pauli {
    type Err = PauliError;

    /// Width is one more than the largest index mentioned (0 for `I`).
    fn from_str(s: &str) -> Result<Pauli, PauliError> {
        let err = |m: &str| PauliError::Parse(s.to_string(), m.to_string());
        let mut rest = s.trim();
        let mut phase = 0u8;
        if let Some(r) = rest.strip_prefix('-') {
            phase += 2;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        }
        if let Some(r) = rest.strip_prefix('i') {
            phase += 1;
            rest = r;
        }
        if rest == "I" {
            return Ok(Pauli::identity(0).with_phase(phase));
        }
        if rest.is_empty() {
            return Err(err("empty string"));
        }
        let mut letters: Vec<(usize, Letter)> = Vec::new();
        let chars: Vec<char> = rest.chars().collect();
        let mut k = 0;
        while k < chars.len() {
            let l = Letter::from_char(chars[k]).ok_or_else(|| err("expected a Pauli letter"))?;
            k += 1;
            let start = k;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            if start == k {
                return Err(err("letter without qubit index"));
            }
            let idx: usize = chars[start..k]
                .iter()
                .collect::<String>()
                .parse()
                .map_err(|_| err("bad qubit index"))?;
            if idx >= MAX_QUBITS {
                return Err(PauliError::TooWide(idx + 1));
            }
            if letters.iter().any(|&(q, _)| q == idx) {
                return Err(err("qubit index repeated"));
            }
            letters.push((idx, l));
        }
        let n = letters.iter().map(|&(q, _)| q + 1).max().unwrap_or(0);
        Ok(Pauli::from_sparse(n, &letters).with_phase(phase))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str, n: usize) -> Pauli {
        Pauli::parse_with_width(s, n).unwrap()
    }

    #[test]
    fn x_times_y_is_i_z() {
        assert_eq!(p("X0", 1).mul(&p("Y0", 1)), p("iZ0", 1));
    }

    #[test]
    fn identity_is_neutral() {
        let a = p("-X0Y2", 3);
        assert_eq!(a.mul(&Pauli::identity(3)), a);
    }

    #[test]
    fn hermitian_square_is_identity() {
        let a = p("X0Z1", 2);
        assert!(a.mul(&a).is_identity());
    }

    #[test]
    fn lambda_examples() {
        assert!(p("X0", 1).lambda(&p("Z0", 1)));
        assert!(!p("X0Z1", 2).lambda(&p("Z0X1", 2)));
        assert!(!p("X0Z1", 2).lambda(&Pauli::identity(2)));
    }

    #[test]
    fn odot_examples() {
        assert_eq!(p("X0", 1).odot(&p("Y0", 1)), p("Z0", 1));
        assert_eq!(p("Z0", 2).odot(&p("Z1", 2)), p("Z0Z1", 2));
        assert_eq!(p("-X0", 1).odot(&p("Y0", 1)), p("-Z0", 1));
        assert!(p("iX0", 1).try_hermitian_product(&p("Y0", 1)).is_err());
    }

    #[test]
    fn support_weight_hermitian() {
        assert_eq!(p("X0Z2", 3).support(), vec![0, 2]);
        assert_eq!(Pauli::identity(4).weight(), 0);
        assert!(!p("iX0", 1).is_hermitian());
    }

    #[test]
    fn width_mismatch_is_an_error() {
        assert!(matches!(
            p("X0", 1).try_mul(&p("X0", 2)),
            Err(PauliError::WidthMismatch(1, 2))
        ));
    }

    #[test]
    fn text_round_trip() {
        for s in ["-X0Z2", "iY1", "I", "-iX3Y70"] {
            let q: Pauli = s.parse().unwrap();
            assert_eq!(q.to_string(), s);
        }
        assert!("X0X0".parse::<Pauli>().is_err());
        assert!("Q1".parse::<Pauli>().is_err());
    }

    #[test]
    fn wide_strings_cross_word_boundaries() {
        let a = p("X0Y63Z64Y130", 200);
        let b = p("Z0Y63X64Z130", 200);
        assert_eq!(a.weight(), 4);
        assert!(a.lambda(&b));
        assert_eq!(a.mul(&b).mul(&b), a);
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = Pauli> {
        (prop::collection::vec(0u8..4, n), 0u8..4).prop_map(move |(ls, ph)| {
            let letters: Vec<Letter> = ls
                .iter()
                .map(|&k| [Letter::I, Letter::X, Letter::Y, Letter::Z][k as usize])
                .collect();
            Pauli::from_letters(&letters).with_phase(ph)
        })
    }

    proptest! {
        #[test]
        fn swap_order_costs_lambda_sign(a in arb_pauli(70), b in arb_pauli(70)) {
            let ab = a.mul(&b);
            let ba = b.mul(&a);
            let expected = if a.lambda(&b) { ba.negate() } else { ba };
            prop_assert_eq!(ab, expected);
        }

        #[test]
        fn mul_is_associative(a in arb_pauli(9), b in arb_pauli(9), c in arb_pauli(9)) {
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        }

        #[test]
        fn lambda_is_bilinear(a in arb_pauli(9), b in arb_pauli(9), c in arb_pauli(9)) {
            prop_assert_eq!(a.mul(&b).lambda(&c), a.lambda(&c) ^ b.lambda(&c));
            prop_assert_eq!(a.lambda(&b), b.lambda(&a));
        }

        #[test]
        fn odot_keeps_hermiticity(a in arb_pauli(12), b in arb_pauli(12)) {
            let ph = a.phase_exp() & 2;
            let a = a.with_phase(ph);
            let ph = b.phase_exp() & 2;
            let b = b.with_phase(ph);
            prop_assert!(a.odot(&b).is_hermitian());
        }

        #[test]
        fn hermitian_left_multiplication_is_involutive(a in arb_pauli(8), b in arb_pauli(8)) {
            let ph = a.phase_exp() & 2;
            let a = a.with_phase(ph);
            prop_assert_eq!(a.mul(&a.mul(&b)), b);
        }
    }
}
