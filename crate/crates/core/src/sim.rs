//! Dense classical-quantum state simulator used as the equivalence oracle.
//!
//! A [`CqState`] maps each classical assignment (the set of variables equal
//! to 1) to an unnormalised 2^n × 2^n matrix. Qubit `j` is bit `j` of the
//! basis index. All maps are linear, so states need not be density matrices;
//! hold checks exploit this by also running general complex inputs.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64 as C;
use rand::Rng;
use thiserror::Error;

use crate::circuit::{Circuit, Gate};
use crate::frame::PauliFrame;
use crate::nodes::{Cvar, Msf, Node};
use crate::pauli::{Letter, Pauli};

pub const MAX_SIM_QUBITS: usize = 8;
pub const MAX_BRANCHES: usize = 4096;
/// Branches whose Frobenius norm falls below this are dropped.
pub const PRUNE_NORM: f64 = 1e-12;
pub const EQUIV_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{0} qubits exceeds the simulator cap of {MAX_SIM_QUBITS}")]
    TooManyQubits(usize),
    #[error("more than {MAX_BRANCHES} classical branches")]
    TooManyBranches,
    #[error("width mismatch: state has {0} qubits, operand {1}")]
    WidthMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub d: usize,
    pub data: Vec<C>,
}

impl Mat {
    pub fn zeros(d: usize) -> Mat {
        Mat {
            d,
            data: vec![C::new(0.0, 0.0); d * d],
        }
    }

    pub fn identity(d: usize) -> Mat {
        let mut m = Mat::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn at(&self, r: usize, c: usize) -> C {
        self.data[r * self.d + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C) {
        self.data[r * self.d + c] = v;
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        let d = self.d;
        let mut out = Mat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == C::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Mat {
        let d = self.d;
        let mut out = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Mat) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&self, s: C) -> Mat {
        Mat {
            d: self.d,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn trace(&self) -> C {
        (0..self.d).map(|i| self.at(i, i)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn kron(&self, other: &Mat) -> Mat {
        // `self` acts on the high bits.
        let d = self.d * other.d;
        let mut out = Mat::zeros(d);
        for a in 0..self.d {
            for b in 0..self.d {
                for c in 0..other.d {
                    for e in 0..other.d {
                        out.data[(a * other.d + c) * d + (b * other.d + e)] =
                            self.at(a, b) * other.at(c, e);
                    }
                }
            }
        }
        out
    }

    /// `U M U†`.
    pub fn conjugate(&self, u: &Mat) -> Mat {
        u.matmul(self).matmul(&u.adjoint())
    }
}

fn letter_matrix(l: Letter) -> Mat {
    let z = C::new(0.0, 0.0);
    let o = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    let data = match l {
        Letter::I => vec![o, z, z, o],
        Letter::X => vec![z, o, o, z],
        Letter::Y => vec![z, -i, i, z],
        Letter::Z => vec![o, z, z, -o],
    };
    Mat { d: 2, data }
}

/// Dense matrix of a Pauli by explicit Kronecker products of letter matrices.
pub fn pauli_matrix(p: &Pauli) -> Mat {
    let mut m = Mat::identity(1);
    for q in (0..p.n_qubits()).rev() {
        m = m.kron(&letter_matrix(p.letter(q)));
    }
    m.scale(C::i().powu(p.phase_exp() as u32))
}

/// Compact form of a Pauli for O(d²) application: `P|k⟩ = phase(k) |k ⊕ x⟩`.
struct PauliOp {
    x: usize,
    z: usize,
    base: C,
}

impl PauliOp {
    fn new(p: &Pauli) -> PauliOp {
        let mut x = 0;
        let mut z = 0;
        let mut ys = 0;
        for q in p.support() {
            let (xb, zb) = p.letter(q).bits();
            if xb {
                x |= 1 << q;
            }
            if zb {
                z |= 1 << q;
            }
            if xb && zb {
                ys += 1;
            }
        }
        PauliOp {
            x,
            z,
            base: C::i().powu((p.phase_exp() as u32 + ys) % 4),
        }
    }

    fn phase(&self, k: usize) -> C {
        if (self.z & k).count_ones() % 2 == 1 {
            -self.base
        } else {
            self.base
        }
    }

    fn left(&self, m: &Mat) -> Mat {
        let d = m.d;
        let mut out = Mat::zeros(d);
        for k in 0..d {
            let ph = self.phase(k);
            let r = k ^ self.x;
            for c in 0..d {
                out.data[r * d + c] = ph * m.data[k * d + c];
            }
        }
        out
    }

    fn right(&self, m: &Mat) -> Mat {
        let d = m.d;
        let mut out = Mat::zeros(d);
        for c in 0..d {
            let ph = self.phase(c);
            let src = c ^ self.x;
            for r in 0..d {
                out.data[r * d + c] = m.data[r * d + src] * ph;
            }
        }
        out
    }
}

/// `½(I + s·P) M ½(I + s·P)` for a Hermitian Pauli.
fn project(m: &Mat, p: &PauliOp, negative: bool) -> Mat {
    let s = if negative { -1.0 } else { 1.0 };
    let mut a = m.clone();
    a.add_assign(&p.left(m).scale(C::new(s, 0.0)));
    let mut b = a.clone();
    b.add_assign(&p.right(&a).scale(C::new(s, 0.0)));
    b.scale(C::new(0.25, 0.0))
}

/// Unitary `U` with `U† Z_j U = eff_Z_j` and `U† X_j U = eff_X_j`, up to phase.
pub fn frame_unitary(f: &PauliFrame) -> Mat {
    let n = f.n_qubits();
    let d = 1 << n;
    let mut proj = Mat::identity(d);
    for j in 0..n {
        proj = project(&proj, &PauliOp::new(f.eff_z(j)), false).scale(C::new(2.0, 0.0));
    }
    let best = (0..d)
        .max_by(|&a, &b| {
            let na: f64 = (0..d).map(|r| proj.at(r, a).norm_sqr()).sum();
            let nb: f64 = (0..d).map(|r| proj.at(r, b).norm_sqr()).sum();
            na.total_cmp(&nb)
        })
        .unwrap_or(0);
    let norm: f64 = (0..d)
        .map(|r| proj.at(r, best).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let v0: Vec<C> = (0..d).map(|r| proj.at(r, best) / norm).collect();
    let ops: Vec<PauliOp> = (0..n).map(|j| PauliOp::new(f.eff_x(j))).collect();
    // Columns of U† are ∏ eff_X_j^{b_j} v0.
    let mut udag = Mat::zeros(d);
    for b in 0..d {
        let mut v = v0.clone();
        for (j, op) in ops.iter().enumerate() {
            if (b >> j) & 1 == 1 {
                let mut w = vec![C::new(0.0, 0.0); d];
                for (k, amp) in v.iter().enumerate() {
                    w[k ^ op.x] = op.phase(k) * amp;
                }
                v = w;
            }
        }
        for r in 0..d {
            udag.set(r, b, v[r]);
        }
    }
    udag.adjoint()
}

fn local_unitary(m: &Mat, qubits: &[usize], u: &Mat) -> Mat {
    let d = m.d;
    let k = qubits.len();
    let ld = 1 << k;
    let mask: usize = qubits.iter().map(|&q| 1 << q).sum();
    let spread = |l: usize| -> usize {
        qubits
            .iter()
            .enumerate()
            .filter(|(t, _)| (l >> t) & 1 == 1)
            .map(|(_, &q)| 1 << q)
            .sum()
    };
    let offs: Vec<usize> = (0..ld).map(spread).collect();
    // Left multiplication by U.
    let mut a = Mat::zeros(d);
    for base in (0..d).filter(|i| i & mask == 0) {
        for r in 0..ld {
            for c in 0..ld {
                let coef = u.at(r, c);
                if coef == C::new(0.0, 0.0) {
                    continue;
                }
                let (ri, ci) = (base | offs[r], base | offs[c]);
                for col in 0..d {
                    let v = coef * m.data[ci * d + col];
                    a.data[ri * d + col] += v;
                }
            }
        }
    }
    // Right multiplication by U†.
    let mut b = Mat::zeros(d);
    for base in (0..d).filter(|i| i & mask == 0) {
        for r in 0..ld {
            for c in 0..ld {
                let coef = u.at(c, r).conj();
                if coef == C::new(0.0, 0.0) {
                    continue;
                }
                // (A U†)[row][base|offs[c]] += A[row][base|offs[r]] * U†[r][c]
                let coef = u.at(c, r).conj();
                let (src, dst) = (base | offs[r], base | offs[c]);
                for row in 0..d {
                    let v = a.data[row * d + src] * coef;
                    b.data[row * d + dst] += v;
                }
            }
        }
    }
    b
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn mat2(a: C, b: C, cc: C, d: C) -> Mat {
    Mat {
        d: 2,
        data: vec![a, b, cc, d],
    }
}

/// Unitary of a gate on its own qubits (first listed qubit is the low bit).
pub fn gate_unitary(g: &Gate) -> Option<Mat> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let rot = |theta: f64, phi: f64| {
        let (s, co) = (theta / 2.0).sin_cos();
        let e = C::from_polar(1.0, phi);
        mat2(
            c(co, 0.0),
            c(0.0, -s) * e.conj(),
            c(0.0, -s) * e,
            c(co, 0.0),
        )
    };
    let two = |f: &dyn Fn(usize) -> usize, diag: &dyn Fn(usize) -> C| {
        let mut m = Mat::zeros(4);
        for k in 0..4 {
            m.set(f(k), k, diag(k));
        }
        m
    };
    Some(match *g {
        Gate::H(_) => mat2(c(r, 0.0), c(r, 0.0), c(r, 0.0), c(-r, 0.0)),
        Gate::S(_) => mat2(o, z, z, c(0.0, 1.0)),
        Gate::Sdg(_) => mat2(o, z, z, c(0.0, -1.0)),
        Gate::X(_) => letter_matrix(Letter::X),
        Gate::Y(_) => letter_matrix(Letter::Y),
        Gate::Z(_) => letter_matrix(Letter::Z),
        Gate::T(_) => mat2(o, z, z, C::from_polar(1.0, std::f64::consts::FRAC_PI_4)),
        Gate::Tdg(_) => mat2(o, z, z, C::from_polar(1.0, -std::f64::consts::FRAC_PI_4)),
        Gate::RX(_, t) => rot(t, 0.0),
        Gate::RY(_, t) => rot(t, std::f64::consts::FRAC_PI_2),
        Gate::RZ(_, t) => mat2(
            C::from_polar(1.0, -t / 2.0),
            z,
            z,
            C::from_polar(1.0, t / 2.0),
        ),
        Gate::RXY(_, t, phi) => rot(t, phi),
        Gate::CNOT(..) => two(&|k| if k & 1 == 1 { k ^ 2 } else { k }, &|_| o),
        Gate::CZ(..) => two(&|k| k, &|k| if k == 3 { -o } else { o }),
        Gate::SWAP(..) => two(&|k| ((k & 1) << 1) | (k >> 1), &|_| o),
        Gate::TQE(s1, s2, ..) => {
            let a = letter_matrix(s1);
            let b = letter_matrix(s2);
            let i2 = Mat::identity(2);
            let mut m = Mat::identity(4);
            m.add_assign(&i2.kron(&a));
            m.add_assign(&b.kron(&i2));
            m.add_assign(&b.kron(&a).scale(c(-1.0, 0.0)));
            m.scale(c(0.5, 0.0))
        }
        _ => return None,
    })
}

pub type Key = BTreeSet<Cvar>;

#[derive(Debug, Clone, PartialEq)]
pub struct CqState {
    pub n: usize,
    pub branches: BTreeMap<Key, Mat>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    MaximallyMixed,
    Zero,
    Matrix(Mat),
}

impl CqState {
    pub fn new(n: usize, init: &Init) -> Result<CqState, SimError> {
        if n > MAX_SIM_QUBITS {
            return Err(SimError::TooManyQubits(n));
        }
        let d = 1 << n;
        let m = match init {
            Init::MaximallyMixed => Mat::identity(d).scale(c(1.0 / d as f64, 0.0)),
            Init::Zero => {
                let mut m = Mat::zeros(d);
                m.set(0, 0, c(1.0, 0.0));
                m
            }
            Init::Matrix(m) => {
                if m.d != d {
                    return Err(SimError::WidthMismatch(n, m.d));
                }
                m.clone()
            }
        };
        Ok(CqState {
            n,
            branches: [(Key::new(), m)].into_iter().collect(),
        })
    }

    fn check_width(&self, k: usize) -> Result<(), SimError> {
        if k != self.n {
            Err(SimError::WidthMismatch(self.n, k))
        } else {
            Ok(())
        }
    }

    fn map_all(&mut self, f: impl Fn(&Mat) -> Mat) {
        for m in self.branches.values_mut() {
            *m = f(m);
        }
    }

    fn prune(&mut self) -> Result<(), SimError> {
        self.branches.retain(|_, m| m.norm() >= PRUNE_NORM);
        if self.branches.len() > MAX_BRANCHES {
            return Err(SimError::TooManyBranches);
        }
        Ok(())
    }

    pub fn total_trace(&self) -> C {
        self.branches.values().map(|m| m.trace()).sum()
    }

    pub fn apply_rotation(&mut self, p: &Pauli, theta: f64) -> Result<(), SimError> {
        self.check_width(p.n_qubits())?;
        let op = PauliOp::new(p);
        let (s, co) = (theta / 2.0).sin_cos();
        // (c − isP) ρ (c + isP)
        self.map_all(|m| {
            let pm = op.left(m);
            let mp = op.right(m);
            let pmp = op.right(&pm);
            let mut out = m.scale(c(co * co, 0.0));
            out.add_assign(&mp.scale(c(0.0, co * s)));
            out.add_assign(&pm.scale(c(0.0, -co * s)));
            out.add_assign(&pmp.scale(c(s * s, 0.0)));
            out
        });
        Ok(())
    }

    pub fn apply_preparation(&mut self, pz: &Pauli, px: &Pauli) -> Result<(), SimError> {
        self.check_width(pz.n_qubits())?;
        let z = PauliOp::new(pz);
        let x = PauliOp::new(px);
        self.map_all(|m| {
            let mut out = project(m, &z, false);
            let flipped = project(m, &z, true);
            out.add_assign(&x.right(&x.left(&flipped)));
            out
        });
        self.prune()
    }

    pub fn apply_measurement(&mut self, p: &Pauli, cvar: Cvar) -> Result<(), SimError> {
        self.check_width(p.n_qubits())?;
        let op = PauliOp::new(p);
        let mut out: BTreeMap<Key, Mat> = BTreeMap::new();
        for (key, m) in &self.branches {
            for b in [false, true] {
                let pm = project(m, &op, b);
                let mut k = key.clone();
                if b {
                    k.insert(cvar);
                } else {
                    k.remove(&cvar);
                }
                match out.get_mut(&k) {
                    Some(acc) => acc.add_assign(&pm),
                    None => {
                        out.insert(k, pm);
                    }
                }
            }
        }
        self.branches = out;
        self.prune()
    }

    pub fn apply_unitary(&mut self, u: &Mat) {
        self.map_all(|m| m.conjugate(u));
    }

    pub fn apply_frame(&mut self, f: &PauliFrame) -> Result<(), SimError> {
        self.check_width(f.n_qubits())?;
        let u = frame_unitary(f);
        self.apply_unitary(&u);
        Ok(())
    }

    pub fn apply_msf(&mut self, mu: &Msf) -> Result<(), SimError> {
        self.relabel(|k| mu.apply(k))
    }

    fn relabel(&mut self, f: impl Fn(&Key) -> Key) -> Result<(), SimError> {
        let mut out: BTreeMap<Key, Mat> = BTreeMap::new();
        for (k, m) in std::mem::take(&mut self.branches) {
            let nk = f(&k);
            match out.get_mut(&nk) {
                Some(acc) => acc.add_assign(&m),
                None => {
                    out.insert(nk, m);
                }
            }
        }
        self.branches = out;
        self.prune()
    }

    /// Sums out every variable not in `keep`.
    pub fn marginalize(&mut self, keep: impl Fn(Cvar) -> bool) -> Result<(), SimError> {
        self.relabel(|k| k.iter().copied().filter(|&c| keep(c)).collect())
    }

    pub fn apply_node(&mut self, n: &Node) -> Result<(), SimError> {
        match n {
            Node::Rotation { pauli, theta } => self.apply_rotation(pauli, *theta),
            Node::Preparation { pz, px } => self.apply_preparation(pz, px),
            Node::Measurement { pauli, cvar } => self.apply_measurement(pauli, *cvar),
            Node::Frame(f) => self.apply_frame(f),
            Node::Msf(m) => self.apply_msf(m),
        }
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<(), SimError> {
        if let Some(&q) = g.qubits().iter().find(|&&q| q >= self.n) {
            return Err(SimError::WidthMismatch(self.n, q + 1));
        }
        match *g {
            Gate::PrepZ(q) | Gate::PrepX(q) => {
                let (k0, k1) = if matches!(g, Gate::PrepZ(_)) {
                    (
                        mat2(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)),
                        mat2(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)),
                    )
                } else {
                    (
                        mat2(c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)),
                        mat2(c(0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0), c(-0.5, 0.0)),
                    )
                };
                self.map_all(|m| {
                    let mut out = local_unitary(m, &[q], &k0);
                    out.add_assign(&local_unitary(m, &[q], &k1));
                    out
                });
                self.prune()
            }
            Gate::MeasZ(q, cv) => {
                let p = Pauli::single(self.n, q, Letter::Z);
                self.apply_measurement(&p, cv)
            }
            _ => {
                let u = gate_unitary(g).expect("unitary gate");
                let qs = g.qubits();
                self.map_all(|m| local_unitary(m, &qs, &u));
                Ok(())
            }
        }
    }

    /// Relabels qubits so that logical qubit `j`, held on physical
    /// qubit `perm[j]`, moves to position `j`.
    pub fn permute_qubits(&mut self, perm: &[usize]) {
        let d = 1 << self.n;
        let map: Vec<usize> = (0..d)
            .map(|k| {
                perm.iter()
                    .enumerate()
                    .map(|(j, &p)| ((k >> p) & 1) << j)
                    .sum()
            })
            .collect();
        self.map_all(|m| {
            let mut out = Mat::zeros(d);
            for r in 0..d {
                for col in 0..d {
                    out.set(map[r], map[col], m.at(r, col));
                }
            }
            out
        });
    }
}

fn keys(a: &CqState, b: &CqState) -> BTreeSet<Key> {
    a.branches
        .keys()
        .chain(b.branches.keys())
        .cloned()
        .collect()
}

/// Branch-wise matrix equality.
pub fn equiv_hold(a: &CqState, b: &CqState, tol: f64) -> bool {
    if a.n != b.n {
        return false;
    }
    let d = 1 << a.n;
    let zero = Mat::zeros(d);
    keys(a, b).iter().all(|k| {
        let x = a.branches.get(k).unwrap_or(&zero);
        let y = b.branches.get(k).unwrap_or(&zero);
        x.max_abs_diff(y) <= tol
    })
}

/// Per-assignment trace equality.
pub fn equiv_release(a: &CqState, b: &CqState, tol: f64) -> bool {
    keys(a, b).iter().all(|k| {
        let x = a.branches.get(k).map_or(C::new(0.0, 0.0), |m| m.trace());
        let y = b.branches.get(k).map_or(C::new(0.0, 0.0), |m| m.trace());
        (x - y).norm() <= tol
    })
}

/// Runs a circuit, recording only classical bits for which `keep` holds.
pub fn run_circuit_keeping(
    c: &Circuit,
    init: &Init,
    keep: &dyn Fn(Cvar) -> bool,
) -> Result<CqState, SimError> {
    let mut s = CqState::new(c.n_qubits, init)?;
    for g in &c.gates {
        s.apply_gate(g)?;
        if let Gate::MeasZ(_, cv) = g {
            if !keep(*cv) {
                s.marginalize(|x| x != *cv)?;
            }
        }
    }
    Ok(s)
}

pub fn run_circuit(c: &Circuit, init: &Init) -> Result<CqState, SimError> {
    run_circuit_keeping(c, init, &|_| true)
}

/// Runs a term of nodes in order.
pub fn run_nodes(n: usize, nodes: &[Node], init: &Init) -> Result<CqState, SimError> {
    let mut s = CqState::new(n, init)?;
    for node in nodes {
        s.apply_node(node)?;
    }
    Ok(s)
}

pub fn random_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat {
    let a = random_matrix(n, rng);
    let rho = a.matmul(&a.adjoint());
    let t = rho.trace().re;
    rho.scale(c(1.0 / t, 0.0))
}

pub fn random_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat {
    let d = 1 << n;
    Mat {
        d,
        data: (0..d * d)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    }
}

/// Inputs used by hold checks: maximally mixed, |0…0⟩ and seeded random matrices.
pub fn hold_inputs<R: Rng + ?Sized>(n: usize, rng: &mut R, random: usize) -> Vec<Init> {
    let mut v = vec![Init::MaximallyMixed, Init::Zero];
    for _ in 0..random {
        v.push(Init::Matrix(random_matrix(n, rng)));
    }
    v
}
