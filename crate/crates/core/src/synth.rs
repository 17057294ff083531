//! Greedy synthesis of a program into gates.
//!
//! Every step either emits a node that a single gate implements, or applies
//! the two-qubit entangler (TQE) that best lowers the remaining cost. Applying
//! a gate `u` emits it and conjugates everything still pending by `u`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::circuit::{Circuit, Gate};
use crate::frame::PauliFrame;
use crate::graph::Program;
use crate::nodes::{Affine, Cvar, Msf, Node};
use crate::opt::eliminate_measurements;
use crate::pauli::{Letter, Pauli};
use crate::pipeline::{GateSet, Outcome, SearchConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("node kind has no synthesis cost: {0}")]
    NoCost(String),
    #[error("node already has cost 0")]
    AlreadyReduced,
}

/// `½(I + s1_i + s2_j − s1_i s2_j)` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tqe {
    pub s1: Letter,
    pub s2: Letter,
    pub i: usize,
    pub j: usize,
}

fn letter_rank(l: Letter) -> u8 {
    match l {
        Letter::I => 0,
        Letter::X => 1,
        Letter::Y => 2,
        Letter::Z => 3,
    }
}

impl Tqe {
    fn key(&self) -> (usize, usize, u8, u8) {
        (self.i, self.j, letter_rank(self.s1), letter_rank(self.s2))
    }

    /// The nine entanglers on a pair.
    pub fn all_on(i: usize, j: usize) -> Vec<Tqe> {
        let (i, j) = (i.min(j), i.max(j));
        let mut v = Vec::with_capacity(9);
        for s1 in Letter::NON_IDENTITY {
            for s2 in Letter::NON_IDENTITY {
                v.push(Tqe { s1, s2, i, j });
            }
        }
        v
    }

    pub fn apply(&self, p: &mut Pauli) {
        p.conjugate_tqe(self.s1, self.s2, self.i, self.j);
    }

    /// Letters at `(i, j)` after conjugation, ignoring phase.
    fn letters(&self, a: Letter, b: Letter) -> (Letter, Letter) {
        let na = if b.anticommutes(self.s2) {
            a.times(self.s1)
        } else {
            a
        };
        let nb = if a.anticommutes(self.s1) {
            b.times(self.s2)
        } else {
            b
        };
        (na, nb)
    }
}

pub fn singlet_cost(p: &Pauli) -> usize {
    p.weight().saturating_sub(1)
}

/// Commutation fingerprint of `(p, q)` on qubit `i`:
/// `[[λ(p,X_i), λ(p,Z_i)], [λ(q,X_i), λ(q,Z_i)]]`.
pub fn local_support(p: &Pauli, q: &Pauli, i: usize) -> [[bool; 2]; 2] {
    [[p.z_bit(i), p.x_bit(i)], [q.z_bit(i), q.x_bit(i)]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportClass {
    None,
    Weak,
    Strong,
}

pub fn support_class(p: &Pauli, q: &Pauli, i: usize) -> SupportClass {
    letter_class(p.letter(i), q.letter(i))
}

fn letter_class(a: Letter, b: Letter) -> SupportClass {
    if a.anticommutes(b) {
        SupportClass::Strong
    } else if a != Letter::I || b != Letter::I {
        SupportClass::Weak
    } else {
        SupportClass::None
    }
}

fn factor_counts(p: &Pauli, q: &Pauli) -> (i64, i64) {
    let support: BTreeSet<usize> = p.support().into_iter().chain(q.support()).collect();
    let strong = support
        .iter()
        .filter(|&&i| p.letter(i).anticommutes(q.letter(i)))
        .count();
    (strong as i64, support.len() as i64)
}

/// `(Σ_i det − 1)/2 + (#supported qubits − 1)` for an anticommuting pair.
pub fn factor_cost(p: &Pauli, q: &Pauli) -> usize {
    let (d, s) = factor_counts(p, q);
    ((d - 1).max(0) / 2 + (s - 1).max(0)) as usize
}

pub fn node_cost(n: &Node) -> Result<usize, SynthError> {
    match n {
        Node::Rotation { pauli, .. } | Node::Measurement { pauli, .. } => Ok(singlet_cost(pauli)),
        Node::Preparation { pz, px } => Ok(factor_cost(pz, px)),
        other => Err(SynthError::NoCost(other.to_string())),
    }
}

fn pairs(support: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    support
        .iter()
        .enumerate()
        .flat_map(move |(k, &i)| support[k + 1..].iter().map(move |&j| (i, j)))
}

/// Entanglers on pairs of the support that strictly lower the node's cost.
pub fn reduce_node(n: &Node) -> Result<Vec<Tqe>, SynthError> {
    if node_cost(n)? == 0 {
        return Err(SynthError::AlreadyReduced);
    }
    Ok(match n {
        Node::Rotation { pauli, .. } | Node::Measurement { pauli, .. } => reduce_singlet(pauli),
        Node::Preparation { pz, px } => reduce_factor(pz, px),
        _ => unreachable!("cost checked above"),
    })
}

pub fn reduce_singlet(p: &Pauli) -> Vec<Tqe> {
    let support = p.support();
    let mut out = Vec::new();
    for (i, j) in pairs(&support) {
        for t in Tqe::all_on(i, j) {
            if singlet_delta(&t, p) < 0 {
                out.push(t);
            }
        }
    }
    out
}

pub fn reduce_factor(p: &Pauli, q: &Pauli) -> Vec<Tqe> {
    let support: Vec<usize> = p
        .support()
        .into_iter()
        .chain(q.support())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out = Vec::new();
    for (i, j) in pairs(&support) {
        for t in Tqe::all_on(i, j) {
            if factor_delta(&t, p, q) < 0 {
                out.push(t);
            }
        }
    }
    out
}

fn singlet_delta(t: &Tqe, p: &Pauli) -> i64 {
    let (a, b) = (p.letter(t.i), p.letter(t.j));
    let (na, nb) = t.letters(a, b);
    let w = |x: Letter| i64::from(x != Letter::I);
    w(na) + w(nb) - w(a) - w(b)
}

/// Cost change of a factor under `t`, from the letters at `t.i` and `t.j`.
fn factor_delta(t: &Tqe, p: &Pauli, q: &Pauli) -> i64 {
    let (a, b) = (p.letter(t.i), p.letter(t.j));
    let (c, d) = (q.letter(t.i), q.letter(t.j));
    let (na, nb) = t.letters(a, b);
    let (nc, nd) = t.letters(c, d);
    let local = |x: Letter, y: Letter| -> (i64, i64) {
        match letter_class(x, y) {
            SupportClass::Strong => (1, 1),
            SupportClass::Weak => (0, 1),
            SupportClass::None => (0, 0),
        }
    };
    let (d0, s0) = add(local(a, c), local(b, d));
    let (d1, s1) = add(local(na, nc), local(nb, nd));
    (d1 - d0) / 2 + (s1 - s0)
}

fn add(a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
    (a.0 + b.0, a.1 + b.1)
}

/// A single-qubit Clifford as its conjugation action `l ↦ u l u†`,
/// indexed by `I, X, Y, Z`.
type Action = [(Letter, u8); 4];

fn letter_index(l: Letter) -> usize {
    letter_rank(l) as usize
}

fn gate_action(g: &Gate) -> Action {
    let f = g
        .clifford_frame(1)
        .expect("single-qubit Clifford")
        .inverse();
    let mut a = [(Letter::I, 0); 4];
    for l in [Letter::I, Letter::X, Letter::Y, Letter::Z] {
        let img = f.lookup(&Pauli::single(1, 0, l));
        a[letter_index(l)] = (img.letter(0), img.phase_exp());
    }
    a
}

fn then(first: &Action, second: &Action) -> Action {
    let mut out = [(Letter::I, 0); 4];
    for k in 0..4 {
        let (l1, p1) = first[k];
        let (l2, p2) = second[letter_index(l1)];
        out[k] = (l2, (p1 + p2) & 3);
    }
    out
}

fn on_qubit(g: Gate, q: usize) -> Gate {
    match g {
        Gate::H(_) => Gate::H(q),
        Gate::S(_) => Gate::S(q),
        Gate::Sdg(_) => Gate::Sdg(q),
        Gate::X(_) => Gate::X(q),
        Gate::Y(_) => Gate::Y(q),
        Gate::Z(_) => Gate::Z(q),
        Gate::RXY(_, t, p) => Gate::RXY(q, t, p),
        other => other,
    }
}

fn inverse_gate(g: Gate) -> Gate {
    match g {
        Gate::S(q) => Gate::Sdg(q),
        Gate::Sdg(q) => Gate::S(q),
        Gate::RXY(q, t, p) if (t.abs() - PI).abs() > 1e-12 => Gate::RXY(q, -t, p),
        other => other,
    }
}

/// The 24 single-qubit Cliffords, each with a shortest palette word.
struct Palette {
    elements: Vec<(Action, Vec<Gate>)>,
}

impl Palette {
    fn new(gateset: GateSet) -> Palette {
        let gates: Vec<Gate> = match gateset {
            GateSet::Generic => vec![
                Gate::H(0),
                Gate::S(0),
                Gate::Sdg(0),
                Gate::X(0),
                Gate::Y(0),
                Gate::Z(0),
            ],
            GateSet::Native => vec![
                Gate::RXY(0, FRAC_PI_2, 0.0),
                Gate::RXY(0, -FRAC_PI_2, 0.0),
                Gate::RXY(0, FRAC_PI_2, FRAC_PI_2),
                Gate::RXY(0, -FRAC_PI_2, FRAC_PI_2),
                Gate::RXY(0, PI, 0.0),
                Gate::RXY(0, PI, FRAC_PI_2),
            ],
        };
        let actions: Vec<Action> = gates.iter().map(gate_action).collect();
        let identity: Action = [
            (Letter::I, 0),
            (Letter::X, 0),
            (Letter::Y, 0),
            (Letter::Z, 0),
        ];
        let mut seen: BTreeMap<Vec<(u8, u8)>, ()> = BTreeMap::new();
        let key = |a: &Action| {
            a.iter()
                .map(|(l, p)| (letter_rank(*l), *p))
                .collect::<Vec<_>>()
        };
        let mut elements = Vec::new();
        let mut queue = VecDeque::from([(identity, Vec::new())]);
        seen.insert(key(&identity), ());
        while let Some((a, word)) = queue.pop_front() {
            elements.push((a, word.clone()));
            for (g, ga) in gates.iter().zip(&actions) {
                let next = then(&a, ga);
                if seen.insert(key(&next), ()).is_none() {
                    let mut w = word.clone();
                    w.push(*g);
                    queue.push_back((next, w));
                }
            }
        }
        Palette { elements }
    }

    /// Shortest word whose action satisfies `pred`.
    fn find(&self, pred: impl Fn(&Action) -> bool) -> &(Action, Vec<Gate>) {
        self.elements
            .iter()
            .find(|(a, _)| pred(a))
            .expect("palette generates the Clifford group")
    }
}

fn image(a: &Action, l: Letter, phase: u8) -> (Letter, u8) {
    let (m, p) = a[letter_index(l)];
    (m, (p + phase) & 3)
}

#[derive(Debug, Clone)]
struct SNode {
    node: Node,
    succ: Vec<usize>,
    indeg: usize,
    alive: bool,
    deferred: bool,
}

impl SNode {
    fn paulis_mut(&mut self) -> Vec<&mut Pauli> {
        match &mut self.node {
            Node::Rotation { pauli, .. } | Node::Measurement { pauli, .. } => vec![pauli],
            Node::Preparation { pz, px } => vec![pz, px],
            _ => vec![],
        }
    }

    fn cost(&self) -> usize {
        node_cost(&self.node).expect("quantum node")
    }

    fn delta(&self, t: &Tqe) -> i64 {
        match &self.node {
            Node::Rotation { pauli, .. } | Node::Measurement { pauli, .. } => {
                singlet_delta(t, pauli)
            }
            Node::Preparation { pz, px } => factor_delta(t, pz, px),
            _ => 0,
        }
    }
}

/// Synthesis output. Running `circuit`, then moving the content of physical
/// qubit `permutation[j]` to qubit `j`, then applying `msf`, realizes the program.
#[derive(Debug, Clone)]
pub struct SynthResult {
    pub circuit: Circuit,
    pub msf: Msf,
    pub permutation: Vec<usize>,
    /// Entanglers chosen by the node search, excluding frame finalization.
    pub search_tqes: usize,
    pub frame_tqes: usize,
}

struct Synth<'a> {
    n: usize,
    cfg: &'a SearchConfig,
    palette: Palette,
    nodes: Vec<SNode>,
    rows: Vec<(Pauli, Pauli)>,
    frame_in_cost: bool,
    circuit: Circuit,
    sign_fix: Msf,
    elim: Msf,
    frontier: Vec<usize>,
    depth: usize,
    tqes: usize,
    begin: BTreeSet<usize>,
    pending_active: usize,
}

impl<'a> Synth<'a> {
    fn new(n: usize, n_cbits: usize, cfg: &'a SearchConfig) -> Synth<'a> {
        Synth {
            n,
            cfg,
            palette: Palette::new(cfg.gateset),
            nodes: Vec::new(),
            rows: PauliFrame::identity(n).rows().to_vec(),
            frame_in_cost: false,
            circuit: Circuit::new(n, n_cbits),
            sign_fix: Msf::new(),
            elim: Msf::new(),
            frontier: vec![0; n],
            depth: 0,
            tqes: 0,
            begin: BTreeSet::new(),
            pending_active: 0,
        }
    }

    fn load(&mut self, prog: &Program, outcome: Outcome) {
        let g = &prog.graph;
        let ids: Vec<usize> = g.ids().collect();
        let index: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        for &i in &ids {
            let node = g.node(i).expect("live").clone();
            let deferred =
                outcome == Outcome::Release && node.is_measurement() && g.succ(i).is_empty();
            self.nodes.push(SNode {
                node,
                succ: g.succ(i).iter().map(|s| index[s]).collect(),
                indeg: g.pred(i).len(),
                alive: true,
                deferred,
            });
        }
        self.begin = (0..self.nodes.len())
            .filter(|&k| self.nodes[k].indeg == 0)
            .collect();
        self.pending_active = self.nodes.iter().filter(|s| !s.deferred).count();
        self.rows = prog.frame.rows().to_vec();
        self.frame_in_cost = outcome == Outcome::Hold;
    }

    fn emit(&mut self, g: Gate) {
        let qs = g.qubits();
        let t = qs.iter().map(|&q| self.frontier[q]).max().unwrap_or(0) + 1;
        for q in qs {
            self.frontier[q] = t;
        }
        self.depth = self.depth.max(t);
        self.circuit.push(g);
    }

    /// Conjugates everything pending by a single-qubit Clifford action on `q`.
    fn absorb_action(&mut self, q: usize, a: &Action) {
        for s in self.nodes.iter_mut().filter(|s| s.alive) {
            for p in s.paulis_mut() {
                p.map_letter(q, a);
            }
        }
        for (z, x) in &mut self.rows {
            z.map_letter(q, a);
            x.map_letter(q, a);
        }
    }

    fn add_1q(&mut self, g: Gate) {
        let a = gate_action(&on_qubit(g, 0));
        self.emit(g);
        self.absorb_action(g.qubits()[0], &a);
    }

    fn emit_word(&mut self, word: &[Gate], q: usize) {
        for &g in word {
            self.add_1q(on_qubit(g, q));
        }
    }

    /// Gates realizing `t` up to global phase.
    fn tqe_gates(&self, t: &Tqe) -> Vec<Gate> {
        let cores: Vec<(Letter, Letter, Gate)> = match self.cfg.gateset {
            GateSet::Generic => vec![
                (Letter::Z, Letter::X, Gate::CNOT(t.i, t.j)),
                (Letter::X, Letter::Z, Gate::CNOT(t.j, t.i)),
                (Letter::Z, Letter::Z, Gate::CZ(t.i, t.j)),
            ],
            GateSet::Native => vec![(Letter::Z, Letter::Z, Gate::CZ(t.i, t.j))],
        };
        let mut best: Option<Vec<Gate>> = None;
        for (ci, cj, core) in cores {
            let wi = &self.palette.find(|a| image(a, t.s1, 0) == (ci, 0)).1;
            let wj = &self.palette.find(|a| image(a, t.s2, 0) == (cj, 0)).1;
            let mut seq: Vec<Gate> = wi.iter().map(|&g| on_qubit(g, t.i)).collect();
            seq.extend(wj.iter().map(|&g| on_qubit(g, t.j)));
            seq.push(core);
            seq.extend(wj.iter().rev().map(|&g| inverse_gate(on_qubit(g, t.j))));
            seq.extend(wi.iter().rev().map(|&g| inverse_gate(on_qubit(g, t.i))));
            if best.as_ref().is_none_or(|b| seq.len() < b.len()) {
                best = Some(seq);
            }
        }
        best.expect("at least one core gate")
    }

    fn add_tqe(&mut self, t: &Tqe) {
        for g in self.tqe_gates(t) {
            self.emit(g);
        }
        for s in self.nodes.iter_mut().filter(|s| s.alive) {
            for p in s.paulis_mut() {
                t.apply(p);
            }
        }
        for (z, x) in &mut self.rows {
            t.apply(z);
            t.apply(x);
        }
        self.tqes += 1;
    }

    fn active(&self) -> Vec<usize> {
        let phase_b = self.pending_active == 0;
        self.begin
            .iter()
            .copied()
            .filter(|&k| phase_b || !self.nodes[k].deferred)
            .collect()
    }

    fn retire(&mut self, k: usize) {
        self.nodes[k].alive = false;
        self.begin.remove(&k);
        if !self.nodes[k].deferred {
            self.pending_active -= 1;
        }
        let succ = self.nodes[k].succ.clone();
        for s in succ {
            self.nodes[s].indeg -= 1;
            if self.nodes[s].indeg == 0 {
                self.begin.insert(s);
            }
        }
    }

    /// Emits a cost-0 node.
    fn emit_node(&mut self, k: usize) {
        let node = self.nodes[k].node.clone();
        match node {
            Node::Rotation { pauli, theta } => {
                let q = pauli.support()[0];
                let t = if pauli.is_negative() { -theta } else { theta };
                match (self.cfg.gateset, pauli.letter(q)) {
                    (GateSet::Generic, Letter::X) => self.emit(Gate::RX(q, t)),
                    (GateSet::Generic, Letter::Y) => self.emit(Gate::RY(q, t)),
                    (GateSet::Generic, _) => self.emit(Gate::RZ(q, t)),
                    (GateSet::Native, Letter::X) => self.emit(Gate::RXY(q, t, 0.0)),
                    (GateSet::Native, Letter::Y) => self.emit(Gate::RXY(q, t, FRAC_PI_2)),
                    (GateSet::Native, _) => {
                        // RZ(t) = X · RXY(π, −t/2) up to phase; the X is absorbed.
                        self.emit(Gate::RXY(q, PI, -t / 2.0));
                        self.nodes[k].alive = false;
                        let a = gate_action(&Gate::X(0));
                        self.absorb_action(q, &a);
                        self.nodes[k].alive = true;
                    }
                }
            }
            Node::Measurement { pauli, cvar } => {
                let q = pauli.support()[0];
                let l = pauli.letter(q);
                let word = self
                    .palette
                    .find(|a| image(a, l, 0).0 == Letter::Z)
                    .1
                    .clone();
                self.emit_word(&word, q);
                let Node::Measurement { pauli, .. } = &self.nodes[k].node else {
                    unreachable!()
                };
                let negative = pauli.is_negative();
                self.emit(Gate::MeasZ(q, cvar));
                if negative {
                    let mut e = Affine::var(cvar);
                    e.constant = true;
                    self.sign_fix.assign(cvar, e);
                }
            }
            Node::Preparation { pz, .. } => {
                // A Clifford on q just before a preparation of q is discarded,
                // so the basis change is absorbed without being emitted.
                let q = pz.support()[0];
                let (l, ph) = (pz.letter(q), pz.phase_exp());
                let a = self.palette.find(|a| image(a, l, ph) == (Letter::Z, 0)).0;
                self.absorb_action(q, &a);
                self.emit(Gate::PrepZ(q));
            }
            _ => unreachable!("graph holds quantum nodes only"),
        }
        self.retire(k);
    }

    fn gate_cost(&self, t: &Tqe, active: &[usize]) -> f64 {
        let alive: Vec<usize> = (0..self.nodes.len())
            .filter(|&k| self.nodes[k].alive)
            .collect();
        let boost = if self.cfg.free_node_weighting && !active.is_empty() {
            alive.len() as f64 / active.len() as f64
        } else {
            1.0
        };
        let (mut num, mut den) = (0.0, 0.0);
        for &k in &alive {
            let w = if active.binary_search(&k).is_ok() {
                boost
            } else {
                1.0
            };
            num += w * self.nodes[k].delta(t) as f64;
            den += w;
        }
        let mut cost = if den > 0.0 { num / den } else { 0.0 };
        if self.frame_in_cost && self.n > 0 {
            let d: i64 = self.rows.iter().map(|(z, x)| factor_delta(t, z, x)).sum();
            cost += d as f64 / self.n as f64;
        }
        if self.frontier[t.i].max(self.frontier[t.j]) < self.depth {
            cost -= self.cfg.credit;
        }
        cost
    }

    fn pick(&self, candidates: Vec<Tqe>, cost: impl Fn(&Tqe) -> f64) -> Tqe {
        let mut best: Option<(f64, Tqe)> = None;
        for t in candidates {
            let c = cost(&t);
            let better = match &best {
                None => true,
                Some((bc, bt)) => c < bc - 1e-12 || ((c - bc).abs() <= 1e-12 && t.key() < bt.key()),
            };
            if better {
                best = Some((c, t));
            }
        }
        best.expect("reduce_node is never empty for positive cost")
            .1
    }

    fn start_phase_b(&mut self) {
        let ids: Vec<usize> = (0..self.nodes.len())
            .filter(|&k| self.nodes[k].alive)
            .collect();
        let meas: Vec<(Pauli, Cvar)> = ids
            .iter()
            .map(|&k| match &self.nodes[k].node {
                Node::Measurement { pauli, cvar } => (pauli.clone(), *cvar),
                other => unreachable!("only deferred measurements remain, found {other}"),
            })
            .collect();
        let e = eliminate_measurements(&meas);
        let kept: BTreeMap<Cvar, Pauli> = e.generators.into_iter().map(|(p, c)| (c, p)).collect();
        for &k in &ids {
            let Node::Measurement { cvar, .. } = self.nodes[k].node.clone() else {
                unreachable!()
            };
            match kept.get(&cvar) {
                Some(p) => {
                    self.nodes[k].node = Node::Measurement {
                        pauli: p.clone(),
                        cvar,
                    }
                }
                None => {
                    self.nodes[k].alive = false;
                    self.begin.remove(&k);
                }
            }
        }
        self.elim = e.msf;
    }

    fn search(&mut self) {
        let mut phase_b_started = false;
        loop {
            if self.pending_active == 0 && !phase_b_started {
                phase_b_started = true;
                if self.nodes.iter().any(|s| s.alive) {
                    self.start_phase_b();
                }
            }
            let active = self.active();
            if let Some(&k) = active.iter().find(|&&k| self.nodes[k].cost() == 0) {
                self.emit_node(k);
                continue;
            }
            if active.is_empty() {
                break;
            }
            let target = *active
                .iter()
                .min_by_key(|&&k| (self.nodes[k].cost(), k))
                .expect("non-empty");
            let candidates = reduce_node(&self.nodes[target].node).expect("positive cost");
            let t = self.pick(candidates, |t| self.gate_cost(t, &active));
            self.add_tqe(&t);
        }
    }

    /// Reduces the frame to a qubit permutation and returns it.
    fn finish_frame(&mut self) -> Vec<usize> {
        loop {
            let costs: Vec<usize> = self.rows.iter().map(|(z, x)| factor_cost(z, x)).collect();
            let Some(target) = (0..self.n)
                .filter(|&j| costs[j] > 0)
                .min_by_key(|&j| (costs[j], j))
            else {
                break;
            };
            let (z, x) = &self.rows[target];
            let candidates = reduce_factor(z, x);
            let t = self.pick(candidates, |t| {
                let d: i64 = self.rows.iter().map(|(z, x)| factor_delta(t, z, x)).sum();
                let mut c = d as f64 / self.n as f64;
                if self.frontier[t.i].max(self.frontier[t.j]) < self.depth {
                    c -= self.cfg.credit;
                }
                c
            });
            self.add_tqe(&t);
        }
        let mut perm = vec![0; self.n];
        for j in 0..self.n {
            let (z, x) = self.rows[j].clone();
            let q = z.support()[0];
            let (lz, pz) = (z.letter(q), z.phase_exp());
            let (lx, px) = (x.letter(q), x.phase_exp());
            let word = self
                .palette
                .find(|a| image(a, lz, pz) == (Letter::Z, 0) && image(a, lx, px) == (Letter::X, 0))
                .1
                .clone();
            self.emit_word(&word, q);
            perm[j] = q;
        }
        if self.cfg.emit_swaps {
            let mut pos = perm.clone();
            for j in 0..self.n {
                if pos[j] == j {
                    continue;
                }
                let k = pos[j];
                let l = pos.iter().position(|&p| p == j).expect("permutation");
                for t in [
                    Tqe {
                        s1: Letter::Z,
                        s2: Letter::X,
                        i: j.min(k),
                        j: j.max(k),
                    },
                    Tqe {
                        s1: Letter::X,
                        s2: Letter::Z,
                        i: j.min(k),
                        j: j.max(k),
                    },
                    Tqe {
                        s1: Letter::Z,
                        s2: Letter::X,
                        i: j.min(k),
                        j: j.max(k),
                    },
                ] {
                    self.add_tqe(&t);
                }
                pos[j] = j;
                pos[l] = k;
            }
            perm = (0..self.n).collect();
        }
        perm
    }

    fn residual_frame(&self) -> PauliFrame {
        PauliFrame::from_rows(self.rows.clone()).expect("conjugated frame stays valid")
    }
}

/// Runs the node search, returning the emitted circuit, the frame still
/// to be realized, the classical corrections and the entangler count.
pub fn search_nonclifford(
    prog: &Program,
    outcome: Outcome,
    cfg: &SearchConfig,
) -> (Circuit, PauliFrame, Msf, usize) {
    let mut s = Synth::new(prog.n_qubits, prog.next_cvar as usize, cfg);
    s.load(prog, outcome);
    s.search();
    let msf = Msf::compose(&s.elim, &s.sign_fix);
    (s.circuit.clone(), s.residual_frame(), msf, s.tqes)
}

/// Synthesizes a frame as a circuit followed by a qubit relabeling.
pub fn synthesize_frame(f: &PauliFrame, cfg: &SearchConfig) -> (Circuit, Vec<usize>) {
    let mut s = Synth::new(f.n_qubits(), 0, cfg);
    s.rows = f.rows().to_vec();
    let perm = s.finish_frame();
    (s.circuit, perm)
}

pub fn synthesize(prog: &Program, outcome: Outcome, cfg: &SearchConfig) -> SynthResult {
    let mut s = Synth::new(prog.n_qubits, prog.next_cvar as usize, cfg);
    s.load(prog, outcome);
    s.search();
    let search_tqes = s.tqes;
    let permutation = match outcome {
        Outcome::Hold => s.finish_frame(),
        Outcome::Release => (0..prog.n_qubits).collect(),
    };
    let local = Msf::compose(&s.elim, &s.sign_fix);
    SynthResult {
        msf: Msf::compose(&prog.msf, &local)
            .restrict(|c| prog.is_user_cvar(c))
            .compact(),
        permutation,
        search_tqes,
        frame_tqes: s.tqes - search_tqes,
        circuit: s.circuit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str, n: usize) -> Pauli {
        Pauli::parse_with_width(s, n).unwrap()
    }

    #[test]
    fn cost_examples() {
        assert_eq!(
            node_cost(&Node::rotation(p("X0Z2Y3", 4), 0.1).unwrap()).unwrap(),
            2
        );
        assert_eq!(
            node_cost(&Node::preparation(p("Z0Z1", 2), p("X0", 2)).unwrap()).unwrap(),
            1
        );
        assert_eq!(
            node_cost(&Node::measurement(p("Z0", 1), Cvar(0)).unwrap()).unwrap(),
            0
        );
        assert!(node_cost(&Node::Msf(Msf::new())).is_err());
    }

    #[test]
    fn support_examples() {
        let (z0, x0) = (p("Z0", 2), p("X0", 2));
        assert_eq!(local_support(&z0, &x0, 0), [[true, false], [false, true]]);
        assert_eq!(support_class(&z0, &x0, 0), SupportClass::Strong);
        let zz = p("Z0Z1", 2);
        assert_eq!(local_support(&zz, &x0, 1), [[true, false], [false, false]]);
        assert_eq!(support_class(&zz, &x0, 1), SupportClass::Weak);
    }

    #[test]
    fn zz_rotation_reducers() {
        let r = reduce_node(&Node::rotation(p("Z0Z1", 2), 0.3).unwrap()).unwrap();
        let has = |s1, s2| r.contains(&Tqe { s1, s2, i: 0, j: 1 });
        assert!(has(Letter::Z, Letter::X));
        assert!(has(Letter::X, Letter::Z));
        assert_eq!(r.len(), 4);
    }

    #[test]
    fn prep_with_weak_qubit_has_one_reducer() {
        let r = reduce_node(&Node::preparation(p("Z0Z1", 2), p("X0", 2)).unwrap()).unwrap();
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn palette_covers_the_clifford_group() {
        assert_eq!(Palette::new(GateSet::Generic).elements.len(), 24);
        assert_eq!(Palette::new(GateSet::Native).elements.len(), 24);
    }

    #[test]
    fn single_qubit_rotations_need_no_entanglers() {
        let c = Circuit::parse("qubits 3\nrx(0.3) q0\nry(0.2) q1\nt q2").unwrap();
        let prog = crate::graph::circuit_to_graph(&c).unwrap();
        let r = synthesize(&prog, Outcome::Hold, &SearchConfig::default());
        assert_eq!(r.circuit.metrics().two_qubit_gates, 0);
    }

    #[test]
    fn native_rz_uses_rxy_pi() {
        let mut prog = Program::new(1, 0);
        prog.push_node(Node::rotation(p("Z0", 1), 0.4).unwrap())
            .unwrap();
        let cfg = SearchConfig {
            gateset: GateSet::Native,
            ..SearchConfig::default()
        };
        let (c, f, _, _) = search_nonclifford(&prog, Outcome::Hold, &cfg);
        assert_eq!(c.gates, vec![Gate::RXY(0, PI, -0.2)]);
        assert_eq!(
            f,
            PauliFrame::from_gate(&crate::frame::CliffordGate::X(0), 1).unwrap()
        );
    }

    #[test]
    fn frame_round_trips() {
        let cfg = SearchConfig::default();
        let (c, perm) = synthesize_frame(&PauliFrame::identity(3), &cfg);
        assert!(c.gates.is_empty());
        assert_eq!(perm, vec![0, 1, 2]);
        let swap = PauliFrame::from_gate(&crate::frame::CliffordGate::Swap(0, 1), 2).unwrap();
        let (c, perm) = synthesize_frame(&swap, &cfg);
        assert!(c.gates.is_empty());
        assert_eq!(perm, vec![1, 0]);
    }

    proptest! {
        #[test]
        fn tqe_is_self_inverse(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..6);
            let letters: Vec<Letter> = (0..n).map(|_| [Letter::I, Letter::X, Letter::Y, Letter::Z][rng.gen_range(0..4)]).collect();
            let q = Pauli::from_letters(&letters);
            let t = Tqe::all_on(0, 1)[rng.gen_range(0..9)];
            let mut r = q.clone();
            t.apply(&mut r);
            t.apply(&mut r);
            prop_assert_eq!(r, q);
        }

        #[test]
        fn reducers_strictly_lower_cost(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..7);
            let f = PauliFrame::random(n, &mut rng);
            let (z, x) = f.rows()[rng.gen_range(0..n)].clone();
            let node = if rng.gen_bool(0.5) {
                Node::preparation(z, x).unwrap()
            } else {
                Node::rotation(z, 0.3).unwrap()
            };
            let c = node_cost(&node).unwrap();
            if c > 0 {
                let r = reduce_node(&node).unwrap();
                prop_assert!(!r.is_empty());
                for t in r {
                    let mut m = node.clone();
                    match &mut m {
                        Node::Rotation { pauli, .. } => t.apply(pauli),
                        Node::Preparation { pz, px } => { t.apply(pz); t.apply(px); }
                        _ => unreachable!(),
                    }
                    prop_assert!(node_cost(&m).unwrap() < c);
                }
            }
        }
    }
}
