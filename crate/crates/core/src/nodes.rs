//! Node variants of the graph representation, their commutation relation,
//! frame push-through and pairwise merge rules.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::frame::{clifford_multiple, CliffordGate, FrameError, PauliFrame};
use crate::pauli::{Pauli, PauliError};

/// Classical variable id. Ids below the program's user count name the
/// circuit's own bits; larger ids are fresh measurement results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cvar(pub u32);

impl fmt::Display for Cvar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// Affine GF(2) expression over classical variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Affine {
    pub sources: BTreeSet<Cvar>,
    pub constant: bool,
}

impl Affine {
    pub fn var(c: Cvar) -> Affine {
        Affine {
            sources: [c].into_iter().collect(),
            constant: false,
        }
    }

    pub fn constant(b: bool) -> Affine {
        Affine {
            sources: BTreeSet::new(),
            constant: b,
        }
    }

    pub fn add(&mut self, other: &Affine) {
        for s in &other.sources {
            if !self.sources.remove(s) {
                self.sources.insert(*s);
            }
        }
        self.constant ^= other.constant;
    }

    pub fn eval(&self, ones: &BTreeSet<Cvar>) -> bool {
        (self.sources.iter().filter(|s| ones.contains(s)).count() % 2 == 1) ^ self.constant
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<String> = self.sources.iter().map(|c| c.to_string()).collect();
        if self.constant || terms.is_empty() {
            terms.push(u8::from(self.constant).to_string());
        }
        write!(f, "{}", terms.join(" + "))
    }
}

/// Measurement space function: simultaneous affine reassignment of
/// classical variables. Unassigned variables keep their value.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Msf {
    map: BTreeMap<Cvar, Affine>,
}

impl Msf {
    pub fn new() -> Msf {
        Msf::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn assign(&mut self, target: Cvar, expr: Affine) {
        self.map.insert(target, expr);
    }

    pub fn single(target: Cvar, expr: Affine) -> Msf {
        let mut m = Msf::new();
        m.assign(target, expr);
        m
    }

    pub fn get(&self, target: Cvar) -> Option<&Affine> {
        self.map.get(&target)
    }

    pub fn assignments(&self) -> impl Iterator<Item = (&Cvar, &Affine)> {
        self.map.iter()
    }

    /// Every variable read by some assignment.
    pub fn sources(&self) -> BTreeSet<Cvar> {
        self.map
            .values()
            .flat_map(|a| a.sources.iter().copied())
            .collect()
    }

    /// `mu2 ∘ mu1`: apply `mu1` first.
    pub fn compose(mu2: &Msf, mu1: &Msf) -> Msf {
        let mut out = mu1.clone();
        for (t, e) in &mu2.map {
            let mut acc = Affine::constant(e.constant);
            for s in &e.sources {
                match mu1.map.get(s) {
                    Some(inner) => acc.add(inner),
                    None => acc.add(&Affine::var(*s)),
                }
            }
            out.map.insert(*t, acc);
        }
        out
    }

    /// Applies the function to an assignment given as the set of variables equal to 1.
    pub fn apply(&self, ones: &BTreeSet<Cvar>) -> BTreeSet<Cvar> {
        let mut out = ones.clone();
        for (t, e) in &self.map {
            if e.eval(ones) {
                out.insert(*t);
            } else {
                out.remove(t);
            }
        }
        out
    }

    /// Keeps only the assignments whose target satisfies `keep`.
    pub fn restrict(&self, keep: impl Fn(Cvar) -> bool) -> Msf {
        let map = self
            .map
            .iter()
            .filter(|(t, _)| keep(**t))
            .map(|(t, e)| (*t, e.clone()))
            .collect();
        Msf { map }
    }

    /// Drops assignments of the form `c := c`.
    pub fn compact(&self) -> Msf {
        let map = self
            .map
            .iter()
            .filter(|(t, e)| {
                !(e.constant == false && e.sources.len() == 1 && e.sources.contains(t))
            })
            .map(|(t, e)| (*t, e.clone()))
            .collect();
        Msf { map }
    }

    pub fn render(&self) -> Vec<String> {
        self.map
            .iter()
            .map(|(t, e)| format!("{t} := {e}"))
            .collect()
    }
}

impl fmt::Display for Msf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mu{{{}}}", self.render().join("; "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Rotation { pauli: Pauli, theta: f64 },
    Preparation { pz: Pauli, px: Pauli },
    Measurement { pauli: Pauli, cvar: Cvar },
    Frame(PauliFrame),
    Msf(Msf),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NodeError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("preparation pair {0}, {1} must anticommute")]
    CommutingPreparation(String, String),
    #[error("angle {0} is not finite")]
    NonFinite(f64),
}

/// Reduces an angle to (−π, π]. Rotations by 2π differ only by a global phase.
pub fn canonical_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let r = theta.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// A node followed by an optional frame, the result of normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub node: Option<Node>,
    pub frame: Option<PauliFrame>,
}

impl Node {
    pub fn rotation(pauli: Pauli, theta: f64) -> Result<Node, NodeError> {
        if !pauli.is_hermitian() {
            return Err(PauliError::NotHermitian(pauli.to_string()).into());
        }
        if !theta.is_finite() {
            return Err(NodeError::NonFinite(theta));
        }
        Ok(Node::Rotation { pauli, theta })
    }

    pub fn preparation(pz: Pauli, px: Pauli) -> Result<Node, NodeError> {
        for p in [&pz, &px] {
            if !p.is_hermitian() {
                return Err(PauliError::NotHermitian(p.to_string()).into());
            }
        }
        if !pz.try_lambda(&px)? {
            return Err(NodeError::CommutingPreparation(
                pz.to_string(),
                px.to_string(),
            ));
        }
        Ok(Node::Preparation { pz, px })
    }

    pub fn measurement(pauli: Pauli, cvar: Cvar) -> Result<Node, NodeError> {
        if !pauli.is_hermitian() {
            return Err(PauliError::NotHermitian(pauli.to_string()).into());
        }
        Ok(Node::Measurement { pauli, cvar })
    }

    /// Rotation in normal form: positive Pauli, canonical angle; Clifford
    /// angles become frames and zero angles vanish.
    pub fn rotation_normalized(pauli: &Pauli, theta: f64) -> Normalized {
        let (p, t) = if pauli.is_negative() {
            (pauli.negate(), -theta)
        } else {
            (pauli.clone(), theta)
        };
        let t = canonical_angle(t);
        if p.has_trivial_letters() {
            return Normalized {
                node: None,
                frame: None,
            };
        }
        match clifford_multiple(t) {
            Some(0) => Normalized {
                node: None,
                frame: None,
            },
            Some(_) => {
                let f = PauliFrame::from_gate(&CliffordGate::Rot(p, t), pauli.n_qubits())
                    .expect("Clifford angle");
                Normalized {
                    node: None,
                    frame: Some(f),
                }
            }
            None => Normalized {
                node: Some(Node::Rotation { pauli: p, theta: t }),
                frame: None,
            },
        }
    }

    /// Brings rotations and preparations into normal form.
    pub fn normalize(self) -> Normalized {
        match self {
            Node::Rotation { pauli, theta } => Node::rotation_normalized(&pauli, theta),
            Node::Preparation { pz, px } => {
                let n = pz.n_qubits();
                let px_pos = px.unsigned();
                if pz.is_negative() {
                    let f = PauliFrame::from_gate(&CliffordGate::PauliGate(px_pos.clone()), n)
                        .expect("Hermitian Pauli");
                    Normalized {
                        node: Some(Node::Preparation {
                            pz: pz.negate(),
                            px: px_pos,
                        }),
                        frame: Some(f),
                    }
                } else {
                    Normalized {
                        node: Some(Node::Preparation { pz, px: px_pos }),
                        frame: None,
                    }
                }
            }
            Node::Frame(f) => Normalized {
                frame: if f.is_identity() { None } else { Some(f) },
                node: None,
            },
            other => Normalized {
                node: Some(other),
                frame: None,
            },
        }
    }

    pub fn n_qubits(&self) -> Option<usize> {
        match self {
            Node::Rotation { pauli, .. } | Node::Measurement { pauli, .. } => {
                Some(pauli.n_qubits())
            }
            Node::Preparation { pz, .. } => Some(pz.n_qubits()),
            Node::Frame(f) => Some(f.n_qubits()),
            Node::Msf(_) => None,
        }
    }

    pub fn paulis(&self) -> Vec<&Pauli> {
        match self {
            Node::Rotation { pauli, .. } | Node::Measurement { pauli, .. } => vec![pauli],
            Node::Preparation { pz, px } => vec![pz, px],
            _ => vec![],
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Node::Measurement { .. })
    }

    /// Whether a Pauli commutes with this node.
    pub fn commutes_with_pauli(&self, q: &Pauli) -> bool {
        match self {
            Node::Rotation { pauli, .. } | Node::Measurement { pauli, .. } => pauli.commutes(q),
            Node::Preparation { pz, px } => pz.commutes(q) && px.commutes(q),
            Node::Frame(f) => f.fixes(q),
            Node::Msf(_) => true,
        }
    }

    /// Sufficient condition for `a; b ≡ b; a`.
    pub fn commutes(a: &Node, b: &Node) -> bool {
        match (a, b) {
            (Node::Msf(_), Node::Measurement { .. }) | (Node::Measurement { .. }, Node::Msf(_)) => {
                false
            }
            (Node::Msf(_), Node::Msf(_)) => false,
            (Node::Msf(_), _) | (_, Node::Msf(_)) => true,
            (Node::Frame(f), Node::Frame(g)) => {
                PauliFrame::compose(f, g) == PauliFrame::compose(g, f)
            }
            (Node::Frame(_), other) => other.paulis().iter().all(|p| a.commutes_with_pauli(p)),
            (other, Node::Frame(_)) => other.paulis().iter().all(|p| b.commutes_with_pauli(p)),
            (x, y) => x.paulis().iter().all(|p| y.commutes_with_pauli(p)),
        }
    }

    /// `F(n)` such that `F; n ≡ F(n); F`.
    pub fn push_through_frame(f: &PauliFrame, n: &Node) -> Node {
        match n {
            Node::Rotation { pauli, theta } => Node::Rotation {
                pauli: f.lookup(pauli),
                theta: *theta,
            },
            Node::Preparation { pz, px } => Node::Preparation {
                pz: f.lookup(pz),
                px: f.lookup(px),
            },
            Node::Measurement { pauli, cvar } => Node::Measurement {
                pauli: f.lookup(pauli),
                cvar: *cvar,
            },
            Node::Frame(g) => Node::Frame(PauliFrame::compose(
                &PauliFrame::compose(&f.inverse(), g),
                f,
            )),
            Node::Msf(m) => Node::Msf(m.clone()),
        }
    }

    /// Tries to merge `n1; n2` (with `n1` first).
    pub fn try_merge(n1: &Node, n2: &Node) -> Option<Merge> {
        use Node::*;
        match (n1, n2) {
            (
                Rotation {
                    pauli: p1,
                    theta: t1,
                },
                Rotation {
                    pauli: p2,
                    theta: t2,
                },
            ) if p1.same_letters(p2) => {
                let t = if p1.phase_exp() == p2.phase_exp() {
                    t1 + t2
                } else {
                    t1 - t2
                };
                let r = Node::rotation_normalized(p1, t);
                Some(Merge {
                    nodes: r.node.into_iter().collect(),
                    frame: r.frame,
                    msf: None,
                })
            }
            (Preparation { pz, px }, Preparation { pz: pz2, px: px2 }) if pz.same_letters(pz2) => {
                let frame = if pz.phase_exp() != pz2.phase_exp() {
                    Some(
                        PauliFrame::from_gate(
                            &CliffordGate::PauliGate(px2.unsigned()),
                            pz.n_qubits(),
                        )
                        .expect("Hermitian Pauli"),
                    )
                } else {
                    None
                };
                Some(Merge {
                    nodes: vec![Preparation {
                        pz: pz.clone(),
                        px: px.clone(),
                    }],
                    frame,
                    msf: None,
                })
            }
            (Preparation { pz, .. }, Rotation { pauli, .. }) if pz.same_letters(pauli) => {
                Some(Merge {
                    nodes: vec![n1.clone()],
                    frame: None,
                    msf: None,
                })
            }
            (
                Measurement {
                    pauli: p1,
                    cvar: c1,
                },
                Measurement {
                    pauli: p2,
                    cvar: c2,
                },
            ) if p1.same_letters(p2) => {
                let b = p1.phase_exp() != p2.phase_exp();
                let mut e = Affine::var(*c1);
                e.constant = b;
                Some(Merge {
                    nodes: vec![n1.clone()],
                    frame: None,
                    msf: Some(crate::nodes::Msf::single(*c2, e)),
                })
            }
            (Preparation { pz, .. }, Measurement { pauli, cvar }) if pz.same_letters(pauli) => {
                Some(Merge {
                    nodes: vec![n1.clone()],
                    frame: None,
                    msf: Some(crate::nodes::Msf::single(
                        *cvar,
                        Affine::constant(pz.phase_exp() != pauli.phase_exp()),
                    )),
                })
            }
            (Rotation { pauli: p1, .. }, Measurement { pauli: p2, .. }) if p1.same_letters(p2) => {
                Some(Merge {
                    nodes: vec![n2.clone()],
                    frame: None,
                    msf: None,
                })
            }
            (Frame(f1), Frame(f2)) => Some(Merge {
                nodes: vec![],
                frame: Some(PauliFrame::compose(f2, f1)),
                msf: None,
            }),
            (Msf(m1), Msf(m2)) => Some(Merge {
                nodes: vec![],
                frame: None,
                msf: Some(crate::nodes::Msf::compose(m2, m1)),
            }),
            _ => None,
        }
    }
}

/// Result of a merge: `nodes...; frame; msf`.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub nodes: Vec<Node>,
    pub frame: Option<PauliFrame>,
    pub msf: Option<Msf>,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Rotation { pauli, theta } => write!(f, "R_{pauli}({theta})"),
            Node::Preparation { pz, px } => write!(f, "P({pz}|{px})"),
            Node::Measurement { pauli, cvar } => write!(f, "M_{cvar}({pauli})"),
            Node::Frame(fr) => write!(f, "{fr:?}"),
            Node::Msf(m) => write!(f, "{m}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Letter;

    fn p(s: &str, n: usize) -> Pauli {
        Pauli::parse_with_width(s, n).unwrap()
    }

    fn rot(s: &str, t: f64) -> Node {
        Node::rotation(p(s, 2), t).unwrap()
    }

    #[test]
    fn commutation_examples() {
        assert!(Node::commutes(&rot("X0", 0.3), &rot("X0Z1", 0.2)));
        let prep = Node::preparation(p("Z0", 2), p("X0", 2)).unwrap();
        let meas = Node::measurement(p("Z0", 2), Cvar(0)).unwrap();
        assert!(!Node::commutes(&prep, &meas));
        assert!(!Node::commutes(&Node::Msf(Msf::new()), &meas));
        assert!(Node::commutes(&Node::Msf(Msf::new()), &rot("Y1", 1.0)));
        assert!(!Node::commutes(&prep, &prep));
    }

    #[test]
    fn hadamard_pushes_z_to_x() {
        let h = PauliFrame::from_gate(&CliffordGate::H(0), 2).unwrap();
        assert_eq!(
            Node::push_through_frame(&h, &rot("Z0", 0.4)),
            rot("X0", 0.4)
        );
        let id = PauliFrame::identity(2);
        assert_eq!(
            Node::push_through_frame(&id, &rot("Y1", 0.4)),
            rot("Y1", 0.4)
        );
    }

    #[test]
    fn rotations_add() {
        let m = Node::try_merge(&rot("X0", 0.25), &rot("X0", 0.5)).unwrap();
        assert_eq!(m.nodes, vec![rot("X0", 0.75)]);
        let m = Node::try_merge(&rot("X0", 0.25), &rot("Z0", 0.5));
        assert!(m.is_none());
    }

    #[test]
    fn rotations_summing_to_clifford_become_frames() {
        let m = Node::try_merge(&rot("Z0", 0.5), &rot("Z0", FRAC_PI_2_MINUS_HALF)).unwrap();
        assert!(m.nodes.is_empty());
        assert_eq!(
            m.frame,
            Some(PauliFrame::from_gate(&CliffordGate::S(0), 2).unwrap())
        );
        let m = Node::try_merge(&rot("Z0", 0.5), &rot("Z0", -0.5)).unwrap();
        assert!(m.nodes.is_empty() && m.frame.is_none());
    }

    const FRAC_PI_2_MINUS_HALF: f64 = std::f64::consts::FRAC_PI_2 - 0.5;

    #[test]
    fn preparation_absorbs_rotation() {
        let prep = Node::preparation(p("Z1", 2), p("X1", 2)).unwrap();
        let m = Node::try_merge(&prep, &rot("Z1", 0.7)).unwrap();
        assert_eq!(m.nodes, vec![prep]);
    }

    #[test]
    fn negated_measurement_merge() {
        let a = Node::measurement(p("Z0", 1), Cvar(1)).unwrap();
        let b = Node::measurement(p("-Z0", 1), Cvar(2)).unwrap();
        let m = Node::try_merge(&a, &b).unwrap();
        assert_eq!(m.nodes, vec![a]);
        let mu = m.msf.unwrap();
        assert_eq!(mu.render(), vec!["c2 := c1 + 1".to_string()]);
    }

    #[test]
    fn msf_compose_and_apply() {
        let mut mu = Msf::new();
        let mut e = Affine::var(Cvar(2));
        e.add(&Affine::var(Cvar(3)));
        mu.assign(Cvar(0), Affine::var(Cvar(2)));
        mu.assign(Cvar(1), e);
        let ones: BTreeSet<Cvar> = [Cvar(2)].into_iter().collect();
        let out = mu.apply(&ones);
        assert!(out.contains(&Cvar(0)) && out.contains(&Cvar(1)));
        assert_eq!(Msf::compose(&mu, &Msf::new()), mu);
        assert_eq!(Msf::compose(&Msf::new(), &mu), mu);

        let inner = Msf::single(Cvar(5), Affine::var(Cvar(9)));
        let mut outer_e = Affine::var(Cvar(5));
        outer_e.constant = true;
        let outer = Msf::single(Cvar(6), outer_e);
        let c = Msf::compose(&outer, &inner);
        assert_eq!(c.render(), vec!["c5 := c9", "c6 := c9 + 1"]);
    }

    #[test]
    fn normalisation() {
        let r = Node::rotation_normalized(&p("-X0", 1), 0.3);
        assert_eq!(r.node, Some(Node::rotation(p("X0", 1), -0.3).unwrap()));
        let pr = Node::preparation(p("-Z0", 1), p("-X0", 1))
            .unwrap()
            .normalize();
        assert_eq!(
            pr.node,
            Some(Node::preparation(p("Z0", 1), p("X0", 1)).unwrap())
        );
        assert_eq!(
            pr.frame,
            Some(PauliFrame::from_gate(&CliffordGate::X(0), 1).unwrap())
        );
        assert!(
            Node::rotation_normalized(&Pauli::single(1, 0, Letter::Y), 4.0 * PI)
                .node
                .is_none()
        );
    }

    #[test]
    fn invalid_preparation_rejected() {
        assert!(Node::preparation(p("Z0", 2), p("Z1", 2)).is_err());
    }
}
