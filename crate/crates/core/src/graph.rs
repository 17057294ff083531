//! The node DAG, insertion with merging, and circuit compilation.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{lower_gate, Circuit, LowerError};
use crate::frame::PauliFrame;
use crate::nodes::{Cvar, Msf, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("node width {found} does not match graph width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Lower(#[from] LowerError),
}

/// DAG over rotation, preparation and measurement nodes with an edge
/// `a -> b` for every non-commuting pair where `a` comes first.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    n: usize,
    nodes: Vec<Option<Node>>,
    succ: Vec<BTreeSet<usize>>,
    pred: Vec<BTreeSet<usize>>,
    sinks: BTreeSet<usize>,
}

impl Graph {
    pub fn new(n: usize) -> Graph {
        Graph {
            n,
            ..Graph::default()
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Live node ids in ascending order.
    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_some())
            .map(|(i, _)| i)
    }

    pub fn node(&self, id: usize) -> Option<&Node> {
        self.nodes.get(id).and_then(|n| n.as_ref())
    }

    pub fn succ(&self, id: usize) -> &BTreeSet<usize> {
        &self.succ[id]
    }

    pub fn pred(&self, id: usize) -> &BTreeSet<usize> {
        &self.pred[id]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ids()
            .flat_map(move |a| self.succ[a].iter().map(move |&b| (a, b)))
    }

    /// Nodes with outdegree 0.
    pub fn end_set(&self) -> Vec<usize> {
        self.sinks.iter().copied().collect()
    }

    /// Nodes with indegree 0.
    pub fn begin_set(&self) -> Vec<usize> {
        self.ids().filter(|&i| self.pred[i].is_empty()).collect()
    }

    fn check_width(&self, n: &Node) -> Result<(), GraphError> {
        match n.n_qubits() {
            Some(k) if k != self.n => Err(GraphError::WidthMismatch {
                expected: self.n,
                found: k,
            }),
            _ => Ok(()),
        }
    }

    /// Removes a node and its edges.
    pub fn remove(&mut self, id: usize) -> Option<Node> {
        let node = self.nodes.get_mut(id)?.take()?;
        for p in std::mem::take(&mut self.pred[id]) {
            self.succ[p].remove(&id);
            if self.succ[p].is_empty() {
                self.sinks.insert(p);
            }
        }
        for s in std::mem::take(&mut self.succ[id]) {
            self.pred[s].remove(&id);
        }
        self.sinks.remove(&id);
        Some(node)
    }

    /// Appends a node without merging, adding an edge from every live node
    /// it does not commute with.
    pub fn insert_unmerged(&mut self, node: Node) -> usize {
        let id = self.nodes.len();
        let preds: BTreeSet<usize> = self
            .ids()
            .filter(|&i| !Node::commutes(self.nodes[i].as_ref().expect("live"), &node))
            .collect();
        for &p in &preds {
            self.succ[p].insert(id);
            self.sinks.remove(&p);
        }
        self.nodes.push(Some(node));
        self.succ.push(BTreeSet::new());
        self.pred.push(preds);
        self.sinks.insert(id);
        id
    }

    /// Appends `n` to the graph, merging with the lowest-id node it can be
    /// moved next to where a rule applies.
    /// Returns `(F, μ)` with `G; n ≡ G'; F; μ`.
    pub fn add_node(&mut self, n: Node) -> Result<(PauliFrame, Msf), GraphError> {
        self.check_width(&n)?;
        match n {
            Node::Frame(f) => return Ok((f, Msf::new())),
            Node::Msf(m) => return Ok((PauliFrame::identity(self.n), m)),
            _ => {}
        }
        let norm = n.normalize();
        let mut frame = PauliFrame::identity(self.n);
        let mut msf = Msf::new();
        if let Some(node) = norm.node {
            let (f, m) = self.insert_merging(node);
            frame = f;
            msf = m;
        }
        if let Some(f) = norm.frame {
            frame = PauliFrame::compose(&f, &frame);
        }
        Ok((frame, msf))
    }

    /// Whether `node` commutes with every descendant of `s`, so that it can
    /// be moved directly after `s`.
    fn can_slide(&self, s: usize, node: &Node) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for &j in &self.succ[i] {
                if seen.insert(j) {
                    if !Node::commutes(self.nodes[j].as_ref().expect("live"), node) {
                        return false;
                    }
                    stack.push(j);
                }
            }
        }
        true
    }

    fn insert_merging(&mut self, node: Node) -> (PauliFrame, Msf) {
        let partner = self.ids().find_map(|s| {
            let other = self.nodes[s].as_ref().expect("live");
            let m = Node::try_merge(other, &node).or_else(|| {
                Node::commutes(other, &node)
                    .then(|| Node::try_merge(&node, other))
                    .flatten()
            })?;
            (self.succ[s].is_empty() || self.can_slide(s, &node)).then_some((s, m))
        });
        let Some((s, merge)) = partner else {
            self.insert_unmerged(node);
            return (PauliFrame::identity(self.n), Msf::new());
        };
        if let [merged] = merge.nodes.as_slice() {
            let current = self.nodes[s].as_ref().expect("live");
            if merge.frame.is_none() && merge.msf.is_none() && same_shape(current, merged) {
                self.nodes[s] = Some(merged.clone());
                return (PauliFrame::identity(self.n), Msf::new());
            }
        }
        // Descendants of the partner are re-inserted after the merged result.
        let desc = self.descendants(s);
        let tail: Vec<Node> = self
            .topological_order()
            .into_iter()
            .filter(|i| desc.contains(i))
            .map(|i| self.nodes[i].clone().expect("live"))
            .collect();
        for &d in &desc {
            self.remove(d);
        }
        self.remove(s);
        let mut frame = PauliFrame::identity(self.n);
        let mut msf = Msf::new();
        for k in merge.nodes {
            let pushed = Node::push_through_frame(&frame, &k);
            let (f, m) = self.add_node(pushed).expect("merged node has graph width");
            frame = PauliFrame::compose(&frame, &f);
            msf = Msf::compose(&msf, &m);
        }
        if let Some(f) = merge.frame {
            frame = PauliFrame::compose(&f, &frame);
        }
        if let Some(m) = merge.msf {
            msf = Msf::compose(&m, &msf);
        }
        for k in tail {
            let pushed = Node::push_through_frame(&frame, &k);
            let (f, m) = self.add_node(pushed).expect("descendant has graph width");
            frame = PauliFrame::compose(&frame, &f);
            msf = Msf::compose(&msf, &m);
        }
        (frame, msf)
    }

    /// Kahn order, smallest available id first.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut indeg: BTreeMap<usize, usize> =
            self.ids().map(|i| (i, self.pred[i].len())).collect();
        let mut heap: BinaryHeap<Reverse<usize>> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&i, _)| Reverse(i))
            .collect();
        let mut out = Vec::with_capacity(indeg.len());
        while let Some(Reverse(i)) = heap.pop() {
            out.push(i);
            for &s in &self.succ[i] {
                let d = indeg.get_mut(&s).expect("live successor");
                *d -= 1;
                if *d == 0 {
                    heap.push(Reverse(s));
                }
            }
        }
        out
    }

    pub fn topological_term(&self) -> Vec<Node> {
        self.topological_order()
            .into_iter()
            .map(|i| self.nodes[i].clone().expect("live"))
            .collect()
    }

    /// Every live node reachable from `id`, excluding `id`.
    pub fn descendants(&self, id: usize) -> BTreeSet<usize> {
        self.reach(id, &self.succ)
    }

    pub fn ancestors(&self, id: usize) -> BTreeSet<usize> {
        self.reach(id, &self.pred)
    }

    fn reach(&self, id: usize, adj: &[BTreeSet<usize>]) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if seen.insert(j) {
                    stack.push(j);
                }
            }
        }
        seen
    }

    pub fn dump(&self) -> String {
        let mut s = String::new();
        for i in self.ids() {
            let _ = writeln!(s, "node {i}: {}", self.nodes[i].as_ref().expect("live"));
        }
        for (a, b) in self.edges() {
            let _ = writeln!(s, "edge {a} -> {b}");
        }
        s
    }

    /// Lists violated structural invariants.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut v = Vec::new();
        let ids: Vec<usize> = self.ids().collect();
        for &i in &ids {
            let node = self.nodes[i].as_ref().expect("live");
            if let Some(k) = node.n_qubits() {
                if k != self.n {
                    v.push(format!("node {i} has width {k}, graph has {}", self.n));
                }
            }
            if matches!(node, Node::Frame(_) | Node::Msf(_)) {
                v.push(format!(
                    "node {i} is a frame or classical map inside the graph"
                ));
            }
            if self.succ[i].is_empty() != self.sinks.contains(&i) {
                v.push(format!("sink cache wrong for node {i}"));
            }
            for &s in &self.succ[i] {
                if !self.pred[s].contains(&i) {
                    v.push(format!("edge {i} -> {s} missing reverse link"));
                }
            }
        }
        if self.topological_order().len() != ids.len() {
            v.push("graph has a cycle".into());
        }
        for (x, &a) in ids.iter().enumerate() {
            for &b in &ids[x + 1..] {
                let (na, nb) = (
                    self.nodes[a].as_ref().unwrap(),
                    self.nodes[b].as_ref().unwrap(),
                );
                let linked = self.succ[a].contains(&b) || self.succ[b].contains(&a);
                if Node::commutes(na, nb) == linked {
                    v.push(format!(
                        "edge presence between {a} and {b} disagrees with commutation"
                    ));
                }
                let mergeable =
                    Node::try_merge(na, nb).is_some() || Node::try_merge(nb, na).is_some();
                if mergeable
                    && !linked
                    && !self.descendants(a).contains(&b)
                    && !self.descendants(b).contains(&a)
                {
                    v.push(format!("unmerged pair {a}, {b}"));
                }
            }
        }
        v
    }
}

/// Same variant and same letters, hence the same edges and merge partners.
fn same_shape(a: &Node, b: &Node) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
        && a.paulis().len() == b.paulis().len()
        && a.paulis()
            .iter()
            .zip(b.paulis())
            .all(|(p, q)| p.same_letters(q))
}

/// A graph followed by its terminal frame and classical map.
#[derive(Debug, Clone)]
pub struct Program {
    pub graph: Graph,
    pub frame: PauliFrame,
    pub msf: Msf,
    pub n_qubits: usize,
    /// Variables `0..n_user_cvars` are the circuit's classical bits.
    pub n_user_cvars: u32,
    pub next_cvar: u32,
}

impl Program {
    pub fn new(n_qubits: usize, n_user_cvars: u32) -> Program {
        Program {
            graph: Graph::new(n_qubits),
            frame: PauliFrame::identity(n_qubits),
            msf: Msf::new(),
            n_qubits,
            n_user_cvars,
            next_cvar: n_user_cvars,
        }
    }

    pub fn fresh_cvar(&mut self) -> Cvar {
        let c = Cvar(self.next_cvar);
        self.next_cvar += 1;
        c
    }

    /// Appends a node to the term `G; F; μ`.
    pub fn append(&mut self, node: Node) -> Result<(), GraphError> {
        match node {
            Node::Frame(f) => {
                self.graph.check_width(&Node::Frame(f.clone()))?;
                self.frame = PauliFrame::compose(&f, &self.frame);
            }
            Node::Msf(m) => self.msf = Msf::compose(&m, &self.msf),
            Node::Measurement { pauli, cvar } => {
                let fresh = self.fresh_cvar();
                self.push_node(Node::Measurement { pauli, cvar: fresh })?;
                self.msf = Msf::compose(
                    &Msf::single(cvar, crate::nodes::Affine::var(fresh)),
                    &self.msf,
                );
            }
            other => self.push_node(other)?,
        }
        Ok(())
    }

    /// Pushes a quantum node through the frame and inserts it.
    pub fn push_node(&mut self, node: Node) -> Result<(), GraphError> {
        self.graph.check_width(&node)?;
        let pushed = Node::push_through_frame(&self.frame, &node);
        let (f, m) = self.graph.add_node(pushed)?;
        self.frame = PauliFrame::compose(&self.frame, &f);
        self.msf = Msf::compose(&self.msf, &m);
        Ok(())
    }

    /// Rebuilds a program from a term of nodes, keeping this program's
    /// classical variable numbering.
    pub fn rebuild(&self, term: Vec<Node>) -> Result<Program, GraphError> {
        let mut p = Program::new(self.n_qubits, self.n_user_cvars);
        p.next_cvar = self.next_cvar;
        for node in term {
            match node {
                Node::Frame(f) => p.frame = PauliFrame::compose(&f, &p.frame),
                Node::Msf(m) => p.msf = Msf::compose(&m, &p.msf),
                other => p.push_node(other)?,
            }
        }
        Ok(p)
    }

    /// `G` in topological order, then `F`, then `μ`.
    pub fn term(&self) -> Vec<Node> {
        let mut t = self.graph.topological_term();
        t.push(Node::Frame(self.frame.clone()));
        t.push(Node::Msf(self.msf.clone()));
        t
    }

    pub fn is_user_cvar(&self, c: Cvar) -> bool {
        c.0 < self.n_user_cvars
    }

    pub fn dump(&self) -> String {
        let mut s = self.graph.dump();
        for (j, (z, x)) in self.frame.rows().iter().enumerate() {
            let _ = writeln!(s, "frame {j}: Z -> {z}, X -> {x}");
        }
        for line in self.msf.render() {
            let _ = writeln!(s, "mu {line}");
        }
        s
    }

    pub fn check_invariants(&self) -> Vec<String> {
        let mut v = self.graph.check_invariants();
        if self.frame.n_qubits() != self.n_qubits {
            v.push("frame width differs from program width".into());
        }
        if !self.frame.is_wellformed() {
            v.push("terminal frame is not a valid Clifford frame".into());
        }
        v
    }
}

/// Compiles a circuit into `G; F; μ`.
pub fn circuit_to_graph(c: &Circuit) -> Result<Program, GraphError> {
    let mut p = Program::new(c.n_qubits, c.n_cbits as u32);
    for g in &c.gates {
        for node in lower_gate(g, c.n_qubits)? {
            p.append(node)?;
        }
    }
    p.msf = p.msf.compact();
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;

    fn p(s: &str, n: usize) -> Pauli {
        Pauli::parse_with_width(s, n).unwrap()
    }

    fn rot(s: &str, t: f64) -> Node {
        Node::rotation(p(s, 2), t).unwrap()
    }

    #[test]
    fn add_to_empty_graph() {
        let mut g = Graph::new(2);
        let (f, m) = g.add_node(rot("X0", 0.3)).unwrap();
        assert!(f.is_identity() && m.is_empty());
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn rotations_merge() {
        let mut g = Graph::new(2);
        g.add_node(rot("X0", 0.3)).unwrap();
        g.add_node(rot("X0", 0.2)).unwrap();
        assert_eq!(g.len(), 1);
        let id = g.ids().next().unwrap();
        match g.node(id).unwrap() {
            Node::Rotation { theta, .. } => assert!((theta - 0.5).abs() < 1e-12),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn measurements_merge_into_msf() {
        let mut g = Graph::new(1);
        g.add_node(Node::measurement(p("Z0", 1), Cvar(1)).unwrap())
            .unwrap();
        let (_, m) = g
            .add_node(Node::measurement(p("Z0", 1), Cvar(2)).unwrap())
            .unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(m.render(), vec!["c2 := c1"]);
    }

    #[test]
    fn edges_follow_commutation() {
        let mut g = Graph::new(2);
        g.add_node(rot("X0", 0.3)).unwrap();
        g.add_node(rot("Z1", 0.3)).unwrap();
        g.add_node(rot("Z0Z1", 0.3)).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 2)]);
        assert_eq!(g.begin_set(), vec![0, 1]);
        assert_eq!(g.end_set(), vec![1, 2]);
        assert_eq!(g.topological_order(), vec![0, 1, 2]);
        assert!(g.check_invariants().is_empty());
        assert_eq!(
            g.dump(),
            "node 0: R_X0(0.3)\nnode 1: R_Z1(0.3)\nnode 2: R_Z0Z1(0.3)\nedge 0 -> 2\n"
        );
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let mut g = Graph::new(3);
        assert!(matches!(
            g.add_node(rot("X0", 0.3)),
            Err(GraphError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn empty_circuit_compiles_to_empty_program() {
        let prog = circuit_to_graph(&Circuit::new(3, 2)).unwrap();
        assert!(prog.graph.is_empty());
        assert!(prog.frame.is_identity());
        assert!(prog.msf.is_empty());
    }

    #[test]
    fn clifford_circuit_folds_into_frame() {
        let c = Circuit::parse("qubits 2\nh q0\ncnot q0 q1\ns q1").unwrap();
        let prog = circuit_to_graph(&c).unwrap();
        assert!(prog.graph.is_empty());
        let mut f = PauliFrame::identity(2);
        for g in &c.gates {
            f = PauliFrame::compose(&g.clifford_frame(2).unwrap(), &f);
        }
        assert_eq!(prog.frame, f);
    }

    #[test]
    fn merged_unrelated_duplicates_are_flagged() {
        let mut g = Graph::new(2);
        g.insert_unmerged(rot("X0", 0.3));
        g.insert_unmerged(rot("X0", 0.3));
        assert!(g.check_invariants().iter().any(|v| v.contains("unmerged")));
    }

    #[test]
    fn random_insertions_stay_acyclic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut g = Graph::new(3);
        let letters = [
            crate::pauli::Letter::I,
            crate::pauli::Letter::X,
            crate::pauli::Letter::Y,
            crate::pauli::Letter::Z,
        ];
        for _ in 0..10_000 {
            let ls: Vec<_> = (0..3).map(|_| letters[rng.gen_range(0..4)]).collect();
            let q = Pauli::from_letters(&ls);
            if q.has_trivial_letters() {
                continue;
            }
            if g.len() > 40 {
                let victim = g.ids().nth(rng.gen_range(0..g.len())).unwrap();
                g.remove(victim);
            }
            g.add_node(Node::rotation(q, rng.gen_range(0.1..1.4)).unwrap())
                .unwrap();
        }
        assert_eq!(g.topological_order().len(), g.len());
    }
}
