//! Graph-level optimizations for the hold and release outcomes.

use std::collections::BTreeSet;

use crate::frame::PauliFrame;
use crate::graph::Program;
use crate::nodes::{Affine, Cvar, Msf, Node};
use crate::pauli::{Letter, Pauli};
use crate::pipeline::Outcome;
use crate::synth::factor_cost;

/// Sum of node Pauli weights.
fn total_weight(p: &Program) -> usize {
    p.graph
        .ids()
        .map(|i| {
            p.graph
                .node(i)
                .expect("live")
                .paulis()
                .iter()
                .map(|q| q.weight())
                .sum::<usize>()
        })
        .sum()
}

fn rebuild(p: &Program, mut term: Vec<Node>) -> Program {
    term.push(Node::Frame(p.frame.clone()));
    term.push(Node::Msf(p.msf.clone()));
    let mut out = p.rebuild(term).expect("term has program width");
    out.msf = out.msf.compact();
    out
}

/// Nodes in the order `anc(p) ∪ anc(n) \ desc(p)`, `p`, `desc(p) ∩ anc(n)`,
/// `n`, rest, with `n` replaced by `replacement`.
fn reorder_with(prog: &Program, p: usize, n: usize, replacement: Vec<Node>) -> Vec<Node> {
    let g = &prog.graph;
    let order = g.topological_order();
    let desc_p = g.descendants(p);
    let anc_n = g.ancestors(n);
    let anc_p = g.ancestors(p);
    let mut groups: [Vec<usize>; 3] = Default::default();
    for &i in &order {
        if i == p || i == n {
            continue;
        }
        if (anc_p.contains(&i) || anc_n.contains(&i)) && !desc_p.contains(&i) {
            groups[0].push(i);
        } else if desc_p.contains(&i) && anc_n.contains(&i) {
            groups[1].push(i);
        } else {
            groups[2].push(i);
        }
    }
    let node = |i: usize| g.node(i).expect("live").clone();
    let mut term: Vec<Node> = groups[0].iter().map(|&i| node(i)).collect();
    term.push(node(p));
    term.extend(groups[1].iter().map(|&i| node(i)));
    term.extend(replacement);
    term.extend(groups[2].iter().map(|&i| node(i)));
    term
}

/// Whether the stabilizer `s` of preparation `p` still holds just before `n`.
fn stabilizer_reaches(prog: &Program, p: usize, n: usize, s: &Pauli) -> bool {
    let g = &prog.graph;
    if g.ancestors(p).contains(&n) {
        return false;
    }
    let desc_p = g.descendants(p);
    g.ancestors(n)
        .iter()
        .filter(|i| desc_p.contains(i))
        .all(|&i| g.node(i).expect("live").commutes_with_pauli(s))
}

/// Multiplies rotation and measurement Paulis by in-scope preparation
/// stabilizers when that lowers their weight.
pub fn reduce_node_support(prog: &Program, log: &mut Vec<String>) -> Option<Program> {
    let mut cur = prog.clone();
    let mut changed = false;
    let mut rejected: BTreeSet<(usize, usize)> = BTreeSet::new();
    loop {
        let g = &cur.graph;
        let preps: Vec<(usize, Pauli)> = g
            .ids()
            .filter_map(|i| match g.node(i) {
                Some(Node::Preparation { pz, .. }) => Some((i, pz.clone())),
                _ => None,
            })
            .collect();
        if preps.is_empty() {
            break;
        }
        let found = 'search: {
            for n in g.ids() {
                let (pauli, rebuild_node): (&Pauli, Box<dyn Fn(Pauli) -> Node>) =
                    match g.node(n).expect("live") {
                        Node::Rotation { pauli, theta } => {
                            let t = *theta;
                            (
                                pauli,
                                Box::new(move |q| Node::Rotation { pauli: q, theta: t }),
                            )
                        }
                        Node::Measurement { pauli, cvar } => {
                            let c = *cvar;
                            (
                                pauli,
                                Box::new(move |q| Node::Measurement { pauli: q, cvar: c }),
                            )
                        }
                        _ => continue,
                    };
                for (p, s) in &preps {
                    if *p == n || rejected.contains(&(*p, n)) || !pauli.commutes(s) {
                        continue;
                    }
                    let reduced = pauli.mul(s);
                    if reduced.weight() >= pauli.weight() || !stabilizer_reaches(&cur, *p, n, s) {
                        continue;
                    }
                    let replacement = if reduced.has_trivial_letters() {
                        match g.node(n).expect("live") {
                            Node::Measurement { cvar, .. } => {
                                vec![Node::Msf(Msf::single(
                                    *cvar,
                                    Affine::constant(reduced.is_negative()),
                                ))]
                            }
                            _ => vec![],
                        }
                    } else {
                        vec![rebuild_node(reduced.clone())]
                    };
                    let next = rebuild(&cur, reorder_with(&cur, *p, n, replacement));
                    if total_weight(&next) < total_weight(&cur) {
                        log.push(format!(
                            "support: node {n} {} -> {} using stabilizer {s} of node {p}",
                            pauli, reduced
                        ));
                        break 'search Some(next);
                    }
                    rejected.insert((*p, n));
                }
            }
            None
        };
        match found {
            Some(next) => {
                cur = next;
                changed = true;
                rejected.clear();
            }
            None => break,
        }
    }
    changed.then_some(cur)
}

/// `V e V` for `V = ½(I + S + Q − SQ)` with commuting `S`, `Q`.
fn conjugate_v(e: &Pauli, s: &Pauli, q: &Pauli) -> Pauli {
    match (e.lambda(s), e.lambda(q)) {
        (false, false) => e.clone(),
        (false, true) => e.mul(s),
        (true, false) => e.mul(q),
        (true, true) => e.mul(s).mul(q).negate(),
    }
}

/// Sum of local-frame factor costs over the frame rows.
pub fn frame_cost(f: &PauliFrame) -> usize {
    f.rows().iter().map(|(z, x)| factor_cost(z, x)).sum()
}

/// Multiplies terminal-frame rows by stabilizers of trailing preparations
/// while the frame cost strictly decreases.
pub fn reduce_terminal_frame(prog: &Program, log: &mut Vec<String>) -> Option<Program> {
    let g = &prog.graph;
    let stabs: Vec<(usize, Pauli)> = g
        .end_set()
        .into_iter()
        .filter_map(|i| match g.node(i) {
            Some(Node::Preparation { pz, .. }) => Some((i, pz.clone())),
            _ => None,
        })
        .collect();
    if stabs.is_empty() {
        return None;
    }
    let n = prog.n_qubits;
    let mut frame = prog.frame.clone();
    let mut cost = frame_cost(&frame);
    let mut changed = false;
    loop {
        let mut best: Option<(usize, PauliFrame, String)> = None;
        for (id, s) in &stabs {
            for q in 0..n {
                for l in Letter::NON_IDENTITY {
                    let qp = Pauli::single(n, q, l);
                    if !qp.commutes(s) || qp.same_letters(s) {
                        continue;
                    }
                    let rows = frame
                        .rows()
                        .iter()
                        .map(|(z, x)| (conjugate_v(z, s, &qp), conjugate_v(x, s, &qp)))
                        .collect();
                    let cand = PauliFrame::from_rows(rows).expect("Clifford image of a frame");
                    let c = frame_cost(&cand);
                    if c < best.as_ref().map_or(cost, |b| b.0) {
                        best = Some((
                            c,
                            cand,
                            format!("frame: stabilizer {s} of node {id} with {qp}"),
                        ));
                    }
                }
            }
        }
        let Some((c, f, msg)) = best else { break };
        log.push(format!("{msg}, cost {cost} -> {c}"));
        frame = f;
        cost = c;
        changed = true;
    }
    changed.then(|| {
        let mut out = prog.clone();
        out.frame = frame;
        out
    })
}

/// Drops the terminal frame and every trailing non-measurement node.
pub fn release_prune(prog: &Program, log: &mut Vec<String>) -> Option<Program> {
    let mut out = prog.clone();
    let mut changed = false;
    if !out.frame.is_identity() {
        out.frame = PauliFrame::identity(out.n_qubits);
        log.push("prune: terminal frame dropped".into());
        changed = true;
    }
    loop {
        let victims: Vec<usize> = out
            .graph
            .end_set()
            .into_iter()
            .filter(|&i| !out.graph.node(i).expect("live").is_measurement())
            .collect();
        if victims.is_empty() {
            break;
        }
        for v in victims {
            let node = out.graph.remove(v).expect("live");
            log.push(format!("prune: node {v} {node}"));
        }
        changed = true;
    }
    changed.then_some(out)
}

/// Outcome of eliminating a commuting measurement set.
#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    /// Generator measurements `(pauli, cvar)`, possibly with reduced Paulis.
    pub generators: Vec<(Pauli, Cvar)>,
    /// Classical map recovering every original variable from the generators.
    pub msf: Msf,
}

fn pivot_of(p: &Pauli) -> Option<(usize, bool)> {
    let q = *p.support().first()?;
    Some((q, p.z_bit(q)))
}

fn has_bit(p: &Pauli, (q, z): (usize, bool)) -> bool {
    if z {
        p.z_bit(q)
    } else {
        p.x_bit(q)
    }
}

/// Splits mutually commuting measurements into independent generators and
/// dependents, then greedily lowers generator weights by pairwise products.
pub fn eliminate_measurements(meas: &[(Pauli, Cvar)]) -> Elimination {
    let mut pivots: Vec<((usize, bool), Pauli, BTreeSet<usize>)> = Vec::new();
    let mut generators: Vec<(Pauli, Cvar)> = Vec::new();
    let mut dependents = Msf::new();
    for (k, (p, c)) in meas.iter().enumerate() {
        let mut r = p.clone();
        let mut combo: BTreeSet<usize> = BTreeSet::new();
        for (pos, rp, rc) in &pivots {
            if has_bit(&r, *pos) {
                r = r.mul(rp);
                combo = combo.symmetric_difference(rc).copied().collect();
            }
        }
        match pivot_of(&r) {
            Some(pos) => {
                combo.insert(k);
                pivots.push((pos, r, combo));
                generators.push((p.clone(), *c));
            }
            None => {
                let mut e = Affine::constant(r.is_negative());
                for &j in &combo {
                    e.add(&Affine::var(meas[j].1));
                }
                dependents.assign(*c, e);
            }
        }
    }
    // Pairwise weight reduction: measuring P_g P_h instead of P_g gives c_g ⊕ c_h.
    let mut steps = Msf::new();
    loop {
        let mut best: Option<(usize, usize, usize, Pauli)> = None;
        for g in 0..generators.len() {
            for h in 0..generators.len() {
                if g == h {
                    continue;
                }
                let prod = generators[g].0.mul(&generators[h].0);
                let gain = generators[g].0.weight().saturating_sub(prod.weight());
                if gain > 0 && best.as_ref().is_none_or(|b| gain > b.2) {
                    best = Some((g, h, gain, prod));
                }
            }
        }
        let Some((g, h, _, prod)) = best else { break };
        let (cg, ch) = (generators[g].1, generators[h].1);
        let mut e = Affine::var(cg);
        e.add(&Affine::var(ch));
        steps = Msf::compose(&steps, &Msf::single(cg, e));
        generators[g].0 = prod;
    }
    Elimination {
        generators,
        msf: Msf::compose(&dependents, &steps),
    }
}

/// Replaces the trailing commuting measurements by an equivalent,
/// no larger generating set plus a classical map.
pub fn release_measurement_reduction(prog: &Program, log: &mut Vec<String>) -> Option<Program> {
    let g = &prog.graph;
    let sinks: BTreeSet<usize> = g
        .end_set()
        .into_iter()
        .filter(|&i| g.node(i).expect("live").is_measurement())
        .collect();
    let meas: Vec<(Pauli, Cvar)> = sinks
        .iter()
        .map(|&i| match g.node(i) {
            Some(Node::Measurement { pauli, cvar }) => (pauli.clone(), *cvar),
            _ => unreachable!("filtered to measurements"),
        })
        .collect();
    let elim = eliminate_measurements(&meas);
    let unchanged = elim.generators == meas;
    if unchanged {
        return None;
    }
    let before: usize = meas.iter().map(|m| m.0.weight()).sum();
    let after: usize = elim.generators.iter().map(|m| m.0.weight()).sum();
    log.push(format!(
        "measurements: {} of weight {before} -> {} of weight {after}",
        meas.len(),
        elim.generators.len()
    ));
    let mut term: Vec<Node> = g
        .topological_order()
        .into_iter()
        .filter(|i| !sinks.contains(i))
        .map(|i| g.node(i).expect("live").clone())
        .collect();
    term.extend(
        elim.generators
            .into_iter()
            .map(|(pauli, cvar)| Node::Measurement { pauli, cvar }),
    );
    term.push(Node::Msf(elim.msf));
    Some(rebuild(prog, term))
}

fn fingerprint(p: &Program) -> String {
    p.dump()
}

/// Runs the pass pipeline for the requested outcome to a fixpoint.
pub fn optimize(prog: &Program, outcome: Outcome, log: &mut Vec<String>) -> Program {
    let mut cur = prog.clone();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    loop {
        let mut changed = false;
        let mut step = |next: Option<Program>, cur: &mut Program| {
            if let Some(p) = next {
                *cur = p;
                changed = true;
            }
        };
        step(reduce_node_support(&cur, log), &mut cur);
        match outcome {
            Outcome::Hold => step(reduce_terminal_frame(&cur, log), &mut cur),
            Outcome::Release => {
                step(release_prune(&cur, log), &mut cur);
                step(release_measurement_reduction(&cur, log), &mut cur);
            }
        }
        if !changed || !seen.insert(fingerprint(&cur)) {
            break;
        }
    }
    cur
}
