//! Circuit IR, the line-based text format, lowering to nodes, and metrics.
//!
//! ```text
//! qubits 2
//! cbits 2
//! prepz q0
//! rx(pi/4) q0
//! cnot q0 q1
//! tqe(z,x) q1 q0
//! measz q0 -> c0
//! ```

use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::frame::{CliffordGate, PauliFrame};
use crate::nodes::{Cvar, Node};
use crate::pauli::{Letter, Pauli, MAX_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    PrepZ(usize),
    PrepX(usize),
    MeasZ(usize, Cvar),
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    T(usize),
    Tdg(usize),
    RX(usize, f64),
    RY(usize, f64),
    RZ(usize, f64),
    /// Rotation by θ about the axis `cos φ X + sin φ Y`.
    RXY(usize, f64, f64),
    CNOT(usize, usize),
    CZ(usize, usize),
    SWAP(usize, usize),
    TQE(Letter, Letter, usize, usize),
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::PrepZ(_) => "prepz",
            Gate::PrepX(_) => "prepx",
            Gate::MeasZ(..) => "measz",
            Gate::H(_) => "h",
            Gate::S(_) => "s",
            Gate::Sdg(_) => "sdg",
            Gate::X(_) => "x",
            Gate::Y(_) => "y",
            Gate::Z(_) => "z",
            Gate::T(_) => "t",
            Gate::Tdg(_) => "tdg",
            Gate::RX(..) => "rx",
            Gate::RY(..) => "ry",
            Gate::RZ(..) => "rz",
            Gate::RXY(..) => "rxy",
            Gate::CNOT(..) => "cnot",
            Gate::CZ(..) => "cz",
            Gate::SWAP(..) => "swap",
            Gate::TQE(..) => "tqe",
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::PrepZ(q)
            | Gate::PrepX(q)
            | Gate::MeasZ(q, _)
            | Gate::H(q)
            | Gate::S(q)
            | Gate::Sdg(q)
            | Gate::X(q)
            | Gate::Y(q)
            | Gate::Z(q)
            | Gate::T(q)
            | Gate::Tdg(q)
            | Gate::RX(q, _)
            | Gate::RY(q, _)
            | Gate::RZ(q, _)
            | Gate::RXY(q, _, _) => vec![q],
            Gate::CNOT(a, b) | Gate::CZ(a, b) | Gate::SWAP(a, b) | Gate::TQE(_, _, a, b) => {
                vec![a, b]
            }
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits().len() == 2
    }

    pub fn angles(&self) -> Vec<f64> {
        match *self {
            Gate::RX(_, t) | Gate::RY(_, t) | Gate::RZ(_, t) => vec![t],
            Gate::RXY(_, t, p) => vec![t, p],
            _ => vec![],
        }
    }

    /// Frame of the gate when it is Clifford.
    pub fn clifford_frame(&self, n: usize) -> Option<PauliFrame> {
        let nodes = lower_gate(self, n).ok()?;
        let mut f = PauliFrame::identity(n);
        for node in nodes {
            match node {
                Node::Frame(g) => f = PauliFrame::compose(&g, &f),
                _ => return None,
            }
        }
        Some(f)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub n_qubits: usize,
    pub n_cbits: usize,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Metrics {
    pub total_gates: usize,
    pub two_qubit_gates: usize,
    pub depth: usize,
    pub measurements: usize,
    pub preparations: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_cbits: usize) -> Circuit {
        Circuit {
            n_qubits,
            n_cbits,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, g: Gate) -> &mut Circuit {
        self.gates.push(g);
        self
    }

    pub fn metrics(&self) -> Metrics {
        let mut frontier = vec![0usize; self.n_qubits];
        let mut m = Metrics::default();
        for g in &self.gates {
            let qs = g.qubits();
            let start = qs.iter().map(|&q| frontier[q]).max().unwrap_or(0);
            for &q in &qs {
                frontier[q] = start + 1;
            }
            m.total_gates += 1;
            m.two_qubit_gates += usize::from(qs.len() == 2);
            m.measurements += usize::from(matches!(g, Gate::MeasZ(..)));
            m.preparations += usize::from(matches!(g, Gate::PrepZ(_) | Gate::PrepX(_)));
        }
        m.depth = frontier.into_iter().max().unwrap_or(0);
        m
    }

    pub fn parse(text: &str) -> Result<Circuit, ParseError> {
        Parser::default().run(text)
    }

    pub fn emit(&self) -> String {
        let mut out = String::new();
        writeln!(out, "qubits {}", self.n_qubits).unwrap();
        writeln!(out, "cbits {}", self.n_cbits).unwrap();
        for g in &self.gates {
            writeln!(out, "{g}").unwrap();
        }
        out
    }
}

fn fmt_angle(a: f64) -> String {
    format!("{a:.16e}")
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        if let Gate::TQE(a, b, ..) = self {
            write!(
                f,
                "({},{})",
                a.to_char().to_ascii_lowercase(),
                b.to_char().to_ascii_lowercase()
            )?;
        }
        let angles = self.angles();
        if !angles.is_empty() {
            let a: Vec<String> = angles.into_iter().map(fmt_angle).collect();
            write!(f, "({})", a.join(","))?;
        }
        for q in self.qubits() {
            write!(f, " q{q}")?;
        }
        if let Gate::MeasZ(_, c) = self {
            write!(f, " -> {c}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.emit())
    }
}

#[derive(Default)]
struct Parser {
    n_qubits: Option<usize>,
    n_cbits: Option<usize>,
    gates: Vec<Gate>,
}

struct Cursor<'a> {
    line: usize,
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.pos + 1,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text.as_bytes()[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn word(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len()
            && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.text[start..self.pos])
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() {
            let c = bytes[self.pos];
            let exp_sign = (c == b'-' || c == b'+')
                && self.pos > start
                && matches!(bytes[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.text[start..self.pos].parse().map_err(|_| ParseError {
            line: self.line,
            col: start + 1,
            msg: "bad number".into(),
        })
    }

    fn angle_expr(&mut self) -> Result<f64, ParseError> {
        let mut v = self.angle_term()?;
        loop {
            if self.eat('+') {
                v += self.angle_term()?;
            } else if self.eat('-') {
                v -= self.angle_term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn angle_term(&mut self) -> Result<f64, ParseError> {
        let mut v = self.angle_factor()?;
        loop {
            if self.eat('*') {
                v *= self.angle_factor()?;
            } else if self.eat('/') {
                v /= self.angle_factor()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn angle_factor(&mut self) -> Result<f64, ParseError> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.angle_factor()?)
            }
            Some('+') => {
                self.pos += 1;
                self.angle_factor()
            }
            Some('(') => {
                self.pos += 1;
                let v = self.angle_expr()?;
                self.expect(')')?;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(_) => {
                let save = self.pos;
                match self.word() {
                    Some(w) if w.eq_ignore_ascii_case("pi") => Ok(std::f64::consts::PI),
                    _ => {
                        self.pos = save;
                        Err(self.err("expected an angle"))
                    }
                }
            }
            None => Err(self.err("expected an angle")),
        }
    }

    fn indexed(&mut self, prefix: char, what: &str) -> Result<usize, ParseError> {
        let save = self.pos;
        let w = self
            .word()
            .ok_or_else(|| self.err(format!("expected a {what}")))?;
        let rest = w
            .strip_prefix(prefix)
            .or_else(|| w.strip_prefix(prefix.to_ascii_uppercase()));
        match rest.and_then(|r| r.parse::<usize>().ok()) {
            Some(i) => Ok(i),
            None => {
                self.pos = save;
                Err(self.err(format!("expected a {what} like {prefix}0")))
            }
        }
    }
}

impl Parser {
    fn run(mut self, text: &str) -> Result<Circuit, ParseError> {
        for (k, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("");
            let mut cur = Cursor {
                line: k + 1,
                text: body,
                pos: 0,
            };
            if cur.at_end() {
                continue;
            }
            self.statement(&mut cur)?;
            if !cur.at_end() {
                return Err(cur.err("unexpected trailing input"));
            }
        }
        let n_qubits = self.n_qubits.ok_or(ParseError {
            line: 1,
            col: 1,
            msg: "missing 'qubits' header".into(),
        })?;
        Ok(Circuit {
            n_qubits,
            n_cbits: self.n_cbits.unwrap_or(0),
            gates: self.gates,
        })
    }

    fn statement(&mut self, cur: &mut Cursor) -> Result<(), ParseError> {
        let name_pos = {
            cur.skip_ws();
            cur.pos
        };
        let name = cur
            .word()
            .ok_or_else(|| cur.err("expected a statement"))?
            .to_ascii_lowercase();
        match name.as_str() {
            "qubits" | "cbits" => {
                if !self.gates.is_empty() {
                    return Err(cur.err("headers must precede gates"));
                }
                let v = cur.number()?;
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(cur.err("expected a non-negative integer"));
                }
                let v = v as usize;
                if name == "qubits" {
                    if v > MAX_QUBITS {
                        return Err(cur.err(format!("at most {MAX_QUBITS} qubits supported")));
                    }
                    self.n_qubits = Some(v);
                } else {
                    self.n_cbits = Some(v);
                }
                return Ok(());
            }
            _ => {}
        }
        let n = self
            .n_qubits
            .ok_or_else(|| cur.err("'qubits' header must come first"))?;
        let mut angles = Vec::new();
        let mut letters = Vec::new();
        if cur.eat('(') {
            loop {
                if name == "tqe" {
                    let save = cur.pos;
                    let w = cur
                        .word()
                        .ok_or_else(|| cur.err("expected a Pauli letter"))?;
                    let l = (w.len() == 1)
                        .then(|| Letter::from_char(w.chars().next().unwrap()))
                        .flatten()
                        .filter(|l| *l != Letter::I);
                    match l {
                        Some(l) => letters.push(l),
                        None => {
                            cur.pos = save;
                            return Err(cur.err("expected x, y or z"));
                        }
                    }
                } else {
                    let a = cur.angle_expr()?;
                    if !a.is_finite() {
                        return Err(cur.err("angle is not finite"));
                    }
                    angles.push(a);
                }
                if !cur.eat(',') {
                    break;
                }
            }
            cur.expect(')')?;
        }
        let mut qubits = Vec::new();
        while matches!(cur.peek(), Some('q') | Some('Q')) {
            let save = cur.pos;
            let q = cur.indexed('q', "qubit")?;
            if q >= n {
                cur.pos = save;
                return Err(cur.err(format!("qubit q{q} out of range (qubits {n})")));
            }
            qubits.push(q);
        }
        let mut cvar = None;
        if cur.eat('-') {
            cur.expect('>')?;
            let save = cur.pos;
            let c = cur.indexed('c', "classical bit")?;
            if c >= self.n_cbits.unwrap_or(0) {
                cur.pos = save;
                return Err(cur.err(format!("classical bit c{c} not declared")));
            }
            cvar = Some(Cvar(c as u32));
        }
        let arity = |k: usize, a: usize| -> Result<(), ParseError> {
            if qubits.len() != k || angles.len() != a {
                Err(ParseError {
                    line: cur.line,
                    col: name_pos + 1,
                    msg: format!("'{name}' takes {k} qubit(s) and {a} angle(s)"),
                })
            } else {
                Ok(())
            }
        };
        let single = |f: fn(usize) -> Gate| -> Result<Gate, ParseError> {
            arity(1, 0)?;
            Ok(f(qubits[0]))
        };
        let gate = match name.as_str() {
            "prepz" => single(Gate::PrepZ)?,
            "prepx" => single(Gate::PrepX)?,
            "h" => single(Gate::H)?,
            "s" => single(Gate::S)?,
            "sdg" => single(Gate::Sdg)?,
            "x" => single(Gate::X)?,
            "y" => single(Gate::Y)?,
            "z" => single(Gate::Z)?,
            "t" => single(Gate::T)?,
            "tdg" => single(Gate::Tdg)?,
            "measz" => {
                arity(1, 0)?;
                let c = cvar.ok_or_else(|| cur.err("measz needs '-> c<k>'"))?;
                Gate::MeasZ(qubits[0], c)
            }
            "rx" | "ry" | "rz" => {
                arity(1, 1)?;
                match name.as_str() {
                    "rx" => Gate::RX(qubits[0], angles[0]),
                    "ry" => Gate::RY(qubits[0], angles[0]),
                    _ => Gate::RZ(qubits[0], angles[0]),
                }
            }
            "rxy" => {
                arity(1, 2)?;
                Gate::RXY(qubits[0], angles[0], angles[1])
            }
            "cnot" | "cx" | "cz" | "swap" | "tqe" => {
                arity(2, 0)?;
                let (a, b) = (qubits[0], qubits[1]);
                if a == b {
                    return Err(cur.err("two-qubit gate needs distinct qubits"));
                }
                match name.as_str() {
                    "cnot" | "cx" => Gate::CNOT(a, b),
                    "cz" => Gate::CZ(a, b),
                    "swap" => Gate::SWAP(a, b),
                    _ => {
                        if letters.len() != 2 {
                            return Err(cur.err("tqe takes two basis letters"));
                        }
                        Gate::TQE(letters[0], letters[1], a, b)
                    }
                }
            }
            other => {
                return Err(ParseError {
                    line: cur.line,
                    col: name_pos + 1,
                    msg: format!("unknown gate '{other}'"),
                })
            }
        };
        if cvar.is_some() && !matches!(gate, Gate::MeasZ(..)) {
            return Err(cur.err("only measz writes a classical bit"));
        }
        if name != "tqe" && !letters.is_empty() {
            return Err(cur.err("unexpected basis letters"));
        }
        self.gates.push(gate);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LowerError {
    #[error("gate {0} addresses a qubit outside the register")]
    OutOfRange(String),
}

fn frame_node(g: CliffordGate, n: usize, gate: &Gate) -> Result<Node, LowerError> {
    PauliFrame::from_gate(&g, n)
        .map(Node::Frame)
        .map_err(|_| LowerError::OutOfRange(gate.to_string()))
}

fn rot_node(q: usize, l: Letter, theta: f64, n: usize) -> Node {
    let norm = Node::rotation_normalized(&Pauli::single(n, q, l), theta);
    match (norm.node, norm.frame) {
        (Some(node), _) => node,
        (None, Some(f)) => Node::Frame(f),
        (None, None) => Node::Frame(PauliFrame::identity(n)),
    }
}

/// Lowers one gate on an `n`-qubit register to nodes in time order.
pub fn lower_gate(g: &Gate, n: usize) -> Result<Vec<Node>, LowerError> {
    if g.qubits().iter().any(|&q| q >= n) {
        return Err(LowerError::OutOfRange(g.to_string()));
    }
    use Letter::*;
    let sp = |q: usize, l: Letter| Pauli::single(n, q, l);
    Ok(match *g {
        Gate::PrepZ(q) => vec![Node::Preparation {
            pz: sp(q, Z),
            px: sp(q, X),
        }],
        Gate::PrepX(q) => vec![Node::Preparation {
            pz: sp(q, X),
            px: sp(q, Z),
        }],
        Gate::MeasZ(q, c) => vec![Node::Measurement {
            pauli: sp(q, Z),
            cvar: c,
        }],
        Gate::H(q) => vec![frame_node(CliffordGate::H(q), n, g)?],
        Gate::S(q) => vec![frame_node(CliffordGate::S(q), n, g)?],
        Gate::Sdg(q) => vec![frame_node(CliffordGate::Sdg(q), n, g)?],
        Gate::X(q) => vec![frame_node(CliffordGate::X(q), n, g)?],
        Gate::Y(q) => vec![frame_node(CliffordGate::Y(q), n, g)?],
        Gate::Z(q) => vec![frame_node(CliffordGate::Z(q), n, g)?],
        Gate::T(q) => vec![rot_node(q, Z, std::f64::consts::FRAC_PI_4, n)],
        Gate::Tdg(q) => vec![rot_node(q, Z, -std::f64::consts::FRAC_PI_4, n)],
        Gate::RX(q, t) => vec![rot_node(q, X, t, n)],
        Gate::RY(q, t) => vec![rot_node(q, Y, t, n)],
        Gate::RZ(q, t) => vec![rot_node(q, Z, t, n)],
        Gate::RXY(q, t, phi) => vec![
            rot_node(q, Z, -phi, n),
            rot_node(q, X, t, n),
            rot_node(q, Z, phi, n),
        ],
        Gate::CNOT(a, b) => vec![frame_node(CliffordGate::Cnot(a, b), n, g)?],
        Gate::CZ(a, b) => vec![frame_node(CliffordGate::Cz(a, b), n, g)?],
        Gate::SWAP(a, b) => vec![frame_node(CliffordGate::Swap(a, b), n, g)?],
        Gate::TQE(s1, s2, a, b) => vec![frame_node(CliffordGate::Tqe(s1, s2, a, b), n, g)?],
    })
}
