//! Closed-form scalar fields: a small expression language with exact
//! second-order forward differentiation.
//!
//! Grammar (usual precedence, `^` binds tighter than unary minus and is
//! right-associative):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?
//! primary := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Exponents must reduce to a constant rational, e.g. `x^2`, `x^(1/3)`,
//! `x^(-3/2)`. Functions: `sin`, `cos`, `exp`, `log` (alias `ln`), `sqrt`.
//! The identifier `pi` is a constant unless declared as a variable.

// Unused when std is linked, since std provides the same methods inherently.
#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Largest number of variables a jet carries.
pub const MAX_VARS: usize = 3;

const HESS_LEN: usize = MAX_VARS * (MAX_VARS + 1) / 2;

#[inline]
const fn hidx(i: usize, j: usize) -> usize {
    // Packed upper triangle, row-major: (0,0) (0,1) (0,2) (1,1) (1,2) (2,2).
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * MAX_VARS - i * (i + 1) / 2 + j
}

/// Value, gradient and Hessian of a scalar field at one point.
///
/// The Hessian is stored as a packed upper triangle, so it is symmetric by
/// construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub dim: usize,
    pub value: f64,
    pub grad: [f64; MAX_VARS],
    hess: [f64; HESS_LEN],
}

impl Jet2 {
    pub fn constant(dim: usize, c: f64) -> Self {
        Self { dim, value: c, grad: [0.0; MAX_VARS], hess: [0.0; HESS_LEN] }
    }

    pub fn variable(dim: usize, index: usize, x: f64) -> Self {
        let mut j = Self::constant(dim, x);
        j.grad[index] = 1.0;
        j
    }

    /// Hessian entry `(i, j)`.
    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[hidx(i, j)]
    }

    pub fn set_hess(&mut self, i: usize, j: usize, v: f64) {
        self.hess[hidx(i, j)] = v;
    }

    /// Full Hessian as a dense matrix (entries beyond `dim` are zero).
    pub fn hessian(&self) -> [[f64; MAX_VARS]; MAX_VARS] {
        let mut h = [[0.0; MAX_VARS]; MAX_VARS];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.hess(i, j);
            }
        }
        h
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = *self;
        r.value += o.value;
        for k in 0..MAX_VARS {
            r.grad[k] += o.grad[k];
        }
        for k in 0..HESS_LEN {
            r.hess[k] += o.hess[k];
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut r = *self;
        r.value -= o.value;
        for k in 0..MAX_VARS {
            r.grad[k] -= o.grad[k];
        }
        for k in 0..HESS_LEN {
            r.hess[k] -= o.hess[k];
        }
        r
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut r = *self;
        r.value *= a;
        for g in r.grad.iter_mut() {
            *g *= a;
        }
        for h in r.hess.iter_mut() {
            *h *= a;
        }
        r
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::constant(self.dim, self.value * o.value);
        for k in 0..MAX_VARS {
            r.grad[k] = self.grad[k] * o.value + self.value * o.grad[k];
        }
        for i in 0..MAX_VARS {
            for j in i..MAX_VARS {
                let h = self.hess(i, j) * o.value
                    + self.value * o.hess(i, j)
                    + self.grad[i] * o.grad[j]
                    + self.grad[j] * o.grad[i];
                r.set_hess(i, j, h);
            }
        }
        r
    }

    /// Composition `g(self)` given `g`, `g'` and `g''` at `self.value`.
    pub fn chain(&self, g0: f64, g1: f64, g2: f64) -> Self {
        let mut r = Self::constant(self.dim, g0);
        for k in 0..MAX_VARS {
            r.grad[k] = g1 * self.grad[k];
        }
        for i in 0..MAX_VARS {
            for j in i..MAX_VARS {
                r.set_hess(i, j, g1 * self.hess(i, j) + g2 * self.grad[i] * self.grad[j]);
            }
        }
        r
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn div(&self, o: &Self) -> Self {
        self.mul(&o.recip())
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn powr(&self, q: Rational) -> Self {
        let v = self.value;
        let p = q.to_f64();
        if q.den == 1 {
            let n = q.num as i32;
            let g0 = v.powi(n);
            let g1 = if n == 0 { 0.0 } else { p * v.powi(n - 1) };
            let g2 = if n == 0 || n == 1 { 0.0 } else { p * (p - 1.0) * v.powi(n - 2) };
            return self.chain(g0, g1, g2);
        }
        let g0 = rational_pow(v, q);
        // g' = p v^(p-1) = p g0 / v; written this way so it stays exact-ish for v != 0.
        let g1 = p * g0 / v;
        let g2 = (p - 1.0) * g1 / v;
        self.chain(g0, g1, g2)
    }
}

fn rational_pow(v: f64, q: Rational) -> f64 {
    let p = q.to_f64();
    if v < 0.0 && q.den % 2 == 1 {
        let m = (-v).powf(p);
        if q.num % 2 == 0 {
            m
        } else {
            -m
        }
    } else {
        v.powf(p)
    }
}

/// Reduced fraction `num/den` with `den > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let g = if g == 0 { 1 } else { g };
        let s = if den < 0 { -1 } else { 1 };
        Some(Self { num: s * num / g, den: s * den / g })
    }

    pub fn integer(n: i64) -> Self {
        Self { num: n, den: 1 }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn from_i128(num: i128, den: i128) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd128(num.unsigned_abs(), den.unsigned_abs()) as i128;
        let g = if g == 0 { 1 } else { g };
        let s = if den < 0 { -1 } else { 1 };
        let (n, d) = (s * num / g, s * den / g);
        Some(Self { num: i64::try_from(n).ok()?, den: i64::try_from(d).ok()? })
    }

    fn add(self, o: Self) -> Option<Self> {
        Self::from_i128(
            self.num as i128 * o.den as i128 + o.num as i128 * self.den as i128,
            self.den as i128 * o.den as i128,
        )
    }

    fn mul(self, o: Self) -> Option<Self> {
        Self::from_i128(self.num as i128 * o.num as i128, self.den as i128 * o.den as i128)
    }

    fn div(self, o: Self) -> Option<Self> {
        Self::from_i128(self.num as i128 * o.den as i128, self.den as i128 * o.num as i128)
    }

    fn neg(self) -> Self {
        Self { num: -self.num, den: self.den }
    }

    fn powi(self, e: i64) -> Option<Self> {
        let mut acc = Self::integer(1);
        let base = if e < 0 { Self::integer(1).div(self)? } else { self };
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(base)?;
        }
        Some(acc)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn gcd128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.den, self.num < 0) {
            (1, false) => write!(f, "{}", self.num),
            (1, true) => write!(f, "({})", self.num),
            _ => write!(f, "({}/{})", self.num, self.den),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }
}

/// One arena node. Children always precede their parent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, Rational),
    Func(Func, usize),
}

impl Node {
    fn op_name(&self) -> &'static str {
        match self {
            Node::Const(_) => "const",
            Node::Var(_) => "var",
            Node::Neg(_) => "neg",
            Node::Add(..) => "add",
            Node::Sub(..) => "sub",
            Node::Mul(..) => "mul",
            Node::Div(..) => "div",
            Node::Pow(..) => "pow",
            Node::Func(f, _) => f.name(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("too many variables: {0} (at most 3)")]
    TooManyVariables(usize),
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                Some(*offset)
            }
            ParseError::TooManyVariables(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("domain violation at node {node} ({op}): argument {argument}")]
    Domain { node: usize, op: &'static str, argument: f64 },
}

/// Parsed scalar field over a declared list of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    vars: Vec<String>,
    nodes: Vec<Node>,
}

impl Expr {
    pub fn parse(text: &str, variables: &[&str]) -> Result<Self, ParseError> {
        if variables.len() > MAX_VARS {
            return Err(ParseError::TooManyVariables(variables.len()));
        }
        let tokens = tokenize(text)?;
        let mut p = Parser {
            tokens: &tokens,
            pos: 0,
            vars: variables,
            nodes: Vec::new(),
            end: text.len(),
        };
        p.expr()?;
        if let Some(t) = p.peek() {
            return Err(ParseError::Syntax {
                offset: t.offset,
                message: alloc::format!("unexpected {}", t.kind.describe()),
            });
        }
        Ok(Self { vars: variables.iter().map(|s| s.to_string()).collect(), nodes: p.nodes })
    }

    /// Constant field.
    pub fn constant(value: f64, variables: &[&str]) -> Self {
        Self {
            vars: variables.iter().map(|s| s.to_string()).collect(),
            nodes: vec![Node::Const(value)],
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    /// True when the root is a literal constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self.nodes.as_slice() {
            [Node::Const(c)] => Some(*c),
            _ => None,
        }
    }

    /// `a * self + other`, built by merging arenas. Both sides must share the
    /// variable list.
    pub fn axpy(a: f64, x: &Expr, y: &Expr) -> Option<Expr> {
        if x.vars != y.vars {
            return None;
        }
        let mut nodes = Vec::with_capacity(x.nodes.len() + y.nodes.len() + 3);
        nodes.push(Node::Const(a));
        let off = 1;
        for n in &x.nodes {
            nodes.push(shift(*n, off));
        }
        let xr = nodes.len() - 1;
        nodes.push(Node::Mul(0, xr));
        let ax = nodes.len() - 1;
        let off = nodes.len();
        for n in &y.nodes {
            nodes.push(shift(*n, off));
        }
        let yr = nodes.len() - 1;
        nodes.push(Node::Add(ax, yr));
        Some(Expr { vars: x.vars.clone(), nodes })
    }

    fn check_arity(&self, point: &[f64]) -> Result<(), EvalError> {
        if point.len() != self.vars.len() {
            return Err(EvalError::Arity { expected: self.vars.len(), got: point.len() });
        }
        Ok(())
    }

    /// Value only.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let mut scratch = Vec::with_capacity(self.nodes.len());
        self.eval_with(point, &mut scratch)
    }

    /// Value only, reusing `scratch` between calls.
    pub fn eval_with(&self, point: &[f64], scratch: &mut Vec<f64>) -> Result<f64, EvalError> {
        self.check_arity(point)?;
        scratch.clear();
        for (i, node) in self.nodes.iter().enumerate() {
            let v = match *node {
                Node::Const(c) => c,
                Node::Var(k) => point[k],
                Node::Neg(a) => -scratch[a],
                Node::Add(a, b) => scratch[a] + scratch[b],
                Node::Sub(a, b) => scratch[a] - scratch[b],
                Node::Mul(a, b) => scratch[a] * scratch[b],
                Node::Div(a, b) => {
                    let d = scratch[b];
                    if d == 0.0 {
                        return Err(EvalError::Domain { node: i, op: "div", argument: d });
                    }
                    scratch[a] / d
                }
                Node::Pow(a, q) => {
                    let x = scratch[a];
                    pow_domain(i, x, q)?;
                    if q.den == 1 {
                        x.powi(q.num as i32)
                    } else {
                        rational_pow(x, q)
                    }
                }
                Node::Func(f, a) => {
                    let x = scratch[a];
                    match f {
                        Func::Sin => x.sin(),
                        Func::Cos => x.cos(),
                        Func::Exp => x.exp(),
                        Func::Log => {
                            if x <= 0.0 {
                                return Err(EvalError::Domain { node: i, op: "log", argument: x });
                            }
                            x.ln()
                        }
                    }
                }
            };
            if !v.is_finite() {
                return Err(EvalError::Domain { node: i, op: node.op_name(), argument: v });
            }
            scratch.push(v);
        }
        Ok(*scratch.last().expect("expression has at least one node"))
    }

    /// Value, gradient and Hessian.
    pub fn eval_jet2(&self, point: &[f64]) -> Result<Jet2, EvalError> {
        let mut scratch = Vec::with_capacity(self.nodes.len());
        self.eval_jet2_with(point, &mut scratch)
    }

    /// Jet evaluation reusing `scratch` between calls.
    pub fn eval_jet2_with(&self, point: &[f64], scratch: &mut Vec<Jet2>) -> Result<Jet2, EvalError> {
        self.check_arity(point)?;
        let dim = self.vars.len();
        scratch.clear();
        for (i, node) in self.nodes.iter().enumerate() {
            let j = match *node {
                Node::Const(c) => Jet2::constant(dim, c),
                Node::Var(k) => Jet2::variable(dim, k, point[k]),
                Node::Neg(a) => scratch[a].neg(),
                Node::Add(a, b) => scratch[a].add(&scratch[b]),
                Node::Sub(a, b) => scratch[a].sub(&scratch[b]),
                Node::Mul(a, b) => scratch[a].mul(&scratch[b]),
                Node::Div(a, b) => {
                    let d = scratch[b].value;
                    if d == 0.0 {
                        return Err(EvalError::Domain { node: i, op: "div", argument: d });
                    }
                    scratch[a].div(&scratch[b])
                }
                Node::Pow(a, q) => {
                    pow_domain(i, scratch[a].value, q)?;
                    scratch[a].powr(q)
                }
                Node::Func(f, a) => {
                    let x = &scratch[a];
                    match f {
                        Func::Sin => x.sin(),
                        Func::Cos => x.cos(),
                        Func::Exp => x.exp(),
                        Func::Log => {
                            if x.value <= 0.0 {
                                return Err(EvalError::Domain {
                                    node: i,
                                    op: "log",
                                    argument: x.value,
                                });
                            }
                            x.ln()
                        }
                    }
                }
            };
            if !j.is_finite() {
                return Err(EvalError::Domain { node: i, op: node.op_name(), argument: j.value });
            }
            scratch.push(j);
        }
        Ok(*scratch.last().expect("expression has at least one node"))
    }
}

fn pow_domain(node: usize, x: f64, q: Rational) -> Result<(), EvalError> {
    let bad = if q.den == 1 {
        x == 0.0 && q.num < 0
    } else {
        (x < 0.0 && q.den % 2 == 0) || x == 0.0
    };
    if bad {
        Err(EvalError::Domain { node, op: "pow", argument: x })
    } else {
        Ok(())
    }
}

fn shift(n: Node, off: usize) -> Node {
    match n {
        Node::Const(_) | Node::Var(_) => n,
        Node::Neg(a) => Node::Neg(a + off),
        Node::Add(a, b) => Node::Add(a + off, b + off),
        Node::Sub(a, b) => Node::Sub(a + off, b + off),
        Node::Mul(a, b) => Node::Mul(a + off, b + off),
        Node::Div(a, b) => Node::Div(a + off, b + off),
        Node::Pow(a, q) => Node::Pow(a + off, q),
        Node::Func(f, a) => Node::Func(f, a + off),
    }
}

impl fmt::Display for Expr {
    /// Canonical, fully parenthesized form; parsing it reproduces the tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_node(f, self.nodes.len() - 1)
    }
}

impl Expr {
    fn write_node(&self, f: &mut fmt::Formatter<'_>, i: usize) -> fmt::Result {
        let bin = |f: &mut fmt::Formatter<'_>, a: usize, op: &str, b: usize| -> fmt::Result {
            f.write_str("(")?;
            self.write_node(f, a)?;
            write!(f, " {op} ")?;
            self.write_node(f, b)?;
            f.write_str(")")
        };
        match self.nodes[i] {
            Node::Const(c) => {
                if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
                    write!(f, "(-{:?})", -c)
                } else {
                    write!(f, "{c:?}")
                }
            }
            Node::Var(k) => f.write_str(&self.vars[k]),
            Node::Neg(a) => {
                f.write_str("(-")?;
                self.write_node(f, a)?;
                f.write_str(")")
            }
            Node::Add(a, b) => bin(f, a, "+", b),
            Node::Sub(a, b) => bin(f, a, "-", b),
            Node::Mul(a, b) => bin(f, a, "*", b),
            Node::Div(a, b) => bin(f, a, "/", b),
            Node::Pow(a, q) => {
                f.write_str("(")?;
                self.write_node(f, a)?;
                write!(f, "^{q})")
            }
            Node::Func(func, a) => {
                write!(f, "{}(", func.name())?;
                self.write_node(f, a)?;
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64, Rational),
    Ident(String),
    Op(char),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v, _) => alloc::format!("number {v}"),
            Tok::Ident(s) => alloc::format!("identifier `{s}`"),
            Tok::Op(c) => alloc::format!("`{c}`"),
        }
    }
}

struct Token {
    kind: Tok,
    offset: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == b'.' {
            let mut int_part: i128 = 0;
            let mut frac_digits: i32 = 0;
            let mut seen_dot = false;
            let mut digits = 0;
            let mut overflow = false;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || (bytes[i] == b'.' && !seen_dot)) {
                if bytes[i] == b'.' {
                    seen_dot = true;
                } else {
                    digits += 1;
                    match int_part.checked_mul(10).and_then(|v| v.checked_add((bytes[i] - b'0') as i128)) {
                        Some(v) => int_part = v,
                        None => overflow = true,
                    }
                    if seen_dot {
                        frac_digits += 1;
                    }
                }
                i += 1;
            }
            if digits == 0 {
                return Err(ParseError::Syntax { offset: start, message: "malformed number".into() });
            }
            let mut exp10: i32 = 0;
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                let mut sign = 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    if bytes[j] == b'-' {
                        sign = -1;
                    }
                    j += 1;
                }
                let es = j;
                let mut e: i32 = 0;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    e = e.saturating_mul(10).saturating_add((bytes[j] - b'0') as i32);
                    j += 1;
                }
                if j == es {
                    return Err(ParseError::Syntax { offset: i, message: "malformed exponent".into() });
                }
                exp10 = sign * e;
                i = j;
            }
            let lit = &text[start..i];
            let value: f64 = lit
                .parse()
                .map_err(|_| ParseError::Syntax { offset: start, message: "malformed number".into() })?;
            let shift = exp10 - frac_digits;
            let rat = if overflow {
                None
            } else if shift >= 0 {
                10i128
                    .checked_pow(shift as u32)
                    .and_then(|p| int_part.checked_mul(p))
                    .and_then(|n| Rational::from_i128(n, 1))
            } else {
                10i128.checked_pow((-shift) as u32).and_then(|p| Rational::from_i128(int_part, p))
            };
            // Literals too long for an exact fraction still parse; they are
            // rejected only where an exact exponent is required.
            let rat = rat.unwrap_or(Rational { num: 0, den: 0 });
            out.push(Token { kind: Tok::Num(value, rat), offset: start });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { kind: Tok::Ident(text[start..i].to_string()), offset: start });
            continue;
        }
        match c {
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' => {
                out.push(Token { kind: Tok::Op(c as char), offset: start });
                i += 1;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: alloc::format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    vars: &'a [&'a str],
    nodes: Vec<Node>,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token { kind: Tok::Op(c), .. }) => Some(*c),
            _ => None,
        }
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn unexpected<T>(&self) -> Result<T, ParseError> {
        match self.peek() {
            Some(t) => Err(ParseError::Syntax {
                offset: t.offset,
                message: alloc::format!("unexpected {}", t.kind.describe()),
            }),
            None => Err(ParseError::Syntax { offset: self.end, message: "unexpected end of input".into() }),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            match self.peek() {
                Some(t) => Err(ParseError::Syntax {
                    offset: t.offset,
                    message: alloc::format!("expected `{c}`, found {}", t.kind.describe()),
                }),
                None => Err(ParseError::Syntax {
                    offset: self.end,
                    message: alloc::format!("expected `{c}`, found end of input"),
                }),
            }
        }
    }

    fn push(&mut self, n: Node) -> usize {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    fn expr(&mut self) -> Result<usize, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = self.push(if op == '+' { Node::Add(lhs, rhs) } else { Node::Sub(lhs, rhs) });
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<usize, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = self.push(if op == '*' { Node::Mul(lhs, rhs) } else { Node::Div(lhs, rhs) });
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<usize, ParseError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            let a = self.unary()?;
            if a == self.nodes.len() - 1 {
                if let Node::Const(c) = self.nodes[a] {
                    self.nodes[a] = Node::Const(-c);
                    return Ok(a);
                }
            }
            return Ok(self.push(Node::Neg(a)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<usize, ParseError> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let q = self.exponent()?;
            return Ok(self.push(Node::Pow(base, q)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<usize, ParseError> {
        let Some(tok) = self.peek() else {
            return self.unexpected();
        };
        let offset = tok.offset;
        match &tok.kind {
            Tok::Num(v, _) => {
                let v = *v;
                self.pos += 1;
                Ok(self.push(Node::Const(v)))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let name = name.clone();
                self.pos += 1;
                if let Some(k) = self.vars.iter().position(|v| *v == name) {
                    return Ok(self.push(Node::Var(k)));
                }
                let func = match name.as_str() {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    "log" | "ln" => Some(Func::Log),
                    "sqrt" => None,
                    "pi" => return Ok(self.push(Node::Const(core::f64::consts::PI))),
                    _ => return Err(ParseError::UnknownIdentifier { name, offset }),
                };
                self.expect('(')?;
                let a = self.expr()?;
                self.expect(')')?;
                Ok(match func {
                    Some(f) => self.push(Node::Func(f, a)),
                    None => self.push(Node::Pow(a, Rational { num: 1, den: 2 })),
                })
            }
            Tok::Op(_) => self.unexpected(),
        }
    }

    // Constant rational sub-grammar used after '^'.
    fn exponent(&mut self) -> Result<Rational, ParseError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(self.exponent()?.neg());
        }
        let base = self.rat_primary()?;
        if self.peek_op() == Some('^') {
            let offset = self.offset();
            self.pos += 1;
            let e = self.exponent()?;
            if e.den != 1 || e.num.abs() > 64 {
                return Err(ParseError::Syntax {
                    offset,
                    message: "nested exponent must be a small integer".into(),
                });
            }
            return base.powi(e.num).ok_or(ParseError::Syntax {
                offset,
                message: "exponent overflow".into(),
            });
        }
        Ok(base)
    }

    fn rat_primary(&mut self) -> Result<Rational, ParseError> {
        let offset = self.offset();
        match self.peek().map(|t| &t.kind) {
            Some(Tok::Num(_, q)) => {
                let q = *q;
                self.pos += 1;
                if q.den == 0 {
                    return Err(ParseError::Syntax {
                        offset,
                        message: "exponent literal is not an exact rational".into(),
                    });
                }
                Ok(q)
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let q = self.rat_expr()?;
                self.expect(')')?;
                Ok(q)
            }
            Some(Tok::Ident(_)) => Err(ParseError::Syntax {
                offset,
                message: "exponent must be a constant rational".into(),
            }),
            _ => self.unexpected(),
        }
    }

    fn rat_expr(&mut self) -> Result<Rational, ParseError> {
        let mut lhs = self.rat_term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            let offset = self.offset();
            self.pos += 1;
            let rhs = self.rat_term()?;
            let rhs = if op == '-' { rhs.neg() } else { rhs };
            lhs = lhs.add(rhs).ok_or(ParseError::Syntax { offset, message: "exponent overflow".into() })?;
        }
        Ok(lhs)
    }

    fn rat_term(&mut self) -> Result<Rational, ParseError> {
        let mut lhs = self.exponent()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            let offset = self.offset();
            self.pos += 1;
            let rhs = self.exponent()?;
            let r = if op == '*' { lhs.mul(rhs) } else { lhs.div(rhs) };
            lhs = r.ok_or(ParseError::Syntax {
                offset,
                message: "exponent overflow or division by zero".into(),
            })?;
        }
        Ok(lhs)
    }
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use alloc::format;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn hessian_packing_is_a_bijection() {
        let mut seen = [false; HESS_LEN];
        for i in 0..MAX_VARS {
            for j in i..MAX_VARS {
                let k = hidx(i, j);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(hidx(j, i), k);
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn saddle_jet() {
        let e = Expr::parse("x^2 - y^2", &["x", "y"]).unwrap();
        let j = e.eval_jet2(&[1.0, 2.0]).unwrap();
        assert_eq!(j.value, -3.0);
        assert_eq!(&j.grad[..2], &[2.0, -4.0]);
        assert_eq!(j.hess(0, 0), 2.0);
        assert_eq!(j.hess(1, 1), -2.0);
        assert_eq!(j.hess(0, 1), 0.0);
    }

    #[test]
    fn sine_jet_at_zero() {
        let e = Expr::parse("sin(x)", &["x"]).unwrap();
        let j = e.eval_jet2(&[0.0]).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.grad[0], 1.0);
        assert_eq!(j.hess(0, 0), 0.0);
    }

    #[test]
    fn parses_trig_product() {
        let e = Expr::parse("sin(t)*cos(theta)", &["t", "theta"]).unwrap();
        let v = e.eval(&[0.5, 0.25]).unwrap();
        assert!(close(v, 0.5f64.sin() * 0.25f64.cos(), 1e-15));
    }

    #[test]
    fn syntax_error_offset() {
        let err = Expr::parse("x +* y", &["x", "y"]).unwrap_err();
        assert_eq!(err.offset(), Some(3));
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn unknown_identifier_is_reported() {
        let err = Expr::parse("x + z", &["x", "y"]).unwrap_err();
        assert_eq!(err, ParseError::UnknownIdentifier { name: "z".into(), offset: 4 });
    }

    #[test]
    fn trailing_and_missing_tokens() {
        assert_eq!(Expr::parse("(x", &["x"]).unwrap_err().offset(), Some(2));
        assert_eq!(Expr::parse("x)", &["x"]).unwrap_err().offset(), Some(1));
        assert_eq!(Expr::parse("", &["x"]).unwrap_err().offset(), Some(0));
        assert!(Expr::parse("x^y", &["x", "y"]).is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("-x^2 + 2*3 - 4/2/2", &["x"]).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0 + 6.0 - 1.0);
        let e = Expr::parse("x^2^3", &["x"]).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), 256.0);
        let e = Expr::parse("x^(1/3)", &["x"]).unwrap();
        assert!(close(e.eval(&[-8.0]).unwrap(), -2.0, 1e-15));
        let e = Expr::parse("x^-0.5", &["x"]).unwrap();
        assert!(close(e.eval(&[4.0]).unwrap(), 0.5, 1e-15));
        let e = Expr::parse("2 * pi", &[]).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 2.0 * core::f64::consts::PI);
    }

    #[test]
    fn domain_errors_name_the_node() {
        let e = Expr::parse("1 + log(x)", &["x"]).unwrap();
        match e.eval_jet2(&[-1.0]) {
            Err(EvalError::Domain { node, op, .. }) => {
                assert_eq!(op, "log");
                assert_eq!(node, 2);
            }
            other => panic!("{other:?}"),
        }
        let e = Expr::parse("1/(x-1)", &["x"]).unwrap();
        assert!(matches!(e.eval(&[1.0]), Err(EvalError::Domain { op: "div", .. })));
        let e = Expr::parse("sqrt(x)", &["x"]).unwrap();
        assert!(matches!(e.eval_jet2(&[-1.0]), Err(EvalError::Domain { op: "pow", .. })));
        assert!(matches!(e.eval(&[1.0, 2.0]), Err(EvalError::Arity { expected: 1, got: 2 })));
    }

    #[test]
    fn printer_round_trips() {
        let cases = [
            "x^2 - y^2",
            "-x^(3/2) * exp(-y) / (1 + cos(x*y))",
            "sqrt(1 + x^2) - -3.5e-3 + log(2 + sin(y))^(-2)",
            "2*pi - (x - (y - 1))",
        ];
        for c in cases {
            let e = Expr::parse(c, &["x", "y"]).unwrap();
            let printed = format!("{e}");
            let back = Expr::parse(&printed, &["x", "y"]).unwrap();
            assert_eq!(e, back, "{c} -> {printed}");
        }
    }

    #[test]
    fn chain_rule_spot_check() {
        let e = Expr::parse("sin(x^2)", &["x"]).unwrap();
        let mut rng = 0x9e3779b97f4a7c15u64;
        for _ in 0..100 {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = ((rng >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0;
            let j = e.eval_jet2(&[x]).unwrap();
            let (s, c) = (x * x).sin_cos();
            assert!(close(j.value, s, 1e-12));
            assert!(close(j.grad[0], 2.0 * x * c, 1e-12));
            assert!(close(j.hess(0, 0), 2.0 * c - 4.0 * x * x * s, 1e-12));
        }
    }

    #[test]
    fn polynomial_matches_finite_differences() {
        let e = Expr::parse(
            "1.5*x^4 - 0.7*x^3*y + 2*x^2*y^2 - x*y^3 + 0.3*y^4 + x^2 - 3*x*y + y - 2",
            &["x", "y"],
        )
        .unwrap();
        let h = 1e-5;
        let mut rng = 12345u64;
        for _ in 0..20 {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = ((rng >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let y = ((rng >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            let f = |a: f64, b: f64| e.eval(&[a, b]).unwrap();
            let j = e.eval_jet2(&[x, y]).unwrap();
            let gx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
            let gy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
            let gscale = 1.0 + j.grad[0].abs().max(j.grad[1].abs());
            assert!((gx - j.grad[0]).abs() <= 1e-6 * gscale);
            assert!((gy - j.grad[1]).abs() <= 1e-6 * gscale);
            let hd = 1e-3;
            let fxx = (f(x + hd, y) - 2.0 * f(x, y) + f(x - hd, y)) / (hd * hd);
            let fyy = (f(x, y + hd) - 2.0 * f(x, y) + f(x, y - hd)) / (hd * hd);
            let fxy = (f(x + hd, y + hd) - f(x + hd, y - hd) - f(x - hd, y + hd) + f(x - hd, y - hd))
                / (4.0 * hd * hd);
            let hscale = 1.0 + j.hess(0, 0).abs().max(j.hess(1, 1).abs()).max(j.hess(0, 1).abs());
            assert!((fxx - j.hess(0, 0)).abs() <= 1e-5 * hscale);
            assert!((fyy - j.hess(1, 1)).abs() <= 1e-5 * hscale);
            assert!((fxy - j.hess(0, 1)).abs() <= 1e-5 * hscale);
        }
    }

    fn arb_expr() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            Just("x".to_string()),
            Just("y".to_string()),
            (-3.0f64..3.0).prop_map(|c| format!("{c:?}")),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
                inner.clone().prop_map(|a| format!("sin({a})")),
                inner.clone().prop_map(|a| format!("cos({a})")),
                inner.clone().prop_map(|a| format!("exp(0.1*{a})")),
                inner.clone().prop_map(|a| format!("({a})^2")),
                inner.prop_map(|a| format!("-({a})")),
            ]
        })
    }

    proptest! {
        #[test]
        fn linearity_of_jets(s1 in arb_expr(), s2 in arb_expr(), a in -2.0f64..2.0,
                             x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let e1 = Expr::parse(&s1, &["x", "y"]).unwrap();
            let e2 = Expr::parse(&s2, &["x", "y"]).unwrap();
            let comb = Expr::axpy(a, &e1, &e2).unwrap();
            let j1 = e1.eval_jet2(&[x, y]).unwrap();
            let j2 = e2.eval_jet2(&[x, y]).unwrap();
            let jc = comb.eval_jet2(&[x, y]).unwrap();
            let expect = j1.scale(a).add(&j2);
            let tol = |u: f64, v: f64| (u - v).abs() <= 1e-12 * (1.0 + u.abs() + v.abs());
            prop_assert!(tol(jc.value, expect.value));
            for k in 0..2 {
                prop_assert!(tol(jc.grad[k], expect.grad[k]));
                for l in 0..2 {
                    prop_assert!(tol(jc.hess(k, l), expect.hess(k, l)));
                }
            }
        }

        #[test]
        fn print_parse_round_trip(s in arb_expr()) {
            let e = Expr::parse(&s, &["x", "y"]).unwrap();
            let back = Expr::parse(&format!("{e}"), &["x", "y"]).unwrap();
            prop_assert_eq!(e, back);
        }

        #[test]
        fn hessian_is_symmetric(s in arb_expr(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let e = Expr::parse(&s, &["x", "y"]).unwrap();
            let j = e.eval_jet2(&[x, y]).unwrap();
            let h = j.hessian();
            prop_assert_eq!(h[0][1], h[1][0]);
        }
    }
}
