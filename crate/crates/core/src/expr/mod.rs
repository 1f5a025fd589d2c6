//! Symbolic expressions over the plane coordinates `x`, `y`, `r`, `theta`.
//!
//! Every formula the crate manipulates (vector fields, radial factors,
//! potentials, curve radii) is an [`Expr`]. Trees are immutable once built
//! and evaluation is deterministic: the same tree and the same bindings give
//! bit-identical results.
//!
//! Construction through the arithmetic operators and the helper methods goes
//! through simplifying constructors, so trees produced by [`Expr::diff`] or
//! [`Expr::substitute`] are already in the normal form of [`simplify`].

mod parse;
mod poly;
pub(crate) mod trig;

use std::collections::BTreeSet;
use std::fmt;
use std::ops;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse, ParseError, ParseErrorKind};
pub use poly::{antiderivative_poly, NotPolynomial, Poly};

/// The coordinate variables an expression may mention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    X,
    Y,
    R,
    Theta,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::X, Var::Y, Var::R, Var::Theta];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::R => "r",
            Var::Theta => "theta",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "r" => Some(Var::R),
            "theta" => Some(Var::Theta),
            _ => None,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::R => 2,
            Var::Theta => 3,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Values assigned to variables for one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Bindings {
    values: [Option<f64>; 4],
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cartesian point `(x, y)`.
    pub fn xy(x: f64, y: f64) -> Self {
        Self::new().with(Var::X, x).with(Var::Y, y)
    }

    /// Polar point `(r, theta)`.
    pub fn polar(r: f64, theta: f64) -> Self {
        Self::new().with(Var::R, r).with(Var::Theta, theta)
    }

    pub fn with(mut self, var: Var, value: f64) -> Self {
        self.set(var, value);
        self
    }

    pub fn set(&mut self, var: Var, value: f64) {
        self.values[var.index()] = Some(value);
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.values[var.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(Var),
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of non-positive value {0}")]
    LogDomain(f64),
    #[error("square root of negative value {0}")]
    SqrtDomain(f64),
    #[error("non-integer power {exponent} of non-positive base {base}")]
    PowDomain { base: f64, exponent: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
        }
    }

    fn apply(self, v: f64) -> Result<f64, EvalError> {
        match self {
            UnaryOp::Neg => Ok(-v),
            UnaryOp::Sin => Ok(v.sin()),
            UnaryOp::Cos => Ok(v.cos()),
            UnaryOp::Exp => Ok(v.exp()),
            UnaryOp::Ln if v > 0.0 => Ok(v.ln()),
            UnaryOp::Ln => Err(EvalError::LogDomain(v)),
            UnaryOp::Sqrt if v >= 0.0 => Ok(v.sqrt()),
            UnaryOp::Sqrt => Err(EvalError::SqrtDomain(v)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }

    fn apply(self, a: f64, b: f64) -> Result<f64, EvalError> {
        match self {
            BinaryOp::Add => Ok(a + b),
            BinaryOp::Sub => Ok(a - b),
            BinaryOp::Mul => Ok(a * b),
            BinaryOp::Div if b == 0.0 => Err(EvalError::DivisionByZero),
            BinaryOp::Div => Ok(a / b),
            BinaryOp::Pow => pow(a, b),
        }
    }
}

fn pow(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        if base == 0.0 && exponent < 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        Ok(base.powi(exponent as i32))
    } else if base > 0.0 {
        Ok(base.powf(exponent))
    } else {
        Err(EvalError::PowDomain { base, exponent })
    }
}

/// Expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn var(var: Var) -> Expr {
        Expr::Var(var)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn y() -> Expr {
        Expr::Var(Var::Y)
    }

    pub fn r() -> Expr {
        Expr::Var(Var::R)
    }

    pub fn theta() -> Expr {
        Expr::Var(Var::Theta)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn eval(&self, bindings: &Bindings) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(v) => bindings.get(*v).ok_or(EvalError::Unbound(*v)),
            Expr::Unary(op, a) => op.apply(a.eval(bindings)?),
            Expr::Binary(op, a, b) => op.apply(a.eval(bindings)?, b.eval(bindings)?),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Unary(_, a) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn contains(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Unary(_, a) => a.contains(var),
            Expr::Binary(_, a, b) => a.contains(var) || b.contains(var),
        }
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        binary(BinaryOp::Pow, self, exponent)
    }

    pub fn powi(self, exponent: i32) -> Expr {
        self.pow(Expr::Const(exponent as f64))
    }

    pub fn sin(self) -> Expr {
        unary(UnaryOp::Sin, self)
    }

    pub fn cos(self) -> Expr {
        unary(UnaryOp::Cos, self)
    }

    pub fn exp(self) -> Expr {
        unary(UnaryOp::Exp, self)
    }

    pub fn ln(self) -> Expr {
        unary(UnaryOp::Ln, self)
    }

    pub fn sqrt(self) -> Expr {
        unary(UnaryOp::Sqrt, self)
    }

    /// Symbolic partial derivative with respect to `var`, in simplified form.
    pub fn diff(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, a) => {
                let da = a.diff(var);
                if da.is_zero() {
                    return Expr::zero();
                }
                let a = (**a).clone();
                match op {
                    UnaryOp::Neg => -da,
                    UnaryOp::Sin => a.cos() * da,
                    UnaryOp::Cos => -(a.sin()) * da,
                    UnaryOp::Exp => a.exp() * da,
                    UnaryOp::Ln => da / a,
                    UnaryOp::Sqrt => da / (Expr::Const(2.0) * a.sqrt()),
                }
            }
            Expr::Binary(op, a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinaryOp::Add => da + db,
                    BinaryOp::Sub => da - db,
                    BinaryOp::Mul => da * b.clone() + a * db,
                    BinaryOp::Div => (da * b.clone() - a * db) / b.powi(2),
                    BinaryOp::Pow => match (a.as_const(), b.as_const()) {
                        (_, Some(n)) => Expr::Const(n) * a.pow(Expr::Const(n - 1.0)) * da,
                        (Some(base), None) => {
                            a.clone().pow(b) * Expr::Const(base).ln() * db
                        }
                        (None, None) => {
                            let lhs = db * a.clone().ln();
                            let rhs = b.clone() * da / a.clone();
                            a.pow(b) * (lhs + rhs)
                        }
                    },
                }
            }
        }
    }

    /// Simultaneous substitution of variables by expressions.
    pub fn substitute(&self, map: &[(Var, Expr)]) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => map
                .iter()
                .find(|(k, _)| k == v)
                .map(|(_, e)| e.clone())
                .unwrap_or(Expr::Var(*v)),
            Expr::Unary(op, a) => unary(*op, a.substitute(map)),
            Expr::Binary(op, a, b) => binary(*op, a.substitute(map), b.substitute(map)),
        }
    }

    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => unary(*op, a.simplify()),
            Expr::Binary(op, a, b) => binary(*op, a.simplify(), b.simplify()),
        }
    }

    /// Expanded polynomial normal form when the expression is a polynomial,
    /// otherwise the simplified tree.
    pub fn canonical(&self) -> Expr {
        match Poly::from_expr(self) {
            Ok(p) => p.to_expr(),
            Err(_) => self.simplify(),
        }
    }
}

/// Unary node with constant folding and double-negation removal.
pub(crate) fn unary(op: UnaryOp, a: Expr) -> Expr {
    if let Some(c) = a.as_const() {
        if let Ok(v) = op.apply(c) {
            if v.is_finite() {
                return Expr::Const(v);
            }
        }
    }
    if op == UnaryOp::Neg {
        if let Expr::Unary(UnaryOp::Neg, inner) = a {
            return *inner;
        }
    }
    Expr::Unary(op, Box::new(a))
}

/// Binary node with constant folding and the neutral/absorbing element rules.
pub(crate) fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    let (ca, cb) = (a.as_const(), b.as_const());
    if let (Some(x), Some(y)) = (ca, cb) {
        if let Ok(v) = op.apply(x, y) {
            if v.is_finite() {
                return Expr::Const(v);
            }
        }
    }
    match op {
        BinaryOp::Add => {
            if ca == Some(0.0) {
                return b;
            }
            if cb == Some(0.0) {
                return a;
            }
        }
        BinaryOp::Sub => {
            if cb == Some(0.0) {
                return a;
            }
            if ca == Some(0.0) {
                return unary(UnaryOp::Neg, b);
            }
        }
        BinaryOp::Mul => {
            if ca == Some(0.0) || cb == Some(0.0) {
                return Expr::zero();
            }
            if ca == Some(1.0) {
                return b;
            }
            if cb == Some(1.0) {
                return a;
            }
            if ca == Some(-1.0) {
                return unary(UnaryOp::Neg, b);
            }
            if cb == Some(-1.0) {
                return unary(UnaryOp::Neg, a);
            }
        }
        BinaryOp::Div => {
            if cb == Some(1.0) {
                return a;
            }
            if ca == Some(0.0) && cb != Some(0.0) {
                return Expr::zero();
            }
        }
        BinaryOp::Pow => {
            if cb == Some(1.0) {
                return a;
            }
            if cb == Some(0.0) || ca == Some(1.0) {
                return Expr::one();
            }
        }
    }
    Expr::Binary(op, Box::new(a), Box::new(b))
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        binary(BinaryOp::Add, self, rhs)
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        binary(BinaryOp::Sub, self, rhs)
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        binary(BinaryOp::Mul, self, rhs)
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        binary(BinaryOp::Div, self, rhs)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        unary(UnaryOp::Neg, self)
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::Const(value)
    }
}

impl From<Var> for Expr {
    fn from(var: Var) -> Self {
        Expr::Var(var)
    }
}

/// Fully parenthesized infix. `parse(&e.to_string())` evaluates exactly like `e`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.is_sign_negative() => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(BinaryOp::Pow, a, b) => write!(f, "({a}^{b})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

pub fn evaluate(e: &Expr, bindings: &Bindings) -> Result<f64, EvalError> {
    e.eval(bindings)
}

pub fn differentiate(e: &Expr, var: Var) -> Expr {
    e.diff(var)
}

pub fn simplify(e: &Expr) -> Expr {
    e.simplify()
}

/// Default relative tolerance for pointwise expression comparison.
pub const POINTWISE_TOL: f64 = 1e-12;

/// Tensor grid of sample points, one axis per variable.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    axes: Vec<(Var, f64, f64, usize)>,
}

impl SampleGrid {
    pub fn new() -> Self {
        Self { axes: Vec::new() }
    }

    /// `n` evenly spaced samples of `var` on `[lo, hi]`.
    pub fn axis(mut self, var: Var, lo: f64, hi: f64, n: usize) -> Self {
        self.axes.retain(|(v, ..)| *v != var);
        self.axes.push((var, lo, hi, n.max(1)));
        self
    }

    /// 21 samples on `[-2, 2]` for each of `vars`.
    pub fn default_for(vars: &[Var]) -> Self {
        vars.iter()
            .fold(Self::new(), |g, v| g.axis(*v, -2.0, 2.0, 21))
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.3).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> impl Iterator<Item = Bindings> + '_ {
        (0..self.len()).map(move |mut idx| {
            let mut b = Bindings::new();
            for &(var, lo, hi, n) in &self.axes {
                let i = idx % n;
                idx /= n;
                let v = if n == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                };
                b.set(var, v);
            }
            b
        })
    }
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self::new()
    }
}

/// Pointwise equality `|a - b| <= tol * (1 + |a|)` on every point of `grid`.
///
/// Points where both sides hit a domain error are skipped. An error on only
/// one side, or an unbound variable, is returned.
pub fn poly_equal_with_tol(
    a: &Expr,
    b: &Expr,
    grid: &SampleGrid,
    tol: f64,
) -> Result<bool, EvalError> {
    for point in grid.points() {
        let va = a.eval(&point);
        let vb = b.eval(&point);
        match (va, vb) {
            (Ok(va), Ok(vb)) => {
                if (va - vb).abs() > tol * (1.0 + va.abs()) {
                    return Ok(false);
                }
            }
            (Err(e @ EvalError::Unbound(_)), _) | (_, Err(e @ EvalError::Unbound(_))) => {
                return Err(e)
            }
            (Err(_), Err(_)) => {}
            (Err(e), Ok(_)) | (Ok(_), Err(e)) => return Err(e),
        }
    }
    Ok(true)
}

/// [`poly_equal_with_tol`] at [`POINTWISE_TOL`]; `grid` defaults to
/// [`SampleGrid::default_for`] over `vars`.
pub fn poly_equal(
    a: &Expr,
    b: &Expr,
    vars: &[Var],
    grid: Option<&SampleGrid>,
) -> Result<bool, EvalError> {
    match grid {
        Some(g) => poly_equal_with_tol(a, b, g, POINTWISE_TOL),
        None => poly_equal_with_tol(a, b, &SampleGrid::default_for(vars), POINTWISE_TOL),
    }
}
