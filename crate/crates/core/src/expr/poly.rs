//! Multivariate polynomials with real coefficients.
//!
//! Used as an expansion normal form: an [`Expr`] built from constants,
//! variables, `+ - *`, division by constants and non-negative integer powers
//! converts to a [`Poly`], and back to a flat sum of monomials.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{BinaryOp, Bindings, EvalError, Expr, UnaryOp, Var};

/// Largest integer exponent accepted during expansion.
const MAX_EXPONENT: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not a polynomial: {0}")]
pub struct NotPolynomial(pub String);

type Exponents = [u32; 4];

/// Sparse polynomial in `x`, `y`, `r`, `theta`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Exponents, f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term([0; 4], c);
        p
    }

    pub fn var(v: Var) -> Self {
        let mut e = [0; 4];
        e[v.index()] = 1;
        let mut p = Self::zero();
        p.add_term(e, 1.0);
        p
    }

    fn add_term(&mut self, exps: Exponents, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exps).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&exps);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Monomials as `(exponents of [x, y, r, theta], coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32; 4], f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|e| e[v.index()]).max().unwrap_or(0)
    }

    pub fn vars(&self) -> Vec<Var> {
        Var::ALL
            .into_iter()
            .filter(|v| self.terms.keys().any(|e| e[v.index()] > 0))
            .collect()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, *c);
        }
        out
    }

    pub fn scale(&self, k: f64) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            out.add_term(*e, c * k);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]];
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn powu(&self, n: u32) -> Poly {
        let mut out = Poly::constant(1.0);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Coefficients of `v^k`, each a polynomial in the remaining variables.
    pub fn collect(&self, v: Var) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (e, c) in &self.terms {
            let k = e[v.index()];
            let mut rest = *e;
            rest[v.index()] = 0;
            out.entry(k).or_default().add_term(rest, *c);
        }
        out
    }

    pub fn eval(&self, b: &Bindings) -> Result<f64, EvalError> {
        let mut values = [0.0; 4];
        for v in self.vars() {
            values[v.index()] = b.get(v).ok_or(EvalError::Unbound(v))?;
        }
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(values)
                    .fold(*c, |acc, (k, val)| acc * val.powi(*k as i32))
            })
            .sum())
    }

    pub fn from_expr(e: &Expr) -> Result<Poly, NotPolynomial> {
        match e {
            Expr::Const(c) => Ok(Poly::constant(*c)),
            Expr::Var(v) => Ok(Poly::var(*v)),
            Expr::Unary(UnaryOp::Neg, a) => Ok(Poly::from_expr(a)?.scale(-1.0)),
            Expr::Unary(op, a) => match a.simplify().as_const() {
                Some(_) => {
                    let v = e
                        .eval(&Bindings::new())
                        .map_err(|err| NotPolynomial(err.to_string()))?;
                    Ok(Poly::constant(v))
                }
                None => Err(NotPolynomial(format!("{op:?} of a non-constant argument"))),
            },
            Expr::Binary(op, a, b) => match op {
                BinaryOp::Add => Ok(Poly::from_expr(a)?.add(&Poly::from_expr(b)?)),
                BinaryOp::Sub => Ok(Poly::from_expr(a)?.sub(&Poly::from_expr(b)?)),
                BinaryOp::Mul => Ok(Poly::from_expr(a)?.mul(&Poly::from_expr(b)?)),
                BinaryOp::Div => {
                    let denom = Poly::from_expr(b)?;
                    match denom.as_constant() {
                        Some(c) if c != 0.0 => Ok(Poly::from_expr(a)?.scale(1.0 / c)),
                        _ => Err(NotPolynomial(format!("division by `{b}`"))),
                    }
                }
                BinaryOp::Pow => {
                    let exponent = Poly::from_expr(b)?
                        .as_constant()
                        .ok_or_else(|| NotPolynomial(format!("variable exponent `{b}`")))?;
                    if exponent < 0.0 || exponent.fract() != 0.0 || exponent > MAX_EXPONENT {
                        return Err(NotPolynomial(format!("exponent {exponent}")));
                    }
                    Ok(Poly::from_expr(a)?.powu(exponent as u32))
                }
            },
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.get(&[0; 4]).copied(),
            _ => None,
        }
    }

    /// Flat sum of monomials, ordered by total degree then by exponents.
    pub fn to_expr(&self) -> Expr {
        let mut order: Vec<(&Exponents, &f64)> = self.terms.iter().collect();
        order.sort_by_key(|(e, _)| (e.iter().sum::<u32>(), **e));
        let mut acc: Option<Expr> = None;
        for (e, c) in order {
            let monomial = Var::ALL
                .iter()
                .filter(|v| e[v.index()] > 0)
                .map(|v| Expr::Var(*v).powi(e[v.index()] as i32))
                .reduce(|a, b| a * b);
            acc = Some(match (acc, monomial) {
                (None, None) => Expr::Const(*c),
                (None, Some(m)) => Expr::Const(*c) * m,
                (Some(a), None) if *c < 0.0 => a - Expr::Const(-c),
                (Some(a), None) => a + Expr::Const(*c),
                (Some(a), Some(m)) if *c < 0.0 => a - Expr::Const(-c) * m,
                (Some(a), Some(m)) => a + Expr::Const(*c) * m,
            });
        }
        acc.unwrap_or_else(Expr::zero)
    }
}

/// Term-by-term antiderivative in `var` with zero constant of integration.
///
/// Other variables are treated as constants. Fails when the expanded
/// expression is not a polynomial (negative or fractional powers, division
/// by a non-constant, transcendental functions of a variable).
pub fn antiderivative_poly(e: &Expr, var: Var) -> Result<Expr, NotPolynomial> {
    let p = Poly::from_expr(&e.simplify())?;
    let mut out = Poly::zero();
    for (exps, c) in &p.terms {
        let mut raised = *exps;
        let k = raised[var.index()];
        raised[var.index()] = k + 1;
        out.add_term(raised, c / (k + 1) as f64);
    }
    Ok(out.to_expr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, poly_equal, SampleGrid};

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn expansion_matches_tree() {
        let e = p("(x - 2*y)^3*(1 + x) - y/4");
        let poly = Poly::from_expr(&e).unwrap();
        assert!(poly_equal(&poly.to_expr(), &e, &[Var::X, Var::Y], None).unwrap());
        assert_eq!(poly.degree_in(Var::X), 4);
    }

    #[test]
    fn rejects_non_polynomials() {
        for s in ["sin(x)", "1/x", "x^0.5", "x^-1", "2^x", "sqrt(r)"] {
            assert!(Poly::from_expr(&p(s)).is_err(), "{s}");
        }
        // constant transcendental subterms are fine
        assert!(Poly::from_expr(&p("x*cos(0)")).is_ok());
    }

    #[test]
    fn antiderivative_of_cubic_rate() {
        let a = antiderivative_poly(&p("r - r^3"), Var::R).unwrap();
        assert!(poly_equal(&a, &p("r^2/2 - r^4/4"), &[Var::R], None).unwrap());
        let phi = -a;
        assert!(poly_equal(&phi, &p("(r^2/4)*(r^2 - 2)"), &[Var::R], None).unwrap());
    }

    #[test]
    fn antiderivative_of_zero() {
        assert_eq!(antiderivative_poly(&Expr::zero(), Var::R).unwrap(), Expr::zero());
    }

    #[test]
    fn antiderivative_two_cycle_rate() {
        // oracle: differentiate back and compare with the integrand on 100 points
        let integrand = p("r*(4 - r^2)");
        let a = antiderivative_poly(&integrand, Var::R).unwrap();
        let grid = SampleGrid::new().axis(Var::R, -3.0, 3.0, 100);
        assert!(crate::expr::poly_equal_with_tol(&a.diff(Var::R), &integrand, &grid, 1e-12).unwrap());
        assert!(poly_equal(&a, &p("2*r^2 - r^4/4"), &[Var::R], None).unwrap());
    }

    #[test]
    fn antiderivative_treats_other_variables_as_constants() {
        let a = antiderivative_poly(&p("x*r^2 + y"), Var::R).unwrap();
        assert!(poly_equal(&a, &p("x*r^3/3 + y*r"), &[Var::X, Var::Y, Var::R], None).unwrap());
        assert!(antiderivative_poly(&p("r*cos(theta)"), Var::R).is_err());
        assert!(antiderivative_poly(&p("exp(r)"), Var::R).is_err());
    }

    #[test]
    fn collect_by_variable() {
        let poly = Poly::from_expr(&p("x^2*y + 3*y - x^2")).unwrap();
        let by_y = poly.collect(Var::Y);
        assert_eq!(by_y.len(), 2);
        assert_eq!(by_y[&1].to_expr().eval(&Bindings::xy(2.0, 0.0)).unwrap(), 7.0);
    }
}
