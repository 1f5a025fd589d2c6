//! Polynomials in `r`, `cos(theta)`, `sin(theta)` reduced by `sin^2 = 1 - cos^2`.
//!
//! Every monomial is `r^i cos^j sin^k` with `i` any integer, `j >= 0` and
//! `k` in `{0, 1}`, which makes the representation canonical. Polynomial
//! vector fields in `(x, y)` land here exactly after the substitution
//! `x = r cos(theta)`, `y = r sin(theta)`.

use std::collections::BTreeMap;

use super::{BinaryOp, Expr, NotPolynomial, Poly, UnaryOp, Var};

/// `(power of r, power of cos, power of sin)`.
pub(crate) type TrigKey = (i32, u32, u32);

#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct TrigPoly {
    terms: BTreeMap<TrigKey, f64>,
}

impl TrigPoly {
    pub fn constant(c: f64) -> Self {
        let mut t = Self::default();
        t.add_term((0, 0, 0), c);
        t
    }

    fn monomial(key: TrigKey, c: f64) -> Self {
        let mut t = Self::default();
        t.add_term(key, c);
        t
    }

    fn add_term(&mut self, key: TrigKey, c: f64) {
        if c == 0.0 {
            return;
        }
        // sin^2 -> 1 - cos^2
        if key.2 >= 2 {
            let (i, j, k) = key;
            self.add_term((i, j, k - 2), c);
            self.add_term((i, j + 2, k - 2), -c);
            return;
        }
        let entry = self.terms.entry(key).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(*k, *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> TrigPoly {
        let mut out = TrigPoly::default();
        for (k, c) in &self.terms {
            out.add_term(*k, c * s);
        }
        out
    }

    pub fn mul(&self, other: &TrigPoly) -> TrigPoly {
        let mut out = TrigPoly::default();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term((a.0 + b.0, a.1 + b.1, a.2 + b.2), ca * cb);
            }
        }
        out
    }

    fn powu(&self, n: u32) -> TrigPoly {
        (0..n).fold(TrigPoly::constant(1.0), |acc, _| acc.mul(self))
    }

    /// Multiply by `r^k`.
    pub fn shift_r(&self, k: i32) -> TrigPoly {
        TrigPoly {
            terms: self
                .terms
                .iter()
                .map(|(key, c)| ((key.0 + k, key.1, key.2), *c))
                .collect(),
        }
    }

    /// Substitute `x = r cos(theta)`, `y = r sin(theta)` into a polynomial in `x, y`.
    pub fn from_xy_poly(p: &Poly) -> Result<TrigPoly, NotPolynomial> {
        let mut out = TrigPoly::default();
        for (e, c) in p.terms() {
            if e[Var::R.index()] != 0 || e[Var::Theta.index()] != 0 {
                return Err(NotPolynomial("polar variable in a Cartesian field".into()));
            }
            let (a, b) = (e[Var::X.index()], e[Var::Y.index()]);
            let sin_power = TrigPoly::monomial((0, 0, 1), 1.0).powu(b);
            out = out.add(&sin_power.mul(&TrigPoly::monomial(((a + b) as i32, a, 0), c)));
        }
        Ok(out)
    }

    /// Convert an expression in `r` and `theta` whose only transcendental
    /// pieces are `cos(theta)` and `sin(theta)`.
    pub fn from_expr(e: &Expr) -> Result<TrigPoly, NotPolynomial> {
        match e {
            Expr::Const(c) => Ok(TrigPoly::constant(*c)),
            Expr::Var(Var::R) => Ok(TrigPoly::monomial((1, 0, 0), 1.0)),
            Expr::Var(v) => Err(NotPolynomial(format!("bare `{v}`"))),
            Expr::Unary(UnaryOp::Neg, a) => Ok(TrigPoly::from_expr(a)?.scale(-1.0)),
            Expr::Unary(op @ (UnaryOp::Cos | UnaryOp::Sin), a)
                if matches!(**a, Expr::Var(Var::Theta)) =>
            {
                let key = if *op == UnaryOp::Cos { (0, 1, 0) } else { (0, 0, 1) };
                Ok(TrigPoly::monomial(key, 1.0))
            }
            Expr::Unary(..) => match e.simplify().as_const() {
                Some(c) => Ok(TrigPoly::constant(c)),
                None => Err(NotPolynomial(format!("`{e}`"))),
            },
            Expr::Binary(op, a, b) => {
                let lhs = TrigPoly::from_expr(a)?;
                match op {
                    BinaryOp::Add => Ok(lhs.add(&TrigPoly::from_expr(b)?)),
                    BinaryOp::Sub => Ok(lhs.add(&TrigPoly::from_expr(b)?.scale(-1.0))),
                    BinaryOp::Mul => Ok(lhs.mul(&TrigPoly::from_expr(b)?)),
                    BinaryOp::Div => {
                        let d = TrigPoly::from_expr(b)?;
                        match d.single_r_monomial() {
                            Some((k, c)) => Ok(lhs.shift_r(-k).scale(1.0 / c)),
                            None => Err(NotPolynomial(format!("division by `{b}`"))),
                        }
                    }
                    BinaryOp::Pow => {
                        let n = b.simplify().as_const().filter(|n| n.fract() == 0.0);
                        match n {
                            Some(n) if (0.0..=64.0).contains(&n) => Ok(lhs.powu(n as u32)),
                            Some(n) if n < 0.0 && n >= -64.0 => match lhs.single_r_monomial() {
                                Some((k, c)) => Ok(TrigPoly::monomial(
                                    (k * n as i32, 0, 0),
                                    c.powi(n as i32),
                                )),
                                None => Err(NotPolynomial(format!("negative power of `{a}`"))),
                            },
                            _ => Err(NotPolynomial(format!("exponent `{b}`"))),
                        }
                    }
                }
            }
        }
    }

    /// `c * r^k` with no angular part.
    fn single_r_monomial(&self) -> Option<(i32, f64)> {
        match self.terms.iter().collect::<Vec<_>>().as_slice() {
            [((k, 0, 0), c)] if **c != 0.0 => Some((*k, **c)),
            _ => None,
        }
    }

    /// Group monomials by their angular part: `sum_j A_j(r) T_j(theta)`.
    pub fn by_angle(&self) -> BTreeMap<(u32, u32), BTreeMap<i32, f64>> {
        let mut out: BTreeMap<(u32, u32), BTreeMap<i32, f64>> = BTreeMap::new();
        for ((i, j, k), c) in &self.terms {
            out.entry((*j, *k)).or_default().insert(*i, *c);
        }
        out
    }

    pub fn to_expr(&self) -> Expr {
        let mut acc: Option<Expr> = None;
        for ((i, j, k), c) in &self.terms {
            let mut factors = Vec::new();
            if *i != 0 {
                factors.push(Expr::r().powi(*i));
            }
            if *j != 0 {
                factors.push(Expr::theta().cos().powi(*j as i32));
            }
            if *k != 0 {
                factors.push(Expr::theta().sin().powi(*k as i32));
            }
            let monomial = factors.into_iter().reduce(|a, b| a * b);
            let magnitude = match monomial {
                Some(m) => Expr::Const(c.abs()) * m,
                None => Expr::Const(c.abs()),
            };
            acc = Some(match acc {
                None if *c < 0.0 => -magnitude,
                None => magnitude,
                Some(a) if *c < 0.0 => a - magnitude,
                Some(a) => a + magnitude,
            });
        }
        acc.unwrap_or_else(Expr::zero)
    }
}

/// Angular monomial `cos^j sin^k` as an expression.
pub(crate) fn angular_monomial(j: u32, k: u32) -> Expr {
    let mut e = Expr::one();
    if j > 0 {
        e = e * Expr::theta().cos().powi(j as i32);
    }
    if k > 0 {
        e = e * Expr::theta().sin().powi(k as i32);
    }
    e
}

/// `sum_i c_i r^i` as an expression, highest power last.
pub(crate) fn laurent_to_expr(coeffs: &BTreeMap<i32, f64>) -> Expr {
    let mut acc: Option<Expr> = None;
    for (i, c) in coeffs {
        if *c == 0.0 {
            continue;
        }
        let magnitude = if *i == 0 {
            Expr::Const(c.abs())
        } else {
            Expr::Const(c.abs()) * Expr::r().powi(*i)
        };
        acc = Some(match acc {
            None if *c < 0.0 => -magnitude,
            None => magnitude,
            Some(a) if *c < 0.0 => a - magnitude,
            Some(a) => a + magnitude,
        });
    }
    acc.unwrap_or_else(Expr::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, poly_equal, Bindings};

    #[test]
    fn sin_squared_reduces() {
        let t = TrigPoly::from_expr(&parse("sin(theta)^2 + cos(theta)^2").unwrap()).unwrap();
        assert_eq!(t, TrigPoly::constant(1.0));
    }

    #[test]
    fn cartesian_substitution_of_radius_squared() {
        let p = Poly::from_expr(&parse("x^2 + y^2").unwrap()).unwrap();
        let t = TrigPoly::from_xy_poly(&p).unwrap();
        assert_eq!(t, TrigPoly::monomial((2, 0, 0), 1.0));
    }

    #[test]
    fn expression_round_trip() {
        let e = parse("r*(1 - r^2)*(r*cos(theta) + 0.5)/r^2 - sin(theta)^3").unwrap();
        let t = TrigPoly::from_expr(&e).unwrap();
        let back = t.to_expr();
        for i in 1..20 {
            let b = Bindings::polar(0.1 * i as f64, 0.37 * i as f64);
            let (u, v) = (e.eval(&b).unwrap(), back.eval(&b).unwrap());
            assert!((u - v).abs() < 1e-12 * (1.0 + u.abs()));
        }
        assert!(poly_equal(
            &laurent_to_expr(&[(1, 1.0), (3, -1.0)].into_iter().collect()),
            &parse("r - r^3").unwrap(),
            &[Var::R],
            None
        )
        .unwrap());
    }

    #[test]
    fn rejects_other_transcendentals() {
        assert!(TrigPoly::from_expr(&parse("exp(r)").unwrap()).is_err());
        assert!(TrigPoly::from_expr(&parse("cos(2*theta)").unwrap()).is_err());
        assert!(TrigPoly::from_expr(&parse("1/(1 + r)").unwrap()).is_err());
    }
}
