//! Radial-form classification of polar systems.
//!
//! The radial rate is split as
//!
//! - `r' = U0(r)` (pure radial),
//! - `r' = U0(r) U1(theta)` (separable), or
//! - `r' = U0(r) U2(r, theta)` (coupled).
//!
//! When `r'` is a polynomial in `r`, `cos(theta)`, `sin(theta)` the split is
//! found algebraically: group by angular monomial, `r' = sum_j A_j(r) T_j`,
//! and take `U0` as the greatest common divisor of the `A_j`. Anything else is
//! split structurally by looking at which variables each factor of the
//! top-level product mentions.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::PolarSystem;
use crate::expr::trig::{angular_monomial, laurent_to_expr, TrigPoly};
use crate::expr::{BinaryOp, Bindings, Expr, UnaryOp, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialKind {
    PureRadial,
    Separable,
    Coupled,
    Unclassified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialForm {
    pub kind: RadialKind,
    /// `U0(r)`; absent only when unclassified.
    pub upsilon0: Option<Expr>,
    /// `U1(theta)` for separable forms.
    pub upsilon1: Option<Expr>,
    /// `U2(r, theta)` for coupled forms.
    pub upsilon2: Option<Expr>,
    /// The angular rate `theta' = psi(r, theta)`.
    pub psi: Expr,
    pub diagnostic: Option<String>,
}

impl RadialForm {
    fn unclassified(p: &PolarSystem, why: impl Into<String>) -> Self {
        Self {
            kind: RadialKind::Unclassified,
            upsilon0: None,
            upsilon1: None,
            upsilon2: None,
            psi: p.thetadot.clone(),
            diagnostic: Some(why.into()),
        }
    }

    /// The product `U0 * U1` or `U0 * U2` the form claims equals `r'`.
    pub fn recombined(&self) -> Option<Expr> {
        let u0 = self.upsilon0.clone()?;
        Some(match self.kind {
            RadialKind::PureRadial => u0,
            RadialKind::Separable => u0 * self.upsilon1.clone()?,
            RadialKind::Coupled => u0 * self.upsilon2.clone()?,
            RadialKind::Unclassified => return None,
        })
    }
}

const GCD_TOL: f64 = 1e-9;
const CHECK_TOL: f64 = 1e-12;

/// Classify the radial rate of `p` into the most specific form that applies.
pub fn classify_radial_form(p: &PolarSystem) -> RadialForm {
    let form = match TrigPoly::from_expr(&p.rdot) {
        Ok(t) => algebraic(p, &t),
        Err(_) => structural(p),
    };
    match form.recombined() {
        Some(product) if !agrees(&product, &p.rdot) => RadialForm::unclassified(
            p,
            "factorization does not reproduce the radial rate pointwise",
        ),
        _ => form,
    }
}

fn agrees(a: &Expr, b: &Expr) -> bool {
    for i in 0..24 {
        for j in 0..32 {
            let bind = Bindings::polar(0.1 + 0.125 * i as f64, TAU * j as f64 / 32.0);
            match (a.eval(&bind), b.eval(&bind)) {
                (Ok(u), Ok(v)) if (u - v).abs() <= CHECK_TOL * (1.0 + u.abs().max(v.abs())) => {}
                (Err(_), Err(_)) => {}
                _ => return false,
            }
        }
    }
    true
}

fn algebraic(p: &PolarSystem, t: &TrigPoly) -> RadialForm {
    let groups = t.by_angle();
    if groups.is_empty() {
        return pure(p, Expr::zero());
    }
    if groups.len() == 1 && groups.contains_key(&(0, 0)) {
        return pure(p, laurent_to_expr(&groups[&(0, 0)]));
    }

    // common power of r, then the gcd of the remaining ordinary polynomials
    let shift = groups
        .values()
        .flat_map(|a| a.keys().copied())
        .min()
        .unwrap_or(0);
    let polys: Vec<Vec<f64>> = groups.values().map(|a| dense(a, shift)).collect();
    let mut g = polys[0].clone();
    for q in &polys[1..] {
        g = gcd(&g, q);
    }
    let lead = g.first().copied().unwrap_or(0.0);
    if g.is_empty() || lead == 0.0 {
        return RadialForm::unclassified(p, "no common radial factor");
    }
    let g: Vec<f64> = g.iter().map(|c| c / lead).collect();

    let mut quotients = BTreeMap::new();
    for (key, q) in groups.keys().zip(&polys) {
        match exact_div(q, &g) {
            Some(quot) => {
                quotients.insert(*key, quot);
            }
            None => return RadialForm::unclassified(p, "radial factor does not divide exactly"),
        }
    }

    let u0_coeffs: BTreeMap<i32, f64> = g
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| (i as i32 + shift, *c))
        .collect();
    if g.len() == 1 && shift == 0 {
        return RadialForm::unclassified(p, "no common radial factor");
    }
    let u0 = laurent_to_expr(&u0_coeffs);

    if quotients.values().all(|q| q.len() <= 1) {
        let u1 = quotients
            .iter()
            .filter(|(_, q)| !q.is_empty())
            .map(|((j, k), q)| Expr::Const(q[0]) * angular_monomial(*j, *k))
            .reduce(|a, b| a + b)
            .unwrap_or_else(Expr::zero);
        return separable(p, u0, u1);
    }

    let u2 = quotients
        .iter()
        .map(|((j, k), q)| {
            let radial: BTreeMap<i32, f64> =
                q.iter().enumerate().map(|(i, c)| (i as i32, *c)).collect();
            laurent_to_expr(&radial) * angular_monomial(*j, *k)
        })
        .reduce(|a, b| a + b)
        .unwrap_or_else(Expr::zero);
    RadialForm {
        kind: RadialKind::Coupled,
        upsilon0: Some(u0),
        upsilon1: None,
        upsilon2: Some(u2),
        psi: p.thetadot.clone(),
        diagnostic: None,
    }
}

fn pure(p: &PolarSystem, u0: Expr) -> RadialForm {
    RadialForm {
        kind: RadialKind::PureRadial,
        upsilon0: Some(u0),
        upsilon1: None,
        upsilon2: None,
        psi: p.thetadot.clone(),
        diagnostic: None,
    }
}

/// Separable form, with the sign moved into `U0` when `U1` is never positive.
fn separable(p: &PolarSystem, u0: Expr, u1: Expr) -> RadialForm {
    let samples: Vec<f64> = (0..1024)
        .filter_map(|k| u1.eval(&Bindings::polar(1.0, TAU * k as f64 / 1024.0)).ok())
        .collect();
    let never_positive = samples.iter().all(|v| *v <= 0.0);
    let somewhere_negative = samples.iter().any(|v| *v < 0.0);
    let (u0, u1) = if never_positive && somewhere_negative {
        (-u0, -u1)
    } else {
        (u0, u1)
    };
    RadialForm {
        kind: RadialKind::Separable,
        upsilon0: Some(u0),
        upsilon1: Some(u1),
        upsilon2: None,
        psi: p.thetadot.clone(),
        diagnostic: None,
    }
}

fn structural(p: &PolarSystem) -> RadialForm {
    let mut factors = Vec::new();
    flatten_product(&p.rdot, &mut factors);
    let mut radial = Vec::new();
    let mut angular = Vec::new();
    let mut mixed = Vec::new();
    for f in factors {
        match (f.contains(Var::R), f.contains(Var::Theta)) {
            (true, true) => mixed.push(f),
            (false, true) => angular.push(f),
            _ => radial.push(f),
        }
    }
    let product = |v: Vec<Expr>| v.into_iter().reduce(|a, b| a * b);
    let has_r = radial.iter().any(|f| f.contains(Var::R));
    match (has_r, angular.is_empty(), mixed.is_empty()) {
        (_, true, true) => pure(p, product(radial).unwrap_or_else(Expr::one)),
        (true, false, true) => separable(
            p,
            product(radial).unwrap_or_else(Expr::one),
            product(angular).unwrap_or_else(Expr::one),
        ),
        (true, _, false) => {
            let mut rest = angular;
            rest.extend(mixed);
            RadialForm {
                kind: RadialKind::Coupled,
                upsilon0: product(radial),
                upsilon1: None,
                upsilon2: product(rest),
                psi: p.thetadot.clone(),
                diagnostic: None,
            }
        }
        (false, ..) => RadialForm::unclassified(
            p,
            "radial rate has no factor depending on r alone; algebraic factoring was not possible",
        ),
    }
}

fn flatten_product(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Binary(BinaryOp::Mul, a, b) => {
            flatten_product(a, out);
            flatten_product(b, out);
        }
        Expr::Binary(BinaryOp::Div, a, b) if !b.contains(Var::R) && !b.contains(Var::Theta) => {
            flatten_product(a, out);
            out.push(Expr::one() / (**b).clone());
        }
        Expr::Unary(UnaryOp::Neg, a) => {
            out.push(Expr::Const(-1.0));
            flatten_product(a, out);
        }
        _ => out.push(e.clone()),
    }
}

// Dense ascending coefficients of r^(i - shift).
fn dense(a: &BTreeMap<i32, f64>, shift: i32) -> Vec<f64> {
    let top = a.keys().max().copied().unwrap_or(shift);
    let mut v = vec![0.0; (top - shift + 1) as usize];
    for (i, c) in a {
        v[(i - shift) as usize] = *c;
    }
    v
}

fn scale_of(p: &[f64]) -> f64 {
    p.iter().fold(0.0, |m: f64, c| m.max(c.abs()))
}

fn trim(p: &mut Vec<f64>, tol: f64) {
    while p.last().is_some_and(|c| c.abs() <= tol) {
        p.pop();
    }
}

/// Remainder of `a / b` for ascending coefficient vectors.
fn rem(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db];
    while r.len() > db {
        let k = r.len() - 1;
        let q = r[k] / lead;
        for (i, bc) in b.iter().enumerate() {
            r[k - db + i] -= q * bc;
        }
        r.pop();
    }
    r
}

fn gcd(a: &[f64], b: &[f64]) -> Vec<f64> {
    let tol = GCD_TOL * scale_of(a).max(scale_of(b));
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    trim(&mut a, tol);
    trim(&mut b, tol);
    while !b.is_empty() {
        let mut r = rem(&a, &b);
        trim(&mut r, tol.max(GCD_TOL * scale_of(&a)));
        a = b;
        b = r;
    }
    a
}

/// Quotient when `b` divides `a` up to rounding.
fn exact_div(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    if a.len() < b.len() {
        return if scale_of(a) == 0.0 { Some(Vec::new()) } else { None };
    }
    let db = b.len() - 1;
    let mut r = a.to_vec();
    let mut q = vec![0.0; a.len() - db];
    for k in (db..a.len()).rev() {
        let c = r[k] / b[db];
        q[k - db] = c;
        for (i, bc) in b.iter().enumerate() {
            r[k - db + i] -= c * bc;
        }
    }
    let tol = GCD_TOL * scale_of(a).max(1e-300);
    if r.iter().any(|c| c.abs() > tol) {
        return None;
    }
    let mut q = q;
    for c in &mut q {
        if c.abs() <= tol * 1e-3 {
            *c = 0.0;
        }
    }
    trim(&mut q, 0.0);
    Some(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, poly_equal, SampleGrid};
    use crate::system::{to_polar, PlanarSystem};

    fn check(e: &Option<Expr>, text: &str) {
        let grid = SampleGrid::new()
            .axis(Var::R, 0.05, 3.0, 23)
            .axis(Var::Theta, 0.0, 6.28, 19);
        let expected = parse(text).unwrap();
        assert!(
            poly_equal(e.as_ref().unwrap(), &expected, &[], Some(&grid)).unwrap(),
            "{} != {text}",
            e.as_ref().unwrap()
        );
    }

    #[test]
    fn pure_radial_circle_system() {
        let f = classify_radial_form(&PolarSystem::parse("r - r^3", "1").unwrap());
        assert_eq!(f.kind, RadialKind::PureRadial);
        check(&f.upsilon0, "r - r^3");
    }

    #[test]
    fn separable_vibration_system() {
        let f = classify_radial_form(
            &PolarSystem::parse("r*(1 - r^2)*cos(theta)^2", "-1 - cos(theta)*sin(theta)").unwrap(),
        );
        assert_eq!(f.kind, RadialKind::Separable);
        check(&f.upsilon0, "r*(1 - r^2)");
        check(&f.upsilon1, "cos(theta)^2");
    }

    #[test]
    fn coupled_cross_term_system() {
        let f = classify_radial_form(
            &PolarSystem::parse("r*(1 - r^2)*(r*cos(theta) + 0.5)", "1").unwrap(),
        );
        assert_eq!(f.kind, RadialKind::Coupled);
        check(&f.upsilon0, "r*(1 - r^2)");
        check(&f.upsilon2, "r*cos(theta) + 0.5");
    }

    #[test]
    fn classification_after_cartesian_conversion() {
        let circle = PlanarSystem::parse("-y + x*(1 - (x^2 + y^2))", "x + y*(1 - (x^2 + y^2))").unwrap();
        assert_eq!(classify_radial_form(&to_polar(&circle)).kind, RadialKind::PureRadial);
        let vib = PlanarSystem::parse("y + x - x^3", "-x^2*y - x").unwrap();
        assert_eq!(classify_radial_form(&to_polar(&vib)).kind, RadialKind::Separable);
        let coupled = PlanarSystem::parse(
            "x*(1 - x^2 - y^2)*(x + 1/2) - y",
            "y*(1 - x^2 - y^2)*(x + 1/2) + x",
        )
        .unwrap();
        let f = classify_radial_form(&to_polar(&coupled));
        assert_eq!(f.kind, RadialKind::Coupled);
        check(&f.upsilon0, "r - r^3");
    }

    #[test]
    fn structural_fallback() {
        let f = classify_radial_form(&PolarSystem::parse("exp(-r)*(1 - r)*sin(theta)^2", "1").unwrap());
        assert_eq!(f.kind, RadialKind::Separable);
        check(&f.upsilon0, "exp(-r)*(1 - r)");

        let f = classify_radial_form(&PolarSystem::parse("(1 - r)*exp(r*cos(theta))", "1").unwrap());
        assert_eq!(f.kind, RadialKind::Coupled);
        check(&f.upsilon0, "1 - r");

        let f = classify_radial_form(&PolarSystem::parse("exp(r*cos(theta))", "1").unwrap());
        assert_eq!(f.kind, RadialKind::Unclassified);
        assert!(f.diagnostic.is_some());
    }

    #[test]
    fn no_common_factor_is_unclassified() {
        let f = classify_radial_form(&PolarSystem::parse("1 + cos(theta)", "1").unwrap());
        assert_eq!(f.kind, RadialKind::Unclassified);
        let f = classify_radial_form(&PolarSystem::parse("r^2 - 1 + cos(theta)", "1").unwrap());
        assert_eq!(f.kind, RadialKind::Unclassified);
    }

    #[test]
    fn negative_angular_factor_moves_sign() {
        let f = classify_radial_form(&PolarSystem::parse("-(r - r^3)*cos(theta)^2", "1").unwrap());
        assert_eq!(f.kind, RadialKind::Separable);
        check(&f.upsilon0, "r^3 - r");
        check(&f.upsilon1, "cos(theta)^2");
    }

    #[test]
    fn zero_rate_is_pure_radial() {
        let f = classify_radial_form(&PolarSystem::parse("0", "1").unwrap());
        assert_eq!(f.kind, RadialKind::PureRadial);
        assert!(f.upsilon0.unwrap().is_zero());
    }

    #[test]
    fn polynomial_gcd() {
        // (1 - r)(2 + r) and (1 - r)(3 - r^2)
        let a = [2.0, -1.0, -1.0];
        let b = [3.0, -3.0, -1.0, 1.0];
        let g = gcd(&a, &b);
        assert_eq!(g.len(), 2);
        assert!((g[1] / g[0] + 1.0).abs() < 1e-12);
        assert!(exact_div(&b, &g).is_some());
        assert!(exact_div(&[1.0, 0.0, 1.0], &[1.0, 1.0]).is_none());
    }
}
