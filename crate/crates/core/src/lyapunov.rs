//! Radial potentials `phi(r) = -int U0`, their Cartesian form and checks of the
//! two Lyapunov conditions (bounded below, non-increasing along trajectories).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycle::find_cycle_radii;
use crate::expr::{antiderivative_poly, Bindings, EvalError, Expr, Poly, Var};
use crate::system::{PlanarSystem, Transform, Window};

pub const QUADRATURE_NODES: usize = 2048;
pub const QUADRATURE_TOL: f64 = 1e-12;
pub const DESCENT_TOL: f64 = 1e-9;
pub const ANGULAR_SAMPLES: usize = 1024;
const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error("potential has odd powers of r (degree {degree}); its Cartesian form is not smooth at the origin")]
    OddPowers { degree: u32 },
    #[error("potential was built numerically and has no symbolic form")]
    NotSymbolic,
    #[error("radial factor must depend on r only, found `{0}`")]
    NotRadial(Var),
    #[error("r_max must be positive and finite, got {0}")]
    InvalidRange(f64),
    #[error("quadrature failed near r = {at}: {reason}")]
    Quadrature { at: f64, reason: String },
    #[error("r = {0} is outside the tabulated range")]
    OutOfRange(f64),
    #[error("evaluation failed at ({x}, {y}): {source}")]
    Eval {
        x: f64,
        y: f64,
        #[source]
        source: EvalError,
    },
    #[error("grid needs n >= 2 and a non-empty window")]
    InvalidGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Symbolic,
    Numeric,
}

/// `phi` tabulated on uniform nodes of `[0, r_max]`, cubic Hermite between nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialTable {
    pub r_max: f64,
    pub values: Vec<f64>,
    /// `phi'(node) = -U0(node)`.
    pub slopes: Vec<f64>,
}

impl PotentialTable {
    pub fn eval(&self, r: f64) -> Option<f64> {
        if !(0.0..=self.r_max).contains(&r) {
            return None;
        }
        let n = self.values.len() - 1;
        let h = self.r_max / n as f64;
        let i = ((r / h) as usize).min(n - 1);
        let t = (r - i as f64 * h) / h;
        let (t2, t3) = (t * t, t * t * t);
        Some(
            (2.0 * t3 - 3.0 * t2 + 1.0) * self.values[i]
                + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
                + (-2.0 * t3 + 3.0 * t2) * self.values[i + 1]
                + (t3 - t2) * h * self.slopes[i + 1],
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    pub construction: Construction,
    /// `phi(r)`, for symbolic construction.
    pub phi_r: Option<Expr>,
    pub table: Option<PotentialTable>,
    /// Cartesian form, once `to_cartesian` has succeeded.
    pub phi_xy: Option<Expr>,
    pub r_max: f64,
    /// Bound on `|phi - exact|` for numeric construction, zero otherwise.
    pub error_bound: f64,
}

impl Potential {
    pub fn eval_r(&self, r: f64) -> Result<f64, LyapunovError> {
        match (&self.phi_r, &self.table) {
            (Some(e), _) => e.eval(&Bindings::new().with(Var::R, r)).map_err(|source| {
                LyapunovError::Eval {
                    x: r,
                    y: 0.0,
                    source,
                }
            }),
            (None, Some(t)) => t.eval(r).ok_or(LyapunovError::OutOfRange(r)),
            (None, None) => Err(LyapunovError::NotSymbolic),
        }
    }

    /// `phi(sqrt(x^2 + y^2))`, usable for either construction.
    pub fn eval_xy(&self, x: f64, y: f64) -> Result<f64, LyapunovError> {
        self.eval_r(x.hypot(y))
    }

    /// Smallest sampled value on `[0, r_max]` and where it occurs.
    pub fn minimum(&self, samples: usize) -> Result<(f64, f64), LyapunovError> {
        let n = samples.max(2);
        let mut best = (0.0, f64::INFINITY);
        for i in 0..n {
            let r = self.r_max * i as f64 / (n - 1) as f64;
            let v = self.eval_r(r)?;
            if v < best.1 {
                best = (r, v);
            }
        }
        Ok(best)
    }
}

fn check_radial(u0: &Expr, r_max: f64) -> Result<(), LyapunovError> {
    if let Some(v) = u0.free_vars().into_iter().find(|v| *v != Var::R) {
        return Err(LyapunovError::NotRadial(v));
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(LyapunovError::InvalidRange(r_max));
    }
    Ok(())
}

/// `phi(r) = -int_0^r U0(s) ds`: exact for polynomial `U0`, tabulated otherwise.
pub fn construct_potential(u0: &Expr, r_max: f64) -> Result<Potential, LyapunovError> {
    check_radial(u0, r_max)?;
    if let Ok(anti) = antiderivative_poly(u0, Var::R) {
        let phi = (-anti).canonical();
        return Ok(Potential {
            construction: Construction::Symbolic,
            phi_r: Some(phi),
            table: None,
            phi_xy: None,
            r_max,
            error_bound: 0.0,
        });
    }
    construct_numeric(u0, r_max)
}

/// Numeric construction regardless of whether `U0` is polynomial.
pub fn construct_numeric(u0: &Expr, r_max: f64) -> Result<Potential, LyapunovError> {
    check_radial(u0, r_max)?;
    let f = |r: f64| -> Result<f64, LyapunovError> {
        match u0.eval(&Bindings::new().with(Var::R, r)) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(v) => Err(LyapunovError::Quadrature {
                at: r,
                reason: format!("integrand is {v}"),
            }),
            Err(e) => Err(LyapunovError::Quadrature {
                at: r,
                reason: e.to_string(),
            }),
        }
    };
    let n = QUADRATURE_NODES - 1;
    let h = r_max / n as f64;
    let node = |i: usize| if i == n { r_max } else { h * i as f64 };
    let pieces: Vec<Result<(f64, f64, f64), LyapunovError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (node(i), node(i + 1));
            let (whole, e1) = integrate(&f, a, b, QUADRATURE_TOL / n as f64)?;
            // halfway value checks how well the cubic reproduces the integral
            let (half, e2) = integrate(&f, a, 0.5 * (a + b), QUADRATURE_TOL / n as f64)?;
            Ok((whole, half, e1 + e2))
        })
        .collect();
    // first failure in radius order, independent of scheduling
    let pieces: Vec<(f64, f64, f64)> = pieces.into_iter().collect::<Result<_, _>>()?;

    let mut values = Vec::with_capacity(n + 1);
    let mut slopes = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    let mut quad_err = 0.0;
    values.push(0.0);
    for (whole, _, e) in &pieces {
        acc -= whole;
        quad_err += e;
        values.push(acc);
    }
    for i in 0..=n {
        slopes.push(-f(node(i))?);
    }
    let table = PotentialTable {
        r_max,
        values,
        slopes,
    };
    let mut interp_err: f64 = 0.0;
    for (i, (_, half, _)) in pieces.iter().enumerate() {
        let mid = 0.5 * (node(i) + node(i + 1));
        let direct = table.values[i] - half;
        interp_err = interp_err.max((table.eval(mid).unwrap_or(f64::NAN) - direct).abs());
    }
    Ok(Potential {
        construction: Construction::Numeric,
        phi_r: None,
        table: Some(table),
        phi_xy: None,
        r_max,
        error_bound: quad_err + interp_err,
    })
}

type Integrand<'a> = dyn Fn(f64) -> Result<f64, LyapunovError> + 'a;

fn integrate(f: &Integrand<'_>, a: f64, b: f64, tol: f64) -> Result<(f64, f64), LyapunovError> {
    let (fa, fm, fb) = (f(a)?, f(0.5 * (a + b))?, f(b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &Integrand<'_>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<(f64, f64), LyapunovError> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    let exhausted = depth == 0 || (b - a) <= 4.0 * f64::EPSILON * m.abs().max(1.0);
    if !delta.is_finite() {
        return Err(LyapunovError::Quadrature {
            at: m,
            reason: "non-finite estimate".into(),
        });
    }
    // at the resolution limit only integrand noise is tolerated, not a
    // difference of the size of the integral itself
    if delta.abs() <= (15.0 * tol).max(floor)
        || (exhausted && delta.abs() <= 1e-6 * (left + right).abs().max(1.0))
    {
        return Ok((left + right + delta / 15.0, delta.abs() / 15.0));
    }
    if exhausted {
        return Err(LyapunovError::Quadrature {
            at: m,
            reason: "subdivision limit reached; integrand is not integrable here".into(),
        });
    }
    let (l, el) = simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let (r, er) = simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok((l + r, el + er))
}

/// Rewrite a symbolic `phi(r)` with `r^2 = x^2 + y^2`.
///
/// Odd powers of `r` are refused unless `allow_non_smooth` is set, in which
/// case they become powers of `sqrt(x^2 + y^2)`.
pub fn to_cartesian(p: &Potential, allow_non_smooth: bool) -> Result<Expr, LyapunovError> {
    let phi = p.phi_r.as_ref().ok_or(LyapunovError::NotSymbolic)?;
    let poly = Poly::from_expr(phi).map_err(|_| LyapunovError::NotSymbolic)?;
    let by_r = poly.collect(Var::R);
    if let Some((&degree, _)) = by_r.iter().find(|(k, c)| *k % 2 == 1 && !c.is_zero()) {
        if !allow_non_smooth {
            return Err(LyapunovError::OddPowers { degree });
        }
    }
    let s = Poly::var(Var::X).powu(2).add(&Poly::var(Var::Y).powu(2));
    let mut even = Poly::zero();
    let mut odd = Expr::zero();
    for (k, c) in &by_r {
        if k % 2 == 0 {
            even = even.add(&s.powu(k / 2).mul(c));
        } else {
            let root = s.to_expr().sqrt().powi(*k as i32);
            odd = odd + c.to_expr() * root;
        }
    }
    Ok(even.to_expr() + odd)
}

/// Potential with its Cartesian form filled in.
pub fn with_cartesian(mut p: Potential, allow_non_smooth: bool) -> Result<Potential, LyapunovError> {
    p.phi_xy = Some(to_cartesian(&p, allow_non_smooth)?);
    Ok(p)
}

/// `phi_x fx + phi_y fy`.
pub fn lie_derivative(phi: &Expr, s: &PlanarSystem) -> Expr {
    (phi.diff(Var::X) * s.fx.clone() + phi.diff(Var::Y) * s.fy.clone()).canonical()
}

/// `phi(u(x, y), v(x, y))` for `phi` written in transformed coordinates.
pub fn compose_with_inverse(phi: &Expr, t: &Transform) -> Expr {
    t.pull_back(phi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub window: Window,
    pub n: usize,
    pub min_phi: f64,
    pub argmin: (f64, f64),
    pub max_lie: f64,
    pub argmax: (f64, f64),
    pub pass: bool,
    /// Grid points with `|phi'| <= 1e-9`.
    pub stationary: Vec<(f64, f64)>,
}

/// Sample `phi` and its Lie derivative on an `n x n` grid.
pub fn verify_lyapunov(
    phi: &Expr,
    s: &PlanarSystem,
    window: Window,
    n: usize,
) -> Result<LyapunovReport, LyapunovError> {
    if n < 2 || !window.is_valid() {
        return Err(LyapunovError::InvalidGrid);
    }
    let lie = lie_derivative(phi, s);
    let samples: Vec<(f64, f64, f64, f64)> = window
        .grid(n, n)
        .into_par_iter()
        .map(|(x, y)| {
            let b = Bindings::xy(x, y);
            let err = |source| LyapunovError::Eval { x, y, source };
            Ok((x, y, phi.eval(&b).map_err(err)?, lie.eval(&b).map_err(err)?))
        })
        .collect::<Result<_, LyapunovError>>()?;
    let mut report = LyapunovReport {
        window,
        n,
        min_phi: f64::INFINITY,
        argmin: (0.0, 0.0),
        max_lie: f64::NEG_INFINITY,
        argmax: (0.0, 0.0),
        pass: false,
        stationary: Vec::new(),
    };
    for &(x, y, p, l) in &samples {
        if p < report.min_phi {
            report.min_phi = p;
            report.argmin = (x, y);
        }
        if l > report.max_lie {
            report.max_lie = l;
            report.argmax = (x, y);
        }
        if l.abs() <= DESCENT_TOL {
            report.stationary.push((x, y));
        }
    }
    report.pass = report.max_lie <= DESCENT_TOL;
    Ok(report)
}

/// Global lower bound for a polynomial `phi(r)` on `r >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfimumCertificate {
    pub degree: u32,
    pub leading_coefficient: f64,
    /// `phi` at `r = 0` and at every positive critical point; the infimum is their minimum.
    pub candidates: Vec<(f64, f64)>,
    pub infimum: f64,
    pub argmin: f64,
}

/// A certificate exists when the leading coefficient is positive (or `phi` is
/// constant): `phi` then grows without bound and attains its infimum at `0` or a
/// critical point.
pub fn infimum_certificate(phi_r: &Expr) -> Option<InfimumCertificate> {
    let poly = Poly::from_expr(phi_r).ok()?;
    if poly.vars().iter().any(|v| *v != Var::R) {
        return None;
    }
    let by_r = poly.collect(Var::R);
    let coeff = |k: u32| by_r.get(&k).and_then(Poly::as_constant).unwrap_or(0.0);
    let degree = by_r.keys().copied().max().unwrap_or(0);
    let lead = coeff(degree);
    let at = |r: f64| poly.eval(&Bindings::new().with(Var::R, r)).ok();
    let mut candidates = vec![(0.0, at(0.0)?)];
    if degree > 0 {
        if lead <= 0.0 {
            return None;
        }
        // Cauchy bound on the positive critical points
        let bound = 1.0
            + (1..degree)
                .map(|k| (k as f64 * coeff(k) / (degree as f64 * lead)).abs())
                .fold(0.0, f64::max);
        let slope = phi_r.diff(Var::R).canonical();
        for c in find_cycle_radii(&slope, bound + 1.0).ok()? {
            candidates.push((c.radius, at(c.radius)?));
        }
    }
    let (argmin, infimum) = candidates
        .iter()
        .copied()
        .fold((0.0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    Some(InfimumCertificate {
        degree,
        leading_coefficient: lead,
        candidates,
        infimum,
        argmin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularCheck {
    pub min: f64,
    pub argmin: f64,
    pub nonnegative: bool,
}

/// Sample `U1(theta)` on `[0, 2 pi)`; descent needs `U1 >= 0`.
pub fn check_angular_factor(u1: &Expr) -> Result<AngularCheck, LyapunovError> {
    let mut out = AngularCheck {
        min: f64::INFINITY,
        argmin: 0.0,
        nonnegative: true,
    };
    for i in 0..ANGULAR_SAMPLES {
        let theta = std::f64::consts::TAU * i as f64 / ANGULAR_SAMPLES as f64;
        let v = u1
            .eval(&Bindings::new().with(Var::Theta, theta))
            .map_err(|source| LyapunovError::Eval {
                x: theta,
                y: 0.0,
                source,
            })?;
        if v < out.min {
            out.min = v;
            out.argmin = theta;
        }
    }
    out.nonnegative = out.min >= -DESCENT_TOL;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, poly_equal, poly_equal_with_tol, SampleGrid};
    use crate::system::invert_transform;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn same_r(a: &Expr, b: &str) -> bool {
        poly_equal(a, &p(b), &[Var::R], None).unwrap()
    }

    fn same_xy(a: &Expr, b: &str) -> bool {
        poly_equal(a, &p(b), &[Var::X, Var::Y], None).unwrap()
    }

    fn circle() -> PlanarSystem {
        PlanarSystem::parse("-y + x*(1 - (x^2 + y^2))", "x + y*(1 - (x^2 + y^2))").unwrap()
    }

    #[test]
    fn symbolic_potentials() {
        let phi = construct_potential(&p("r - r^3"), 10.0).unwrap();
        assert_eq!(phi.construction, Construction::Symbolic);
        assert!(same_r(phi.phi_r.as_ref().unwrap(), "(r^2/4)*(r^2 - 2)"));

        let zero = construct_potential(&Expr::zero(), 10.0).unwrap();
        assert!(zero.phi_r.unwrap().is_zero());

        let u0 = p("r*(4 - r^2)");
        let phi = construct_potential(&u0, 10.0).unwrap().phi_r.unwrap();
        assert!(same_r(&phi, "r^4/4 - 2*r^2"));
        assert!(same_r(&(phi.diff(Var::R) + u0), "0"));
    }

    #[test]
    fn numeric_potential_matches_closed_form() {
        let u0 = p("r*exp(-r) - r^3*exp(-r)");
        let phi = construct_potential(&u0, 4.0).unwrap();
        assert_eq!(phi.construction, Construction::Numeric);
        assert!(phi.error_bound < 1e-9, "{}", phi.error_bound);
        // int_0^r (s - s^3) e^{-s} ds by parts
        let exact = |r: f64| {
            let a = 1.0 - (-r).exp() * (1.0 + r);
            let b = 6.0 - (-r).exp() * (r.powi(3) + 3.0 * r * r + 6.0 * r + 6.0);
            -(a - b)
        };
        for r in [0.0, 0.37, 1.0, 2.2, 3.999, 4.0] {
            assert!((phi.eval_r(r).unwrap() - exact(r)).abs() < 1e-9, "r = {r}");
        }
        assert!(phi.eval_r(4.5).is_err());
        assert!(matches!(to_cartesian(&phi, false), Err(LyapunovError::NotSymbolic)));
    }

    #[test]
    fn numeric_matches_symbolic_on_polynomials() {
        let u0 = p("r - r^3");
        let num = construct_numeric(&u0, 3.0).unwrap();
        for r in [0.1, 1.0, 2.9] {
            assert!((num.eval_r(r).unwrap() - (r.powi(4) / 4.0 - r * r / 2.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn quadrature_reports_singularity() {
        let err = construct_potential(&p("1/(r - 1)^2"), 2.0).unwrap_err();
        match err {
            LyapunovError::Quadrature { at, reason } => assert!((at - 1.0).abs() < 1e-3, "{at} {reason}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cartesian_forms() {
        let phi = construct_potential(&p("r - r^3"), 10.0).unwrap();
        let xy = to_cartesian(&phi, false).unwrap();
        assert!(same_xy(&xy, "(1/4)*(x^2 + y^2)*(x^2 + y^2 - 2)"));

        let zero = construct_potential(&Expr::zero(), 10.0).unwrap();
        assert!(to_cartesian(&zero, false).unwrap().is_zero());

        let odd = construct_potential(&p("-r^2"), 10.0).unwrap();
        assert_eq!(to_cartesian(&odd, false), Err(LyapunovError::OddPowers { degree: 3 }));
        let forced = to_cartesian(&odd, true).unwrap();
        let v = forced.eval(&Bindings::xy(0.6, 0.8)).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn lie_derivative_of_circle_potential() {
        let phi = p("(1/4)*(x^2 + y^2)*(x^2 + y^2 - 2)");
        let lie = lie_derivative(&phi, &circle());
        assert!(same_xy(&lie, "-(x^2 + y^2)*(x^2 + y^2 - 1)^2"));
        assert!(lie_derivative(&p("3"), &circle()).is_zero());
    }

    #[test]
    fn lie_derivative_of_vibration_potential() {
        let s = PlanarSystem::parse("y", "-(4*x^2 - 1)*y - x + x^3 - x^5").unwrap();
        let phi = p("(1/4)*(x^2 + (y - x + x^3)^2)*(x^2 + (y - x + x^3)^2 - 2)");
        let lie = lie_derivative(&phi, &s);
        // -r^2 (1 - r^2)^2 cos^2(theta) in the rectified coordinates u = x, v = y - x + x^3
        let expected = p("-x^2*(1 - x^2 - (y - x + x^3)^2)^2");
        let grid = SampleGrid::new()
            .axis(Var::X, -1.5, 1.5, 31)
            .axis(Var::Y, -1.5, 1.5, 31);
        assert!(poly_equal_with_tol(&lie, &expected, &grid, 1e-10).unwrap());
    }

    #[test]
    fn verify_circle_potential() {
        let phi = p("(1/4)*(x^2 + y^2)*(x^2 + y^2 - 2)");
        let rep = verify_lyapunov(&phi, &circle(), Window::square(2.0), 101).unwrap();
        assert!(rep.pass);
        assert!((rep.min_phi + 0.25).abs() < 1e-12);
        assert!(!rep.stationary.is_empty());
        for (x, y) in &rep.stationary {
            let r = x.hypot(*y);
            assert!(r < 1e-6 || (r - 1.0).abs() < 0.05, "({x}, {y})");
        }
        assert!(rep.stationary.contains(&(0.0, 0.0)) && rep.stationary.contains(&(1.0, 0.0)));
    }

    #[test]
    fn verify_quadratic_bowl() {
        let s = PlanarSystem::parse("-x", "-y").unwrap();
        let rep = verify_lyapunov(&p("x^2 + y^2"), &s, Window::square(1.0), 11).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.stationary, vec![(0.0, 0.0)]);
        let rep = verify_lyapunov(&p("-(x^2 + y^2)"), &s, Window::square(1.0), 11).unwrap();
        assert!(!rep.pass);
        assert!(rep.max_lie > 0.0);
        assert!(verify_lyapunov(&p("x"), &s, Window::square(1.0), 1).is_err());
    }

    #[test]
    fn compose_potential_with_transform() {
        let t = invert_transform(&p("x"), &p("y - x + x^3")).unwrap();
        let phi_uv = p("(1/4)*(x^2 + y^2)*(x^2 + y^2 - 2)");
        let phi = compose_with_inverse(&phi_uv, &t);
        assert!(same_xy(&phi, "(1/4)*(x^2 + (y - x + x^3)^2)*(x^2 + (y - x + x^3)^2 - 2)"));

        assert!(same_xy(&compose_with_inverse(&phi_uv, &Transform::identity()), "(1/4)*(x^2 + y^2)*(x^2 + y^2 - 2)"));

        let t = invert_transform(&p("x"), &p("y + 2*x^2")).unwrap();
        let there = compose_with_inverse(&phi_uv, &t);
        let back = compose_with_inverse(&there, &t.inverted());
        let grid = SampleGrid::default_for(&[Var::X, Var::Y]);
        assert!(poly_equal_with_tol(&back, &phi_uv, &grid, 1e-10).unwrap());
    }

    #[test]
    fn infimum_certificates() {
        let c = infimum_certificate(&p("r^4/4 - r^2/2")).unwrap();
        assert_eq!(c.degree, 4);
        assert!((c.infimum + 0.25).abs() < 1e-12);
        assert!((c.argmin - 1.0).abs() < 1e-10);
        assert!(infimum_certificate(&p("-r^4")).is_none());
        assert_eq!(infimum_certificate(&p("2")).unwrap().infimum, 2.0);
    }

    #[test]
    fn angular_factor_sign() {
        assert!(check_angular_factor(&p("cos(theta)^2")).unwrap().nonnegative);
        let c = check_angular_factor(&p("cos(theta)")).unwrap();
        assert!(!c.nonnegative);
        assert!((c.min + 1.0).abs() < 1e-12);
    }
}
