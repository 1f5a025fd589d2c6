//! Limit-cycle radii as positive zeros of the radial factor `U0(r)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Bindings, EvalError, Expr, Var};
use crate::ode::{integrate_adaptive, OdeError, DEFAULT_ATOL, DEFAULT_RTOL};
use crate::system::PolarSystem;

pub const DEFAULT_R_MAX: f64 = 10.0;
pub const SCAN_START: f64 = 1e-6;
pub const BRACKETS: usize = 10_000;
pub const ROOT_TOL: f64 = 1e-12;
const TANGENT_CANDIDATE: f64 = 1e-8;
const REVOLUTIONS: usize = 10;
const THETA_DOT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CycleError {
    #[error("radial factor must depend on r only, found `{0}`")]
    NotRadial(Var),
    #[error("r_max must be positive and finite, got {0}")]
    InvalidRange(f64),
    #[error("delta must satisfy 0 <= delta < r*/2, got {delta} for r* = {radius}")]
    InvalidDelta { delta: f64, radius: f64 },
    #[error("theta' comes within {value:e} of zero at r = {r}, theta = {theta}; the return map is undefined")]
    ThetaDotVanishes { r: f64, theta: f64, value: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Stable,
    Unstable,
    SemiStable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    pub radius: f64,
    pub stability: Stability,
    /// `|U0(r*)|`.
    pub residual: f64,
    /// `U0'(r*)`.
    pub derivative: f64,
    pub warning: Option<String>,
}

struct Radial<'a> {
    u0: &'a Expr,
    du0: Expr,
}

impl Radial<'_> {
    fn at(&self, r: f64) -> f64 {
        self.u0.eval(&Bindings::new().with(Var::R, r)).unwrap_or(f64::NAN)
    }

    fn slope(&self, r: f64) -> f64 {
        self.du0.eval(&Bindings::new().with(Var::R, r)).unwrap_or(f64::NAN)
    }
}

/// Bisection safeguarded secant on a sign-changing bracket of `f`.
fn refine_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    for _ in 0..200 {
        let width = b - a;
        let best = if fa.abs() < fb.abs() { a } else { b };
        let fbest = fa.abs().min(fb.abs());
        if width <= ROOT_TOL && fbest <= ROOT_TOL {
            return best;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            return best;
        }
        let secant = b - fb * (b - a) / (fb - fa);
        // the secant point is only trusted well inside the bracket
        let inner = a + 0.1 * width..=b - 0.1 * width;
        let c = if secant.is_finite() && inner.contains(&secant) && width > ROOT_TOL {
            secant
        } else {
            mid
        };
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc.signum() == fa.signum() {
            a = c;
            fa = fc;
        } else {
            b = c;
            fb = fc;
        }
        // keep halving alongside the secant step so the width always falls
        let m = 0.5 * (a + b);
        if m > a && m < b && b - a > ROOT_TOL {
            let fm = f(m);
            if fm == 0.0 {
                return m;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

/// Golden-section minimum of `|f|` on `[a, b]`.
fn minimize_abs(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c).abs(), f(d).abs());
    while b - a > ROOT_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c).abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d).abs();
        }
        if c >= d {
            break;
        }
    }
    0.5 * (a + b)
}

fn classify(u: &Radial<'_>, r: f64, tangential: bool) -> LimitCycle {
    let residual = u.at(r).abs();
    let derivative = u.slope(r);
    let mut warning = None;
    let stability = if derivative < -ROOT_TOL {
        Stability::Stable
    } else if derivative > ROOT_TOL {
        Stability::Unstable
    } else {
        // higher-order zero: read the sign of U0 on either side
        let h = (1e-4 * r).max(1e-6);
        let (left, right) = (u.at(r - h), u.at(r + h));
        let s = if left > 0.0 && right < 0.0 {
            Stability::Stable
        } else if left < 0.0 && right > 0.0 {
            Stability::Unstable
        } else {
            Stability::SemiStable
        };
        warning = Some(format!(
            "degenerate zero (U0' = {derivative:e}); stability read from the sign of U0 on both sides"
        ));
        s
    };
    if tangential && warning.is_none() {
        warning = Some("tangential zero found from a local minimum of |U0|".into());
    }
    if residual > ROOT_TOL {
        warning = Some(format!(
            "residual {residual:e} above {ROOT_TOL:e} at floating-point resolution"
        ));
    }
    LimitCycle {
        radius: r,
        stability,
        residual,
        derivative,
        warning,
    }
}

/// Positive zeros of `u0` on `(1e-6, r_max]`, sorted by radius.
pub fn find_cycle_radii(u0: &Expr, r_max: f64) -> Result<Vec<LimitCycle>, CycleError> {
    if let Some(v) = u0.free_vars().into_iter().find(|v| *v != Var::R) {
        return Err(CycleError::NotRadial(v));
    }
    if !(r_max > SCAN_START) || !r_max.is_finite() {
        return Err(CycleError::InvalidRange(r_max));
    }
    let u = Radial {
        u0,
        du0: u0.diff(Var::R).simplify(),
    };
    let step = (r_max - SCAN_START) / BRACKETS as f64;
    let grid: Vec<f64> = (0..=BRACKETS)
        .map(|i| if i == BRACKETS { r_max } else { SCAN_START + step * i as f64 })
        .collect();
    let values: Vec<f64> = grid.par_iter().map(|&r| u.at(r)).collect();

    let mut roots: Vec<(f64, bool)> = Vec::new();
    for i in 0..grid.len() {
        let v = values[i];
        if v == 0.0 {
            roots.push((grid[i], false));
            continue;
        }
        if i + 1 < grid.len() {
            let w = values[i + 1];
            if v.is_finite() && w.is_finite() && w != 0.0 && v.signum() != w.signum() {
                roots.push((refine_root(|r| u.at(r), grid[i], grid[i + 1]), false));
                continue;
            }
        }
        // tangential candidates: interior local minima of |U0| without a sign change
        if i == 0 || i + 1 == grid.len() {
            continue;
        }
        let (prev, next) = (values[i - 1], values[i + 1]);
        let same_sign = prev.signum() == v.signum() && next.signum() == v.signum();
        if !(same_sign && v.abs() <= prev.abs() && v.abs() < next.abs()) {
            continue;
        }
        let (a, b) = (grid[i - 1], grid[i + 1]);
        let (sa, sb) = (u.slope(a), u.slope(b));
        let r = if sa.is_finite() && sb.is_finite() && sa.signum() != sb.signum() {
            refine_root(|r| u.slope(r), a, b)
        } else {
            minimize_abs(|r| u.at(r), a, b)
        };
        let fr = u.at(r).abs();
        if fr <= TANGENT_CANDIDATE && fr <= ROOT_TOL {
            roots.push((r, true));
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    roots.dedup_by(|b, a| (b.0 - a.0).abs() <= 1e-9 * (1.0 + a.0));
    Ok(roots
        .into_iter()
        .map(|(r, tangential)| classify(&u, r, tangential))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnMapReport {
    pub radius: f64,
    pub delta: f64,
    /// `|r - r*|` after each revolution, starting from `r* - delta`.
    pub inner: Vec<f64>,
    /// Same, starting from `r* + delta`.
    pub outer: Vec<f64>,
    pub inner_monotone: bool,
    pub outer_monotone: bool,
}

impl ReturnMapReport {
    pub fn final_residuals(&self) -> (f64, f64) {
        (
            *self.inner.last().unwrap_or(&self.delta),
            *self.outer.last().unwrap_or(&self.delta),
        )
    }
}

fn non_increasing(seq: &[f64], start: f64, slack: f64) -> bool {
    let mut prev = start;
    for &v in seq {
        if v > prev + slack {
            return false;
        }
        prev = v;
    }
    true
}

/// Follow `r` through ten revolutions on each side of the cycle.
pub fn verify_cycle_by_return_map(
    p: &PolarSystem,
    c: &LimitCycle,
    delta: f64,
) -> Result<ReturnMapReport, CycleError> {
    verify_cycle_by_return_map_with(p, c, delta, DEFAULT_RTOL, DEFAULT_ATOL)
}

pub fn verify_cycle_by_return_map_with(
    p: &PolarSystem,
    c: &LimitCycle,
    delta: f64,
    rtol: f64,
    atol: f64,
) -> Result<ReturnMapReport, CycleError> {
    let rs = c.radius;
    if !(delta >= 0.0 && delta < 0.5 * rs) {
        return Err(CycleError::InvalidDelta { delta, radius: rs });
    }
    // theta' must keep one sign on the annulus so theta can replace time
    let (nr, nt) = (17, 256);
    let mut sign = 0.0;
    for i in 0..nr {
        let r = rs - delta + 2.0 * delta * i as f64 / (nr - 1) as f64;
        for j in 0..nt {
            let theta = std::f64::consts::TAU * j as f64 / nt as f64;
            let td = p.thetadot.eval(&Bindings::polar(r, theta))?;
            if sign == 0.0 {
                sign = td.signum();
            }
            if td.abs() < THETA_DOT_FLOOR || td.signum() != sign {
                return Err(CycleError::ThetaDotVanishes { r, theta, value: td });
            }
        }
    }
    let field = |s: [f64; 2]| -> Result<[f64; 2], EvalError> {
        let theta = sign * s[1];
        let [rd, td] = p.eval(s[0], theta)?;
        Ok([rd / td.abs(), 1.0])
    };
    let run = |r0: f64| -> Result<Vec<f64>, CycleError> {
        let mut r = r0;
        let mut out = Vec::with_capacity(REVOLUTIONS);
        for _ in 0..REVOLUTIONS {
            let tr = integrate_adaptive(&field, [r, 0.0], std::f64::consts::TAU, rtol, atol)?;
            r = tr.final_state()[0];
            out.push((r - rs).abs());
        }
        Ok(out)
    };
    let inner = run(rs - delta)?;
    let outer = run(rs + delta)?;
    // once a residual reaches the integrator's error floor it only wanders
    let slack = 10.0 * (rtol * (rs + delta) + atol);
    Ok(ReturnMapReport {
        radius: rs,
        delta,
        inner_monotone: non_increasing(&inner, delta, slack),
        outer_monotone: non_increasing(&outer, delta, slack),
        inner,
        outer,
    })
}
