//! Boundary correspondence of the Riemann map for star-shaped curves
//! `z(phi) = rho(phi) e^{i phi}`, by Theodorsen's fixed-point iteration.
//!
//! The map sends the circle angle `theta` to the curve angle `tau(theta)`,
//! where `tau - id` is the periodic conjugate of `ln rho(tau)`.

use std::f64::consts::TAU;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, Bindings, EvalError, Expr, Var};
use crate::system::SystemError;

pub const DEFAULT_NODES: usize = 1024;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const PERIODICITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConformalError {
    #[error("node count {0} is not a power of two >= 4")]
    InvalidResolution(usize),
    #[error("rho must depend on theta only, found `{0}`")]
    WrongVariable(Var),
    #[error("rho is not positive at theta = {theta} (value {value})")]
    NonPositiveRadius { theta: f64, value: f64 },
    #[error("no convergence after {iterations} iterations (last step {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("boundary map is not increasing at node {index} (discrete slope {slope:e})")]
    NonMonotone { index: usize, slope: f64 },
    #[error("evaluation of rho failed at theta = {theta}: {source}")]
    Eval {
        theta: f64,
        #[source]
        source: EvalError,
    },
    #[error(transparent)]
    Parse(#[from] SystemError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct JordanCurve {
    pub rho: Expr,
    pub center: (f64, f64),
}

impl JordanCurve {
    pub fn new(rho: Expr, center: (f64, f64)) -> Result<Self, ConformalError> {
        if let Some(v) = rho.free_vars().into_iter().find(|v| *v != Var::Theta) {
            return Err(ConformalError::WrongVariable(v));
        }
        Ok(Self { rho, center })
    }

    pub fn parse(rho: &str) -> Result<Self, ConformalError> {
        let e = parse(rho).map_err(|source| SystemError::Parse {
            component: "rho",
            source,
        })?;
        Self::new(e, (0.0, 0.0))
    }

    pub fn radius(&self, theta: f64) -> Result<f64, ConformalError> {
        let v = self
            .rho
            .eval(&Bindings::new().with(Var::Theta, theta))
            .map_err(|source| ConformalError::Eval { theta, source })?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(ConformalError::NonPositiveRadius { theta, value: v });
        }
        Ok(v)
    }

    /// Cartesian point at curve angle `phi`.
    pub fn point(&self, phi: f64) -> Result<(f64, f64), ConformalError> {
        let r = self.radius(phi)?;
        Ok((self.center.0 + r * phi.cos(), self.center.1 + r * phi.sin()))
    }

    /// `max |rho' / rho|` on `n` samples; Theodorsen's iteration contracts when
    /// this stays below one.
    pub fn epsilon(&self, n: usize) -> Result<f64, ConformalError> {
        let d = self.rho.diff(Var::Theta).simplify();
        let mut eps: f64 = 0.0;
        for k in 0..n {
            let theta = TAU * k as f64 / n as f64;
            let r = self.radius(theta)?;
            let dr = d
                .eval(&Bindings::new().with(Var::Theta, theta))
                .map_err(|source| ConformalError::Eval { theta, source })?;
            eps = eps.max((dr / r).abs());
        }
        Ok(eps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMap {
    pub n: usize,
    /// `tau(theta_k)` at `theta_k = 2 pi k / n`.
    pub tau: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub warning: Option<String>,
}

fn nodes(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| TAU * k as f64 / n as f64)
}

fn spectrum(values: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = values.iter().map(|v| Complex::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Periodic conjugate at the nodes: `cos k t -> sin k t`, `sin k t -> -cos k t`.
pub fn conjugate(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut spec = spectrum(values);
    spec[0] = Complex::new(0.0, 0.0);
    spec[n / 2] = Complex::new(0.0, 0.0);
    for (k, c) in spec.iter_mut().enumerate().skip(1) {
        if k < n / 2 {
            *c *= Complex::new(0.0, -1.0);
        } else if k > n / 2 {
            *c *= Complex::new(0.0, 1.0);
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    spec.iter().map(|c| c.re / n as f64).collect()
}

/// Trigonometric interpolant of a periodic sample sequence.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    mean: f64,
    /// `(a_k, b_k)` for `k = 1 .. n/2 - 1`.
    harmonics: Vec<(f64, f64)>,
    nyquist: f64,
    n: usize,
}

impl TrigInterpolant {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        let spec = spectrum(values);
        let nf = n as f64;
        Self {
            mean: spec[0].re / nf,
            harmonics: (1..n / 2)
                .map(|k| (2.0 * spec[k].re / nf, -2.0 * spec[k].im / nf))
                .collect(),
            nyquist: if n % 2 == 0 { spec[n / 2].re / nf } else { 0.0 },
            n,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.mean + self.nyquist * ((self.n / 2) as f64 * t).cos();
        for (k, (a, b)) in self.harmonics.iter().enumerate() {
            let (s, c) = ((k + 1) as f64 * t).sin_cos();
            acc += a * c + b * s;
        }
        acc
    }

    /// `(a_k, b_k)` for `k = 1 .. n/2 - 1`.
    pub fn harmonics(&self) -> &[(f64, f64)] {
        &self.harmonics
    }
}

impl BoundaryMap {
    /// The identity correspondence on `n` nodes.
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            tau: nodes(n).collect(),
            iterations: 0,
            residual: 0.0,
            warning: None,
        }
    }

    /// Interpolant of the periodic part `tau(theta) - theta`.
    pub fn interpolant(&self) -> TrigInterpolant {
        let g: Vec<f64> = nodes(self.n).zip(&self.tau).map(|(t, v)| v - t).collect();
        TrigInterpolant::new(&g)
    }

    /// `tau(theta)` for any real `theta`.
    pub fn tau_at(&self, theta: f64) -> f64 {
        theta + self.interpolant().eval(theta)
    }
}

/// Theodorsen iteration `tau <- theta + K[ln rho(tau)]` from `tau = theta`.
pub fn theodorsen_map(
    c: &JordanCurve,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<BoundaryMap, ConformalError> {
    if n < 4 || !n.is_power_of_two() {
        return Err(ConformalError::InvalidResolution(n));
    }
    let eps = c.epsilon(n)?;
    let warning = (eps >= 1.0).then(|| {
        format!("max |rho'/rho| = {eps:.3} >= 1; the iteration is not guaranteed to contract")
    });
    let theta: Vec<f64> = nodes(n).collect();
    let mut tau = theta.clone();
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let log_rho = tau
            .par_iter()
            .map(|t| c.radius(*t).map(f64::ln))
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<Vec<f64>, _>>()?;
        let next: Vec<f64> = theta.iter().zip(conjugate(&log_rho)).map(|(t, k)| t + k).collect();
        residual = next
            .iter()
            .zip(&tau)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        tau = next;
        if residual <= tol {
            let map = BoundaryMap {
                n,
                tau,
                iterations: it,
                residual,
                warning,
            };
            check_monotone(&map)?;
            return Ok(map);
        }
        if !residual.is_finite() {
            break;
        }
    }
    Err(ConformalError::NotConverged {
        iterations: max_iter,
        residual,
    })
}

fn slopes(m: &BoundaryMap) -> impl Iterator<Item = (usize, f64)> + '_ {
    let h = TAU / m.n as f64;
    (0..m.n).map(move |k| {
        let next = if k + 1 == m.n { m.tau[0] + TAU } else { m.tau[k + 1] };
        (k, (next - m.tau[k]) / h)
    })
}

fn check_monotone(m: &BoundaryMap) -> Result<(), ConformalError> {
    match slopes(m).find(|(_, s)| !(*s > 0.0)) {
        Some((index, slope)) => Err(ConformalError::NonMonotone { index, slope }),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffeoReport {
    /// Smallest discrete slope of `tau`, wrap-around included.
    pub margin: f64,
    /// `|tau(2 pi) - tau(0) - 2 pi|`.
    pub periodicity_defect: f64,
    /// Largest harmonic of `tau - id` in the upper half of the spectrum.
    pub spectral_tail: f64,
    pub pass: bool,
}

pub fn verify_diffeomorphism(m: &BoundaryMap) -> DiffeoReport {
    let margin = slopes(m).map(|(_, s)| s).fold(f64::INFINITY, f64::min);
    let interp = m.interpolant();
    let periodicity_defect = ((TAU + interp.eval(TAU)) - interp.eval(0.0) - TAU).abs();
    let spectral_tail = interp
        .harmonics()
        .iter()
        .skip(m.n / 4)
        .map(|(a, b)| a.hypot(*b))
        .fold(0.0, f64::max);
    DiffeoReport {
        margin,
        periodicity_defect,
        spectral_tail,
        pass: margin > 0.0 && periodicity_defect <= PERIODICITY_TOL,
    }
}

/// Circle angle whose image is the curve angle `phi`, i.e. `tau^{-1}(phi)`.
pub fn map_curve_to_circle(m: &BoundaryMap, phi: f64) -> f64 {
    let turns = (phi / TAU).floor();
    let target = phi - TAU * turns;
    let interp = m.interpolant();
    let f = |t: f64| t + interp.eval(t) - target;
    let bound = m
        .tau
        .iter()
        .zip(nodes(m.n))
        .map(|(v, t)| (v - t).abs())
        .fold(0.0, f64::max);
    let (mut lo, mut hi) = (target - bound - 0.5, target + bound + 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) + TAU * turns
}
