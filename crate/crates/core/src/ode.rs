//! Deterministic integration of planar fields and phase-portrait sampling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::EvalError;
use crate::system::{PlanarSystem, PolarSystem, Window};

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_RTOL: f64 = 1e-9;
pub const DEFAULT_ATOL: f64 = 1e-12;
const MIN_STEP: f64 = 1e-14;
const MAX_STEPS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("state left the finite range at t = {time}")]
    NonFinite { time: f64 },
    #[error("step size {step:e} underflowed at t = {time}")]
    StepUnderflow { time: f64, step: f64 },
    #[error("field evaluation failed at t = {time}: {source}")]
    Eval {
        time: f64,
        #[source]
        source: EvalError,
    },
    #[error("step budget exhausted at t = {time}")]
    TooManySteps { time: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Right-hand side of an autonomous planar ODE.
pub trait VectorField {
    fn eval(&self, state: [f64; 2]) -> Result<[f64; 2], EvalError>;
}

impl VectorField for PlanarSystem {
    fn eval(&self, state: [f64; 2]) -> Result<[f64; 2], EvalError> {
        PlanarSystem::eval(self, state[0], state[1])
    }
}

/// State is `(r, theta)`.
impl VectorField for PolarSystem {
    fn eval(&self, state: [f64; 2]) -> Result<[f64; 2], EvalError> {
        PolarSystem::eval(self, state[0], state[1])
    }
}

impl<F> VectorField for F
where
    F: Fn([f64; 2]) -> Result<[f64; 2], EvalError>,
{
    fn eval(&self, state: [f64; 2]) -> Result<[f64; 2], EvalError> {
        self(state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 2]>,
    pub method: Method,
    /// Fixed step, for RK4 runs.
    pub step: Option<f64>,
    /// `(rtol, atol)`, for adaptive runs.
    pub tolerances: Option<(f64, f64)>,
}

impl Trajectory {
    pub fn final_state(&self) -> [f64; 2] {
        *self.states.last().expect("trajectory has at least one state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one time")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn eval_at<F: VectorField + ?Sized>(f: &F, t: f64, y: [f64; 2]) -> Result<[f64; 2], OdeError> {
    f.eval(y).map_err(|source| OdeError::Eval { time: t, source })
}

fn axpy(y: [f64; 2], h: f64, k: [f64; 2]) -> [f64; 2] {
    [y[0] + h * k[0], y[1] + h * k[1]]
}

fn finite(y: [f64; 2]) -> bool {
    y[0].is_finite() && y[1].is_finite()
}

fn check_span(x0: [f64; 2], t_end: f64) -> Result<(), OdeError> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(OdeError::InvalidArgument(format!("t_end = {t_end}")));
    }
    if !finite(x0) {
        return Err(OdeError::NonFinite { time: 0.0 });
    }
    Ok(())
}

fn rk4_step<F: VectorField + ?Sized>(
    f: &F,
    t: f64,
    y: [f64; 2],
    h: f64,
) -> Result<[f64; 2], OdeError> {
    let k1 = eval_at(f, t, y)?;
    let k2 = eval_at(f, t + 0.5 * h, axpy(y, 0.5 * h, k1))?;
    let k3 = eval_at(f, t + 0.5 * h, axpy(y, 0.5 * h, k2))?;
    let k4 = eval_at(f, t + h, axpy(y, h, k3))?;
    Ok([
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ])
}

/// Classical fourth-order Runge-Kutta with fixed step `h`; the final step is
/// shortened to land exactly on `t_end`.
pub fn integrate_rk4<F: VectorField + ?Sized>(
    f: &F,
    x0: [f64; 2],
    t_end: f64,
    h: f64,
) -> Result<Trajectory, OdeError> {
    check_span(x0, t_end)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(OdeError::InvalidArgument(format!("step h = {h}")));
    }
    let steps = if t_end == 0.0 {
        0
    } else {
        ((t_end / h) - 1e-9).ceil().max(1.0) as usize
    };
    if steps > MAX_STEPS {
        return Err(OdeError::TooManySteps { time: 0.0 });
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0);
    let mut y = x0;
    for i in 0..steps {
        let t = i as f64 * h;
        let t_next = if i + 1 == steps { t_end } else { (i + 1) as f64 * h };
        y = rk4_step(f, t, y, t_next - t)?;
        if !finite(y) {
            return Err(OdeError::NonFinite { time: t_next });
        }
        times.push(t_next);
        states.push(y);
    }
    Ok(Trajectory {
        times,
        states,
        method: Method::Rk4Fixed,
        step: Some(h),
        tolerances: None,
    })
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dopri_step<F: VectorField + ?Sized>(
    f: &F,
    t: f64,
    y: [f64; 2],
    h: f64,
) -> Result<([f64; 2], [f64; 2]), OdeError> {
    let mut k = [[0.0; 2]; 7];
    for s in 0..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            ys = axpy(ys, h * A[s][j], *kj);
        }
        k[s] = eval_at(f, t + C[s] * h, ys)?;
    }
    let mut high = y;
    let mut err = [0.0; 2];
    for s in 0..7 {
        high = axpy(high, h * B5[s], k[s]);
        err[0] += h * (B5[s] - B4[s]) * k[s][0];
        err[1] += h * (B5[s] - B4[s]) * k[s][1];
    }
    Ok((high, err))
}

fn error_norm(y: [f64; 2], y_new: [f64; 2], err: [f64; 2], rtol: f64, atol: f64) -> f64 {
    (0..2)
        .map(|i| err[i].abs() / (atol + rtol * y[i].abs().max(y_new[i].abs())))
        .fold(0.0, f64::max)
}

/// Embedded Dormand-Prince 5(4) with a standard step controller.
pub fn integrate_adaptive<F: VectorField + ?Sized>(
    f: &F,
    x0: [f64; 2],
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<Trajectory, OdeError> {
    check_span(x0, t_end)?;
    if !(rtol > 0.0) || !(atol > 0.0) {
        return Err(OdeError::InvalidArgument(format!(
            "tolerances rtol = {rtol}, atol = {atol}"
        )));
    }
    let mut times = vec![0.0];
    let mut states = vec![x0];
    let (mut t, mut y) = (0.0, x0);

    // initial step from the scale of the state and its rate
    let f0 = eval_at(f, 0.0, x0)?;
    let scale = |v: [f64; 2]| {
        (0..2)
            .map(|i| (v[i] / (atol + rtol * x0[i].abs())).abs())
            .fold(0.0, f64::max)
    };
    let (d0, d1) = (scale(x0), scale(f0));
    let mut h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h = h.min(t_end).max(MIN_STEP);

    let mut count = 0usize;
    while t < t_end {
        count += 1;
        if count > MAX_STEPS {
            return Err(OdeError::TooManySteps { time: t });
        }
        let last = t + h >= t_end;
        let step = if last { t_end - t } else { h };
        let (y_new, err) = dopri_step(f, t, y, step)?;
        let norm = error_norm(y, y_new, err, rtol, atol);
        if norm <= 1.0 && finite(y_new) {
            t = if last { t_end } else { t + step };
            y = y_new;
            times.push(t);
            states.push(y);
        } else if !finite(y_new) && step <= MIN_STEP {
            return Err(OdeError::NonFinite { time: t });
        }
        let factor = if norm == 0.0 {
            5.0
        } else if norm.is_finite() {
            (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            0.2
        };
        h = step * factor;
        if h < MIN_STEP && t < t_end {
            return Err(OdeError::StepUnderflow { time: t, step: h });
        }
    }
    Ok(Trajectory {
        times,
        states,
        method: Method::Rk45Adaptive,
        step: None,
        tolerances: Some((rtol, atol)),
    })
}

/// One sampled arrow of a phase portrait; `value` is `None` where the field
/// could not be evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub value: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorFieldGrid {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    /// Row-major: `y` rows bottom to top, `x` fastest.
    pub samples: Vec<FieldSample>,
}

pub fn sample_phase_portrait(s: &PlanarSystem, window: Window, nx: usize, ny: usize) -> VectorFieldGrid {
    let samples = window
        .grid(nx, ny)
        .into_par_iter()
        .map(|(x, y)| FieldSample {
            x,
            y,
            value: s.eval(x, y).ok().filter(|v| finite(*v)),
        })
        .collect();
    VectorFieldGrid {
        window,
        nx,
        ny,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // r' = r - r^3 carried on the x axis
    fn radial() -> PlanarSystem {
        PlanarSystem::parse("x - x^3", "0").unwrap()
    }

    fn radial_exact(r0: f64, t: f64) -> f64 {
        (1.0 + (r0.powi(-2) - 1.0) * (-2.0 * t).exp()).powf(-0.5)
    }

    #[test]
    fn rk4_matches_closed_form() {
        let tr = integrate_rk4(&radial(), [0.5, 0.0], 1.0, 1e-3).unwrap();
        let exact = radial_exact(0.5, 1.0);
        assert!((exact - 0.843347).abs() < 1e-6);
        assert!((tr.final_state()[0] - exact).abs() < 1e-9);
        assert_eq!(tr.final_time(), 1.0);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rk4_truncates_last_step() {
        let tr = integrate_rk4(&radial(), [0.5, 0.0], 0.25, 0.1).unwrap();
        assert_eq!(tr.times.len(), 4);
        assert_eq!(tr.final_time(), 0.25);
    }

    #[test]
    fn zero_field_is_constant() {
        let s = PlanarSystem::parse("0", "0").unwrap();
        let tr = integrate_rk4(&s, [0.3, -1.2], 2.0, 0.01).unwrap();
        assert!(tr.states.iter().all(|p| *p == [0.3, -1.2]));
        let tr = integrate_adaptive(&s, [0.3, -1.2], 2.0, DEFAULT_RTOL, DEFAULT_ATOL).unwrap();
        assert_eq!(tr.final_state(), [0.3, -1.2]);
    }

    #[test]
    fn rotation_returns_after_one_period() {
        let s = PlanarSystem::parse("-y", "x").unwrap();
        let tr = integrate_rk4(&s, [1.0, 0.0], std::f64::consts::TAU, 1e-3).unwrap();
        let [x, y] = tr.final_state();
        assert!((x - 1.0).abs() < 1e-8 && y.abs() < 1e-8);
    }

    #[test]
    fn adaptive_zero_span() {
        let tr = integrate_adaptive(&radial(), [0.5, 0.0], 0.0, DEFAULT_RTOL, DEFAULT_ATOL).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.method, Method::Rk45Adaptive);
    }

    #[test]
    fn adaptive_matches_closed_form() {
        let tr = integrate_adaptive(&radial(), [0.5, 0.0], 3.0, DEFAULT_RTOL, DEFAULT_ATOL).unwrap();
        assert!((tr.final_state()[0] - radial_exact(0.5, 3.0)).abs() < 1e-8);
    }

    #[test]
    fn blow_up_is_reported() {
        let s = PlanarSystem::parse("x^2", "0").unwrap();
        let err = integrate_rk4(&s, [1.0, 0.0], 2.0, 0.01).unwrap_err();
        assert!(matches!(err, OdeError::NonFinite { .. }), "{err:?}");
        let err = integrate_adaptive(&s, [1.0, 0.0], 2.0, 1e-9, 1e-12).unwrap_err();
        assert!(
            matches!(err, OdeError::StepUnderflow { .. } | OdeError::NonFinite { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn invalid_arguments() {
        assert!(integrate_rk4(&radial(), [0.5, 0.0], 1.0, 0.0).is_err());
        assert!(integrate_rk4(&radial(), [0.5, 0.0], -1.0, 0.1).is_err());
        assert!(integrate_adaptive(&radial(), [0.5, 0.0], 1.0, 0.0, 1e-12).is_err());
    }

    #[test]
    fn portrait_samples() {
        let rot = PlanarSystem::parse("-y", "x").unwrap();
        let g = sample_phase_portrait(&rot, Window::square(1.0), 3, 3);
        assert_eq!(g.samples.len(), 9);
        let centre = g.samples[4];
        assert_eq!((centre.x, centre.y), (0.0, 0.0));
        assert_eq!(centre.value, Some([0.0, 0.0]));
        for s in &g.samples {
            assert_eq!(s.value, Some([-s.y, s.x]));
        }

        let circle = PlanarSystem::parse("-y + x*(1 - (x^2 + y^2))", "x + y*(1 - (x^2 + y^2))").unwrap();
        assert_eq!(circle.eval(1.0, 0.0).unwrap(), [0.0, 1.0]);

        let vib = PlanarSystem::parse("y", "-(4*x^2 - 1)*y - x + x^3 - x^5").unwrap();
        let g = sample_phase_portrait(&vib, Window::square(1.0), 3, 3);
        assert_eq!(g.samples[4].value, Some([0.0, 0.0]));
    }

    #[test]
    fn portrait_records_missing_values() {
        let s = PlanarSystem::parse("1/x", "0").unwrap();
        let g = sample_phase_portrait(&s, Window::square(1.0), 3, 1);
        assert_eq!(g.samples.iter().filter(|s| s.value.is_none()).count(), 1);
    }
}
