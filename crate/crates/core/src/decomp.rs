//! Ao-type decomposition `f = -(D I + q J) grad phi` with scalar `D`, and the two
//! dissipation criteria (dissipative power and divergence).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycle::LimitCycle;
use crate::expr::{Bindings, EvalError, Expr, Var};
use crate::system::{PlanarSystem, SystemError, Transform, Window};

pub const GRADIENT_FLOOR: f64 = 1e-8;
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
pub const POWER_CLAMP: f64 = 1e-12;
pub const HP_ZERO_TOL: f64 = 1e-9;
pub const DIV_ZERO_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompError {
    #[error("evaluation failed at ({x}, {y}): {source}")]
    Eval {
        x: f64,
        y: f64,
        #[source]
        source: EvalError,
    },
    #[error("reconstruction residual {residual:e} at ({x}, {y})")]
    Reconstruction { x: f64, y: f64, residual: f64 },
    #[error(transparent)]
    Transform(#[from] SystemError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompSample {
    pub x: f64,
    pub y: f64,
    /// Scalar diffusion; `NaN` when singular.
    pub d: f64,
    /// Coefficient of the rotation `J` in `Q`; `NaN` when singular.
    pub q: f64,
    /// Friction `S = s I`; `NaN` when singular.
    pub s: f64,
    /// Transverse part `T = t J`; `NaN` when singular.
    pub t: f64,
    pub hp: f64,
    pub div: f64,
    /// `|grad phi| <= 1e-8` here.
    pub singular: bool,
}

/// `phi`, its gradient and the field's divergence, differentiated once.
#[derive(Clone, Debug)]
pub struct Decomposer {
    system: PlanarSystem,
    phi_x: Expr,
    phi_y: Expr,
    div: Expr,
}

impl Decomposer {
    pub fn new(s: &PlanarSystem, phi: &Expr) -> Self {
        Self {
            system: s.clone(),
            phi_x: phi.diff(Var::X).canonical(),
            phi_y: phi.diff(Var::Y).canonical(),
            div: divergence(s),
        }
    }

    fn parts(&self, x: f64, y: f64) -> Result<([f64; 2], [f64; 2], f64), DecompError> {
        let b = Bindings::xy(x, y);
        let err = |source| DecompError::Eval { x, y, source };
        let f = self.system.eval(x, y).map_err(err)?;
        let g = [
            self.phi_x.eval(&b).map_err(err)?,
            self.phi_y.eval(&b).map_err(err)?,
        ];
        Ok((f, g, self.div.eval(&b).map_err(err)?))
    }

    pub fn power(&self, x: f64, y: f64) -> Result<f64, DecompError> {
        let (f, g, _) = self.parts(x, y)?;
        Ok(clamp(-(f[0] * g[0] + f[1] * g[1])))
    }

    pub fn sample(&self, x: f64, y: f64) -> Result<DecompSample, DecompError> {
        let (f, g, div) = self.parts(x, y)?;
        let hp = clamp(-(f[0] * g[0] + f[1] * g[1]));
        let norm2 = g[0] * g[0] + g[1] * g[1];
        let mut out = DecompSample {
            x,
            y,
            d: f64::NAN,
            q: f64::NAN,
            s: f64::NAN,
            t: f64::NAN,
            hp,
            div,
            singular: true,
        };
        if norm2.sqrt() <= GRADIENT_FLOOR {
            return Ok(out);
        }
        let jg = [g[1], -g[0]];
        let d = -(f[0] * g[0] + f[1] * g[1]) / norm2;
        let q = -(f[0] * jg[0] + f[1] * jg[1]) / norm2;
        let residual = (f[0] + d * g[0] + q * jg[0]).hypot(f[1] + d * g[1] + q * jg[1]);
        if residual > RECONSTRUCTION_TOL * (1.0 + f[0].hypot(f[1])) {
            return Err(DecompError::Reconstruction { x, y, residual });
        }
        let m = d * d + q * q;
        out.d = d;
        out.q = q;
        out.singular = m == 0.0;
        if m > 0.0 {
            out.s = d / m;
            out.t = -q / m;
        }
        Ok(out)
    }

    /// Samples on an `nx x ny` grid in the order of `Window::grid`.
    pub fn grid(&self, window: Window, nx: usize, ny: usize) -> Result<Vec<DecompSample>, DecompError> {
        let out: Vec<_> = window
            .grid(nx, ny)
            .into_par_iter()
            .map(|(x, y)| self.sample(x, y))
            .collect();
        out.into_iter().collect()
    }
}

fn clamp(v: f64) -> f64 {
    if v.abs() < POWER_CLAMP {
        0.0
    } else {
        v
    }
}

pub fn decompose(s: &PlanarSystem, phi: &Expr, pt: (f64, f64)) -> Result<DecompSample, DecompError> {
    Decomposer::new(s, phi).sample(pt.0, pt.1)
}

/// `H_P = -grad phi . f`, with magnitudes below `1e-12` reported as zero.
pub fn dissipative_power(s: &PlanarSystem, phi: &Expr, pt: (f64, f64)) -> Result<f64, DecompError> {
    Decomposer::new(s, phi).power(pt.0, pt.1)
}

pub fn divergence(s: &PlanarSystem) -> Expr {
    (s.fx.diff(Var::X) + s.fy.diff(Var::Y)).canonical()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Agree,
    Disagree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behaviour {
    Dissipative,
    Conservative,
    Expanding,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleSample {
    pub x: f64,
    pub y: f64,
    pub hp: f64,
    pub div: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub radius: f64,
    pub n: usize,
    pub max_abs_hp: f64,
    pub min_div: f64,
    pub max_div: f64,
    pub verdict: Verdict,
    /// Points where the two criteria classify the flow differently.
    pub disagreements: usize,
    pub samples: Vec<CycleSample>,
}

fn by_power(hp: f64) -> Behaviour {
    if hp > HP_ZERO_TOL {
        Behaviour::Dissipative
    } else {
        Behaviour::Conservative
    }
}

fn by_divergence(div: f64) -> Behaviour {
    if div < -DIV_ZERO_TOL {
        Behaviour::Dissipative
    } else if div > DIV_ZERO_TOL {
        Behaviour::Expanding
    } else {
        Behaviour::Conservative
    }
}

/// Compare the two criteria at `n` points of the cycle of radius `c.radius`.
///
/// With a transform the circle lives in the transformed coordinates and is
/// carried back through the inverse map before sampling.
pub fn criteria_report(
    s: &PlanarSystem,
    phi: &Expr,
    c: &LimitCycle,
    n: usize,
    transform: Option<&Transform>,
) -> Result<CriteriaReport, DecompError> {
    let dec = Decomposer::new(s, phi);
    let n = n.max(1);
    let samples: Vec<Result<CycleSample, DecompError>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n as f64;
            let (u, v) = (c.radius * theta.cos(), c.radius * theta.sin());
            let (x, y) = match transform {
                Some(t) => t.map_inverse(u, v)?,
                None => (u, v),
            };
            let (f, g, div) = dec.parts(x, y)?;
            Ok(CycleSample {
                x,
                y,
                hp: clamp(-(f[0] * g[0] + f[1] * g[1])),
                div,
            })
        })
        .collect();
    let samples: Vec<CycleSample> = samples.into_iter().collect::<Result<_, _>>()?;
    let mut report = CriteriaReport {
        radius: c.radius,
        n,
        max_abs_hp: 0.0,
        min_div: f64::INFINITY,
        max_div: f64::NEG_INFINITY,
        verdict: Verdict::Agree,
        disagreements: 0,
        samples: Vec::new(),
    };
    for p in &samples {
        report.max_abs_hp = report.max_abs_hp.max(p.hp.abs());
        report.min_div = report.min_div.min(p.div);
        report.max_div = report.max_div.max(p.div);
        if by_power(p.hp) != by_divergence(p.div) {
            report.disagreements += 1;
        }
    }
    if report.disagreements > 0 {
        report.verdict = Verdict::Disagree;
    }
    report.samples = samples;
    Ok(report)
}
