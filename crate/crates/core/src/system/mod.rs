//! Planar vector fields in Cartesian and polar coordinates.

mod classify;
mod transform;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::trig::TrigPoly;
use crate::expr::{parse, Bindings, EvalError, Expr, ParseError, Poly, Var};

pub use classify::{classify_radial_form, RadialForm, RadialKind};
pub use transform::{apply_transform, invert_transform, invert_transform_on, Transform};

/// Polar quantities are only defined for `r` above this radius.
pub const MIN_RADIUS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("{component} mentions `{var}`, which is not a {expected} coordinate")]
    WrongVariables {
        component: &'static str,
        var: Var,
        expected: &'static str,
    },
    #[error("cannot parse {component}: {source}")]
    Parse {
        component: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("transform round trip fails at ({x}, {y}) with defect {defect:e}")]
    TransformNotInvertible { x: f64, y: f64, defect: f64 },
    #[error("transform outside the triangular class u = x, v = y + g(x): {0}")]
    UnsupportedTransformClass(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Axis-aligned analysis rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Window {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Self {
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    /// The square `[-h, h]^2`.
    pub fn square(h: f64) -> Self {
        Self::new(-h, h, -h, h)
    }

    pub fn is_valid(&self) -> bool {
        self.xmin.is_finite()
            && self.xmax.is_finite()
            && self.ymin.is_finite()
            && self.ymax.is_finite()
            && self.xmin < self.xmax
            && self.ymin < self.ymax
    }

    /// `nx * ny` uniform points, rows of constant `y`, `x` fastest.
    pub fn grid(&self, nx: usize, ny: usize) -> Vec<(f64, f64)> {
        let step = |lo: f64, hi: f64, n: usize, i: usize| {
            if n <= 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let y = step(self.ymin, self.ymax, ny, j);
            for i in 0..nx {
                out.push((step(self.xmin, self.xmax, nx, i), y));
            }
        }
        out
    }
}

impl Default for Window {
    fn default() -> Self {
        Self::square(2.0)
    }
}

fn check_vars(
    e: &Expr,
    component: &'static str,
    allowed: [Var; 2],
    expected: &'static str,
) -> Result<(), SystemError> {
    match e.free_vars().into_iter().find(|v| !allowed.contains(v)) {
        Some(var) => Err(SystemError::WrongVariables {
            component,
            var,
            expected,
        }),
        None => Ok(()),
    }
}

fn parse_component(text: &str, component: &'static str) -> Result<Expr, SystemError> {
    parse(text).map_err(|source| SystemError::Parse { component, source })
}

/// `x' = fx(x, y)`, `y' = fy(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarSystem {
    pub fx: Expr,
    pub fy: Expr,
}

impl PlanarSystem {
    pub fn new(fx: Expr, fy: Expr) -> Result<Self, SystemError> {
        check_vars(&fx, "fx", [Var::X, Var::Y], "Cartesian")?;
        check_vars(&fy, "fy", [Var::X, Var::Y], "Cartesian")?;
        Ok(Self { fx, fy })
    }

    pub fn parse(fx: &str, fy: &str) -> Result<Self, SystemError> {
        Self::new(parse_component(fx, "fx")?, parse_component(fy, "fy")?)
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<[f64; 2], EvalError> {
        let b = Bindings::xy(x, y);
        Ok([self.fx.eval(&b)?, self.fy.eval(&b)?])
    }

    /// Componentwise multiple `k * f`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            fx: Expr::Const(k) * self.fx.clone(),
            fy: Expr::Const(k) * self.fy.clone(),
        }
    }
}

/// `r' = rdot(r, theta)`, `theta' = thetadot(r, theta)`, defined for `r > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarSystem {
    pub rdot: Expr,
    pub thetadot: Expr,
}

impl PolarSystem {
    pub fn new(rdot: Expr, thetadot: Expr) -> Result<Self, SystemError> {
        check_vars(&rdot, "rdot", [Var::R, Var::Theta], "polar")?;
        check_vars(&thetadot, "thetadot", [Var::R, Var::Theta], "polar")?;
        Ok(Self { rdot, thetadot })
    }

    pub fn parse(rdot: &str, thetadot: &str) -> Result<Self, SystemError> {
        Self::new(
            parse_component(rdot, "rdot")?,
            parse_component(thetadot, "thetadot")?,
        )
    }

    pub fn eval(&self, r: f64, theta: f64) -> Result<[f64; 2], EvalError> {
        let b = Bindings::polar(r, theta);
        Ok([self.rdot.eval(&b)?, self.thetadot.eval(&b)?])
    }

    /// The Cartesian field `(x', y')` at a point with `r > MIN_RADIUS`.
    pub fn cartesian_field(&self, x: f64, y: f64) -> Result<[f64; 2], EvalError> {
        let r = x.hypot(y);
        if r <= MIN_RADIUS {
            return Err(EvalError::DivisionByZero);
        }
        let theta = y.atan2(x);
        let [rd, td] = self.eval(r, theta)?;
        let (c, s) = (x / r, y / r);
        Ok([rd * c - r * td * s, rd * s + r * td * c])
    }
}

/// Rewrite a Cartesian field in polar coordinates.
///
/// Uses `r' = (x fx + y fy) / r` and `theta' = (x fy - y fx) / r^2`. Polynomial
/// fields are reduced exactly (including `sin^2 + cos^2 = 1`); other fields
/// are substituted and simplified structurally.
pub fn to_polar(s: &PlanarSystem) -> PolarSystem {
    if let (Ok(px), Ok(py)) = (Poly::from_expr(&s.fx), Poly::from_expr(&s.fy)) {
        let (x, y) = (Poly::var(Var::X), Poly::var(Var::Y));
        let radial = x.mul(&px).add(&y.mul(&py));
        let angular = x.mul(&py).sub(&y.mul(&px));
        if let (Ok(tr), Ok(ta)) = (
            TrigPoly::from_xy_poly(&radial),
            TrigPoly::from_xy_poly(&angular),
        ) {
            return PolarSystem {
                rdot: tr.shift_r(-1).to_expr(),
                thetadot: ta.shift_r(-2).to_expr(),
            };
        }
    }
    let (c, sn) = (Expr::theta().cos(), Expr::theta().sin());
    let polar = [(Var::X, Expr::r() * c.clone()), (Var::Y, Expr::r() * sn.clone())];
    let fx = s.fx.substitute(&polar);
    let fy = s.fy.substitute(&polar);
    PolarSystem {
        rdot: c.clone() * fx.clone() + sn.clone() * fy.clone(),
        thetadot: (c * fy - sn * fx) / Expr::r(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{poly_equal, SampleGrid};

    fn polar_grid() -> SampleGrid {
        SampleGrid::new()
            .axis(Var::R, 0.1, 2.5, 13)
            .axis(Var::Theta, 0.0, 6.2, 17)
    }

    fn same(a: &Expr, b: &str) -> bool {
        poly_equal(a, &parse(b).unwrap(), &[], Some(&polar_grid())).unwrap()
    }

    #[test]
    fn circle_system_to_polar() {
        let s = PlanarSystem::parse("-y + x*(1 - (x^2 + y^2))", "x + y*(1 - (x^2 + y^2))").unwrap();
        let p = to_polar(&s);
        assert!(same(&p.rdot, "r - r^3"));
        assert!(same(&p.thetadot, "1"));
        assert!(!p.rdot.contains(Var::Theta));
    }

    #[test]
    fn rigid_rotation_to_polar() {
        let p = to_polar(&PlanarSystem::parse("-y", "x").unwrap());
        assert!(p.rdot.is_zero());
        assert_eq!(p.thetadot, Expr::one());
    }

    #[test]
    fn rectified_vibration_system_to_polar() {
        let s = PlanarSystem::parse("y + x - x^3", "-x^2*y - x").unwrap();
        let p = to_polar(&s);
        assert!(same(&p.rdot, "r*(1 - r^2)*cos(theta)^2"));
        assert!(same(&p.thetadot, "-1 - cos(theta)*sin(theta)"));
    }

    #[test]
    fn non_polynomial_field_to_polar() {
        let s = PlanarSystem::parse("-y*exp(x)", "sin(x)").unwrap();
        let p = to_polar(&s);
        for (x, y) in [(0.3, -0.4), (1.2, 0.7), (-0.9, 0.2)] {
            let [fx, fy] = s.eval(x, y).unwrap();
            let [cx, cy] = p.cartesian_field(x, y).unwrap();
            assert!((fx - cx).abs() < 1e-12 && (fy - cy).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_wrong_coordinates() {
        assert!(matches!(
            PlanarSystem::parse("r", "x"),
            Err(SystemError::WrongVariables { var: Var::R, .. })
        ));
        assert!(PolarSystem::parse("x", "1").is_err());
        assert!(matches!(PlanarSystem::parse("x +", "y"), Err(SystemError::Parse { .. })));
    }

    #[test]
    fn window_grid_order() {
        let pts = Window::square(1.0).grid(3, 2);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], (-1.0, -1.0));
        assert_eq!(pts[1], (0.0, -1.0));
        assert_eq!(pts[3], (-1.0, 1.0));
    }
}
