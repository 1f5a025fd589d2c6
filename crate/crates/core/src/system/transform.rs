//! Invertible coordinate changes `(u, v) = T(x, y)` and push-forward of fields.
//!
//! Both directions are stored as expressions in the variables `x`, `y`: the
//! forward pair gives `u(x, y)`, `v(x, y)` and the inverse pair gives
//! `x(u, v)`, `y(u, v)` with `u, v` spelled `x, y`. Construction checks the
//! round trip on a grid, so every `Transform` value is known to be invertible
//! on its verification window.

use super::{PlanarSystem, SystemError, Window};
use crate::expr::{Bindings, Expr, Poly, Var};

const ROUND_TRIP_TOL: f64 = 1e-10;
const ROUND_TRIP_GRID: usize = 21;

#[derive(Clone, Debug, PartialEq)]
pub struct Transform {
    forward: (Expr, Expr),
    inverse: (Expr, Expr),
    window: Window,
}

impl Transform {
    /// A transform from explicit forward and inverse maps, verified on `window`.
    pub fn new(
        forward: (Expr, Expr),
        inverse: (Expr, Expr),
        window: Window,
    ) -> Result<Self, SystemError> {
        for e in [&forward.0, &forward.1, &inverse.0, &inverse.1] {
            if let Some(var) = e.free_vars().into_iter().find(|v| !matches!(v, Var::X | Var::Y)) {
                return Err(SystemError::WrongVariables {
                    component: "transform",
                    var,
                    expected: "Cartesian",
                });
            }
        }
        let t = Self {
            forward,
            inverse,
            window,
        };
        t.verify()?;
        Ok(t)
    }

    pub fn identity() -> Self {
        Self {
            forward: (Expr::x(), Expr::y()),
            inverse: (Expr::x(), Expr::y()),
            window: Window::default(),
        }
    }

    pub fn forward(&self) -> (&Expr, &Expr) {
        (&self.forward.0, &self.forward.1)
    }

    pub fn inverse(&self) -> (&Expr, &Expr) {
        (&self.inverse.0, &self.inverse.1)
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// The same transform run backwards.
    pub fn inverted(&self) -> Self {
        Self {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
            window: self.window,
        }
    }

    pub fn map_forward(&self, x: f64, y: f64) -> Result<(f64, f64), SystemError> {
        eval_pair(&self.forward, x, y)
    }

    pub fn map_inverse(&self, u: f64, v: f64) -> Result<(f64, f64), SystemError> {
        eval_pair(&self.inverse, u, v)
    }

    /// Round trip in both directions on the verification grid.
    pub fn verify(&self) -> Result<(), SystemError> {
        for (a, b) in self.window.grid(ROUND_TRIP_GRID, ROUND_TRIP_GRID) {
            for (first, second) in [
                (&self.inverse, &self.forward),
                (&self.forward, &self.inverse),
            ] {
                let (p, q) = eval_pair(first, a, b)?;
                let (a2, b2) = eval_pair(second, p, q)?;
                let defect = (a2 - a).abs().max((b2 - b).abs());
                if defect > ROUND_TRIP_TOL * (1.0 + a.abs().max(b.abs())) || defect.is_nan() {
                    return Err(SystemError::TransformNotInvertible { x: a, y: b, defect });
                }
            }
        }
        Ok(())
    }

    /// `phi(u(x, y), v(x, y))` for `phi` written in the new coordinates.
    pub fn pull_back(&self, phi: &Expr) -> Expr {
        phi.substitute(&[(Var::X, self.forward.0.clone()), (Var::Y, self.forward.1.clone())])
    }
}

fn eval_pair(pair: &(Expr, Expr), x: f64, y: f64) -> Result<(f64, f64), SystemError> {
    let b = Bindings::xy(x, y);
    Ok((pair.0.eval(&b)?, pair.1.eval(&b)?))
}

/// Inverse of a triangular polynomial change `u = x`, `v = y + g(x)`.
pub fn invert_transform(u: &Expr, v: &Expr) -> Result<Transform, SystemError> {
    invert_transform_on(u, v, Window::default())
}

pub fn invert_transform_on(u: &Expr, v: &Expr, window: Window) -> Result<Transform, SystemError> {
    if u.simplify() != Expr::x() {
        return Err(SystemError::UnsupportedTransformClass(format!(
            "first component must be `x`, got `{u}`"
        )));
    }
    let pv = Poly::from_expr(v)
        .map_err(|e| SystemError::UnsupportedTransformClass(e.to_string()))?;
    let by_y = pv.collect(Var::Y);
    let unit = by_y.get(&1).and_then(|c| c.as_constant()) == Some(1.0);
    if !unit || by_y.keys().any(|k| *k > 1) {
        return Err(SystemError::UnsupportedTransformClass(format!(
            "second component must be `y + g(x)`, got `{v}`"
        )));
    }
    let g = by_y.get(&0).cloned().unwrap_or_default();
    if g.vars().iter().any(|var| *var != Var::X) {
        return Err(SystemError::UnsupportedTransformClass(format!(
            "g must depend on x only, got `{}`",
            g.to_expr()
        )));
    }
    let inverse = (Expr::x(), Expr::y() - g.to_expr());
    Transform::new((Expr::x(), v.clone()), inverse, window)
}

/// Push `s` forward through `t`: the field of `(u, v)` written in `(x, y)`.
pub fn apply_transform(s: &PlanarSystem, t: &Transform) -> Result<PlanarSystem, SystemError> {
    t.verify()?;
    let (u, v) = t.forward();
    let rate = |c: &Expr| c.diff(Var::X) * s.fx.clone() + c.diff(Var::Y) * s.fy.clone();
    let back = [
        (Var::X, t.inverse.0.clone()),
        (Var::Y, t.inverse.1.clone()),
    ];
    PlanarSystem::new(
        rate(u).substitute(&back).canonical(),
        rate(v).substitute(&back).canonical(),
    )
}
