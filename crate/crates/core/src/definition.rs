//! Line-oriented system definition files.
//!
//! ```text
//! # circle with a stable limit cycle
//! fx = -y + x*(1 - (x^2 + y^2))
//! fy = x + y*(1 - (x^2 + y^2))
//! window = -2, 2, -2, 2
//! ```
//!
//! Keys: `fx`, `fy` (Cartesian field), `rdot`, `thetadot` (polar field),
//! `transform_u`, `transform_v` (forward change of variables), `inverse_x`,
//! `inverse_y` (optional explicit inverse), `window`, `rho` (curve radius),
//! `u0` (radial factor). Blank lines and text after `#` are ignored.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::conformal::JordanCurve;
use crate::expr::{parse, Expr, ParseError};
use crate::system::{invert_transform_on, PlanarSystem, PolarSystem, SystemError, Transform, Window};

const KEYS: [&str; 11] = [
    "fx",
    "fy",
    "rdot",
    "thetadot",
    "transform_u",
    "transform_v",
    "inverse_x",
    "inverse_y",
    "window",
    "rho",
    "u0",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DefinitionErrorKind {
    #[error("expected `key = value`")]
    MissingEquals,
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    DuplicateKey(String),
    #[error("`{key}`: {source}")]
    Expression {
        key: String,
        #[source]
        source: ParseError,
    },
    #[error("window must be four numbers xmin, xmax, ymin, ymax with xmin < xmax and ymin < ymax")]
    Window,
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    System(SystemError),
}

/// A definition error with the 1-based line it refers to (0 when the problem is
/// a missing key).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct DefinitionError {
    pub line: usize,
    pub kind: DefinitionErrorKind,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Definition {
    exprs: BTreeMap<&'static str, (usize, Expr)>,
    pub window: Option<Window>,
}

fn parse_window(v: &str) -> Option<Window> {
    let nums: Vec<f64> = v
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .ok()?;
    let w = match nums[..] {
        [a, b, c, d] => Window::new(a, b, c, d),
        _ => return None,
    };
    w.is_valid().then_some(w)
}

pub fn parse_definition(text: &str) -> Result<Definition, DefinitionError> {
    let mut def = Definition::default();
    let mut window_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |kind| DefinitionError { line, kind };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(DefinitionErrorKind::MissingEquals))?;
        let (key, value) = (key.trim(), value.trim());
        let key = *KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| err(DefinitionErrorKind::UnknownKey(key.to_string())))?;
        let seen = if key == "window" {
            window_line.is_some()
        } else {
            def.exprs.contains_key(key)
        };
        if seen {
            return Err(err(DefinitionErrorKind::DuplicateKey(key.to_string())));
        }
        if key == "window" {
            def.window = Some(parse_window(value).ok_or_else(|| err(DefinitionErrorKind::Window))?);
            window_line = Some(line);
            continue;
        }
        let e = parse(value).map_err(|source| {
            err(DefinitionErrorKind::Expression {
                key: key.to_string(),
                source,
            })
        })?;
        def.exprs.insert(key, (line, e));
    }
    Ok(def)
}

impl Definition {
    pub fn get(&self, key: &str) -> Option<&Expr> {
        self.exprs.get(key).map(|(_, e)| e)
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.exprs.get(key).map_or(0, |(l, _)| *l)
    }

    pub fn has(&self, key: &str) -> bool {
        self.exprs.contains_key(key)
    }

    fn need(&self, key: &'static str) -> Result<Expr, DefinitionError> {
        self.get(key).cloned().ok_or(DefinitionError {
            line: 0,
            kind: DefinitionErrorKind::Missing(key),
        })
    }

    fn system_err(&self, key: &str, e: SystemError) -> DefinitionError {
        DefinitionError {
            line: self.line_of(key),
            kind: DefinitionErrorKind::System(e),
        }
    }

    pub fn window_or_default(&self) -> Window {
        self.window.unwrap_or_default()
    }

    pub fn planar(&self) -> Result<PlanarSystem, DefinitionError> {
        let (fx, fy) = (self.need("fx")?, self.need("fy")?);
        PlanarSystem::new(fx, fy).map_err(|e| {
            let key = match &e {
                SystemError::WrongVariables { component, .. } => component,
                _ => "fx",
            };
            self.system_err(key, e)
        })
    }

    pub fn polar(&self) -> Result<PolarSystem, DefinitionError> {
        let (rd, td) = (self.need("rdot")?, self.need("thetadot")?);
        PolarSystem::new(rd, td).map_err(|e| {
            let key = match &e {
                SystemError::WrongVariables { component, .. } => component,
                _ => "rdot",
            };
            self.system_err(key, e)
        })
    }

    pub fn is_polar(&self) -> bool {
        self.has("rdot") && !self.has("fx")
    }

    /// The change of variables, if `transform_u`/`transform_v` are present.
    pub fn transform(&self) -> Result<Option<Transform>, DefinitionError> {
        if !self.has("transform_u") && !self.has("transform_v") {
            return Ok(None);
        }
        let (u, v) = (self.need("transform_u")?, self.need("transform_v")?);
        let window = self.window_or_default();
        let t = if self.has("inverse_x") || self.has("inverse_y") {
            let inv = (self.need("inverse_x")?, self.need("inverse_y")?);
            Transform::new((u, v), inv, window).map_err(|e| self.system_err("inverse_x", e))?
        } else {
            invert_transform_on(&u, &v, window).map_err(|e| self.system_err("transform_v", e))?
        };
        Ok(Some(t))
    }

    pub fn curve(&self) -> Result<JordanCurve, DefinitionError> {
        let rho = self.need("rho")?;
        JordanCurve::new(rho, (0.0, 0.0)).map_err(|e| DefinitionError {
            line: self.line_of("rho"),
            kind: DefinitionErrorKind::System(SystemError::UnsupportedTransformClass(e.to_string())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{poly_equal, Var};

    #[test]
    fn parses_fixture() {
        let d = parse_definition(
            "# vibration equation\nfx = y\nfy = -(4*x^2 - 1)*y - x + x^3 - x^5  # damping\n\ntransform_u = x\ntransform_v = y - x + x^3\nwindow = -1.5, 1.5, -1.5, 1.5\n",
        )
        .unwrap();
        let s = d.planar().unwrap();
        assert_eq!(s.eval(0.0, 0.0).unwrap(), [0.0, 0.0]);
        assert_eq!(d.window, Some(Window::square(1.5)));
        let t = d.transform().unwrap().unwrap();
        assert!(poly_equal(t.inverse().1, &parse("y + x - x^3").unwrap(), &[Var::X, Var::Y], None).unwrap());
        assert_eq!(d.line_of("fy"), 3);
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_definition("fx = y\nfy x\n").unwrap_err();
        assert_eq!((e.line, e.kind), (2, DefinitionErrorKind::MissingEquals));
        let e = parse_definition("fx = y\n\nfz = 1").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, DefinitionErrorKind::UnknownKey(_)));
        let e = parse_definition("fx = y +").unwrap_err();
        assert!(matches!(e.kind, DefinitionErrorKind::Expression { .. }));
        assert!(e.to_string().starts_with("line 1: `fx`:"));
        let e = parse_definition("fx = 1\nfx = 2").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_definition("window = 1, 0, 0, 1").unwrap_err();
        assert_eq!(e.kind, DefinitionErrorKind::Window);
    }

    #[test]
    fn semantic_errors_point_at_keys() {
        let d = parse_definition("fx = y\nfy = r").unwrap();
        assert_eq!(d.planar().unwrap_err().line, 2);
        let d = parse_definition("fx = y").unwrap();
        assert_eq!(d.planar().unwrap_err().kind, DefinitionErrorKind::Missing("fy"));
        let d = parse_definition("transform_u = y\ntransform_v = x").unwrap();
        assert_eq!(d.transform().unwrap_err().line, 2);
    }

    #[test]
    fn polar_and_curve_keys() {
        let d = parse_definition("rdot = r - r^3\nthetadot = 1\nrho = 2").unwrap();
        assert!(d.is_polar());
        assert_eq!(d.polar().unwrap().eval(1.0, 0.0).unwrap(), [0.0, 1.0]);
        assert_eq!(d.curve().unwrap().radius(0.3).unwrap(), 2.0);
        assert!(d.transform().unwrap().is_none());
    }
}
