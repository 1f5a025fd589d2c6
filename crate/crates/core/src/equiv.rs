//! Computable proxies for orbit equivalence of two planar systems: pointwise
//! parallelism of the fields and coincidence of their radial invariant sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycle::{find_cycle_radii, CycleError};
use crate::expr::{Bindings, EvalError, Var};
use crate::system::{classify_radial_form, PlanarSystem, PolarSystem, Window, MIN_RADIUS};

pub const NORM_FLOOR: f64 = 1e-12;
pub const PARALLEL_TOL: f64 = 1e-9;
pub const MATCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquivError {
    #[error("system {which} has no radial factor U0 ({reason})")]
    UnclassifiedSystem { which: usize, reason: String },
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error("grid needs n >= 2 and a non-empty window")]
    InvalidGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parallelism {
    /// Max of `|f1 x f2| / (|f1| |f2|)` over the grid.
    pub residual: f64,
    pub argmax: (f64, f64),
    /// Points skipped because a field vanished or failed to evaluate.
    pub skipped: usize,
    pub compared: usize,
}

fn parallelism_with<F, G>(f1: F, f2: G, window: Window, n: usize) -> Result<Parallelism, EquivError>
where
    F: Fn(f64, f64) -> Result<[f64; 2], EvalError> + Sync,
    G: Fn(f64, f64) -> Result<[f64; 2], EvalError> + Sync,
{
    if n < 2 || !window.is_valid() {
        return Err(EquivError::InvalidGrid);
    }
    let vals: Vec<Option<(f64, f64, f64)>> = window
        .grid(n, n)
        .into_par_iter()
        .map(|(x, y)| {
            let (a, b) = (f1(x, y).ok()?, f2(x, y).ok()?);
            let norms = a[0].hypot(a[1]) * b[0].hypot(b[1]);
            if !(norms > NORM_FLOOR) || !norms.is_finite() {
                return None;
            }
            let cross = a[0] * b[1] - a[1] * b[0];
            Some((x, y, (cross.abs() / norms).min(1.0)))
        })
        .collect();
    let mut out = Parallelism {
        residual: 0.0,
        argmax: (0.0, 0.0),
        skipped: 0,
        compared: 0,
    };
    for v in vals {
        match v {
            Some((x, y, r)) => {
                out.compared += 1;
                if r > out.residual {
                    out.residual = r;
                    out.argmax = (x, y);
                }
            }
            None => out.skipped += 1,
        }
    }
    Ok(out)
}

pub fn parallelism(
    s1: &PlanarSystem,
    s2: &PlanarSystem,
    window: Window,
    n: usize,
) -> Result<Parallelism, EquivError> {
    parallelism_with(|x, y| s1.eval(x, y), |x, y| s2.eval(x, y), window, n)
}

/// Max normalized cross product of the two fields on an `n x n` grid.
pub fn parallelism_residual(
    s1: &PlanarSystem,
    s2: &PlanarSystem,
    window: Window,
    n: usize,
) -> Result<f64, EquivError> {
    Ok(parallelism(s1, s2, window, n)?.residual)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharedRadius {
    pub r: f64,
    pub in_first: bool,
    pub in_second: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivVerdict {
    Parallel,
    SameAttractorsOnly,
    Different,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub parallelism: Parallelism,
    pub shared_cycles: Vec<SharedRadius>,
    /// Rest points of the radial equations; only `r = 0` can occur.
    pub shared_fixed_points: Vec<SharedRadius>,
    pub verdict: EquivVerdict,
}

fn merge(a: &[f64], b: &[f64]) -> Vec<SharedRadius> {
    let mut out: Vec<SharedRadius> = a
        .iter()
        .map(|&r| SharedRadius {
            r,
            in_first: true,
            in_second: false,
        })
        .collect();
    for &r in b {
        match out
            .iter_mut()
            .find(|s| !s.in_second && (s.r - r).abs() <= MATCH_TOL)
        {
            Some(s) => s.in_second = true,
            None => out.push(SharedRadius {
                r,
                in_first: false,
                in_second: true,
            }),
        }
    }
    out.sort_by(|x, y| x.r.total_cmp(&y.r));
    out
}

/// Compare cycles and rest points of two radial systems, plus parallelism of
/// their Cartesian fields on `window`.
pub fn shared_attractors(
    p1: &PolarSystem,
    p2: &PolarSystem,
    r_max: f64,
    window: Window,
    n: usize,
) -> Result<EquivalenceReport, EquivError> {
    let mut radii = Vec::new();
    let mut rest = Vec::new();
    for (which, p) in [(1, p1), (2, p2)] {
        let form = classify_radial_form(p);
        let u0 = form.upsilon0.ok_or_else(|| EquivError::UnclassifiedSystem {
            which,
            reason: form.diagnostic.unwrap_or_else(|| "unclassified".into()),
        })?;
        radii.push(
            find_cycle_radii(&u0, r_max)?
                .into_iter()
                .map(|c| c.radius)
                .collect::<Vec<_>>(),
        );
        let at_origin = u0.eval(&Bindings::new().with(Var::R, 0.0));
        rest.push(match at_origin {
            Ok(v) if v.abs() <= NORM_FLOOR => vec![0.0],
            _ => vec![],
        });
    }
    let field = |p: &PolarSystem, x: f64, y: f64| {
        if x.hypot(y) <= MIN_RADIUS {
            Ok([0.0, 0.0])
        } else {
            p.cartesian_field(x, y)
        }
    };
    let parallelism = parallelism_with(
        |x, y| field(p1, x, y),
        |x, y| field(p2, x, y),
        window,
        n,
    )?;
    let shared_cycles = merge(&radii[0], &radii[1]);
    let shared_fixed_points = merge(&rest[0], &rest[1]);
    let all_shared = shared_cycles
        .iter()
        .chain(&shared_fixed_points)
        .all(|s| s.in_first && s.in_second);
    let verdict = if parallelism.residual <= PARALLEL_TOL {
        EquivVerdict::Parallel
    } else if all_shared {
        EquivVerdict::SameAttractorsOnly
    } else {
        EquivVerdict::Different
    };
    Ok(EquivalenceReport {
        parallelism,
        shared_cycles,
        shared_fixed_points,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> PlanarSystem {
        PlanarSystem::parse("-y + x*(1 - (x^2 + y^2))", "x + y*(1 - (x^2 + y^2))").unwrap()
    }

    fn shifted() -> PlanarSystem {
        PlanarSystem::parse(
            "x*(1 - x^2 - y^2)*(x + 1/2) - y",
            "y*(1 - x^2 - y^2)*(x + 1/2) + x",
        )
        .unwrap()
    }

    fn w() -> Window {
        Window::default()
    }

    #[test]
    fn scaled_fields_are_parallel() {
        let s = circle();
        for k in [1.0, -1.0, 3.0, -3.0, 0.1] {
            assert!(parallelism_residual(&s, &s.scaled(k), w(), 41).unwrap() <= 1e-15);
        }
        let zero = parallelism(&s, &s.scaled(0.0), w(), 41).unwrap();
        assert_eq!((zero.residual, zero.compared), (0.0, 0));
    }

    #[test]
    fn residual_is_symmetric() {
        let (a, b) = (circle(), shifted());
        let ab = parallelism_residual(&a, &b, w(), 41).unwrap();
        let ba = parallelism_residual(&b, &a, w(), 41).unwrap();
        assert_eq!(ab, ba);
        assert!(ab > 1e-9);
    }

    #[test]
    fn cross_product_by_hand() {
        // at (-1/2, 1/2): x^2 + y^2 = 1/2, x + 1/2 = 0
        let (f1, f2) = (shifted().eval(-0.5, 0.5).unwrap(), circle().eval(-0.5, 0.5).unwrap());
        assert_eq!(f1, [-0.5, -0.5]);
        assert_eq!(f2, [-0.75, -0.25]);
        let cross = f1[0] * f2[1] - f1[1] * f2[0];
        assert_eq!(cross, -0.25);
        let window = Window::new(-0.5, -0.5 + 1e-9, 0.5, 0.5 + 1e-9);
        let r = parallelism_residual(&shifted(), &circle(), window, 2).unwrap();
        assert!((r - 0.25 / (0.5f64.sqrt() * 0.625f64.sqrt())).abs() < 1e-6);
        // the fields coincide wherever x + 1/2 = 1
        assert_eq!(shifted().eval(0.5, 0.5).unwrap(), circle().eval(0.5, 0.5).unwrap());
    }

    #[test]
    fn rotated_pairs_share_the_unit_cycle() {
        let p181 = PolarSystem::parse("r*(1 - r^2)", "1").unwrap();
        let coupled = PolarSystem::parse("r*(1 - r^2)*(r*cos(theta) + 1/2)", "1").unwrap();
        let rep = shared_attractors(&coupled, &p181, 10.0, w(), 41).unwrap();
        assert_eq!(rep.shared_cycles.len(), 1);
        let c = rep.shared_cycles[0];
        assert!((c.r - 1.0).abs() < 1e-10 && c.in_first && c.in_second);
        assert_eq!(rep.verdict, EquivVerdict::SameAttractorsOnly);

        let rep = shared_attractors(&p181, &p181, 10.0, w(), 41).unwrap();
        assert_eq!(rep.verdict, EquivVerdict::Parallel);
        assert!(rep.shared_fixed_points[0].in_first && rep.shared_fixed_points[0].in_second);

        let sep = PolarSystem::parse("r*(1 - r^2)*cos(theta)^2", "-1 - cos(theta)*sin(theta)").unwrap();
        let rep = shared_attractors(&sep, &p181, 10.0, w(), 41).unwrap();
        assert!((rep.shared_cycles[0].r - 1.0).abs() < 1e-10);
        assert_eq!(rep.verdict, EquivVerdict::SameAttractorsOnly);
    }

    #[test]
    fn different_cycles() {
        let a = PolarSystem::parse("r*(1 - r^2)", "1").unwrap();
        let b = PolarSystem::parse("r*(4 - r^2)", "1").unwrap();
        let rep = shared_attractors(&a, &b, 10.0, w(), 21).unwrap();
        assert_eq!(rep.verdict, EquivVerdict::Different);
        assert_eq!(rep.shared_cycles.len(), 2);
    }

    #[test]
    fn unclassified_is_an_error() {
        let a = PolarSystem::parse("r*(1 - r^2)", "1").unwrap();
        let b = PolarSystem::parse("exp(r*cos(theta)) - 1", "1").unwrap();
        assert!(matches!(
            shared_attractors(&a, &b, 10.0, w(), 21),
            Err(EquivError::UnclassifiedSystem { which: 2, .. })
        ));
    }
}
