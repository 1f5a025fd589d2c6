//! End-to-end construction: system, optional rectifying transform, polar form,
//! cycles, potential, Cartesian form, pull-back, verification and criteria.

use crate::cycle::{find_cycle_radii, LimitCycle, DEFAULT_R_MAX};
use crate::decomp::{criteria_report, CriteriaReport};
use crate::error::Error;
use crate::expr::Expr;
use crate::lyapunov::{
    check_angular_factor, compose_with_inverse, construct_potential, infimum_certificate,
    lie_derivative, to_cartesian, verify_lyapunov, AngularCheck, InfimumCertificate,
    LyapunovReport, Potential,
};
use crate::system::{
    apply_transform, classify_radial_form, to_polar, PlanarSystem, PolarSystem, RadialForm,
    RadialKind, Transform, Window,
};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOptions {
    pub window: Window,
    /// Verification grid is `grid x grid`.
    pub grid: usize,
    pub r_max: f64,
    /// Points sampled on the cycle for the criteria report.
    pub cycle_samples: usize,
    /// Accept odd powers of `r` in the potential.
    pub allow_non_smooth: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            window: Window::default(),
            grid: 101,
            r_max: DEFAULT_R_MAX,
            cycle_samples: 360,
            allow_non_smooth: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    /// The field after the transform, in the new coordinates.
    pub rectified: PlanarSystem,
    pub polar: PolarSystem,
    pub form: RadialForm,
    pub cycles: Vec<LimitCycle>,
    pub potential: Potential,
    /// `phi` in the rectified coordinates.
    pub phi_rectified: Expr,
    /// `phi` in the original coordinates.
    pub phi: Expr,
    pub lie: Expr,
    pub lyapunov: LyapunovReport,
    pub angular: Option<AngularCheck>,
    pub infimum: Option<InfimumCertificate>,
    /// Criteria on the first cycle, if any.
    pub criteria: Option<CriteriaReport>,
    pub pass: bool,
}

pub fn run_pipeline(
    s: &PlanarSystem,
    transform: Option<&Transform>,
    opts: &PipelineOptions,
) -> Result<PipelineOutcome, Error> {
    let rectified = match transform {
        Some(t) => apply_transform(s, t)?,
        None => s.clone(),
    };
    let polar = to_polar(&rectified);
    let form = classify_radial_form(&polar);
    let u0 = form.upsilon0.clone().ok_or_else(|| {
        Error::Pipeline(format!(
            "no radial factor: {}",
            form.diagnostic.as_deref().unwrap_or("unclassified")
        ))
    })?;
    let cycles = find_cycle_radii(&u0, opts.r_max)?;
    let mut potential = construct_potential(&u0, opts.r_max)?;
    let phi_rectified = to_cartesian(&potential, opts.allow_non_smooth)?;
    potential.phi_xy = Some(phi_rectified.clone());
    let phi = match transform {
        Some(t) => compose_with_inverse(&phi_rectified, t),
        None => phi_rectified.clone(),
    };
    let lie = lie_derivative(&phi, s);
    let lyapunov = verify_lyapunov(&phi, s, opts.window, opts.grid)?;
    let angular = match (form.kind, &form.upsilon1) {
        (RadialKind::Separable, Some(u1)) => Some(check_angular_factor(u1)?),
        _ => None,
    };
    let infimum = potential.phi_r.as_ref().and_then(infimum_certificate);
    let criteria = match cycles.first() {
        Some(c) => Some(criteria_report(s, &phi, c, opts.cycle_samples, transform)?),
        None => None,
    };
    let pass = lyapunov.pass && angular.as_ref().is_none_or(|a| a.nonnegative);
    Ok(PipelineOutcome {
        rectified,
        polar,
        form,
        cycles,
        potential,
        phi_rectified,
        phi,
        lie,
        lyapunov,
        angular,
        infimum,
        criteria,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::Verdict;
    use crate::expr::{parse, poly_equal_with_tol, SampleGrid, Var};
    use crate::system::invert_transform;

    #[test]
    fn circle_pipeline() {
        let s = PlanarSystem::parse("-y + x*(1 - (x^2 + y^2))", "x + y*(1 - (x^2 + y^2))").unwrap();
        let out = run_pipeline(&s, None, &PipelineOptions::default()).unwrap();
        assert_eq!(out.form.kind, RadialKind::PureRadial);
        assert_eq!(out.cycles.len(), 1);
        let grid = SampleGrid::default_for(&[Var::X, Var::Y]);
        let want = parse("(1/4)*(x^2 + y^2)*(x^2 + y^2 - 2)").unwrap();
        assert!(poly_equal_with_tol(&out.phi, &want, &grid, 1e-12).unwrap());
        assert!(out.pass);
        assert_eq!(out.criteria.unwrap().verdict, Verdict::Disagree);
        assert!((out.infimum.unwrap().infimum + 0.25).abs() < 1e-12);
    }

    #[test]
    fn vibration_pipeline() {
        let s = PlanarSystem::parse("y", "-(4*x^2 - 1)*y - x + x^3 - x^5").unwrap();
        let t = invert_transform(&parse("x").unwrap(), &parse("y - x + x^3").unwrap()).unwrap();
        let opts = PipelineOptions {
            window: Window::square(1.5),
            ..Default::default()
        };
        let out = run_pipeline(&s, Some(&t), &opts).unwrap();
        assert_eq!(out.form.kind, RadialKind::Separable);
        assert!(out.angular.as_ref().unwrap().nonnegative);
        let grid = SampleGrid::new()
            .axis(Var::X, -1.5, 1.5, 31)
            .axis(Var::Y, -1.5, 1.5, 31);
        let want = parse("(1/4)*(x^2 + (y - x + x^3)^2)*(x^2 + (y - x + x^3)^2 - 2)").unwrap();
        assert!(poly_equal_with_tol(&out.phi, &want, &grid, 1e-10).unwrap());
        assert!(out.pass);
        assert!(out.criteria.unwrap().max_abs_hp <= 1e-9);
    }

    #[test]
    fn unclassified_fails() {
        let s = PlanarSystem::parse("exp(x) - 1", "y").unwrap();
        assert!(matches!(
            run_pipeline(&s, None, &PipelineOptions::default()),
            Err(Error::Pipeline(_))
        ));
    }
}
