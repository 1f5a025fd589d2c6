//! Lyapunov functions for planar systems with limit cycles.
//!
//! A planar field is rewritten in polar coordinates, its radial rate factored
//! as `r' = U0(r) * (angular part)`, and the potential `phi(r) = -int U0`
//! carried back to Cartesian coordinates. Around that core sit a Theodorsen
//! boundary map for star-shaped curves, a scalar-diffusion decomposition of
//! the field and comparisons between systems.
//!
//! ```
//! use limitlyap::pipeline::{run_pipeline, PipelineOptions};
//! use limitlyap::system::PlanarSystem;
//!
//! let s = PlanarSystem::parse("-y + x*(1 - (x^2 + y^2))", "x + y*(1 - (x^2 + y^2))").unwrap();
//! let out = run_pipeline(&s, None, &PipelineOptions::default()).unwrap();
//! assert_eq!(out.cycles.len(), 1);
//! assert!(out.pass);
//! ```

pub mod conformal;
pub mod cycle;
pub mod decomp;
pub mod definition;
pub mod equiv;
pub mod error;
pub mod expr;
pub mod lyapunov;
pub mod ode;
pub mod pipeline;
pub mod system;

pub use error::Error;

// guide chapters, compiled and run as doctests
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/systems.md")]
    mod systems {}
    #[doc = include_str!("../../../book/src/cycles.md")]
    mod cycles {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    mod potentials {}
    #[doc = include_str!("../../../book/src/transforms.md")]
    mod transforms {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/boundary.md")]
    mod boundary {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
