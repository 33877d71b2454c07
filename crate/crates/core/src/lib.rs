//! Coarse Ricci curvature of random walks on finite metric spaces.
//!
//! A walk is a row-stochastic [`measure::RandomWalkKernel`] on a
//! [`space::FiniteMetricSpace`]. Its p-coarse Ricci curvature is
//! `kappa_p(x, y) = 1 - W_p(m_x, m_y) / d(x, y)`, with `W_p` solved exactly
//! by [`transport`].
//!
//! ```
//! use std::sync::Arc;
//! use coarse_ricci::curvature::curvature_report;
//! use coarse_ricci::measure::RandomWalkKernel;
//! use coarse_ricci::space::validate_space;
//!
//! let s = Arc::new(validate_space(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
//! let walk = RandomWalkKernel::new(s, vec![vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
//! let report = curvature_report(&walk, 1.0).unwrap();
//! assert!((report.kappa_inf - 0.6).abs() < 1e-12);
//! ```
//!
//! The other modules build on that: [`lifting`] for the walk on the
//! Wasserstein space, [`dynamics`] for invariant measures and rates,
//! [`gh`] for approximation maps and limits, [`concentration`] for
//! observable diameters. The guide in `book/` walks through each.

pub mod concentration;
pub mod curvature;
pub mod dynamics;
pub mod error;
pub mod gh;
pub mod io;
pub mod lifting;
pub mod measure;
pub mod sampling;
pub mod space;
pub mod transport;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/spaces.md")]
    pub struct Spaces;
    #[doc = include_str!("../../../book/src/transport.md")]
    pub struct Transport;
    #[doc = include_str!("../../../book/src/curvature.md")]
    pub struct Curvature;
    #[doc = include_str!("../../../book/src/lifting.md")]
    pub struct Lifting;
    #[doc = include_str!("../../../book/src/dynamics.md")]
    pub struct Dynamics;
    #[doc = include_str!("../../../book/src/approximation.md")]
    pub struct Approximation;
    #[doc = include_str!("../../../book/src/concentration.md")]
    pub struct Concentration;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
