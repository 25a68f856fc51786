//! Numerical toolkit for hyper-Kähler quotients of flat space and their
//! Taub-NUT deformations.

pub mod deform;
pub mod error;
pub mod flat_hk;
pub mod kempf_ness;
pub mod lie;
pub mod nahm;
pub mod rng;

pub use error::{Error, Result};
pub use lie::{CMat, CVec, Factor, GroupElement, GroupSpec, MomentValue, RVec};
