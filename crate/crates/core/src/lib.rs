//! Scattering analysis for the gain/loss-symmetric complexified Woods-Saxon
//! potential: closed-form amplitudes, critical-energy enumeration, range
//! certification and an independent ODE cross-check.

pub mod amplitudes;
pub mod oracle;
pub mod special;
pub mod spectral;
pub mod units;
pub mod validation;

pub use special::{Kind, SingularValue};
pub use units::{PotentialSpec, Variant};
