//! Sign-changing radial solutions of `−Δu = λ u e^{u² + |u|^{1+ε}}` on the unit
//! disk: shooting, energies, blow-up diagnostics, the limiting Liouville
//! profiles and Moser-type test functions.

pub mod blowup;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod field;
pub mod liouville;
pub mod moser;
pub mod nonlinearity;
pub mod quadrature;
pub mod radial_ode;
pub mod shooting;
pub mod verify;

pub use error::{Error, Result};
