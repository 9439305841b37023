pub mod actions;
pub mod error;
pub mod format;
pub mod fourier;
pub mod hill;
pub mod kdv;
pub mod ode;
pub mod quadrature;
pub mod riccati;
pub mod roots;
pub mod verify;

pub use error::{Error, Result};
pub use fourier::{SobolevIndex, TrigPotential};
