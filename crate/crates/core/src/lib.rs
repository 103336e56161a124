//! Characteristic-function tomography of bosonic field states through a
//! Ramsey-interrogated auxiliary qubit.

pub mod bec_analogue;
pub mod error;
pub mod fock_oracle;
pub mod gaussian_field;
pub mod io;
pub mod pulse_protocol;
pub mod quadrature;
pub mod ramsey_readout;
pub mod tomography;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
