pub mod contacts;
pub mod coupling;
pub mod dlcm;
pub mod error;
pub mod io;
pub mod ndr;
pub mod ode;
pub mod rdme;
pub mod ssa;

pub use error::{Error, Result};
