pub mod baseline;
pub mod error;
pub mod exec;
pub mod harness;
pub mod hermitian;
pub mod model;
pub mod moop;
pub mod oracle;
pub mod phy;
pub mod robust;
pub mod scenario;
pub mod sdp;

pub use error::{Error, Result};
