pub mod analytic;
pub mod compare;
pub mod error;
pub mod geometry;
pub mod identities;
pub mod model;
pub mod numerics;
pub mod output;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
