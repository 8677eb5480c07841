pub mod bounds;
pub mod cycles;
pub mod ensemble;
pub mod error;
pub mod ergotropy;
pub mod qmat;
pub mod sampling;
pub mod states;

pub use error::{Error, Result};
