pub mod cli;
pub mod error;
pub mod forms;
pub mod mesh;
pub mod poly;
pub mod problems;
pub mod solver;
pub mod space;

pub use error::{Error, Result};
