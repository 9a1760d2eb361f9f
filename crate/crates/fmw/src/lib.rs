pub mod diagram;
pub mod dsl;
pub mod engines;
pub mod enumerate;
pub mod error;
pub mod filter;
pub mod limits;
pub mod morphism;
pub mod product;
pub mod structure;
pub mod suites;
pub mod syntax;

pub use error::{Error, Result};
pub use limits::Limits;
