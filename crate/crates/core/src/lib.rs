pub mod error;
pub mod exactnum;
pub mod gf;
pub mod characters;
pub mod localfield;
pub mod mra;
pub mod trees;
pub mod analysis;
pub mod synthesis;
pub mod numeric;

pub use error::{Error, Result};
