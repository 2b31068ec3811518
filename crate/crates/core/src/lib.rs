pub mod cli;
pub mod content;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod hetnet;
pub mod influence;
pub mod numeric;
pub mod recommender;

pub use error::{Error, Result};
