pub mod corpus;
pub mod curate;
pub mod dedup;
pub mod error;
pub mod labelmodel;
pub mod operators;
pub mod search;
pub mod stats;
pub mod synthbench;
pub mod weaklabel;

pub use error::{Error, Result};
