pub mod bpel;
pub mod cli;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod logic;
pub mod oracle;
pub mod rational;
pub mod report;
pub mod stats;
pub mod wsdl;
pub mod xsd;

pub use error::{Error, Result};
