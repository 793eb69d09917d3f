pub mod boundary;
pub mod checks;
pub mod collision;
pub mod config;
pub mod elliptic;
pub mod ensemble;
pub mod equilibria;
pub mod error;
pub mod evolution;
pub mod field;
pub mod harness;
pub mod hyponorm;
pub mod io;
pub mod model;
pub mod moments;
pub mod space;
pub mod special;
pub mod transport;
pub mod velocity;

pub use error::{Error, Result};
