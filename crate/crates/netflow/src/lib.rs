//! File formats, exports and the command-line front end for
//! [`netflow_core`].

pub mod cli;
pub mod error;
pub mod network_io;
pub mod scenario;
pub mod series;
pub mod vtk;

pub use error::{Error, Result};
pub use network_io::{read_network, write_network};
pub use scenario::read_scenario;
