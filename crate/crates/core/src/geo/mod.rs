//! Road network, social network, POIs, users, dataset I/O and network distances.

pub mod distance;
pub mod io;
pub mod model;

pub use distance::{betweenness_order, DistanceOracle, DistanceStrategy, HubLabels, INFINITY};
pub use io::{load_dataset, manifest_of, write_dataset, Manifest};
pub use model::*;
