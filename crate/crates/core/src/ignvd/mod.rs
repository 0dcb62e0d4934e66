//! The IG-NVD index: a G-tree over the road network whose nodes carry
//! keyword inverted files and nearest-neighbour maps, plus one network
//! Voronoi diagram per frequent keyword.

pub mod gtree;
mod index;
pub mod nvd;

pub use gtree::{GTree, GTreeNode, NodeId};
pub use index::{IgNvdIndex, IndexConfig, InvertedFile, NnColumn, NnMap, Postings, INDEX_VERSION};
pub use nvd::Nvd;
