//! Geo-social influence maximization over a road network and a social network.
//!
//! The pipeline: index POIs and users with [`ignvd::IgNvdIndex`], compute
//! reverse top-k sets for candidate POIs with [`brknn::batch_brknn`], then
//! pick `b` POIs whose reverse top-k users spread the most influence with one
//! of the [`solvers`].

pub mod error;
pub mod geo;

pub use error::{Error, Result};
pub use geo::{
    DistanceOracle, DistanceStrategy, GeoSocialDataset, KeywordId, Location, Poi, PoiId,
    RoadNetwork, SocialNetwork, User, UserId, VertexId,
};
pub mod brknn;
pub mod datagen;
pub mod ignvd;
pub mod influence;
pub mod oracles;
pub mod scoring;
pub mod solvers;

#[cfg(test)]
pub(crate) mod testutil;
