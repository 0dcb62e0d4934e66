use crate::datagen::{generate, GenConfig, Preset, RoadModel};
use crate::geo::GeoSocialDataset;
use crate::ignvd::{IgNvdIndex, IndexConfig};
use crate::DistanceStrategy;

/// A few hundred users on a small grid, indexed with a deep G-tree.
pub fn small_world(seed: u64, strategy: DistanceStrategy) -> (GeoSocialDataset, IgNvdIndex) {
    let mut cfg = GenConfig::preset(Preset::Toy1, seed);
    cfg.road = RoadModel::Grid {
        width: 12,
        height: 10,
        min_len: 80,
        max_len: 120,
    };
    cfg.users = 300;
    cfg.pois = 90;
    cfg.vocab_size = 10;
    cfg.poi_keywords_mean = 2.0;
    cfg.user_keywords_mean = 2.0;
    cfg.checkins_mean = 1.5;
    let ds = generate(&cfg).unwrap();
    let index = IgNvdIndex::build(
        &ds,
        IndexConfig {
            fanout: 2,
            leaf_capacity: 8,
            frequency_threshold: 6,
            oracle: strategy,
            compress: true,
        },
    )
    .unwrap();
    (ds, index)
}

/// The toy preset with one friendship per new user, small enough for
/// possible-world enumeration.
pub fn tiny_world(seed: u64) -> (GeoSocialDataset, IgNvdIndex) {
    let mut cfg = GenConfig::preset(Preset::Toy1, seed);
    cfg.friends_per_user = 1;
    let ds = generate(&cfg).unwrap();
    let index = IgNvdIndex::build(
        &ds,
        IndexConfig {
            fanout: 2,
            leaf_capacity: 4,
            frequency_threshold: 3,
            oracle: DistanceStrategy::Dijkstra,
            compress: true,
        },
    )
    .unwrap();
    (ds, index)
}
