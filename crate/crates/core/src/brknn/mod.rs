//! Batch reverse top-k queries over geo-social-textual scores.

mod batch;
mod bounds;
mod cache;
mod stream;
mod topk;

pub use batch::{
    batch_brknn, batch_brknn_with, generate_candidates, BrknnConfig, BrknnResult, BrknnStats,
    CandidateSet, KeywordFilter, PruneEvent,
};
pub use bounds::{
    can_prune_node, can_prune_pseudo, can_prune_user, compute_sb_list, compute_sb_map,
    quick_sb_list, LowerBoundMap, PseudoUser, SbList,
};
pub use cache::BrknnCache;
pub use stream::{Hit, PartialScoreStream};
pub use topk::{topk_gsk, topk_ids};

use crate::error::Result;
use crate::geo::GeoSocialDataset;
use crate::ignvd::IgNvdIndex;
use crate::scoring::{ScoreParams, Scorer};

/// A dataset, its index and the scoring parameters of one query.
#[derive(Clone, Copy)]
pub struct QueryContext<'a> {
    pub ds: &'a GeoSocialDataset,
    pub index: &'a IgNvdIndex,
    pub params: ScoreParams,
}

impl<'a> QueryContext<'a> {
    pub fn new(
        ds: &'a GeoSocialDataset,
        index: &'a IgNvdIndex,
        params: ScoreParams,
    ) -> Result<Self> {
        params.validate()?;
        Ok(QueryContext { ds, index, params })
    }

    /// Like [`QueryContext::new`] but also checks the index belongs to `ds`.
    pub fn checked(
        ds: &'a GeoSocialDataset,
        index: &'a IgNvdIndex,
        params: ScoreParams,
    ) -> Result<Self> {
        index.check_dataset(ds)?;
        Self::new(ds, index, params)
    }

    pub fn scorer(&self) -> Scorer<'a> {
        Scorer {
            ds: self.ds,
            terms: &self.index.terms,
            oracle: &self.index.oracle,
            params: self.params,
        }
    }
}

#[cfg(test)]
mod tests;
