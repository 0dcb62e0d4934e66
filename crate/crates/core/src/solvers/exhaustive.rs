//! Best `b`-subset by full enumeration, for tiny instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoSocialDataset, PoiId, SocialNetwork, UserId};
use crate::influence::{estimate_influence_mc, ln_choose, WorldTable};
use crate::oracles::{oracle_brknn, InfluenceMode};

use super::QuerySpec;

/// Largest number of subsets enumerated.
pub const MAX_SUBSETS: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exhaustive {
    /// Best subset, ascending by POI id.
    pub pois: Vec<PoiId>,
    pub influence: f64,
    /// Monte-Carlo standard error; 0 in exact mode.
    pub stderr: f64,
}

/// Reverse top-k sets come from the brute-force oracle, so no index is needed.
pub fn exhaustive_optimal(
    spec: &QuerySpec,
    ds: &GeoSocialDataset,
    mode: InfluenceMode,
) -> Result<Exhaustive> {
    spec.validate(ds.num_pois())?;
    let members = oracle_brknn(ds, &spec.params()?, &spec.pois, spec.k);
    exhaustive_over_members(&ds.social, &spec.pois, &members, spec.b, mode)
}

/// Ties go to the lexicographically smallest sorted id list. In MC mode
/// every subset is evaluated on the same worlds.
pub fn exhaustive_over_members(
    social: &SocialNetwork,
    pois: &[PoiId],
    members: &[Vec<UserId>],
    b: usize,
    mode: InfluenceMode,
) -> Result<Exhaustive> {
    if b == 0 || b > pois.len() || members.len() != pois.len() {
        return Err(Error::Param(
            "need 1 <= b <= |candidates| and one member list per candidate".into(),
        ));
    }
    if ln_choose(pois.len() as u64, b as u64) > MAX_SUBSETS.ln() + 1e-9 {
        return Err(Error::TooLarge(format!(
            "C({}, {b}) subsets exceed {MAX_SUBSETS}",
            pois.len()
        )));
    }
    let mut order: Vec<usize> = (0..pois.len()).collect();
    order.sort_by_key(|&i| pois[i]);
    let table = match mode {
        InfluenceMode::Exact => Some(WorldTable::new(social)?),
        InfluenceMode::Mc { .. } => None,
    };
    let eval = |set: &[usize]| -> Result<(f64, f64)> {
        let mut seeds: Vec<UserId> = set
            .iter()
            .flat_map(|&i| members[i].iter().copied())
            .collect();
        seeds.sort_unstable();
        seeds.dedup();
        match (&table, mode) {
            (Some(t), _) => Ok((t.influence(&seeds), 0.0)),
            (None, InfluenceMode::Mc { sims, seed }) => {
                estimate_influence_mc(social, &seeds, sims, seed).map(|e| (e.mean, e.stderr))
            }
            (None, InfluenceMode::Exact) => unreachable!(),
        }
    };
    let mut best: Option<(Vec<usize>, f64, f64)> = None;
    let mut idx: Vec<usize> = (0..b).collect();
    loop {
        let set: Vec<usize> = idx.iter().map(|&j| order[j]).collect();
        let (v, se) = eval(&set)?;
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((set, v, se));
        }
        // Next combination in lexicographic order.
        let Some(pos) = (0..b).rev().find(|&i| idx[i] < pois.len() - b + i) else {
            break;
        };
        idx[pos] += 1;
        for j in pos + 1..b {
            idx[j] = idx[j - 1] + 1;
        }
    }
    let (set, influence, stderr) = best.expect("at least one subset");
    Ok(Exhaustive {
        pois: set.iter().map(|&i| pois[i]).collect(),
        influence,
        stderr,
    })
}
