use crate::brknn::BrknnResult;
use crate::geo::{PoiId, SocialNetwork, UserId};

/// The social network plus one node per candidate POI, with an edge of
/// weight 1 from each POI to each of its reverse top-k users.
///
/// Candidates are addressed by their position in `pois`.
#[derive(Clone)]
pub struct HeterogeneousGraph<'a> {
    pub social: &'a SocialNetwork,
    pub pois: Vec<PoiId>,
    members: Vec<Vec<UserId>>,
    user_pois: Vec<Vec<u32>>,
    reachable: Vec<bool>,
}

impl<'a> HeterogeneousGraph<'a> {
    /// `members[i]` are the users of candidate `pois[i]`; user ids must be valid.
    pub fn new(social: &'a SocialNetwork, pois: Vec<PoiId>, members: Vec<Vec<UserId>>) -> Self {
        assert_eq!(pois.len(), members.len());
        let n = social.num_users();
        let mut user_pois = vec![Vec::new(); n];
        let members: Vec<Vec<UserId>> = members
            .into_iter()
            .map(|mut m| {
                m.sort_unstable();
                m.dedup();
                m
            })
            .collect();
        for (i, m) in members.iter().enumerate() {
            for &u in m {
                user_pois[u as usize].push(i as u32);
            }
        }
        let mut reachable = vec![false; n];
        let mut stack: Vec<UserId> = members.iter().flatten().copied().collect();
        for &u in &stack {
            reachable[u as usize] = true;
        }
        while let Some(u) = stack.pop() {
            for &(v, w) in social.out_edges(u) {
                if w > 0.0 && !reachable[v as usize] {
                    reachable[v as usize] = true;
                    stack.push(v);
                }
            }
        }
        HeterogeneousGraph {
            social,
            pois,
            members,
            user_pois,
            reachable,
        }
    }

    pub fn num_users(&self) -> usize {
        self.social.num_users()
    }

    pub fn num_candidates(&self) -> usize {
        self.pois.len()
    }

    pub fn members(&self, i: u32) -> &[UserId] {
        &self.members[i as usize]
    }

    /// Candidates having `u` as a reverse top-k user.
    pub fn candidates_of(&self, u: UserId) -> &[u32] {
        &self.user_pois[u as usize]
    }

    /// False for users no candidate can ever influence.
    pub fn is_reachable(&self, u: UserId) -> bool {
        self.reachable[u as usize]
    }

    /// Union of the reverse top-k users of the given candidates, sorted.
    pub fn seeds(&self, set: &[u32]) -> Vec<UserId> {
        let mut s: Vec<UserId> = set
            .iter()
            .flat_map(|&i| self.members(i).iter().copied())
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn num_edges(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }
}

pub fn build_heterogeneous_graph<'a>(
    social: &'a SocialNetwork,
    brknn: &BrknnResult,
) -> HeterogeneousGraph<'a> {
    HeterogeneousGraph::new(social, brknn.pois.clone(), brknn.members.clone())
}
