//! Reverse top-k sets for a batch of candidate POIs.
//!
//! Per POI: score the socially relevant users and the users of the POI's own
//! leaf directly, then widen the search over the G-tree one ancestor at a time,
//! discarding whole nodes through their border pseudo-users. Surviving users
//! are verified with an exact top-k query.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{KeywordId, Location, PoiId, UserId, VertexId};
use crate::ignvd::{GTree, NodeId};

use super::bounds::{
    can_prune_user, compute_sb_list, multiplicity, node_pseudo_users, prune_pseudo_at,
    quick_sb_list, sb_map_cached, PseudoUser,
};
use super::cache::BrknnCache;
use super::topk::topk_ids;
use super::QueryContext;

/// POIs scanned per unit of `k` by the two cheap passes that run before the
/// exact `s_k`.
const QUICK_SCAN_PER_K: usize = 2;
const WIDE_SCAN_PER_K: usize = 12;

/// Which POI keywords take part in pseudo-user pruning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeywordFilter {
    #[default]
    All,
    /// Keywords held by fewer users are left out of the pseudo-users; their
    /// holders are scored directly instead, so results stay exact.
    UserFrequent { min_users: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrknnConfig {
    pub k: usize,
    pub filter: KeywordFilter,
    /// Record every pruning decision.
    pub trace: bool,
}

impl BrknnConfig {
    pub fn new(k: usize) -> Self {
        BrknnConfig {
            k,
            filter: KeywordFilter::All,
            trace: false,
        }
    }
}

/// One pruning decision. Each claims that a set of users does not have the
/// POI in its top k.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PruneEvent {
    /// This user, by its own threshold.
    Score { poi: PoiId, user: UserId },
    /// Non-social users of `node` whose shortest path to the POI passes `border`.
    Border {
        poi: PoiId,
        node: NodeId,
        border: VertexId,
    },
    /// All non-social users of `node`.
    Node { poi: PoiId, node: NodeId },
    /// All non-social users outside `node`.
    Outside { poi: PoiId, node: NodeId },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BrknnStats {
    pub candidate_pois: usize,
    pub users_scored: usize,
    pub pruned_by_score: usize,
    pub borders_checked: usize,
    pub pruned_borders: usize,
    pub pruned_nodes: usize,
    pub pruned_outside: usize,
    pub nodes_expanded: usize,
    pub candidate_users: usize,
    pub candidate_pairs: usize,
    pub users_verified: usize,
    pub sb_lists_computed: usize,
    pub quick_lists_computed: usize,
    pub border_lists_computed: usize,
    pub members: usize,
    pub candidate_ms: f64,
    pub verify_ms: f64,
}

impl BrknnStats {
    fn absorb(&mut self, o: &BrknnStats) {
        self.users_scored += o.users_scored;
        self.pruned_by_score += o.pruned_by_score;
        self.borders_checked += o.borders_checked;
        self.pruned_borders += o.pruned_borders;
        self.pruned_nodes += o.pruned_nodes;
        self.pruned_outside += o.pruned_outside;
        self.nodes_expanded += o.nodes_expanded;
        self.sb_lists_computed += o.sb_lists_computed;
        self.quick_lists_computed += o.quick_lists_computed;
        self.border_lists_computed += o.border_lists_computed;
    }
}

/// Users left after pruning, each with the candidate POIs it may rank in its top k.
#[derive(Debug, Clone, Default)]
pub struct CandidateSet {
    /// Distinct candidate POIs, in input order.
    pub pois: Vec<PoiId>,
    /// Sorted by user; POI lists sorted.
    pub users: Vec<(UserId, Vec<PoiId>)>,
    pub stats: BrknnStats,
    pub trace: Vec<PruneEvent>,
}

#[derive(Debug, Clone, Default)]
pub struct BrknnResult {
    pub pois: Vec<PoiId>,
    /// Reverse top-k users per entry of `pois`, sorted.
    pub members: Vec<Vec<UserId>>,
    pub stats: BrknnStats,
    pub trace: Vec<PruneEvent>,
}

impl BrknnResult {
    /// No members for any of `pois`.
    pub fn empty(pois: &[PoiId]) -> Self {
        BrknnResult {
            pois: pois.to_vec(),
            members: vec![Vec::new(); pois.len()],
            stats: BrknnStats::default(),
            trace: Vec::new(),
        }
    }

    pub fn members_of(&self, p: PoiId) -> Option<&[UserId]> {
        self.pois
            .iter()
            .position(|&q| q == p)
            .map(|i| self.members[i].as_slice())
    }

    pub fn total_members(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }
}

/// Exact reverse top-k users of every POI in `pois`.
pub fn batch_brknn(ctx: &QueryContext<'_>, pois: &[PoiId], k: usize) -> Result<BrknnResult> {
    let cache = BrknnCache::new(k, ctx.params.alpha);
    batch_brknn_with(ctx, pois, &BrknnConfig::new(k), &cache)
}

pub fn batch_brknn_with(
    ctx: &QueryContext<'_>,
    pois: &[PoiId],
    cfg: &BrknnConfig,
    cache: &BrknnCache,
) -> Result<BrknnResult> {
    let cands = generate_candidates(ctx, pois, cfg, cache)?;
    let start = Instant::now();
    let verified: Vec<Vec<PoiId>> = cands
        .users
        .par_iter()
        .map(|(u, _)| topk_ids(ctx, *u, cfg.k))
        .collect();
    let slot: HashMap<PoiId, usize> = cands
        .pois
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i))
        .collect();
    let mut members = vec![Vec::new(); cands.pois.len()];
    for ((u, al), top) in cands.users.iter().zip(&verified) {
        for p in al {
            if top.binary_search(p).is_ok() {
                members[slot[p]].push(*u);
            }
        }
    }
    let mut stats = cands.stats;
    stats.users_verified = cands.users.len();
    stats.members = members.iter().map(Vec::len).sum();
    stats.verify_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(BrknnResult {
        pois: cands.pois,
        members,
        stats,
        trace: cands.trace,
    })
}

/// Runs the pruning phases only.
pub fn generate_candidates(
    ctx: &QueryContext<'_>,
    pois: &[PoiId],
    cfg: &BrknnConfig,
    cache: &BrknnCache,
) -> Result<CandidateSet> {
    if cfg.k == 0 {
        return Err(Error::Param("k must be at least 1".into()));
    }
    if cache.k != cfg.k || cache.alpha != ctx.params.alpha {
        return Err(Error::Param(
            "cache was built for different query parameters".into(),
        ));
    }
    let mut seen = HashSet::new();
    let mut distinct = Vec::new();
    for &p in pois {
        if p as usize >= ctx.ds.num_pois() {
            return Err(Error::Param(format!("POI index {p} out of range")));
        }
        if seen.insert(p) {
            distinct.push(p);
        }
    }
    let start = Instant::now();
    let outcomes: Vec<PoiOutcome> = distinct
        .par_iter()
        .map(|&p| PoiRun::new(ctx, cfg, cache, p).run())
        .collect();
    let mut stats = BrknnStats {
        candidate_pois: distinct.len(),
        ..Default::default()
    };
    let mut al: BTreeMap<UserId, Vec<PoiId>> = BTreeMap::new();
    let mut trace = Vec::new();
    for (o, &p) in outcomes.into_iter().zip(&distinct) {
        stats.absorb(&o.stats);
        stats.candidate_pairs += o.candidates.len();
        for u in o.candidates {
            al.entry(u).or_default().push(p);
        }
        trace.extend(o.trace);
    }
    let users: Vec<(UserId, Vec<PoiId>)> = al
        .into_iter()
        .map(|(u, mut ps)| {
            ps.sort_unstable();
            (u, ps)
        })
        .collect();
    stats.candidate_users = users.len();
    stats.candidate_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(CandidateSet {
        pois: distinct,
        users,
        stats,
        trace,
    })
}

#[derive(Default)]
struct PoiOutcome {
    candidates: Vec<UserId>,
    stats: BrknnStats,
    trace: Vec<PruneEvent>,
}

#[derive(PartialEq)]
struct Queued(f64, NodeId, usize);

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0
            .total_cmp(&o.0)
            .then_with(|| self.1.cmp(&o.1))
            .then_with(|| self.2.cmp(&o.2))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

struct PoiRun<'r, 'a> {
    ctx: &'r QueryContext<'a>,
    cfg: &'r BrknnConfig,
    cache: &'r BrknnCache,
    p: PoiId,
    /// POI keywords used for pseudo-users.
    keys: Vec<KeywordId>,
    /// POI keywords whose holders are scored directly.
    rare: Vec<KeywordId>,
    scored: HashSet<UserId>,
    border_dist: HashMap<VertexId, f64>,
    node_users: HashMap<NodeId, Vec<PseudoUser>>,
    out: PoiOutcome,
}

impl<'r, 'a> PoiRun<'r, 'a> {
    fn new(
        ctx: &'r QueryContext<'a>,
        cfg: &'r BrknnConfig,
        cache: &'r BrknnCache,
        p: PoiId,
    ) -> Self {
        let (mut keys, mut rare) = (Vec::new(), Vec::new());
        for &(t, _) in &ctx.ds.pois[p as usize].keywords {
            match cfg.filter {
                KeywordFilter::UserFrequent { min_users }
                    if ctx.index.terms.user_df(t) < min_users =>
                {
                    rare.push(t)
                }
                _ => keys.push(t),
            }
        }
        PoiRun {
            ctx,
            cfg,
            cache,
            p,
            keys,
            rare,
            scored: HashSet::new(),
            border_dist: HashMap::new(),
            node_users: HashMap::new(),
            out: PoiOutcome::default(),
        }
    }

    fn gtree(&self) -> &'a GTree {
        &self.ctx.index.gtree
    }

    fn record(&mut self, e: PruneEvent) {
        if self.cfg.trace {
            self.out.trace.push(e);
        }
    }

    fn score_user(&mut self, u: UserId) {
        if !self.scored.insert(u) {
            return;
        }
        self.out.stats.users_scored += 1;
        let f = self.ctx.scorer().score(u, self.p);
        if f <= 0.0 {
            return;
        }
        let ctx = self.ctx;
        let k = self.cfg.k;
        let (quick, fresh) = self
            .cache
            .quick_list(u, || quick_sb_list(ctx, u, k, QUICK_SCAN_PER_K * k));
        self.out.stats.quick_lists_computed += fresh as usize;
        let prune = can_prune_user(f, &quick)
            || {
                let (wide, fresh) = self
                    .cache
                    .wide_list(u, || quick_sb_list(ctx, u, k, WIDE_SCAN_PER_K * k));
                self.out.stats.quick_lists_computed += fresh as usize;
                can_prune_user(f, &wide)
            }
            || {
                let (sb, fresh) = self.cache.sb_list(u, || compute_sb_list(ctx, u, k));
                self.out.stats.sb_lists_computed += fresh as usize;
                can_prune_user(f, &sb)
            };
        if prune {
            self.out.stats.pruned_by_score += 1;
            self.record(PruneEvent::Score {
                poi: self.p,
                user: u,
            });
        } else {
            self.out.candidates.push(u);
        }
    }

    fn dist_from(&mut self, b: VertexId) -> f64 {
        let (ds, oracle, p) = (self.ctx.ds, &self.ctx.index.oracle, self.p);
        *self
            .border_dist
            .entry(b)
            .or_insert_with(|| oracle.shortest_distance(&Location::at(b), &ds.pois[p as usize].loc))
    }

    fn pseudo_prunes(&mut self, pu: &PseudoUser) -> bool {
        self.out.stats.borders_checked += 1;
        let c_p = self.dist_from(pu.border);
        let (map, fresh) = sb_map_cached(
            self.ctx,
            pu.border,
            &pu.keywords,
            self.cfg.k,
            Some(self.cache),
        );
        self.out.stats.border_lists_computed += fresh;
        prune_pseudo_at(self.ctx, pu, self.p, c_p, &map, self.cfg.k)
    }

    fn pseudo_users(&mut self, node: NodeId) -> &[PseudoUser] {
        let (ctx, keys) = (self.ctx, &self.keys);
        self.node_users
            .entry(node)
            .or_insert_with(|| node_pseudo_users(ctx, node, keys))
    }

    fn relevant(&self, node: NodeId) -> bool {
        !self
            .ctx
            .index
            .inverted(node)
            .user_keywords_in(&self.keys)
            .is_empty()
    }

    /// Queues the borders of each relevant child of `node` except `skip`.
    fn push_children(
        &mut self,
        node: NodeId,
        skip: Option<NodeId>,
        floor: f64,
        q: &mut BinaryHeap<Reverse<Queued>>,
    ) {
        for &c in &self.gtree().node(node).children {
            if Some(c) == skip || !self.relevant(c) {
                continue;
            }
            let borders = self.gtree().node(c).borders.clone();
            if borders.is_empty() {
                self.out.stats.pruned_nodes += 1;
                self.record(PruneEvent::Node {
                    poi: self.p,
                    node: c,
                });
                continue;
            }
            for (i, b) in borders.into_iter().enumerate() {
                let key = self.dist_from(b).max(floor);
                q.push(Reverse(Queued(key, c, i)));
            }
        }
    }

    /// Whether no non-social user outside `node` can rank the POI.
    fn outside_prunes(&mut self, node: NodeId) -> bool {
        let ctx = self.ctx;
        let borders = ctx.index.gtree.node(node).borders.clone();
        if borders.is_empty() {
            return true;
        }
        let keys = ctx.index.inverted(GTree::ROOT).user_keywords_in(&self.keys);
        let m = multiplicity(&keys, |t| ctx.index.user_postings(t));
        borders.into_iter().all(|b| {
            let pu = PseudoUser {
                node,
                border: b,
                keywords: keys.clone(),
                reach: f64::INFINITY,
                multiplicity: m,
            };
            self.pseudo_prunes(&pu)
        })
    }

    fn run(mut self) -> PoiOutcome {
        let ctx = self.ctx;
        let p = self.p;
        let poi = &ctx.ds.pois[p as usize];
        for u in ctx.ds.socially_relevant_users(p) {
            self.score_user(u);
        }
        let leaf = self.gtree().leaf_of(poi.loc.vertex);
        let inv = ctx.index.inverted(leaf);
        for &(t, _) in &poi.keywords {
            if let Some(post) = inv.get(t) {
                for &u in &post.users {
                    self.score_user(u);
                }
            }
        }
        for t in self.rare.clone() {
            for &u in ctx.index.user_postings(t) {
                self.score_user(u);
            }
        }
        if self.keys.is_empty() {
            return self.out;
        }

        let mut q = BinaryHeap::new();
        let mut floor = 0.0f64;
        let mut expanded: HashSet<NodeId> = HashSet::new();
        let mut pruned_borders: HashMap<NodeId, usize> = HashMap::new();
        let mut cur = leaf;
        loop {
            while let Some(Reverse(Queued(key, node, i))) = q.pop() {
                floor = floor.max(key);
                if expanded.contains(&node) {
                    continue;
                }
                let pu = self.pseudo_users(node)[i].clone();
                if self.pseudo_prunes(&pu) {
                    self.out.stats.pruned_borders += 1;
                    self.record(PruneEvent::Border {
                        poi: p,
                        node,
                        border: pu.border,
                    });
                    let n = pruned_borders.entry(node).or_insert(0);
                    *n += 1;
                    if *n == self.gtree().node(node).borders.len() {
                        self.out.stats.pruned_nodes += 1;
                        self.record(PruneEvent::Node { poi: p, node });
                    }
                    continue;
                }
                expanded.insert(node);
                self.out.stats.nodes_expanded += 1;
                if self.gtree().node(node).is_leaf() {
                    let inv = ctx.index.inverted(node);
                    for t in self.keys.clone() {
                        if let Some(post) = inv.get(t) {
                            for &u in &post.users {
                                self.score_user(u);
                            }
                        }
                    }
                } else {
                    self.push_children(node, None, floor, &mut q);
                }
            }
            if cur == GTree::ROOT {
                break;
            }
            if self.outside_prunes(cur) {
                self.out.stats.pruned_outside += 1;
                self.record(PruneEvent::Outside { poi: p, node: cur });
                break;
            }
            let mut child = cur;
            let mut anc = self
                .gtree()
                .node(cur)
                .parent
                .expect("non-root node has a parent");
            while anc != GTree::ROOT && !self.relevant(anc) {
                child = anc;
                anc = self
                    .gtree()
                    .node(anc)
                    .parent
                    .expect("non-root node has a parent");
            }
            self.push_children(anc, Some(child), floor, &mut q);
            cur = anc;
        }
        self.out
    }
}
