//! POIs in descending order of partial score, found by expanding Voronoi cells.
//!
//! For a frequent keyword `t`, the nearest POI with `t` not yet discovered is
//! always adjacent (in `t`'s diagram) to a discovered one, provided the owner
//! of the query vertex was discovered first. The nearest frontier distance per
//! keyword therefore bounds the score of everything undiscovered, which lets
//! the stream emit POIs in exact order. Infrequent keywords are read from
//! their posting lists up front.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use crate::geo::{KeywordId, Location, PoiId};
use crate::scoring::dot;

use super::QueryContext;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub poi: PoiId,
    pub score: f64,
    pub f_t: f64,
    pub dist: f64,
}

#[derive(PartialEq)]
struct Ready(Hit);

impl Eq for Ready {}

impl Ord for Ready {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0
            .score
            .total_cmp(&o.0.score)
            .then_with(|| o.0.poi.cmp(&self.0.poi))
    }
}

impl PartialOrd for Ready {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(PartialEq)]
struct Front(f64, PoiId);

impl Eq for Front {}

impl Ord for Front {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then_with(|| self.1.cmp(&o.1))
    }
}

impl PartialOrd for Front {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

struct Lane {
    keyword: KeywordId,
    /// `w_t * max_p TS(t, p)`.
    cap: f64,
    frontier: BinaryHeap<Reverse<Front>>,
    queued: HashSet<PoiId>,
}

pub struct PartialScoreStream<'c, 'a> {
    ctx: &'c QueryContext<'a>,
    query: Location,
    weights: Vec<(KeywordId, f64)>,
    lanes: Vec<Lane>,
    discovered: HashSet<PoiId>,
    ready: BinaryHeap<Ready>,
}

impl<'c, 'a> PartialScoreStream<'c, 'a> {
    /// `weights` are the query-side keyword weights, sorted by keyword. Scores
    /// are `partial(dot(weights, TS(., p)), dist(query, p))`.
    pub fn new(ctx: &'c QueryContext<'a>, query: Location, weights: Vec<(KeywordId, f64)>) -> Self {
        let mut s = PartialScoreStream {
            ctx,
            query,
            lanes: Vec::new(),
            discovered: HashSet::new(),
            ready: BinaryHeap::new(),
            weights,
        };
        for &p in ctx.ds.pois_at(query.vertex) {
            if s.relevant(p) {
                s.discover(p);
            }
        }
        let weights = s.weights.clone();
        for &(t, w) in &weights {
            match ctx.index.nvd(t) {
                Some(nvd) => {
                    let mut lane = Lane {
                        keyword: t,
                        cap: w * ctx.index.terms.max_poi_weight(t),
                        frontier: BinaryHeap::new(),
                        queued: HashSet::new(),
                    };
                    if let Some((owner, _)) = nvd.lookup(query.vertex) {
                        let d = s.distance(owner);
                        lane.queued.insert(owner);
                        lane.frontier.push(Reverse(Front(d, owner)));
                    }
                    s.lanes.push(lane);
                }
                None => {
                    for &p in ctx.index.poi_postings(t) {
                        s.discover(p);
                    }
                }
            }
        }
        // Lanes discovered before their creation still need their neighbours queued.
        let found: Vec<PoiId> = s.discovered.iter().copied().collect();
        for p in found {
            s.queue_neighbours(p);
        }
        s
    }

    fn relevant(&self, p: PoiId) -> bool {
        let poi = &self.ctx.ds.pois[p as usize];
        self.weights.iter().any(|&(t, _)| poi.has_keyword(t))
    }

    fn distance(&self, p: PoiId) -> f64 {
        self.ctx
            .index
            .oracle
            .shortest_distance(&self.query, &self.ctx.ds.pois[p as usize].loc)
    }

    fn queue_neighbours(&mut self, p: PoiId) {
        let ctx = self.ctx;
        let poi = &ctx.ds.pois[p as usize];
        for i in 0..self.lanes.len() {
            let t = self.lanes[i].keyword;
            if !poi.has_keyword(t) {
                continue;
            }
            let nvd = ctx.index.nvd(t).expect("lane keyword is frequent");
            for &q in nvd.neighbors(p) {
                if !self.discovered.contains(&q) && self.lanes[i].queued.insert(q) {
                    let d = self.distance(q);
                    self.lanes[i].frontier.push(Reverse(Front(d, q)));
                }
            }
        }
    }

    fn discover(&mut self, p: PoiId) {
        if !self.discovered.insert(p) {
            return;
        }
        let dist = self.distance(p);
        let f_t = dot(&self.weights, self.ctx.index.terms.poi_terms(p));
        let score = self.ctx.params.partial(f_t, dist);
        self.ready.push(Ready(Hit {
            poi: p,
            score,
            f_t,
            dist,
        }));
        self.queue_neighbours(p);
    }

    fn clean_frontiers(&mut self) {
        for lane in &mut self.lanes {
            while let Some(Reverse(Front(_, q))) = lane.frontier.peek() {
                if self.discovered.contains(q) {
                    lane.frontier.pop();
                } else {
                    break;
                }
            }
        }
    }

    /// Upper bound on the score of any undiscovered POI.
    fn bound(&self) -> f64 {
        let mut fronts: Vec<(f64, f64)> = self
            .lanes
            .iter()
            .filter_map(|l| l.frontier.peek().map(|Reverse(Front(d, _))| (*d, l.cap)))
            .collect();
        if fronts.is_empty() {
            return f64::NEG_INFINITY;
        }
        fronts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = f64::NEG_INFINITY;
        let mut cap = 0.0;
        for (d, c) in fronts {
            cap += c;
            best = best.max(self.ctx.params.partial(cap, d));
        }
        best
    }

    fn expand_nearest(&mut self) -> bool {
        let lane = self
            .lanes
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.frontier.peek().map(|Reverse(f)| (i, f.0, f.1)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)));
        match lane {
            Some((i, _, _)) => {
                let Reverse(Front(_, q)) = self.lanes[i].frontier.pop().expect("peeked");
                self.discover(q);
                true
            }
            None => false,
        }
    }
}

impl PartialScoreStream<'_, '_> {
    /// Every POI found after expanding up to `budget` POIs nearest first,
    /// without certifying any order.
    pub fn scan(mut self, budget: usize) -> Vec<Hit> {
        while self.discovered.len() < budget && self.expand_nearest() {}
        self.ready.into_iter().map(|r| r.0).collect()
    }
}

impl Iterator for PartialScoreStream<'_, '_> {
    type Item = Hit;

    fn next(&mut self) -> Option<Hit> {
        loop {
            self.clean_frontiers();
            let bound = self.bound();
            if let Some(top) = self.ready.peek() {
                if top.0.score > bound {
                    return self.ready.pop().map(|r| r.0);
                }
            }
            if !self.expand_nearest() {
                return self.ready.pop().map(|r| r.0);
            }
        }
    }
}
