//! Greedy selection over the two-hop and hybrid objectives.

use crate::error::{Error, Result};

use super::graph::HeterogeneousGraph;
use super::local::{local_influence_2hop, LocalInfluence};
use super::rr::{lazy_greedy, Covered, RrCollection, RrMode};

/// Greedy maximisation of `I_L^2` over `candidates`.
pub fn greedy_local_2hop(g: &HeterogeneousGraph<'_>, candidates: &[u32], b: usize) -> Vec<u32> {
    let mut st = LocalInfluence::new(g.social);
    lazy_greedy(
        candidates,
        b,
        &mut st,
        |s, c| s.gain(g.members(c)),
        |s, c| s.add(g.members(c)),
    )
}

struct Hybrid<'a, 'r> {
    local: LocalInfluence<'a>,
    cover: Covered<'r>,
    scale: f64,
}

fn scale(r: &RrCollection, users: usize) -> f64 {
    if r.is_empty() {
        0.0
    } else {
        users as f64 / r.len() as f64
    }
}

/// Greedy maximisation of `I_L^2 + n / |R| * Lambda_R` with a beyond-two-hop
/// collection.
pub fn greedy_hybrid(
    g: &HeterogeneousGraph<'_>,
    r: &RrCollection,
    candidates: &[u32],
    b: usize,
) -> Result<Vec<u32>> {
    if r.mode != RrMode::Beyond2Hop {
        return Err(Error::ModeMismatch);
    }
    let mut st = Hybrid {
        local: LocalInfluence::new(g.social),
        cover: Covered::new(r),
        scale: scale(r, g.num_users()),
    };
    Ok(lazy_greedy(
        candidates,
        b,
        &mut st,
        |s, c| s.local.gain(g.members(c)) + s.scale * s.cover.gain(c) as f64,
        |s, c| {
            s.local.add(g.members(c));
            s.cover.take(c);
        },
    ))
}

/// Hybrid influence estimate of a candidate set.
pub fn hybrid_value(g: &HeterogeneousGraph<'_>, r: &RrCollection, set: &[u32]) -> Result<f64> {
    if r.mode != RrMode::Beyond2Hop {
        return Err(Error::ModeMismatch);
    }
    Ok(local_influence_2hop(g.social, &g.seeds(set))
        + scale(r, g.num_users()) * r.coverage(set) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::SocialNetwork;
    use crate::influence::diffusion::exact_influence_possible_worlds;

    fn fixture() -> SocialNetwork {
        SocialNetwork::new(
            7,
            vec![
                (0, 1, 0.6),
                (1, 2, 0.5),
                (2, 3, 0.7),
                (3, 4, 0.9),
                (4, 5, 0.4),
                (6, 0, 0.3),
                (2, 6, 0.5),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_candidate_estimate_is_unbiased() {
        let s = fixture();
        let g = HeterogeneousGraph::new(&s, vec![0, 1], vec![vec![0], vec![3, 5]]);
        let mut r = RrCollection::new(RrMode::Beyond2Hop, 2, 11);
        r.grow_to(&g, 200_000);
        for c in 0..2u32 {
            let exact = exact_influence_possible_worlds(&s, &g.seeds(&[c])).unwrap();
            let est = hybrid_value(&g, &r, &[c]).unwrap();
            assert!(
                (est - exact).abs() < 0.03,
                "candidate {c}: {est} vs {exact}"
            );
        }
    }

    #[test]
    fn full_mode_is_rejected() {
        let s = fixture();
        let g = HeterogeneousGraph::new(&s, vec![0], vec![vec![0]]);
        let r = RrCollection::new(RrMode::Full, 1, 0);
        assert!(matches!(
            hybrid_value(&g, &r, &[0]),
            Err(Error::ModeMismatch)
        ));
        assert!(matches!(
            greedy_hybrid(&g, &r, &[0], 1),
            Err(Error::ModeMismatch)
        ));
    }

    #[test]
    fn two_hop_greedy_prefers_larger_local_gain() {
        let s = SocialNetwork::new(5, vec![(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)]).unwrap();
        let g = HeterogeneousGraph::new(&s, vec![0, 1, 2], vec![vec![3], vec![0], vec![4]]);
        assert_eq!(greedy_local_2hop(&g, &[0, 1, 2], 1), vec![1]);
        assert_eq!(greedy_local_2hop(&g, &[0, 1, 2], 2), vec![1, 0]);
        let r = RrCollection::new(RrMode::Beyond2Hop, 3, 0);
        assert_eq!(greedy_hybrid(&g, &r, &[0, 1, 2], 2).unwrap(), vec![1, 0]);
    }
}
