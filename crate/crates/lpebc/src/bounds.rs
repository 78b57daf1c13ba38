//! Capacity-region bounds for the layered erasure broadcast channel: the
//! exact no-CSIT region, the full-lookahead region, and the feedback outer
//! bound obtained by enhancing receivers along every user ordering.

use crate::channel::ChannelStats;
use crate::error::Result;
use crate::geometry::{HalfPlane, Weights};

/// All `K!` orderings of the users, in lexicographic order.
#[derive(Clone, Debug)]
pub struct PermutationSet {
    perms: Vec<Vec<usize>>,
}

impl PermutationSet {
    pub fn new(users: usize) -> Self {
        assert!(
            (1..=8).contains(&users),
            "permutations are enumerated exhaustively; need 1 <= K <= 8"
        );
        let mut perms = Vec::new();
        let mut current = Vec::with_capacity(users);
        let mut used = vec![false; users];
        build(&mut perms, &mut current, &mut used, users);
        fn build(
            perms: &mut Vec<Vec<usize>>,
            current: &mut Vec<usize>,
            used: &mut [bool],
            users: usize,
        ) {
            if current.len() == users {
                perms.push(current.clone());
                return;
            }
            for u in 0..users {
                if !used[u] {
                    used[u] = true;
                    current.push(u);
                    build(perms, current, used, users);
                    current.pop();
                    used[u] = false;
                }
            }
        }
        PermutationSet { perms }
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.perms.iter().map(|p| p.as_slice())
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }
}

/// Weighted-sum support of the no-CSIT capacity region:
/// `sum_q max_u (w_u Pr[N_u >= q])`.
pub fn support_no_csit(stats: &ChannelStats, w: &Weights) -> f64 {
    assert_eq!(stats.users(), w.len(), "weights sized for the wrong K");
    (1..=stats.layers())
        .map(|q| {
            (0..stats.users())
                .map(|u| w.get(u) * stats.marginal_geq(u, q))
                .fold(0.0, f64::max)
        })
        .sum()
}

/// The full-lookahead region: one half-plane
/// `sum_{k in S} R_k <= E[max(N_u : u in S)]` per nonempty subset `S`.
pub fn region_full_lookahead(stats: &ChannelStats) -> Result<Vec<HalfPlane>> {
    let k = stats.users();
    let mut hps = Vec::with_capacity((1 << k) - 1);
    for mask in 1usize..(1 << k) {
        let w: Vec<f64> = (0..k)
            .map(|u| if mask & (1 << u) != 0 { 1.0 } else { 0.0 })
            .collect();
        hps.push(HalfPlane::new(
            Weights::new(w)?,
            stats.expected_subset_max(mask),
        )?);
    }
    Ok(hps)
}

/// Weighted-sum bound of one enhanced (physically degraded) channel: user
/// `pi(k)` is handed `max(N_pi(k), ..., N_pi(K))`, so its effective marginal
/// is the suffix-subset statistic.
pub fn support_enhanced(stats: &ChannelStats, w: &Weights, perm: &[usize]) -> f64 {
    assert_eq!(stats.users(), w.len(), "weights sized for the wrong K");
    assert_eq!(perm.len(), stats.users());
    let mut suffix_mask = vec![0usize; perm.len()];
    let mut mask = 0usize;
    for (k, &user) in perm.iter().enumerate().rev() {
        mask |= 1 << user;
        suffix_mask[k] = mask;
    }
    (1..=stats.layers())
        .map(|q| {
            perm.iter()
                .enumerate()
                .map(|(k, &user)| w.get(user) * stats.subset_max_geq(suffix_mask[k], q))
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Outer bound on the feedback capacity region at weight `w`: the tightest
/// enhanced-channel bound over all user orderings.
pub fn support_cof_outer(stats: &ChannelStats, w: &Weights) -> f64 {
    PermutationSet::new(stats.users())
        .iter()
        .map(|perm| support_enhanced(stats, w, perm))
        .fold(f64::INFINITY, f64::min)
}
