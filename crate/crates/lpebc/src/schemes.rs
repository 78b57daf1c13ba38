//! Analytic evaluators for the achievable feedback schemes on a two-user
//! channel.
//!
//! The per-layer scheme (`ach1_support`) time-shares each layer between the
//! two users with network-coded retransmissions confined to that layer.
//!
//! The two-phase schemes share one prototype: Phase 1 sends every packet
//! uncoded on its layer until *some* user receives it; packets received only
//! by the unintended user become Phase 2 backlog, delivered as random linear
//! combinations useful to both users at once. The three variants differ in
//! what a layer transmits between the end of its own uncoded traffic and the
//! start of Phase 2: nothing (idle), combinations of its own overheard
//! packets (intra-layer), or combinations of every overheard packet so far
//! (inter-layer). All packet counts here are fluid (law-of-large-numbers
//! averages); the integer-packet process lives in the simulator.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::channel::ChannelStats;
use crate::error::{Error, Result};
use crate::geometry::{RatePoint, Weights};

/// How a layer uses the slots between finishing its uncoded traffic and the
/// start of Phase 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ach2Variant {
    /// The layer stays idle.
    Idle,
    /// The layer retransmits combinations of its own overheard packets.
    IntraLayer,
    /// The layer combines every packet overheard anywhere so far.
    InterLayer,
}

impl Ach2Variant {
    pub const ALL: [Ach2Variant; 3] = [
        Ach2Variant::Idle,
        Ach2Variant::IntraLayer,
        Ach2Variant::InterLayer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ach2Variant::Idle => "idle",
            Ach2Variant::IntraLayer => "intra",
            Ach2Variant::InterLayer => "inter",
        }
    }
}

impl std::str::FromStr for Ach2Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idle" => Ok(Ach2Variant::Idle),
            "intra" => Ok(Ach2Variant::IntraLayer),
            "inter" => Ok(Ach2Variant::InterLayer),
            other => Err(Error::Invalid(format!(
                "unknown variant {other:?}; expected idle, intra or inter"
            ))),
        }
    }
}

/// Per-user-per-layer packet counts `k[u][q]` (packets, fluid).
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    k: [Vec<f64>; 2],
}

impl Allocation {
    pub fn new(k: [Vec<f64>; 2]) -> Result<Self> {
        if k[0].len() != k[1].len() || k[0].is_empty() {
            return Err(Error::Invalid(
                "allocation needs one row per user with one entry per layer".into(),
            ));
        }
        for row in &k {
            if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Invalid(format!(
                    "allocation entries must be finite and >= 0, got {row:?}"
                )));
            }
        }
        if k.iter().flatten().all(|x| *x == 0.0) {
            return Err(Error::Invalid("allocation must not be all zero".into()));
        }
        Ok(Allocation { k })
    }

    /// Single-entry allocation: `amount` packets for `user` on `layer`.
    pub fn single(layers: usize, user: usize, layer: usize, amount: f64) -> Result<Self> {
        let mut k = [vec![0.0; layers], vec![0.0; layers]];
        k[user][layer] = amount;
        Allocation::new(k)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            k: Vec<Vec<f64>>,
        }
        let doc: Doc = serde_json::from_str(text)
            .map_err(|e| Error::Invalid(format!("malformed allocation document: {e}")))?;
        if doc.k.len() != 2 {
            return Err(Error::Invalid(format!(
                "allocation document needs 2 user rows, found {}",
                doc.k.len()
            )));
        }
        let mut it = doc.k.into_iter();
        Allocation::new([it.next().unwrap(), it.next().unwrap()])
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Invalid(detail) => Error::parse(path, detail),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let row = |r: &[f64]| {
            r.iter()
                .map(|x| format!("{x:.9}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!("{{\"k\": [[{}], [{}]]}}", row(&self.k[0]), row(&self.k[1]))
    }

    pub fn layers(&self) -> usize {
        self.k[0].len()
    }

    pub fn get(&self, user: usize, layer: usize) -> f64 {
        self.k[user][layer]
    }

    pub fn layer_total(&self, layer: usize) -> f64 {
        self.k[0][layer] + self.k[1][layer]
    }

    pub fn user_total(&self, user: usize) -> f64 {
        self.k[user].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.user_total(0) + self.user_total(1)
    }

    pub fn scaled(&self, alpha: f64) -> Result<Allocation> {
        Allocation::new([
            self.k[0].iter().map(|x| x * alpha).collect(),
            self.k[1].iter().map(|x| x * alpha).collect(),
        ])
    }
}

/// Timing and backlog quantities of one allocation under the two-phase
/// prototype. `evaluate_phase1` fills the variant-independent part; one of
/// the `finalize_*` operations fills the Phase 2 fields and the rates.
#[derive(Clone, Debug)]
pub struct PhaseEvaluation {
    /// Slot at which layer `q` finishes its uncoded traffic.
    pub t_unc_q: Vec<f64>,
    /// End of Phase 1: `max_q t_unc_q`.
    pub t_unc: f64,
    /// Fraction of user `u`'s layer-`q` packets that end up overheard.
    pub eta: [Vec<f64>; 2],
    /// Overheard packets per user and layer at that layer's completion.
    pub k_rem_uq: [Vec<f64>; 2],
    /// Packets each user sent in total (numerator of its rate).
    pub user_packets: [f64; 2],
    /// Phase 2 backlog per user (variant dependent).
    pub k_rem_u: [f64; 2],
    /// Phase 2 duration per user: backlog / E[N_u].
    pub t_nc_u: [f64; 2],
    /// Phase 2 duration: `max_u t_nc_u`.
    pub t_nc: f64,
    /// Total duration `t_unc + t_nc`.
    pub t: f64,
    /// Achieved rates `user_packets / t`.
    pub rates: [f64; 2],
    /// A user with backlog but `E[N_u] = 0` can never finish; the result is
    /// flagged and reported with zero rates instead of erroring, so searches
    /// can walk past it.
    pub infeasible: [bool; 2],
    /// Which variant produced the Phase 2 fields, once finalized.
    pub variant: Option<Ach2Variant>,
}

impl PhaseEvaluation {
    pub fn rate_point(&self) -> RatePoint {
        RatePoint::pair(self.rates[0], self.rates[1]).expect("rates are nonnegative")
    }
}

fn check_two_users(stats: &ChannelStats) -> Result<()> {
    if stats.users() != 2 {
        return Err(Error::Invalid(format!(
            "two-phase schemes are defined for K = 2, got K = {}",
            stats.users()
        )));
    }
    Ok(())
}

/// Variant-independent Phase 1 quantities: per-layer finish times and
/// overheard packet counts.
pub fn evaluate_phase1(stats: &ChannelStats, alloc: &Allocation) -> Result<PhaseEvaluation> {
    check_two_users(stats)?;
    if alloc.layers() != stats.layers() {
        return Err(Error::Invalid(format!(
            "allocation references layer {} but channel has {} layers",
            alloc.layers(),
            stats.layers()
        )));
    }
    let q_count = alloc.layers();
    let mut t_unc_q = vec![0.0; q_count];
    let mut eta = [vec![0.0; q_count], vec![0.0; q_count]];
    let mut k_rem_uq = [vec![0.0; q_count], vec![0.0; q_count]];
    for q in 0..q_count {
        let m = stats.pair_max_geq(q + 1);
        let total = alloc.layer_total(q);
        if total > 0.0 {
            if m <= 0.0 {
                return Err(Error::Invalid(format!(
                    "layer {} carries packets but is never received by either user",
                    q + 1
                )));
            }
            t_unc_q[q] = total / m;
        }
        for u in 0..2 {
            if m > 0.0 {
                eta[u][q] = (1.0 - stats.marginal_geq(u, q + 1) / m).clamp(0.0, 1.0);
            }
            k_rem_uq[u][q] = alloc.get(u, q) * eta[u][q];
        }
    }
    let t_unc = t_unc_q.iter().copied().fold(0.0, f64::max);
    Ok(PhaseEvaluation {
        t_unc_q,
        t_unc,
        eta,
        k_rem_uq,
        user_packets: [alloc.user_total(0), alloc.user_total(1)],
        k_rem_u: [0.0; 2],
        t_nc_u: [0.0; 2],
        t_nc: 0.0,
        t: 0.0,
        rates: [0.0; 2],
        infeasible: [false; 2],
        variant: None,
    })
}

fn finalize(stats: &ChannelStats, mut pe: PhaseEvaluation, variant: Ach2Variant) -> PhaseEvaluation {
    let q_count = pe.t_unc_q.len();
    for u in 0..2 {
        pe.k_rem_u[u] = match variant {
            Ach2Variant::Idle => pe.k_rem_uq[u].iter().sum(),
            Ach2Variant::IntraLayer => (0..q_count)
                .map(|q| {
                    let credit = (pe.t_unc - pe.t_unc_q[q]) * stats.marginal_geq(u, q + 1);
                    (pe.k_rem_uq[u][q] - credit).max(0.0)
                })
                .sum(),
            Ach2Variant::InterLayer => (0..q_count)
                .map(|q| {
                    pe.k_rem_uq[u][q]
                        - (pe.t_unc - pe.t_unc_q[q]) * stats.marginal_geq(u, q + 1)
                })
                .sum::<f64>()
                .max(0.0),
        };
    }
    for u in 0..2 {
        if pe.k_rem_u[u] > 0.0 {
            let mean = stats.expected_layers(u);
            if mean <= 0.0 {
                pe.infeasible[u] = true;
            } else {
                pe.t_nc_u[u] = pe.k_rem_u[u] / mean;
            }
        }
    }
    pe.t_nc = pe.t_nc_u[0].max(pe.t_nc_u[1]);
    pe.t = pe.t_unc + pe.t_nc;
    if pe.infeasible.iter().any(|&f| f) {
        pe.rates = [0.0; 2];
    } else {
        pe.rates = [pe.user_packets[0] / pe.t, pe.user_packets[1] / pe.t];
    }
    pe.variant = Some(variant);
    pe
}

/// Phase 2 serves every overheard packet: idle layers waste their window.
pub fn finalize_idle(stats: &ChannelStats, pe: PhaseEvaluation) -> PhaseEvaluation {
    finalize(stats, pe, Ach2Variant::Idle)
}

/// Each finished layer works off its own overheard packets during its
/// window, clamped per layer at that layer's backlog.
pub fn finalize_intra_layer(stats: &ChannelStats, pe: PhaseEvaluation) -> PhaseEvaluation {
    finalize(stats, pe, Ach2Variant::IntraLayer)
}

/// Finished layers serve the global overheard pool, so one layer's window
/// can clear another layer's backlog; the positive part applies to the sum.
pub fn finalize_inter_layer(stats: &ChannelStats, pe: PhaseEvaluation) -> PhaseEvaluation {
    finalize(stats, pe, Ach2Variant::InterLayer)
}

/// Phase 1 plus the requested variant in one call.
pub fn evaluate(
    stats: &ChannelStats,
    alloc: &Allocation,
    variant: Ach2Variant,
) -> Result<PhaseEvaluation> {
    Ok(finalize(stats, evaluate_phase1(stats, alloc)?, variant))
}

/// Sub-phase bookkeeping of the inter-layer scheme: Phase 1 split at the
/// ordered layer finish times.
#[derive(Clone, Debug)]
pub struct SubPhaseTrace {
    /// Layers sorted by uncoded finish time, ascending (ties by index).
    pub order: Vec<usize>,
    /// Sub-phase durations; `delta[j]` ends when layer `order[j]` finishes.
    pub delta: Vec<f64>,
    /// Uncoded packets left per `[sub-phase][user][layer]`; entry 0 is the
    /// initial allocation, entry Q is all zeros.
    pub k_unc: Vec<[Vec<f64>; 2]>,
    /// Coded backlog per `[sub-phase][user]`.
    pub k_rtx: Vec<[f64; 2]>,
    /// Probability that a slot of layer `q`'s uncoded phase serves user `u`
    /// (proportional to the allocation; zero on empty layers).
    pub serve_prob: [Vec<f64>; 2],
    /// Whether some `k_rtx[j]` with `j < Q` was clamped at zero. When no
    /// intermediate clamp fires, the final backlog matches the closed form
    /// of the inter-layer scheme exactly; when one fires, the recursion is
    /// the operational truth and the closed form may differ.
    pub intermediate_clamp: bool,
}

impl SubPhaseTrace {
    pub fn final_k_rtx(&self) -> [f64; 2] {
        *self.k_rtx.last().unwrap()
    }
}

/// Walk the inter-layer scheme's Phase 1 sub-phase by sub-phase: uncoded
/// queues drain at the serve probabilities, finished layers drain the coded
/// backlog, and new overheard packets accrue layer by layer (never more than
/// the uncoded packets still queued there).
pub fn subphase_recursion(stats: &ChannelStats, alloc: &Allocation) -> Result<SubPhaseTrace> {
    let pe = evaluate_phase1(stats, alloc)?;
    let q_count = alloc.layers();

    let mut order: Vec<usize> = (0..q_count).collect();
    order.sort_by(|&a, &b| {
        pe.t_unc_q[a]
            .partial_cmp(&pe.t_unc_q[b])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut serve_prob = [vec![0.0; q_count], vec![0.0; q_count]];
    for q in 0..q_count {
        let total = alloc.layer_total(q);
        if total > 0.0 {
            for u in 0..2 {
                serve_prob[u][q] = alloc.get(u, q) / total;
            }
        }
    }

    let mut delta = Vec::with_capacity(q_count);
    let mut k_unc = Vec::with_capacity(q_count + 1);
    let mut k_rtx = Vec::with_capacity(q_count + 1);
    k_unc.push([
        (0..q_count).map(|q| alloc.get(0, q)).collect::<Vec<_>>(),
        (0..q_count).map(|q| alloc.get(1, q)).collect::<Vec<_>>(),
    ]);
    k_rtx.push([0.0; 2]);

    let mut intermediate_clamp = false;
    let mut prev_t = 0.0;
    for j in 1..=q_count {
        let t_now = pe.t_unc_q[order[j - 1]];
        let d = t_now - prev_t;
        delta.push(d);
        prev_t = t_now;

        let mut next_unc = [vec![0.0; q_count], vec![0.0; q_count]];
        for u in 0..2 {
            for q in 0..q_count {
                if pe.t_unc_q[q] > 0.0 {
                    next_unc[u][q] =
                        alloc.get(u, q) * (1.0 - t_now / pe.t_unc_q[q]).max(0.0);
                }
            }
        }

        let mut next_rtx = [0.0; 2];
        for u in 0..2 {
            // layers that finished in earlier sub-phases carry coded packets
            let drain: f64 = order[..j - 1]
                .iter()
                .map(|&q| d * stats.marginal_geq(u, q + 1))
                .sum();
            let credit: f64 = (0..q_count)
                .map(|q| {
                    let overhear_rate = serve_prob[u][q]
                        * (stats.pair_max_geq(q + 1) - stats.marginal_geq(u, q + 1));
                    (d * overhear_rate).min(k_unc[j - 1][u][q])
                })
                .sum();
            let raw = k_rtx[j - 1][u] - drain + credit;
            if raw < 0.0 && j < q_count {
                intermediate_clamp = true;
            }
            next_rtx[u] = raw.max(0.0);
        }
        k_unc.push(next_unc);
        k_rtx.push(next_rtx);
    }

    Ok(SubPhaseTrace {
        order,
        delta,
        k_unc,
        k_rtx,
        serve_prob,
        intermediate_clamp,
    })
}

/// Weighted-sum support of the per-layer scheme: each layer is an
/// independent two-constraint resource-sharing problem, solved exactly at
/// its at most four vertices; the layer optima add up.
pub fn ach1_support(stats: &ChannelStats, w: &Weights) -> f64 {
    assert_eq!(stats.users(), 2, "per-layer scheme is defined for K = 2");
    assert_eq!(w.len(), 2);
    (1..=stats.layers())
        .map(|q| {
            layer_vertices(stats, q)
                .into_iter()
                .map(|[x, y]| w.get(0) * x + w.get(1) * y)
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Vertices of one layer's feasible set
/// `{ (x, y) >= 0 : x/m + y/g2 <= 1, x/g1 + y/m <= 1 }`.
pub(crate) fn layer_vertices(stats: &ChannelStats, q: usize) -> Vec<[f64; 2]> {
    let m = stats.pair_max_geq(q);
    let g1 = stats.marginal_geq(0, q);
    let g2 = stats.marginal_geq(1, q);
    if m <= 0.0 {
        return vec![[0.0, 0.0]]; // layer never received, contributes nothing
    }
    let mut v = vec![[0.0, 0.0], [g1, 0.0], [0.0, g2]];
    if g1 > 0.0 && g2 > 0.0 {
        let det = 1.0 / (m * m) - 1.0 / (g1 * g2);
        if det < 0.0 {
            let x = (1.0 / m - 1.0 / g2) / det;
            let y = (1.0 / m - 1.0 / g1) / det;
            if x >= 0.0 && y >= 0.0 {
                v.push([x, y]);
            }
        }
    }
    v
}
