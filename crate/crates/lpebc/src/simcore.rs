//! Slot-by-slot simulator for the two-user, two-phase retransmission
//! protocols, with real GF(2^8) network coding and per-user decoding.
//!
//! Each slot the transmitter first commits what every layer sends — an
//! uncoded head-of-line packet, a fresh random combination of pooled
//! packets, or nothing — using only feedback from earlier slots; then one
//! channel state is drawn and applied to all layers at once (user `u`
//! receives layers `1..=N_u`).
//!
//! An uncoded packet leaves its queue as soon as either user receives it.
//! If only the unintended user got it, it joins the intended user's
//! retransmission pool: the unintended user now knows it, so any linear
//! combination involving it is simultaneously useful to both users. A user
//! receiving a combination subtracts the packets it knows and keeps the
//! result if it is linearly independent of what it already has; dependent
//! equations are discarded and the slot is lost. A trial ends when both
//! users have decoded everything, and every reconstructed payload is
//! checked byte for byte against what was sent.

use std::collections::VecDeque;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::gf::{self, Eliminator};
use crate::schemes::Ach2Variant;

/// Payload bytes carried by each simulated packet.
pub const PAYLOAD_LEN: usize = 8;

/// Order in which a layer's uncoded queues are served.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheduling {
    /// User 1's packets first, then user 2's.
    Sequential,
    /// Per-slot random pick, probability proportional to the remaining
    /// uncoded counts.
    Randomized,
}

/// One simulation setup.
#[derive(Clone, Debug)]
pub struct SimConfig<'a> {
    pub channel: &'a ChannelModel,
    pub variant: Ach2Variant,
    /// Integer packet counts `alloc[user][layer]`.
    pub alloc: [Vec<u64>; 2],
    pub seed: u64,
    pub trials: usize,
    pub scheduling: Scheduling,
}

impl<'a> SimConfig<'a> {
    /// Standard setup: sequential service for the idle and intra-layer
    /// variants, randomized service for the inter-layer variant.
    pub fn new(
        channel: &'a ChannelModel,
        variant: Ach2Variant,
        alloc: [Vec<u64>; 2],
        seed: u64,
        trials: usize,
    ) -> Result<Self> {
        let scheduling = match variant {
            Ach2Variant::InterLayer => Scheduling::Randomized,
            _ => Scheduling::Sequential,
        };
        let cfg = SimConfig {
            channel,
            variant,
            alloc,
            seed,
            trials,
            scheduling,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channel.users() != 2 {
            return Err(Error::Invalid("the simulator is two-user only".into()));
        }
        if self.trials < 1 {
            return Err(Error::Invalid("trials must be >= 1".into()));
        }
        let q = self.channel.layers();
        for row in &self.alloc {
            if row.len() != q {
                return Err(Error::Invalid(format!(
                    "allocation references layer {} but channel has {} layers",
                    row.len(),
                    q
                )));
            }
        }
        if self.alloc.iter().flatten().all(|&k| k == 0) {
            return Err(Error::Invalid("allocation must not be all zero".into()));
        }
        let stats = self.channel.compute_stats()?;
        for layer in 0..q {
            let total = self.alloc[0][layer] + self.alloc[1][layer];
            if total > 0 && stats.pair_max_geq(layer + 1) <= 0.0 {
                return Err(Error::Invalid(format!(
                    "layer {} carries packets but is never received by either user",
                    layer + 1
                )));
            }
        }
        for user in 0..2 {
            let total: u64 = self.alloc[user].iter().sum();
            if total > 0 && stats.expected_layers(user) <= 0.0 {
                return Err(Error::Invalid(format!(
                    "user {} has packets but never receives any layer",
                    user + 1
                )));
            }
        }
        Ok(())
    }

    fn total_packets(&self) -> u64 {
        self.alloc.iter().flatten().sum()
    }
}

/// Result of one protocol run.
#[derive(Clone, Debug)]
pub struct TrialReport {
    pub trial: usize,
    pub slots_phase1: u64,
    pub slots_total: u64,
    /// Packets per slot, per user: `sum_q alloc[u][q] / slots_total`.
    pub rate: [f64; 2],
    pub decode_ok: [bool; 2],
    /// Overheard (pooled) packets per user.
    pub overheard: [u64; 2],
    /// Received combinations discarded as linearly dependent.
    pub discarded_equations: u64,
}

/// Aggregate over all trials, plus the per-trial breakdown.
#[derive(Clone, Debug)]
pub struct SimReport {
    pub trials: Vec<TrialReport>,
    pub mean_rate: [f64; 2],
    pub stddev_rate: [f64; 2],
    pub mean_slots_phase1: f64,
    pub mean_slots_total: f64,
}

impl SimReport {
    fn from_trials(trials: Vec<TrialReport>) -> Self {
        let n = trials.len() as f64;
        let mut mean_rate = [0.0; 2];
        let mut stddev_rate = [0.0; 2];
        for u in 0..2 {
            let mean = trials.iter().map(|t| t.rate[u]).sum::<f64>() / n;
            let var = trials
                .iter()
                .map(|t| (t.rate[u] - mean).powi(2))
                .sum::<f64>()
                / n;
            mean_rate[u] = mean;
            stddev_rate[u] = var.sqrt();
        }
        let mean_slots_phase1 = trials.iter().map(|t| t.slots_phase1 as f64).sum::<f64>() / n;
        let mean_slots_total = trials.iter().map(|t| t.slots_total as f64).sum::<f64>() / n;
        SimReport {
            trials,
            mean_rate,
            stddev_rate,
            mean_slots_phase1,
            mean_slots_total,
        }
    }

    /// CSV breakdown: `trial,slots_phase1,slots_total,rate1,rate2,decode_ok`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,slots_phase1,slots_total,rate1,rate2,decode_ok\n");
        for t in &self.trials {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{}\n",
                t.trial,
                t.slots_phase1,
                t.slots_total,
                t.rate[0],
                t.rate[1],
                t.decode_ok[0] && t.decode_ok[1]
            ));
        }
        out
    }

    /// Human-readable summary.
    pub fn summary_text(&self) -> String {
        format!(
            "trials: {}\nmean slots (phase1/total): {:.1} / {:.1}\n\
             mean rate: ({:.5}, {:.5})\nstddev rate: ({:.5}, {:.5})\nall decoded: {}\n",
            self.trials.len(),
            self.mean_slots_phase1,
            self.mean_slots_total,
            self.mean_rate[0],
            self.mean_rate[1],
            self.stddev_rate[0],
            self.stddev_rate[1],
            self.trials.iter().all(|t| t.decode_ok[0] && t.decode_ok[1])
        )
    }
}

/// What one layer transmits in one slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SlotAction {
    /// Head-of-line uncoded packet of this user on this layer.
    Uncoded { user: usize },
    /// Random combination of the ids listed (pool snapshot at send time).
    Coded { pool_sizes: [usize; 2] },
    Idle,
}

/// Decision and state trace of a trial, for causality checks.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialTrace {
    pub actions: Vec<Vec<SlotAction>>,
    pub states: Vec<(usize, usize)>,
}

/// Fixed mixing of (seed, trial index) into the per-trial stream seed, so
/// any trial can be reproduced on its own.
pub fn trial_seed(seed: u64, trial_index: usize) -> u64 {
    let mut z = seed ^ (trial_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run one trial.
pub fn run_trial(cfg: &SimConfig, trial_index: usize) -> Result<TrialReport> {
    Trial::new(cfg, trial_index)?.run(None)
}

/// Run one trial and also return its decision/state trace.
pub fn run_trial_traced(cfg: &SimConfig, trial_index: usize) -> Result<(TrialReport, TrialTrace)> {
    let mut trace = TrialTrace {
        actions: Vec::new(),
        states: Vec::new(),
    };
    let report = Trial::new(cfg, trial_index)?.run(Some(&mut trace))?;
    Ok((report, trace))
}

/// Run all trials (concurrently; merged in trial order) and aggregate.
pub fn run_batch(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let trials: Result<Vec<TrialReport>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, i))
        .collect();
    Ok(SimReport::from_trials(trials?))
}

struct Trial<'a> {
    cfg: &'a SimConfig<'a>,
    rng: ChaCha12Rng,
    layers: usize,
    trial_index: usize,
    // one entry per packet id
    packet_user: Vec<u8>,
    payloads: Vec<[u8; PAYLOAD_LEN]>,
    // uncoded state
    queues: Vec<[VecDeque<u32>; 2]>,
    remaining_unc: Vec<[u64; 2]>,
    outstanding_uncoded: u64,
    // retransmission pools
    pool: [Vec<u32>; 2],
    unknown_index: Vec<u32>,
    layer_pool: Vec<Vec<u32>>,
    pool_share: Vec<[u64; 2]>,
    // receivers
    decoders: [Eliminator; 2],
    intra_useful: Vec<[u64; 2]>,
    discarded: u64,
}

/// A committed coded transmission: coefficients over the pool snapshot.
struct CodedDraw {
    /// Coefficients over `pool[u][..len]` per user (empty when the combo
    /// does not touch that user's pool).
    coeffs: [Vec<u8>; 2],
    /// For intra combos the coefficients are sparse over the layer pool;
    /// kept as (id, coeff) and scattered on reception.
    sparse: Option<Vec<(u32, u8)>>,
}

impl<'a> Trial<'a> {
    fn new(cfg: &'a SimConfig<'a>, trial_index: usize) -> Result<Self> {
        cfg.validate()?;
        let layers = cfg.channel.layers();
        let mut rng = ChaCha12Rng::seed_from_u64(trial_seed(cfg.seed, trial_index));
        let mut packet_user = Vec::new();
        let mut payloads = Vec::new();
        let mut queues: Vec<[VecDeque<u32>; 2]> =
            (0..layers).map(|_| [VecDeque::new(), VecDeque::new()]).collect();
        let mut remaining_unc = vec![[0u64; 2]; layers];
        for layer in 0..layers {
            for user in 0..2 {
                for _ in 0..cfg.alloc[user][layer] {
                    let id = packet_user.len() as u32;
                    packet_user.push(user as u8);
                    let mut p = [0u8; PAYLOAD_LEN];
                    rng.fill_bytes(&mut p);
                    payloads.push(p);
                    queues[layer][user].push_back(id);
                }
                remaining_unc[layer][user] = cfg.alloc[user][layer];
            }
        }
        let outstanding_uncoded = cfg.total_packets();
        Ok(Trial {
            cfg,
            rng,
            layers,
            trial_index,
            unknown_index: vec![0; packet_user.len()],
            packet_user,
            payloads,
            queues,
            remaining_unc,
            outstanding_uncoded,
            pool: [Vec::new(), Vec::new()],
            layer_pool: vec![Vec::new(); layers],
            pool_share: vec![[0u64; 2]; layers],
            decoders: [Eliminator::new(PAYLOAD_LEN), Eliminator::new(PAYLOAD_LEN)],
            intra_useful: vec![[0u64; 2]; layers],
            discarded: 0,
        })
    }

    fn user_done(&self, user: usize) -> bool {
        self.remaining_unc.iter().all(|r| r[user] == 0)
            && self.decoders[user].rank() == self.pool[user].len()
    }

    fn phase2_started(&self) -> bool {
        self.outstanding_uncoded == 0
    }

    /// An intra layer keeps coding its own pool while some user still lacks
    /// part of its share of that pool.
    fn intra_layer_active(&self, layer: usize) -> bool {
        (0..2).any(|u| self.intra_useful[layer][u] < self.pool_share[layer][u])
    }

    /// Commit this slot's transmissions. Uses only feedback from previous
    /// slots; the coefficients of coded packets are drawn here, before the
    /// slot's channel state exists.
    fn decide(&mut self) -> Vec<SlotAction> {
        let mut actions = Vec::with_capacity(self.layers);
        let phase2 = self.phase2_started();
        for layer in 0..self.layers {
            let rem = self.remaining_unc[layer];
            let total = rem[0] + rem[1];
            if total > 0 {
                let user = match self.cfg.scheduling {
                    Scheduling::Sequential => {
                        if rem[0] > 0 {
                            0
                        } else {
                            1
                        }
                    }
                    Scheduling::Randomized => {
                        if self.rng.gen_range(0..total) < rem[0] {
                            0
                        } else {
                            1
                        }
                    }
                };
                actions.push(SlotAction::Uncoded { user });
            } else if phase2 || self.cfg.variant == Ach2Variant::InterLayer {
                if self.pool[0].len() + self.pool[1].len() > 0 {
                    actions.push(SlotAction::Coded {
                        pool_sizes: [self.pool[0].len(), self.pool[1].len()],
                    });
                } else {
                    actions.push(SlotAction::Idle);
                }
            } else if self.cfg.variant == Ach2Variant::IntraLayer
                && !self.layer_pool[layer].is_empty()
                && self.intra_layer_active(layer)
            {
                actions.push(SlotAction::Coded {
                    pool_sizes: [usize::MAX, layer], // marker resolved in draw_coded
                });
            } else {
                actions.push(SlotAction::Idle);
            }
        }
        actions
    }

    fn draw_coded(&mut self, layer: usize, action: &SlotAction) -> CodedDraw {
        match action {
            SlotAction::Coded { pool_sizes } if pool_sizes[0] == usize::MAX => {
                // intra-layer combo over this layer's own pool
                let ids = &self.layer_pool[layer];
                let mut sparse = Vec::with_capacity(ids.len());
                for &id in ids {
                    sparse.push((id, self.rng.gen::<u8>()));
                }
                CodedDraw {
                    coeffs: [Vec::new(), Vec::new()],
                    sparse: Some(sparse),
                }
            }
            SlotAction::Coded { pool_sizes } => {
                let mut coeffs = [Vec::new(), Vec::new()];
                for u in 0..2 {
                    let mut c = vec![0u8; pool_sizes[u]];
                    self.rng.fill_bytes(&mut c);
                    coeffs[u] = c;
                }
                CodedDraw {
                    coeffs,
                    sparse: None,
                }
            }
            _ => unreachable!("draw_coded on a non-coded action"),
        }
    }

    /// The receiving user's view of a combination: dense coefficients over
    /// its own unknowns and the payload sum of its own packets (the other
    /// user's contributions are known to it and cancel).
    fn equation_for(&self, draw: &CodedDraw, user: usize) -> (Vec<u8>, Vec<u8>) {
        let mut rhs = [0u8; PAYLOAD_LEN];
        match &draw.sparse {
            Some(entries) => {
                let mut width = 0usize;
                for (id, _) in entries {
                    if self.packet_user[*id as usize] as usize == user {
                        width = width.max(self.unknown_index[*id as usize] as usize + 1);
                    }
                }
                let mut coeffs = vec![0u8; width];
                for (id, c) in entries {
                    if *c != 0 && self.packet_user[*id as usize] as usize == user {
                        coeffs[self.unknown_index[*id as usize] as usize] = *c;
                        axpy_payload(&mut rhs, &self.payloads[*id as usize], *c);
                    }
                }
                (coeffs, rhs.to_vec())
            }
            None => {
                let coeffs = draw.coeffs[user].clone();
                for (slot, &c) in coeffs.iter().enumerate() {
                    if c != 0 {
                        let id = self.pool[user][slot] as usize;
                        axpy_payload(&mut rhs, &self.payloads[id], c);
                    }
                }
                (coeffs, rhs.to_vec())
            }
        }
    }

    fn run(mut self, mut trace: Option<&mut TrialTrace>) -> Result<TrialReport> {
        let total_packets = self.cfg.total_packets();
        let max_slots = 10_000 + 200 * total_packets;
        let mut slot: u64 = 0;
        let mut slots_phase1: u64 = 0;

        while !(self.user_done(0) && self.user_done(1)) {
            slot += 1;
            if slot > max_slots {
                return Err(Error::Integrity(format!(
                    "trial {} stalled after {} slots",
                    self.trial_index, slot
                )));
            }

            // commit transmissions, then draw the slot's channel state
            let actions = self.decide();
            let draws: Vec<Option<CodedDraw>> = actions
                .iter()
                .enumerate()
                .map(|(layer, a)| match a {
                    SlotAction::Coded { .. } => Some(self.draw_coded(layer, a)),
                    _ => None,
                })
                .collect();
            let (n1, n2) = self.cfg.channel.sample_pair(&mut self.rng);
            if let Some(t) = trace.as_deref_mut() {
                t.actions.push(actions.clone());
                t.states.push((n1, n2));
            }

            for layer in 0..self.layers {
                let got = [n1 > layer, n2 > layer];
                match &actions[layer] {
                    SlotAction::Uncoded { user } => {
                        let user = *user;
                        if got[0] || got[1] {
                            let id = self.queues[layer][user]
                                .pop_front()
                                .expect("queue backed the decision");
                            self.remaining_unc[layer][user] -= 1;
                            self.outstanding_uncoded -= 1;
                            if !got[user] {
                                // overheard only: joins the retransmission pool
                                self.unknown_index[id as usize] = self.pool[user].len() as u32;
                                self.pool[user].push(id);
                                self.layer_pool[layer].push(id);
                                self.pool_share[layer][user] += 1;
                            }
                        }
                    }
                    SlotAction::Coded { .. } => {
                        let draw = draws[layer].as_ref().unwrap();
                        let intra = draw.sparse.is_some();
                        for user in 0..2 {
                            if !got[user] || self.user_done(user) {
                                continue;
                            }
                            let (coeffs, rhs) = self.equation_for(draw, user);
                            if coeffs.iter().all(|&c| c == 0) {
                                continue; // nothing for this user in the combo
                            }
                            let useful = self.decoders[user].absorb(coeffs, rhs)?;
                            if useful {
                                if intra && !self.phase2_started() {
                                    self.intra_useful[layer][user] += 1;
                                }
                            } else {
                                self.discarded += 1;
                            }
                        }
                    }
                    SlotAction::Idle => {}
                }
            }

            if slots_phase1 == 0 && self.phase2_started() {
                slots_phase1 = slot;
            }
        }

        // verify every pooled payload decodes to what was sent
        for user in 0..2 {
            let n = self.pool[user].len();
            let solution = self.decoders[user]
                .solve(n)
                .ok_or_else(|| Error::Integrity("rank complete but system unsolved".into()))?;
            for (slot_idx, id) in self.pool[user].iter().enumerate() {
                if solution[slot_idx] != self.payloads[*id as usize] {
                    return Err(Error::Integrity(format!(
                        "trial {}: packet {} decoded incorrectly",
                        self.trial_index, id
                    )));
                }
            }
        }

        if slots_phase1 == 0 {
            slots_phase1 = slot;
        }
        let rate = [
            self.cfg.alloc[0].iter().sum::<u64>() as f64 / slot as f64,
            self.cfg.alloc[1].iter().sum::<u64>() as f64 / slot as f64,
        ];
        Ok(TrialReport {
            trial: self.trial_index,
            slots_phase1,
            slots_total: slot,
            rate,
            decode_ok: [true, true],
            overheard: [self.pool[0].len() as u64, self.pool[1].len() as u64],
            discarded_equations: self.discarded,
        })
    }
}

fn axpy_payload(acc: &mut [u8; PAYLOAD_LEN], src: &[u8; PAYLOAD_LEN], f: u8) {
    let row = gf::mul_row(f);
    for (a, s) in acc.iter_mut().zip(src) {
        *a ^= row[*s as usize];
    }
}
