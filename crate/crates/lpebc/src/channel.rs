//! Channel state distribution of the layered erasure broadcast channel.
//!
//! The channel is described by the joint PMF of the state vector
//! `N = (N_1, ..., N_K)` over `[0..=Q]^K`, where `N_u` is the number of
//! layers user `u` receives in a slot (user `u` sees layers `1..=N_u`, the
//! rest are erased). States are i.i.d. across slots. Everything the bound
//! and scheme evaluators need is a statistic of this PMF.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Tolerance on the total probability mass of a PMF document.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Joint PMF of the channel state vector, stored dense over `(Q+1)^K` cells.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    users: usize,
    layers: usize,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl ChannelModel {
    /// Build a model from a row-major flattened PMF; index of state `n` is
    /// `n_1 * (Q+1)^(K-1) + n_2 * (Q+1)^(K-2) + ... + n_K`.
    pub fn new(users: usize, layers: usize, pmf: Vec<f64>) -> Result<Self> {
        if users < 1 || layers < 1 {
            return Err(Error::Invalid(format!(
                "need K >= 1 and Q >= 1, got K = {users}, Q = {layers}"
            )));
        }
        // dense-table guard: refuse more than 24 bits of index space
        if users as f64 * ((layers + 1) as f64).log2() > 24.0 {
            return Err(Error::Invalid(format!(
                "state space (Q+1)^K too large for a dense table (K = {users}, Q = {layers})"
            )));
        }
        let cells = (layers + 1).pow(users as u32);
        if pmf.len() != cells {
            return Err(Error::Invalid(format!(
                "pmf has {} cells, expected (Q+1)^K = {}",
                pmf.len(),
                cells
            )));
        }
        if let Some(bad) = pmf.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Invalid(format!("pmf entry {bad} is not a probability")));
        }
        let mass: f64 = pmf.iter().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Invalid(format!(
                "pmf mass {mass:.10} deviates from 1 by more than {MASS_TOLERANCE:e}"
            )));
        }
        // renormalize the sub-tolerance deviation, never anything larger
        let pmf: Vec<f64> = pmf.into_iter().map(|p| p / mass).collect();
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Ok(ChannelModel {
            users,
            layers,
            pmf,
            cdf,
        })
    }

    /// Parse a channel description document (JSON with fields `K`, `Q` and a
    /// nested `pmf` array whose outermost index is the value of `N_1`).
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            #[serde(rename = "K")]
            k: usize,
            #[serde(rename = "Q")]
            q: usize,
            pmf: serde_json::Value,
        }
        let doc: Doc = serde_json::from_str(text)
            .map_err(|e| Error::Invalid(format!("malformed channel document: {e}")))?;
        let mut flat = Vec::new();
        flatten_pmf(&doc.pmf, &mut flat)?;
        ChannelModel::new(doc.k, doc.q, flat)
    }

    /// Load a channel description document from disk.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Invalid(detail) => Error::parse(path, detail),
            other => other,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    /// Probability of one state vector.
    pub fn probability(&self, state: &[usize]) -> f64 {
        self.pmf[self.index_of(state)]
    }

    fn index_of(&self, state: &[usize]) -> usize {
        assert_eq!(state.len(), self.users);
        let base = self.layers + 1;
        state.iter().fold(0, |acc, &n| {
            assert!(n <= self.layers);
            acc * base + n
        })
    }

    fn state_of(&self, mut index: usize) -> Vec<usize> {
        let base = self.layers + 1;
        let mut state = vec![0; self.users];
        for slot in state.iter_mut().rev() {
            *slot = index % base;
            index /= base;
        }
        state
    }

    /// Draw one state vector by inverse-CDF sampling.
    pub fn sample_state(&self, rng: &mut impl Rng) -> Vec<usize> {
        self.state_of(self.sample_index(rng))
    }

    /// Draw one state for a two-user channel without allocating.
    pub fn sample_pair(&self, rng: &mut impl Rng) -> (usize, usize) {
        assert_eq!(self.users, 2, "sample_pair needs a two-user channel");
        let idx = self.sample_index(rng);
        let base = self.layers + 1;
        (idx / base, idx % base)
    }

    fn sample_index(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    /// Compute every statistic the bounds and schemes consume.
    pub fn compute_stats(&self) -> Result<ChannelStats> {
        if self.users > 8 {
            return Err(Error::Invalid(format!(
                "subset statistics are enumerated for all 2^K subsets; K = {} > 8",
                self.users
            )));
        }
        let k = self.users;
        let q_max = self.layers;
        let masks = 1usize << k;

        // distribution of max_{u in S} N_u per subset mask
        let mut max_dist = vec![vec![0.0; q_max + 1]; masks];
        for (idx, &p) in self.pmf.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let state = self.state_of(idx);
            for mask in 1..masks {
                let m = state
                    .iter()
                    .enumerate()
                    .filter(|(u, _)| mask & (1 << u) != 0)
                    .map(|(_, &n)| n)
                    .max()
                    .unwrap_or(0);
                max_dist[mask][m] += p;
            }
        }

        let mut subset_max_geq = vec![vec![0.0; q_max + 1]; masks];
        let mut expected_subset_max = vec![0.0; masks];
        for mask in 1..masks {
            let mut acc = 0.0;
            for q in (1..=q_max).rev() {
                acc += max_dist[mask][q];
                subset_max_geq[mask][q] = acc;
            }
            subset_max_geq[mask][0] = 1.0;
            expected_subset_max[mask] = subset_max_geq[mask][1..].iter().sum();
        }

        let marginal_geq: Vec<Vec<f64>> =
            (0..k).map(|u| subset_max_geq[1 << u].clone()).collect();
        let expected_layers: Vec<f64> = (0..k).map(|u| expected_subset_max[1 << u]).collect();

        Ok(ChannelStats {
            users: k,
            layers: q_max,
            marginal_geq,
            subset_max_geq,
            expected_layers,
            expected_subset_max,
        })
    }
}

fn flatten_pmf(value: &serde_json::Value, out: &mut Vec<f64>) -> Result<()> {
    match value {
        serde_json::Value::Array(items) => {
            for item in items {
                flatten_pmf(item, out)?;
            }
            Ok(())
        }
        serde_json::Value::Number(n) => {
            let v = n
                .as_f64()
                .ok_or_else(|| Error::Invalid(format!("pmf entry {n} is not a number")))?;
            out.push(v);
            Ok(())
        }
        other => Err(Error::Invalid(format!(
            "pmf must contain only numbers and arrays, found {other}"
        ))),
    }
}

/// Cached statistics of a [`ChannelModel`]. Immutable once computed.
#[derive(Clone, Debug)]
pub struct ChannelStats {
    users: usize,
    layers: usize,
    /// `marginal_geq[u][q] = Pr[N_u >= q]`, `q` in `0..=Q`.
    marginal_geq: Vec<Vec<f64>>,
    /// `subset_max_geq[mask][q] = Pr[max_{u in mask} N_u >= q]`; entry 0 unused.
    subset_max_geq: Vec<Vec<f64>>,
    expected_layers: Vec<f64>,
    expected_subset_max: Vec<f64>,
}

impl ChannelStats {
    pub fn users(&self) -> usize {
        self.users
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    /// `Pr[N_u >= q]`; zero for `q > Q`.
    pub fn marginal_geq(&self, user: usize, q: usize) -> f64 {
        if q > self.layers {
            0.0
        } else {
            self.marginal_geq[user][q]
        }
    }

    /// `Pr[max_{u in mask} N_u >= q]` for a nonempty user bitmask.
    pub fn subset_max_geq(&self, mask: usize, q: usize) -> f64 {
        assert!(mask > 0 && mask < (1 << self.users), "bad subset mask");
        if q > self.layers {
            0.0
        } else {
            self.subset_max_geq[mask][q]
        }
    }

    /// `Pr[max(N_1, N_2) >= q]` on a two-user channel.
    pub fn pair_max_geq(&self, q: usize) -> f64 {
        assert_eq!(self.users, 2);
        self.subset_max_geq(0b11, q)
    }

    /// `E[N_u]`.
    pub fn expected_layers(&self, user: usize) -> f64 {
        self.expected_layers[user]
    }

    /// `E[max_{u in mask} N_u]`.
    pub fn expected_subset_max(&self, mask: usize) -> f64 {
        assert!(mask > 0 && mask < (1 << self.users), "bad subset mask");
        self.expected_subset_max[mask]
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// The two-user, two-layer channel that ships in `data/table1.json`,
    /// built in code so unit tests do not depend on the file.
    pub fn table1() -> ChannelModel {
        ChannelModel::new(
            2,
            2,
            vec![
                0.0497, 0.2443, 0.0321, // N_1 = 0
                0.1483, 0.2251, 0.1222, // N_1 = 1
                0.0435, 0.0728, 0.0620, // N_1 = 2
            ],
        )
        .unwrap()
    }

    pub fn table1_stats() -> ChannelStats {
        table1().compute_stats().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    const TABLE1_CELLS: [[f64; 3]; 3] = [
        [0.0497, 0.2443, 0.0321],
        [0.1483, 0.2251, 0.1222],
        [0.0435, 0.0728, 0.0620],
    ];

    #[test]
    fn table1_loads_and_indexes() {
        let ch = table1();
        assert_eq!(ch.users(), 2);
        assert_eq!(ch.layers(), 2);
        assert!((ch.probability(&[1, 2]) - 0.1222).abs() < 1e-15);
        assert!((ch.probability(&[0, 0]) - 0.0497).abs() < 1e-15);
    }

    #[test]
    fn json_document_round_trip() {
        let text = r#"{"K": 2, "Q": 2, "pmf": [
            [0.0497, 0.2443, 0.0321],
            [0.1483, 0.2251, 0.1222],
            [0.0435, 0.0728, 0.0620]]}"#;
        let ch = ChannelModel::from_json_str(text).unwrap();
        assert!((ch.probability(&[1, 2]) - 0.1222).abs() < 1e-15);
    }

    #[test]
    fn single_user_wait_free_channel() {
        // degenerate single-user channel that always delivers its one layer
        let text = r#"{"K": 1, "Q": 1, "pmf": [[0, 1]]}"#;
        let ch = ChannelModel::from_json_str(text).unwrap();
        assert_eq!(ch.probability(&[1]), 1.0);
        let stats = ch.compute_stats().unwrap();
        assert_eq!(stats.expected_layers(0), 1.0);
    }

    #[test]
    fn perturbed_mass_rejected() {
        let mut pmf: Vec<f64> = TABLE1_CELLS.iter().flatten().copied().collect();
        *pmf.last_mut().unwrap() = 0.0625; // was 0.0620; mass becomes 1.0005
        let err = ChannelModel::new(2, 2, pmf).unwrap_err();
        match err {
            Error::Invalid(msg) => assert!(msg.contains("1.0005"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn negative_mass_and_shape_rejected() {
        assert!(ChannelModel::new(2, 2, vec![0.5; 8]).is_err());
        let mut pmf = vec![0.0; 9];
        pmf[0] = 1.5;
        pmf[1] = -0.5;
        assert!(ChannelModel::new(2, 2, pmf).is_err());
        assert!(ChannelModel::new(0, 1, vec![1.0]).is_err());
        // dense-table guard
        assert!(ChannelModel::new(8, 31, vec![]).is_err());
    }

    /// Brute-force oracle over the nine joint cells.
    fn brute_stats() -> (Vec<[f64; 3]>, [f64; 3], [f64; 2], f64) {
        let mut marg = vec![[0.0f64; 3]; 2]; // [u][q] = Pr[N_u >= q]
        let mut pair = [0.0f64; 3]; // Pr[max >= q]
        for i in 0..3 {
            for j in 0..3 {
                let p = TABLE1_CELLS[i][j];
                for q in 0..=2 {
                    if i >= q {
                        marg[0][q] += p;
                    }
                    if j >= q {
                        marg[1][q] += p;
                    }
                    if i.max(j) >= q {
                        pair[q] += p;
                    }
                }
            }
        }
        let means = [marg[0][1] + marg[0][2], marg[1][1] + marg[1][2]];
        let mean_max = pair[1] + pair[2];
        (marg, pair, means, mean_max)
    }

    #[test]
    fn table1_statistics_match_brute_force() {
        let stats = table1_stats();
        let (marg, pair, means, mean_max) = brute_stats();
        for u in 0..2 {
            for q in 0..=2 {
                assert!((stats.marginal_geq(u, q) - marg[u][q]).abs() < 1e-12);
            }
            assert!((stats.expected_layers(u) - means[u]).abs() < 1e-12);
        }
        for q in 0..=2 {
            assert!((stats.pair_max_geq(q) - pair[q]).abs() < 1e-12);
        }
        assert!((stats.expected_subset_max(0b11) - mean_max).abs() < 1e-12);

        // frozen values
        assert!((stats.expected_layers(0) - 0.8522).abs() < 1e-12);
        assert!((stats.expected_layers(1) - 0.9748).abs() < 1e-12);
        assert!((stats.marginal_geq(0, 1) - 0.6739).abs() < 1e-12);
        assert!((stats.marginal_geq(1, 1) - 0.7585).abs() < 1e-12);
        assert!((stats.marginal_geq(0, 2) - 0.1783).abs() < 1e-12);
        assert!((stats.marginal_geq(1, 2) - 0.2163).abs() < 1e-12);
        assert!((stats.pair_max_geq(1) - 0.9503).abs() < 1e-12);
        assert!((stats.pair_max_geq(2) - 0.3326).abs() < 1e-12);
        assert!((stats.expected_subset_max(0b11) - 1.2829).abs() < 1e-12);
    }

    #[test]
    fn stat_invariants() {
        let stats = table1_stats();
        for u in 0..2 {
            assert_eq!(stats.marginal_geq(u, 0), 1.0);
            // singleton subset equals the marginal
            for q in 0..=2 {
                assert_eq!(stats.subset_max_geq(1 << u, q), stats.marginal_geq(u, q));
                // subset monotone under inclusion
                assert!(stats.subset_max_geq(0b11, q) >= stats.marginal_geq(u, q) - 1e-15);
            }
            // non-increasing in q
            assert!(stats.marginal_geq(u, 1) <= stats.marginal_geq(u, 0));
            assert!(stats.marginal_geq(u, 2) <= stats.marginal_geq(u, 1));
            let sum: f64 = (1..=2).map(|q| stats.marginal_geq(u, q)).sum();
            assert!((stats.expected_layers(u) - sum).abs() < 1e-12);
        }
    }

    #[test]
    fn point_mass_sampling() {
        let mut pmf = vec![0.0; 9];
        pmf[2 * 3 + 1] = 1.0; // all mass on (2, 1)
        let ch = ChannelModel::new(2, 2, pmf).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(ch.sample_pair(&mut rng), (2, 1));
        }
    }

    #[test]
    fn sampling_frequency_converges() {
        let ch = table1();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let draws = 1_000_000;
        let mut counts = vec![0u32; 9];
        for _ in 0..draws {
            let (i, j) = ch.sample_pair(&mut rng);
            counts[i * 3 + j] += 1;
        }
        let freq_11 = counts[1 * 3 + 1] as f64 / draws as f64;
        assert!((freq_11 - 0.2251).abs() < 0.003, "freq(1,1) = {freq_11}");
        // max deviation across all cells
        for i in 0..3 {
            for j in 0..3 {
                let f = counts[i * 3 + j] as f64 / draws as f64;
                assert!((f - TABLE1_CELLS[i][j]).abs() < 0.003);
            }
        }
    }

    #[test]
    fn identical_seed_identical_draws() {
        let ch = table1();
        let mut a = ChaCha12Rng::seed_from_u64(99);
        let mut b = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..1000 {
            assert_eq!(ch.sample_pair(&mut a), ch.sample_pair(&mut b));
        }
    }
}
