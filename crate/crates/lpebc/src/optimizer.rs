//! Boundary extraction for the achievable regions: maximize a weighted sum
//! of rates over packet allocations, sweep supporting weights, and build
//! region polygons for every bound and scheme.
//!
//! The two-phase objectives are piecewise smooth but not concave (nested
//! maxima and positive parts), so the search is derivative free: a coarse
//! grid over the allocation simplex followed by a pattern-search polish with
//! shrinking step from the best grid cells.

use rayon::prelude::*;

use crate::bounds;
use crate::channel::ChannelStats;
use crate::error::{Error, Result};
use crate::geometry::{
    convex_hull, polygon_from_halfplanes, region_from_support, RatePoint, RegionPolygon, Weights,
};
use crate::schemes::{self, Ach2Variant, Allocation};

/// Default number of support angles when polygonizing a bound.
pub const DEFAULT_SWEEP: usize = 2048;
/// Number of weight angles swept when tracing an achievable-region boundary.
pub const ACH2_SWEEP_ANGLES: usize = 64;

/// Search budget and determinism knobs.
#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Grid points per allocation coordinate on the simplex.
    pub grid_resolution: usize,
    /// Number of grid cells polished by pattern search.
    pub multistarts: usize,
    /// Cap on objective evaluations per polish.
    pub max_iterations: usize,
    /// Pattern-search step floor, in simplex coordinates.
    pub tolerance: f64,
    /// Seed for the extra random restarts used when `multistarts` exceeds
    /// the number of feasible grid cells; the search is otherwise
    /// deterministic.
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid_resolution: 21,
            multistarts: 8,
            max_iterations: 20_000,
            tolerance: 1e-7,
            seed: 0,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.grid_resolution < 2 || self.multistarts < 1 || self.tolerance <= 0.0 {
            return Err(Error::Invalid(format!(
                "search config needs grid_resolution >= 2, multistarts >= 1, tolerance > 0; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Every region this crate can compute, under its command-line name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    NoCsit,
    FullLookahead,
    CofOuter,
    Ach1,
    Ach2(Ach2Variant),
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::NoCsit,
        Scheme::FullLookahead,
        Scheme::CofOuter,
        Scheme::Ach1,
        Scheme::Ach2(Ach2Variant::Idle),
        Scheme::Ach2(Ach2Variant::IntraLayer),
        Scheme::Ach2(Ach2Variant::InterLayer),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::NoCsit => "no-csit",
            Scheme::FullLookahead => "full-la",
            Scheme::CofOuter => "cof-outer",
            Scheme::Ach1 => "ach1",
            Scheme::Ach2(Ach2Variant::Idle) => "ach2-idle",
            Scheme::Ach2(Ach2Variant::IntraLayer) => "ach2-intra",
            Scheme::Ach2(Ach2Variant::InterLayer) => "ach2-inter",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no-csit" => Ok(Scheme::NoCsit),
            "full-la" => Ok(Scheme::FullLookahead),
            "cof-outer" => Ok(Scheme::CofOuter),
            "ach1" => Ok(Scheme::Ach1),
            "ach2-idle" => Ok(Scheme::Ach2(Ach2Variant::Idle)),
            "ach2-intra" => Ok(Scheme::Ach2(Ach2Variant::IntraLayer)),
            "ach2-inter" => Ok(Scheme::Ach2(Ach2Variant::InterLayer)),
            other => Err(Error::Invalid(format!(
                "unknown scheme {other:?}; expected one of no-csit, full-la, cof-outer, ach1, ach2-idle, ach2-intra, ach2-inter"
            ))),
        }
    }
}

fn vec_to_alloc(x: &[f64], layers: usize) -> Option<Allocation> {
    let k = [x[..layers].to_vec(), x[layers..].to_vec()];
    Allocation::new(k).ok()
}

/// `w . rates` of an allocation, or `None` when the allocation is invalid
/// for this channel (dead layer) or flagged infeasible.
fn objective(
    stats: &ChannelStats,
    variant: Ach2Variant,
    w: &Weights,
    x: &[f64],
) -> Option<f64> {
    let alloc = vec_to_alloc(x, stats.layers())?;
    let pe = schemes::evaluate(stats, &alloc, variant).ok()?;
    if pe.infeasible.iter().any(|&f| f) {
        return None;
    }
    Some(w.get(0) * pe.rates[0] + w.get(1) * pe.rates[1])
}

fn enumerate_simplex_grid(dims: usize, resolution: usize) -> Vec<Vec<f64>> {
    let steps = resolution - 1;
    let mut out = Vec::new();
    let mut current = vec![0usize; dims];
    fn rec(out: &mut Vec<Vec<f64>>, current: &mut Vec<usize>, dim: usize, left: usize, steps: usize) {
        if dim + 1 == current.len() {
            current[dim] = left;
            out.push(current.iter().map(|&c| c as f64 / steps as f64).collect());
            return;
        }
        for c in 0..=left {
            current[dim] = c;
            rec(out, current, dim + 1, left - c, steps);
        }
    }
    rec(&mut out, &mut current, 0, steps, steps);
    out
}

/// Best allocation found for one weight vector: coarse simplex grid, then a
/// pattern-search polish (exchange moves between coordinates, step halved
/// down to the tolerance) from the top grid cells. Deterministic for a given
/// config and seed.
pub fn maximize_weighted_rate(
    stats: &ChannelStats,
    variant: Ach2Variant,
    w: &Weights,
    cfg: &SearchConfig,
) -> Result<(Allocation, RatePoint)> {
    cfg.validate()?;
    if stats.users() != 2 {
        return Err(Error::Invalid("rate maximization is two-user only".into()));
    }
    let dims = 2 * stats.layers();
    let mut scored: Vec<(f64, Vec<f64>)> = enumerate_simplex_grid(dims, cfg.grid_resolution)
        .into_iter()
        .filter_map(|x| objective(stats, variant, w, &x).map(|f| (f, x)))
        .collect();
    if scored.is_empty() {
        return Err(Error::Numeric(
            "no feasible allocation on the search grid".into(),
        ));
    }
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| a.1.partial_cmp(&b.1).unwrap())
    });
    let mut starts: Vec<Vec<f64>> = scored
        .iter()
        .take(cfg.multistarts)
        .map(|(_, x)| x.clone())
        .collect();
    if starts.len() < cfg.multistarts {
        // top up with seeded random simplex points
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(cfg.seed);
        while starts.len() < cfg.multistarts {
            let mut x: Vec<f64> = (0..dims).map(|_| -rng.gen::<f64>().ln()).collect();
            let sum: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= sum);
            starts.push(x);
        }
    }

    let initial_step = 1.0 / (cfg.grid_resolution - 1) as f64;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let polished = polish(stats, variant, w, start, initial_step, cfg);
        if let Some((f, x)) = polished {
            best = match best {
                None => Some((f, x)),
                Some((bf, bx)) => {
                    if f > bf || (f == bf && x < bx) {
                        Some((f, x))
                    } else {
                        Some((bf, bx))
                    }
                }
            };
        }
    }
    let (_, x) = best.ok_or_else(|| Error::Numeric("search found no feasible point".into()))?;
    let alloc = vec_to_alloc(&x, stats.layers())
        .ok_or_else(|| Error::Numeric("search returned an invalid allocation".into()))?;
    let pe = schemes::evaluate(stats, &alloc, variant)?;
    Ok((alloc, pe.rate_point()))
}

fn polish(
    stats: &ChannelStats,
    variant: Ach2Variant,
    w: &Weights,
    mut x: Vec<f64>,
    initial_step: f64,
    cfg: &SearchConfig,
) -> Option<(f64, Vec<f64>)> {
    let dims = x.len();
    let mut f = objective(stats, variant, w, &x)?;
    let mut step = initial_step;
    let mut evals = 0usize;
    while step >= cfg.tolerance && evals < cfg.max_iterations {
        let mut best_move: Option<(f64, Vec<f64>)> = None;
        for to in 0..dims {
            for from in 0..dims {
                if from == to || x[from] <= 0.0 {
                    continue;
                }
                let delta = step.min(x[from]);
                let mut y = x.clone();
                y[from] -= delta;
                y[to] += delta;
                evals += 1;
                if let Some(fy) = objective(stats, variant, w, &y) {
                    if fy > f && best_move.as_ref().map_or(true, |(bf, _)| fy > *bf) {
                        best_move = Some((fy, y));
                    }
                }
            }
        }
        match best_move {
            Some((fy, y)) => {
                f = fy;
                x = y;
            }
            None => step *= 0.5,
        }
    }
    Some((f, x))
}

/// Polygonize one scheme's region.
///
/// The bounds go through exact support sweeps; the feedback outer bound is
/// the intersection of the per-ordering enhanced regions, each swept
/// separately so corners coming from constraint crossings stay exact. The
/// two-phase achievable regions are convex hulls of swept weighted-rate
/// optima together with the two single-user points `(E[N_1], 0)` and
/// `(0, E[N_2])`, which plain retransmission always achieves.
pub fn build_region(
    stats: &ChannelStats,
    scheme: Scheme,
    cfg: &SearchConfig,
    sweep_count: usize,
) -> Result<RegionPolygon> {
    if stats.users() != 2 {
        return Err(Error::Invalid("region polygons are two-user only".into()));
    }
    match scheme {
        Scheme::NoCsit => region_from_support(|w| bounds::support_no_csit(stats, w), sweep_count),
        Scheme::Ach1 => region_from_support(|w| schemes::ach1_support(stats, w), sweep_count),
        Scheme::FullLookahead => polygon_from_halfplanes(&bounds::region_full_lookahead(stats)?),
        Scheme::CofOuter => {
            let perms = bounds::PermutationSet::new(stats.users());
            let mut region: Option<RegionPolygon> = None;
            for perm in perms.iter() {
                let poly = region_from_support(
                    |w| bounds::support_enhanced(stats, w, perm),
                    sweep_count,
                )?;
                region = Some(match region {
                    None => poly,
                    Some(acc) => acc.intersect(&poly)?,
                });
            }
            Ok(region.expect("at least one permutation"))
        }
        Scheme::Ach2(variant) => {
            // Pool the allocations found by sweeping every variant and
            // evaluate them all under this one. Re-finalizing an allocation
            // never misorders the variants, so hulls built from a shared
            // pool nest exactly the way the schemes do.
            let mut hull_points: Vec<RatePoint> = Vec::new();
            for source in Ach2Variant::ALL {
                for (_, alloc, point) in sweep_rate_points(stats, source, cfg)? {
                    if source == variant {
                        hull_points.push(point);
                    } else {
                        let pe = schemes::evaluate(stats, &alloc, variant)?;
                        hull_points.push(pe.rate_point());
                    }
                }
            }
            hull_points.push(RatePoint::pair(stats.expected_layers(0), 0.0)?);
            hull_points.push(RatePoint::pair(0.0, stats.expected_layers(1))?);
            convex_hull(&hull_points)
        }
    }
}

/// The swept `(angle, allocation, rate point)` triples behind an achievable
/// region boundary.
pub fn sweep_rate_points(
    stats: &ChannelStats,
    variant: Ach2Variant,
    cfg: &SearchConfig,
) -> Result<Vec<(f64, Allocation, RatePoint)>> {
    let results: Vec<Result<(f64, Allocation, RatePoint)>> = (0..ACH2_SWEEP_ANGLES)
        .into_par_iter()
        .map(|i| {
            let theta =
                (i as f64 + 0.5) / ACH2_SWEEP_ANGLES as f64 * std::f64::consts::FRAC_PI_2;
            let w = Weights::from_angle(theta);
            let (alloc, point) = maximize_weighted_rate(stats, variant, &w, cfg)?;
            Ok((theta, alloc, point))
        })
        .collect();
    results.into_iter().collect()
}

/// One reported corner of a region: its coordinates, the weight angle that
/// supports it, and (for the searched schemes) the allocation achieving it.
#[derive(Clone, Debug)]
pub struct CornerInfo {
    pub r1: f64,
    pub r2: f64,
    pub angle_deg: f64,
    pub allocation: Option<Allocation>,
}

/// Corner table for one scheme, in canonical boundary order.
pub fn corner_report(
    stats: &ChannelStats,
    scheme: Scheme,
    cfg: &SearchConfig,
    sweep_count: usize,
) -> Result<Vec<CornerInfo>> {
    let region = build_region(stats, scheme, cfg, sweep_count)?;
    let swept = match scheme {
        Scheme::Ach2(variant) => Some(sweep_rate_points(stats, variant, cfg)?),
        _ => None,
    };
    let corners = region.corners();
    let mut out = Vec::with_capacity(corners.len());
    for (i, c) in corners.iter().enumerate() {
        // supporting weight angle: bisector of the two adjacent edge normals
        let normal_angle = |a: &RatePoint, b: &RatePoint| -> f64 {
            let n = (a.y() - b.y(), b.x() - a.x());
            n.1.atan2(n.0)
        };
        let before = if i == 0 {
            std::f64::consts::FRAC_PI_2 // horizontal cap above the first corner
        } else {
            normal_angle(&corners[i - 1], c)
        };
        let after = if i + 1 == corners.len() {
            0.0 // vertical cap right of the last corner
        } else {
            normal_angle(c, &corners[i + 1])
        };
        let angle_deg = 0.5 * (before + after) * 180.0 / std::f64::consts::PI;
        let allocation = swept.as_ref().and_then(|pts| {
            pts.iter()
                .find(|(_, _, p)| {
                    (p.x() - c.x()).abs() < 1e-9 && (p.y() - c.y()).abs() < 1e-9
                })
                .map(|(_, alloc, _)| alloc.clone())
        });
        out.push(CornerInfo {
            r1: c.x(),
            r2: c.y(),
            angle_deg,
            allocation,
        });
    }
    Ok(out)
}
