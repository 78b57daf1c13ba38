//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with `--nocapture` to see them).
//!
//! Reference values are the channel bundled in `data/table1.json`; every
//! tolerance is pinned here.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use lpebc::bounds::{support_cof_outer, support_no_csit};
use lpebc::channel::{ChannelModel, ChannelStats};
use lpebc::geometry::{RatePoint, RegionPolygon, Weights};
use lpebc::gf::{Eliminator, Gf256};
use lpebc::optimizer::{build_region, maximize_weighted_rate, Scheme, SearchConfig};
use lpebc::schemes::{self, Ach2Variant, Allocation};
use lpebc::simcore::{run_batch, SimConfig};

fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn table1_stats() -> ChannelStats {
    ChannelModel::load(data_path("table1.json"))
        .expect("bundled channel file loads")
        .compute_stats()
        .expect("stats computable")
}

fn table1_model() -> ChannelModel {
    ChannelModel::load(data_path("table1.json")).unwrap()
}

/// Every expected corner has a computed corner within `tol` per coordinate.
fn corners_match(region: &RegionPolygon, expected: &[(f64, f64)], tol: f64) -> bool {
    expected.iter().all(|e| {
        region
            .corners()
            .iter()
            .any(|c| (c.x() - e.0).abs() <= tol && (c.y() - e.1).abs() <= tol)
    })
}

/// The region contains some point within `tol` (per coordinate) of `p`;
/// with downward closure this is containment of the shifted point.
fn contains_near(region: &RegionPolygon, p: (f64, f64), tol: f64) -> bool {
    let shifted = RatePoint::pair((p.0 - tol).max(0.0), (p.1 - tol).max(0.0)).unwrap();
    region.contains(&shifted, 0.0)
}

#[test]
fn criterion_01_outer_bound_corners() {
    let start = Instant::now();
    let stats = table1_stats();
    let region = build_region(&stats, Scheme::CofOuter, &SearchConfig::default(), 2048).unwrap();
    let expected = [
        (0.0, 0.9748),
        (0.3326, 0.7585),
        (0.4231, 0.6862),
        (0.6739, 0.3326),
        (0.8522, 0.0),
    ];
    let elapsed = start.elapsed();
    assert_eq!(region.corners().len(), expected.len(), "{:?}", region.corners());
    assert!(corners_match(&region, &expected, 1e-3));
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "criterion 1 PASS: cof-outer corners match the five references within 1e-3 ({elapsed:?})"
    );
}

#[test]
fn criterion_02_per_layer_scheme_corners() {
    let start = Instant::now();
    let stats = table1_stats();
    let region = build_region(&stats, Scheme::Ach1, &SearchConfig::default(), 2048).unwrap();
    let expected = [(0.0957, 0.9125), (0.4091, 0.6624), (0.7697, 0.1540)];
    let elapsed = start.elapsed();
    assert!(corners_match(&region, &expected, 1e-3), "{:?}", region.corners());
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 2 PASS: ach1 corners match the three references within 1e-3 ({elapsed:?})");
}

#[test]
fn criterion_03_two_phase_variant_corners() {
    let stats = table1_stats();
    let cfg = SearchConfig::default();
    let cases: [(Ach2Variant, [(f64, f64); 3]); 3] = [
        (
            Ach2Variant::Idle,
            [(0.2779, 0.7941), (0.4817, 0.5903), (0.7176, 0.2511)],
        ),
        (
            Ach2Variant::IntraLayer,
            [(0.2812, 0.7896), (0.4943, 0.5751), (0.6988, 0.2827)],
        ),
        (
            Ach2Variant::InterLayer,
            [(0.3069, 0.7752), (0.5035, 0.5729), (0.6739, 0.3326)],
        ),
    ];
    for (variant, corners) in cases {
        let start = Instant::now();
        let region = build_region(&stats, Scheme::Ach2(variant), &cfg, 2048).unwrap();
        let elapsed = start.elapsed();
        for c in corners {
            assert!(
                contains_near(&region, c, 1e-3),
                "{}: {c:?} not reached",
                variant.name()
            );
        }
        assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
        println!(
            "criterion 3 PASS ({}): hull reaches all three reference corners within 1e-3 ({elapsed:?})",
            variant.name()
        );
    }
}

#[test]
fn criterion_04_inter_layer_touches_outer_corner() {
    let stats = table1_stats();
    let region = build_region(
        &stats,
        Scheme::Ach2(Ach2Variant::InterLayer),
        &SearchConfig::default(),
        2048,
    )
    .unwrap();
    assert!(contains_near(&region, (0.6739, 0.3326), 1e-3));
    println!("criterion 4 PASS: inter-layer region reaches the outer-bound corner (0.6739, 0.3326)");
}

#[test]
fn criterion_05_inclusion_chain() {
    let stats = table1_stats();
    let cfg = SearchConfig::default();
    let chain = [
        Scheme::Ach1,
        Scheme::Ach2(Ach2Variant::Idle),
        Scheme::Ach2(Ach2Variant::IntraLayer),
        Scheme::Ach2(Ach2Variant::InterLayer),
        Scheme::CofOuter,
    ];
    let regions: Vec<RegionPolygon> = chain
        .iter()
        .map(|s| build_region(&stats, *s, &cfg, 2048).unwrap())
        .collect();
    for (i, pair) in regions.windows(2).enumerate() {
        for corner in pair[0].corners() {
            assert!(
                pair[1].contains(corner, 1e-6),
                "{} corner {corner:?} outside {}",
                chain[i].name(),
                chain[i + 1].name()
            );
        }
    }
    println!("criterion 5 PASS: ach1 within idle within intra within inter within cof-outer (1e-6 slack)");
}

#[test]
fn criterion_06_recursion_matches_closed_form() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xAC5);
    let mut clamped = 0usize;
    let mut checked = 0usize;
    for _ in 0..1000 {
        let q = rng.gen_range(1..=4usize);
        let cells = (q + 1) * (q + 1);
        let mut pmf: Vec<f64> = (0..cells).map(|_| rng.gen::<f64>() + 0.01).collect();
        let mass: f64 = pmf.iter().sum();
        pmf.iter_mut().for_each(|p| *p /= mass);
        let stats = ChannelModel::new(2, q, pmf).unwrap().compute_stats().unwrap();
        let mut k = [vec![0.0; q], vec![0.0; q]];
        for row in k.iter_mut() {
            for v in row.iter_mut() {
                // sprinkle zero allocations to exercise empty layers
                *v = if rng.gen::<f64>() < 0.3 { 0.0 } else { rng.gen::<f64>() };
            }
        }
        if k.iter().flatten().all(|v| *v == 0.0) {
            k[0][0] = 1.0;
        }
        let alloc = Allocation::new(k).unwrap();
        let trace = schemes::subphase_recursion(&stats, &alloc).unwrap();
        let closed = schemes::evaluate(&stats, &alloc, Ach2Variant::InterLayer).unwrap();
        if trace.intermediate_clamp {
            // the recursion is the operational truth; the closed form can
            // only under-count the backlog once a clamp fires
            clamped += 1;
            for u in 0..2 {
                assert!(
                    trace.final_k_rtx()[u] >= closed.k_rem_u[u] - 1e-9,
                    "clamped instance: recursion below closed form"
                );
            }
        } else {
            checked += 1;
            for u in 0..2 {
                let diff = (trace.final_k_rtx()[u] - closed.k_rem_u[u]).abs();
                assert!(diff <= 1e-9, "user {u}: recursion vs closed form differ by {diff}");
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "criterion 6 PASS: {checked} instances agree within 1e-9; {clamped} clamped instances \
         logged (recursion kept as ground truth) ({elapsed:?})"
    );
}

#[test]
fn criterion_07_simulator_matches_analysis() {
    let start = Instant::now();
    let model = table1_model();
    let stats = model.compute_stats().unwrap();

    // worked single-allocation cases
    let single = Allocation::single(2, 0, 0, 1.0).unwrap();
    let idle_target = schemes::evaluate(&stats, &single, Ach2Variant::Idle).unwrap().rates[0];
    let inter_target = schemes::evaluate(&stats, &single, Ach2Variant::InterLayer)
        .unwrap()
        .rates[0];
    assert!((idle_target - 0.71757).abs() < 1e-5);
    assert!((inter_target - 0.85220).abs() < 1e-5);

    let mut check = |variant: Ach2Variant, alloc: [Vec<u64>; 2], targets: [f64; 2], label: &str| {
        let cfg = SimConfig::new(&model, variant, alloc, 7, 10).unwrap();
        let report = run_batch(&cfg).unwrap();
        for u in 0..2 {
            if targets[u] > 0.0 {
                let rel = (report.mean_rate[u] - targets[u]).abs() / targets[u];
                assert!(
                    rel <= 0.02,
                    "{label}: user {u} empirical {} vs analytic {} (rel {rel:.4})",
                    report.mean_rate[u],
                    targets[u]
                );
            }
        }
        assert!(report.trials.iter().all(|t| t.decode_ok[0] && t.decode_ok[1]));
        report.mean_rate
    };

    let r1 = check(
        Ach2Variant::Idle,
        [vec![10_000, 0], vec![0, 0]],
        [idle_target, 0.0],
        "idle single-user",
    );
    let r2 = check(
        Ach2Variant::InterLayer,
        [vec![10_000, 0], vec![0, 0]],
        [inter_target, 0.0],
        "inter single-user",
    );

    // the allocation supporting the shared outer corner, from the optimizer
    let w = Weights::pair(1.6, 1.0).unwrap();
    let (alloc, point) = maximize_weighted_rate(
        &stats,
        Ach2Variant::InterLayer,
        &w,
        &SearchConfig::default(),
    )
    .unwrap();
    assert!((point.x() - 0.6739).abs() < 1e-3 && (point.y() - 0.3326).abs() < 1e-3);
    let scale = 10_000.0 / alloc.total();
    let counts = [
        (0..2).map(|q| (alloc.get(0, q) * scale).round() as u64).collect(),
        (0..2).map(|q| (alloc.get(1, q) * scale).round() as u64).collect(),
    ];
    let r3 = check(
        Ach2Variant::InterLayer,
        counts,
        [0.6739, 0.3326],
        "inter split allocation",
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "criterion 7 PASS: empirical rates ({:.5}), ({:.5}) and ({:.5}, {:.5}) all within 2% \
         of analysis ({elapsed:?})",
        r1[0], r2[0], r3[0], r3[1]
    );
}

#[test]
fn criterion_08_degraded_channel_feedback_is_useless() {
    // mass only where N_1 >= N_2
    let mut pmf = vec![0.0; 9];
    pmf[0] = 0.22; // (0,0)
    pmf[3] = 0.18; // (1,0)
    pmf[4] = 0.25; // (1,1)
    pmf[6] = 0.10; // (2,0)
    pmf[7] = 0.10; // (2,1)
    pmf[8] = 0.15; // (2,2)
    let stats = ChannelModel::new(2, 2, pmf).unwrap().compute_stats().unwrap();
    let mut max_diff: f64 = 0.0;
    for i in 0..256 {
        let theta = (i as f64 + 0.5) / 256.0 * std::f64::consts::FRAC_PI_2;
        let w = Weights::from_angle(theta);
        let diff = (support_cof_outer(&stats, &w) - support_no_csit(&stats, &w)).abs();
        max_diff = max_diff.max(diff);
    }
    assert!(max_diff <= 1e-9, "max support difference {max_diff}");
    println!(
        "criterion 8 PASS: degraded channel, outer bound equals no-CSIT support at 256 angles \
         (max diff {max_diff:.2e})"
    );
}

#[test]
fn criterion_09_field_and_decoder_suite() {
    // exhaustive inverse check
    for a in 1..=255u8 {
        let inv = Gf256(a).inv().expect("nonzero inverse exists");
        assert_eq!(Gf256(a) * inv, Gf256(1));
    }
    assert!(Gf256(0).inv().is_none());

    // full-rank frequency of random 64 x 64 systems vs the product formula
    let n = 64usize;
    let trials = 10_000usize;
    let expected: f64 = (1..=n).map(|i| 1.0 - 256f64.powi(-(i as i32))).product();
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let mut full = 0usize;
    for _ in 0..trials {
        let mut elim = Eliminator::new(0);
        for _ in 0..n {
            let mut coeffs = vec![0u8; n];
            rng.fill(&mut coeffs[..]);
            elim.absorb(coeffs, Vec::new()).unwrap();
        }
        if elim.rank() == n {
            full += 1;
        }
    }
    let freq = full as f64 / trials as f64;
    assert!(
        (freq - expected).abs() <= 0.002,
        "measured {freq} vs analytic {expected}"
    );
    println!(
        "criterion 9 PASS: 255 inverses verified; full-rank frequency {freq:.4} vs analytic \
         {expected:.4} (within 0.002)"
    );
}

#[test]
fn criterion_10_second_reference_channel_when_present() {
    let path = data_path("example1.json");
    if !path.exists() {
        println!(
            "criterion 10 SKIPPED: {} not present; add the channel file to enable this check",
            path.display()
        );
        return;
    }
    let stats = ChannelModel::load(&path).unwrap().compute_stats().unwrap();
    let region = build_region(&stats, Scheme::CofOuter, &SearchConfig::default(), 2048).unwrap();
    let expected = [(0.0, 1.0), (7.0 / 9.0, 5.0 / 9.0), (1.0, 0.0)];
    assert!(corners_match(&region, &expected, 1e-3), "{:?}", region.corners());
    let idle = build_region(
        &stats,
        Scheme::Ach2(Ach2Variant::Idle),
        &SearchConfig::default(),
        2048,
    )
    .unwrap();
    assert!(contains_near(&idle, (7.0 / 9.0, 5.0 / 9.0), 1e-3));
    println!("criterion 10 PASS: outer corners match and the idle variant achieves (7/9, 5/9)");
}
