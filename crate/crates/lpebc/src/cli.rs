//! File-based command implementations behind the `lpebc` binary: region
//! extraction, corner reports, protocol simulation, scheme comparison and
//! figure plotting.
//!
//! Every command is a pure function from input files and options to output
//! files and a returned report string, so frontends and tests can call them
//! directly. Outputs are deterministic: identical inputs (including seeds)
//! produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::channel::{ChannelModel, ChannelStats};
use crate::error::{Error, Result};
use crate::geometry::{render_svg, RegionPolygon, Weights};
use crate::optimizer::{build_region, corner_report, Scheme, SearchConfig};
use crate::schemes::{Ach2Variant, Allocation};
use crate::simcore::{run_batch, SimConfig};

fn load_stats(channel: &Path) -> Result<ChannelStats> {
    ChannelModel::load(channel)?.compute_stats()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Compute one scheme's region and write its corner CSV.
pub fn cmd_region(channel: &Path, scheme: &str, sweep: usize, out: &Path) -> Result<String> {
    let stats = load_stats(channel)?;
    let scheme: Scheme = scheme.parse()?;
    let region = build_region(&stats, scheme, &SearchConfig::default(), sweep)?;
    write_file(out, &region.to_corner_csv())?;
    Ok(format!(
        "{}: {} corners -> {}",
        scheme.name(),
        region.corners().len(),
        out.display()
    ))
}

/// Corner table with supporting weight angles and, for the searched
/// schemes, the allocation behind each corner.
pub fn cmd_corners(
    channel: &Path,
    scheme: &str,
    sweep: usize,
    out: Option<&Path>,
) -> Result<String> {
    let stats = load_stats(channel)?;
    let scheme: Scheme = scheme.parse()?;
    let corners = corner_report(&stats, scheme, &SearchConfig::default(), sweep)?;
    let mut text = String::from("scheme      r1        r2        angle_deg  allocation\n");
    for c in &corners {
        text.push_str(&format!(
            "{:<11} {:<9.6} {:<9.6} {:<10.2} {}\n",
            scheme.name(),
            c.r1,
            c.r2,
            c.angle_deg,
            c.allocation
                .as_ref()
                .map_or_else(|| "-".to_string(), |a| a.to_json()),
        ));
    }
    if let Some(path) = out {
        write_file(path, &text)?;
    }
    Ok(text)
}

/// Simulate a protocol variant for an allocation scaled to a packet budget;
/// writes the per-trial CSV and returns the aggregate summary.
pub fn cmd_simulate(
    channel: &Path,
    variant: &str,
    alloc: &Path,
    packets: u64,
    seed: u64,
    trials: usize,
    out: &Path,
) -> Result<String> {
    if packets == 0 {
        return Err(Error::Invalid("packets must be >= 1".into()));
    }
    if trials == 0 {
        return Err(Error::Invalid("trials must be >= 1".into()));
    }
    let model = ChannelModel::load(channel)?;
    let variant: Ach2Variant = variant.parse()?;
    let fluid = Allocation::load(alloc)?;
    if fluid.layers() != model.layers() {
        return Err(Error::Invalid(format!(
            "allocation references layer {} but channel has {} layers",
            fluid.layers(),
            model.layers()
        )));
    }
    let scale = packets as f64 / fluid.total();
    let counts: [Vec<u64>; 2] = [
        (0..fluid.layers())
            .map(|q| (fluid.get(0, q) * scale).round() as u64)
            .collect(),
        (0..fluid.layers())
            .map(|q| (fluid.get(1, q) * scale).round() as u64)
            .collect(),
    ];
    let cfg = SimConfig::new(&model, variant, counts, seed, trials)?;
    let report = run_batch(&cfg)?;
    write_file(out, &report.to_csv())?;
    Ok(report.summary_text())
}

const COMPARE_SWEEP_ANGLES: usize = 256;
/// Corner-containment slack used by the inclusion verdicts.
const INCLUSION_TOL: f64 = 1e-6;

/// Compute every region, report corners, verify the inclusion chain of the
/// achievable schemes inside the feedback outer bound, and locate the
/// weight angle where inner and outer bounds are furthest apart.
pub fn cmd_compare(channel: &Path, sweep: usize, out: Option<&Path>) -> Result<String> {
    let stats = load_stats(channel)?;
    let cfg = SearchConfig::default();
    let mut regions: Vec<(Scheme, RegionPolygon)> = Vec::new();
    for scheme in Scheme::ALL {
        regions.push((scheme, build_region(&stats, scheme, &cfg, sweep)?));
    }
    let by_name = |s: Scheme| -> &RegionPolygon {
        &regions.iter().find(|(sc, _)| *sc == s).unwrap().1
    };

    let mut text = String::new();
    for (scheme, region) in &regions {
        text.push_str(&format!("{:<11}", scheme.name()));
        for c in region.corners() {
            text.push_str(&format!(" ({:.4}, {:.4})", c.x(), c.y()));
        }
        text.push('\n');
    }

    text.push_str("\ninclusion chain:\n");
    let chain = [
        Scheme::Ach1,
        Scheme::Ach2(Ach2Variant::Idle),
        Scheme::Ach2(Ach2Variant::IntraLayer),
        Scheme::Ach2(Ach2Variant::InterLayer),
        Scheme::CofOuter,
    ];
    let mut all_ok = true;
    for pair in chain.windows(2) {
        let inner = by_name(pair[0]);
        let outer = by_name(pair[1]);
        let ok = inner
            .corners()
            .iter()
            .all(|c| outer.contains(c, INCLUSION_TOL));
        all_ok &= ok;
        text.push_str(&format!(
            "  {} within {}: {}\n",
            pair[0].name(),
            pair[1].name(),
            if ok { "OK" } else { "VIOLATED" }
        ));
    }

    // largest support gap between the outer bound and the best inner region
    let outer = by_name(Scheme::CofOuter);
    let inner = by_name(Scheme::Ach2(Ach2Variant::InterLayer));
    let mut max_gap = f64::NEG_INFINITY;
    let mut max_angle = 0.0;
    for i in 0..COMPARE_SWEEP_ANGLES {
        let theta = (i as f64 + 0.5) / COMPARE_SWEEP_ANGLES as f64 * std::f64::consts::FRAC_PI_2;
        let w = Weights::from_angle(theta);
        let gap = outer.support(&w) - inner.support(&w);
        if gap > max_gap {
            max_gap = gap;
            max_angle = theta.to_degrees();
        }
    }
    text.push_str(&format!(
        "\nmax outer/inner gap: {max_gap:.6} at weight angle {max_angle:.2} deg\n"
    ));
    text.push_str(&format!(
        "chain verdict: {}\n",
        if all_ok { "all inclusions hold" } else { "violations found" }
    ));

    if let Some(path) = out {
        write_file(path, &text)?;
    }
    Ok(text)
}

/// Overlay one polygon per corner CSV into a single SVG figure.
pub fn cmd_plot(csvs: &[PathBuf], out: &Path) -> Result<String> {
    if csvs.is_empty() {
        return Err(Error::Invalid("plot needs at least one corner CSV".into()));
    }
    let mut entries = Vec::with_capacity(csvs.len());
    for path in csvs {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let region = RegionPolygon::from_corner_csv(&text).map_err(|e| match e {
            Error::Invalid(detail) => Error::parse(path, detail),
            other => other,
        })?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        entries.push((label, region));
    }
    write_file(out, &render_svg(&entries))?;
    Ok(format!("{} regions -> {}", entries.len(), out.display()))
}
