//! Two-user rate-region geometry: support-function sweeps, half-plane
//! intersection, convex hulls with downward closure, containment tests and
//! CSV/SVG export.
//!
//! A region polygon is stored as its non-trivial boundary corners in
//! canonical order: starting at the corner with `r1 = 0` and maximal `r2`,
//! then with `r1` increasing and `r2` non-increasing down to the corner on
//! the `r1` axis. The region itself is the convex set enclosed by that
//! staircase and the two axes; it always contains the origin.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Distance below which two corners are considered the same point.
pub const CORNER_DEDUP_TOL: f64 = 1e-9;
/// Adjacent boundary edges whose directions differ by less than this (sine of
/// the turn angle) are merged; a vertex between them is not a corner.
pub const COLLINEAR_TOL: f64 = 1e-6;
/// Constraints whose normal directions differ by less than this angle are
/// merged to avoid ill-conditioned intersections.
pub const PARALLEL_TOL: f64 = 1e-12;

/// A nonnegative, not-all-zero weight vector, one entry per user.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    w: Vec<f64>,
}

impl Weights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Invalid("weights must have at least one entry".into()));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Invalid(format!("weights must be finite and >= 0, got {w:?}")));
        }
        if w.iter().all(|x| *x == 0.0) {
            return Err(Error::Invalid("weights must not be all zero".into()));
        }
        Ok(Weights { w })
    }

    pub fn pair(w1: f64, w2: f64) -> Result<Self> {
        Weights::new(vec![w1, w2])
    }

    /// Two-user weight vector `(cos theta, sin theta)` for `theta` in
    /// `(0, pi/2)`.
    pub fn from_angle(theta: f64) -> Self {
        assert!(theta > 0.0 && theta < FRAC_PI_2, "angle out of (0, pi/2)");
        Weights {
            w: vec![theta.cos(), theta.sin()],
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn get(&self, user: usize) -> f64 {
        self.w[user]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn dot(&self, r: &RatePoint) -> f64 {
        assert_eq!(self.w.len(), r.r.len());
        self.w.iter().zip(&r.r).map(|(w, r)| w * r).sum()
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Weights::new(self.w.iter().map(|x| x * alpha).collect())
    }
}

/// A point in rate space (packets per slot), nonnegative componentwise.
#[derive(Clone, Debug, PartialEq)]
pub struct RatePoint {
    r: Vec<f64>,
}

impl RatePoint {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Invalid(format!("rates must be finite and >= 0, got {r:?}")));
        }
        Ok(RatePoint { r })
    }

    pub fn pair(r1: f64, r2: f64) -> Result<Self> {
        RatePoint::new(vec![r1, r2])
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn get(&self, user: usize) -> f64 {
        self.r[user]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.r
    }

    /// First coordinate of a two-user point.
    pub fn x(&self) -> f64 {
        assert_eq!(self.r.len(), 2);
        self.r[0]
    }

    /// Second coordinate of a two-user point.
    pub fn y(&self) -> f64 {
        assert_eq!(self.r.len(), 2);
        self.r[1]
    }
}

/// The half-plane `{ r : w . r <= b }` with `w >= 0` and `b >= 0`.
#[derive(Clone, Debug)]
pub struct HalfPlane {
    pub w: Weights,
    pub b: f64,
}

impl HalfPlane {
    pub fn new(w: Weights, b: f64) -> Result<Self> {
        if !b.is_finite() || b < 0.0 {
            return Err(Error::Numeric(format!("support value {b} is not finite and >= 0")));
        }
        Ok(HalfPlane { w, b })
    }
}

/// A two-user rate region, stored as its canonical boundary staircase.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionPolygon {
    corners: Vec<RatePoint>,
}

impl RegionPolygon {
    fn from_raw(points: Vec<[f64; 2]>, turn_tol: f64) -> Self {
        RegionPolygon {
            corners: canonicalize(points, turn_tol)
                .into_iter()
                .map(|[x, y]| RatePoint { r: vec![x, y] })
                .collect(),
        }
    }

    /// Boundary corners in canonical order.
    pub fn corners(&self) -> &[RatePoint] {
        &self.corners
    }

    /// Largest `r1` in the region.
    pub fn max_r1(&self) -> f64 {
        self.corners.iter().map(|c| c.x()).fold(0.0, f64::max)
    }

    /// Largest `r2` in the region.
    pub fn max_r2(&self) -> f64 {
        self.corners.iter().map(|c| c.y()).fold(0.0, f64::max)
    }

    /// Maximum of `w . r` over the region.
    pub fn support(&self, w: &Weights) -> f64 {
        self.corners
            .iter()
            .map(|c| w.dot(c))
            .fold(0.0, f64::max)
    }

    /// Is `p` inside the region or within `tol` of its boundary?
    pub fn contains(&self, p: &RatePoint, tol: f64) -> bool {
        assert_eq!(p.len(), 2, "containment is defined for two-user points");
        let (px, py) = (p.x(), p.y());
        if px < -tol || py < -tol {
            return false;
        }
        if self.corners.is_empty() {
            return px <= tol && py <= tol;
        }
        // caps from the extreme corners
        if px > self.max_r1() + tol || py > self.max_r2() + tol {
            return false;
        }
        for pair in self.corners.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let n = (a.y() - b.y(), b.x() - a.x()); // outward normal
            let norm = (n.0 * n.0 + n.1 * n.1).sqrt();
            if norm == 0.0 {
                continue;
            }
            let d = (n.0 * (px - a.x()) + n.1 * (py - a.y())) / norm;
            if d > tol {
                return false;
            }
        }
        true
    }

    /// Half-plane description of the region (staircase edges only; the axis
    /// constraints `r >= 0` are implicit).
    pub fn to_halfplanes(&self) -> Vec<HalfPlane> {
        let mut hps = Vec::new();
        if let Some(first) = self.corners.first() {
            // cap above the first corner
            if let Ok(hp) = HalfPlane::new(Weights { w: vec![0.0, 1.0] }, first.y()) {
                hps.push(hp);
            }
        }
        if let Some(last) = self.corners.last() {
            if let Ok(hp) = HalfPlane::new(Weights { w: vec![1.0, 0.0] }, last.x()) {
                hps.push(hp);
            }
        }
        for pair in self.corners.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let n = (a.y() - b.y(), b.x() - a.x());
            let norm = (n.0 * n.0 + n.1 * n.1).sqrt();
            if norm == 0.0 {
                continue;
            }
            let w = Weights {
                w: vec![(n.0 / norm).max(0.0), (n.1 / norm).max(0.0)],
            };
            let b_val = w.w[0] * a.x() + w.w[1] * a.y();
            if let Ok(hp) = HalfPlane::new(w, b_val.max(0.0)) {
                hps.push(hp);
            }
        }
        hps
    }

    /// Intersection of two regions.
    pub fn intersect(&self, other: &RegionPolygon) -> Result<RegionPolygon> {
        let mut hps = self.to_halfplanes();
        hps.extend(other.to_halfplanes());
        polygon_from_halfplanes(&hps)
    }

    /// Corners as `r1,r2` CSV in canonical order.
    pub fn to_corner_csv(&self) -> String {
        let mut out = String::from("r1,r2\n");
        for c in &self.corners {
            out.push_str(&format!("{:.6},{:.6}\n", c.x(), c.y()));
        }
        out
    }

    /// Rebuild a region from a corner CSV (header `r1,r2`). The corners are
    /// re-hulled, so a hand-edited file still yields a valid region.
    pub fn from_corner_csv(text: &str) -> Result<RegionPolygon> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.eq_ignore_ascii_case("r1,r2")) {
                continue;
            }
            let mut it = line.split(',');
            let (a, b) = (it.next(), it.next());
            match (a, b) {
                (Some(a), Some(b)) => {
                    let x: f64 = a.trim().parse().map_err(|_| {
                        Error::Invalid(format!("corner CSV line {}: bad number {a:?}", i + 1))
                    })?;
                    let y: f64 = b.trim().parse().map_err(|_| {
                        Error::Invalid(format!("corner CSV line {}: bad number {b:?}", i + 1))
                    })?;
                    points.push(RatePoint::pair(x.max(0.0), y.max(0.0))?);
                }
                _ => {
                    return Err(Error::Invalid(format!(
                        "corner CSV line {}: expected two comma-separated values",
                        i + 1
                    )))
                }
            }
        }
        if points.is_empty() {
            return Err(Error::Invalid("corner CSV contains no points".into()));
        }
        convex_hull(&points)
    }
}

/// Intersect the half-planes `{ w . r <= f(w) }` for a uniform fan of
/// `sweep_count` weight angles in `(0, pi/2)` (together with `r >= 0`) and
/// extract the corner staircase.
pub fn region_from_support(
    f: impl Fn(&Weights) -> f64,
    sweep_count: usize,
) -> Result<RegionPolygon> {
    if sweep_count < 8 {
        return Err(Error::Invalid(format!(
            "sweep_count must be >= 8, got {sweep_count}"
        )));
    }
    let mut hps = Vec::with_capacity(sweep_count);
    let spacing = FRAC_PI_2 / (sweep_count + 1) as f64;
    for i in 0..sweep_count {
        let theta = (i + 1) as f64 * spacing;
        let w = Weights::from_angle(theta);
        let b = f(&w);
        if !b.is_finite() || b < 0.0 {
            return Err(Error::Numeric(format!(
                "support function returned {b} at angle {theta}"
            )));
        }
        hps.push(HalfPlane { w, b });
    }
    // Two grid angles straddling an edge normal intersect slightly off that
    // edge; such a vertex turns by about one grid step and is not a corner
    // of the underlying region, so the collapse tolerance follows the grid.
    polygon_from_halfplanes_tol(&hps, (2.0 * spacing).max(COLLINEAR_TOL))
}

/// Downward-closed convex hull: the hull of the points together with the
/// origin and each point's axis projections (a user may always discard rate).
pub fn convex_hull(points: &[RatePoint]) -> Result<RegionPolygon> {
    if points.is_empty() {
        return Err(Error::Invalid("convex_hull needs at least one point".into()));
    }
    let mut aug: Vec<[f64; 2]> = Vec::with_capacity(points.len() * 3 + 1);
    aug.push([0.0, 0.0]);
    for p in points {
        if p.len() != 2 {
            return Err(Error::Invalid("convex_hull is defined for two-user points".into()));
        }
        aug.push([p.x(), p.y()]);
        aug.push([p.x(), 0.0]);
        aug.push([0.0, p.y()]);
    }
    aug.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .unwrap()
            .then(b[1].partial_cmp(&a[1]).unwrap())
    });
    // upper-right frontier: monotone chain keeping only clockwise turns
    let mut chain: Vec<[f64; 2]> = Vec::new();
    for &p in &aug {
        if chain.last() == Some(&p) {
            continue;
        }
        while chain.len() >= 2 {
            let a = chain[chain.len() - 2];
            let b = chain[chain.len() - 1];
            if cross(sub(b, a), sub(p, b)) >= 0.0 {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(p);
    }
    Ok(RegionPolygon::from_raw(chain, COLLINEAR_TOL))
}

struct Line {
    slope: f64,
    intercept: f64,
}

impl Line {
    fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    fn cross_x(&self, other: &Line) -> f64 {
        (other.intercept - self.intercept) / (self.slope - other.slope)
    }

    /// Where the line reaches y = 0.
    fn zero_x(&self) -> f64 {
        -self.intercept / self.slope
    }
}

/// Intersection of half-planes with nonnegative normals plus `r >= 0`,
/// reduced to canonical corners. Fails when the intersection is unbounded.
pub fn polygon_from_halfplanes(hps: &[HalfPlane]) -> Result<RegionPolygon> {
    polygon_from_halfplanes_tol(hps, COLLINEAR_TOL)
}

fn polygon_from_halfplanes_tol(hps: &[HalfPlane], turn_tol: f64) -> Result<RegionPolygon> {
    let mut x_cap = f64::INFINITY;
    let mut y_cap = f64::INFINITY;
    // (angle of the normal, line) for the strictly diagonal constraints
    let mut lines: Vec<(f64, Line)> = Vec::new();
    for hp in hps {
        if hp.w.len() != 2 {
            return Err(Error::Invalid("half-plane intersection is two-user only".into()));
        }
        let (w1, w2) = (hp.w.get(0), hp.w.get(1));
        let norm = (w1 * w1 + w2 * w2).sqrt();
        if norm == 0.0 {
            continue;
        }
        let (u1, u2) = (w1 / norm, w2 / norm);
        let b = hp.b / norm;
        if u2 <= PARALLEL_TOL {
            x_cap = x_cap.min(b / u1);
        } else if u1 <= PARALLEL_TOL {
            y_cap = y_cap.min(b / u2);
        } else {
            lines.push((
                u1.atan2(u2), // angle from the r2 axis; ascending = steeper
                Line {
                    slope: -u1 / u2,
                    intercept: b / u2,
                },
            ));
        }
    }

    if lines.is_empty() {
        if !x_cap.is_finite() || !y_cap.is_finite() {
            return Err(Error::Numeric("half-plane intersection is unbounded".into()));
        }
        return Ok(RegionPolygon::from_raw(
            vec![[0.0, y_cap], [x_cap, y_cap], [x_cap, 0.0]],
            turn_tol,
        ));
    }

    // walking the boundary left to right, segment slopes descend
    lines.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.intercept.partial_cmp(&b.1.intercept).unwrap())
    });
    let mut merged: Vec<Line> = Vec::new();
    let mut last_angle = f64::NEG_INFINITY;
    for (angle, line) in lines {
        if angle - last_angle < PARALLEL_TOL {
            continue; // near-parallel: the earlier (tighter) constraint wins
        }
        last_angle = angle;
        merged.push(line);
    }

    // lower envelope; `merged` is ordered shallow to steep
    let mut stack: Vec<Line> = Vec::new();
    for line in merged {
        while stack.len() >= 2 {
            let l1 = &stack[stack.len() - 2];
            let l2 = &stack[stack.len() - 1];
            if l1.cross_x(&line) <= l1.cross_x(l2) {
                stack.pop();
            } else {
                break;
            }
        }
        if stack.len() == 1 && stack[0].intercept >= line.intercept {
            // steeper and starting lower: the first line never binds
            stack.pop();
        }
        stack.push(line);
    }

    let mut corners: Vec<[f64; 2]> = Vec::new();
    // skip stack segments that only own x < 0
    let mut seg = 0usize;
    while seg + 1 < stack.len() && stack[seg].cross_x(&stack[seg + 1]) <= 0.0 {
        seg += 1;
    }
    let mut x = 0.0f64;
    if y_cap < stack[seg].eval(0.0) {
        // horizontal cap segment until it meets the envelope
        corners.push([0.0, y_cap]);
        while seg + 1 < stack.len() {
            let cx = stack[seg].cross_x(&stack[seg + 1]);
            if stack[seg].eval(cx) <= y_cap {
                break;
            }
            seg += 1;
        }
        x = (y_cap - stack[seg].intercept) / stack[seg].slope;
        corners.push([x, y_cap]);
    } else {
        corners.push([0.0, stack[seg].eval(0.0)]);
    }
    // follow the envelope through its vertices
    loop {
        let end_x = if seg + 1 < stack.len() {
            stack[seg].cross_x(&stack[seg + 1])
        } else {
            f64::INFINITY
        };
        let zero_x = stack[seg].zero_x();
        if x_cap <= end_x.min(zero_x) {
            // vertical cap cuts the current segment
            let y = stack[seg].eval(x_cap).max(0.0);
            corners.push([x_cap, y]);
            if y > 0.0 {
                corners.push([x_cap, 0.0]);
            }
            break;
        }
        if zero_x <= end_x {
            corners.push([zero_x, 0.0]);
            break;
        }
        let y = stack[seg].eval(end_x);
        if end_x > x {
            corners.push([end_x, y]);
            x = end_x;
        }
        seg += 1;
    }
    Ok(RegionPolygon::from_raw(corners, turn_tol))
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

/// Clamp tiny negatives, deduplicate and drop vertices that are not real
/// corners (adjacent edges turning by less than `turn_tol`).
fn canonicalize(points: Vec<[f64; 2]>, turn_tol: f64) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    for mut p in points {
        p[0] = if p[0].abs() < CORNER_DEDUP_TOL { 0.0 } else { p[0] };
        p[1] = if p[1].abs() < CORNER_DEDUP_TOL { 0.0 } else { p[1] };
        if let Some(last) = pts.last() {
            if (p[0] - last[0]).hypot(p[1] - last[1]) <= CORNER_DEDUP_TOL {
                continue;
            }
        }
        pts.push(p);
    }
    if pts.len() < 3 {
        return pts;
    }
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for p in pts {
        while out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            let u = sub(b, a);
            let v = sub(p, b);
            let lu = (u[0] * u[0] + u[1] * u[1]).sqrt();
            let lv = (v[0] * v[0] + v[1] * v[1]).sqrt();
            if cross(u, v) >= -turn_tol * lu * lv {
                out.pop();
            } else {
                break;
            }
        }
        out.push(p);
    }
    out
}

/// Fixed palette used by the SVG renderer.
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Render one or more regions into a fixed 600x600 SVG figure with axes
/// annotated at the data extents. Output is byte-stable for equal inputs.
pub fn render_svg(entries: &[(String, RegionPolygon)]) -> String {
    const SIZE: f64 = 600.0;
    const MARGIN: f64 = 70.0;
    let span = SIZE - 2.0 * MARGIN;
    let x_max = entries
        .iter()
        .map(|(_, p)| p.max_r1())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let y_max = entries
        .iter()
        .map(|(_, p)| p.max_r2())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let sx = span / (x_max * 1.05);
    let sy = span / (y_max * 1.05);
    let px = |x: f64| MARGIN + x * sx;
    let py = |y: f64| SIZE - MARGIN - y * sy;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n",
        s = SIZE as u32
    ));
    svg.push_str(&format!(
        "  <rect width=\"{s}\" height=\"{s}\" fill=\"white\"/>\n",
        s = SIZE as u32
    ));
    // axes
    svg.push_str(&format!(
        "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        px(0.0),
        py(0.0),
        px(x_max * 1.05),
        py(0.0)
    ));
    svg.push_str(&format!(
        "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        px(0.0),
        py(0.0),
        px(0.0),
        py(y_max * 1.05)
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">R1</text>\n",
        px(x_max * 0.55),
        py(0.0) + 40.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 {:.2} {:.2})\">R2</text>\n",
        px(0.0) - 45.0,
        py(y_max * 0.55),
        px(0.0) - 45.0,
        py(y_max * 0.55)
    ));
    // extent ticks
    for (v, horizontal) in [(x_max, true), (y_max, false)] {
        let (tx, ty) = if horizontal {
            (px(v), py(0.0))
        } else {
            (px(0.0), py(v))
        };
        if horizontal {
            svg.push_str(&format!(
                "  <line x1=\"{tx:.2}\" y1=\"{:.2}\" x2=\"{tx:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
                ty - 4.0,
                ty + 4.0
            ));
            svg.push_str(&format!(
                "  <text x=\"{tx:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{v:.4}</text>\n",
                ty + 18.0
            ));
        } else {
            svg.push_str(&format!(
                "  <line x1=\"{:.2}\" y1=\"{ty:.2}\" x2=\"{:.2}\" y2=\"{ty:.2}\" stroke=\"black\"/>\n",
                tx - 4.0,
                tx + 4.0
            ));
            svg.push_str(&format!(
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{v:.4}</text>\n",
                tx - 7.0,
                ty + 4.0
            ));
        }
    }
    // region boundaries, closed along the axes
    for (i, (_, poly)) in entries.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = format!("M {:.2} {:.2}", px(0.0), py(0.0));
        if let Some(first) = poly.corners().first() {
            d.push_str(&format!(" L {:.2} {:.2}", px(0.0), py(first.y())));
        }
        for c in poly.corners() {
            d.push_str(&format!(" L {:.2} {:.2}", px(c.x()), py(c.y())));
        }
        if let Some(last) = poly.corners().last() {
            d.push_str(&format!(" L {:.2} {:.2}", px(last.x()), py(0.0)));
        }
        d.push_str(" Z");
        svg.push_str(&format!(
            "  <path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
        ));
    }
    // legend
    for (i, (label, _)) in entries.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN + 16.0 * i as f64;
        svg.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            SIZE - MARGIN - 130.0,
            SIZE - MARGIN - 105.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{label}</text>\n",
            SIZE - MARGIN - 100.0,
            y + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corners_of(poly: &RegionPolygon) -> Vec<(f64, f64)> {
        poly.corners().iter().map(|c| (c.x(), c.y())).collect()
    }

    fn assert_corners_close(poly: &RegionPolygon, expected: &[(f64, f64)], tol: f64) {
        let got = corners_of(poly);
        assert_eq!(
            got.len(),
            expected.len(),
            "corner count: got {got:?}, expected {expected:?}"
        );
        for (g, e) in got.iter().zip(expected) {
            assert!(
                (g.0 - e.0).abs() <= tol && (g.1 - e.1).abs() <= tol,
                "corner {g:?} vs {e:?} (tol {tol})"
            );
        }
    }

    #[test]
    fn simplex_support_gives_unit_simplex() {
        // support function of the unit simplex is max(w1, w2)
        let poly = region_from_support(|w| w.get(0).max(w.get(1)), 64).unwrap();
        assert_corners_close(&poly, &[(0.0, 1.0), (1.0, 0.0)], 1e-9);
        assert!(poly.contains(&RatePoint::pair(0.4, 0.4).unwrap(), 0.0));
        assert!(poly.contains(&RatePoint::pair(0.0, 0.0).unwrap(), 0.0));
        assert!(!poly.contains(&RatePoint::pair(0.6, 0.6).unwrap(), 1e-6));
    }

    #[test]
    fn point_support_recovers_rectangle() {
        // support of the single achievable point (2, 1), downward closed;
        // the interior-angle sweep overshoots the axis-parallel edges by
        // O(max extent * grid spacing)
        let poly = region_from_support(|w| 2.0 * w.get(0) + w.get(1), 2048).unwrap();
        assert_corners_close(&poly, &[(0.0, 1.0), (2.0, 1.0), (2.0, 0.0)], 2e-3);
        let mid = &poly.corners()[1];
        assert!((mid.x() - 2.0).abs() < 1e-9 && (mid.y() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_user_support_degenerates_to_segment() {
        let e1 = 0.8522;
        let poly = region_from_support(|w| w.get(0) * e1, 2048).unwrap();
        let got = corners_of(&poly);
        let last = *got.last().unwrap();
        assert!((last.0 - e1).abs() < 1e-9 && last.1.abs() < 1e-12, "{got:?}");
        // the whole region collapses onto the r1 axis up to sweep resolution
        assert!(poly.max_r2() < 1e-3, "sliver height {}", poly.max_r2());
    }

    #[test]
    fn sweep_needs_at_least_eight_angles() {
        assert!(region_from_support(|_| 1.0, 7).is_err());
    }

    #[test]
    fn bad_support_values_error() {
        assert!(region_from_support(|_| -1.0, 64).is_err());
        assert!(region_from_support(|_| f64::NAN, 64).is_err());
    }

    #[test]
    fn three_halfplane_polytope() {
        // R1 <= 0.8522, R2 <= 0.9748, R1 + R2 <= 1.2829
        let hps = vec![
            HalfPlane::new(Weights::pair(1.0, 0.0).unwrap(), 0.8522).unwrap(),
            HalfPlane::new(Weights::pair(0.0, 1.0).unwrap(), 0.9748).unwrap(),
            HalfPlane::new(Weights::pair(1.0, 1.0).unwrap(), 1.2829).unwrap(),
        ];
        let poly = polygon_from_halfplanes(&hps).unwrap();
        assert_corners_close(
            &poly,
            &[
                (0.0, 0.9748),
                (0.3081, 0.9748),
                (0.8522, 0.4307),
                (0.8522, 0.0),
            ],
            1e-9,
        );
    }

    #[test]
    fn hull_of_two_axis_points_is_simplex() {
        let pts = [
            RatePoint::pair(1.0, 0.0).unwrap(),
            RatePoint::pair(0.0, 1.0).unwrap(),
        ];
        let poly = convex_hull(&pts).unwrap();
        assert_corners_close(&poly, &[(0.0, 1.0), (1.0, 0.0)], 1e-12);
    }

    #[test]
    fn hull_of_single_point_is_rectangle() {
        let poly = convex_hull(&[RatePoint::pair(0.5, 0.5).unwrap()]).unwrap();
        assert_corners_close(&poly, &[(0.0, 0.5), (0.5, 0.5), (0.5, 0.0)], 1e-12);
    }

    #[test]
    fn hull_keeps_undominated_points_as_corners() {
        let pts = [
            RatePoint::pair(0.7176, 0.2511).unwrap(),
            RatePoint::pair(0.2779, 0.7941).unwrap(),
            RatePoint::pair(0.4817, 0.5903).unwrap(),
        ];
        let poly = convex_hull(&pts).unwrap();
        assert_corners_close(
            &poly,
            &[
                (0.0, 0.7941),
                (0.2779, 0.7941),
                (0.4817, 0.5903),
                (0.7176, 0.2511),
                (0.7176, 0.0),
            ],
            1e-12,
        );
    }

    #[test]
    fn hull_is_idempotent_on_corners() {
        let pts = [
            RatePoint::pair(0.7, 0.25).unwrap(),
            RatePoint::pair(0.28, 0.79).unwrap(),
            RatePoint::pair(0.48, 0.59).unwrap(),
            RatePoint::pair(0.3, 0.3).unwrap(), // dominated
        ];
        let poly = convex_hull(&pts).unwrap();
        let again = convex_hull(poly.corners()).unwrap();
        assert_eq!(corners_of(&poly), corners_of(&again));
    }

    #[test]
    fn every_corner_is_contained() {
        let poly = region_from_support(|w| 2.0 * w.get(0) + 1.3 * w.get(1), 512).unwrap();
        for c in poly.corners() {
            assert!(poly.contains(c, 1e-9));
        }
    }

    #[test]
    fn support_scaling_scales_region() {
        let f = |w: &Weights| 1.7 * w.get(0) + 0.4 * w.get(1) + (w.get(0) * w.get(1)).sqrt();
        let alpha = 3.25;
        let a = region_from_support(f, 256).unwrap();
        let b = region_from_support(|w| alpha * f(w), 256).unwrap();
        assert_eq!(a.corners().len(), b.corners().len());
        for (ca, cb) in a.corners().iter().zip(b.corners()) {
            assert!((ca.x() * alpha - cb.x()).abs() < 1e-9);
            assert!((ca.y() * alpha - cb.y()).abs() < 1e-9);
        }
    }

    #[test]
    fn intersect_two_rectangles() {
        let rect = |x: f64, y: f64| {
            polygon_from_halfplanes(&[
                HalfPlane::new(Weights::pair(1.0, 0.0).unwrap(), x).unwrap(),
                HalfPlane::new(Weights::pair(0.0, 1.0).unwrap(), y).unwrap(),
            ])
            .unwrap()
        };
        let both = rect(2.0, 1.0).intersect(&rect(1.0, 2.0)).unwrap();
        assert_corners_close(&both, &[(0.0, 1.0), (1.0, 1.0), (1.0, 0.0)], 1e-9);

        // a genuinely crossing pair: x + y <= 1.5 cut by x <= 1, y <= 1
        let tri = polygon_from_halfplanes(&[
            HalfPlane::new(Weights::pair(1.0, 1.0).unwrap(), 1.5).unwrap()
        ])
        .unwrap();
        let cut = tri.intersect(&rect(1.0, 1.0)).unwrap();
        assert_corners_close(
            &cut,
            &[(0.0, 1.0), (0.5, 1.0), (1.0, 0.5), (1.0, 0.0)],
            1e-9,
        );
    }

    #[test]
    fn csv_round_trip() {
        let poly = convex_hull(&[
            RatePoint::pair(0.7176, 0.2511).unwrap(),
            RatePoint::pair(0.2779, 0.7941).unwrap(),
        ])
        .unwrap();
        let csv = poly.to_corner_csv();
        assert!(csv.starts_with("r1,r2\n"));
        let back = RegionPolygon::from_corner_csv(&csv).unwrap();
        for (a, b) in poly.corners().iter().zip(back.corners()) {
            assert!((a.x() - b.x()).abs() < 1e-6);
            assert!((a.y() - b.y()).abs() < 1e-6);
        }
        assert!(RegionPolygon::from_corner_csv("r1,r2\n").is_err());
        assert!(RegionPolygon::from_corner_csv("r1,r2\n0.5\n").is_err());
    }

    #[test]
    fn svg_is_stable_and_well_formed() {
        let poly = convex_hull(&[RatePoint::pair(0.8, 0.6).unwrap()]).unwrap();
        let one = render_svg(&[("demo".to_string(), poly.clone())]);
        let two = render_svg(&[("demo".to_string(), poly)]);
        assert_eq!(one, two);
        assert!(one.starts_with("<svg"));
        assert!(one.trim_end().ends_with("</svg>"));
        assert!(one.contains("0.8000"));
    }

    #[test]
    fn weights_validation() {
        assert!(Weights::pair(0.0, 0.0).is_err());
        assert!(Weights::pair(-1.0, 1.0).is_err());
        assert!(Weights::pair(f64::NAN, 1.0).is_err());
        assert!(Weights::pair(0.0, 1.0).is_ok());
        assert!(RatePoint::pair(-0.1, 0.0).is_err());
    }
}
