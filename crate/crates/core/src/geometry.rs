//! Subdomain shapes, the separation transform and training-set sampling.
//!
//! Every subdomain carries a translation `offset`. A point `X` of subdomain `i`
//! is presented to the network at its matching point `X' = X + offset_i`;
//! [`map_back`] inverts this on the union of the translated shapes. Points that
//! fall between translated shapes belong to no subdomain and are rejected.

use std::f64::consts::TAU;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Slack for closure membership of points computed in floating point
/// (e.g. circle samples), well below any separation distance in use.
pub const CLOSURE_TOL: f64 = 1e-9;

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Axis-aligned rectangle. `closed[axis][0|1]` says whether the low/high side
/// belongs to the region, encoding half-open conventions such as `(0, 2/3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
    pub closed: [[bool; 2]; 2],
}

impl Rect {
    pub fn open(lo: Point, hi: Point) -> Self {
        Rect {
            lo,
            hi,
            closed: [[false; 2]; 2],
        }
    }

    pub fn with_closed(mut self, closed: [[bool; 2]; 2]) -> Self {
        self.closed = closed;
        self
    }

    fn owns(&self, p: Point) -> bool {
        (0..2).all(|k| {
            let above = if self.closed[k][0] {
                p[k] >= self.lo[k]
            } else {
                p[k] > self.lo[k]
            };
            let below = if self.closed[k][1] {
                p[k] <= self.hi[k]
            } else {
                p[k] < self.hi[k]
            };
            above && below
        })
    }

    fn contains_closed(&self, p: Point, tol: f64) -> bool {
        (0..2).all(|k| p[k] >= self.lo[k] - tol && p[k] <= self.hi[k] + tol)
    }

    fn interior(&self, p: Point) -> bool {
        (0..2).all(|k| p[k] > self.lo[k] && p[k] < self.hi[k])
    }

    fn distance_to(&self, p: Point) -> f64 {
        let dx = (self.lo[0] - p[0]).max(0.0).max(p[0] - self.hi[0]);
        let dy = (self.lo[1] - p[1]).max(0.0).max(p[1] - self.hi[1]);
        dx.hypot(dy)
    }

    fn translated(&self, o: Point) -> Rect {
        Rect {
            lo: add(self.lo, o),
            hi: add(self.hi, o),
            closed: self.closed,
        }
    }

    fn separated_from(&self, other: &Rect) -> bool {
        (0..2).any(|k| self.hi[k] < other.lo[k] || other.hi[k] < self.lo[k])
    }

    fn is_degenerate(&self) -> bool {
        !(self.hi[0] > self.lo[0] && self.hi[1] > self.lo[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    fn translated(&self, o: Point) -> Disk {
        Disk {
            center: add(self.center, o),
            radius: self.radius,
        }
    }
}

/// Shape of one material subdomain, in original coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Rect(Rect),
    /// Open disk `|X - c| < r`.
    Disk(Disk),
    /// Rectangle with a disk removed; the hole's circle belongs to this region.
    RectMinusDisk {
        rect: Rect,
        hole: Disk,
    },
}

impl Shape {
    /// Membership under the region's own half-open convention.
    pub fn owns(&self, p: Point) -> bool {
        match self {
            Shape::Rect(r) => r.owns(p),
            Shape::Disk(d) => norm(sub(p, d.center)) < d.radius,
            Shape::RectMinusDisk { rect, hole } => {
                rect.owns(p) && norm(sub(p, hole.center)) >= hole.radius
            }
        }
    }

    pub fn contains_closed(&self, p: Point, tol: f64) -> bool {
        match self {
            Shape::Rect(r) => r.contains_closed(p, tol),
            Shape::Disk(d) => norm(sub(p, d.center)) <= d.radius + tol,
            Shape::RectMinusDisk { rect, hole } => {
                rect.contains_closed(p, tol) && norm(sub(p, hole.center)) >= hole.radius - tol
            }
        }
    }

    fn interior(&self, p: Point) -> bool {
        match self {
            Shape::Rect(r) => r.interior(p),
            Shape::Disk(d) => norm(sub(p, d.center)) < d.radius,
            Shape::RectMinusDisk { rect, hole } => {
                rect.interior(p) && norm(sub(p, hole.center)) > hole.radius
            }
        }
    }

    pub fn bounding_box(&self) -> Rect {
        match self {
            Shape::Rect(r) => Rect::open(r.lo, r.hi),
            Shape::Disk(d) => Rect::open(
                [d.center[0] - d.radius, d.center[1] - d.radius],
                [d.center[0] + d.radius, d.center[1] + d.radius],
            ),
            Shape::RectMinusDisk { rect, .. } => Rect::open(rect.lo, rect.hi),
        }
    }

    pub fn translated(&self, o: Point) -> Shape {
        match self {
            Shape::Rect(r) => Shape::Rect(r.translated(o)),
            Shape::Disk(d) => Shape::Disk(d.translated(o)),
            Shape::RectMinusDisk { rect, hole } => Shape::RectMinusDisk {
                rect: rect.translated(o),
                hole: hole.translated(o),
            },
        }
    }

    fn is_degenerate(&self) -> bool {
        match self {
            Shape::Rect(r) => r.is_degenerate(),
            Shape::Disk(d) => !(d.radius > 0.0),
            Shape::RectMinusDisk { rect, hole } => {
                rect.is_degenerate() || !(hole.radius > 0.0) || rect_inside_disk(rect, hole)
            }
        }
    }
}

fn rect_inside_disk(rect: &Rect, disk: &Disk) -> bool {
    [
        rect.lo,
        rect.hi,
        [rect.lo[0], rect.hi[1]],
        [rect.hi[0], rect.lo[1]],
    ]
    .iter()
    .all(|&c| norm(sub(c, disk.center)) < disk.radius)
}

/// `true` when the closures of the two shapes are a positive distance apart.
pub fn shapes_disjoint(a: &Shape, b: &Shape) -> bool {
    use Shape::*;
    match (a, b) {
        (Rect(r), Rect(s)) => r.separated_from(s),
        (Rect(r), Disk(d)) | (Disk(d), Rect(r)) => r.distance_to(d.center) > d.radius,
        (Disk(d), Disk(e)) => norm(sub(d.center, e.center)) > d.radius + e.radius,
        (RectMinusDisk { rect, hole }, Disk(d)) | (Disk(d), RectMinusDisk { rect, hole }) => {
            rect.distance_to(d.center) > d.radius
                || norm(sub(d.center, hole.center)) + d.radius < hole.radius
        }
        (RectMinusDisk { rect, hole }, Rect(r)) | (Rect(r), RectMinusDisk { rect, hole }) => {
            rect.separated_from(r) || rect_inside_disk(r, hole)
        }
        (RectMinusDisk { rect: r, .. }, RectMinusDisk { rect: s, .. }) => r.separated_from(s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubdomainSpec {
    pub id: usize,
    pub shape: Shape,
    pub offset: Point,
}

impl SubdomainSpec {
    pub fn shifted_shape(&self) -> Shape {
        self.shape.translated(self.offset)
    }
}

/// Straight piece of `∂Ω` or of an interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    fn at(&self, t: f64) -> Point {
        [
            self.a[0] + t * (self.b[0] - self.a[0]),
            self.a[1] + t * (self.b[1] - self.a[1]),
        ]
    }

    fn distance_to(&self, p: Point) -> f64 {
        let ab = sub(self.b, self.a);
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if len2 > 0.0 {
            (((p[0] - self.a[0]) * ab[0] + (p[1] - self.a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        norm(sub(p, self.at(t)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Curve {
    /// Straight interface; `normal_minus` is the outward unit normal of the
    /// `side_minus` subdomain.
    Segment {
        segment: Segment,
        normal_minus: Point,
    },
    /// Circle enclosing the `side_minus` subdomain.
    Circle { center: Point, radius: f64 },
}

impl Curve {
    pub fn normal_minus(&self, x: Point) -> Point {
        match *self {
            Curve::Segment { normal_minus, .. } => normal_minus,
            Curve::Circle { center, .. } => {
                let r = sub(x, center);
                let n = norm(r);
                [r[0] / n, r[1] / n]
            }
        }
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        match *self {
            Curve::Segment { segment, .. } => segment.distance_to(p),
            Curve::Circle { center, radius } => (norm(sub(p, center)) - radius).abs(),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        match *self {
            Curve::Segment { segment, .. } => segment.at(rng.random::<f64>()),
            Curve::Circle { center, radius } => {
                let a = rng.random::<f64>() * TAU;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            }
        }
    }
}

/// Material interface between `side_minus` (Γ⁻) and `side_plus` (Γ⁺).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSpec {
    pub id: usize,
    pub curve: Curve,
    pub side_minus: usize,
    pub side_plus: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    /// Bounding rectangle of `Ω` in original coordinates.
    pub extent: Rect,
    /// Ordered by id, ids starting at 1.
    pub subdomains: Vec<SubdomainSpec>,
    pub interfaces: Vec<InterfaceSpec>,
    /// Pieces of `∂Ω`.
    pub boundary: Vec<Segment>,
}

impl Domain {
    pub fn subdomain(&self, id: usize) -> &SubdomainSpec {
        &self.subdomains[id - 1]
    }

    pub fn is_separated(&self) -> bool {
        self.subdomains.iter().any(|s| s.offset != [0.0, 0.0])
    }

    /// Same geometry with `offset_i = d · pattern_i`; fails if translated
    /// subdomains are not pairwise disjoint.
    pub fn separated(&self, pattern: &[Point], d: f64) -> Result<Domain> {
        if pattern.len() != self.subdomains.len() {
            return Err(Error::Config(format!(
                "separation pattern has {} entries for {} subdomains",
                pattern.len(),
                self.subdomains.len()
            )));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Config(format!(
                "separation distance must be positive, got {d}"
            )));
        }
        let mut out = self.clone();
        for (s, p) in out.subdomains.iter_mut().zip(pattern) {
            s.offset = [d * p[0], d * p[1]];
        }
        out.check_disjoint()?;
        Ok(out)
    }

    pub fn check_disjoint(&self) -> Result<()> {
        for (i, a) in self.subdomains.iter().enumerate() {
            for b in &self.subdomains[i + 1..] {
                if !shapes_disjoint(&a.shifted_shape(), &b.shifted_shape()) {
                    return Err(Error::Config(format!(
                        "shifted subdomains {} and {} overlap",
                        a.id, b.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Bounding box of the translated subdomains (the region the network sees).
    pub fn shifted_extent(&self) -> Rect {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for s in &self.subdomains {
            let b = s.shifted_shape().bounding_box();
            for k in 0..2 {
                lo[k] = lo[k].min(b.lo[k]);
                hi[k] = hi[k].max(b.hi[k]);
            }
        }
        Rect::open(lo, hi)
    }
}

pub fn shift(x: Point, sub_spec: &SubdomainSpec) -> Result<Point> {
    if !sub_spec.shape.contains_closed(x, CLOSURE_TOL) {
        return Err(Error::Usage(format!(
            "point ({}, {}) is not in subdomain {}",
            x[0], x[1], sub_spec.id
        )));
    }
    Ok(add(x, sub_spec.offset))
}

/// Subdomain owning `x` under the problem's half-open conventions; points of
/// `∂Ω` fall back to the first subdomain whose closure contains them.
pub fn locate(x: Point, domain: &Domain) -> Result<usize> {
    if let Some(s) = domain.subdomains.iter().find(|s| s.shape.owns(x)) {
        return Ok(s.id);
    }
    domain
        .subdomains
        .iter()
        .find(|s| s.shape.contains_closed(x, CLOSURE_TOL))
        .map(|s| s.id)
        .ok_or(Error::OutsideDomain { x: x[0], y: x[1] })
}

/// Original point of a matching point `x_shifted`.
pub fn map_back(x_shifted: Point, domain: &Domain) -> Result<Point> {
    map_back_with_id(x_shifted, domain).map(|(_, x)| x)
}

/// Like [`map_back`], also returning the id of the subdomain the point came from.
pub fn map_back_with_id(x_shifted: Point, domain: &Domain) -> Result<(usize, Point)> {
    let hits: Vec<&SubdomainSpec> = domain
        .subdomains
        .iter()
        .filter(|s| s.shifted_shape().contains_closed(x_shifted, CLOSURE_TOL))
        .collect();
    match hits.as_slice() {
        [] => Err(Error::InvalidRegion {
            x: x_shifted[0],
            y: x_shifted[1],
        }),
        [only] => Ok((only.id, sub(x_shifted, only.offset))),
        _ => {
            // Touching closures only occur where offsets coincide.
            let id = locate(x_shifted, domain)?;
            Ok((id, sub(x_shifted, domain.subdomain(id).offset)))
        }
    }
}

/// Matching point of `x` under the subdomain that owns it.
pub fn to_shifted(x: Point, domain: &Domain) -> Result<(usize, Point)> {
    let id = locate(x, domain)?;
    Ok((id, add(x, domain.subdomain(id).offset)))
}

pub fn sample_interior<R: Rng>(
    sub_spec: &SubdomainSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Point>> {
    sample_interior_excluding(sub_spec, n, rng, |_| false)
}

/// Uniform points in the open subdomain by rejection from its bounding box,
/// additionally rejecting points for which `reject` holds.
pub fn sample_interior_excluding<R: Rng>(
    sub_spec: &SubdomainSpec,
    n: usize,
    rng: &mut R,
    reject: impl Fn(Point) -> bool,
) -> Result<Vec<Point>> {
    if sub_spec.shape.is_degenerate() {
        return Err(Error::Config(format!(
            "subdomain {} has a degenerate shape",
            sub_spec.id
        )));
    }
    let bb = sub_spec.shape.bounding_box();
    let mut out = Vec::with_capacity(n);
    let mut attempts: u64 = 0;
    let limit = 1000 * (n as u64 + 100);
    while out.len() < n {
        attempts += 1;
        if attempts > limit {
            return Err(Error::Config(format!(
                "rejection sampling in subdomain {} accepts almost no points",
                sub_spec.id
            )));
        }
        let p = [
            bb.lo[0] + rng.random::<f64>() * (bb.hi[0] - bb.lo[0]),
            bb.lo[1] + rng.random::<f64>() * (bb.hi[1] - bb.lo[1]),
        ];
        if sub_spec.shape.interior(p) && !reject(p) {
            out.push(p);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub x: Point,
    pub shifted: Point,
    pub label: f64,
    pub subdomain: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub x: Point,
    pub shifted: Point,
    pub subdomain: usize,
}

/// One interface point `x` with its two matching points and outward normals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceRecord {
    pub x: Point,
    pub minus: Point,
    pub plus: Point,
    pub normal_minus: Point,
    pub normal_plus: Point,
    pub interface: usize,
}

/// `n` uniform points on every piece of `∂Ω`, labelled with `label(X)`.
pub fn sample_boundary<R: Rng>(
    domain: &Domain,
    n_per_piece: usize,
    rng: &mut R,
    label: impl Fn(Point) -> f64,
) -> Result<Vec<BoundaryRecord>> {
    let mut out = Vec::with_capacity(n_per_piece * domain.boundary.len());
    for piece in &domain.boundary {
        for _ in 0..n_per_piece {
            let x = piece.at(rng.random::<f64>());
            let (id, shifted) = to_shifted(x, domain)?;
            out.push(BoundaryRecord {
                x,
                shifted,
                label: label(x),
                subdomain: id,
            });
        }
    }
    Ok(out)
}

pub fn sample_interface<R: Rng>(
    iface: &InterfaceSpec,
    n: usize,
    rng: &mut R,
    domain: &Domain,
) -> Vec<InterfaceRecord> {
    let o_minus = domain.subdomain(iface.side_minus).offset;
    let o_plus = domain.subdomain(iface.side_plus).offset;
    (0..n)
        .map(|_| {
            let x = iface.curve.sample(rng);
            let n1 = iface.curve.normal_minus(x);
            InterfaceRecord {
                x,
                minus: add(x, o_minus),
                plus: add(x, o_plus),
                normal_minus: n1,
                normal_plus: [-n1[0], -n1[1]],
                interface: iface.id,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    /// Original domain, no interface records.
    Standard,
    /// Translated subdomains with matched interface pairs.
    Separated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    /// Residual points per subdomain.
    pub n_f: usize,
    /// Supervised points per boundary piece.
    pub n_b: usize,
    /// Matched pairs per interface.
    pub n_gamma: usize,
}

impl SampleCounts {
    pub fn validate(&self) -> Result<()> {
        if self.n_f == 0 || self.n_b == 0 || self.n_gamma == 0 {
            return Err(Error::Config(format!(
                "sample counts must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Distance from interface curves inside which standard-method residual points are redrawn.
pub const INTERFACE_EXCLUSION_BAND: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub kind: SetKind,
    pub tau_b: Vec<BoundaryRecord>,
    pub tau_r: Vec<ResidualRecord>,
    pub tau_gamma: Vec<InterfaceRecord>,
}

impl TrainingSet {
    /// Samples boundary, residual and (for separated domains) interface
    /// records, in that order, from one RNG stream.
    pub fn sample<R: Rng>(
        domain: &Domain,
        kind: SetKind,
        counts: &SampleCounts,
        rng: &mut R,
        label: impl Fn(Point) -> f64,
    ) -> Result<Self> {
        counts.validate()?;
        match kind {
            SetKind::Standard if domain.is_separated() => {
                return Err(Error::Usage(
                    "standard training sets are built on the unseparated domain".into(),
                ))
            }
            SetKind::Separated if !domain.is_separated() => {
                return Err(Error::Usage(
                    "separated training sets need translated subdomains".into(),
                ))
            }
            _ => {}
        }
        let tau_b = sample_boundary(domain, counts.n_b, rng, label)?;
        let mut tau_r = Vec::with_capacity(counts.n_f * domain.subdomains.len());
        for s in &domain.subdomains {
            let pts = match kind {
                SetKind::Standard => sample_interior_excluding(s, counts.n_f, rng, |p| {
                    domain
                        .interfaces
                        .iter()
                        .any(|i| i.curve.distance_to(p) < INTERFACE_EXCLUSION_BAND)
                })?,
                SetKind::Separated => sample_interior(s, counts.n_f, rng)?,
            };
            tau_r.extend(pts.into_iter().map(|x| ResidualRecord {
                x,
                shifted: add(x, s.offset),
                subdomain: s.id,
            }));
        }
        let mut tau_gamma = Vec::new();
        if kind == SetKind::Separated {
            for iface in &domain.interfaces {
                tau_gamma.extend(sample_interface(iface, counts.n_gamma, rng, domain));
            }
        }
        Ok(TrainingSet {
            kind,
            tau_b,
            tau_r,
            tau_gamma,
        })
    }

    /// One CSV row per record with columns
    /// `set,tag,x,y,x1,y1,x2,y2,n1x,n1y,n2x,n2y,label`.
    ///
    /// `set` is `b`, `r` or `gamma`; `tag` is the subdomain id (b, r) or the
    /// interface id (gamma). For b/r rows `(x1, y1)` is the matching point and
    /// the interface-only columns are empty.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = [
            "set", "tag", "x", "y", "x1", "y1", "x2", "y2", "n1x", "n1y", "n2x", "n2y", "label",
        ];
        w.write_record(header).map_err(|e| csv_error(path, e))?;
        let f = |v: f64| v.to_string();
        for r in &self.tau_b {
            w.write_record([
                "b".into(),
                r.subdomain.to_string(),
                f(r.x[0]),
                f(r.x[1]),
                f(r.shifted[0]),
                f(r.shifted[1]),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                f(r.label),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        for r in &self.tau_r {
            w.write_record([
                "r".into(),
                r.subdomain.to_string(),
                f(r.x[0]),
                f(r.x[1]),
                f(r.shifted[0]),
                f(r.shifted[1]),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        for r in &self.tau_gamma {
            w.write_record([
                "gamma".into(),
                r.interface.to_string(),
                f(r.x[0]),
                f(r.x[1]),
                f(r.minus[0]),
                f(r.minus[1]),
                f(r.plus[0]),
                f(r.plus[1]),
                f(r.normal_minus[0]),
                f(r.normal_minus[1]),
                f(r.normal_plus[0]),
                f(r.normal_plus[1]),
                String::new(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_strips(d: f64) -> Domain {
        let left =
            Rect::open([0.0, 0.0], [2.0 / 3.0, 1.0]).with_closed([[false, true], [false, false]]);
        let right = Rect::open([2.0 / 3.0, 0.0], [1.0, 1.0]);
        let base = Domain {
            extent: Rect::open([0.0, 0.0], [1.0, 1.0]),
            subdomains: vec![
                SubdomainSpec {
                    id: 1,
                    shape: Shape::Rect(left),
                    offset: [0.0, 0.0],
                },
                SubdomainSpec {
                    id: 2,
                    shape: Shape::Rect(right),
                    offset: [0.0, 0.0],
                },
            ],
            interfaces: vec![InterfaceSpec {
                id: 1,
                curve: Curve::Segment {
                    segment: Segment {
                        a: [2.0 / 3.0, 0.0],
                        b: [2.0 / 3.0, 1.0],
                    },
                    normal_minus: [1.0, 0.0],
                },
                side_minus: 1,
                side_plus: 2,
            }],
            boundary: vec![
                Segment {
                    a: [0.0, 0.0],
                    b: [1.0, 0.0],
                },
                Segment {
                    a: [1.0, 0.0],
                    b: [1.0, 1.0],
                },
                Segment {
                    a: [1.0, 1.0],
                    b: [0.0, 1.0],
                },
                Segment {
                    a: [0.0, 1.0],
                    b: [0.0, 0.0],
                },
            ],
        };
        if d > 0.0 {
            base.separated(&[[0.0, 0.0], [1.0, 0.0]], d).unwrap()
        } else {
            base
        }
    }

    #[test]
    fn shift_and_map_back() {
        let dom = two_strips(0.1);
        let right = dom.subdomain(2);
        let s = shift([0.7, 0.5], right).unwrap();
        assert!((s[0] - 0.8).abs() < 1e-15 && s[1] == 0.5);
        let back = map_back(s, &dom).unwrap();
        assert!((back[0] - 0.7).abs() < 1e-15);
        assert_eq!(shift([0.3, 0.5], dom.subdomain(1)).unwrap(), [0.3, 0.5]);
        assert_eq!(map_back([0.3, 0.5], &dom).unwrap(), [0.3, 0.5]);
        assert!(matches!(shift([0.3, 0.5], right), Err(Error::Usage(_))));
    }

    #[test]
    fn gap_points_are_invalid() {
        let dom = two_strips(0.1);
        assert!(matches!(
            map_back([2.0 / 3.0 + 0.05, 0.5], &dom),
            Err(Error::InvalidRegion { .. })
        ));
    }

    #[test]
    fn locate_follows_half_open_convention() {
        let dom = two_strips(0.0);
        assert_eq!(locate([0.5, 0.5], &dom).unwrap(), 1);
        assert_eq!(locate([2.0 / 3.0, 0.5], &dom).unwrap(), 1);
        assert_eq!(locate([0.9, 0.5], &dom).unwrap(), 2);
        assert_eq!(locate([0.0, 0.5], &dom).unwrap(), 1);
        assert_eq!(locate([1.0, 0.0], &dom).unwrap(), 2);
        assert!(matches!(
            locate([1.5, 0.5], &dom),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn overlapping_separation_rejected() {
        let dom = two_strips(0.0);
        assert!(dom.separated(&[[0.0, 0.0], [1.0, 0.0]], -0.1).is_err());
        assert!(dom.separated(&[[0.0, 0.0], [-1.0, 0.0]], 0.1).is_err());
    }

    #[test]
    fn interface_record_geometry() {
        let dom = two_strips(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let recs = sample_interface(&dom.interfaces[0], 50, &mut rng, &dom);
        for r in recs {
            assert_eq!(r.x[0], 2.0 / 3.0);
            assert_eq!(r.minus, r.x);
            assert_eq!(r.plus[1], r.x[1]);
            assert!((r.plus[0] - (2.0 / 3.0 + 0.1)).abs() < 1e-15);
            assert_eq!(r.normal_minus, [1.0, 0.0]);
            assert_eq!(r.normal_plus, [-1.0, 0.0]);
        }
    }

    #[test]
    fn circle_normals_point_out_of_the_disk() {
        let curve = Curve::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        let a = 0.7_f64;
        let n = curve.normal_minus([a.cos(), a.sin()]);
        assert!((n[0] - a.cos()).abs() < 1e-15 && (n[1] - a.sin()).abs() < 1e-15);
    }

    #[test]
    fn disk_sampling_area_ratio() {
        let s = SubdomainSpec {
            id: 1,
            shape: Shape::Disk(Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            }),
            offset: [0.0, 0.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = sample_interior(&s, 100_000, &mut rng).unwrap();
        let inner = pts.iter().filter(|p| norm(**p) < 0.5).count() as f64 / 1e5;
        assert!((inner - 0.25).abs() < 0.02, "{inner}");
        assert!(pts.iter().all(|p| norm(*p) < 1.0));
    }

    #[test]
    fn degenerate_shape_is_config_error() {
        let s = SubdomainSpec {
            id: 1,
            shape: Shape::Disk(Disk {
                center: [0.0, 0.0],
                radius: 0.0,
            }),
            offset: [0.0, 0.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_interior(&s, 3, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn standard_set_avoids_interface_band() {
        let dom = two_strips(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let counts = SampleCounts {
            n_f: 500,
            n_b: 10,
            n_gamma: 10,
        };
        let set = TrainingSet::sample(&dom, SetKind::Standard, &counts, &mut rng, |_| 0.0).unwrap();
        assert!(set.tau_gamma.is_empty());
        assert!(set
            .tau_r
            .iter()
            .all(|r| (r.x[0] - 2.0 / 3.0).abs() >= INTERFACE_EXCLUSION_BAND));
        assert!(TrainingSet::sample(&dom, SetKind::Separated, &counts, &mut rng, |_| 0.0).is_err());
    }
}
