//! Piecewise causal polylines, their null and Lorentzian lengths, validation and
//! a closed-form connecting zigzag.
//!
//! Segments are polylines. On built-in families a chord is the straight segment in
//! the conformal chart `(u, x)`, so null chords are exactly null; on a torus the
//! chord follows the nearest image of its endpoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, CausalClass, CausalKind, Direction, Point, Spacetime};
use crate::timefns::TimeFunctionHandle;

/// Conformal-time margin that pushes a connecting apex into the open future cones.
pub const CONNECT_MARGIN: f64 = 1e-3;

/// Subintervals per chord for trapezoidal integrals on custom metrics.
const CUSTOM_CHORD_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSegment")]
pub struct CausalSegment {
    direction: Direction,
    samples: Vec<Point>,
}

#[derive(Deserialize)]
struct RawSegment {
    direction: Direction,
    samples: Vec<Point>,
}

impl TryFrom<RawSegment> for CausalSegment {
    type Error = Error;

    fn try_from(raw: RawSegment) -> Result<Self> {
        Self::new(raw.direction, raw.samples)
    }
}

impl CausalSegment {
    pub fn new(direction: Direction, samples: Vec<Point>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Validation(format!(
                "a segment needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        let d = samples[0].dim();
        if d == 0 || samples.iter().any(|s| s.dim() != d) {
            return Err(Error::Validation("segment samples have inconsistent dimensions".into()));
        }
        Ok(Self { direction, samples })
    }

    /// Chord from `a` to `b` subdivided into `samples - 1` equal pieces of the chart line.
    pub fn straight(st: &Spacetime, direction: Direction, a: &Point, b: &Point, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::Argument("a segment needs at least 2 samples".into()));
        }
        let mut pts = Vec::with_capacity(samples);
        pts.push(a.clone());
        for i in 1..samples - 1 {
            pts.push(st.chord_point(a, b, i as f64 / (samples - 1) as f64));
        }
        pts.push(b.clone());
        Self::new(direction, pts)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    pub fn start(&self) -> &Point {
        &self.samples[0]
    }

    pub fn end(&self) -> &Point {
        self.samples.last().expect("segment has samples")
    }

    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self {
            direction: self.direction.flip(),
            samples,
        }
    }
}

/// Consecutive segments share their endpoint exactly.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<CausalSegment>", into = "Vec<CausalSegment>")]
pub struct PiecewiseCausalCurve {
    segments: Vec<CausalSegment>,
}

impl TryFrom<Vec<CausalSegment>> for PiecewiseCausalCurve {
    type Error = Error;

    fn try_from(segments: Vec<CausalSegment>) -> Result<Self> {
        Self::new(segments)
    }
}

impl From<PiecewiseCausalCurve> for Vec<CausalSegment> {
    fn from(c: PiecewiseCausalCurve) -> Self {
        c.segments
    }
}

impl PiecewiseCausalCurve {
    /// An empty list is accepted here; [`validate`] reports it as degenerate.
    pub fn new(segments: Vec<CausalSegment>) -> Result<Self> {
        for (i, w) in segments.windows(2).enumerate() {
            if w[0].end() != w[1].start() {
                return Err(Error::Validation(format!(
                    "segments {i} and {} do not share an endpoint",
                    i + 1
                )));
            }
        }
        if let Some(first) = segments.first() {
            let d = first.start().dim();
            if segments.iter().any(|s| s.start().dim() != d) {
                return Err(Error::Validation("segments have inconsistent dimensions".into()));
            }
        }
        Ok(Self { segments })
    }

    /// The constant curve at `p`, as one degenerate segment.
    pub fn point(p: &Point) -> Self {
        Self {
            segments: vec![CausalSegment {
                direction: Direction::Future,
                samples: vec![p.clone(), p.clone()],
            }],
        }
    }

    /// Polyline through `vertices`, each chord its own two-sample segment.
    pub fn from_vertices(vertices: &[(Point, Direction)], last: &Point) -> Result<Self> {
        let mut segments = Vec::with_capacity(vertices.len());
        for (i, (v, dir)) in vertices.iter().enumerate() {
            let next = vertices.get(i + 1).map(|(p, _)| p).unwrap_or(last);
            segments.push(CausalSegment::new(*dir, vec![v.clone(), next.clone()])?);
        }
        Self::new(segments)
    }

    pub fn segments(&self) -> &[CausalSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn start(&self) -> Option<&Point> {
        self.segments.first().map(|s| s.start())
    }

    pub fn end(&self) -> Option<&Point> {
        self.segments.last().map(|s| s.end())
    }

    /// Segment endpoints `β(s_0), …, β(s_N)`.
    pub fn breakpoints(&self) -> Vec<&Point> {
        let mut out: Vec<&Point> = self.segments.iter().map(|s| s.start()).collect();
        if let Some(e) = self.end() {
            out.push(e);
        }
        out
    }

    /// Every sample of every segment, shared endpoints listed once.
    pub fn all_samples(&self) -> Vec<&Point> {
        let mut out = Vec::new();
        for (i, s) in self.segments.iter().enumerate() {
            let skip = usize::from(i > 0);
            out.extend(s.samples.iter().skip(skip));
        }
        out
    }

    /// Same point set traversed backwards, directions flipped.
    pub fn reversed(&self) -> Self {
        Self {
            segments: self.segments.iter().rev().map(|s| s.reversed()).collect(),
        }
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        Self::new(segments)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("curve serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Validation(format!("curve JSON: {e}")))
    }
}

/// `L̂_τ(β) = Σ |τ(β(s_i)) − τ(β(s_{i−1}))|` over segment boundaries.
pub fn null_length(tau: &TimeFunctionHandle, curve: &PiecewiseCausalCurve) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::Validation("degenerate curve".into()));
    }
    Ok(curve
        .segments
        .iter()
        .map(|s| (tau.eval(s.end()) - tau.eval(s.start())).abs())
        .sum())
}

/// `max τ − min τ` over all samples of the curve.
pub fn tau_oscillation(tau: &TimeFunctionHandle, curve: &PiecewiseCausalCurve) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::Validation("degenerate curve".into()));
    }
    let (lo, hi) = curve
        .all_samples()
        .into_iter()
        .map(|p| tau.eval(p))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(hi - lo)
}

/// Causal class of a chord with the relaxed check for null chords.
fn chord_class_relaxed(st: &Spacetime, a: &Point, b: &Point, tol: f64) -> CausalClass {
    let class = st.chord_class(a, b, tol);
    if class.kind == CausalKind::Spacelike {
        let relaxed = st.chord_class(a, b, 10.0 * tol);
        if relaxed.kind == CausalKind::Null {
            return relaxed;
        }
    }
    class
}

/// Lorentzian length `∫ √(−g(γ', γ')) ds` of a causal segment.
///
/// On built-in families each chord is integrated exactly in the conformal chart,
/// where the integrand is `f(t(u)) √(Δu² − |Δx|²)`. Custom metrics use a composite
/// trapezoidal rule along each coordinate chord.
pub fn lorentzian_length(st: &Spacetime, seg: &CausalSegment) -> Result<f64> {
    let mut total = 0.0;
    for (i, w) in seg.samples.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        st.check_point(a)?;
        st.check_point(b)?;
        let class = chord_class_relaxed(st, a, b, crate::geometry::DEFAULT_CAUSAL_TOL);
        match class.kind {
            CausalKind::Spacelike => return Err(Error::Validation(format!("chord {i} has a spacelike tangent"))),
            CausalKind::Null | CausalKind::Zero => continue,
            CausalKind::Timelike => {}
        }
        let delta = st.chord_displacement(a, b);
        if st.has_conformal_chart() {
            let du = delta[0];
            let dx = norm(&delta[1..]);
            let interval = (du * du - dx * dx).max(0.0).sqrt();
            // ∫ f(t(u)) dλ along the chord equals Δt / Δu.
            let mean_f = match st.scale_factor() {
                Some(_) => (b.time() - a.time()) / du,
                None => 1.0,
            };
            total += mean_f.abs() * interval;
        } else {
            let h = 1.0 / CUSTOM_CHORD_NODES as f64;
            let speed = |lambda: f64| {
                let p = st.chord_point(a, b, lambda);
                (-st.inner_at(&p, &delta, &delta)).max(0.0).sqrt()
            };
            let mut sum = 0.5 * (speed(0.0) + speed(1.0));
            for k in 1..CUSTOM_CHORD_NODES {
                sum += speed(k as f64 * h);
            }
            total += sum * h;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClassHistogram {
    pub timelike_future: usize,
    pub timelike_past: usize,
    pub null_future: usize,
    pub null_past: usize,
    pub spacelike: usize,
    pub zero: usize,
}

impl ClassHistogram {
    fn record(&mut self, c: CausalClass) {
        match (c.kind, c.direction) {
            (CausalKind::Timelike, Some(Direction::Future)) => self.timelike_future += 1,
            (CausalKind::Timelike, _) => self.timelike_past += 1,
            (CausalKind::Null, Some(Direction::Future)) => self.null_future += 1,
            (CausalKind::Null, _) => self.null_past += 1,
            (CausalKind::Spacelike, _) => self.spacelike += 1,
            (CausalKind::Zero, _) => self.zero += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Offense {
    pub segment: usize,
    pub chord: usize,
    pub class: CausalClass,
    pub declared: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub histograms: Vec<ClassHistogram>,
    pub offense: Option<Offense>,
    pub message: String,
}

/// Classify every chord and compare with the declared directions.
///
/// Chords that are spacelike at `tol` but null at `10·tol` count as null. Zero
/// chords (repeated samples) are allowed.
pub fn validate(st: &Spacetime, curve: &PiecewiseCausalCurve, tol: f64) -> ValidationReport {
    if curve.is_empty() {
        return ValidationReport {
            pass: false,
            histograms: Vec::new(),
            offense: None,
            message: "degenerate curve".into(),
        };
    }
    let mut histograms = Vec::with_capacity(curve.len());
    let mut offense = None;
    let mut message = String::from("ok");
    for (si, seg) in curve.segments.iter().enumerate() {
        let mut hist = ClassHistogram::default();
        for (ci, w) in seg.samples.windows(2).enumerate() {
            if offense.is_none() {
                if let Err(e) = st.check_point(&w[0]).and_then(|_| st.check_point(&w[1])) {
                    message = format!("segment {si}, chord {ci}: {e}");
                    offense = Some(Offense {
                        segment: si,
                        chord: ci,
                        class: CausalClass::SPACELIKE,
                        declared: seg.direction,
                    });
                    continue;
                }
            }
            let class = chord_class_relaxed(st, &w[0], &w[1], tol);
            hist.record(class);
            let ok = class.kind == CausalKind::Zero || class.is_directed(seg.direction);
            if !ok && offense.is_none() {
                message = format!(
                    "segment {si}, chord {ci}: {class} chord in a {:?} segment",
                    seg.direction
                );
                offense = Some(Offense {
                    segment: si,
                    chord: ci,
                    class,
                    declared: seg.direction,
                });
            }
        }
        histograms.push(hist);
    }
    ValidationReport {
        pass: offense.is_none(),
        histograms,
        offense,
        message,
    }
}

/// Two null-bounded segments `p → r → q` through an apex `r` in `I⁺(p) ∩ I⁺(q)`.
///
/// The apex sits on the conformal line between the spatial positions, `CONNECT_MARGIN`
/// above the intersection of the future null cones. When that leaves the chart
/// domain the mirror construction through `I⁻(p) ∩ I⁻(q)` is used.
pub fn connect(st: &Spacetime, p: &Point, q: &Point) -> Result<PiecewiseCausalCurve> {
    connect_with_samples(st, p, q, 2)
}

pub fn connect_with_samples(st: &Spacetime, p: &Point, q: &Point, samples: usize) -> Result<PiecewiseCausalCurve> {
    if !st.has_conformal_chart() {
        return Err(Error::Unsupported("connect needs a built-in spacetime family".into()));
    }
    st.check_point(p)?;
    st.check_point(q)?;
    if st.same_point(p, q) {
        return Ok(PiecewiseCausalCurve::point(p));
    }
    let (lo, hi) = st.conformal_range();
    for dir in [Direction::Future, Direction::Past] {
        if let Some(r) = connecting_apex(st, p, q, dir, CONNECT_MARGIN) {
            let u = st.to_conformal(&r)[0];
            if u > lo && u < hi && st.contains(&r) {
                return PiecewiseCausalCurve::new(vec![
                    CausalSegment::straight(st, dir, p, &r, samples)?,
                    CausalSegment::straight(st, dir.flip(), &r, q, samples)?,
                ]);
            }
        }
    }
    Err(Error::Numerical(
        "no connecting apex fits inside the conformal range".into(),
    ))
}

/// Apex in `I^±(p) ∩ I^±(q)` for `dir` = Future / Past.
pub(crate) fn connecting_apex(st: &Spacetime, p: &Point, q: &Point, dir: Direction, margin: f64) -> Option<Point> {
    let cp = st.to_conformal(p);
    let delta = st.chord_displacement(p, q);
    let d = norm(&delta[1..]);
    let sign = match dir {
        Direction::Future => 1.0,
        Direction::Past => -1.0,
    };
    let (up, uq) = (cp[0], cp[0] + delta[0]);
    let mut c = cp.clone();
    if d <= delta[0].abs() {
        // Causally related: step beyond the later (earlier) endpoint.
        let (u_ext, frac) = if sign * (uq - up) >= 0.0 { (uq, 1.0) } else { (up, 0.0) };
        c[0] = u_ext + sign * margin;
        for i in 1..c.len() {
            c[i] = cp[i] + frac * delta[i];
        }
    } else {
        let u0 = 0.5 * (up + uq + sign * d);
        let frac = sign * (u0 - up) / d;
        c[0] = u0 + sign * margin;
        for i in 1..c.len() {
            c[i] = cp[i] + frac * delta[i];
        }
    }
    let r = st.from_conformal(&c);
    r.coords.iter().all(|x| x.is_finite()).then_some(r)
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// `∫ |(τ∘β)'| ds` by 5-point Gauss–Legendre on `nodes` subintervals per chord.
pub fn null_length_integral(
    st: &Spacetime,
    tau: &TimeFunctionHandle,
    curve: &PiecewiseCausalCurve,
    nodes: usize,
) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::Validation("degenerate curve".into()));
    }
    let nodes = nodes.max(1);
    let h = 1.0 / nodes as f64;
    let mut total = 0.0;
    for seg in &curve.segments {
        for w in seg.samples.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let delta = st.chord_displacement(a, b);
            let rate = |lambda: f64| {
                let x = st.chord_point(a, b, lambda);
                let jac = st.conformal_jacobian(&x);
                let dtau = tau.differential(&x);
                let v: f64 = if st.has_conformal_chart() {
                    dtau.iter().zip(&jac).zip(&delta).map(|((g, j), d)| g * j * d).sum()
                } else {
                    dtau.iter().zip(&delta).map(|(g, d)| g * d).sum()
                };
                v.abs()
            };
            for k in 0..nodes {
                let mid = (k as f64 + 0.5) * h;
                for (x, w) in GAUSS5 {
                    total += 0.5 * h * w * rate(mid + 0.5 * h * x);
                }
            }
        }
    }
    Ok(total)
}
