//! Null distance estimates: closed forms on Minkowski space, zigzag upper bounds
//! elsewhere, and the `|Δτ|` lower bound.
//!
//! A zigzag is parametrized by free *anchors* `p = w_0, w_1, …, w_k = q` in the
//! conformal chart. Consecutive anchors are joined either by one causal chord (when
//! causally related) or by two null chords through the tip of their common future
//! or past cone, whichever is shorter. Every parameter value thus gives a valid
//! piecewise null curve, and pattern search over the anchors never leaves the
//! admissible set.

use std::cmp::Ordering;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{null_length, validate, CausalSegment, PiecewiseCausalCurve};
use crate::error::{Error, Result};
use crate::geometry::{norm, Direction, Family, Point, Spacetime, Spatial, DEFAULT_CAUSAL_TOL};
use crate::sampling;
use crate::timefns::{TimeFunctionHandle, TimeFunctionKind};

/// Absolute slack for optimizer-dependent assertions.
pub const ABS_TOL: f64 = 1e-6;
/// Relative slack for optimizer-dependent assertions.
pub const REL_TOL: f64 = 1e-3;
/// Relative scale below which anchor gaps are snapped before building a witness.
const SNAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Exact,
    ZigzagOpt,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullDistanceEstimate {
    pub upper: f64,
    pub lower: f64,
    pub witness: PiecewiseCausalCurve,
    pub method: Method,
    pub iterations: usize,
}

/// Free anchors of a zigzag in conformal coordinates, endpoints excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZigzagSpec {
    pub anchors: Vec<Vec<f64>>,
}

impl ZigzagSpec {
    /// Number of anchor gaps, each carrying at most one apex.
    pub fn apex_count(&self) -> usize {
        self.anchors.len() + 1
    }
}

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    /// Maximum number of apexes `N ≥ 1`.
    pub apexes: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    /// A known curve from `p` to `q`; its null length caps the result.
    pub warm_start: Option<PiecewiseCausalCurve>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            apexes: 2,
            restarts: 8,
            seed: 0,
            max_sweeps: 200,
            warm_start: None,
        }
    }
}

fn unsupported_family() -> Error {
    Error::Unsupported("null distance estimates need a built-in spacetime family".into())
}

/// `max(|Δt|, ‖Δx‖)` on Minkowski space with `τ = t`, with a witness.
pub fn minkowski_exact(st: &Spacetime, tau: &TimeFunctionHandle, p: &Point, q: &Point) -> Result<NullDistanceEstimate> {
    if !matches!(st.family(), Family::Minkowski { .. }) {
        return Err(Error::Unsupported("minkowski_exact needs Minkowski space".into()));
    }
    if *tau.kind() != TimeFunctionKind::CoordinateT {
        return Err(Error::Unsupported("minkowski_exact needs the time function t".into()));
    }
    st.check_point(p)?;
    st.check_point(q)?;
    let dt = q.time() - p.time();
    let dx = norm(
        &p.spatial()
            .iter()
            .zip(q.spatial())
            .map(|(a, b)| b - a)
            .collect::<Vec<_>>(),
    );
    let witness = if p == q {
        PiecewiseCausalCurve::point(p)
    } else if dt.abs() >= dx {
        let dir = if dt >= 0.0 { Direction::Future } else { Direction::Past };
        PiecewiseCausalCurve::new(vec![CausalSegment::new(dir, vec![p.clone(), q.clone()])?])?
    } else {
        let ta = 0.5 * (p.time() + q.time() + dx);
        let frac = (ta - p.time()) / dx;
        let mut apex = p.coords.clone();
        apex[0] = ta;
        for i in 1..apex.len() {
            apex[i] = p.coords[i] + frac * (q.coords[i] - p.coords[i]);
        }
        let r = Point::new(apex);
        PiecewiseCausalCurve::new(vec![
            CausalSegment::new(Direction::Future, vec![p.clone(), r.clone()])?,
            CausalSegment::new(Direction::Past, vec![r, q.clone()])?,
        ])?
    };
    Ok(NullDistanceEstimate {
        upper: dt.abs().max(dx),
        lower: dt.abs(),
        witness,
        method: Method::Exact,
        iterations: 0,
    })
}

#[derive(Debug, Clone)]
enum Leg {
    Empty,
    Direct(Direction),
    Apex(Direction, Vec<f64>),
}

/// Evaluates anchor chains in conformal coordinates.
struct Chain<'a> {
    st: &'a Spacetime,
    tau: &'a TimeFunctionHandle,
    spatial: Spatial,
    range: (f64, f64),
}

impl<'a> Chain<'a> {
    fn new(st: &'a Spacetime, tau: &'a TimeFunctionHandle) -> Result<Self> {
        let spatial = st.spatial().ok_or_else(unsupported_family)?;
        Ok(Self {
            st,
            tau,
            spatial,
            range: st.conformal_range(),
        })
    }

    fn in_range(&self, u: f64) -> bool {
        u > self.range.0 && u < self.range.1 && u.is_finite()
    }

    fn tau_at(&self, c: &[f64]) -> f64 {
        self.tau.eval(&self.st.from_conformal(c))
    }

    fn disp(&self, a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
        (b[0] - a[0], self.spatial.displacement(&a[1..], &b[1..]))
    }

    fn apex(&self, a: &[f64], b: &[f64], dir: Direction) -> Option<Vec<f64>> {
        let (du, dx) = self.disp(a, b);
        let d = norm(&dx);
        let sign = if dir == Direction::Future { 1.0 } else { -1.0 };
        let u = a[0] + 0.5 * (du + sign * d);
        if !self.in_range(u) {
            return None;
        }
        let frac = sign * (u - a[0]) / d;
        let mut c = Vec::with_capacity(a.len());
        c.push(u);
        c.extend(a[1..].iter().zip(&dx).map(|(x, v)| x + frac * v));
        Some(c)
    }

    /// Cheapest leg from `a` to `b` given `τ` at both ends.
    fn leg(&self, a: &[f64], b: &[f64], ta: f64, tb: f64) -> (f64, Leg) {
        let (du, dx) = self.disp(a, b);
        let d = norm(&dx);
        if d == 0.0 && du == 0.0 {
            return (0.0, Leg::Empty);
        }
        if d * d - du * du < DEFAULT_CAUSAL_TOL * (d * d + du * du) {
            let dir = if du > 0.0 { Direction::Future } else { Direction::Past };
            return ((tb - ta).abs(), Leg::Direct(dir));
        }
        let mut best = (f64::INFINITY, Leg::Empty);
        for dir in [Direction::Past, Direction::Future] {
            if let Some(r) = self.apex(a, b, dir) {
                let tr = self.tau_at(&r);
                let cost = (tr - ta).abs() + (tb - tr).abs();
                if cost < best.0 {
                    best = (cost, Leg::Apex(dir, r));
                }
            }
        }
        best
    }

    /// Snap free anchors so no leg produces a chord too short to classify reliably
    /// after rounding to chart coordinates: nearly coincident anchors are merged
    /// and nearly null-related anchors are moved onto the null cone.
    fn repair(&self, nodes: &mut [Vec<f64>]) {
        let n = nodes.len();
        for _ in 0..4 {
            let mut changed = false;
            for i in 0..n - 1 {
                let (a, b) = (&nodes[i], &nodes[i + 1]);
                let (du, dx) = self.disp(a, b);
                let d = norm(&dx);
                let size = 1.0 + a[0].abs() + b[0].abs() + a[1..].iter().map(|x| x.abs()).sum::<f64>();
                let eta = SNAP * size;
                let free_b = i + 1 < n - 1;
                let free_a = i > 0;
                if (du * du + d * d).sqrt() < eta && (du != 0.0 || d != 0.0) {
                    if free_b {
                        nodes[i + 1] = nodes[i].clone();
                        changed = true;
                    } else if free_a {
                        nodes[i] = nodes[i + 1].clone();
                        changed = true;
                    }
                } else if d > du.abs() && d - du.abs() < eta {
                    let sign = if du >= 0.0 { 1.0 } else { -1.0 };
                    if free_b && self.in_range(a[0] + sign * d) {
                        nodes[i + 1][0] = nodes[i][0] + sign * d;
                        changed = true;
                    } else if free_a && self.in_range(b[0] - sign * d) {
                        nodes[i][0] = nodes[i + 1][0] - sign * d;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn cost(&self, nodes: &[Vec<f64>]) -> f64 {
        if nodes.iter().any(|c| !self.in_range(c[0])) {
            return f64::INFINITY;
        }
        let taus: Vec<f64> = nodes.iter().map(|c| self.tau_at(c)).collect();
        let mut total = 0.0;
        for i in 0..nodes.len() - 1 {
            total += self.leg(&nodes[i], &nodes[i + 1], taus[i], taus[i + 1]).0;
        }
        total
    }

    /// The piecewise null curve of an anchor chain with literal endpoints `p`, `q`.
    fn curve(&self, nodes: &[Vec<f64>], p: &Point, q: &Point) -> Result<PiecewiseCausalCurve> {
        let n = nodes.len();
        let point = |i: usize| -> Point {
            if i == 0 {
                p.clone()
            } else if i == n - 1 {
                q.clone()
            } else {
                self.st.from_conformal(&nodes[i])
            }
        };
        let taus: Vec<f64> = (0..n).map(|i| self.tau.eval(&point(i))).collect();
        let mut segments = Vec::new();
        let mut cur = point(0);
        for i in 0..n - 1 {
            let next = point(i + 1);
            match self.leg(&nodes[i], &nodes[i + 1], taus[i], taus[i + 1]).1 {
                Leg::Empty => {}
                Leg::Direct(dir) => {
                    segments.push(CausalSegment::new(dir, vec![cur.clone(), next.clone()])?);
                    cur = next;
                }
                Leg::Apex(dir, r) => {
                    let r = self.st.from_conformal(&r);
                    segments.push(CausalSegment::new(dir, vec![cur.clone(), r.clone()])?);
                    segments.push(CausalSegment::new(dir.flip(), vec![r, next.clone()])?);
                    cur = next;
                }
            }
        }
        if segments.is_empty() {
            return Ok(PiecewiseCausalCurve::point(p));
        }
        PiecewiseCausalCurve::new(segments)
    }
}

struct Candidate {
    upper: f64,
    witness: PiecewiseCausalCurve,
    iterations: usize,
}

impl Candidate {
    fn key(&self) -> Vec<f64> {
        self.witness
            .breakpoints()
            .into_iter()
            .flat_map(|p| p.coords.iter().copied())
            .collect()
    }

    /// Smaller null length, then fewer segments, then lexicographic breakpoints.
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper
            .total_cmp(&other.upper)
            .then(self.witness.len().cmp(&other.witness.len()))
            .then_with(|| {
                let (a, b) = (self.key(), other.key());
                a.iter()
                    .zip(&b)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(a.len().cmp(&b.len()))
            })
    }
}

fn pattern_search(chain: &Chain, nodes: &mut [Vec<f64>], scale: f64, max_sweeps: usize) -> usize {
    let n = nodes.len();
    let dim = nodes[0].len();
    let mut best = chain.cost(nodes);
    let mut step = 0.25 * scale;
    let floor = 1e-10 * scale;
    let mut sweeps = 0;
    while sweeps < max_sweeps && step > floor {
        sweeps += 1;
        let mut improved = false;
        for i in 1..n - 1 {
            for j in 0..dim {
                for sign in [1.0, -1.0] {
                    let old = nodes[i][j];
                    nodes[i][j] = old + sign * step;
                    let c = chain.cost(nodes);
                    if c < best {
                        best = c;
                        improved = true;
                        break;
                    }
                    nodes[i][j] = old;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    sweeps
}

/// Upper bound on `d̂_τ(p, q)` by pattern search over zigzags with at most
/// `opts.apexes` apexes, and the lower bound `|τ(q) − τ(p)|`.
pub fn estimate(
    st: &Spacetime,
    tau: &TimeFunctionHandle,
    p: &Point,
    q: &Point,
    opts: &EstimateOptions,
) -> Result<NullDistanceEstimate> {
    if !st.has_conformal_chart() {
        return Err(unsupported_family());
    }
    if opts.apexes == 0 {
        return Err(Error::Argument("the number of apexes must be at least 1".into()));
    }
    st.check_point(p)?;
    st.check_point(q)?;
    let lower = (tau.eval(q) - tau.eval(p)).abs();
    if st.same_point(p, q) {
        return Ok(NullDistanceEstimate {
            upper: 0.0,
            lower,
            witness: PiecewiseCausalCurve::point(p),
            method: Method::ZigzagOpt,
            iterations: 0,
        });
    }
    let chain = Chain::new(st, tau)?;
    let cp = st.to_conformal(p);
    let delta = st.chord_displacement(p, q);
    // Work in the covering space with the image of q nearest p.
    let cq: Vec<f64> = cp.iter().zip(&delta).map(|(a, d)| a + d).collect();
    let scale = norm(&delta).max(1e-9);
    let restarts = opts.restarts.max(1);

    let mut jobs: Vec<(usize, usize)> = vec![(1, 0)];
    for k in 2..=opts.apexes {
        for j in 0..restarts {
            jobs.push((k, j));
        }
    }
    let run = |&(k, j): &(usize, usize)| -> Result<Candidate> {
        let canonical: Vec<Vec<f64>> = (0..=k)
            .map(|i| {
                let s = i as f64 / k as f64;
                cp.iter().zip(&delta).map(|(a, d)| a + s * d).collect()
            })
            .collect();
        let mut nodes = canonical.clone();
        if j > 0 {
            let mut rng = sampling::rng(opts.seed, k as u64, j as u64);
            for i in 1..k {
                for _ in 0..16 {
                    let trial: Vec<f64> = canonical[i]
                        .iter()
                        .map(|c| c + scale * rng.gen_range(-0.5..0.5))
                        .collect();
                    if chain.in_range(trial[0]) {
                        nodes[i] = trial;
                        break;
                    }
                }
            }
        }
        nodes[0] = cp.clone();
        nodes[k] = cq.clone();
        let iterations = if k > 1 {
            pattern_search(&chain, &mut nodes, scale, opts.max_sweeps)
        } else {
            0
        };
        chain.repair(&mut nodes);
        let witness = chain.curve(&nodes, p, q)?;
        Ok(Candidate {
            upper: null_length(tau, &witness)?,
            witness,
            iterations,
        })
    };
    let mut candidates: Vec<Candidate> = jobs.par_iter().map(run).collect::<Result<_>>()?;

    if let Some(warm) = &opts.warm_start {
        if warm.start().is_some_and(|s| st.same_point(s, p))
            && warm.end().is_some_and(|e| st.same_point(e, q))
            && validate(st, warm, DEFAULT_CAUSAL_TOL).pass
        {
            candidates.push(Candidate {
                upper: null_length(tau, warm)?,
                witness: warm.clone(),
                iterations: 0,
            });
        }
    }

    let iterations = candidates.iter().map(|c| c.iterations).sum();
    let best = candidates
        .into_iter()
        .min_by(|a, b| a.cmp(b))
        .expect("at least one candidate");
    let report = validate(st, &best.witness, DEFAULT_CAUSAL_TOL);
    if !report.pass {
        return Err(Error::Numerical(format!(
            "optimizer produced an invalid witness: {}",
            report.message
        )));
    }
    // The witness length and |Δτ| are computed along different paths; keep
    // the stored pair ordered even when they agree to the last bit.
    Ok(NullDistanceEstimate {
        upper: best.upper.max(lower),
        lower,
        witness: best.witness,
        method: Method::ZigzagOpt,
        iterations,
    })
}

/// Upper bound for `d̂_τ` using the closed form when one applies.
pub fn best_estimate(
    st: &Spacetime,
    tau: &TimeFunctionHandle,
    p: &Point,
    q: &Point,
    opts: &EstimateOptions,
) -> Result<NullDistanceEstimate> {
    if matches!(st.family(), Family::Minkowski { .. }) && *tau.kind() == TimeFunctionKind::CoordinateT {
        minkowski_exact(st, tau, p, q)
    } else {
        estimate(st, tau, p, q, opts)
    }
}

/// `value ≤ bound` up to the optimizer slack.
pub fn within_bound(value: f64, bound: f64) -> bool {
    value <= bound + REL_TOL * bound.abs() + ABS_TOL
}

#[derive(Debug, Clone, Serialize)]
pub struct DiamondRow {
    pub x: Point,
    pub y: Point,
    pub upper: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiamondReport {
    pub rows: Vec<DiamondRow>,
    pub pass: bool,
}

/// Sample pairs in `J⁺(p) ∩ J⁻(q)` and check `d̂_τ(x, y) ≤ 2(τ(q) − τ(p))`.
///
/// The first two rows are `x = y = p` and `(x, y) = (p, q)`.
pub fn diamond_bound_check(
    st: &Spacetime,
    tau: &TimeFunctionHandle,
    p: &Point,
    q: &Point,
    samples: usize,
    opts: &EstimateOptions,
) -> Result<DiamondReport> {
    if !st.has_conformal_chart() {
        return Err(unsupported_family());
    }
    st.check_point(p)?;
    st.check_point(q)?;
    let class = st.chord_class(p, q, DEFAULT_CAUSAL_TOL);
    if !(class.is_directed(Direction::Future) || st.same_point(p, q)) {
        return Err(Error::Precondition("diamond needs p ≤ q".into()));
    }
    let cp = st.to_conformal(p);
    let delta = st.chord_displacement(p, q);
    let du = delta[0];
    let mid: Vec<f64> = cp.iter().zip(&delta).map(|(a, d)| a + 0.5 * d).collect();
    let in_diamond = |c: &[f64]| {
        let a = norm(&c[1..].iter().zip(&cp[1..]).map(|(x, y)| x - y).collect::<Vec<_>>());
        let b = norm(
            &c[1..]
                .iter()
                .zip(&mid[1..])
                .zip(&delta[1..])
                .map(|((x, m), d)| m + 0.5 * d - x)
                .collect::<Vec<_>>(),
        );
        a <= c[0] - cp[0] && b <= cp[0] + du - c[0]
    };
    let mut rng = sampling::rng(opts.seed, 0xd1a, 0);
    let mut draw = || -> Point {
        for _ in 0..1000 {
            let mut c = mid.clone();
            c[0] = cp[0] + du * rng.gen_range(0.0..=1.0);
            for x in c.iter_mut().skip(1) {
                *x += 0.5 * du * rng.gen_range(-1.0..=1.0);
            }
            if in_diamond(&c) {
                return st.from_conformal(&c);
            }
        }
        p.clone()
    };
    let mut pairs = vec![(p.clone(), p.clone()), (p.clone(), q.clone())];
    while pairs.len() < samples.max(2) {
        let x = draw();
        let y = draw();
        pairs.push((x, y));
    }
    let bound = 2.0 * (tau.eval(q) - tau.eval(p));
    let rows: Vec<DiamondRow> = pairs
        .into_par_iter()
        .map(|(x, y)| {
            let e = best_estimate(st, tau, &x, &y, opts)?;
            Ok(DiamondRow {
                x,
                y,
                upper: e.upper,
                bound,
            })
        })
        .collect::<Result<_>>()?;
    let pass = rows.iter().all(|r| r.upper <= r.bound + ABS_TOL);
    Ok(DiamondReport { rows, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSetRow {
    pub p: Point,
    pub q: Point,
    pub upper: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSetTable {
    pub level: f64,
    pub constant: f64,
    pub rows: Vec<LevelSetRow>,
    pub max_ratio: f64,
    pub pass: bool,
}

/// Random pairs on the slice of coordinate time `t`.
pub fn level_set_pairs(st: &Spacetime, t: f64, count: usize, seed: u64) -> Result<Vec<(Point, Point)>> {
    let spatial = st.spatial().ok_or_else(unsupported_family)?;
    let mut rng = sampling::rng(seed, 0x1e5e7, 0);
    let mut draw = || -> Point {
        let mut c = vec![t];
        match &spatial {
            Spatial::Euclidean(n) => c.extend((0..*n).map(|_| rng.gen_range(-1.0..1.0))),
            Spatial::FlatTorus(sides) => c.extend(sides.iter().map(|l| rng.gen_range(0.0..*l))),
        }
        Point::new(c)
    };
    let pairs = (0..count).map(|_| (draw(), draw())).collect();
    let probe = Point::new(vec![t; st.dimension()]);
    st.check_point(&probe)?;
    Ok(pairs)
}

/// Check `d̂_f(p, q) ≤ C d_{h_t}(p, q)` on pairs from one level set of `f`, after
/// verifying `‖∇f‖ = C` at every sampled point.
pub fn verify_level_set_inequality(
    st: &Spacetime,
    f: &TimeFunctionHandle,
    constant: f64,
    pairs: &[(Point, Point)],
    opts: &EstimateOptions,
) -> Result<LevelSetTable> {
    let Some((p0, _)) = pairs.first() else {
        return Err(Error::Argument("no pairs on the level set".into()));
    };
    let level = f.eval(p0);
    for (p, q) in pairs {
        for x in [p, q] {
            let v = f.eval(x);
            if (v - level).abs() > 1e-9 * level.abs().max(1.0) {
                return Err(Error::Precondition(format!(
                    "point {:?} is off the level set f = {level}",
                    x.coords
                )));
            }
            let g = st.norm(&f.gradient(st, x)?)?;
            if (g - constant).abs() > 1e-6 {
                return Err(Error::Precondition(format!(
                    "gradient norm {g} differs from C = {constant} at {:?}",
                    x.coords
                )));
            }
        }
    }
    let rows: Vec<LevelSetRow> = pairs
        .par_iter()
        .map(|(p, q)| {
            let e = best_estimate(st, f, p, q, opts)?;
            let bound = constant * st.slice_distance(p, q)?;
            let ratio = if bound > 0.0 {
                e.upper / bound
            } else if e.upper == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
            Ok(LevelSetRow {
                p: p.clone(),
                q: q.clone(),
                upper: e.upper,
                bound,
                ratio,
            })
        })
        .collect::<Result<_>>()?;
    let pass = rows.iter().all(|r| within_bound(r.upper, r.bound));
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(LevelSetTable {
        level,
        constant,
        rows,
        max_ratio,
        pass,
    })
}

/// CSV with columns `p, q, lower, upper, method, iterations, witness_json`.
pub fn write_estimates_csv<W: Write>(out: W, rows: &[(Point, Point, NullDistanceEstimate)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
    w.write_record(["p", "q", "lower", "upper", "method", "iterations", "witness_json"])
        .map_err(io)?;
    for (p, q, e) in rows {
        w.write_record([
            serde_json::to_string(p).expect("point serializes"),
            serde_json::to_string(q).expect("point serializes"),
            format!("{:.16e}", e.lower),
            format!("{:.16e}", e.upper),
            format!("{:?}", e.method),
            e.iterations.to_string(),
            e.witness.to_json(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::TimeExpr;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }

    fn t() -> TimeFunctionHandle {
        TimeFunctionHandle::coordinate_t()
    }

    #[test]
    fn minkowski_exact_examples() {
        let st = Spacetime::minkowski(2).unwrap();
        let e = minkowski_exact(&st, &t(), &p(&[0.0, 0.0, 0.0]), &p(&[0.0, 3.0, 4.0])).unwrap();
        assert_eq!(e.upper, 5.0);
        assert_eq!(null_length(&t(), &e.witness).unwrap(), 5.0);
        assert!(validate(&st, &e.witness, 1e-9).pass);
        let e = minkowski_exact(&st, &t(), &p(&[0.0, 0.0, 0.0]), &p(&[2.0, 1.0, 0.0])).unwrap();
        assert_eq!(e.upper, 2.0);
        assert_eq!(e.witness.len(), 1);
        let e = minkowski_exact(&st, &t(), &p(&[0.5, 1.0, 0.0]), &p(&[0.5, 1.0, 0.0])).unwrap();
        assert_eq!(e.upper, 0.0);
        let grw = Spacetime::grw(TimeExpr::T, Spatial::Euclidean(1)).unwrap();
        assert!(matches!(
            minkowski_exact(&grw, &t(), &p(&[1.0, 0.0]), &p(&[1.0, 1.0])),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn estimate_equal_time_minkowski() {
        let st = Spacetime::minkowski(1).unwrap();
        let opts = EstimateOptions {
            apexes: 1,
            ..Default::default()
        };
        let e = estimate(&st, &t(), &p(&[0.0, 0.0]), &p(&[0.0, 1.0]), &opts).unwrap();
        assert!((e.upper - 1.0).abs() < 1e-6);
        assert_eq!(e.lower, 0.0);
        assert!((null_length(&t(), &e.witness).unwrap() - e.upper).abs() <= 1e-12);
    }

    #[test]
    fn estimate_matches_minkowski_oracle() {
        let st = Spacetime::minkowski(2).unwrap();
        let mut rng = sampling::rng(11, 0, 0);
        for i in 0..50 {
            let a = st.sample_region(&mut rng);
            let b = st.sample_region(&mut rng);
            let opts = EstimateOptions {
                apexes: 1 + i % 4,
                restarts: 2,
                seed: i as u64,
                ..Default::default()
            };
            let e = estimate(&st, &t(), &a, &b, &opts).unwrap();
            let x = minkowski_exact(&st, &t(), &a, &b).unwrap();
            assert!(
                (e.upper - x.upper).abs() <= 0.01 * x.upper,
                "{} vs {}",
                e.upper,
                x.upper
            );
            assert!(e.lower <= e.upper);
        }
    }

    #[test]
    fn static_torus_equals_spatial_distance() {
        let st = Spacetime::grw(TimeExpr::Const(1.0), Spatial::FlatTorus(vec![1.0])).unwrap();
        let e = estimate(&st, &t(), &p(&[1.0, 0.1]), &p(&[1.0, 0.4]), &Default::default()).unwrap();
        assert_relative_eq!(e.upper, 0.3, epsilon = 1e-9);
        // Nearest image across the seam.
        let e = estimate(&st, &t(), &p(&[1.0, 0.1]), &p(&[1.0, 0.9]), &Default::default()).unwrap();
        assert_relative_eq!(e.upper, 0.2, epsilon = 1e-9);
        assert_eq!(e.witness.end().unwrap(), &p(&[1.0, 0.9]));
    }

    #[test]
    fn expanding_torus_uses_past_apex() {
        let st = Spacetime::grw(TimeExpr::T, Spatial::FlatTorus(vec![1.0, 1.0])).unwrap();
        let (a, b) = (p(&[0.5, 0.1, 0.1]), p(&[0.5, 0.4, 0.5]));
        let opts = EstimateOptions {
            apexes: 1,
            ..Default::default()
        };
        let e = estimate(&st, &t(), &a, &b, &opts).unwrap();
        let d = 0.5f64;
        assert_relative_eq!(e.upper, 2.0 * 0.5 * (1.0 - (-d / 2.0).exp()), epsilon = 1e-12);
        assert_eq!(e.witness.segments()[0].direction(), Direction::Past);
        let more = estimate(&st, &t(), &a, &b, &Default::default()).unwrap();
        assert!(more.upper <= e.upper);
    }

    #[test]
    fn causal_pairs_cost_their_time_difference() {
        let st = Spacetime::grw(TimeExpr::TSquared, Spatial::Euclidean(2)).unwrap();
        let (a, b) = (p(&[1.0, 0.0, 0.0]), p(&[2.0, 0.1, 0.1]));
        let e = estimate(&st, &t(), &a, &b, &Default::default()).unwrap();
        assert_relative_eq!(e.upper, 1.0, epsilon = 1e-12);
        assert_eq!(e.witness.len(), 1);
    }

    #[test]
    fn estimate_is_deterministic() {
        let st = Spacetime::grw(TimeExpr::ExpT, Spatial::Euclidean(2)).unwrap();
        let tau = TimeFunctionHandle::phi_of_t(TimeExpr::TSquared);
        let (a, b) = (p(&[0.3, 0.0, 0.0]), p(&[0.5, 1.0, -0.5]));
        let opts = EstimateOptions {
            apexes: 3,
            restarts: 4,
            seed: 9,
            ..Default::default()
        };
        let e1 = estimate(&st, &tau, &a, &b, &opts).unwrap();
        let e2 = estimate(&st, &tau, &a, &b, &opts).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn warm_start_caps_the_estimate() {
        let st = Spacetime::minkowski(1).unwrap();
        let (a, b) = (p(&[0.0, 0.0]), p(&[0.0, 1.0]));
        let warm = minkowski_exact(&st, &t(), &a, &b).unwrap().witness;
        let opts = EstimateOptions {
            apexes: 1,
            warm_start: Some(warm),
            ..Default::default()
        };
        let e = estimate(&st, &t(), &a, &b, &opts).unwrap();
        assert!(e.upper <= 1.0);
    }

    #[test]
    fn diamond_examples() {
        let st = Spacetime::minkowski(1).unwrap();
        let r = diamond_bound_check(&st, &t(), &p(&[0.0, 0.0]), &p(&[2.0, 0.0]), 50, &Default::default()).unwrap();
        assert!(r.pass);
        assert_eq!(r.rows.len(), 50);
        assert_eq!(r.rows[0].upper, 0.0);
        assert_eq!(r.rows[1].upper, 2.0);
        assert!(r.rows.iter().all(|row| row.upper <= 4.0 + 1e-6));
    }

    #[test]
    fn level_set_examples() {
        let st = Spacetime::minkowski(2).unwrap();
        let pairs = level_set_pairs(&st, 0.0, 20, 3).unwrap();
        let table = verify_level_set_inequality(&st, &t(), 1.0, &pairs, &Default::default()).unwrap();
        assert!(table.pass);
        for row in &table.rows {
            assert!((row.ratio - 1.0).abs() <= 1e-3);
        }

        let grw = Spacetime::grw(TimeExpr::T, Spatial::FlatTorus(vec![1.0, 1.0])).unwrap();
        let pairs = level_set_pairs(&grw, 0.5, 10, 4).unwrap();
        let table = verify_level_set_inequality(&grw, &t(), 1.0, &pairs, &Default::default()).unwrap();
        assert!(table.pass);

        let phi = TimeFunctionHandle::phi_of_t(TimeExpr::TSquared);
        let pairs = level_set_pairs(&grw, 1.0, 10, 5).unwrap();
        let table = verify_level_set_inequality(&grw, &phi, 2.0, &pairs, &Default::default()).unwrap();
        assert!(table.pass);
        assert!(matches!(
            verify_level_set_inequality(&grw, &phi, 1.0, &pairs, &Default::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let st = Spacetime::minkowski(1).unwrap();
        let (a, b) = (p(&[0.0, 0.0]), p(&[0.0, 1.0]));
        let e = minkowski_exact(&st, &t(), &a, &b).unwrap();
        let mut buf = Vec::new();
        write_estimates_csv(&mut buf, &[(a, b, e)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "p,q,lower,upper,method,iterations,witness_json");
        assert!(lines.next().unwrap().contains("Exact"));
    }

    #[test]
    fn more_apexes_or_restarts_never_hurt() {
        let st = Spacetime::grw(TimeExpr::TSquared, Spatial::FlatTorus(vec![1.0, 1.0])).unwrap();
        let tau = TimeFunctionHandle::phi_of_t(TimeExpr::ExpT);
        let mut rng = sampling::rng(33, 0, 0);
        for _ in 0..4 {
            let (a, b) = (st.sample_region(&mut rng), st.sample_region(&mut rng));
            let up = |apexes, restarts| {
                let o = EstimateOptions {
                    apexes,
                    restarts,
                    seed: 5,
                    ..Default::default()
                };
                estimate(&st, &tau, &a, &b, &o).unwrap().upper
            };
            for n in 1..=3 {
                for r in [1, 2, 4] {
                    let base = up(n, r);
                    assert!(up(n + 1, r) <= base);
                    assert!(up(n, 2 * r) <= base);
                }
            }
        }
    }

    #[test]
    fn semi_metric_sampling() {
        let st = Spacetime::grw(TimeExpr::T, Spatial::Euclidean(1)).unwrap();
        let mut rng = sampling::rng(21, 0, 0);
        for _ in 0..10 {
            let a = st.sample_region(&mut rng);
            let b = st.sample_region(&mut rng);
            let c = Point::new(vec![rng.gen_range(0.5..1.5), rng.gen_range(-1.0..1.0)]);
            let o = EstimateOptions::default();
            let ab = estimate(&st, &t(), &a, &b, &o).unwrap();
            let ba = estimate(&st, &t(), &b, &a, &o).unwrap();
            assert!(
                within_bound((ab.upper - ba.upper).abs(), 0.0) || (ab.upper - ba.upper).abs() <= REL_TOL * ab.upper
            );
            let bc = estimate(&st, &t(), &b, &c, &o).unwrap();
            let ac = estimate(&st, &t(), &a, &c, &o).unwrap();
            assert!(ac.lower <= ab.upper + bc.upper + ABS_TOL);
        }
    }
}
