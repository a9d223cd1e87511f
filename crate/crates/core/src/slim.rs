//! Slim Minkowski metrics, normal charts, sampled cone-domination certificates and
//! the two-segment slim zigzag from a point to a nearby point of its level set.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::curves::{null_length, validate, CausalSegment, PiecewiseCausalCurve, ValidationReport};
use crate::error::{Error, Result};
use crate::geometry::{norm, Direction, Family, Point, Spacetime, TangentVector, DEFAULT_CAUSAL_TOL};
use crate::sampling::{radical_inverse, sphere_direction};
use crate::timefns::TimeFunctionHandle;

/// RK4 steps per exponential-map evaluation in a normal chart.
pub const CHART_STEPS: usize = 64;
/// Bisection steps used by [`certified_radius`].
pub const BISECTION_STEPS: usize = 8;
const JACOBIAN_STEP: f64 = 1e-5;
const DEGENERATE_TOL: f64 = 1e-12;

/// `η_ε = −(1−ε) dt² + Σ (dxⁱ)²` on `ℝ^{n+1}`. `ε = 0` is plain Minkowski.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlimMetric {
    pub epsilon: f64,
    pub dimension: usize,
}

impl SlimMetric {
    pub fn new(epsilon: f64, dimension: usize) -> Result<Self> {
        check_epsilon(epsilon)?;
        if dimension < 2 {
            return Err(Error::Argument("slim metric needs dimension >= 2".into()));
        }
        Ok(Self { epsilon, dimension })
    }

    /// Slope `√(1−ε)` of the cone boundary.
    pub fn slope(&self) -> f64 {
        (1.0 - self.epsilon).sqrt()
    }

    pub fn inner(&self, v: &[f64], w: &[f64]) -> f64 {
        -(1.0 - self.epsilon) * v[0] * w[0] + v[1..].iter().zip(&w[1..]).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Membership in `C_ε`.
    pub fn is_causal(&self, v: &[f64]) -> bool {
        v.iter().any(|c| *c != 0.0) && self.inner(v, v) <= 0.0
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Argument(format!("epsilon {epsilon} must lie in [0, 1)")));
    }
    Ok(())
}

pub fn eta_eps_inner(epsilon: f64, v: &[f64], w: &[f64]) -> Result<f64> {
    check_epsilon(epsilon)?;
    if v.len() != w.len() || v.len() < 2 {
        return Err(Error::Argument("vectors must share a dimension >= 2".into()));
    }
    Ok(SlimMetric {
        epsilon,
        dimension: v.len(),
    }
    .inner(v, w))
}

/// Time-shifted difference `b − a` with nearest-image spatial parts.
fn coord_diff(st: &Spacetime, a: &Point, b: &Point) -> Vec<f64> {
    match st.spatial() {
        Some(sp) => {
            let mut d = vec![b.time() - a.time()];
            d.extend(sp.displacement(a.spatial(), b.spatial()));
            d
        }
        None => a.coords.iter().zip(&b.coords).map(|(x, y)| y - x).collect(),
    }
}

/// Normal coordinates `φ⁻¹(y) = exp_p(Σ yⁱ Eᵢ)` with `E₀ = −∇f/C` and `E₁ = γ'(0)`.
#[derive(Debug, Clone)]
pub struct NormalChart {
    st: Spacetime,
    center: Point,
    /// Frame vectors `Eᵢ` in chart coordinates of the spacetime.
    frame: Vec<Vec<f64>>,
    constant: f64,
    steps: usize,
}

impl NormalChart {
    pub fn new(st: &Spacetime, f: &TimeFunctionHandle, center: &Point, tangent: &[f64]) -> Result<Self> {
        st.check_point(center)?;
        let d = st.dimension();
        if tangent.len() != d {
            return Err(Error::Argument("tangent has the wrong dimension".into()));
        }
        let grad = f.gradient(st, center)?;
        let g2 = st.inner_at(center, &grad.components, &grad.components);
        if !(g2 < 0.0) {
            return Err(Error::Precondition("∇f is not timelike at the center".into()));
        }
        let constant = (-g2).sqrt();
        let e0: Vec<f64> = grad.components.iter().map(|c| -c / constant).collect();
        let n1 = st.inner_at(center, tangent, tangent);
        let cross = st.inner_at(center, tangent, &e0);
        if (n1 - 1.0).abs() > 1e-9 || cross.abs() > 1e-9 {
            return Err(Error::Precondition(
                "γ'(0) must be a unit vector tangent to the level set".into(),
            ));
        }
        let mut frame = vec![e0, tangent.to_vec()];
        let mut signs = vec![-1.0, 1.0];
        for i in 0..d {
            if frame.len() == d {
                break;
            }
            let mut v = vec![0.0; d];
            v[i] = 1.0;
            for (e, s) in frame.iter().zip(&signs) {
                let c = st.inner_at(center, &v, e) * s;
                for (vi, ei) in v.iter_mut().zip(e) {
                    *vi -= c * ei;
                }
            }
            let q = st.inner_at(center, &v, &v);
            if q <= 1e-10 {
                continue;
            }
            let s = q.sqrt();
            frame.push(v.iter().map(|x| x / s).collect());
            signs.push(1.0);
        }
        if frame.len() != d {
            return Err(Error::Numerical("could not complete the normal frame".into()));
        }
        Ok(Self {
            st: st.clone(),
            center: center.clone(),
            frame,
            constant,
            steps: CHART_STEPS,
        })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    /// `C = ‖∇f‖_g` at the center.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn dimension(&self) -> usize {
        self.frame.len()
    }

    fn frame_apply(&self, y: &[f64]) -> Vec<f64> {
        let d = self.dimension();
        let mut v = vec![0.0; d];
        for (yi, e) in y.iter().zip(&self.frame) {
            for k in 0..d {
                v[k] += yi * e[k];
            }
        }
        v
    }

    pub fn from_chart(&self, y: &[f64]) -> Result<Point> {
        let v = self.frame_apply(y);
        self.st
            .exp_map(&TangentVector::new(self.center.clone(), v)?, self.steps)
    }

    /// Columns `∂φ⁻¹/∂yⁱ`; central differences except on Minkowski space, where the
    /// chart is linear.
    pub fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.dimension();
        if matches!(self.st.family(), Family::Minkowski { .. }) {
            return Ok(DMatrix::from_fn(d, d, |k, i| self.frame[i][k]));
        }
        let mut j = DMatrix::zeros(d, d);
        for i in 0..d {
            let mut yp = y.to_vec();
            let mut ym = y.to_vec();
            yp[i] += JACOBIAN_STEP;
            ym[i] -= JACOBIAN_STEP;
            let a = self.from_chart(&ym)?;
            let b = self.from_chart(&yp)?;
            let diff = coord_diff(&self.st, &a, &b);
            for k in 0..d {
                j[(k, i)] = diff[k] / (2.0 * JACOBIAN_STEP);
            }
        }
        Ok(j)
    }

    /// Newton inversion of [`from_chart`](Self::from_chart).
    pub fn to_chart(&self, x: &Point) -> Result<Vec<f64>> {
        self.st.check_point(x)?;
        let d = self.dimension();
        let frame = DMatrix::from_fn(d, d, |k, i| self.frame[i][k]);
        let inv = frame
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular frame".into()))?;
        let mut y: Vec<f64> = (inv * DVector::from_vec(coord_diff(&self.st, &self.center, x)))
            .iter()
            .copied()
            .collect();
        for _ in 0..40 {
            let image = self.from_chart(&y)?;
            let r = coord_diff(&self.st, x, &image);
            let scale = 1.0 + norm(&y);
            if norm(&r) <= 1e-15 * scale {
                return Ok(y);
            }
            let jac = self.jacobian(&y)?;
            let step = jac
                .lu()
                .solve(&DVector::from_vec(r))
                .ok_or_else(|| Error::Numerical("singular chart Jacobian".into()))?;
            for (yi, s) in y.iter_mut().zip(step.iter()) {
                *yi -= s;
            }
            if norm(step.as_slice()) <= 1e-16 * scale {
                return Ok(y);
            }
        }
        Ok(y)
    }

    /// `((φ⁻¹)^* g)_y`.
    pub fn pullback_metric(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let x = self.from_chart(y)?;
        let jac = self.jacobian(y)?;
        Ok(jac.transpose() * self.st.metric_at(&x) * jac)
    }
}

/// Points of the closed Euclidean ball: the center, then `shells` spheres.
pub fn ball_grid(dimension: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; dimension]];
    let shells = 4usize;
    let per = count.saturating_sub(1).div_ceil(shells).max(1);
    for s in 1..=shells {
        let rho = radius * s as f64 / shells as f64;
        for k in 0..per {
            if pts.len() >= count.max(1) {
                break;
            }
            pts.push(sphere_direction(k as u64, dimension).iter().map(|c| c * rho).collect());
        }
    }
    pts
}

/// Unit vectors of `D_ε = Sⁿ ∩ C_ε` (future nappe; `F` is even in `v`): the time
/// axis, boundary directions and interior directions.
pub fn cone_direction_grid(epsilon: f64, dimension: usize, count: usize) -> Vec<Vec<f64>> {
    let n = dimension - 1;
    let slope = (1.0 - epsilon).sqrt();
    let mut dirs = Vec::with_capacity(count.max(1));
    let mut axis = vec![0.0; dimension];
    axis[0] = 1.0;
    dirs.push(axis);
    let mut k = 0u64;
    while dirs.len() < count {
        let w = sphere_direction(k / 2, n);
        let sigma = if k.is_multiple_of(2) { 1.0 } else { radical_inverse(k / 2 + 1, 3) };
        let mut v = vec![1.0];
        v.extend(w.iter().map(|c| c * slope * sigma));
        let l = norm(&v);
        dirs.push(v.iter().map(|c| c / l).collect());
        k += 1;
    }
    dirs
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    pub epsilon: f64,
    pub radius: f64,
    pub max_f: f64,
    pub argmax_point: Vec<f64>,
    pub argmax_direction: Vec<f64>,
    pub min_f: f64,
    pub evaluations: usize,
    /// Chart points whose geodesic left the domain.
    pub escaped: usize,
    pub pass: bool,
}

/// Sampled maximum of `F(x, v) = ((φ⁻¹)^* g)_x(v, v) − η_ε(v, v)` over grid points of
/// the ball of `radius` and directions of `D_ε`. Passes iff the maximum is negative.
pub fn verify_cone_domination(
    chart: &NormalChart,
    epsilon: f64,
    radius: f64,
    point_grid: usize,
    dir_grid: usize,
) -> Result<DominationReport> {
    let eta = SlimMetric::new(epsilon, chart.dimension())?;
    if !(radius > 0.0) {
        return Err(Error::Argument("radius must be positive".into()));
    }
    if point_grid < 16 || dir_grid < 16 {
        return Err(Error::Argument(
            "point and direction grids need at least 16 entries".into(),
        ));
    }
    let points = ball_grid(chart.dimension(), radius, point_grid);
    let dirs = cone_direction_grid(epsilon, chart.dimension(), dir_grid);
    let per_point: Vec<Option<(f64, usize, f64)>> = points
        .par_iter()
        .map(|y| {
            let g = chart.pullback_metric(y).ok()?;
            let mut best = (f64::NEG_INFINITY, 0usize, f64::INFINITY);
            for (i, v) in dirs.iter().enumerate() {
                let vv = DVector::from_column_slice(v);
                let f = (vv.transpose() * &g * &vv)[(0, 0)] - eta.inner(v, v);
                if f > best.0 {
                    best.0 = f;
                    best.1 = i;
                }
                best.2 = best.2.min(f);
            }
            Some(best)
        })
        .collect();
    let mut report = DominationReport {
        epsilon,
        radius,
        max_f: f64::NEG_INFINITY,
        argmax_point: Vec::new(),
        argmax_direction: Vec::new(),
        min_f: f64::INFINITY,
        evaluations: 0,
        escaped: 0,
        pass: false,
    };
    for (y, res) in points.iter().zip(per_point) {
        match res {
            None => {
                report.escaped += 1;
                report.max_f = f64::INFINITY;
                report.argmax_point = y.clone();
                report.argmax_direction = Vec::new();
            }
            Some((maxf, i, minf)) => {
                report.evaluations += dirs.len();
                report.min_f = report.min_f.min(minf);
                if maxf > report.max_f {
                    report.max_f = maxf;
                    report.argmax_point = y.clone();
                    report.argmax_direction = dirs[i].clone();
                }
            }
        }
    }
    report.pass = report.max_f < 0.0;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifiedRadius {
    pub radius: f64,
    pub report: DominationReport,
}

/// Largest radius in `(0, r_max]` found by bisection at which the sampled
/// certificate holds.
pub fn certified_radius(
    chart: &NormalChart,
    epsilon: f64,
    r_max: f64,
    point_grid: usize,
    dir_grid: usize,
) -> Result<CertifiedRadius> {
    let top = verify_cone_domination(chart, epsilon, r_max, point_grid, dir_grid)?;
    if top.pass {
        return Ok(CertifiedRadius {
            radius: r_max,
            report: top,
        });
    }
    let (mut lo, mut hi) = (0.0, r_max);
    let mut best = None;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let r = verify_cone_domination(chart, epsilon, mid, point_grid, dir_grid)?;
        if r.pass {
            lo = mid;
            best = Some(r);
        } else {
            hi = mid;
        }
    }
    match best {
        Some(report) => Ok(CertifiedRadius { radius: lo, report }),
        None => Err(Error::Numerical(format!(
            "no certified radius above {:.3e}",
            r_max / (1u64 << BISECTION_STEPS) as f64
        ))),
    }
}

/// `t* = (|x|² − (1−ε) t²) / (2√(1−ε)(|x| − √(1−ε) t))` for `q = (t, x)`.
pub fn t_star(t_s: f64, x_norm: f64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let a = (1.0 - epsilon).sqrt();
    let denom = x_norm - a * t_s;
    if x_norm == 0.0 || denom.abs() < DEGENERATE_TOL {
        return Err(Error::Degenerate(format!(
            "t* undefined for |x| = {x_norm:e}, t = {t_s:e}"
        )));
    }
    Ok((x_norm * x_norm - a * a * t_s * t_s) / (2.0 * a * denom))
}

/// Apex `r` with `[0, r]` and `[r, q]` both `η_ε`-null. The future apex is the one
/// with `t* > 0`; the past apex is its time reflection.
pub fn slim_apex(q: &[f64], epsilon: f64, direction: Direction) -> Result<(f64, Vec<f64>)> {
    let a = (1.0 - epsilon).sqrt();
    let xn = norm(&q[1..]);
    let ts = match direction {
        Direction::Future => t_star(q[0], xn, epsilon)?,
        Direction::Past => -t_star(-q[0], xn, epsilon)?,
    };
    let mut r = vec![ts];
    let scale = a * ts.abs() / xn;
    r.extend(q[1..].iter().map(|c| c * scale));
    Ok((ts, r))
}

/// A unit-speed `h_t`-geodesic in the slice through `p`: `s ↦ (t, x + s w / f(t))`.
#[derive(Debug, Clone)]
pub struct LevelSetCurve {
    start: Point,
    velocity: Vec<f64>,
}

impl LevelSetCurve {
    /// `direction` is a spatial vector, normalized internally.
    pub fn straight(st: &Spacetime, start: &Point, direction: &[f64]) -> Result<Self> {
        st.check_point(start)?;
        if direction.len() + 1 != st.dimension() || norm(direction) == 0.0 {
            return Err(Error::Argument(
                "spatial direction has the wrong dimension or is zero".into(),
            ));
        }
        if !st.is_builtin() {
            return Err(Error::Unsupported("level-set curves need a built-in family".into()));
        }
        let scale = st.scale_factor().map(|f| f.eval(start.time())).unwrap_or(1.0);
        let l = norm(direction);
        let mut velocity = vec![0.0];
        velocity.extend(direction.iter().map(|c| c / (l * scale)));
        Ok(Self {
            start: start.clone(),
            velocity,
        })
    }

    pub fn at(&self, s: f64) -> Point {
        Point::new(
            self.start
                .coords
                .iter()
                .zip(&self.velocity)
                .map(|(x, v)| x + s * v)
                .collect::<Vec<_>>(),
        )
    }

    pub fn tangent(&self) -> &[f64] {
        &self.velocity
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlimZigzag {
    pub epsilon: f64,
    pub s: f64,
    pub q_chart: Vec<f64>,
    pub r_chart: Vec<f64>,
    pub t_star: f64,
    /// `η_ε(Δ, Δ)` of `[0, r]` and `[r, q]`.
    pub eta_residuals: [f64; 2],
    pub curve: PiecewiseCausalCurve,
    pub null_length: f64,
    pub validation: ValidationReport,
}

/// The curve `φ⁻¹([0, r_s] · [r_s, q_s])` from the chart center to `γ(s)`.
pub fn build_slim_zigzag(
    chart: &NormalChart,
    f: &TimeFunctionHandle,
    gamma: &LevelSetCurve,
    s: f64,
    epsilon: f64,
    radius: f64,
    direction: Direction,
    samples: usize,
) -> Result<SlimZigzag> {
    let eta = SlimMetric::new(epsilon, chart.dimension())?;
    if !(s > 0.0) {
        return Err(Error::Argument("s must be positive".into()));
    }
    let target = gamma.at(s);
    let q = chart.to_chart(&target)?;
    let (ts, r) = slim_apex(&q, epsilon, direction)?;
    for v in [&q, &r] {
        let n = norm(v);
        if n >= radius {
            return Err(Error::OutOfNeighborhood { norm: n, radius });
        }
    }
    let rq: Vec<f64> = q.iter().zip(&r).map(|(a, b)| a - b).collect();
    let eta_residuals = [eta.inner(&r, &r), eta.inner(&rq, &rq)];
    let samples = samples.max(2);
    let map_segment = |a: &[f64], b: &[f64], first: &Point, last: &Point| -> Result<Vec<Point>> {
        let mut pts = vec![first.clone()];
        for i in 1..samples - 1 {
            let lam = i as f64 / (samples - 1) as f64;
            let y: Vec<f64> = a.iter().zip(b).map(|(x, z)| x + lam * (z - x)).collect();
            pts.push(chart.from_chart(&y)?);
        }
        pts.push(last.clone());
        Ok(pts)
    };
    let origin = vec![0.0; chart.dimension()];
    let apex = chart.from_chart(&r)?;
    let curve = PiecewiseCausalCurve::new(vec![
        CausalSegment::new(direction, map_segment(&origin, &r, chart.center(), &apex)?)?,
        CausalSegment::new(direction.flip(), map_segment(&r, &q, &apex, &target)?)?,
    ])?;
    let validation = validate(&chart.st, &curve, DEFAULT_CAUSAL_TOL);
    Ok(SlimZigzag {
        epsilon,
        s,
        q_chart: q,
        r_chart: r,
        t_star: ts,
        eta_residuals,
        null_length: null_length(f, &curve)?,
        curve,
        validation,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub epsilon: f64,
    pub s: f64,
    pub t_star: f64,
    pub t_star_over_s: f64,
    pub ratio: f64,
    pub norm_identity_residual: f64,
    pub eta_residual: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonLimit {
    pub epsilon: f64,
    pub radius: f64,
    /// Quadratic extrapolation to `s = 0` over the three smallest `s`.
    pub extrapolated: f64,
    pub last_value: f64,
    pub expected: f64,
    pub t_star_over_s_expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioTable {
    pub constant: f64,
    pub rows: Vec<RatioRow>,
    pub limits: Vec<EpsilonLimit>,
    /// Polynomial extrapolation of the per-`ε` limits to `ε = 0`.
    pub diagonal: f64,
}

/// Value at `0` of the polynomial through `(xs[i], ys[i])` (Neville).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let mut p = ys.to_vec();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    p.first().copied().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone)]
pub struct RatioOptions {
    pub r_max: f64,
    pub point_grid: usize,
    pub dir_grid: usize,
    pub samples: usize,
}

impl Default for RatioOptions {
    fn default() -> Self {
        Self {
            r_max: 0.5,
            point_grid: 33,
            dir_grid: 32,
            samples: 4,
        }
    }
}

pub fn ratio_table(
    chart: &NormalChart,
    f: &TimeFunctionHandle,
    gamma: &LevelSetCurve,
    s_list: &[f64],
    eps_list: &[f64],
    opts: &RatioOptions,
) -> Result<RatioTable> {
    if s_list.is_empty() || s_list.windows(2).any(|w| !(w[1] < w[0])) || s_list.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Argument("s values must be positive and decreasing".into()));
    }
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Argument("epsilon values must be decreasing".into()));
    }
    for &e in eps_list {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::Argument(format!("epsilon {e} must lie in (0, 1)")));
        }
    }
    let c = chart.constant();
    let mut rows = Vec::new();
    let mut limits = Vec::new();
    for &eps in eps_list {
        let cert = certified_radius(chart, eps, opts.r_max, opts.point_grid, opts.dir_grid)?;
        let eps_rows: Vec<RatioRow> = s_list
            .par_iter()
            .map(|&s| {
                let z = build_slim_zigzag(chart, f, gamma, s, eps, cert.radius, Direction::Future, opts.samples)?;
                let rn = norm(&z.r_chart);
                Ok(RatioRow {
                    epsilon: eps,
                    s,
                    t_star: z.t_star,
                    t_star_over_s: z.t_star / s,
                    ratio: z.null_length / s,
                    norm_identity_residual: rn - (2.0 - eps).sqrt() * z.t_star.abs(),
                    eta_residual: z.eta_residuals[0].abs().max(z.eta_residuals[1].abs()),
                    valid: z.validation.pass,
                })
            })
            .collect::<Result<_>>()?;
        let last_value = eps_rows.last().map(|r| r.ratio).unwrap_or(f64::NAN);
        let extrapolated = if eps_rows.len() >= 3 {
            let tail = &eps_rows[eps_rows.len() - 3..];
            let xs: Vec<f64> = tail.iter().map(|r| r.s).collect();
            let ys: Vec<f64> = tail.iter().map(|r| r.ratio).collect();
            let v = extrapolate_to_zero(&xs, &ys);
            if v.is_finite() {
                v
            } else {
                last_value
            }
        } else {
            last_value
        };
        let a = (1.0 - eps).sqrt();
        limits.push(EpsilonLimit {
            epsilon: eps,
            radius: cert.radius,
            extrapolated,
            last_value,
            expected: c / a,
            t_star_over_s_expected: 1.0 / (2.0 * a),
        });
        rows.extend(eps_rows);
    }
    let xs: Vec<f64> = limits.iter().map(|l| l.epsilon).collect();
    let ys: Vec<f64> = limits.iter().map(|l| l.extrapolated).collect();
    Ok(RatioTable {
        constant: c,
        rows,
        diagonal: extrapolate_to_zero(&xs, &ys),
        limits,
    })
}

/// CSV with columns `epsilon, s, t_star_over_s, ratio`.
pub fn write_ratio_csv<W: Write>(out: W, table: &RatioTable) -> Result<()> {
    let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "s", "t_star_over_s", "ratio"]).map_err(io)?;
    for r in &table.rows {
        w.write_record([
            format!("{:.16e}", r.epsilon),
            format!("{:.16e}", r.s),
            format!("{:.16e}", r.t_star_over_s),
            format!("{:.16e}", r.ratio),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
    Ok(())
}
