//! Charts, metric tensors, causal classification, gradients and geodesics for
//! the built-in spacetime families.
//!
//! Every spacetime carries a single global chart. Minkowski space uses Cartesian
//! coordinates `(t, x¹, …, xⁿ)`. A generalized Robertson–Walker (GRW) spacetime
//! `-dt² + f(t)² h` uses product coordinates `(t, x)` where `h` is flat (Euclidean
//! space or a flat torus, coordinates taken in the universal cover). Custom metrics
//! are given as closures on a single chart.
//!
//! Minkowski and GRW spacetimes also expose a *conformal chart* `(u, x)` with
//! `u = ∫ dt / f`. In it the metric is `f² (-du² + h)`, so causal relations are
//! those of flat space. Polylines are interpolated linearly in this chart.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::TimeExpr;

/// Default relative tolerance for causal classification.
pub const DEFAULT_CAUSAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Self { coords: coords.into() }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The time coordinate (coordinate 0).
    pub fn time(&self) -> f64 {
        self.coords[0]
    }

    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Point, components: impl Into<Vec<f64>>) -> Result<Self> {
        let components = components.into();
        if components.len() != base.dim() {
            return Err(Error::Argument(format!(
                "tangent vector has {} components but its base point has dimension {}",
                components.len(),
                base.dim()
            )));
        }
        Ok(Self { base, components })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            base: self.base.clone(),
            components: self.components.iter().map(|c| c * factor).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Future,
    Past,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Future => Direction::Past,
            Direction::Past => Direction::Future,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalKind {
    Timelike,
    Null,
    Spacelike,
    Zero,
}

/// Causal character of a vector. `direction` is set exactly for timelike and null vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CausalClass {
    pub kind: CausalKind,
    pub direction: Option<Direction>,
}

impl CausalClass {
    pub const ZERO: Self = Self {
        kind: CausalKind::Zero,
        direction: None,
    };
    pub const SPACELIKE: Self = Self {
        kind: CausalKind::Spacelike,
        direction: None,
    };

    pub fn is_causal(&self) -> bool {
        matches!(self.kind, CausalKind::Timelike | CausalKind::Null)
    }

    pub fn is_directed(&self, direction: Direction) -> bool {
        self.is_causal() && self.direction == Some(direction)
    }
}

impl fmt::Display for CausalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.direction {
            Some(d) => write!(f, "{:?}/{:?}", self.kind, d),
            None => write!(f, "{:?}", self.kind),
        }
    }
}

/// Spatial factor of a GRW spacetime. The torus is `ℝⁿ / ⊕ Lᵢℤ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spatial {
    Euclidean(usize),
    FlatTorus(Vec<f64>),
}

impl Spatial {
    pub fn dim(&self) -> usize {
        match self {
            Spatial::Euclidean(n) => *n,
            Spatial::FlatTorus(sides) => sides.len(),
        }
    }

    /// Shortest displacement from `a` to `b`; nearest image on the torus.
    pub fn displacement(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        match self {
            Spatial::Euclidean(_) => a.iter().zip(b).map(|(x, y)| y - x).collect(),
            Spatial::FlatTorus(sides) => a
                .iter()
                .zip(b)
                .zip(sides)
                .map(|((x, y), l)| {
                    let d = y - x;
                    d - l * (d / l).round()
                })
                .collect(),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        norm(&self.displacement(a, b))
    }

    /// Diameter of the spatial factor under `h`, if bounded.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            Spatial::Euclidean(_) => None,
            Spatial::FlatTorus(sides) => Some(0.5 * sides.iter().map(|l| l * l).sum::<f64>().sqrt()),
        }
    }

    /// Reduce coordinates into the fundamental domain `[0, Lᵢ)`.
    pub fn wrap(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Spatial::Euclidean(_) => x.to_vec(),
            Spatial::FlatTorus(sides) => x.iter().zip(sides).map(|(v, l)| v.rem_euclid(*l)).collect(),
        }
    }
}

pub type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type VectorFieldFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A user-supplied Lorentzian metric on a single chart of `ℝ^{dimension}`.
#[derive(Clone)]
pub struct CustomMetric {
    pub dimension: usize,
    pub metric: MetricFn,
    pub orientation: VectorFieldFn,
    pub label: String,
}

impl fmt::Debug for CustomMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMetric")
            .field("dimension", &self.dimension)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Family {
    /// Minkowski space of dimension `n + 1`.
    Minkowski {
        n: usize,
    },
    /// `I × S` with metric `-dt² + f(t)² h`.
    Grw {
        scale: TimeExpr,
        spatial: Spatial,
    },
    Custom(CustomMetric),
}

/// Christoffel symbols `Γ^a_{bc}` at one point, stored densely.
#[derive(Debug, Clone)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dim + b) * self.dim + c]
    }

    fn set(&mut self, a: usize, b: usize, c: usize, value: f64) {
        self.data[(a * self.dim + b) * self.dim + c] = value;
    }

    /// `Γ^a_{bc} v^b w^c`.
    pub fn contract(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|a| {
                let mut sum = 0.0;
                for b in 0..self.dim {
                    if v[b] == 0.0 {
                        continue;
                    }
                    for c in 0..self.dim {
                        sum += self.get(a, b, c) * v[b] * w[c];
                    }
                }
                sum
            })
            .collect()
    }
}

/// Endpoint of a geodesic together with its velocity and a parallel-transported frame.
#[derive(Debug, Clone)]
pub struct GeodesicEnd {
    pub point: Point,
    pub velocity: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Spacetime {
    family: Family,
}

impl Spacetime {
    pub fn minkowski(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("Minkowski space needs n >= 1".into()));
        }
        Ok(Self {
            family: Family::Minkowski { n },
        })
    }

    pub fn grw(scale: TimeExpr, spatial: Spatial) -> Result<Self> {
        if !scale.is_positive_scale() {
            return Err(Error::Argument(format!("scale factor `{scale}` must be positive")));
        }
        if spatial.dim() == 0 {
            return Err(Error::Argument("spatial factor must have dimension >= 1".into()));
        }
        if let Spatial::FlatTorus(sides) = &spatial {
            if sides.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(Error::Argument("torus side lengths must be positive".into()));
            }
        }
        Ok(Self {
            family: Family::Grw { scale, spatial },
        })
    }

    pub fn custom(metric: CustomMetric) -> Result<Self> {
        if metric.dimension < 2 {
            return Err(Error::Argument("custom metric needs dimension >= 2".into()));
        }
        Ok(Self {
            family: Family::Custom(metric),
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Manifold dimension `n + 1`.
    pub fn dimension(&self) -> usize {
        match &self.family {
            Family::Minkowski { n } => n + 1,
            Family::Grw { spatial, .. } => spatial.dim() + 1,
            Family::Custom(c) => c.dimension,
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.family, Family::Custom(_))
    }

    pub fn scale_factor(&self) -> Option<TimeExpr> {
        match &self.family {
            Family::Grw { scale, .. } => Some(*scale),
            _ => None,
        }
    }

    /// Spatial factor; Minkowski space reports Euclidean space.
    pub fn spatial(&self) -> Option<Spatial> {
        match &self.family {
            Family::Minkowski { n } => Some(Spatial::Euclidean(*n)),
            Family::Grw { spatial, .. } => Some(spatial.clone()),
            Family::Custom(_) => None,
        }
    }

    /// Open interval `I` of admissible time coordinates.
    pub fn time_interval(&self) -> (f64, f64) {
        match &self.family {
            Family::Grw { scale, .. } => scale.interval(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        if p.dim() != self.dimension() || p.coords.iter().any(|c| !c.is_finite()) {
            return false;
        }
        let (lo, hi) = self.time_interval();
        p.time() > lo && p.time() < hi
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dimension() {
            return Err(Error::Argument(format!(
                "point has {} coordinates, spacetime dimension is {}",
                p.dim(),
                self.dimension()
            )));
        }
        if !self.contains(p) {
            return Err(Error::Argument(format!(
                "point {:?} lies outside the chart domain",
                p.coords
            )));
        }
        Ok(())
    }

    fn check_vector(&self, v: &TangentVector) -> Result<()> {
        self.check_point(&v.base)?;
        if v.components.len() != self.dimension() {
            return Err(Error::Argument("tangent vector has wrong length".into()));
        }
        Ok(())
    }

    pub fn metric_at(&self, p: &Point) -> DMatrix<f64> {
        self.metric_at_coords(&p.coords)
    }

    fn metric_at_coords(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dimension();
        match &self.family {
            Family::Minkowski { .. } => {
                let mut g = DMatrix::identity(d, d);
                g[(0, 0)] = -1.0;
                g
            }
            Family::Grw { scale, .. } => {
                let a = scale.eval(x[0]);
                let mut g = DMatrix::identity(d, d) * (a * a);
                g[(0, 0)] = -1.0;
                g
            }
            Family::Custom(c) => (c.metric)(x),
        }
    }

    /// Time orientation `ϑ`, stored un-normalized.
    pub fn orientation_at(&self, p: &Point) -> TangentVector {
        let components = match &self.family {
            Family::Custom(c) => (c.orientation)(&p.coords),
            _ => {
                let mut e = vec![0.0; self.dimension()];
                e[0] = 1.0;
                e
            }
        };
        TangentVector {
            base: p.clone(),
            components,
        }
    }

    /// `g_p(v, w)` on raw component slices.
    pub fn inner_at(&self, p: &Point, v: &[f64], w: &[f64]) -> f64 {
        match &self.family {
            Family::Minkowski { .. } => -v[0] * w[0] + v[1..].iter().zip(&w[1..]).map(|(a, b)| a * b).sum::<f64>(),
            Family::Grw { scale, .. } => {
                let a = scale.eval(p.time());
                -v[0] * w[0] + a * a * v[1..].iter().zip(&w[1..]).map(|(a, b)| a * b).sum::<f64>()
            }
            Family::Custom(_) => bilinear(&self.metric_at(p), v, w),
        }
    }

    pub fn inner(&self, x: &TangentVector, y: &TangentVector) -> Result<f64> {
        if x.base != y.base {
            return Err(Error::Argument("tangent vectors are based at different points".into()));
        }
        self.check_vector(x)?;
        self.check_vector(y)?;
        Ok(self.inner_at(&x.base, &x.components, &y.components))
    }

    /// `‖X‖_g = √|g(X, X)|`.
    pub fn norm(&self, x: &TangentVector) -> Result<f64> {
        Ok(self.inner(x, x)?.abs().sqrt())
    }

    pub fn causal_class(&self, x: &TangentVector, tol: f64) -> CausalClass {
        self.classify_at(&x.base, &x.components, tol)
    }

    /// Classification with a relative nullity threshold: `|g(v,v)| < tol·|v|²` is null.
    pub fn classify_at(&self, p: &Point, v: &[f64], tol: f64) -> CausalClass {
        let euclid2: f64 = v.iter().map(|c| c * c).sum();
        if euclid2.sqrt() < tol {
            return CausalClass::ZERO;
        }
        let q = self.inner_at(p, v, v);
        let kind = if q.abs() < tol * euclid2 {
            CausalKind::Null
        } else if q < 0.0 {
            CausalKind::Timelike
        } else {
            return CausalClass::SPACELIKE;
        };
        let theta = self.orientation_at(p);
        let direction = if self.inner_at(p, v, &theta.components) < 0.0 {
            Direction::Future
        } else {
            Direction::Past
        };
        CausalClass {
            kind,
            direction: Some(direction),
        }
    }

    /// Number of negative eigenvalues of the metric matrix at `p`.
    pub fn negative_eigenvalues(&self, p: &Point) -> usize {
        let eig = SymmetricEigen::new(self.metric_at(p));
        eig.eigenvalues.iter().filter(|&&l| l < 0.0).count()
    }

    /// Index raising `g⁻¹ ω` for a covector `ω` at `p`.
    pub fn raise(&self, p: &Point, covector: &[f64]) -> Result<Vec<f64>> {
        match &self.family {
            Family::Minkowski { .. } => {
                let mut v = covector.to_vec();
                v[0] = -v[0];
                Ok(v)
            }
            Family::Grw { scale, .. } => {
                let a = scale.eval(p.time());
                let a2 = a * a;
                if !(a2 > 0.0) {
                    return Err(Error::Numerical("degenerate scale factor".into()));
                }
                let mut v: Vec<f64> = covector.iter().map(|c| c / a2).collect();
                v[0] = -covector[0];
                Ok(v)
            }
            Family::Custom(_) => {
                let inv = self
                    .metric_at(p)
                    .try_inverse()
                    .ok_or_else(|| Error::Numerical("singular metric matrix".into()))?;
                Ok((0..covector.len())
                    .map(|a| (0..covector.len()).map(|b| inv[(a, b)] * covector[b]).sum())
                    .collect())
            }
        }
    }

    /// Gradient `g⁻¹ df` with the differential taken by central differences of size `step`.
    pub fn gradient(&self, f: &dyn Fn(&Point) -> f64, p: &Point, step: f64) -> Result<TangentVector> {
        if !(step > 0.0) {
            return Err(Error::Argument("finite-difference step must be positive".into()));
        }
        self.check_point(p)?;
        let df = central_differential(f, p, step);
        let components = self.raise(p, &df)?;
        TangentVector::new(p.clone(), components)
    }

    pub fn christoffel(&self, p: &Point) -> Christoffel {
        let d = self.dimension();
        let mut gamma = Christoffel::zeros(d);
        match &self.family {
            Family::Minkowski { .. } => {}
            Family::Grw { scale, .. } => {
                let t = p.time();
                let a = scale.eval(t);
                let da = scale.derivative(t);
                for i in 1..d {
                    gamma.set(0, i, i, a * da);
                    gamma.set(i, 0, i, da / a);
                    gamma.set(i, i, 0, da / a);
                }
            }
            Family::Custom(_) => {
                let h = 1e-5;
                let inv = self.metric_at(p).try_inverse().unwrap_or_else(|| DMatrix::zeros(d, d));
                // dg[k] = ∂_k g
                let dg: Vec<DMatrix<f64>> = (0..d)
                    .map(|k| {
                        let mut plus = p.coords.clone();
                        let mut minus = p.coords.clone();
                        plus[k] += h;
                        minus[k] -= h;
                        (self.metric_at_coords(&plus) - self.metric_at_coords(&minus)) / (2.0 * h)
                    })
                    .collect();
                for a in 0..d {
                    for b in 0..d {
                        for c in 0..d {
                            let mut sum = 0.0;
                            for e in 0..d {
                                sum += inv[(a, e)] * (dg[b][(e, c)] + dg[c][(e, b)] - dg[e][(b, c)]);
                            }
                            gamma.set(a, b, c, 0.5 * sum);
                        }
                    }
                }
            }
        }
        gamma
    }

    /// `exp_p(X)`: the geodesic with initial velocity `X` evaluated at parameter 1.
    pub fn exp_map(&self, x: &TangentVector, steps: usize) -> Result<Point> {
        Ok(self.exp_map_with_frame(x, &[], steps)?.point)
    }

    /// Geodesic integration by fixed-step classical RK4, transporting `frame` in parallel.
    ///
    /// Minkowski geodesics are straight lines and are returned exactly.
    pub fn exp_map_with_frame(&self, x: &TangentVector, frame: &[Vec<f64>], steps: usize) -> Result<GeodesicEnd> {
        if steps == 0 {
            return Err(Error::Argument("geodesic integration needs steps >= 1".into()));
        }
        self.check_vector(x)?;
        let d = self.dimension();
        if frame.iter().any(|e| e.len() != d) {
            return Err(Error::Argument("frame vectors have wrong length".into()));
        }
        if let Family::Minkowski { .. } = self.family {
            let coords: Vec<f64> = x.base.coords.iter().zip(&x.components).map(|(p, v)| p + v).collect();
            return Ok(GeodesicEnd {
                point: Point::new(coords),
                velocity: x.components.clone(),
                frame: frame.to_vec(),
            });
        }

        let m = 2 + frame.len();
        let mut state: Vec<Vec<f64>> = Vec::with_capacity(m);
        state.push(x.base.coords.clone());
        state.push(x.components.clone());
        state.extend(frame.iter().cloned());
        let h = 1.0 / steps as f64;

        for k in 0..steps {
            match self.rk4_step(&state, h) {
                Some(next) => state = next,
                None => {
                    let theta = self.crossing_fraction(&state[0], &state[1], h);
                    return Err(Error::DomainEscape {
                        fraction: (k as f64 + theta) / steps as f64,
                    });
                }
            }
        }
        let point = Point::new(state[0].clone());
        if !self.contains(&point) {
            return Err(Error::DomainEscape { fraction: 1.0 });
        }
        Ok(GeodesicEnd {
            point,
            velocity: state[1].clone(),
            frame: state[2..].to_vec(),
        })
    }

    fn geodesic_rhs(&self, state: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
        let p = Point::new(state[0].clone());
        if !self.contains(&p) {
            return None;
        }
        let gamma = self.christoffel(&p);
        let v = &state[1];
        let mut out = Vec::with_capacity(state.len());
        out.push(v.clone());
        out.push(gamma.contract(v, v).into_iter().map(|a| -a).collect());
        for e in &state[2..] {
            out.push(gamma.contract(v, e).into_iter().map(|a| -a).collect());
        }
        Some(out)
    }

    fn rk4_step(&self, state: &[Vec<f64>], h: f64) -> Option<Vec<Vec<f64>>> {
        let axpy = |base: &[Vec<f64>], k: &[Vec<f64>], s: f64| -> Vec<Vec<f64>> {
            base.iter()
                .zip(k)
                .map(|(b, kk)| b.iter().zip(kk).map(|(x, y)| x + s * y).collect())
                .collect()
        };
        let k1 = self.geodesic_rhs(state)?;
        let k2 = self.geodesic_rhs(&axpy(state, &k1, h / 2.0))?;
        let k3 = self.geodesic_rhs(&axpy(state, &k2, h / 2.0))?;
        let k4 = self.geodesic_rhs(&axpy(state, &k3, h))?;
        let next: Vec<Vec<f64>> = state
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.iter()
                    .enumerate()
                    .map(|(j, x)| x + h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]))
                    .collect()
            })
            .collect();
        if self.contains(&Point::new(next[0].clone())) {
            Some(next)
        } else {
            None
        }
    }

    /// Fraction of a step after which the linear prediction crosses the time boundary.
    fn crossing_fraction(&self, x: &[f64], v: &[f64], h: f64) -> f64 {
        let (lo, hi) = self.time_interval();
        let t0 = x[0];
        let t1 = t0 + h * v[0];
        let boundary = if t1 <= lo {
            lo
        } else if t1 >= hi {
            hi
        } else {
            return 0.0;
        };
        if t1 == t0 {
            return 0.0;
        }
        ((boundary - t0) / (t1 - t0)).clamp(0.0, 1.0)
    }

    /// A `g`-orthonormal frame at `p` whose first vector is `ϑ/‖ϑ‖_g`.
    pub fn orthonormal_frame(&self, p: &Point) -> Result<Vec<Vec<f64>>> {
        let d = self.dimension();
        let theta = self.orientation_at(p).components;
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut signs: Vec<f64> = Vec::with_capacity(d);
        let mut candidates = vec![theta];
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            candidates.push(e);
        }
        for mut v in candidates {
            if frame.len() == d {
                break;
            }
            for (e, s) in frame.iter().zip(&signs) {
                let c = self.inner_at(p, &v, e) * s;
                for (vi, ei) in v.iter_mut().zip(e) {
                    *vi -= c * ei;
                }
            }
            let q = self.inner_at(p, &v, &v);
            if q.abs() < 1e-10 * v.iter().map(|x| x * x).sum::<f64>().max(1e-300) {
                continue;
            }
            let scale = q.abs().sqrt();
            frame.push(v.iter().map(|x| x / scale).collect());
            signs.push(q.signum());
        }
        if frame.len() != d || signs[0] >= 0.0 {
            return Err(Error::Numerical("could not build an orthonormal frame".into()));
        }
        Ok(frame)
    }

    pub fn has_conformal_chart(&self) -> bool {
        self.is_builtin()
    }

    /// Coordinates `(u, x)` of `p` in the conformal chart.
    pub fn to_conformal(&self, p: &Point) -> Vec<f64> {
        let mut c = p.coords.clone();
        if let Family::Grw { scale, .. } = &self.family {
            c[0] = scale.conformal_time(p.time());
        }
        c
    }

    pub fn from_conformal(&self, c: &[f64]) -> Point {
        let mut x = c.to_vec();
        if let Family::Grw { scale, .. } = &self.family {
            x[0] = scale.from_conformal_time(c[0]);
        }
        Point::new(x)
    }

    /// Open range of the conformal time coordinate.
    pub fn conformal_range(&self) -> (f64, f64) {
        match &self.family {
            Family::Grw { scale, .. } => scale.conformal_range(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Diagonal of `∂(t, x)/∂(u, x)` at `p`.
    pub fn conformal_jacobian(&self, p: &Point) -> Vec<f64> {
        let mut j = vec![1.0; self.dimension()];
        if let Family::Grw { scale, .. } = &self.family {
            j[0] = scale.eval(p.time());
        }
        j
    }

    /// Displacement of the chord from `a` to `b` in the conformal chart.
    ///
    /// Spatial parts use the nearest image on a torus. Without a conformal chart this
    /// is the plain coordinate difference.
    pub fn chord_displacement(&self, a: &Point, b: &Point) -> Vec<f64> {
        match &self.family {
            Family::Custom(_) => a.coords.iter().zip(&b.coords).map(|(x, y)| y - x).collect(),
            Family::Minkowski { .. } => a.coords.iter().zip(&b.coords).map(|(x, y)| y - x).collect(),
            Family::Grw { scale, spatial } => {
                let mut d = Vec::with_capacity(a.dim());
                d.push(scale.conformal_time(b.time()) - scale.conformal_time(a.time()));
                d.extend(spatial.displacement(a.spatial(), b.spatial()));
                d
            }
        }
    }

    /// The point at parameter `lambda ∈ [0, 1]` of the chord from `a` to `b`.
    pub fn chord_point(&self, a: &Point, b: &Point, lambda: f64) -> Point {
        let delta = self.chord_displacement(a, b);
        if self.has_conformal_chart() {
            let c: Vec<f64> = self
                .to_conformal(a)
                .iter()
                .zip(&delta)
                .map(|(x, d)| x + lambda * d)
                .collect();
            self.from_conformal(&c)
        } else {
            Point::new(
                a.coords
                    .iter()
                    .zip(&delta)
                    .map(|(x, d)| x + lambda * d)
                    .collect::<Vec<_>>(),
            )
        }
    }

    /// Causal class of the chord from `a` to `b`.
    ///
    /// With a conformal chart the chord is the straight segment in `(u, x)` and is
    /// classified with the flat metric there. Otherwise the coordinate chord is
    /// classified with the metric at its midpoint.
    pub fn chord_class(&self, a: &Point, b: &Point, tol: f64) -> CausalClass {
        let delta = self.chord_displacement(a, b);
        if self.has_conformal_chart() {
            let flat = Spacetime {
                family: Family::Minkowski {
                    n: self.dimension() - 1,
                },
            };
            flat.classify_at(&Point::new(self.to_conformal(a)), &delta, tol)
        } else {
            let mid = self.chord_point(a, b, 0.5);
            self.classify_at(&mid, &delta, tol)
        }
    }

    /// Distance in the induced metric of the slice `{t = const}` through `p` and `q`.
    pub fn slice_distance(&self, p: &Point, q: &Point) -> Result<f64> {
        if p.time() != q.time() {
            return Err(Error::Argument("points do not share a time slice".into()));
        }
        match &self.family {
            Family::Minkowski { n } => Ok(Spatial::Euclidean(*n).distance(p.spatial(), q.spatial())),
            Family::Grw { scale, spatial } => Ok(scale.eval(p.time()) * spatial.distance(p.spatial(), q.spatial())),
            Family::Custom(_) => Err(Error::Unsupported(
                "slice distance is only available for built-in families".into(),
            )),
        }
    }

    /// Whether `a` and `b` represent the same point of the manifold.
    pub fn same_point(&self, a: &Point, b: &Point) -> bool {
        if a.dim() != b.dim() || a.time() != b.time() {
            return false;
        }
        match &self.family {
            Family::Grw {
                spatial: spatial @ Spatial::FlatTorus(_),
                ..
            } => spatial
                .displacement(a.spatial(), b.spatial())
                .iter()
                .all(|d| d.abs() <= 1e-12),
            _ => a == b,
        }
    }

    /// A random point from a fixed compact region used by probes and property checks.
    ///
    /// Time in `[0.5, 1.5]`, space in `[-1, 1]ⁿ` (or one fundamental domain of the torus).
    pub fn sample_region<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let d = self.dimension();
        let mut coords = Vec::with_capacity(d);
        match &self.family {
            Family::Minkowski { .. } | Family::Custom(_) => {
                for _ in 0..d {
                    coords.push(rng.gen_range(-1.0..1.0));
                }
            }
            Family::Grw { spatial, .. } => {
                coords.push(rng.gen_range(0.5..1.5));
                match spatial {
                    Spatial::Euclidean(n) => {
                        for _ in 0..*n {
                            coords.push(rng.gen_range(-1.0..1.0));
                        }
                    }
                    Spatial::FlatTorus(sides) => {
                        for l in sides {
                            coords.push(rng.gen_range(0.0..*l));
                        }
                    }
                }
            }
        }
        Point::new(coords)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn bilinear(g: &DMatrix<f64>, v: &[f64], w: &[f64]) -> f64 {
    let d = v.len();
    let mut sum = 0.0;
    for a in 0..d {
        for b in 0..d {
            sum += g[(a, b)] * v[a] * w[b];
        }
    }
    sum
}

pub(crate) fn central_differential(f: &dyn Fn(&Point) -> f64, p: &Point, step: f64) -> Vec<f64> {
    (0..p.dim())
        .map(|i| {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.coords[i] += step;
            minus.coords[i] -= step;
            (f(&plus) - f(&minus)) / (2.0 * step)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn torus_linear() -> Spacetime {
        Spacetime::grw(TimeExpr::T, Spatial::FlatTorus(vec![1.0])).unwrap()
    }

    fn v(base: &[f64], c: &[f64]) -> TangentVector {
        TangentVector::new(Point::new(base.to_vec()), c.to_vec()).unwrap()
    }

    #[test]
    fn inner_examples() {
        let m = Spacetime::minkowski(1).unwrap();
        let e0 = v(&[0.0, 0.0], &[1.0, 0.0]);
        assert_eq!(m.inner(&e0, &e0).unwrap(), -1.0);
        let null = v(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(m.inner(&null, &null).unwrap(), 0.0);

        let grw = torus_linear();
        let x = v(&[2.0, 0.0], &[0.0, 1.0]);
        assert_eq!(grw.inner(&x, &x).unwrap(), 4.0);
    }

    #[test]
    fn inner_rejects_mismatched_bases() {
        let m = Spacetime::minkowski(1).unwrap();
        let a = v(&[0.0, 0.0], &[1.0, 0.0]);
        let b = v(&[0.0, 1.0], &[1.0, 0.0]);
        assert!(matches!(m.inner(&a, &b), Err(Error::Argument(_))));
    }

    #[test]
    fn causal_class_examples() {
        let m = Spacetime::minkowski(3).unwrap();
        let tol = DEFAULT_CAUSAL_TOL;
        let c = m.causal_class(&v(&[0.0; 4], &[1.0, 0.0, 0.0, 0.0]), tol);
        assert_eq!(c.kind, CausalKind::Timelike);
        assert_eq!(c.direction, Some(Direction::Future));
        let c = m.causal_class(&v(&[0.0; 4], &[-1.0, 1.0, 0.0, 0.0]), tol);
        assert_eq!(c.kind, CausalKind::Null);
        assert_eq!(c.direction, Some(Direction::Past));
        let c = m.causal_class(&v(&[0.0; 4], &[0.0, 1.0, 0.0, 0.0]), tol);
        assert_eq!(c, CausalClass::SPACELIKE);
        let c = m.causal_class(&v(&[0.0; 4], &[0.0; 4]), tol);
        assert_eq!(c, CausalClass::ZERO);
    }

    #[test]
    fn classification_is_scale_invariant() {
        let m = Spacetime::minkowski(1).unwrap();
        for scale in [1e-6, 1.0, 1e6] {
            let c = m.causal_class(&v(&[0.0, 0.0], &[scale, scale * (1.0 + 1e-12)]), 1e-9);
            assert_eq!(c.kind, CausalKind::Null, "scale {scale}");
        }
    }

    #[test]
    fn gradient_examples() {
        let m1 = Spacetime::minkowski(1).unwrap();
        let g = m1
            .gradient(&|p: &Point| p.time(), &Point::new(vec![0.3, 0.1]), 1e-5)
            .unwrap();
        assert_relative_eq!(g.components[0], -1.0, epsilon = 1e-9);
        assert_relative_eq!(g.components[1], 0.0, epsilon = 1e-9);

        let m2 = Spacetime::minkowski(2).unwrap();
        let f = |p: &Point| p.coords[0] + 0.5 * p.coords[1];
        let g = m2.gradient(&f, &Point::new(vec![0.0, 0.0, 0.0]), 1e-5).unwrap();
        assert_relative_eq!(g.components[0], -1.0, epsilon = 1e-9);
        assert_relative_eq!(g.components[1], 0.5, epsilon = 1e-9);
        assert_relative_eq!(g.components[2], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn gradient_of_phi_of_t_on_grw() {
        let grw = Spacetime::grw(TimeExpr::T, Spatial::Euclidean(2)).unwrap();
        let p = Point::new(vec![1.3, 0.2, -0.4]);
        let g = grw.gradient(&|q: &Point| q.time() * q.time(), &p, 1e-5).unwrap();
        assert_relative_eq!(g.components[0], -2.6, epsilon = 1e-8);
        assert_relative_eq!(g.components[1], 0.0, epsilon = 1e-9);
        assert_relative_eq!(g.components[2], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn exp_map_minkowski_is_straight() {
        let m = Spacetime::minkowski(2).unwrap();
        let p = m.exp_map(&v(&[0.0; 3], &[1.0, 2.0, 0.0]), 1).unwrap();
        assert_eq!(p.coords, vec![1.0, 2.0, 0.0]);
    }

    #[test]
    fn exp_map_vertical_grw_geodesic() {
        let grw = torus_linear();
        for steps in [4, 16, 64] {
            let p = grw.exp_map(&v(&[1.0, 0.0], &[1.0, 0.0]), steps).unwrap();
            assert_relative_eq!(p.coords[0], 2.0, epsilon = 1e-12);
            assert_relative_eq!(p.coords[1], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn exp_map_reports_domain_escape() {
        let grw = torus_linear();
        match grw.exp_map(&v(&[0.5, 0.0], &[-1.0, 0.0]), 10) {
            Err(Error::DomainEscape { fraction }) => {
                assert!((fraction - 0.5).abs() < 1e-9, "fraction {fraction}")
            }
            other => panic!("expected domain escape, got {other:?}"),
        }
    }

    #[test]
    fn exp_map_self_converges_for_tilted_geodesic() {
        // RK4 error drops by ~16 per step doubling.
        let grw = torus_linear();
        let x = v(&[1.0, 0.0], &[0.3, 0.4]);
        let fine = grw.exp_map(&x, 512).unwrap();
        let e1 = norm(&sub(&grw.exp_map(&x, 8).unwrap().coords, &fine.coords));
        let e2 = norm(&sub(&grw.exp_map(&x, 16).unwrap().coords, &fine.coords));
        assert!(e2 < e1 / 10.0, "e1 {e1} e2 {e2}");
    }

    #[test]
    fn geodesics_preserve_speed_and_transport_preserves_inner_products() {
        let grw = Spacetime::grw(TimeExpr::TSquared, Spatial::Euclidean(2)).unwrap();
        let p = Point::new(vec![1.0, 0.0, 0.0]);
        let x = v(&p.coords, &[0.5, 0.3, -0.2]);
        let frame = grw.orthonormal_frame(&p).unwrap();
        let end = grw.exp_map_with_frame(&x, &frame, 200).unwrap();
        let g0 = grw.inner_at(&p, &x.components, &x.components);
        let g1 = grw.inner_at(&end.point, &end.velocity, &end.velocity);
        assert_relative_eq!(g0, g1, epsilon = 1e-9);
        for a in 0..3 {
            for b in 0..3 {
                let expected = if a != b {
                    0.0
                } else if a == 0 {
                    -1.0
                } else {
                    1.0
                };
                let got = grw.inner_at(&end.point, &end.frame[a], &end.frame[b]);
                assert_relative_eq!(got, expected, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn custom_metric_christoffels_match_closed_form() {
        let grw = Spacetime::grw(TimeExpr::ExpT, Spatial::Euclidean(1)).unwrap();
        let custom = Spacetime::custom(CustomMetric {
            dimension: 2,
            metric: Arc::new(|x: &[f64]| {
                let a = x[0].exp();
                DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, a * a])
            }),
            orientation: Arc::new(|_| vec![1.0, 0.0]),
            label: "exp warped".into(),
        })
        .unwrap();
        let p = Point::new(vec![0.4, 0.1]);
        let a = grw.christoffel(&p);
        let b = custom.christoffel(&p);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_relative_eq!(a.get(i, j, k), b.get(i, j, k), epsilon = 1e-7);
                }
            }
        }
    }

    #[test]
    fn signature_holds_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let families = [
            Spacetime::minkowski(3).unwrap(),
            Spacetime::grw(TimeExpr::T, Spatial::FlatTorus(vec![1.0, 2.0])).unwrap(),
            Spacetime::grw(TimeExpr::ExpT, Spatial::Euclidean(3)).unwrap(),
        ];
        for st in &families {
            for _ in 0..1000 {
                let p = st.sample_region(&mut rng);
                assert_eq!(st.negative_eigenvalues(&p), 1);
            }
        }
    }

    #[test]
    fn torus_nearest_image() {
        let s = Spatial::FlatTorus(vec![1.0, 1.0]);
        let d = s.displacement(&[0.1, 0.9], &[0.9, 0.1]);
        assert_relative_eq!(d[0], -0.2, epsilon = 1e-12);
        assert_relative_eq!(d[1], 0.2, epsilon = 1e-12);
        assert_eq!(s.diameter(), Some(0.5 * 2f64.sqrt()));
    }

    #[test]
    fn conformal_chords_of_null_curves_are_null() {
        let grw = torus_linear();
        // Null curve x = log t is a straight line in (u, x).
        let a = Point::new(vec![1.0, 0.0]);
        let b = Point::new(vec![1.3, 1.3f64.ln()]);
        let c = grw.chord_class(&a, &b, 1e-9);
        assert_eq!(c.kind, CausalKind::Null);
        assert_eq!(c.direction, Some(Direction::Future));
    }

    fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }
}
