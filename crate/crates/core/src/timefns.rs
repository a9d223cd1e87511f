//! Time and temporal functions: evaluation, gradients, monotonicity probing and
//! sample-based anti-Lipschitz constants.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::TimeExpr;
use crate::geometry::{central_differential, Family, Point, Spacetime, TangentVector};
use crate::sampling;

/// Finite-difference step used when no closed-form differential is available.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type CovectorFn = Arc<dyn Fn(&Point) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum TimeFunctionKind {
    CoordinateT,
    PhiOfT(TimeExpr),
    /// Cosmological time of a GRW spacetime over `I = (0, b)`, equal to `t`.
    CosmologicalGrw,
    Custom(String),
}

/// A scalar field `τ` with an optional closed-form differential.
#[derive(Clone)]
pub struct TimeFunctionHandle {
    kind: TimeFunctionKind,
    custom_eval: Option<ScalarFn>,
    custom_differential: Option<CovectorFn>,
}

impl fmt::Debug for TimeFunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeFunctionHandle")
            .field("kind", &self.kind)
            .field("closed_form_gradient", &self.has_closed_form_gradient())
            .finish()
    }
}

impl TimeFunctionHandle {
    pub fn coordinate_t() -> Self {
        Self {
            kind: TimeFunctionKind::CoordinateT,
            custom_eval: None,
            custom_differential: None,
        }
    }

    pub fn phi_of_t(phi: TimeExpr) -> Self {
        Self {
            kind: TimeFunctionKind::PhiOfT(phi),
            custom_eval: None,
            custom_differential: None,
        }
    }

    /// Cosmological time on a GRW spacetime whose interval is `(0, b)`.
    pub fn cosmological(st: &Spacetime) -> Result<Self> {
        match st.family() {
            Family::Grw { scale, .. } if scale.interval().0 == 0.0 => Ok(Self {
                kind: TimeFunctionKind::CosmologicalGrw,
                custom_eval: None,
                custom_differential: None,
            }),
            _ => Err(Error::Unsupported(
                "cosmological time is only regular on GRW spacetimes over (0, b)".into(),
            )),
        }
    }

    pub fn custom(
        label: impl Into<String>,
        eval: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        differential: Option<CovectorFn>,
    ) -> Self {
        Self {
            kind: TimeFunctionKind::Custom(label.into()),
            custom_eval: Some(Arc::new(eval)),
            custom_differential: differential,
        }
    }

    pub fn kind(&self) -> &TimeFunctionKind {
        &self.kind
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match &self.kind {
            TimeFunctionKind::CoordinateT | TimeFunctionKind::CosmologicalGrw => p.time(),
            TimeFunctionKind::PhiOfT(phi) => phi.eval(p.time()),
            TimeFunctionKind::Custom(_) => (self.custom_eval.as_ref().expect("custom eval"))(p),
        }
    }

    /// If `τ = φ(t)` for a whitelisted `φ`, that `φ`.
    pub fn time_profile(&self) -> Option<TimeExpr> {
        match &self.kind {
            TimeFunctionKind::CoordinateT | TimeFunctionKind::CosmologicalGrw => Some(TimeExpr::T),
            TimeFunctionKind::PhiOfT(phi) => Some(*phi),
            TimeFunctionKind::Custom(_) => None,
        }
    }

    pub fn has_closed_form_gradient(&self) -> bool {
        !matches!(self.kind, TimeFunctionKind::Custom(_)) || self.custom_differential.is_some()
    }

    pub fn closed_form_differential(&self, p: &Point) -> Option<Vec<f64>> {
        if let Some(phi) = self.time_profile() {
            let mut d = vec![0.0; p.dim()];
            d[0] = phi.derivative(p.time());
            return Some(d);
        }
        self.custom_differential.as_ref().map(|f| f(p))
    }

    pub fn differential(&self, p: &Point) -> Vec<f64> {
        self.closed_form_differential(p)
            .unwrap_or_else(|| self.differential_fd(p, DEFAULT_FD_STEP))
    }

    pub fn differential_fd(&self, p: &Point, step: f64) -> Vec<f64> {
        central_differential(&|q: &Point| self.eval(q), p, step)
    }

    /// `∇τ` at `p`, closed form when available.
    pub fn gradient(&self, st: &Spacetime, p: &Point) -> Result<TangentVector> {
        match self.closed_form_differential(p) {
            Some(df) => {
                st.check_point(p)?;
                TangentVector::new(p.clone(), st.raise(p, &df)?)
            }
            None => self.gradient_fd(st, p, DEFAULT_FD_STEP),
        }
    }

    pub fn gradient_fd(&self, st: &Spacetime, p: &Point, step: f64) -> Result<TangentVector> {
        st.gradient(&|q: &Point| self.eval(q), p, step)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub trials: usize,
    pub chords: usize,
    /// Smallest observed increment of `τ` per unit curve parameter.
    pub min_increment: f64,
    pub violation: bool,
    pub worst_trial: Option<usize>,
}

const PROBE_STEPS: usize = 8;
const PROBE_STEP: f64 = 0.05;
const PROBE_TIMELIKE_MARGIN: f64 = 0.05;

/// Random future-directed causal polylines; flags any chord along which `τ` fails to increase.
pub fn monotonicity_probe(
    st: &Spacetime,
    tau: &TimeFunctionHandle,
    trials: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    if trials == 0 {
        return Err(Error::Argument("monotonicity probe needs trials >= 1".into()));
    }
    let d = st.dimension();
    let mut min_increment = f64::INFINITY;
    let mut worst_trial = None;
    let mut chords = 0;
    for trial in 0..trials {
        let mut rng = sampling::rng(seed, 0x6d6f6e6f, trial as u64);
        let mut current = st.sample_region(&mut rng);
        for _ in 0..PROBE_STEPS {
            let frame = st.orthonormal_frame(&current)?;
            let mut direction: Vec<f64> = (1..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len > 0.0 {
                direction.iter_mut().for_each(|x| *x /= len);
            }
            let ratio = rng.gen_range(0.0..(1.0 - PROBE_TIMELIKE_MARGIN));
            let magnitude = rng.gen_range(0.5..1.5);
            let mut velocity = frame[0].clone();
            for (i, u) in direction.iter().enumerate() {
                for (vj, ej) in velocity.iter_mut().zip(&frame[i + 1]) {
                    *vj += ratio * u * ej;
                }
            }
            velocity.iter_mut().for_each(|x| *x *= magnitude);
            let next = Point::new(
                current
                    .coords
                    .iter()
                    .zip(&velocity)
                    .map(|(x, v)| x + PROBE_STEP * v)
                    .collect::<Vec<_>>(),
            );
            if !st.contains(&next) {
                break;
            }
            let increment = (tau.eval(&next) - tau.eval(&current)) / PROBE_STEP;
            chords += 1;
            if increment < min_increment {
                min_increment = increment;
                worst_trial = Some(trial);
            }
            current = next;
        }
    }
    Ok(MonotonicityReport {
        trials,
        chords,
        min_increment,
        violation: !(min_increment > 0.0),
        worst_trial,
    })
}

/// Future-directed causal directions, unit in the coordinate Euclidean metric, at `p`.
///
/// The grid is nested in `grid`: it contains the future causal members of the first
/// `grid` sphere directions plus, for each of them, the future null direction in the
/// plane it spans with `ϑ`.
pub fn future_cone_grid(st: &Spacetime, p: &Point, grid: usize) -> Vec<Vec<f64>> {
    let d = st.dimension();
    let theta = st.orientation_at(p).components;
    let theta_norm = st.inner_at(p, &theta, &theta).abs().sqrt();
    let theta_hat: Vec<f64> = theta.iter().map(|x| x / theta_norm).collect();
    let mut out = Vec::with_capacity(2 * grid);
    for k in 0..grid as u64 {
        let w = sampling::sphere_direction(k, d);
        let q = st.inner_at(p, &w, &w);
        if q <= 0.0 && st.inner_at(p, &w, &theta) < 0.0 {
            out.push(w.clone());
        }
        let along = st.inner_at(p, &w, &theta_hat);
        let perp: Vec<f64> = w.iter().zip(&theta_hat).map(|(a, b)| a + along * b).collect();
        let qp = st.inner_at(p, &perp, &perp);
        if qp > 1e-14 {
            let s = qp.sqrt();
            let null: Vec<f64> = theta_hat.iter().zip(&perp).map(|(a, b)| a + b / s).collect();
            let n = null.iter().map(|x| x * x).sum::<f64>().sqrt();
            out.push(null.iter().map(|x| x / n).collect());
        }
    }
    out
}

/// Minimum of `g(∇f, X)` over the region and a grid of future causal unit vectors `X`.
///
/// A positive value certifies `g(∇f, X) ≥ C‖X‖` on the sample, with `‖·‖` the
/// coordinate Euclidean norm.
pub fn anti_lipschitz_constant(st: &Spacetime, f: &TimeFunctionHandle, region: &[Point], grid: usize) -> Result<f64> {
    if grid < 8 {
        return Err(Error::Argument("cone grid must have at least 8 directions".into()));
    }
    if region.is_empty() {
        return Err(Error::Argument("region sample is empty".into()));
    }
    let mut min = f64::INFINITY;
    for p in region {
        let grad = f.gradient(st, p)?;
        for x in future_cone_grid(st, p, grid) {
            min = min.min(st.inner_at(p, &grad.components, &x));
        }
    }
    if min > 0.0 {
        Ok(min)
    } else {
        Err(Error::NotTemporalOnSample { constant: min })
    }
}
