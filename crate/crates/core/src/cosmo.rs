//! Cosmological time on GRW spacetimes over `(0, b)`: closed form, a brute-force
//! lower bound, generators, and the collapse of level sets to a single initial
//! point.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curves::{lorentzian_length, CausalSegment};
use crate::error::{Error, Result};
use crate::geometry::{norm, Direction, Family, Point, Spacetime, Spatial};
use crate::metricspace::FinitePointCloud;
use crate::nulldist::{estimate, EstimateOptions};
use crate::sampling;
use crate::timefns::TimeFunctionHandle;

/// Vertices per brute-force polyline.
const BRUTE_VERTICES: usize = 8;
/// Brute-force curves start at `t = BRUTE_START · t_p`.
const BRUTE_START: f64 = 1e-3;

fn grw_from_zero(st: &Spacetime) -> Result<()> {
    match st.family() {
        Family::Grw { scale, .. } if scale.interval().0 == 0.0 => Ok(()),
        _ => Err(Error::Unsupported(
            "cosmological time needs a GRW spacetime over (0, b)".into(),
        )),
    }
}

/// `τ_g(p) = t`.
pub fn tau_g(st: &Spacetime, p: &Point) -> Result<f64> {
    grw_from_zero(st)?;
    st.check_point(p)?;
    Ok(p.time())
}

/// Largest Lorentzian length among `curve_samples` random past-directed causal
/// polylines from `p` down to `t = 10⁻³ t_p`; a lower bound for `τ_g(p)`.
///
/// Polylines are monotone in conformal time. Each spatial step is a fraction `ρ`
/// of the conformal time step, with the wiggle amplitude `ρ ~ U³` drawn per curve,
/// so the chords stay causal by construction.
pub fn tau_g_bruteforce(st: &Spacetime, p: &Point, curve_samples: usize, seed: u64) -> Result<f64> {
    grw_from_zero(st)?;
    st.check_point(p)?;
    let spatial = st.spatial().expect("GRW has a spatial factor");
    let n = spatial.dim();
    let t0 = BRUTE_START * p.time();
    let lengths: Vec<f64> = (0..curve_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = sampling::rng(seed, k as u64, 0);
            let rho: f64 = rng.gen::<f64>().powi(3);
            let mut times: Vec<f64> = (0..BRUTE_VERTICES - 2).map(|_| rng.gen_range(t0..p.time())).collect();
            times.push(t0);
            times.sort_by(|a, b| b.total_cmp(a));
            let mut pts = vec![p.clone()];
            let mut cur = st.to_conformal(p);
            for &t in &times {
                let mut next = cur.clone();
                next[0] = st.to_conformal(&Point::new(vec![t; n + 1]))[0];
                let du = cur[0] - next[0];
                let w = sampling::sphere_direction(rng.gen_range(0..1u64 << 20), n);
                let amp = rho * du * rng.gen::<f64>();
                for (x, wi) in next[1..].iter_mut().zip(&w) {
                    *x += amp * wi;
                }
                let mut q = st.from_conformal(&next);
                q.coords[0] = t;
                pts.push(q);
                cur = next;
            }
            let seg = CausalSegment::new(Direction::Past, pts)?;
            lorentzian_length(st, &seg)
        })
        .collect::<Result<_>>()?;
    Ok(lengths.into_iter().fold(0.0, f64::max))
}

/// The vertical geodesic through `q`, parametrized by `t ∈ (0, t_q]`.
#[derive(Debug, Clone, Serialize)]
pub struct Generator {
    pub foot: Point,
    /// `lim_{t→0} γ(t)` in the product chart.
    pub extension_at_zero: Vec<f64>,
}

impl Generator {
    pub fn at(&self, t: f64) -> Point {
        let mut c = self.foot.coords.clone();
        c[0] = t;
        Point::new(c)
    }

    pub fn velocity(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.foot.dim()];
        v[0] = 1.0;
        v
    }
}

pub fn generator_at(st: &Spacetime, q: &Point) -> Result<Generator> {
    grw_from_zero(st)?;
    st.check_point(q)?;
    let mut ext = q.coords.clone();
    ext[0] = 0.0;
    Ok(Generator {
        foot: q.clone(),
        extension_at_zero: ext,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorCheck {
    pub foot: Point,
    pub unit_speed_residual: f64,
    pub geodesic_residual: f64,
    pub tau_identity_error: f64,
    pub gradient_residual: f64,
    pub pass: bool,
}

/// Unit speed, geodesic equation, `τ_g ∘ γ = id` and `∇τ_g(q) = −γ'(t_q)`, sampled at
/// `samples` parameters in `(0, t_q]`.
pub fn generator_checks(st: &Spacetime, q: &Point, samples: usize) -> Result<GeneratorCheck> {
    let gen = generator_at(st, q)?;
    let tau = TimeFunctionHandle::cosmological(st)?;
    let v = gen.velocity();
    let (mut unit, mut geo, mut ident) = (0.0f64, 0.0f64, 0.0f64);
    for k in 1..=samples.max(1) {
        let t = q.time() * k as f64 / samples.max(1) as f64;
        let x = gen.at(t);
        unit = unit.max((st.inner_at(&x, &v, &v) + 1.0).abs());
        // γ'' = 0 in the product chart, so the residual is Γ(γ', γ').
        geo = geo.max(norm(&st.christoffel(&x).contract(&v, &v)));
        ident = ident.max((tau_g(st, &x)? - t).abs());
    }
    let grad = tau.gradient(st, q)?;
    let gradient_residual = grad
        .components
        .iter()
        .zip(&v)
        .map(|(g, w)| (g + w).abs())
        .fold(0.0, f64::max);
    Ok(GeneratorCheck {
        foot: q.clone(),
        unit_speed_residual: unit,
        geodesic_residual: geo,
        tau_identity_error: ident,
        gradient_residual,
        pass: unit <= 1e-12 && geo < 1e-8 && ident == 0.0 && gradient_residual <= 1e-9,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub t: f64,
    pub diam_ht: f64,
    pub max_pair_nulldist: f64,
    /// `sup_x d̂(x, z_K) + t_K` with `z_K` the deepest generator-tail point.
    pub bigbang_distance: f64,
    pub bigbang_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HausdorffRow {
    pub t: f64,
    pub t_other: f64,
    pub hausdorff: f64,
    pub bound: f64,
    pub excess: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CauchyCertificate {
    /// Generator-tail points `(t_k, x₀)`.
    pub points: Vec<Point>,
    /// `(i, j, d̂ upper, |t_i − t_j| + 1e-6)`.
    pub pairs: Vec<(usize, usize, f64, f64)>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Hypothesis {
    Met,
    NotMet(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct BigBangReport {
    pub hypothesis: Hypothesis,
    pub levels: Vec<LevelSummary>,
    pub hausdorff_rows: Vec<HausdorffRow>,
    pub cauchy_certificate: CauchyCertificate,
    pub monotone: bool,
    pub caveat: String,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct BigBangOptions {
    pub points_per_level: usize,
    pub seed: u64,
    pub tol: f64,
    pub estimate: EstimateOptions,
}

impl Default for BigBangOptions {
    fn default() -> Self {
        Self {
            points_per_level: 32,
            seed: 0,
            tol: 1e-3,
            estimate: EstimateOptions {
                apexes: 2,
                restarts: 2,
                ..Default::default()
            },
        }
    }
}

/// Level-set samples: a Halton lattice on the torus shifted by a seeded offset.
pub fn torus_lattice(sides: &[f64], count: usize, seed: u64, level: u64) -> Vec<Vec<f64>> {
    let mut rng = sampling::rng(seed, level, 0x1a77);
    let shift: Vec<f64> = sides.iter().map(|_| rng.gen()).collect();
    (0..count as u64)
        .map(|i| {
            let h = sampling::halton(i + 1, sides.len());
            h.iter()
                .zip(&shift)
                .zip(sides)
                .map(|((a, s), l)| ((a + s) % 1.0) * l)
                .collect()
        })
        .collect()
}

/// Sample each level set `M_t` of a GRW torus, estimate null distances within and
/// across levels, and compare with the warped diameters and the generator tail
/// representing the initial point.
pub fn bigbang_experiment(st: &Spacetime, t_list: &[f64], opts: &BigBangOptions) -> Result<BigBangReport> {
    let Family::Grw {
        scale,
        spatial: Spatial::FlatTorus(sides),
    } = st.family()
    else {
        return Err(Error::Unsupported("the Big Bang experiment needs a GRW torus".into()));
    };
    if t_list.is_empty() || t_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Argument("t_list must be strictly decreasing".into()));
    }
    if opts.points_per_level < 2 {
        return Err(Error::Argument("need at least 2 points per level".into()));
    }
    let hypothesis = if scale.vanishes_at_zero() {
        Hypothesis::Met
    } else {
        Hypothesis::NotMet(format!(
            "diam of the level sets does not shrink: f = {scale} does not vanish at t = 0"
        ))
    };
    let tau = TimeFunctionHandle::cosmological(st).unwrap_or_else(|_| TimeFunctionHandle::coordinate_t());
    let diam_s = 0.5 * sides.iter().map(|l| l * l).sum::<f64>().sqrt();
    let m = opts.points_per_level;

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (li, &t) in t_list.iter().enumerate() {
        for (k, x) in torus_lattice(sides, m, opts.seed, li as u64).into_iter().enumerate() {
            let mut c = vec![t];
            c.extend(x);
            let p = Point::new(c);
            st.check_point(&p)?;
            points.push(p);
            labels.push(format!("L{li}P{k}"));
        }
    }
    let total = points.len();
    let pairs: Vec<(usize, usize)> = (0..total).flat_map(|i| (i + 1..total).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| Ok(estimate(st, &tau, &points[i], &points[j], &opts.estimate)?.upper))
        .collect::<Result<_>>()?;
    let mut dist = vec![vec![0.0; total]; total];
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        dist[i][j] = v;
        dist[j][i] = v;
    }
    let raw_max = |li: usize| {
        let r = li * m..(li + 1) * m;
        let mut best: f64 = 0.0;
        for i in r.clone() {
            for j in r.clone() {
                best = best.max(dist[i][j]);
            }
        }
        best
    };
    let cloud = FinitePointCloud::from_upper_estimates(labels, dist.clone())?;
    let level_idx = |li: usize| -> Vec<usize> { (li * m..(li + 1) * m).collect() };

    // Generator tail through the first sample of the first level.
    let x0 = points[0].spatial().to_vec();
    let tail: Vec<Point> = t_list
        .iter()
        .map(|&t| {
            let mut c = vec![t];
            c.extend(x0.iter().copied());
            Point::new(c)
        })
        .collect();
    let mut cert_pairs = Vec::new();
    for i in 0..tail.len() {
        for j in i + 1..tail.len() {
            let e = estimate(st, &tau, &tail[i], &tail[j], &opts.estimate)?;
            cert_pairs.push((i, j, e.upper, (t_list[i] - t_list[j]).abs() + 1e-6));
        }
    }
    let cert_pass = cert_pairs.iter().all(|(_, _, v, b)| v <= b);

    let deepest = tail.last().expect("nonempty t_list");
    let t_k = *t_list.last().expect("nonempty t_list");
    let diam_k = scale.eval(t_k) * diam_s;
    let mut levels = Vec::with_capacity(t_list.len());
    for (li, &t) in t_list.iter().enumerate() {
        let to_tail: Vec<f64> = points[li * m..(li + 1) * m]
            .par_iter()
            .map(|x| Ok(estimate(st, &tau, x, deepest, &opts.estimate)?.upper))
            .collect::<Result<_>>()?;
        levels.push(LevelSummary {
            t,
            diam_ht: scale.eval(t) * diam_s,
            max_pair_nulldist: raw_max(li),
            bigbang_distance: to_tail.iter().copied().fold(0.0, f64::max) + t_k,
            bigbang_bound: t + diam_k,
        });
    }

    let mut hausdorff_rows = Vec::new();
    for i in 0..t_list.len() {
        for j in i + 1..t_list.len() {
            let h = cloud.hausdorff(&level_idx(i), &level_idx(j))?;
            let dt = (t_list[i] - t_list[j]).abs();
            let bound = dt + levels[i].diam_ht.max(levels[j].diam_ht) + opts.tol;
            hausdorff_rows.push(HausdorffRow {
                t: t_list[i],
                t_other: t_list[j],
                hausdorff: h,
                bound,
                excess: h - dt,
                pass: h <= bound,
            });
        }
    }

    let consecutive: Vec<&HausdorffRow> = hausdorff_rows
        .iter()
        .filter(|r| t_list.windows(2).any(|w| w[0] == r.t && w[1] == r.t_other))
        .collect();
    let monotone = levels
        .windows(2)
        .all(|w| w[1].diam_ht < w[0].diam_ht && w[1].max_pair_nulldist < w[0].max_pair_nulldist)
        && consecutive.windows(2).all(|w| w[1].excess <= w[0].excess);
    let bounded = levels
        .iter()
        .all(|l| l.max_pair_nulldist <= l.diam_ht + opts.tol && l.bigbang_distance <= l.bigbang_bound + opts.tol);
    let pass =
        hypothesis == Hypothesis::Met && bounded && monotone && cert_pass && hausdorff_rows.iter().all(|r| r.pass);
    Ok(BigBangReport {
        hypothesis,
        levels,
        hausdorff_rows,
        cauchy_certificate: CauchyCertificate {
            points: tail,
            pairs: cert_pairs,
            pass: cert_pass,
        },
        monotone,
        caveat: cloud.caveat().unwrap_or_default().to_string(),
        pass,
    })
}

/// CSV projection: `t, diam_ht, max_pair_nulldist, bigbang_distance, bigbang_bound`.
pub fn write_levels_csv<W: Write>(out: W, report: &BigBangReport) -> Result<()> {
    let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "diam_ht", "max_pair_nulldist", "bigbang_distance", "bigbang_bound"])
        .map_err(io)?;
    for l in &report.levels {
        w.write_record([
            format!("{:.16e}", l.t),
            format!("{:.16e}", l.diam_ht),
            format!("{:.16e}", l.max_pair_nulldist),
            format!("{:.16e}", l.bigbang_distance),
            format!("{:.16e}", l.bigbang_bound),
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

    fn torus(f: TimeExpr) -> Spacetime {
        Spacetime::grw(f, Spatial::FlatTorus(vec![1.0, 1.0])).unwrap()
    }

    #[test]
    fn tau_g_examples() {
        let st = torus(TimeExpr::T);
        assert_eq!(tau_g(&st, &Point::new(vec![0.7, 0.3, 0.1])).unwrap(), 0.7);
        assert_eq!(
            tau_g(&st, &Point::new(vec![0.7, 0.9, 0.5])).unwrap(),
            tau_g(&st, &Point::new(vec![0.7, 0.0, 0.0])).unwrap()
        );
        let vals: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&t| tau_g(&st, &Point::new(vec![t, 0.2, 0.2])).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]) && vals[2] <= 1e-3);
        let mink = Spacetime::minkowski(2).unwrap();
        assert!(matches!(
            tau_g(&mink, &Point::new(vec![0.7, 0.0, 0.0])),
            Err(Error::Unsupported(_))
        ));
        let stat = torus(TimeExpr::Const(1.0));
        assert!(tau_g(&stat, &Point::new(vec![0.7, 0.0, 0.0])).is_err());
    }

    #[test]
    fn bruteforce_sandwich() {
        let st = torus(TimeExpr::T);
        let p = Point::new(vec![0.7, 0.4, 0.6]);
        let v = tau_g_bruteforce(&st, &p, 2000, 1).unwrap();
        assert!((0.69..=0.7).contains(&v), "{v}");
        assert_eq!(tau_g_bruteforce(&st, &p, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn wiggly_curves_are_shorter() {
        let st = torus(TimeExpr::T);
        let p = Point::new(vec![0.7, 0.4, 0.6]);
        let vertical =
            CausalSegment::new(Direction::Past, vec![p.clone(), Point::new(vec![0.0007, 0.4, 0.6])]).unwrap();
        let straight = lorentzian_length(&st, &vertical).unwrap();
        let wiggly = CausalSegment::new(
            Direction::Past,
            vec![
                p.clone(),
                Point::new(vec![0.35, 0.5, 0.6]),
                Point::new(vec![0.0007, 0.4, 0.6]),
            ],
        )
        .unwrap();
        assert!(lorentzian_length(&st, &wiggly).unwrap() < straight);
    }

    #[test]
    fn generator_examples() {
        let st = torus(TimeExpr::T);
        let q = Point::new(vec![0.7, 0.25, 0.5]);
        let g = generator_at(&st, &q).unwrap();
        assert_eq!(g.at(0.7), q);
        assert_eq!(g.extension_at_zero, vec![0.0, 0.25, 0.5]);
        let c = generator_checks(&st, &q, 50).unwrap();
        assert!(c.pass, "{c:?}");
        let (a, b) = (g.at(0.3), g.at(0.6));
        let e = estimate(
            &st,
            &TimeFunctionHandle::cosmological(&st).unwrap(),
            &a,
            &b,
            &Default::default(),
        )
        .unwrap();
        assert!(e.upper <= 0.3 + 1e-6);
    }

    #[test]
    fn bigbang_small() {
        let st = torus(TimeExpr::T);
        let opts = BigBangOptions {
            points_per_level: 8,
            ..Default::default()
        };
        let r = bigbang_experiment(&st, &[0.2, 0.1, 0.05], &opts).unwrap();
        assert_eq!(r.hypothesis, Hypothesis::Met);
        assert!(r.pass, "{r:#?}");
        assert_eq!(r.levels[1].diam_ht, 0.1 * 2f64.sqrt() / 2.0);

        let control = torus(TimeExpr::Const(1.0));
        let r = bigbang_experiment(&control, &[0.2, 0.1, 0.05], &opts).unwrap();
        assert!(matches!(r.hypothesis, Hypothesis::NotMet(_)));
        assert!(!r.pass);
    }
}
