//! Seeded property suites over random samples. Each suite checks one inequality
//! or identity on `cases` independent draws and reports the worst deviation.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curves::{connect_with_samples, null_length, null_length_integral, PiecewiseCausalCurve};
use crate::error::Result;
use crate::expr::TimeExpr;
use crate::geometry::{CausalKind, Direction, Point, Spacetime, Spatial, DEFAULT_CAUSAL_TOL};
use crate::metricspace::{diam_lipschitz_check, FinitePointCloud};
use crate::nulldist::{best_estimate, EstimateOptions, ABS_TOL, REL_TOL};
use crate::sampling;
use crate::timefns::TimeFunctionHandle;

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest violation margin seen; `≤ 0` means every case held.
    pub worst: f64,
    pub first_failure: Option<String>,
    pub pass: bool,
}

/// Suite names in a fixed order.
pub const SUITES: [&str; 8] = [
    "semi-metric",
    "lower-bound",
    "causality",
    "diamond",
    "reverse-cauchy-schwarz",
    "gradient-class",
    "null-length-integral",
    "hausdorff-diameter",
];

/// One case yields a violation margin (`> 0` fails) and a description.
type CaseFn<'a> = dyn Fn(&mut ChaCha8Rng) -> Result<(f64, String)> + Sync + 'a;

fn run(name: &str, cases: usize, seed: u64, case: &CaseFn<'_>) -> Result<PropertyReport> {
    let results: Vec<(f64, String)> = (0..cases)
        .into_par_iter()
        .map(|k| {
            let mut rng = sampling::rng(seed, name.len() as u64 * 1000 + name.as_bytes()[0] as u64, k as u64);
            case(&mut rng).map(|(m, d)| (m, format!("case {k}: {d}")))
        })
        .collect::<Result<_>>()?;
    let failures = results.iter().filter(|(m, _)| *m > 0.0).count();
    let worst = results.iter().map(|(m, _)| *m).fold(f64::NEG_INFINITY, f64::max);
    let first_failure = results.iter().find(|(m, _)| *m > 0.0).map(|(_, d)| d.clone());
    Ok(PropertyReport {
        name: name.to_string(),
        cases,
        failures,
        worst,
        first_failure,
        pass: failures == 0,
    })
}

fn spacetimes() -> Vec<Spacetime> {
    vec![
        Spacetime::minkowski(2).expect("valid"),
        Spacetime::grw(TimeExpr::T, Spatial::FlatTorus(vec![1.0, 1.0])).expect("valid"),
        Spacetime::grw(TimeExpr::TSquared, Spatial::Euclidean(1)).expect("valid"),
        Spacetime::grw(TimeExpr::ExpT, Spatial::Euclidean(2)).expect("valid"),
    ]
}

fn time_functions() -> Vec<TimeFunctionHandle> {
    vec![
        TimeFunctionHandle::coordinate_t(),
        TimeFunctionHandle::phi_of_t(TimeExpr::TSquared),
        TimeFunctionHandle::phi_of_t(TimeExpr::ExpT),
    ]
}

/// A sample point with time in `[0.5, 1.5]`, where every listed time function is temporal.
fn region(st: &Spacetime, rng: &mut ChaCha8Rng) -> Point {
    let mut p = st.sample_region(rng);
    p.coords[0] = rng.gen_range(0.5..1.5);
    p
}

/// A spacetime and a time function that is temporal on all of it.
fn pick_pair<'a>(
    rng: &mut ChaCha8Rng,
    sts: &'a [Spacetime],
    taus: &'a [TimeFunctionHandle],
) -> (&'a Spacetime, &'a TimeFunctionHandle) {
    loop {
        let st = pick(rng, sts);
        let tau = pick(rng, taus);
        let squared = tau.time_profile() == Some(TimeExpr::TSquared);
        if !squared || st.time_interval().0 >= 0.0 {
            return (st, tau);
        }
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

fn quick_opts(rng: &mut ChaCha8Rng) -> EstimateOptions {
    EstimateOptions {
        apexes: rng.gen_range(1..=3),
        restarts: 2,
        seed: rng.gen(),
        ..Default::default()
    }
}

/// A future-directed causal displacement from `p`, in the conformal chart.
fn causal_partner(st: &Spacetime, p: &Point, rng: &mut ChaCha8Rng) -> Point {
    let mut c = st.to_conformal(p);
    let room = 0.5 * (st.conformal_range().1 - c[0]);
    let du: f64 = rng.gen_range(0.01..0.4f64).min(room);
    let n = c.len() - 1;
    let w = sampling::sphere_direction(rng.gen_range(0..1u64 << 20), n);
    let r = du * rng.gen::<f64>();
    c[0] += du;
    for (x, wi) in c[1..].iter_mut().zip(&w) {
        *x += r * wi;
    }
    st.from_conformal(&c)
}

fn ordered(st: &Spacetime, p: Point, rng: &mut ChaCha8Rng) -> (Point, Point) {
    let q = causal_partner(st, &p, rng);
    (p, q)
}

fn semi_metric(cases: usize, seed: u64) -> Result<PropertyReport> {
    let sts = spacetimes();
    let taus = time_functions();
    run("semi-metric", cases, seed, &|rng| {
        let (st, tau) = pick_pair(rng, &sts, &taus);
        let (p, q, r) = (region(st, rng), region(st, rng), region(st, rng));
        let o = quick_opts(rng);
        let pq = best_estimate(st, tau, &p, &q, &o)?;
        let qp = best_estimate(st, tau, &q, &p, &o)?;
        let qr = best_estimate(st, tau, &q, &r, &o)?;
        let pr = best_estimate(st, tau, &p, &r, &o)?;
        let pp = best_estimate(st, tau, &p, &p, &o)?;
        let sym = (pq.upper - qp.upper).abs() - (ABS_TOL + REL_TOL * pq.upper.max(qp.upper));
        let tri = pr.lower - (pq.upper + qr.upper + ABS_TOL);
        let margin = sym.max(tri).max(pp.upper).max(-pq.upper.min(0.0));
        Ok((margin, format!("symmetry {sym:.3e}, triangle {tri:.3e}")))
    })
}

fn lower_bound(cases: usize, seed: u64) -> Result<PropertyReport> {
    let sts = spacetimes();
    let taus = time_functions();
    run("lower-bound", cases, seed, &|rng| {
        let (st, tau) = pick_pair(rng, &sts, &taus);
        let (p, q) = (region(st, rng), region(st, rng));
        let e = best_estimate(st, tau, &p, &q, &quick_opts(rng))?;
        let stored = (tau.eval(&q) - tau.eval(&p)).abs();
        let margin = (e.lower - e.upper).max((e.lower - stored).abs());
        Ok((margin, format!("lower {} upper {}", e.lower, e.upper)))
    })
}

fn causality(cases: usize, seed: u64) -> Result<PropertyReport> {
    let sts = spacetimes();
    let taus = time_functions();
    run("causality", cases, seed, &|rng| {
        let (st, tau) = pick_pair(rng, &sts, &taus);
        let p0 = region(st, rng);
        let (p, q) = ordered(st, p0, rng);
        let e = best_estimate(st, tau, &p, &q, &quick_opts(rng))?;
        let gap = e.upper - (tau.eval(&q) - tau.eval(&p));
        let margin = (-gap).max(gap - 1e-6);
        Ok((margin, format!("gap {gap:.3e}")))
    })
}

fn diamond(cases: usize, seed: u64) -> Result<PropertyReport> {
    let sts = spacetimes();
    let taus = time_functions();
    run("diamond", cases, seed, &|rng| {
        let (st, tau) = pick_pair(rng, &sts, &taus);
        let p0 = region(st, rng);
        let (p, q) = ordered(st, p0, rng);
        // Points of J⁺(p) ∩ J⁻(q): a point on the chart axis plus a spatial
        // offset no larger than the cone gap at that height.
        let cp = st.to_conformal(&p);
        let delta = st.chord_displacement(&p, &q);
        let gap = delta[0] - delta[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let n = delta.len() - 1;
        let draw = |rng: &mut ChaCha8Rng| -> Point {
            let lambda: f64 = rng.gen();
            let m = rng.gen::<f64>() * lambda.min(1.0 - lambda) * gap.max(0.0);
            let w = sampling::sphere_direction(rng.gen_range(0..1u64 << 20), n);
            let mut c: Vec<f64> = cp.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            for (ci, wi) in c[1..].iter_mut().zip(&w) {
                *ci += m * wi;
            }
            st.from_conformal(&c)
        };
        let x = draw(rng);
        let y = draw(rng);
        let e = best_estimate(st, tau, &x, &y, &quick_opts(rng))?;
        let bound = 2.0 * (tau.eval(&q) - tau.eval(&p));
        Ok((e.upper - bound - ABS_TOL, format!("upper {} bound {bound}", e.upper)))
    })
}

fn reverse_cauchy_schwarz(cases: usize, seed: u64) -> Result<PropertyReport> {
    let sts = spacetimes();
    run("reverse-cauchy-schwarz", cases, seed, &|rng| {
        let st = pick(rng, &sts);
        let p = region(st, rng);
        let frame = st.orthonormal_frame(&p)?;
        let d = frame.len();
        let vec_in_cone = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let w = sampling::sphere_direction(rng.gen_range(0..1u64 << 20), d - 1);
            // Every fourth vector sits on the null boundary.
            let r: f64 = if rng.gen_ratio(1, 4) { 1.0 } else { rng.gen() };
            let mut v = frame[0].clone();
            for (k, wk) in w.iter().enumerate() {
                for (vi, ei) in v.iter_mut().zip(&frame[k + 1]) {
                    *vi += r * wk * ei;
                }
            }
            let s: f64 = rng.gen_range(0.1..3.0);
            v.iter().map(|x| x * s).collect()
        };
        let v = vec_in_cone(rng);
        let w = vec_in_cone(rng);
        let gvw = st.inner_at(&p, &v, &w);
        let nv = (-st.inner_at(&p, &v, &v)).max(0.0).sqrt();
        let nw = (-st.inner_at(&p, &w, &w)).max(0.0).sqrt();
        let margin = st.inner_at(&p, &v, &v) * st.inner_at(&p, &w, &w) - gvw * gvw - 1e-12 * (1.0 + gvw * gvw);
        let wrong_sign = if gvw > 1e-12 { gvw } else { f64::NEG_INFINITY };
        Ok((margin.max(wrong_sign), format!("|g(v,w)| {} vs {}", gvw.abs(), nv * nw)))
    })
}

fn gradient_class(cases: usize, seed: u64) -> Result<PropertyReport> {
    let sts = spacetimes();
    let taus = time_functions();
    run("gradient-class", cases, seed, &|rng| {
        let (st, tau) = pick_pair(rng, &sts, &taus);
        let p = region(st, rng);
        let g = tau.gradient(st, &p)?;
        let class = st.causal_class(&g, DEFAULT_CAUSAL_TOL);
        let ok = match class.kind {
            CausalKind::Timelike | CausalKind::Null => class.direction == Some(Direction::Past),
            CausalKind::Zero => true,
            CausalKind::Spacelike => false,
        };
        Ok((if ok { -1.0 } else { 1.0 }, format!("class {class}")))
    })
}

fn null_length_identity(cases: usize, seed: u64) -> Result<PropertyReport> {
    let sts = spacetimes();
    let taus = time_functions();
    run("null-length-integral", cases, seed, &|rng| {
        let (st, tau) = pick_pair(rng, &sts, &taus);
        let mut curve = PiecewiseCausalCurve::point(&region(st, rng));
        for _ in 0..rng.gen_range(1..4) {
            // Nearby vertices keep the connecting apexes at moderate times.
            let prev = curve.end().expect("nonempty").clone();
            let mut next = region(st, rng);
            for (x, y) in next.coords[1..].iter_mut().zip(&prev.coords[1..]) {
                *x = y + rng.gen_range(-0.3..0.3);
            }
            if let Some(sp) = st.spatial() {
                let wrapped = sp.wrap(next.spatial());
                next.coords[1..].copy_from_slice(&wrapped);
            }
            let piece = connect_with_samples(st, curve.end().expect("nonempty"), &next, 3)?;
            curve = curve.concat(&piece)?;
        }
        let sum = null_length(tau, &curve)?;
        let integral = null_length_integral(st, tau, &curve, 400)?;
        let err = (sum - integral).abs();
        Ok((err - 1e-6, format!("sum {sum} integral {integral}")))
    })
}

fn hausdorff_diameter(cases: usize, seed: u64) -> Result<PropertyReport> {
    run("hausdorff-diameter", cases, seed, &|rng| {
        let n = rng.gen_range(4..24);
        let dim = rng.gen_range(1..4);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen()).collect()).collect();
        let dist = pts
            .iter()
            .map(|a| {
                pts.iter()
                    .map(|b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
                    .collect()
            })
            .collect();
        let cloud = FinitePointCloud::new((0..n).map(|i| format!("p{i}")).collect(), dist)?;
        let subset = |rng: &mut ChaCha8Rng| {
            let k = rng.gen_range(1..=n);
            sample(rng, n, k).into_vec()
        };
        let (a, b, c) = (subset(rng), subset(rng), subset(rng));
        let lip = diam_lipschitz_check(&cloud, &[(a.clone(), b.clone())])?;
        let row = &lip.rows[0];
        let m1 = (row.diam_a - row.diam_b).abs() - 2.0 * row.hausdorff - 1e-12;
        let ab = cloud.hausdorff(&a, &b)?;
        let m2 = (ab - cloud.hausdorff(&b, &a)?).abs();
        let m3 = cloud.hausdorff(&a, &c)? - ab - cloud.hausdorff(&b, &c)? - 1e-12;
        Ok((
            m1.max(m3).max(if m2 > 0.0 { m2 } else { -1.0 }),
            format!("lipschitz {m1:.3e}"),
        ))
    })
}

pub fn run_suite(name: &str, cases: usize, seed: u64) -> Result<PropertyReport> {
    match name {
        "semi-metric" => semi_metric(cases, seed),
        "lower-bound" => lower_bound(cases, seed),
        "causality" => causality(cases, seed),
        "diamond" => diamond(cases, seed),
        "reverse-cauchy-schwarz" => reverse_cauchy_schwarz(cases, seed),
        "gradient-class" => gradient_class(cases, seed),
        "null-length-integral" => null_length_identity(cases, seed),
        "hausdorff-diameter" => hausdorff_diameter(cases, seed),
        other => Err(crate::error::Error::Argument(format!(
            "unknown property suite `{other}`"
        ))),
    }
}

pub fn run_all(cases: usize, seed: u64) -> Result<Vec<PropertyReport>> {
    SUITES.iter().map(|s| run_suite(s, cases, seed)).collect()
}
