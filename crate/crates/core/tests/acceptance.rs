//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use nullcone::checks::run_all;
use nullcone::cosmo::{bigbang_experiment, generator_checks, tau_g_bruteforce, BigBangOptions, Hypothesis};
use nullcone::nulldist::{estimate, level_set_pairs, minkowski_exact};
use nullcone::sampling;
use nullcone::slim::{certified_radius, ratio_table, verify_cone_domination, LevelSetCurve, NormalChart, RatioOptions};
use nullcone::{EstimateOptions, Point, Spacetime, Spatial, TimeExpr, TimeFunctionHandle};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn torus_t() -> Spacetime {
    Spacetime::grw(TimeExpr::T, Spatial::FlatTorus(vec![1.0, 1.0])).unwrap()
}

fn minkowski_oracle() -> Outcome {
    let start = Instant::now();
    let tau = TimeFunctionHandle::coordinate_t();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in [1usize, 2] {
        let st = Spacetime::minkowski(n).unwrap();
        let mut rng = sampling::rng(SEED, 1, n as u64);
        for k in 0..100u64 {
            let p = st.sample_region(&mut rng);
            let q = st.sample_region(&mut rng);
            let opts = EstimateOptions {
                seed: k,
                ..Default::default()
            };
            let e = estimate(&st, &tau, &p, &q, &opts).unwrap();
            let exact = minkowski_exact(&st, &tau, &p, &q).unwrap().upper;
            worst = worst.max((e.upper - exact).abs() / exact);
            cases += 1;
        }
    }
    let took = start.elapsed();
    outcome(
        worst <= 1e-2 && took < Duration::from_secs(60),
        format!(
            "{cases} pairs in 1+1 and 2+1, max relative error {worst:.3e}, {}",
            secs(took)
        ),
    )
}

fn minkowski_equality() -> Outcome {
    let start = Instant::now();
    let st = Spacetime::minkowski(2).unwrap();
    let tau = TimeFunctionHandle::coordinate_t();
    let pairs = level_set_pairs(&st, 0.0, 50, SEED).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (p, q) in &pairs {
        let e = estimate(&st, &tau, p, q, &Default::default()).unwrap();
        let r = e.upper / st.slice_distance(p, q).unwrap();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let took = start.elapsed();
    outcome(
        lo >= 0.999 && hi <= 1.001 && took < Duration::from_secs(30),
        format!("50 equal-time pairs, ratio in [{lo:.6}, {hi:.6}], {}", secs(took)),
    )
}

fn grw_level_set_bound() -> Outcome {
    let st = torus_t();
    let tau = TimeFunctionHandle::phi_of_t(TimeExpr::TSquared);
    let pairs = level_set_pairs(&st, 1.0, 50, SEED).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for (p, q) in &pairs {
        let e = estimate(&st, &tau, p, q, &Default::default()).unwrap();
        worst = worst.max(e.upper - 2.0 * st.slice_distance(p, q).unwrap());
    }
    outcome(
        worst <= 1e-3,
        format!("50 pairs on t = 1, max(upper - 2 d_h) = {worst:.3e}"),
    )
}

fn slim_charts() -> Vec<(&'static str, NormalChart, LevelSetCurve)> {
    let f = TimeFunctionHandle::coordinate_t();
    let mink = Spacetime::minkowski(2).unwrap();
    let origin = Point::new(vec![0.0, 0.0, 0.0]);
    let gm = LevelSetCurve::straight(&mink, &origin, &[1.0, 0.0]).unwrap();
    let cm = NormalChart::new(&mink, &f, &origin, gm.tangent()).unwrap();
    let grw = torus_t();
    let center = Point::new(vec![1.0, 0.0, 0.0]);
    let gg = LevelSetCurve::straight(&grw, &center, &[1.0, 0.0]).unwrap();
    let cg = NormalChart::new(&grw, &f, &center, gg.tangent()).unwrap();
    vec![("minkowski", cm, gm), ("grw", cg, gg)]
}

fn slim_limits() -> Outcome {
    let f = TimeFunctionHandle::coordinate_t();
    let eps = [0.5, 0.19, 0.01];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, chart, gamma) in slim_charts() {
        let table = ratio_table(&chart, &f, &gamma, &[1e-2, 1e-3, 1e-4], &eps, &RatioOptions::default()).unwrap();
        let mut t_err: f64 = 0.0;
        let mut lim_err: f64 = 0.0;
        for l in &table.limits {
            let row = table
                .rows
                .iter()
                .find(|r| r.epsilon == l.epsilon && r.s == 1e-4)
                .unwrap();
            t_err = t_err.max((row.t_star_over_s - l.t_star_over_s_expected).abs());
            lim_err = lim_err.max((l.extrapolated - l.expected).abs());
        }
        let diag_err = (table.diagonal - table.constant).abs();
        let eta = table.rows.iter().map(|r| r.eta_residual).fold(0.0, f64::max);
        let valid = table.rows.iter().all(|r| r.valid);
        pass &= t_err <= 1e-3 && lim_err <= 1e-3 && diag_err <= 2e-3 && eta <= 1e-12 && valid;
        parts.push(format!(
            "{name}: t*/s err {t_err:.2e}, limit err {lim_err:.2e}, diagonal err {diag_err:.2e}, eta {eta:.1e}"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn cone_minkowski() -> Outcome {
    let (_, chart, _) = slim_charts().remove(0);
    let mut pass = true;
    let mut parts = Vec::new();
    for eps in [0.5, 0.19, 0.01] {
        for radius in [0.1, 1.0, 10.0] {
            let r = verify_cone_domination(&chart, eps, radius, 33, 32).unwrap();
            pass &= r.max_f <= -eps + 1e-9;
            if radius == 1.0 {
                parts.push(format!(
                    "eps {eps}: max F {:.6}, min F {:.6}, target {:.6}",
                    r.max_f,
                    r.min_f,
                    -eps + 1e-9
                ));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn cone_grw() -> Outcome {
    let (_, chart, _) = slim_charts().remove(1);
    let mut pass = true;
    let mut parts = Vec::new();
    for eps in [0.5, 0.19, 0.01] {
        let c = certified_radius(&chart, eps, 0.5, 33, 32).unwrap();
        pass &= c.report.max_f < 0.0;
        parts.push(format!(
            "eps {eps}: radius {:.4}, max F {:.3e}",
            c.radius, c.report.max_f
        ));
    }
    outcome(pass, parts.join("; "))
}

fn cosmological_time() -> Outcome {
    let st = torus_t();
    let mut rng = sampling::rng(SEED, 6, 0);
    let mut sandwich = true;
    let mut worst_gap: f64 = 0.0;
    for k in 0..5 {
        let p = Point::new(vec![rng.gen_range(0.2..1.5), rng.gen(), rng.gen()]);
        let v = tau_g_bruteforce(&st, &p, 2000, SEED + k).unwrap();
        let t = p.time();
        sandwich &= v >= 0.98 * t && v <= t;
        worst_gap = worst_gap.max((t - v) / t);
    }
    let mut failures = 0;
    let mut worst_geo: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    for _ in 0..100 {
        let q = Point::new(vec![rng.gen_range(0.05..2.0), rng.gen(), rng.gen()]);
        let c = generator_checks(&st, &q, 50).unwrap();
        worst_geo = worst_geo.max(c.geodesic_residual);
        worst_grad = worst_grad.max(c.gradient_residual);
        if !c.pass {
            failures += 1;
        }
    }
    outcome(
        sandwich && failures == 0,
        format!(
            "5 points at 2000 samples, max relative gap {worst_gap:.3e}; 100 feet, {failures} generator failures, geodesic residual {worst_geo:.1e}, gradient residual {worst_grad:.1e}"
        ),
    )
}

fn big_bang() -> Outcome {
    let start = Instant::now();
    let t_list = [0.2, 0.1, 0.05, 0.01];
    let opts = BigBangOptions {
        points_per_level: 32,
        seed: SEED,
        ..Default::default()
    };
    let r = bigbang_experiment(&torus_t(), &t_list, &opts).unwrap();
    let diam_exact = r.levels.iter().all(|l| l.diam_ht == l.t * 2f64.sqrt() / 2.0);
    let bounded = r.levels.iter().all(|l| l.max_pair_nulldist <= l.diam_ht + 1e-3);
    let decreasing = r
        .levels
        .windows(2)
        .all(|w| w[1].max_pair_nulldist < w[0].max_pair_nulldist);
    let control_st = Spacetime::grw(TimeExpr::Const(1.0), Spatial::FlatTorus(vec![1.0, 1.0])).unwrap();
    let control = bigbang_experiment(&control_st, &t_list, &opts).unwrap();
    let not_met = matches!(control.hypothesis, Hypothesis::NotMet(_));
    let took = start.elapsed();
    let maxes: Vec<String> = r.levels.iter().map(|l| format!("{:.4}", l.max_pair_nulldist)).collect();
    outcome(
        r.hypothesis == Hypothesis::Met
            && r.pass
            && diam_exact
            && bounded
            && decreasing
            && r.cauchy_certificate.pass
            && not_met
            && took < Duration::from_secs(300),
        format!(
            "max pair d [{}], diam exact {diam_exact}, Cauchy certificate {}, control not met {not_met}, {}",
            maxes.join(", "),
            r.cauchy_certificate.pass,
            secs(took)
        ),
    )
}

fn property_suites() -> Outcome {
    let start = Instant::now();
    let reports = run_all(200, SEED).unwrap();
    let parts: Vec<String> = reports
        .iter()
        .map(|r| format!("{} {}/{}", r.name, r.cases - r.failures, r.cases))
        .collect();
    let failed: Vec<String> = reports
        .iter()
        .filter_map(|r| r.first_failure.as_ref().map(|f| format!("{}: {f}", r.name)))
        .collect();
    let mut detail = format!("{}, {}", parts.join(", "), secs(start.elapsed()));
    if !failed.is_empty() {
        detail.push_str(&format!("; first failures: {}", failed.join("; ")));
    }
    outcome(reports.iter().all(|r| r.pass), detail)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 minkowski oracle", minkowski_oracle),
        ("2 level-set equality", minkowski_equality),
        ("3 grw level-set bound", grw_level_set_bound),
        ("4 slim limits", slim_limits),
        ("5a cone domination minkowski", cone_minkowski),
        ("5b cone domination grw", cone_grw),
        ("6 cosmological time", cosmological_time),
        ("7 big bang collapse", big_bang),
        ("8 property suites", property_suites),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
