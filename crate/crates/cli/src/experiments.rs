//! One function per experiment. Each writes its artifacts and returns the
//! rows that failed their assertion.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use nullcone::checks::{run_suite, PropertyReport, SUITES};
use nullcone::cosmo::{
    bigbang_experiment, generator_checks, tau_g, tau_g_bruteforce, write_levels_csv, BigBangOptions, Hypothesis,
};
use nullcone::nulldist::{
    estimate, level_set_pairs, minkowski_exact, verify_level_set_inequality, write_estimates_csv,
};
use nullcone::sampling;
use nullcone::slim::{ratio_table, write_ratio_csv, LevelSetCurve, NormalChart, RatioOptions};
use nullcone::{EstimateOptions, Point, Spacetime, Spatial};

use crate::config::{spacetime, time_function, Experiment, Loaded};
use crate::RunError;

pub struct Outcome {
    pub summary: Vec<String>,
    pub artifacts: Vec<PathBuf>,
    pub failing_rows: Vec<String>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn coords(p: &Point) -> String {
    serde_json::to_string(p).expect("point serializes")
}

/// Write-temp-then-rename inside the destination directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

struct Sink {
    dir: PathBuf,
    prefix: String,
    written: Vec<PathBuf>,
}

impl Sink {
    fn put(&mut self, suffix: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.dir.join(format!("{}{suffix}", self.prefix));
        write_atomic(&path, bytes).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn csv(&mut self, suffix: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| RunError::Io(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| RunError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| RunError::Io(e.to_string()))?;
        self.put(suffix, &bytes)
    }

    fn json(&mut self, value: &serde_json::Value) -> Result<(), RunError> {
        let mut s = serde_json::to_string_pretty(value).expect("json serializes");
        s.push('\n');
        self.put("_summary.json", s.as_bytes())
    }
}

fn core(e: nullcone::Error) -> RunError {
    RunError::Experiment(e.to_string())
}

fn estimate_options(l: &Loaded, seed: u64) -> EstimateOptions {
    let s = &l.config.sampling;
    let d = EstimateOptions::default();
    EstimateOptions {
        apexes: s.apexes.unwrap_or(d.apexes),
        restarts: s.restarts.unwrap_or(d.restarts),
        seed,
        ..d
    }
}

pub fn run(l: &Loaded, seed: u64, out: &Path) -> Result<Outcome, RunError> {
    let mut sink = Sink {
        dir: out.to_path_buf(),
        prefix: l
            .config
            .output
            .prefix
            .clone()
            .unwrap_or_else(|| l.config.experiment.name().to_string()),
        written: Vec::new(),
    };
    let st = spacetime(l).map_err(RunError::Config)?;
    let (summary, failing_rows) = match l.config.experiment {
        Experiment::MinkowskiTable => minkowski_table(l, &st, seed, &mut sink)?,
        Experiment::LevelSetInequality => level_set(l, &st, seed, &mut sink)?,
        Experiment::SlimRatio => slim(l, &st, &mut sink)?,
        Experiment::CosmoChecks => cosmo_checks(l, &st, seed, &mut sink)?,
        Experiment::Bigbang => bigbang(l, &st, seed, &mut sink)?,
        Experiment::PropertySuite => properties(l, seed, &mut sink)?,
    };
    Ok(Outcome {
        summary,
        artifacts: sink.written,
        failing_rows,
    })
}

type Rows = (Vec<String>, Vec<String>);

fn minkowski_table(l: &Loaded, st: &Spacetime, seed: u64, sink: &mut Sink) -> Result<Rows, RunError> {
    let tau = time_function(l, st).map_err(RunError::Config)?;
    let n = l.config.sampling.pairs.unwrap_or(100);
    let mut rng = sampling::rng(seed, 1, 0);
    let pairs: Vec<(Point, Point)> = (0..n)
        .map(|_| (st.sample_region(&mut rng), st.sample_region(&mut rng)))
        .collect();
    // Restarts inside `estimate` already run in parallel.
    let results = pairs.iter().enumerate().map(|(i, (p, q))| -> Result<_, RunError> {
        let e = estimate(st, &tau, p, q, &estimate_options(l, seed.wrapping_add(i as u64))).map_err(core)?;
        let exact = minkowski_exact(st, &tau, p, q).map_err(core)?.upper;
        Ok((e, exact))
    });
    let mut rows = Vec::new();
    let mut ests = Vec::new();
    let mut failing = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, ((p, q), r)) in pairs.iter().zip(results).enumerate() {
        let (e, exact) = r?;
        let rel = if exact > 0.0 {
            (e.upper - exact).abs() / exact
        } else {
            e.upper
        };
        let pass = rel <= 1e-2;
        worst = worst.max(rel);
        if !pass {
            failing.push(format!("pair {i}"));
        }
        rows.push(vec![
            i.to_string(),
            coords(p),
            coords(q),
            num(exact),
            num(e.upper),
            num(e.lower),
            num(rel),
            pass.to_string(),
        ]);
        ests.push((p.clone(), q.clone(), e));
    }
    sink.csv(
        ".csv",
        &["id", "p", "q", "exact", "upper", "lower", "rel_err", "pass"],
        &rows,
    )?;
    let mut buf = Vec::new();
    write_estimates_csv(&mut buf, &ests).map_err(core)?;
    sink.put("_estimates.csv", &buf)?;
    sink.json(&json!({
        "experiment": "minkowski-table", "seed": seed, "pairs": n,
        "max_rel_err": worst, "pass": failing.is_empty(), "failing_rows": failing,
    }))?;
    Ok((
        vec![format!("{n} pairs, max relative error {worst:.3e} (limit 1e-2)")],
        failing,
    ))
}

fn level_set(l: &Loaded, st: &Spacetime, seed: u64, sink: &mut Sink) -> Result<Rows, RunError> {
    let tau = time_function(l, st).map_err(RunError::Config)?;
    let s = &l.config.sampling;
    let t = s.t.expect("validated");
    let pairs = level_set_pairs(st, t, s.pairs.unwrap_or(50), seed).map_err(core)?;
    let constant = match s.constant {
        Some(c) => c,
        None => {
            let p0 = &pairs[0].0;
            st.norm(&tau.gradient(st, p0).map_err(core)?).map_err(core)?
        }
    };
    let table = match verify_level_set_inequality(st, &tau, constant, &pairs, &estimate_options(l, seed)) {
        Ok(t) => t,
        Err(nullcone::Error::Precondition(m)) => {
            return Err(RunError::Assertion(vec![format!("precondition: {m}")]));
        }
        Err(e) => return Err(core(e)),
    };
    let mut failing = Vec::new();
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let pass = nullcone::nulldist::within_bound(r.upper, r.bound);
            if !pass {
                failing.push(format!("pair {i}"));
            }
            vec![
                i.to_string(),
                coords(&r.p),
                coords(&r.q),
                num(r.upper),
                num(r.bound),
                num(r.ratio),
                pass.to_string(),
            ]
        })
        .collect();
    sink.csv(".csv", &["id", "p", "q", "upper", "bound", "ratio", "pass"], &rows)?;
    sink.json(&json!({
        "experiment": "level-set-inequality", "seed": seed, "level": table.level,
        "constant": constant, "max_ratio": table.max_ratio, "pass": table.pass, "failing_rows": failing,
    }))?;
    Ok((
        vec![format!(
            "{} pairs on f = {}, C = {constant:.6}, max ratio {:.6}",
            table.rows.len(),
            table.level,
            table.max_ratio
        )],
        failing,
    ))
}

fn slim(l: &Loaded, st: &Spacetime, sink: &mut Sink) -> Result<Rows, RunError> {
    let f = time_function(l, st).map_err(RunError::Config)?;
    let s = &l.config.sampling;
    let d = st.dimension();
    let center = match &s.center {
        Some(c) if c.len() == d => Point::new(c.clone()),
        Some(_) => {
            return Err(RunError::Config(l.error(
                "sampling",
                "center",
                format!("center needs {d} coordinates"),
            )))
        }
        None => {
            let mut c = vec![0.0; d];
            if st.scale_factor().is_some() {
                c[0] = 1.0;
            }
            Point::new(c)
        }
    };
    let direction = match &s.direction {
        Some(v) if v.len() == d - 1 => v.clone(),
        Some(_) => {
            return Err(RunError::Config(l.error(
                "sampling",
                "direction",
                format!("direction needs {} components", d - 1),
            )))
        }
        None => {
            let mut v = vec![0.0; d - 1];
            v[0] = 1.0;
            v
        }
    };
    let gamma = LevelSetCurve::straight(st, &center, &direction).map_err(core)?;
    let chart = NormalChart::new(st, &f, &center, gamma.tangent()).map_err(core)?;
    let s_list = s.s_list.clone().expect("validated");
    let eps_list = s.eps_list.clone().expect("validated");
    let table = ratio_table(&chart, &f, &gamma, &s_list, &eps_list, &RatioOptions::default()).map_err(core)?;
    let smallest = *s_list.last().expect("nonempty");
    let mut failing = Vec::new();
    let mut summary = Vec::new();
    for lim in &table.limits {
        let row = table
            .rows
            .iter()
            .find(|r| r.epsilon == lim.epsilon && r.s == smallest)
            .expect("row for every (eps, s)");
        let t_err = (row.t_star_over_s - lim.t_star_over_s_expected).abs();
        let l_err = (lim.extrapolated - lim.expected).abs();
        if t_err > 1e-3 || l_err > 1e-3 {
            failing.push(format!("epsilon={}", lim.epsilon));
        }
        summary.push(format!(
            "eps {}: radius {:.4}, limit {:.6} (expected {:.6}), t*/s {:.6} (expected {:.6})",
            lim.epsilon, lim.radius, lim.extrapolated, lim.expected, row.t_star_over_s, lim.t_star_over_s_expected
        ));
    }
    for r in &table.rows {
        if r.eta_residual > 1e-12 || !r.valid {
            failing.push(format!("epsilon={},s={}", r.epsilon, r.s));
        }
    }
    if eps_list.len() >= 2 && (table.diagonal - table.constant).abs() > 2e-3 {
        failing.push("diagonal".into());
    }
    summary.push(format!(
        "diagonal {:.6} (expected {:.6})",
        table.diagonal, table.constant
    ));
    let mut buf = Vec::new();
    write_ratio_csv(&mut buf, &table).map_err(core)?;
    sink.put(".csv", &buf)?;
    sink.json(&json!({
        "experiment": "slim-ratio", "constant": table.constant, "limits": table.limits,
        "diagonal": table.diagonal, "pass": failing.is_empty(), "failing_rows": failing,
    }))?;
    Ok((summary, failing))
}

fn random_point(st: &Spacetime, rng: &mut impl rand::Rng, t_range: (f64, f64)) -> Point {
    let mut c = vec![rng.gen_range(t_range.0..t_range.1)];
    match st.spatial() {
        Some(Spatial::FlatTorus(sides)) => c.extend(sides.iter().map(|s| rng.gen_range(0.0..*s))),
        Some(Spatial::Euclidean(n)) => c.extend((0..n).map(|_| rng.gen_range(-1.0..1.0))),
        None => c.extend((1..st.dimension()).map(|_| rng.gen_range(-1.0..1.0))),
    }
    Point::new(c)
}

fn cosmo_checks(l: &Loaded, st: &Spacetime, seed: u64, sink: &mut Sink) -> Result<Rows, RunError> {
    let s = &l.config.sampling;
    let mut rng = sampling::rng(seed, 6, 0);
    let mut failing = Vec::new();
    let mut brute = Vec::new();
    let samples = s.curve_samples.unwrap_or(2000);
    for i in 0..s.points.unwrap_or(5) {
        let p = random_point(st, &mut rng, (0.2, 1.5));
        let exact = tau_g(st, &p).map_err(core)?;
        let v = tau_g_bruteforce(st, &p, samples, seed.wrapping_add(i as u64)).map_err(core)?;
        let pass = v >= 0.98 * exact && v <= exact;
        if !pass {
            failing.push(format!("point {i}"));
        }
        brute.push(vec![
            i.to_string(),
            coords(&p),
            num(exact),
            num(v),
            num((exact - v) / exact),
            pass.to_string(),
        ]);
    }
    let mut gens = Vec::new();
    for i in 0..s.feet.unwrap_or(100) {
        let q = random_point(st, &mut rng, (0.05, 2.0));
        let c = generator_checks(st, &q, 50).map_err(core)?;
        if !c.pass {
            failing.push(format!("foot {i}"));
        }
        gens.push(vec![
            i.to_string(),
            coords(&q),
            num(c.unit_speed_residual),
            num(c.geodesic_residual),
            num(c.tau_identity_error),
            num(c.gradient_residual),
            c.pass.to_string(),
        ]);
    }
    sink.csv(
        "_bruteforce.csv",
        &["id", "p", "tau_g", "bruteforce", "rel_gap", "pass"],
        &brute,
    )?;
    sink.csv(
        "_generators.csv",
        &[
            "id",
            "foot",
            "unit_speed",
            "geodesic",
            "tau_identity",
            "gradient",
            "pass",
        ],
        &gens,
    )?;
    sink.json(&json!({
        "experiment": "cosmo-checks", "seed": seed, "curve_samples": samples,
        "points": brute.len(), "feet": gens.len(), "pass": failing.is_empty(), "failing_rows": failing,
    }))?;
    Ok((
        vec![
            format!("{} sandwich points at {samples} curve samples", brute.len()),
            format!("{} generator feet", gens.len()),
        ],
        failing,
    ))
}

fn bigbang(l: &Loaded, st: &Spacetime, seed: u64, sink: &mut Sink) -> Result<Rows, RunError> {
    let s = &l.config.sampling;
    let d = BigBangOptions::default();
    let opts = BigBangOptions {
        points_per_level: s.points_per_level.unwrap_or(d.points_per_level),
        seed,
        estimate: EstimateOptions {
            apexes: s.apexes.unwrap_or(d.estimate.apexes),
            restarts: s.restarts.unwrap_or(d.estimate.restarts),
            seed,
            ..d.estimate.clone()
        },
        ..d
    };
    let t_list = s.t_list.clone().expect("validated");
    let r = bigbang_experiment(st, &t_list, &opts).map_err(core)?;
    let mut failing = Vec::new();
    if let Hypothesis::NotMet(why) = &r.hypothesis {
        failing.push(format!("HypothesisNotMet: {why}"));
    }
    for lv in &r.levels {
        if lv.max_pair_nulldist > lv.diam_ht + opts.tol || lv.bigbang_distance > lv.bigbang_bound + opts.tol {
            failing.push(format!("level t={}", lv.t));
        }
    }
    for h in &r.hausdorff_rows {
        if !h.pass {
            failing.push(format!("hausdorff t={} t'={}", h.t, h.t_other));
        }
    }
    if !r.cauchy_certificate.pass {
        failing.push("cauchy-certificate".into());
    }
    if !r.monotone {
        failing.push("monotone".into());
    }
    if !r.pass && failing.is_empty() {
        failing.push("report".into());
    }
    let mut buf = Vec::new();
    write_levels_csv(&mut buf, &r).map_err(core)?;
    sink.put("_levels.csv", &buf)?;
    let hrows: Vec<Vec<String>> = r
        .hausdorff_rows
        .iter()
        .map(|h| {
            vec![
                num(h.t),
                num(h.t_other),
                num(h.hausdorff),
                num(h.bound),
                num(h.excess),
                h.pass.to_string(),
            ]
        })
        .collect();
    sink.csv(
        "_hausdorff.csv",
        &["t", "t_other", "hausdorff", "bound", "excess", "pass"],
        &hrows,
    )?;
    sink.json(&json!({
        "experiment": "bigbang", "seed": seed, "hypothesis": match &r.hypothesis {
            Hypothesis::Met => "met".to_string(),
            Hypothesis::NotMet(w) => format!("not met: {w}"),
        },
        "levels": r.levels, "monotone": r.monotone, "cauchy_pass": r.cauchy_certificate.pass,
        "caveat": r.caveat, "pass": failing.is_empty(), "failing_rows": failing,
    }))?;
    let summary = r
        .levels
        .iter()
        .map(|lv| {
            format!(
                "t {}: diam {:.6}, max pair {:.6}",
                lv.t, lv.diam_ht, lv.max_pair_nulldist
            )
        })
        .collect();
    Ok((summary, failing))
}

fn properties(l: &Loaded, seed: u64, sink: &mut Sink) -> Result<Rows, RunError> {
    let s = &l.config.sampling;
    let cases = s.cases.unwrap_or(200);
    let names: Vec<String> = s
        .suites
        .clone()
        .unwrap_or_else(|| SUITES.iter().map(|n| n.to_string()).collect());
    let reports: Vec<PropertyReport> = names
        .iter()
        .map(|n| run_suite(n, cases, seed))
        .collect::<Result<_, _>>()
        .map_err(core)?;
    let mut failing = Vec::new();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            if !r.pass {
                failing.push(format!("{}: {}", r.name, r.first_failure.clone().unwrap_or_default()));
            }
            vec![
                r.name.clone(),
                r.cases.to_string(),
                r.failures.to_string(),
                num(r.worst),
                r.pass.to_string(),
            ]
        })
        .collect();
    sink.csv(".csv", &["suite", "cases", "failures", "worst", "pass"], &rows)?;
    sink.json(&json!({ "experiment": "property-suite", "seed": seed, "suites": reports, "pass": failing.is_empty(), "failing_rows": failing }))?;
    let summary = reports
        .iter()
        .map(|r| format!("{}: {}/{} cases hold", r.name, r.cases - r.failures, r.cases))
        .collect();
    Ok((summary, failing))
}
