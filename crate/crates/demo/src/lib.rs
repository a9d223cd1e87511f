//! Browser bindings. Each export takes plain numbers or JSON and returns JSON;
//! the `*_json` functions carry the logic so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use nullcone::cosmo::{bigbang_experiment, BigBangOptions, Hypothesis, LevelSummary};
use nullcone::nulldist::estimate;
use nullcone::slim::{ratio_table, EpsilonLimit, LevelSetCurve, NormalChart, RatioOptions, RatioRow};
use nullcone::{EstimateOptions, Point, Spacetime, Spatial, TimeExpr, TimeFunctionHandle};

#[derive(Serialize)]
struct Zigzag {
    upper: f64,
    lower: f64,
    /// Breakpoints as `[t, x]`.
    breakpoints: Vec<[f64; 2]>,
    /// Every sample of every segment, for drawing curved chords.
    samples: Vec<Vec<[f64; 2]>>,
}

/// 1+1 spacetime: `"minkowski"` or a scale factor on a circle of length `side`.
fn spacetime(scale: &str, side: f64) -> Result<Spacetime, String> {
    if scale.trim() == "minkowski" {
        return Spacetime::minkowski(1).map_err(|e| e.to_string());
    }
    let f: TimeExpr = scale.parse().map_err(|e: nullcone::Error| e.to_string())?;
    Spacetime::grw(f, Spatial::FlatTorus(vec![side])).map_err(|e| e.to_string())
}

fn pair(p: &Point) -> [f64; 2] {
    [p.coords[0], p.coords[1]]
}

pub fn null_zigzag_json(
    scale: &str,
    side: f64,
    p: [f64; 2],
    q: [f64; 2],
    apexes: usize,
    seed: u64,
) -> Result<String, String> {
    let st = spacetime(scale, side)?;
    let tau = TimeFunctionHandle::coordinate_t();
    let (p, q) = (Point::new(p.to_vec()), Point::new(q.to_vec()));
    let opts = EstimateOptions {
        apexes: apexes.clamp(1, 8),
        restarts: 4,
        seed,
        ..Default::default()
    };
    let e = estimate(&st, &tau, &p, &q, &opts).map_err(|e| e.to_string())?;
    let segs = e.witness.segments();
    let z = Zigzag {
        upper: e.upper,
        lower: e.lower,
        breakpoints: e.witness.breakpoints().into_iter().map(pair).collect(),
        samples: segs.iter().map(|s| s.samples().iter().map(pair).collect()).collect(),
    };
    Ok(serde_json::to_string(&z).expect("serializes"))
}

#[derive(Serialize)]
struct SlimTable {
    constant: f64,
    rows: Vec<RatioRow>,
    limits: Vec<EpsilonLimit>,
    diagonal: f64,
}

/// Ratio table for the slim construction on the torus with `f(t) = t`, centered at `t = 1`.
pub fn slim_table_json(eps_list: &[f64], s_list: &[f64]) -> Result<String, String> {
    let st = Spacetime::grw(TimeExpr::T, Spatial::FlatTorus(vec![1.0, 1.0])).map_err(|e| e.to_string())?;
    let f = TimeFunctionHandle::coordinate_t();
    let center = Point::new(vec![1.0, 0.0, 0.0]);
    let gamma = LevelSetCurve::straight(&st, &center, &[1.0, 0.0]).map_err(|e| e.to_string())?;
    let chart = NormalChart::new(&st, &f, &center, gamma.tangent()).map_err(|e| e.to_string())?;
    let opts = RatioOptions {
        point_grid: 17,
        dir_grid: 16,
        ..Default::default()
    };
    let t = ratio_table(&chart, &f, &gamma, s_list, eps_list, &opts).map_err(|e| e.to_string())?;
    let out = SlimTable {
        constant: t.constant,
        rows: t.rows,
        limits: t.limits,
        diagonal: t.diagonal,
    };
    Ok(serde_json::to_string(&out).expect("serializes"))
}

#[derive(Serialize)]
struct Levels {
    hypothesis: String,
    levels: Vec<LevelSummary>,
    pass: bool,
}

/// Level summaries of the collapse experiment on the unit torus with scale factor `scale`.
pub fn bigbang_levels_json(scale: &str, t_list: &[f64], points: usize, seed: u64) -> Result<String, String> {
    let f: TimeExpr = scale.parse().map_err(|e: nullcone::Error| e.to_string())?;
    let st = Spacetime::grw(f, Spatial::FlatTorus(vec![1.0, 1.0])).map_err(|e| e.to_string())?;
    let d = BigBangOptions::default();
    let opts = BigBangOptions {
        points_per_level: points.clamp(2, 32),
        seed,
        estimate: EstimateOptions {
            apexes: 2,
            restarts: 1,
            seed,
            ..Default::default()
        },
        ..d
    };
    let r = bigbang_experiment(&st, t_list, &opts).map_err(|e| e.to_string())?;
    let out = Levels {
        hypothesis: match r.hypothesis {
            Hypothesis::Met => "met".into(),
            Hypothesis::NotMet(w) => format!("not met: {w}"),
        },
        levels: r.levels,
        pass: r.pass,
    };
    Ok(serde_json::to_string(&out).expect("serializes"))
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = nullZigzag)]
pub fn null_zigzag(
    scale: &str,
    side: f64,
    pt: f64,
    px: f64,
    qt: f64,
    qx: f64,
    apexes: usize,
    seed: u64,
) -> Result<String, JsError> {
    js(null_zigzag_json(scale, side, [pt, px], [qt, qx], apexes, seed))
}

#[wasm_bindgen(js_name = slimTable)]
pub fn slim_table(eps_list: Vec<f64>, s_list: Vec<f64>) -> Result<String, JsError> {
    js(slim_table_json(&eps_list, &s_list))
}

#[wasm_bindgen(js_name = bigbangLevels)]
pub fn bigbang_levels(scale: &str, t_list: Vec<f64>, points: usize, seed: u64) -> Result<String, JsError> {
    js(bigbang_levels_json(scale, &t_list, points, seed))
}
