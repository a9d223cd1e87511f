//! TOML experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use nullcone::{Spacetime, Spatial, TimeExpr, TimeFunctionHandle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    MinkowskiTable,
    LevelSetInequality,
    SlimRatio,
    CosmoChecks,
    Bigbang,
    PropertySuite,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::MinkowskiTable,
        Experiment::LevelSetInequality,
        Experiment::SlimRatio,
        Experiment::CosmoChecks,
        Experiment::Bigbang,
        Experiment::PropertySuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::MinkowskiTable => "minkowski-table",
            Experiment::LevelSetInequality => "level-set-inequality",
            Experiment::SlimRatio => "slim-ratio",
            Experiment::CosmoChecks => "cosmo-checks",
            Experiment::Bigbang => "bigbang",
            Experiment::PropertySuite => "property-suite",
        }
    }

    /// The module operation behind the experiment and the statement it checks.
    pub fn describe(self) -> &'static str {
        match self {
            Experiment::MinkowskiTable => "nulldist::estimate vs minkowski_exact; d = max(|dt|, |dx|) within 1%",
            Experiment::LevelSetInequality => {
                "nulldist::verify_level_set_inequality; d(p,q) <= C d_h(p,q) on a level set where |grad f| = C"
            }
            Experiment::SlimRatio => {
                "slim::ratio_table; L(beta_s)/s -> C/sqrt(1-eps) and t*/s -> 1/(2 sqrt(1-eps)), then eps -> 0"
            }
            Experiment::CosmoChecks => {
                "cosmo::tau_g_bruteforce and generator_checks; sup-length sandwich and unit-speed generators"
            }
            Experiment::Bigbang => {
                "cosmo::bigbang_experiment; level sets collapse to the initial singularity at rate t"
            }
            Experiment::PropertySuite => {
                "checks::run_all; seeded inequalities and identities of null length and null distance"
            }
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Minkowski,
    #[default]
    Grw,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpatialName {
    Euclidean,
    #[default]
    Torus,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacetimeBlock {
    #[serde(default)]
    pub family: FamilyName,
    /// Number of spatial dimensions; defaults to the torus sides or 2.
    pub dimension: Option<usize>,
    pub scale: Option<TimeExpr>,
    #[serde(default)]
    pub spatial: SpatialName,
    pub sides: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauKind {
    #[default]
    T,
    Phi,
    Cosmological,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauBlock {
    #[serde(default)]
    pub kind: TauKind,
    pub phi: Option<TimeExpr>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingBlock {
    pub seed: u64,
    pub pairs: Option<usize>,
    pub apexes: Option<usize>,
    pub restarts: Option<usize>,
    /// Level of the level set.
    pub t: Option<f64>,
    /// Gradient norm on the level set; computed from the first pair when absent.
    pub constant: Option<f64>,
    pub t_list: Option<Vec<f64>>,
    pub eps_list: Option<Vec<f64>>,
    pub s_list: Option<Vec<f64>>,
    pub points_per_level: Option<usize>,
    pub cases: Option<usize>,
    pub suites: Option<Vec<String>>,
    pub points: Option<usize>,
    pub curve_samples: Option<usize>,
    pub feet: Option<usize>,
    pub center: Option<Vec<f64>>,
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
    /// File stem for artifacts; defaults to the experiment name.
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub spacetime: SpacetimeBlock,
    #[serde(default)]
    pub tau: TauBlock,
    pub sampling: SamplingBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// A config problem, anchored to a line of the source when one can be found.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.path, l, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line of `key = ...` inside `[section]`, or of the section header.
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

pub struct Loaded {
    pub config: ExperimentConfig,
    src: String,
    path: String,
}

impl Loaded {
    pub fn error(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            path: self.path.clone(),
            line: locate(&self.src, section, key),
            message: message.into(),
        }
    }
}

pub fn parse(src: &str, path: &str) -> Result<Loaded, ConfigError> {
    let config: ExperimentConfig = toml::from_str(src).map_err(|e| {
        let line = e
            .span()
            .map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1);
        ConfigError {
            path: path.to_string(),
            line,
            message: e.message().trim().to_string(),
        }
    })?;
    let loaded = Loaded {
        config,
        src: src.to_string(),
        path: path.to_string(),
    };
    validate(&loaded)?;
    Ok(loaded)
}

pub fn load(path: &Path) -> Result<Loaded, ConfigError> {
    let shown = path.display().to_string();
    let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: shown.clone(),
        line: None,
        message: format!("cannot read config: {e}"),
    })?;
    parse(&src, &shown)
}

fn check_list(l: &Loaded, key: &str, list: &[f64], positive: bool, decreasing: bool) -> Result<(), ConfigError> {
    if list.is_empty() {
        return Err(l.error("sampling", key, format!("`{key}` must not be empty")));
    }
    if list.iter().any(|v| !v.is_finite() || (positive && *v <= 0.0)) {
        return Err(l.error("sampling", key, format!("`{key}` entries must be positive and finite")));
    }
    if decreasing && list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(l.error("sampling", key, format!("`{key}` must be strictly decreasing")));
    }
    Ok(())
}

fn validate(l: &Loaded) -> Result<(), ConfigError> {
    let c = &l.config;
    let st = &c.spacetime;
    if let Some(sides) = &st.sides {
        if sides.is_empty() || sides.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(l.error("spacetime", "sides", "torus sides must be positive"));
        }
        if let Some(d) = st.dimension {
            if d != sides.len() {
                return Err(l.error("spacetime", "dimension", "dimension disagrees with the number of sides"));
            }
        }
    }
    if st.dimension == Some(0) {
        return Err(l.error("spacetime", "dimension", "dimension must be at least 1"));
    }
    if st.family == FamilyName::Minkowski && (st.scale.is_some() || st.sides.is_some()) {
        return Err(l.error("spacetime", "family", "minkowski takes neither `scale` nor `sides`"));
    }
    if c.tau.kind == TauKind::Phi && c.tau.phi.is_none() {
        return Err(l.error("tau", "kind", "`kind = \"phi\"` needs `phi`"));
    }
    if c.tau.kind != TauKind::Phi && c.tau.phi.is_some() {
        return Err(l.error("tau", "phi", "`phi` is only used with `kind = \"phi\"`"));
    }
    let s = &c.sampling;
    for (key, v) in [
        ("pairs", s.pairs),
        ("apexes", s.apexes),
        ("points_per_level", s.points_per_level),
        ("cases", s.cases),
        ("points", s.points),
        ("curve_samples", s.curve_samples),
        ("feet", s.feet),
    ] {
        if v == Some(0) {
            return Err(l.error("sampling", key, format!("`{key}` must be positive")));
        }
    }
    if let Some(t) = &s.t_list {
        check_list(l, "t_list", t, true, true)?;
    }
    if let Some(s_list) = &s.s_list {
        check_list(l, "s_list", s_list, true, true)?;
    }
    if let Some(e) = &s.eps_list {
        check_list(l, "eps_list", e, true, true)?;
        if e.iter().any(|v| *v >= 1.0) {
            return Err(l.error("sampling", "eps_list", "epsilon values must lie in (0, 1)"));
        }
    }
    if let Some(suites) = &s.suites {
        if let Some(bad) = suites.iter().find(|n| !nullcone::checks::SUITES.contains(&n.as_str())) {
            return Err(l.error(
                "sampling",
                "suites",
                format!("unknown suite `{bad}`; known: {}", nullcone::checks::SUITES.join(", ")),
            ));
        }
    }
    match c.experiment {
        Experiment::MinkowskiTable if st.family != FamilyName::Minkowski => {
            return Err(l.error("spacetime", "family", "minkowski-table needs `family = \"minkowski\"`"));
        }
        Experiment::CosmoChecks | Experiment::Bigbang if st.family != FamilyName::Grw => {
            return Err(l.error("spacetime", "family", format!("{} needs a grw spacetime", c.experiment)));
        }
        Experiment::Bigbang if st.spatial != SpatialName::Torus => {
            return Err(l.error("spacetime", "spatial", "bigbang needs a torus spatial factor"));
        }
        Experiment::LevelSetInequality if s.t.is_none() => {
            return Err(l.error("sampling", "t", "level-set-inequality needs the level `t`"));
        }
        Experiment::SlimRatio if s.s_list.is_none() || s.eps_list.is_none() => {
            return Err(l.error("sampling", "s_list", "slim-ratio needs `s_list` and `eps_list`"));
        }
        Experiment::Bigbang if s.t_list.is_none() => {
            return Err(l.error("sampling", "t_list", "bigbang needs `t_list`"));
        }
        Experiment::PropertySuite if s.cases.is_some_and(|n| n < 200) => {
            return Err(l.error("sampling", "cases", "property suites run at least 200 cases"));
        }
        _ => {}
    }
    spacetime(l)?;
    time_function(l, &spacetime(l)?)?;
    Ok(())
}

pub fn spacetime(l: &Loaded) -> Result<Spacetime, ConfigError> {
    let b = &l.config.spacetime;
    let built = match b.family {
        FamilyName::Minkowski => Spacetime::minkowski(b.dimension.unwrap_or(2)),
        FamilyName::Grw => {
            let scale = b.scale.unwrap_or(TimeExpr::T);
            let spatial = match b.spatial {
                SpatialName::Euclidean => Spatial::Euclidean(b.dimension.unwrap_or(2)),
                SpatialName::Torus => {
                    Spatial::FlatTorus(b.sides.clone().unwrap_or_else(|| vec![1.0; b.dimension.unwrap_or(2)]))
                }
            };
            Spacetime::grw(scale, spatial)
        }
    };
    built.map_err(|e| l.error("spacetime", "family", e.to_string()))
}

pub fn time_function(l: &Loaded, st: &Spacetime) -> Result<TimeFunctionHandle, ConfigError> {
    let b = &l.config.tau;
    Ok(match b.kind {
        TauKind::T => TimeFunctionHandle::coordinate_t(),
        TauKind::Phi => TimeFunctionHandle::phi_of_t(b.phi.expect("validated")),
        TauKind::Cosmological => {
            TimeFunctionHandle::cosmological(st).map_err(|e| l.error("tau", "kind", e.to_string()))?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locates_keys_in_sections() {
        let src = "experiment = \"bigbang\"\n[sampling]\nseed = 1\nt_list = [0.1]\n[tau]\nkind = \"t\"\n";
        assert_eq!(locate(src, "sampling", "t_list"), Some(4));
        assert_eq!(locate(src, "tau", "phi"), Some(5));
        assert_eq!(locate(src, "output", "dir"), None);
    }

    #[test]
    fn missing_seed_is_rejected() {
        let err = parse("experiment = \"property-suite\"\n[sampling]\ncases = 200\n", "c.toml")
            .err()
            .unwrap();
        assert!(err.message.contains("seed"), "{err}");
        assert_eq!(err.line, Some(2));
    }
}
