use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nullcone"))
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

const MINKOWSKI: &str = r#"
experiment = "minkowski-table"

[spacetime]
family = "minkowski"
dimension = 1

[sampling]
seed = 3
pairs = 12
"#;

#[test]
fn list_names_every_experiment() {
    let o = bin().arg("--list").output().unwrap();
    assert!(o.status.success());
    let s = text(&o.stdout);
    for name in [
        "minkowski-table",
        "level-set-inequality",
        "slim-ratio",
        "cosmo-checks",
        "bigbang",
        "property-suite",
    ] {
        assert!(s.lines().any(|l| l.starts_with(name)), "{name} missing from\n{s}");
    }
}

#[test]
fn minkowski_table_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", MINKOWSKI);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let oa = run(&cfg, &a, &[]);
    let ob = run(&cfg, &b, &[]);
    assert_eq!(oa.status.code(), Some(0), "{}", text(&oa.stderr));
    assert_eq!(ob.status.code(), Some(0));
    for f in [
        "minkowski-table.csv",
        "minkowski-table_estimates.csv",
        "minkowski-table_summary.json",
    ] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let csv = std::fs::read_to_string(a.join("minkowski-table.csv")).unwrap();
    assert!(csv.starts_with("id,p,q,exact,upper,lower,rel_err,pass\n"));
    assert_eq!(csv.lines().count(), 13);

    let c = dir.path().join("c");
    assert_eq!(run(&cfg, &c, &["--seed", "4"]).status.code(), Some(0));
    assert_ne!(
        std::fs::read(a.join("minkowski-table.csv")).unwrap(),
        std::fs::read(c.join("minkowski-table.csv")).unwrap()
    );
    // No temporary files are left next to the artifacts.
    assert_eq!(std::fs::read_dir(&a).unwrap().count(), 3);
}

#[test]
fn invalid_configs_exit_two_with_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        (
            "unknown key",
            "experiment = \"property-suite\"\n[sampling]\nseed = 1\nbogus = 2\n",
            4,
        ),
        (
            "no seed",
            "experiment = \"property-suite\"\n\n[sampling]\ncases = 300\n",
            3,
        ),
        (
            "epsilon",
            "experiment = \"slim-ratio\"\n[sampling]\nseed = 1\ns_list = [0.1, 0.01]\neps_list = [1.5]\n",
            5,
        ),
        (
            "expression",
            "experiment = \"bigbang\"\n[spacetime]\nscale = \"sin(t)\"\n[sampling]\nseed = 1\nt_list = [0.1]\n",
            3,
        ),
        (
            "few cases",
            "experiment = \"property-suite\"\n[sampling]\nseed = 1\ncases = 20\n",
            4,
        ),
    ];
    for (name, body, line) in cases {
        let cfg = write_config(dir.path(), "bad.toml", body);
        let o = run(&cfg, &out, &[]);
        let err = text(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "{name}: {err}");
        assert!(err.contains(&format!("bad.toml:{line}:")), "{name}: {err}");
    }
    assert!(!out.exists());
    let missing = run(&dir.path().join("nope.toml"), &out, &[]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn static_control_fails_with_hypothesis_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "control.toml",
        r#"
experiment = "bigbang"
[spacetime]
scale = "const 1"
[sampling]
seed = 2
t_list = [0.2, 0.1, 0.05]
points_per_level = 8
"#,
    );
    let o = run(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("HypothesisNotMet"), "{}", text(&o.stderr));
    assert!(dir.path().join("bigbang_levels.csv").exists());
}

#[test]
fn wrong_gradient_constant_is_an_assertion_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ls.toml",
        r#"
experiment = "level-set-inequality"
[tau]
kind = "phi"
phi = "t^2"
[sampling]
seed = 2
t = 1.0
constant = 1.0
pairs = 4
"#,
    );
    let o = run(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("precondition"));
}

#[test]
fn shipped_configs_run() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let out = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        let o = run(&path, out.path(), &[]);
        let expected = if path.file_stem().unwrap() == "bigbang-control" {
            1
        } else {
            0
        };
        assert_eq!(
            o.status.code(),
            Some(expected),
            "{}: {}",
            path.display(),
            text(&o.stderr)
        );
        seen += 1;
    }
    assert_eq!(seen, 7);
    let slim = std::fs::read_to_string(out.path().join("slim-ratio.csv")).unwrap();
    assert!(slim.starts_with("epsilon,s,t_star_over_s,ratio\n"));
}
