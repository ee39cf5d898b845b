use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn samplopt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_samplopt"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .env("SAMPLOPT_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

// short reference chains keep the sweep tests quick
const FAST: &str = r#"{
  "budget": 20000,
  "sampler_reference": {"steps": 20000, "retry_cap": 0, "agreement": {"mode": "relative", "fraction": 0.2}}
}"#;

#[test]
fn bounds_prints_rho() {
    let dir = tempfile::tempdir().unwrap();
    let o = samplopt(
        &[
            "bounds", "--L", "1", "--m", "1", "--R", "0", "--eps", "0.5", "--dim", "4",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(
        out.lines()
            .any(|l| l.starts_with("rho_lower") && l.ends_with("5.000000e-1")),
        "{out}"
    );
    assert!(out.contains("\"rho_lower\": 0.5"));
}

#[test]
fn run_twice_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "run",
        "--algo",
        "ula",
        "--objective",
        "quadratic",
        "--dim",
        "2",
        "--steps",
        "1000",
        "--seed",
        "7",
    ];
    let a = samplopt(&args, dir.path());
    let b = samplopt(&args, dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("algo,objective,dim,"));
    assert_eq!(text.lines().count(), 2);
    assert!(String::from_utf8_lossy(&a.stderr).contains("2 per MALA step"));
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("fast.json"), FAST).unwrap();
    let o = samplopt(
        &[
            "sweep",
            "--config",
            "fast.json",
            "--dims",
            "2,3,4",
            "--algos",
            "em,ula",
            "--trials",
            "3",
            "--out",
            "runs.csv",
            "--summary",
            "summary.json",
            "--plot",
            "plot.svg",
        ],
        dir.path(),
    );
    // short references may fail at some d; those cells are error rows
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{o:?}");
    let csv = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 18);
    assert!(stdout(&o).contains("gradient queries: 1 per EM iteration"));
    assert!(fs::read_to_string(dir.path().join("plot.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn outputs_are_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("fast.json"), FAST).unwrap();
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let (csv, json, svg) = (
            format!("{tag}.csv"),
            format!("{tag}.json"),
            format!("{tag}.svg"),
        );
        let o = samplopt(
            &[
                "sweep",
                "--config",
                "fast.json",
                "--dims",
                "2,3",
                "--algos",
                "em,ula",
                "--trials",
                "2",
                "--seed",
                "5",
                "--out",
                &csv,
                "--summary",
                &json,
                "--plot",
                &svg,
            ],
            dir.path(),
        );
        assert!(matches!(o.status.code(), Some(0) | Some(3)));
        outputs.push([csv, json, svg].map(|f| fs::read(dir.path().join(f)).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);

    let gen = |out: &str| {
        samplopt(
            &["gen-data", "--dim", "5", "--seed", "3", "--out", out],
            dir.path(),
        )
    };
    assert_eq!(gen("d1.json").status.code(), Some(0));
    assert_eq!(gen("d2.json").status.code(), Some(0));
    assert_eq!(
        fs::read(dir.path().join("d1.json")).unwrap(),
        fs::read(dir.path().join("d2.json")).unwrap()
    );
    let ds = samplopt::gmm_data::Dataset::from_json(
        &fs::read_to_string(dir.path().join("d1.json")).unwrap(),
    )
    .unwrap();
    assert!(samplopt::gmm_data::validate_dataset(&ds).is_empty());
}

#[test]
fn plot_from_csv_matches_plot_from_summary() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("fast.json"), FAST).unwrap();
    samplopt(
        &[
            "sweep",
            "--config",
            "fast.json",
            "--dims",
            "2,3",
            "--algos",
            "em",
            "--trials",
            "2",
            "--out",
            "r.csv",
            "--summary",
            "s.json",
        ],
        dir.path(),
    );
    assert_eq!(
        samplopt(&["plot", "--csv", "r.csv", "--out", "a.svg"], dir.path())
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        samplopt(
            &["plot", "--summary", "s.json", "--out", "b.svg"],
            dir.path()
        )
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        fs::read(dir.path().join("a.svg")).unwrap(),
        fs::read(dir.path().join("b.svg")).unwrap()
    );
}

#[test]
fn user_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 6] = [
        &[
            "bounds", "--L", "1", "--m", "1", "--R", "0", "--eps", "0.5", "--dim", "4", "--bogus",
        ],
        &["sweep", "--trials", "0"],
        &["sweep", "--config", "missing.json"],
        &[
            "run",
            "--algo",
            "sgd",
            "--objective",
            "quadratic",
            "--dim",
            "2",
            "--steps",
            "10",
        ],
        &[
            "bounds", "--L", "1", "--m", "1", "--R", "0", "--eps", "2", "--dim", "4",
        ],
        &["no-such-command"],
    ];
    for args in cases {
        let o = samplopt(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {o:?}");
        assert!(!o.stderr.is_empty());
    }
    let o = samplopt(&["bounds", "--bogus"], dir.path());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn every_subcommand_has_help() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["bounds", "gen-data", "run", "sweep", "validate", "plot"] {
        let o = samplopt(&[sub, "--help"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
}
