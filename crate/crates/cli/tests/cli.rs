use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &[&str] = &[
    "--users", "16", "--movies", "8", "--epochs", "3", "--plays", "60", "--rounds", "6",
];

fn oteg(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_oteg"));
    cmd.args(args).env_remove("OTEG_OUT_DIR");
    if let Some(dir) = env_out {
        cmd.env("OTEG_OUT_DIR", dir);
    }
    cmd.output().expect("spawn oteg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn with_small<'a>(head: &[&'a str]) -> Vec<&'a str> {
    let mut v = head.to_vec();
    v.extend_from_slice(SMALL);
    v
}

#[test]
fn run_writes_csvs_to_out_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    let mut args = with_small(&["run", "--algorithms", "oteg,omeg1", "--out"]);
    args.insert(4, out_s);
    let o = oteg(&args, None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let loss = fs::read_to_string(out.join("loss_oteg.csv")).unwrap();
    assert_eq!(loss.lines().next(), Some("round,avg_loss"));
    assert_eq!(loss.lines().count(), 7);
    let steps = fs::read_to_string(out.join("steps_omeg1.csv")).unwrap();
    assert_eq!(steps.lines().next(), Some("t,i,j,k,y,p,loss"));
    assert_eq!(steps.lines().count(), 61);
    assert!(out.join("losses.svg").exists());
}

#[test]
fn env_var_sets_output_dir_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("env");
    let o = oteg(
        &with_small(&["run", "--algorithms", "omeg1"]),
        Some(&env_dir),
    );
    assert!(o.status.success());
    assert!(env_dir.join("compare.csv").exists());

    let flag_dir = dir.path().join("flag");
    let mut args = with_small(&["run", "--algorithms", "omeg1", "-o"]);
    args.insert(4, flag_dir.to_str().unwrap());
    let o = oteg(&args, Some(&dir.path().join("unused")));
    assert!(o.status.success());
    assert!(flag_dir.join("compare.csv").exists());
    assert!(!dir.path().join("unused").exists());
}

#[test]
fn config_file_then_set_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# small run\nusers = 16\nmovies = 8\nepochs = 3\nplays = 60\nrounds = 6\nalgorithms = oteg\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = oteg(
        &[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "rounds=5",
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("rounds=5"), "{manifest}");
    assert!(manifest.contains("algorithms=oteg"), "{manifest}");
    assert_eq!(
        fs::read_to_string(out.join("loss_oteg.csv"))
            .unwrap()
            .lines()
            .count(),
        6
    );
}

#[test]
fn run_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut listings = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.path().join(tag);
        let o = oteg(
            &with_small(&[
                "run",
                "--algorithms",
                "oteg,slicewise,omeg2",
                "--dataset",
                "b",
            ]),
            Some(&out),
        );
        assert!(o.status.success());
        let mut files: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .map(|p| (p.file_name().unwrap().to_owned(), fs::read(&p).unwrap()))
            .collect();
        files.sort();
        listings.push(files);
    }
    assert_eq!(listings[0], listings[1]);
}

#[test]
fn datagen_writes_dataset_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = oteg(&with_small(&["datagen"]), Some(dir.path()));
    assert!(o.status.success());
    for f in [
        "ratings.t3d",
        "game.t3d",
        "game.csv",
        "graph.txt",
        "manifest.txt",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn bound_reports_threshold_and_bound() {
    let o = oteg(&with_small(&["bound", "--lipschitz", "1"]), None);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("T = 60, G = 1"), "{s}");
    assert!(s.contains("regret bound ="), "{s}");
}

#[test]
fn compare_ranks_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let o = oteg(
        &with_small(&["compare", "--algorithms", "oteg,omeg"]),
        Some(dir.path()),
    );
    assert!(o.status.success());
    let s = stdout(&o);
    for id in ["oteg", "omeg1", "omeg2", "omeg3"] {
        assert!(s.lines().any(|l| l.starts_with(id)), "{id} missing:\n{s}");
    }
}

#[test]
fn verify_subset_passes() {
    let o = oteg(&["verify", "--quick", "--only", "1,2,3,4,7,9"], None);
    let s = stdout(&o);
    assert!(o.status.success(), "{s}");
    assert_eq!(
        s.lines().filter(|l| l.starts_with("PASS")).count(),
        6,
        "{s}"
    );
}

#[test]
fn bad_settings_exit_with_error() {
    for args in [
        &["run", "--set", "bogus=1"][..],
        &["run", "--set", "rounds"][..],
        &["run", "--plays", "2.5"][..],
        &["run", "--config", "/nonexistent/run.cfg"][..],
    ] {
        let o = oteg(args, None);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
}

#[test]
fn oversized_budget_is_rejected() {
    let o = oteg(&with_small(&["run", "--set", "plays=100000"]), None);
    assert_eq!(o.status.code(), Some(2));
}
