use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

const BIN: &str = env!("CARGO_BIN_EXE_nspp");

fn nspp(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn example1() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example1.ini")
}

const TOY_POINTS: &str =
    "x,y\n0.1,0.2\n0.3,0.4\n0.5,0.5\n0.6,0.1\n0.9,0.9\n0.2,0.8\n0.7,0.3\n0.4,0.6\n0.8,0.5\n0.05,0.95\n";

fn toy_config(l: usize) -> String {
    format!(
        "[model]\nL = {l}\n[tuning]\niterations = 100\nburnin = 0\nthin = 2\nseed = 11\n\
         [io]\ndomain = 0 1 0 1\nmesh = 8\nmonitors = 0.5 0.5\nreferences = 0.25 0.25\n\
         [truth]\nlambda_star = 20\nphi = 0.5\n"
    )
}

/// Writes the toy config and points into `dir`.
fn toy(dir: &Path, l: usize) -> (PathBuf, PathBuf) {
    let cfg = dir.join("toy.ini");
    let pts = dir.join("toy.csv");
    fs::write(&cfg, toy_config(l)).unwrap();
    fs::write(&pts, TOY_POINTS).unwrap();
    (cfg, pts)
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn simulate_example1_writes_three_files_with_plausible_count() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("a/b/sim");
    let o = nspp(&["simulate", "--config", p(&example1()), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["points.csv", "truth_config.ini", "truth_generators.csv"]);
    // Expected count: each half has area 50 and the field has prior mean
    // zero, so E[Phi(beta)] = 1/2 and E[N] = 50 * (5 + 15) / 2 = 500.
    // Field variation makes the count overdispersed; the window is wide.
    let n = data_rows(&out.join("points.csv"));
    assert!((150..=900).contains(&n), "n = {n}");
    assert_eq!(data_rows(&out.join("truth_generators.csv")), 2);
}

#[test]
fn simulate_repeated_seed_is_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, _) = toy(tmp.path(), 1);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = nspp(&["simulate", "--config", p(&cfg), "--out", p(d), "--truth-mesh"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "points.csv",
        "truth_generators.csv",
        "truth_config.ini",
        "truth_intensity_mesh.csv",
    ] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = tmp.path().join("c");
    assert!(nspp(&["simulate", "--config", p(&cfg), "--out", p(&c), "--seed", "99"])
        .status
        .success());
    assert_ne!(
        fs::read(a.join("points.csv")).unwrap(),
        fs::read(c.join("points.csv")).unwrap()
    );
}

#[test]
fn simulate_invalid_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.ini");
    fs::write(&cfg, "[model]\nsigma2 = -1\n").unwrap();
    let o = nspp(&["simulate", "--config", p(&cfg), "--out", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.sigma2"));
    fs::write(&cfg, "[model]\nL = 1\n").unwrap();
    let o = nspp(&["simulate", "--config", p(&cfg), "--out", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(2), "missing truth section");
}

#[test]
fn fit_toy_is_fast_and_stores_thinned_records() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, pts) = toy(tmp.path(), 2);
    let run = tmp.path().join("run");
    let t = Instant::now();
    let o = nspp(&["fit", p(&pts), "--config", p(&cfg), "--out", p(&run)]);
    let secs = t.elapsed().as_secs_f64();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(secs < 5.0, "{secs}s");
    assert_eq!(data_rows(&run.join("trace.csv")), 50);
    assert_eq!(
        fs::read_to_string(run.join("samples.jsonl")).unwrap().lines().count(),
        50
    );
    assert!(run.join("checkpoint.json").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("partition acceptance"));
}

#[test]
fn fit_resume_matches_unbroken_run() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, pts) = toy(tmp.path(), 2);
    let whole = tmp.path().join("whole");
    let split = tmp.path().join("split");
    assert!(nspp(&["fit", p(&pts), "--config", p(&cfg), "--out", p(&whole)])
        .status
        .success());
    assert!(
        nspp(&["fit", p(&pts), "--config", p(&cfg), "--out", p(&split), "--iters", "37"])
            .status
            .success()
    );
    let o = nspp(&["fit", "--resume", p(&split.join("checkpoint.json")), "--iters", "63"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trace.csv", "samples.jsonl", "checkpoint.json"] {
        assert_eq!(
            fs::read_to_string(whole.join(f)).unwrap(),
            fs::read_to_string(split.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn fit_rerun_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, pts) = toy(tmp.path(), 2);
    let a = tmp.path().join("a");
    assert!(
        nspp(&["fit", p(&pts), "--config", p(&cfg), "--out", p(&a), "--iters", "30"])
            .status
            .success()
    );
    // rerun from the config echo alone
    let b = tmp.path().join("b");
    let o = nspp(&[
        "fit",
        p(&a.join("points.csv")),
        "--config",
        p(&a.join("config.ini")),
        "--out",
        p(&b),
        "--iters",
        "30",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(a.join("trace.csv")).unwrap(),
        fs::read(b.join("trace.csv")).unwrap()
    );
}

#[test]
fn fit_points_outside_domain_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, pts) = toy(tmp.path(), 2);
    fs::write(&pts, "x,y\n0.5,0.5\n1.5,0.25\n").unwrap();
    let o = nspp(&["fit", p(&pts), "--config", p(&cfg), "--out", p(&tmp.path().join("r"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(1.5, 0.25)"));
}

#[test]
fn fit_single_region() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, pts) = toy(tmp.path(), 2);
    let run = tmp.path().join("run");
    let o = nspp(&[
        "fit",
        p(&pts),
        "--config",
        p(&cfg),
        "--out",
        p(&run),
        "--L",
        "1",
        "--iters",
        "20",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(run.join("trace.csv")).unwrap();
    let header = trace.lines().next().unwrap();
    assert!(header.contains("lambda_star_1") && !header.contains("lambda_star_2"));
    assert_eq!(data_rows(&run.join("trace.csv")), 10);
}

#[test]
fn summarize_outputs_with_and_without_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, pts) = toy(tmp.path(), 2);
    let run = tmp.path().join("run");
    assert!(
        nspp(&["fit", p(&pts), "--config", p(&cfg), "--out", p(&run), "--iters", "80"])
            .status
            .success()
    );

    let o = nspp(&["summarize", p(&run)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("MSE"));
    assert_eq!(data_rows(&run.join("lambda_star_posterior.csv")), 2);
    for f in ["mesh_mean.csv", "mesh_q025.csv", "mesh_q975.csv", "corrmap_1.csv"] {
        assert_eq!(data_rows(&run.join(f)), 64, "{f}");
    }

    let sim = tmp.path().join("sim");
    assert!(
        nspp(&["simulate", "--config", p(&cfg), "--out", p(&sim), "--truth-mesh"])
            .status
            .success()
    );
    let truth = sim.join("truth_intensity_mesh.csv");
    let o = nspp(&[
        "summarize",
        p(&run),
        "--truth",
        p(&truth),
        "--out",
        p(&tmp.path().join("s")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("MSE"));

    let o = nspp(&["summarize", p(&run), "--truth", p(&truth), "--mesh", "5"]);
    assert_eq!(o.status.code(), Some(3), "truth/mesh mismatch");
}

#[test]
fn summarize_empty_trace_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, pts) = toy(tmp.path(), 2);
    let run = tmp.path().join("run");
    // all iterations fall in the burn-in
    let o = nspp(&[
        "fit",
        p(&pts),
        "--config",
        p(&cfg),
        "--out",
        p(&run),
        "--iters",
        "5",
        "--burnin",
        "10",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = nspp(&["summarize", p(&run)]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn check_suites() {
    let o = nspp(&["check", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nspp(&["check", "acceptance-oracle", "--n", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let o = nspp(&["check", "geweke", "--n", "2000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("max |z|"));
}
