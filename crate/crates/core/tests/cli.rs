use std::fs;
use std::path::Path;

use basketmap::cli::{self, run_with};
use sha2::{Digest, Sha256};
use tempfile::TempDir;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["basketmap"];
    argv.extend_from_slice(args);
    let code = run_with(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn digest(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

/// Small synthetic matrix so CLI tests stay fast.
fn synth_small(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("synth");
    let r = run(&["synth", "--out", p(&out), "--n-baskets", "400", "--seed", "3"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    out.join(cli::BASKETS_FILE)
}

#[test]
fn ingest_counts_baskets() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("ingest");
    let r = run(&["ingest", "--input", &fixture("six_rows.csv"), "--out", p(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("3 baskets"), "{}", r.stdout);
    for f in [cli::BASKETS_FILE, cli::CATALOG_FILE, cli::MANIFEST_FILE] {
        assert!(out.join(f).exists(), "{f}");
    }
    let catalog = fs::read_to_string(out.join(cli::CATALOG_FILE)).unwrap();
    assert!(catalog.starts_with("index,product\n0,Aceite vegetal\n"));
}

#[test]
fn ingest_table_one_file_lists_catalog_in_header() {
    let tmp = TempDir::new().unwrap();
    let r = run(&["ingest", "--input", &fixture("transactions_50.csv"), "--out", p(tmp.path())]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let matrix = fs::read_to_string(tmp.path().join(cli::BASKETS_FILE)).unwrap();
    let header = matrix.lines().next().unwrap();
    assert!(header.starts_with("basket_id,client_id,date,Aceite vegetal,Arroz grado 2,"));
    assert!(header.contains("\"Salsa de tomate, sachet\""));
    // two calendar months in the fixture
    assert!(r.stdout.contains("2011-09: 10 baskets"), "{}", r.stdout);
    assert!(r.stdout.contains("2011-10: 6 baskets"), "{}", r.stdout);
    let manifest = fs::read_to_string(tmp.path().join(cli::MANIFEST_FILE)).unwrap();
    let expected = hex::encode(Sha256::digest(fs::read(fixture("transactions_50.csv")).unwrap()));
    assert!(manifest.contains(&format!("# sha256 input = {expected}")));
}

#[test]
fn ingest_empty_file_names_missing_header() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let r = run(&["ingest", "--input", p(&empty), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("header"), "{}", r.stderr);
}

#[test]
fn ingest_bad_rows_fail_with_line_numbers_unless_allowed() {
    let tmp = TempDir::new().unwrap();
    let r = run(&["ingest", "--input", &fixture("bad_weekday.csv"), "--out", p(tmp.path())]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("line 5"), "{}", r.stderr);

    let r = run(&["ingest", "--input", &fixture("bad_weekday.csv"), "--out", p(tmp.path()), "--allow-bad-rows"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("2 baskets"));
}

#[test]
fn ingest_missing_input_is_io_error() {
    let tmp = TempDir::new().unwrap();
    let r = run(&["ingest", "--input", p(&tmp.path().join("nope.csv")), "--out", p(tmp.path())]);
    assert_eq!(r.code, 2);
}

#[test]
fn train_defaults_write_map_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let baskets = synth_small(tmp.path());
    let out = tmp.path().join("train");
    let r = run(&["train", "--baskets", p(&baskets), "--out", p(&out), "--seed", "5"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("initial quantization error"));
    assert!(r.stdout.contains("final quantization error"));
    let map = fs::read_to_string(out.join(cli::MAP_FILE)).unwrap();
    assert!(map.contains("# rows = 10\n# cols = 12\n"));
    assert!(map.contains("# learning_rate = 0.8\n# iterations = 20000\n"));
    let manifest = fs::read_to_string(out.join(cli::MANIFEST_FILE)).unwrap();
    assert!(manifest.contains("# command = train"));
    assert!(manifest.contains("# sha256 baskets = "));
    assert!(manifest.contains("iters = 20000\n"));
    assert!(manifest.contains("seed = 5\n"));
}

#[test]
fn train_rejects_zero_iterations() {
    let tmp = TempDir::new().unwrap();
    let baskets = synth_small(tmp.path());
    let r = run(&["train", "--baskets", p(&baskets), "--out", p(tmp.path()), "--iters", "0"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("iterations must be ≥ 1"), "{}", r.stderr);

    let r = run(&["train", "--baskets", p(&baskets), "--out", p(tmp.path()), "--rate", "abc"]);
    assert_eq!(r.code, 1);
    let r = run(&["train", "--baskets", p(&baskets), "--out", p(tmp.path()), "--schedule", "cosine"]);
    assert_eq!(r.code, 1);
}

#[test]
fn train_is_reproducible_and_manifest_reruns() {
    let tmp = TempDir::new().unwrap();
    let baskets = synth_small(tmp.path());
    let args = |out: &Path| {
        vec![
            "train".to_string(),
            "--baskets".into(),
            p(&baskets).into(),
            "--out".into(),
            p(out).into(),
            "--iters".into(),
            "3000".into(),
            "--seed".into(),
            "77".into(),
        ]
    };
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let argv = args(out);
        let r = run(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
    assert_eq!(digest(&a.join(cli::MAP_FILE)), digest(&b.join(cli::MAP_FILE)));

    // the manifest alone reproduces the run
    let c = tmp.path().join("c");
    let manifest = a.join(cli::MANIFEST_FILE);
    let r = run(&["train", "--config", p(&manifest), "--out", p(&c)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(digest(&a.join(cli::MAP_FILE)), digest(&c.join(cli::MAP_FILE)));
}

#[test]
fn config_file_values_apply_and_flags_override() {
    let tmp = TempDir::new().unwrap();
    let baskets = synth_small(tmp.path());
    let config = tmp.path().join("run.conf");
    fs::write(&config, format!("baskets = {}\nrows = 4\ncols = 5\niters = 200\n", p(&baskets))).unwrap();
    let out = tmp.path().join("t");
    let r = run(&["train", "--config", p(&config), "--out", p(&out), "--cols", "6"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let map = fs::read_to_string(out.join(cli::MAP_FILE)).unwrap();
    assert!(map.contains("# rows = 4\n# cols = 6\n"));

    fs::write(&config, "bogus = 1\n").unwrap();
    let r = run(&["train", "--config", p(&config), "--baskets", p(&baskets), "--out", p(&out)]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("bogus"));
}

#[test]
fn full_pipeline_writes_all_report_artifacts() {
    let tmp = TempDir::new().unwrap();
    let baskets = synth_small(tmp.path());
    let trained = tmp.path().join("train");
    let r = run(&["train", "--baskets", p(&baskets), "--out", p(&trained), "--iters", "4000"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let map = trained.join(cli::MAP_FILE);
    let out = tmp.path().join("report");
    let r = run(&["report", "--map", p(&map), "--baskets", p(&baskets), "--out", p(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    for f in [cli::UMATRIX_FILE, cli::GRIDMAP_FILE, cli::CLUSTERS_FILE, cli::LABELS_FILE, cli::STATS_FILE] {
        let len = fs::metadata(out.join(f)).map(|m| m.len()).unwrap_or(0);
        assert!(len > 0, "{f} missing or empty");
    }
    assert!(fs::read(out.join(cli::UMATRIX_FILE)).unwrap().starts_with(b"P5"));
    assert!(out.join(cli::MANIFEST_FILE).exists());

    // identical inputs and flags give byte-identical outputs
    let again = tmp.path().join("report2");
    let r = run(&["report", "--map", p(&map), "--baskets", p(&baskets), "--out", p(&again)]);
    assert_eq!(r.code, 0);
    for f in [cli::UMATRIX_FILE, cli::GRIDMAP_FILE, cli::CLUSTERS_FILE, cli::LABELS_FILE, cli::STATS_FILE] {
        assert_eq!(digest(&out.join(f)), digest(&again.join(f)), "{f}");
    }
}

#[test]
fn report_validates_flags_and_inputs() {
    let tmp = TempDir::new().unwrap();
    let baskets = synth_small(tmp.path());
    let r = run(&["report", "--map", "x", "--baskets", p(&baskets), "--out", p(tmp.path()), "--theta", "1.1"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("theta"));
    let r = run(&["report", "--map", p(&tmp.path().join("missing.map")), "--baskets", p(&baskets), "--out", p(tmp.path())]);
    assert_eq!(r.code, 2);
    let r = run(&["report", "--baskets", p(&baskets), "--out", p(tmp.path())]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("--map"));
}

#[test]
fn unknown_subcommand_and_help() {
    assert_eq!(run(&["frobnicate"]).code, 1);
    let help = run(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("train"));
}
