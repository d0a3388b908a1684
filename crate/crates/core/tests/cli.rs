use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ldts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldts"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn generate(dir: &Path, n: &str, noise: &str, seed: &str) {
    let out = ldts(&[
        "generate",
        "--n",
        n,
        "--classes",
        "4",
        "--noise",
        noise,
        "--seed",
        seed,
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn generate_writes_the_dataset_files() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    let out = ldts(&[
        "generate",
        "--n",
        "2000",
        "--classes",
        "4",
        "--noise",
        "0.3",
        "--seed",
        "7",
        "--aux-types",
        "1",
        "--out",
        ds.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let names: Vec<String> = dir_bytes(&ds).into_iter().map(|(n, _)| n).collect();
    for f in [
        "features.csv",
        "labels.csv",
        "split.csv",
        "flags.csv",
        "edges_aux0.csv",
    ] {
        assert!(names.contains(&f.to_string()), "{f} missing from {names:?}");
    }
}

#[test]
fn generate_without_out_is_a_usage_error() {
    let out = ldts(&["generate", "--n", "100"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    generate(&tmp.path().join("a"), "300", "0.2", "5");
    generate(&tmp.path().join("b"), "300", "0.2", "5");
    assert_eq!(
        dir_bytes(&tmp.path().join("a")),
        dir_bytes(&tmp.path().join("b"))
    );
}

#[test]
fn bad_flags_exit_two() {
    assert_eq!(
        ldts(&["train", "--data", "x", "--strategy", "sgd"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(ldts(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        ldts(&[
            "pacing-table",
            "--kind",
            "linear",
            "--lambda0",
            "0",
            "--T",
            "10"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn train_writes_telemetry_checkpoint_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    let out_dir = tmp.path().join("run");
    generate(&ds, "400", "0.3", "1");
    let out = ldts(&[
        "train",
        "--data",
        ds.to_str().unwrap(),
        "--strategy",
        "ldts",
        "--lambda0",
        "0.25",
        "--T",
        "40",
        "--seed",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.trim().starts_with("val=") && stdout.contains(" test="),
        "{stdout}"
    );
    let telemetry = fs::read_to_string(out_dir.join("telemetry_ldts_seed1.csv")).unwrap();
    assert!(telemetry.lines().count() > 40);
    let model = ldts::nn::ModelParams::load(&out_dir.join("model_ldts_seed1.bin")).unwrap();
    assert_eq!(model.class_count(), 4);

    // re-running the same command leaves results.csv byte-identical
    let before = fs::read(out_dir.join("results.csv")).unwrap();
    let again = ldts(&[
        "train",
        "--data",
        ds.to_str().unwrap(),
        "--strategy",
        "ldts",
        "--lambda0",
        "0.25",
        "--T",
        "40",
        "--seed",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert!(again.status.success());
    assert_eq!(before, fs::read(out_dir.join("results.csv")).unwrap());
}

#[test]
fn ldts_with_full_pacing_matches_plain() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    generate(&ds, "400", "0.3", "2");
    let run = |strategy: &str| {
        let out = ldts(&[
            "train",
            "--data",
            ds.to_str().unwrap(),
            "--strategy",
            strategy,
            "--lambda0",
            "1",
            "--T",
            "20",
            "--seed",
            "4",
            "--out",
            tmp.path().join(strategy).to_str().unwrap(),
        ]);
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(run("plain"), run("ldts"));
}

#[test]
fn corrupt_dataset_exits_one_naming_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    generate(&ds, "200", "0.0", "3");
    fs::write(ds.join("split.csv"), "node,split\n0,sideways\n").unwrap();
    let out = ldts(&[
        "train",
        "--data",
        ds.to_str().unwrap(),
        "--strategy",
        "plain",
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("split.csv"));
}

#[test]
fn compare_grid_and_duplicate_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    generate(&ds, "300", "0.3", "9");
    let common = [
        "--data",
        ds.to_str().unwrap(),
        "--T",
        "10",
        "--max-epochs",
        "40",
        "--patience",
        "5",
    ];

    let grid = tmp.path().join("grid");
    let mut args = vec!["compare", "--out", grid.to_str().unwrap()];
    args.extend(common);
    let out = ldts(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let results = fs::read_to_string(grid.join("results.csv")).unwrap();
    let rows: Vec<&str> = results
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 15);
    let summary = fs::read_to_string(grid.join("summary.txt")).unwrap();
    assert_eq!(summary.matches("± ").count(), 6);
    assert!(results.starts_with("# generated_unix="));

    let dup = tmp.path().join("dup");
    let mut args = vec![
        "compare",
        "--out",
        dup.to_str().unwrap(),
        "--strategies",
        "ldts",
        "--seeds",
        "3,3,3,3,3",
    ];
    args.extend(common);
    let out = ldts(&args);
    assert!(out.status.success());
    let summary = fs::read_to_string(dup.join("summary.txt")).unwrap();
    assert_eq!(summary.matches("± 0.0000").count(), 2, "{summary}");
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("pace.cfg");
    fs::write(&cfg, "kind=geom\nlambda0=0.25\nT=4\n").unwrap();
    let out = ldts(&["pacing-table", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.contains("\n2,0.5\n"), "{text}");
}

#[test]
fn pacing_table_prints_csv() {
    let out = ldts(&[
        "pacing-table",
        "--kind",
        "linear",
        "--lambda0",
        "0.2",
        "--T",
        "4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epoch,fraction");
    assert_eq!(lines[1], "0,0.2");
    assert_eq!(lines[5], "4,1");
    assert_eq!(lines.len(), 6);
}
