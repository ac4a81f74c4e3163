use std::path::Path;
use std::process::Command;

use polar_denoise::cli::{run_in_memory, RunOptions};
use polar_denoise::prior::{save_prior, EmpiricalPrior, ImageGrid};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_polar-denoise"));
    c.env_remove("POLAR_DENOISE_JOBS");
    c
}

fn write_spec(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const PROFILE: &str = "\
[experiment]
name = profile
kind = drift_profile
seed = 4

[model]
dim = 30
sigma = 0.5

[prior]
kind = cluster_mixture
n = 6

[params]
probes = 40
";

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn version_and_usage() {
    let out = bin().arg("version").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("polar-denoise "));
    assert_eq!(bin().arg("frobnicate").status().unwrap().code(), Some(1));
    assert_eq!(bin().args(["run"]).status().unwrap().code(), Some(1));
    assert_eq!(bin().args(["run", "/nonexistent/spec"]).status().unwrap().code(), Some(1));
}

#[test]
fn malformed_spec_leaves_nothing_behind() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    for (i, text) in [
        "[experiment]\nname = bad\nkind = drift_profile\nthis line has no equals\n",
        "[experiment]\nname = bad\nkind = nonsense\n",
        &PROFILE.replace("probes = 40", "probes = 40\nprobse = 3"),
        &PROFILE.replace("sigma = 0.5", "sigma = -1"),
    ]
    .iter()
    .enumerate()
    {
        let spec = write_spec(tmp.path(), &format!("bad{i}.spec"), text);
        let status = bin().arg("run").arg(&spec).arg("--out").arg(&out).status().unwrap();
        assert_eq!(status.code(), Some(1), "case {i}");
        assert!(!out.exists(), "case {i} wrote output");
    }
}

#[test]
fn failed_check_exits_two_and_keeps_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(
        tmp.path(),
        "strict.spec",
        &PROFILE.replace("probes = 40", "probes = 40\nmax_rel_error = 1e-9"),
    );
    let out = tmp.path().join("out");
    let status = bin().arg("run").arg(&spec).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("profile/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["failed_checks"].as_array().unwrap().len(), 1);
}

#[test]
fn jobs_do_not_change_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "p.spec", PROFILE);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(bin().arg("run").arg(&spec).arg("--out").arg(&a).args(["--jobs", "1"]).status().unwrap().success());
    assert!(bin().arg("run").arg(&spec).arg("--out").arg(&b).args(["--jobs", "4"]).status().unwrap().success());
    assert!(bin().arg("run").arg(&spec).arg("--out").arg(&c).env("POLAR_DENOISE_JOBS", "3").status().unwrap().success());
    let fa = files(&a.join("profile"));
    assert_eq!(fa, files(&b.join("profile")));
    assert_eq!(fa, files(&c.join("profile")));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["drift_profile.csv", "drift_profile.gp", "manifest.json", "summary.json"]);
}

#[test]
fn seed_override_and_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "p.spec", &PROFILE.replace("seed = 4", "seed = 4\noutputs = results"));
    assert!(bin().arg("run").arg(&spec).args(["--seed", "9"]).status().unwrap().success());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("results/profile/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["spec_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn concentration_table_columns() {
    let text = "[experiment]\nname = c\nkind = concentration_table\n\n[params]\ndims = 10, 50, 100, 200\n";
    let (_, report) = run_in_memory(text, Path::new("."), &RunOptions::default()).unwrap();
    assert!(report.failures().is_empty(), "{:?}", report.failures());
    let csv = std::str::from_utf8(report.file("concentration.csv").unwrap()).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    for col in ["d", "sigma", "epsilon", "delta", "lhs_mass", "rhs_bound", "margin"] {
        assert!(header.contains(&col), "{col}");
    }
    assert_eq!(csv.lines().count(), 5);
}

const IMAGE: &str = "\
[experiment]
name = img
kind = image_reconstruction
seed = 3

[model]
sigma = 0.1

[prior]
source = file
path = copies.pdnz

[params]
resolution_log2 = 2
runs = 5
snapshots = SNAPS
";

#[test]
fn repeated_image_is_recovered() {
    let tmp = tempfile::tempdir().unwrap();
    let img = ImageGrid::from_fn(2, |u, v| (3.0 * u + v).sin().abs());
    let copies = vec![img.pixels().to_vec(); 10];
    save_prior(tmp.path().join("copies.pdnz"), &EmpiricalPrior::from_points(&copies, "copies").unwrap()).unwrap();

    let (_, report) = run_in_memory(&IMAGE.replace("SNAPS", "3"), tmp.path(), &RunOptions::default()).unwrap();
    let runs = std::str::from_utf8(report.file("runs.csv").unwrap()).unwrap();
    for line in runs.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert!(!cells[3].is_empty(), "unsnapped: {line}");
        assert!(cells[6].parse::<f64>().unwrap() <= 1e-3, "{line}");
    }
    for f in ["corrupted.csv", "snapshot_01.csv", "snapshot_03.csv", "endpoint.csv"] {
        assert!(report.file(f).is_some(), "{f}");
    }

    let (_, report) = run_in_memory(&IMAGE.replace("SNAPS", "0"), tmp.path(), &RunOptions::default()).unwrap();
    assert!(report.file("endpoint.csv").is_some());
    assert!(report.file("snapshot_01.csv").is_none());
}

#[test]
fn two_class_digits_keep_their_class() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../specs/image.spec")).unwrap();
    let (_, report) = run_in_memory(&text, Path::new("."), &RunOptions::default()).unwrap();
    assert!(report.failures().is_empty(), "{:?}", report.failures());
    let summary: serde_json::Value = serde_json::from_slice(report.file("summary.json").unwrap()).unwrap();
    assert!(summary["class_recovery_rate"].as_f64().unwrap() >= 0.9);
    assert_eq!(summary["d"], 64);
}
