use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hjinv(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjinv")).args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// `(x, value)` rows of a 1D grid CSV.
fn rows(path: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (x, v) = l.split_once(',').unwrap();
            (x.parse().unwrap(), v.parse().unwrap())
        })
        .collect()
}

/// Largest deviation from reference points, matching each to the nearest node.
fn worst_against(csv: &Path, reference: &str) -> f64 {
    let got = rows(csv);
    let path = format!("{}/../core/tests/data/{reference}", env!("CARGO_MANIFEST_DIR"));
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut it = l.split('\t').map(|s| s.parse::<f64>().unwrap());
            let (x, y) = (it.next().unwrap(), it.next().unwrap());
            let near = got.iter().min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs())).unwrap();
            (near.1 - y).abs()
        })
        .fold(0.0, f64::max)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("MANIFEST.json")).unwrap()).unwrap()
}

#[test]
fn forward_transform_matches_reference_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hjinv(
        &["transform", "--dir", "forward", "--catalog", "u1", "--T", "0.5", "--H", "quadratic:1", "--box", "-4:4", "--res", "1001", "--out", "f"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("f");
    assert!(worst_against(&out.join("output.csv"), "u1_forward_t0.5.tsv") <= 2.0 * 0.008);
    let m = manifest(&out);
    assert_eq!(m["region_of_interest"]["res"][0], 1001);
    assert!(m["margin_cells"][0].as_u64().unwrap() > 0);
}

#[test]
fn backward_transform_matches_reference_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hjinv(&["transform", "--dir", "backward", "--catalog", "u3", "--T", "1", "--out", "b"], tmp.path());
    assert_eq!(code(&o), 0);
    assert!(worst_against(&tmp.path().join("b/output.csv"), "u3_backward_t1.tsv") <= 2.0 * 0.008);
}

#[test]
fn forward_of_zero_grid_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("# box=-2:2 res=101\n");
    for k in 0..101 {
        csv.push_str(&format!("{},0\n", -2.0 + 0.04 * k as f64));
    }
    fs::write(tmp.path().join("zero.csv"), csv).unwrap();
    let o = hjinv(&["transform", "--grid", "zero.csv", "--T", "0.7", "--out", "z"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&tmp.path().join("z/output.csv"));
    assert!(!r.is_empty());
    assert!(r.iter().all(|(_, v)| *v == 0.0));
}

#[test]
fn outputs_are_deterministic_and_hashed() {
    let tmp = tempfile::tempdir().unwrap();
    let mut hashes = vec![];
    for (threads, dir) in [("1", "a"), ("4", "b")] {
        let o = Command::new(env!("CARGO_BIN_EXE_hjinv"))
            .args(["envelope", "--catalog", "u4", "--out", dir])
            .env("RAYON_NUM_THREADS", threads)
            .current_dir(tmp.path())
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        let m = manifest(&tmp.path().join(dir));
        let files = m["files"].as_array().unwrap().clone();
        assert_eq!(files.len(), 2);
        for f in &files {
            assert!(tmp.path().join(dir).join(f["path"].as_str().unwrap()).exists());
        }
        hashes.push(files);
    }
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn reach_reports_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hjinv(&["reach", "--catalog", "u3", "--T", "1"], tmp.path());
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["verdict"], "NotReachable");
    let o = hjinv(&["reach", "--catalog", "u1"], tmp.path());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["verdict"], "Reachable");
}

#[test]
fn xset_and_membership() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hjinv(&["xset", "--catalog", "u1", "--out", "x"], tmp.path());
    assert_eq!(code(&o), 0);
    let m = manifest(&tmp.path().join("x"));
    let holes = m["results"]["complement_intervals"].as_array().unwrap();
    assert_eq!(holes.len(), 2);
    assert!((holes[1][0].as_f64().unwrap() - 0.5).abs() <= 3.0 * 0.008);

    let o = hjinv(&["member", "--catalog", "u1", "--candidate", "x/minimal.csv"], tmp.path());
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["member"], true);

    fs::write(tmp.path().join("flat.json"), r#"{"dimension":1,"clauses":[],"default":2.0}"#).unwrap();
    let o = hjinv(&["member", "--catalog", "u1", "--candidate", "flat.json"], tmp.path());
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["member"], false);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&hjinv(&["reach", "--catalog", "u9"], tmp.path())), 2);
    assert_eq!(code(&hjinv(&["reach", "--catalog", "u1", "--res", "5"], tmp.path())), 2);
    assert_eq!(code(&hjinv(&["reach", "--catalog", "u1", "--T", "0"], tmp.path())), 2);
    assert_eq!(code(&hjinv(&["reach"], tmp.path())), 2);
    assert_eq!(code(&hjinv(&["transform", "--catalog", "u1", "--eps", "-1"], tmp.path())), 2);
    assert_eq!(code(&hjinv(&["demo", "ex99"], tmp.path())), 2);
    // an unreachable target has no coincidence set
    let o = hjinv(&["xset", "--catalog", "u3"], tmp.path());
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not reachable"));
}

#[test]
fn demos_pass_their_checks() {
    let tmp = tempfile::tempdir().unwrap();
    for id in ["ex31", "ex33"] {
        let o = hjinv(&["demo", id, "--out", "d"], tmp.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
        let m = manifest(&tmp.path().join("d").join(id));
        assert_eq!(m["results"]["pass"], true);
        assert!(m["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    }
    assert!(tmp.path().join("d/ex31/u1_mask.csv").exists());
    assert!(tmp.path().join("d/ex33/u4_envelope.csv").exists());
}
