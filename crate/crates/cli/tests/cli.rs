use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn scav(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scav"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn scav")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert_eq!(o.status.code(), Some(0), "stdout:\n{}\nstderr:\n{}", stdout(&o), stderr(&o));
    o
}

fn dir_contents(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn small_set(cwd: &Path, name: &str) {
    ok(scav(&["gen-synthetic", "--pairs", "40", "--seed", "3", "--out", name], cwd));
}

#[test]
fn gen_synthetic_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for d in ["a", "b"] {
        ok(scav(&["gen-synthetic", "--pairs", "8", "--seed", "1", "--out", d], tmp.path()));
    }
    let a = dir_contents(&tmp.path().join("a"));
    assert_eq!(a.len(), 17);
    assert_eq!(a, dir_contents(&tmp.path().join("b")));
}

#[test]
fn holdout_splits_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    ok(scav(&["gen-synthetic", "--pairs", "10", "--holdout", "3", "--out", "d"], tmp.path()));
    let read = |n: &str| fs::read_to_string(tmp.path().join("d").join(n)).unwrap();
    let (all, train, test) = (read("manifest.tsv"), read("train.tsv"), read("test.tsv"));
    assert_eq!(train.lines().count(), 7);
    assert_eq!(test.lines().count(), 3);
    assert_eq!(format!("{train}{test}"), all);
    assert!(test.starts_with("pair00007\t"));
}

#[test]
fn resolved_config_goes_to_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ok(scav(&["gen-synthetic", "--pairs", "4", "--out", "d"], tmp.path()));
    let log = stderr(&o);
    assert!(log.contains("\"seed\":0"), "{log}");
    assert!(log.contains("\"noise_std\":0.3"), "{log}");
}

#[test]
fn dist_of_a_file_with_itself_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    small_set(tmp.path(), "d");
    let f = "d/video/pair00000.seqf";
    let o = ok(scav(&["dist", "--metric", "eucl", "--direction", "v2a", "--a", f, "--b", f], tmp.path()));
    assert_eq!(stdout(&o).trim(), "0");
    let g = "d/video/pair00001.seqf";
    for metric in ["sdtw", "dtw", "wass"] {
        let o = ok(scav(&["dist", "--metric", metric, "--a", f, "--b", g], tmp.path()));
        let v: f64 = stdout(&o).trim().parse().unwrap();
        assert!(v.is_finite() && v > 0.0, "{metric}: {v}");
    }
}

#[test]
fn pairwise_writes_a_labelled_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    ok(scav(
        &[
            "gen-synthetic", "--pairs", "5", "--dim-v", "4", "--dim-a", "4", "--latent-dim", "4", "--len-v", "6",
            "--len-a", "6", "--noise-std", "0", "--identity-projection", "--out", "d",
        ],
        tmp.path(),
    ));
    ok(scav(
        &["pairwise", "--metric", "eucl", "--videos", "d/manifest.tsv", "--audios", "d/manifest.tsv", "--out", "pw.tsv"],
        tmp.path(),
    ));
    let text = fs::read_to_string(tmp.path().join("pw.tsv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0][0], "video");
    assert_eq!(rows[0][1], "pair00000");
    for i in 1..6 {
        assert_eq!(rows[i].len(), 6);
        let diag: f64 = rows[i][i].parse().unwrap();
        assert_eq!(diag, 0.0);
    }
}

#[test]
fn hybrid_with_k_one_matches_agg_top1() {
    let tmp = tempfile::tempdir().unwrap();
    small_set(tmp.path(), "d");
    ok(scav(
        &[
            "train", "--manifest", "d/manifest.tsv", "--steps", "20", "--warmup", "2", "--batch-size", "8",
            "--hidden-dim", "16", "--latent-dim", "8", "--ckpt-out", "m.ckpt", "--loss-out", "losses.txt",
        ],
        tmp.path(),
    ));
    assert_eq!(fs::read_to_string(tmp.path().join("losses.txt")).unwrap().lines().count(), 20);
    for direction in ["a2v", "v2a"] {
        let run = |mode: &[&str], out: &str| {
            let mut args = vec!["retrieve", "--ckpt", "m.ckpt", "--manifest", "d/manifest.tsv", "--direction", direction];
            args.extend_from_slice(mode);
            args.extend_from_slice(&["--out", out]);
            ok(scav(&args, tmp.path()));
            fs::read_to_string(tmp.path().join(out)).unwrap()
        };
        let top1 = |text: &str| -> Vec<String> {
            text.lines().map(|l| l.split('\t').take(2).collect::<Vec<_>>().join("\t")).collect()
        };
        let hybrid = run(&["--mode", "hybrid", "--k", "1"], "h.tsv");
        let agg = run(&["--mode", "agg"], "a.tsv");
        assert_eq!(top1(&hybrid), top1(&agg));
        assert_eq!(hybrid.lines().count(), 41);
    }
}

#[test]
fn bench_emits_tsv_for_both_directions() {
    let tmp = tempfile::tempdir().unwrap();
    ok(scav(
        &[
            "gen-synthetic", "--pairs", "30", "--dim-v", "6", "--dim-a", "6", "--latent-dim", "6",
            "--identity-projection", "--out", "d",
        ],
        tmp.path(),
    ));
    let o = ok(scav(
        &[
            "bench", "--queries", "d/manifest.tsv", "--candidates", "d/manifest.tsv", "--modes",
            "agg,seq,hybrid:5,seq:sdtw", "--workers", "1", "--out", "b.tsv",
        ],
        tmp.path(),
    ));
    let tsv = fs::read_to_string(tmp.path().join("b.tsv")).unwrap();
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines[0], "mode\tdirection\trecall@1\trecall@5\trecall@10\tpreselect_s\trerank_s\ttotal_s");
    assert_eq!(lines.len(), 9);
    let modes: Vec<&str> = lines[1..].iter().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(modes, ["agg", "agg", "seq-eucl", "seq-eucl", "hybrid-eucl-k5", "hybrid-eucl-k5", "seq-sdtw", "seq-sdtw"]);
    assert!(stdout(&o).contains("hybrid-eucl-k5"));
}

#[test]
fn gradcheck_reports_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ok(scav(&["gradcheck", "--target", "zscore_rows"], tmp.path()));
    let out = stdout(&o);
    assert!(out.contains("zscore_rows") && out.contains("PASS"), "{out}");
}

#[test]
fn validation_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    small_set(tmp.path(), "d");
    let cases: &[&[&str]] = &[
        &["train", "--bogus"],
        &["frobnicate"],
        &["dist", "--metric", "cosine", "--a", "x", "--b", "y"],
        &["gradcheck", "--target", "nope"],
        &["gradcheck", "--threshold", "-1"],
        &["train", "--manifest", "d/manifest.tsv", "--steps", "0", "--ckpt-out", "m"],
        &["train", "--manifest", "d/manifest.tsv", "--loss", "scav", "--metric", "dtw", "--ckpt-out", "m"],
        &["dist", "--metric", "sdtw", "--gamma", "0", "--a", "x", "--b", "y"],
        &["gen-synthetic", "--distractor-corr", "1.0", "--out", "z"],
        &["gen-synthetic", "--pairs", "4", "--holdout", "4", "--out", "z"],
        &["bench", "--queries", "d/manifest.tsv", "--candidates", "d/manifest.tsv", "--modes", "hybrid:0", "--out", "b"],
        &["bench", "--queries", "d/manifest.tsv", "--candidates", "d/manifest.tsv", "--workers", "0", "--out", "b"],
    ];
    for args in cases {
        let o = scav(args, tmp.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert!(!tmp.path().join("z").exists());
}

#[test]
fn runtime_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    small_set(tmp.path(), "d");
    fs::write(tmp.path().join("junk.seqf"), b"nope").unwrap();
    let cases: &[&[&str]] = &[
        &["dist", "--a", "missing.seqf", "--b", "missing.seqf"],
        &["dist", "--a", "junk.seqf", "--b", "junk.seqf"],
        &["retrieve", "--ckpt", "missing.ckpt", "--manifest", "d/manifest.tsv", "--mode", "agg", "--out", "r"],
        &["pairwise", "--videos", "d/manifest.tsv", "--audios", "d/manifest.tsv", "--out", "p.tsv"],
    ];
    for args in cases {
        let o = scav(args, tmp.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains("error:"));
    }
}
