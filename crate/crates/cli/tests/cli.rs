use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use neglabel::scoring::{variant_score, ScoreConfig};
use neglabel::store;
use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_neglabel");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("spawn neglabel")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn fails_with(args: &[&str], code: i32, name: &str) {
    let out = run(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("error-code: {name}")), "{err}");
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_lines(dir: &TempDir, name: &str, values: &[f64]) -> PathBuf {
    let path = dir.path().join(name);
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    fs::write(&path, text).unwrap();
    path
}

fn eval_json(dir: &TempDir, id: &[f64], ood: &[f64]) -> Value {
    let i = write_lines(dir, "id.txt", id);
    let o = write_lines(dir, "ood.txt", ood);
    let out = ok(&["eval", "--id-scores", p(&i), "--ood-scores", p(&o)]);
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read_csv_scores(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn mine_matches_committed_oracle() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sel.json");
    let (id, cand, labels) = (
        fixture("desk_id.negl"),
        fixture("desk_cand.negl"),
        fixture("desk_cand_labels.txt"),
    );
    let args = [
        "mine",
        "--id-emb",
        p(&id),
        "--cand-emb",
        p(&cand),
        "--cand-labels",
        p(&labels),
        "--m",
        "10",
        "--out",
        p(&out),
    ];
    ok(&args);
    let got: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let want: Value =
        serde_json::from_str(&fs::read_to_string(fixture("desk_expected.json")).unwrap()).unwrap();
    assert_eq!(got["indices"], want["indices"]);
    assert_eq!(got["distances"], want["distances"]);
    assert_eq!(got["rows"], want["indices"]);
    assert_eq!(got["eta"], want["eta"]);
    let labels: Vec<String> = want["indices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| format!("word{i}"))
        .collect();
    assert_eq!(got["labels"], serde_json::json!(labels));
    assert_eq!(got["provenance"].as_object().unwrap().len(), 3);

    let first = fs::read(&out).unwrap();
    ok(&args);
    assert_eq!(fs::read(&out).unwrap(), first);
}

#[test]
fn mine_rejects_m_above_candidates() {
    let dir = TempDir::new().unwrap();
    fails_with(
        &[
            "mine",
            "--id-emb",
            p(&fixture("desk_id.negl")),
            "--cand-emb",
            p(&fixture("desk_cand.negl")),
            "--cand-labels",
            p(&fixture("desk_cand_labels.txt")),
            "--m",
            "51",
            "--out",
            p(&dir.path().join("sel.json")),
        ],
        2,
        "MTooLarge",
    );
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    fails_with(
        &[
            "mine",
            "--id-emb",
            p(&dir.path().join("absent.negl")),
            "--cand-emb",
            p(&fixture("desk_cand.negl")),
            "--cand-labels",
            p(&fixture("desk_cand_labels.txt")),
            "--out",
            p(&dir.path().join("sel.json")),
        ],
        3,
        "Io",
    );
}

#[test]
fn eval_reports_percentages() {
    let dir = TempDir::new().unwrap();
    let j = eval_json(&dir, &[0.9, 0.8, 0.4], &[0.7, 0.3]);
    assert_eq!(j["auroc_percent"], "83.33");
    assert!((j["auroc"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-15);
    assert_eq!(j["n_id"], 3);
    assert_eq!(j["n_ood"], 2);

    let j = eval_json(&dir, &[0.9, 0.8, 0.95], &[0.1, 0.2]);
    assert_eq!(j["auroc_percent"], "100.00");
    assert_eq!(j["fpr95_percent"], "0.00");
}

#[test]
fn eval_with_mask_matches_split_lists() {
    let dir = TempDir::new().unwrap();
    let s = write_lines(&dir, "all.txt", &[0.9, 0.7, 0.8, 0.3, 0.4]);
    let m = dir.path().join("mask.txt");
    fs::write(&m, "1\n0\n1\n0\n1\n").unwrap();
    let out = ok(&["eval", "--scores", p(&s), "--mask", p(&m)]);
    let j: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(j["auroc_percent"], "83.33");
}

#[test]
fn eval_validation_errors() {
    let dir = TempDir::new().unwrap();
    let i = write_lines(&dir, "id.txt", &[0.5]);
    let o = write_lines(&dir, "ood.txt", &[0.1]);
    for lambda in ["0", "1.5", "-0.2"] {
        fails_with(
            &[
                "eval",
                "--id-scores",
                p(&i),
                "--ood-scores",
                p(&o),
                "--lambda",
                lambda,
            ],
            2,
            "BadLambda",
        );
    }
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "sample_index,score\n").unwrap();
    fails_with(
        &["eval", "--id-scores", p(&empty), "--ood-scores", p(&o)],
        2,
        "EmptyList",
    );
}

#[test]
fn score_matches_reference_csv() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("scores.csv");
    ok(&[
        "score",
        "--sims",
        p(&fixture("sims.negl")),
        "--k",
        "3",
        "--n-groups",
        "3",
        "--out",
        p(&out),
    ]);
    let got = read_csv_scores(&out);
    let want = read_csv_scores(&fixture("sims_expected.csv"));
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-12 * w.abs(), "{g} vs {w}");
    }
}

#[test]
fn single_group_equals_ungrouped() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("scores.csv");
    ok(&[
        "score",
        "--sims",
        p(&fixture("sims.negl")),
        "--k",
        "3",
        "--n-groups",
        "1",
        "--out",
        p(&out),
    ]);
    let sims = store::load_matrix(fixture("sims.negl")).unwrap();
    let cfg = ScoreConfig::default();
    for (i, s) in read_csv_scores(&out).into_iter().enumerate() {
        let row = sims.row(i);
        assert_eq!(s, variant_score(&row[..3], &row[3..], &cfg).unwrap());
    }
}

#[test]
fn score_column_split_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("scores.csv");
    let sims = fixture("sims.negl");
    fails_with(
        &["score", "--sims", p(&sims), "--k", "17", "--out", p(&out)],
        2,
        "ColumnSplitInvalid",
    );
    fails_with(
        &[
            "score",
            "--sims",
            p(&sims),
            "--k",
            "3",
            "--n-groups",
            "20",
            "--out",
            p(&out),
        ],
        2,
        "GroupTooSmall",
    );
    fails_with(
        &[
            "score",
            "--sims",
            p(&sims),
            "--k",
            "3",
            "--tau",
            "0",
            "--out",
            p(&out),
        ],
        2,
        "NonPositiveTau",
    );
}

#[test]
fn selection_and_negative_embeddings_score_alike() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&[
        "synth",
        "--dim",
        "32",
        "--m",
        "60",
        "--n-id",
        "30",
        "--n-ood",
        "30",
        "--out-dir",
        p(d),
    ]);
    let sel = d.join("sel.json");
    let neg = d.join("mined.negl");
    let (images, id_emb, cand, cand_labels) = (
        d.join("images.negl"),
        d.join("id_emb.negl"),
        d.join("neg_emb.negl"),
        d.join("neg_labels.txt"),
    );
    ok(&[
        "mine",
        "--id-emb",
        p(&d.join("id_emb.negl")),
        "--cand-emb",
        p(&d.join("neg_emb.negl")),
        "--cand-labels",
        p(&d.join("neg_labels.txt")),
        "--m",
        "40",
        "--out",
        p(&sel),
        "--neg-emb-out",
        p(&neg),
    ]);
    let a = d.join("a.csv");
    let b = d.join("b.csv");
    let common = [
        "--image-emb",
        p(&images),
        "--id-emb",
        p(&id_emb),
        "--n-groups",
        "4",
    ];
    let mut args_a = vec!["score"];
    args_a.extend(common);
    args_a.extend(["--neg-emb", p(&neg), "--out", p(&a)]);
    ok(&args_a);
    let mut args_b = vec!["score"];
    args_b.extend(common);
    args_b.extend([
        "--selection",
        p(&sel),
        "--cand-emb",
        p(&cand),
        "--cand-labels",
        p(&cand_labels),
        "--out",
        p(&b),
    ]);
    ok(&args_b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    // Candidates of another width cannot be scored against these images.
    fails_with(
        &[
            "score",
            "--image-emb",
            p(&d.join("images.negl")),
            "--id-emb",
            p(&fixture("desk_id.negl")),
            "--neg-emb",
            p(&neg),
            "--out",
            p(&a),
        ],
        2,
        "DimMismatch",
    );
}

#[test]
fn theory_equal_probabilities_give_lambda() {
    let out = ok(&[
        "theory",
        "--m",
        "10,100,1000",
        "--p1",
        "0.2",
        "--p2",
        "0.2",
        "--lambda",
        "0.8",
        "--n",
        "0",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "M,p1,p2,lambda,fpr_closed,dfpr_dM,fpr_mc,mc_stderr"
    );
    let mut n = 0;
    for line in lines {
        let fpr: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!((fpr - 0.8).abs() <= 1e-9, "{line}");
        n += 1;
    }
    assert_eq!(n, 3);
}

#[test]
fn sweep_fpr_falls_with_m() {
    let out = ok(&[
        "sweep",
        "--m",
        "100,500,2000",
        "--p1",
        "0.10",
        "--p2",
        "0.12",
        "--variant",
        "binarized-count",
        "--n-groups",
        "1",
        "--n-id",
        "2000",
        "--n-ood",
        "2000",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let fprs: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(8).unwrap().parse().unwrap())
        .collect();
    assert_eq!(fprs.len(), 3);
    assert!(fprs[0] > fprs[1] && fprs[1] > fprs[2], "{fprs:?}");
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[theory]\nm = [50, 60]\np1 = 0.3\np2 = 0.3\nn = 0\n").unwrap();
    let out = ok(&["--config", p(&cfg), "theory", "--p2", "0.4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("50,0.3,0.4,0.95,"), "{}", rows[0]);
    assert!(rows[1].starts_with("60,0.3,0.4,0.95,"));

    fs::write(&cfg, "[theory]\nbogus = 1\n").unwrap();
    fails_with(&["--config", p(&cfg), "theory"], 2, "Usage");
}

#[test]
fn help_lists_defaults() {
    let mine = String::from_utf8(ok(&["mine", "--help"]).stdout).unwrap();
    assert!(mine.contains("[default: 0.05]") && mine.contains("[default: 10000]"));
    let score = String::from_utf8(ok(&["score", "--help"]).stdout).unwrap();
    assert!(score.contains("[default: 0.01]") && score.contains("[default: 100]"));
    let eval = String::from_utf8(ok(&["eval", "--help"]).stdout).unwrap();
    assert!(eval.contains("[default: 0.95]"));
    let version = String::from_utf8(ok(&["--version"]).stdout).unwrap();
    assert!(version.contains(env!("CARGO_PKG_VERSION")) && version.contains("container format v1"));
}

#[test]
fn synth_writes_manifest_and_is_seeded() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("spec.toml");
    fs::write(&spec, "k = 4\nm = 30\nn_id = 20\nn_ood = 25\nseed = 5\n").unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["synth", "--spec", p(&spec), "--out-dir", p(&a)]);
    ok(&[
        "synth",
        "--spec",
        p(&spec),
        "--p1",
        "0.05",
        "--out-dir",
        p(&b),
    ]);
    for f in ["sims.negl", "labels.txt", "mask.txt", "manifest.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let sims = store::load_matrix(a.join("sims.negl")).unwrap();
    assert_eq!((sims.rows(), sims.dims()), (45, 34));
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["spec"]["k"], 4);
    assert_eq!(manifest["files"].as_object().unwrap().len(), 3);

    let c = dir.path().join("c");
    ok(&[
        "synth",
        "--spec",
        p(&spec),
        "--seed",
        "6",
        "--out-dir",
        p(&c),
    ]);
    assert_ne!(
        fs::read(a.join("sims.negl")).unwrap(),
        fs::read(c.join("sims.negl")).unwrap()
    );

    fs::write(&spec, "k = 4\nunknown = 1\n").unwrap();
    fails_with(
        &["synth", "--spec", p(&spec), "--out-dir", p(&c)],
        2,
        "SpecInvalid",
    );
    fails_with(
        &["synth", "--p1", "0.3", "--p2", "0.2", "--out-dir", p(&c)],
        2,
        "SpecInvalid",
    );
}
