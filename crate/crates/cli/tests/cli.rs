use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn onhscan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_onhscan"))
        .current_dir(dir)
        .arg("--quiet")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = onhscan(dir, args);
    assert_eq!(
        code(&out),
        0,
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn repro_is_byte_identical_across_runs_and_threads() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["repro", "--out", "a.json"]);
    ok(d, &["repro", "--out", "b.json"]);
    ok(d, &["repro", "--threads", "1", "--out", "t1.json"]);
    ok(d, &["repro", "--threads", "8", "--out", "t8.json"]);
    let a = read(d, "a.json");
    assert_eq!(a, read(d, "b.json"));
    assert_eq!(a, read(d, "t1.json"));
    assert_eq!(a, read(d, "t8.json"));
    assert!(a.contains("\"passed\": true"));
}

#[test]
fn repro_writes_stdout_and_honours_seed() {
    let tmp = TempDir::new().unwrap();
    let a = onhscan(tmp.path(), &["repro", "--seed", "3"]);
    let b = onhscan(tmp.path(), &["repro", "--seed", "4"]);
    assert_eq!(code(&a), 0);
    assert!(String::from_utf8_lossy(&a.stdout).contains("\"seed\": 3"));
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn collapsed_classes_score_near_chance_and_exit_zero() {
    let tmp = TempDir::new().unwrap();
    let out = onhscan(tmp.path(), &["repro", "--classes-collapsed"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"passed\": false"));
    let means: Vec<f64> = text
        .lines()
        .filter(|l| l.contains("\"auc_"))
        .map(|l| {
            let tail = l.split("\"mean\": ").nth(1).unwrap();
            tail.split(',').next().unwrap().parse().unwrap()
        })
        .collect();
    assert_eq!(means.len(), 6);
    for m in means {
        assert!((m - 0.5).abs() <= 0.15, "collapsed AUC {m}");
    }
}

#[test]
fn presets_through_pipeline_with_simulation_model() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    for p in ["healthy", "odd", "papilledema"] {
        ok(d, &["phantom", "gen", "--preset", p, "--out", p]);
        assert!(d.join(format!("{p}.analytic")).exists());
    }
    ok(d, &["repro", "--cohort-out", "sim.csv", "--out", "r.json"]);
    ok(d, &["train", "--scores", "sim.csv", "--model", "m.rfm"]);
    ok(
        d,
        &[
            "pipeline",
            "--labels",
            "healthy",
            "odd",
            "papilledema",
            "--model",
            "m.rfm",
            "--scores-out",
            "s.csv",
            "--preds-out",
            "p.csv",
        ],
    );
    let preds = read(d, "p.csv");
    let rows: Vec<Vec<&str>> = preds
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert_eq!(row[0], row[3], "{row:?}");
        assert_eq!(row[7], "ok");
    }
    assert_eq!(read(d, "s.csv").lines().count(), 4);
}

#[test]
fn pipeline_with_no_inputs_writes_headers() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["repro", "--cohort-out", "sim.csv", "--out", "r.json"]);
    ok(
        d,
        &[
            "train", "--scores", "sim.csv", "--trees", "5", "--model", "m.rfm",
        ],
    );
    ok(
        d,
        &[
            "pipeline",
            "--model",
            "m.rfm",
            "--scores-out",
            "s.csv",
            "--preds-out",
            "p.csv",
        ],
    );
    assert_eq!(
        read(d, "s.csv").trim_end(),
        "eye_id,subject_id,true_class,drusen_score_mm3,swelling_score_mm3"
    );
    assert_eq!(
        read(d, "p.csv").trim_end(),
        "eye_id,subject_id,true_class,predicted_class,p_odd,p_papilledema,p_healthy,status"
    );
}

#[test]
fn corrupt_volume_is_flagged_and_the_batch_continues() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(
        d,
        &["phantom", "gen", "--preset", "healthy", "--out", "good"],
    );
    ok(d, &["phantom", "gen", "--preset", "odd", "--out", "bad"]);
    let mut raw = fs::read(d.join("bad.raw")).unwrap();
    raw[500] ^= 0x01;
    fs::write(d.join("bad.raw"), raw).unwrap();
    ok(d, &["repro", "--cohort-out", "sim.csv", "--out", "r.json"]);
    ok(
        d,
        &[
            "train", "--scores", "sim.csv", "--trees", "20", "--model", "m.rfm",
        ],
    );

    let out = onhscan(
        d,
        &[
            "pipeline",
            "--labels",
            "bad",
            "good",
            "--model",
            "m.rfm",
            "--scores-out",
            "s.csv",
            "--preds-out",
            "p.csv",
        ],
    );
    assert_eq!(code(&out), 2);
    let preds = read(d, "p.csv");
    let lines: Vec<&str> = preds.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("bad,") && lines[1].contains("error: checksum mismatch"));
    assert!(lines[2].starts_with("good,") && lines[2].ends_with(",ok"));
    assert!(read(d, "s.csv").contains("good,good"));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(code(&onhscan(d, &["frobnicate"])), 1);
    assert_eq!(code(&onhscan(d, &["repro", "--no-such-flag"])), 1);
    assert_eq!(
        code(&onhscan(
            d,
            &["phantom", "gen", "--preset", "glaucoma", "--out", "x"]
        )),
        1
    );
    assert_eq!(code(&onhscan(d, &["repro", "--trees", "0"])), 1);
    assert_eq!(code(&onhscan(d, &["--help"])), 0);
    assert_eq!(
        code(&onhscan(
            d,
            &["predict", "--model", "none.rfm", "--scores", "s.csv", "--out", "p.csv"]
        )),
        2
    );
    fs::write(d.join("m.rfm"), "rfmodel v1 trees=1\n").unwrap();
    let out = onhscan(
        d,
        &[
            "predict", "--model", "m.rfm", "--scores", "s.csv", "--out", "p.csv",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn score_train_predict_evaluate_chain() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "phantom", "gen", "--preset", "odd", "--render", "--seed", "7", "--out", "eye",
        ],
    );
    assert!(d.join("eye_intensity.meta").exists());
    ok(
        d,
        &["compensate", "--in", "eye_intensity", "--out", "eye_comp"],
    );
    assert!(d.join("eye_comp.raw").exists());
    for (eye, class) in [("a", "odd"), ("b", "odd")] {
        ok(
            d,
            &[
                "score",
                "--labels",
                "eye",
                "--eye-id",
                eye,
                "--subject-id",
                "s1",
                "--true-class",
                class,
                "--out",
                "scores.csv",
            ],
        );
    }
    let scores = read(d, "scores.csv");
    assert_eq!(scores.lines().count(), 3);
    assert!(scores.lines().nth(1).unwrap().starts_with("a,s1,odd,"));

    ok(d, &["repro", "--cohort-out", "sim.csv", "--out", "r.json"]);
    ok(
        d,
        &[
            "train",
            "--scores",
            "sim.csv",
            "--trees",
            "30",
            "--class-weight",
            "balanced",
            "--model",
            "m.rfm",
        ],
    );
    assert!(read(d, "m.rfm").starts_with("rfmodel v1 trees=30"));
    ok(
        d,
        &[
            "predict",
            "--model",
            "m.rfm",
            "--scores",
            "scores.csv",
            "--out",
            "p.csv",
        ],
    );
    assert!(read(d, "p.csv")
        .lines()
        .nth(1)
        .unwrap()
        .contains(",odd,odd,"));

    ok(
        d,
        &[
            "evaluate", "cv", "--scores", "sim.csv", "--folds", "5", "--trees", "20", "--out",
            "cv.json",
        ],
    );
    assert!(read(d, "cv.json").contains("\"mode\": \"cv\""));
    ok(
        d,
        &[
            "evaluate", "holdout", "--scores", "sim.csv", "--trees", "20", "--out", "h.json",
        ],
    );
    assert!(read(d, "h.json").contains("\"mode\": \"holdout\""));

    ok(
        d,
        &["phantom", "gen", "--preset", "healthy", "--out", "ref"],
    );
    ok(
        d,
        &[
            "evaluate",
            "dice",
            "--pred",
            "eye",
            "--truth",
            "eye",
            "--out",
            "self.json",
        ],
    );
    ok(
        d,
        &[
            "evaluate",
            "dice",
            "--pred",
            "eye",
            "--truth",
            "ref",
            "--out",
            "dice.json",
        ],
    );
    assert!(read(d, "self.json").contains("\"mean_dice\": 1"));
    assert!(read(d, "dice.json").contains("\"excluded\": [8]"));
}

#[test]
fn phantom_from_toml_spec() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let spec = onhscan::phantom::PhantomSpec::preset(onhscan::phantom::Preset::Papilledema);
    fs::write(d.join("spec.toml"), spec.to_toml()).unwrap();
    ok(d, &["phantom", "gen", "--spec", "spec.toml", "--out", "a"]);
    ok(
        d,
        &["phantom", "gen", "--preset", "papilledema", "--out", "b"],
    );
    assert_eq!(
        fs::read(d.join("a.raw")).unwrap(),
        fs::read(d.join("b.raw")).unwrap()
    );
    fs::write(d.join("bad.toml"), "dims = [1, 2]\n").unwrap();
    assert_eq!(
        code(&onhscan(
            d,
            &["phantom", "gen", "--spec", "bad.toml", "--out", "c"]
        )),
        2
    );
}
