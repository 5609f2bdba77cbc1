use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_concept-fock"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn analyze_reports_every_exemplar() {
    let o = run(&["analyze", &fixture("table4")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("dataset,exemplar,deltaAB,deltaABp,deltaApB,deltaApBp,iTotal,iA,iB,iAp,iBp,classical,deviations\n"));
    let rows = rows(&out);
    assert_eq!(rows.len(), 24);
    let olive = rows.iter().find(|r| r[1] == "Olive").unwrap();
    let i_total: f64 = olive[6].parse().unwrap();
    assert!((i_total + 0.86).abs() < 1e-9);
    assert_eq!(olive[11], "false");
}

#[test]
fn markdown_analysis_rounds_to_two_places() {
    let o = run(&["analyze", &fixture("table4.csv"), "--format", "markdown"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("| table4 | Olive |"));
    assert!(out.contains("| -0.86 |"));
}

#[test]
fn out_of_range_weight_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(
        &p,
        "exemplar,muA,muB,muAp,muBp,muAB,muABp,muApB,muApBp\nFine,0.5,0.5,0.5,0.5,0.25,0.25,0.25,0.25\nBroken,1.2,0.5,0.5,0.5,0.25,0.25,0.25,0.25\n",
    )
    .unwrap();
    let o = run(&["analyze", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("row 2"), "{err}");
    assert!(err.contains("muA"), "{err}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn missing_file_is_an_input_error() {
    let o = run(&["analyze", &fixture("no_such_table")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot open"));
}

#[test]
fn fit_document_carries_the_summary() {
    let o = run(&["fit", &fixture("table3")]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["models"].as_array().unwrap().len(), 24);
    assert!(doc["models"][0].get("fitter").is_none());
    let s = &doc["summary"][0];
    assert_eq!(s["dataset"], "table3");
    assert!(s["fraction"].as_f64().unwrap() >= 0.9);
    assert!(stderr(&o).contains("table3: "));
}

#[test]
fn provenance_is_opt_in() {
    let o = run(&["fit", &fixture("table4"), "--provenance"]);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(doc["models"][0]["fitter"].as_str().unwrap().starts_with("concept-fock "));
}

#[test]
fn empty_dataset_has_no_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.csv");
    std::fs::write(&p, "exemplar,muA,muB,muAp,muBp,muAB,muABp,muApB,muApBp\n").unwrap();
    let o = run(&["fit", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("n/a"));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(doc["summary"][0]["fraction"].is_null());
}

#[test]
fn bad_m2_mode_is_rejected() {
    let o = run(&["fit", &fixture("table4"), "--m2-mode", "target:1.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fitted_models_verify_against_their_data() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("fit.json");
    let o = run(&["fit", &fixture("table3"), "--out", doc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    // Goldfish has two conjunctions out of reach, the worst 0.04 away.
    let strict = run(&["verify", doc.to_str().unwrap(), "--data", &fixture("table3")]);
    assert_eq!(strict.status.code(), Some(2));
    let breaches: Vec<_> = rows(&stdout(&strict)).into_iter().filter(|r| r[6] == "false").collect();
    assert!(breaches.iter().all(|r| ["AB'", "A'B"].contains(&r[2].as_str())));
    let loose = run(&["verify", doc.to_str().unwrap(), "--data", &fixture("table3"), "--tol", "0.05"]);
    assert_eq!(loose.status.code(), Some(0), "{}", stdout(&loose));
    let rows = rows(&stdout(&loose));
    assert_eq!(rows.len(), 24 * 10);
    for r in rows.iter().filter(|r| r[2] == "AB") {
        assert!(r[5].parse::<f64>().unwrap().abs() < 1e-9);
    }
}

#[test]
fn published_models_verify() {
    let all = [fixture("table1"), fixture("table2"), fixture("table3"), fixture("table4")];
    let mut args = vec!["verify".to_string(), fixture("published/parsley.json"), "--data".into()];
    args.extend(all.iter().cloned());
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = run(&argv);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().skip(1).all(|l| l.starts_with("table2,Parsley,")));

    args[1] = fixture("published/olive.json");
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = run(&argv);
    assert_eq!(o.status.code(), Some(2));
    let breaches: Vec<_> = rows(&stdout(&o)).into_iter().filter(|r| r[6] == "false").collect();
    assert_eq!(breaches.len(), 1);
    assert_eq!(breaches[0][2], "AB'");
}

#[test]
fn verify_without_matching_record_fails() {
    let o = run(&["verify", &fixture("published/olive.json"), "--data", &fixture("table1")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Olive"));
}

#[test]
fn pooled_statistics() {
    let o = run(&["stats", &fixture("table1"), &fixture("table2"), &fixture("table3"), &fixture("table4")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = rows(&stdout(&o));
    assert_eq!(rows.len(), 25);
    let pooled: Vec<_> = rows.iter().filter(|r| r[0] == "pooled").collect();
    assert_eq!(pooled.len(), 5);
    for r in &pooled {
        assert_eq!(r[2], "96");
        let slope: f64 = r[3].parse().unwrap();
        assert!(slope > 0.0 && slope < 0.01);
        let (lo, hi): (f64, f64) = (r[6].parse().unwrap(), r[7].parse().unwrap());
        assert!(lo < hi);
    }
}

#[test]
fn statistics_need_three_records() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("two.csv");
    std::fs::write(
        &p,
        "exemplar,muA,muB,muAp,muBp,muAB,muABp,muApB,muApBp\nX,0.5,0.5,0.5,0.5,0.25,0.25,0.25,0.25\nY,0.4,0.5,0.6,0.5,0.2,0.2,0.3,0.3\n",
    )
    .unwrap();
    let o = run(&["stats", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

const FIELDS: [&str; 8] = ["muA", "muB", "muAp", "muBp", "muAB", "muABp", "muApB", "muApBp"];

/// A panel with one exemplar and the given scores per subject, in field order.
fn panel(dir: &Path, scores: &[[i32; 8]]) -> PathBuf {
    let mut s = String::from("subject,question,score\n");
    for (i, row) in scores.iter().enumerate() {
        for (f, v) in FIELDS.iter().zip(row) {
            s.push_str(&format!("s{i},Kiwi:{f},{v}\n"));
        }
    }
    let p = dir.join("panel.csv");
    std::fs::write(&p, s).unwrap();
    p
}

#[test]
fn likert_tests_use_subject_count() {
    let dir = tempfile::tempdir().unwrap();
    let p = panel(
        dir.path(),
        &[
            [3, 1, -2, 0, 2, -1, 0, 1],
            [2, -1, 1, 0, 1, 1, -2, 0],
            [-1, 2, 0, 3, 0, 1, 1, -3],
            [1, 1, -1, -2, 3, 0, -1, 2],
            [0, -3, 2, 1, -1, 2, 0, 0],
        ],
    );
    let o = run(&["stats", "--likert", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("label,t,df,p,threshold,rejected\n"));
    let rows = rows(&out);
    assert!(!rows.is_empty());
    for r in &rows {
        assert!(r[0].starts_with("Kiwi:"));
        assert_eq!(r[2].parse::<f64>().unwrap(), 4.0);
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.05);
    }
    let o = run(&["stats", "--likert", p.to_str().unwrap(), "--df", "30"]);
    for r in rows_of(&o) {
        assert_eq!(r[2].parse::<f64>().unwrap(), 30.0);
    }
}

fn rows_of(o: &Output) -> Vec<Vec<String>> {
    rows(&stdout(o))
}

#[test]
fn convert_aggregates_a_panel() {
    let dir = tempfile::tempdir().unwrap();
    let p = panel(dir.path(), &[[1; 8], [3; 8], [2; 8]]);
    let o = run(&["convert", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "exemplar,muA,muB,muAp,muBp,muAB,muABp,muApB,muApBp\nKiwi,1,1,1,1,1,1,1,1\n"
    );
}

#[test]
fn convert_rejects_out_of_range_scores() {
    let dir = tempfile::tempdir().unwrap();
    let p = panel(dir.path(), &[[1; 8], [4, 1, 1, 1, 1, 1, 1, 1]]);
    let o = run(&["convert", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains('4'));
}

#[test]
fn report_has_table_layout_and_summary() {
    let o = run(&["report", &fixture("table4")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("## table4"));
    assert!(out.contains("| Olive | 0.53 | 0.63 | 0.47 | 0.44 | 0.65 | 0.34 | 0.51 | 0.36 |"));
    assert!(out.contains("## fit summary"));
    let o = run(&["report", &fixture("table4"), "--format", "structured"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["table4"].as_array().unwrap().len(), 24);
    assert_eq!(v["fit summary"][0]["records"], 24);
}

#[test]
fn outputs_are_reproducible() {
    for args in [
        vec!["fit".to_string(), fixture("table1")],
        vec!["analyze".to_string(), fixture("table2")],
        vec!["report".to_string(), fixture("table3")],
    ] {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(run(&argv).stdout, run(&argv).stdout);
    }
}
