use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use snhmm::cli::run;
use snhmm::{HmmModel, MixtureEmission, SkewNormalParams};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_snhmm"));
    c.env_remove("SNHMM_THREADS").env("RUST_LOG", "off");
    c
}

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

fn in_process(args: &[&str]) -> i32 {
    run(std::iter::once("snhmm").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_series_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    assert_eq!(exit_code(&["simulate", "--scenario", "two-state", "--seed", "7", "--out", p(&out)]), 0);
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    let rows = data_rows(&series);
    assert_eq!(rows.len(), 600);
    assert!(rows[0].starts_with("1,"));
    assert!(series.starts_with("# tool=snhmm version="));
    let first: Vec<&str> = series.lines().take(3).collect();
    assert!(first[0].contains("command=simulate seed=7"));
    assert!(first[1].starts_with("# config=") && first[1].contains("\"length\":600"));
    assert_eq!(first[2], "t,y");
    let truth = read_json(&out.join("truth.json"));
    assert_eq!(truth["seed"], 7);
    assert_eq!(truth["command"], "simulate");
    assert_eq!(truth["config"]["scenario"], "two-state");
    assert_eq!(truth["result"]["states"].as_array().unwrap().len(), 600);
    let model: HmmModel = serde_json::from_value(truth["result"]["model"].clone()).unwrap();
    assert_eq!(model, snhmm::simulate::two_state().model);
}

#[test]
fn length_override_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        assert_eq!(exit_code(&["simulate", "--scenario", "two-state", "--T", "5", "--seed", "3", "--out", p(out)]), 0);
    }
    assert_eq!(exit_code(&["simulate", "--scenario", "two-state", "--length", "5", "--seed", "4", "--out", p(&c)]), 0);
    let read = |d: &Path, f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(data_rows(&String::from_utf8(read(&a, "series.csv")).unwrap()).len(), 5);
    assert_eq!(read(&a, "series.csv"), read(&b, "series.csv"));
    assert_eq!(read(&a, "truth.json"), read(&b, "truth.json"));
    assert_ne!(read(&a, "series.csv"), read(&c, "series.csv"));
}

#[test]
fn simulate_from_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = snhmm::simulate::three_state().model;
    let mf = dir.path().join("model.json");
    fs::write(&mf, serde_json::to_string(&model).unwrap()).unwrap();
    let out = dir.path().join("out");
    assert_eq!(in_process(&["simulate", "--model-file", p(&mf), "--T", "12", "--out", p(&out)]), 0);
    assert_eq!(data_rows(&fs::read_to_string(out.join("series.csv")).unwrap()).len(), 12);
    fs::write(&mf, "{\"transition\": 3}").unwrap();
    assert_eq!(in_process(&["simulate", "--model-file", p(&mf), "--out", p(&dir.path().join("bad"))]), 3);
}

#[test]
fn usage_errors_leave_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = bin().args(["simulate", "--scenario", "two-state", "--bogus", "--out", p(&out)]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert!(!out.exists());
    assert_eq!(exit_code(&["simulate", "--scenario", "five-state", "--out", p(&out)]), 2);
    assert!(!out.exists());
    assert_eq!(exit_code(&["study", "--scenario", "two-state", "--chains", "0", "--out", p(&out)]), 2);
    assert!(!out.exists());
    assert_eq!(exit_code(&[]), 2);
    assert_eq!(exit_code(&["--help"]), 0);
    let o = bin()
        .env("SNHMM_THREADS", "many")
        .args(["simulate", "--scenario", "two-state", "--out", p(&out)])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn ingest_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("y.csv");
    fs::write(&data, "t,y\n1,0.5\n2,\n").unwrap();
    let out = dir.path().join("out");
    assert_eq!(in_process(&["fit", "--data", p(&data), "--out", p(&out)]), 3);
    assert_eq!(in_process(&["fit", "--data", p(&dir.path().join("missing.csv")), "--out", p(&out)]), 3);
    assert!(!out.exists());
}

#[test]
fn malformed_fit_file_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("y.csv");
    fs::write(&data, "t,y\n1,0.5\n2,1.5\n").unwrap();
    let fit = dir.path().join("fit.json");
    let out = dir.path().join("out");
    for text in ["not json", "{\"result\": {}}", "{\"result\": {\"point\": {\"initial\": [1]}}}"] {
        fs::write(&fit, text).unwrap();
        assert_eq!(exit_code(&["decode", "--data", p(&data), "--fit", p(&fit), "--out", p(&out)]), 3);
        assert!(matches!(snhmm::cli::read_fit_model(&fit), Err(snhmm::Error::Format { .. })));
    }
    assert!(!out.exists());
}

#[test]
fn constant_model_decodes_without_changepoints() {
    let dir = tempfile::tempdir().unwrap();
    let e = MixtureEmission::single(SkewNormalParams::new(0.0, 1.0, 0.0).unwrap());
    let m = HmmModel::new(ndarray::array![[0.5, 0.5], [0.5, 0.5]], vec![0.5, 0.5], vec![e.clone(), e]).unwrap();
    let fit = dir.path().join("fit.json");
    fs::write(&fit, serde_json::json!({ "result": { "point": m } }).to_string()).unwrap();
    let data = dir.path().join("y.csv");
    fs::write(&data, "t,v\n1,-3\n2,0.1\n3,8\n4,2\n").unwrap();
    let out = dir.path().join("out");
    assert_eq!(exit_code(&["decode", "--data", p(&data), "--column", "v", "--fit", p(&fit), "--out", p(&out)]), 0);
    let path = fs::read_to_string(out.join("path.csv")).unwrap();
    assert_eq!(data_rows(&path), vec!["1,1,1", "2,2,1", "3,3,1", "4,4,1"]);
    let cps = fs::read_to_string(out.join("changepoints.csv")).unwrap();
    assert!(cps.contains("command=decode"));
    assert!(data_rows(&cps).is_empty());
}

#[test]
fn fit_then_decode_agree() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    assert_eq!(in_process(&["simulate", "--scenario", "two-state", "--T", "80", "--seed", "11", "--out", p(&sim)]), 0);
    let data = sim.join("series.csv");
    let light = ["--chains", "2", "--warmup", "60", "--iters", "40", "--leapfrog", "8", "--seed", "5"];
    let fa = dir.path().join("fa");
    let fb = dir.path().join("fb");
    for out in [&fa, &fb] {
        let mut args = vec!["fit", "--data", p(&data), "--states", "2", "--save-draws", "--out", p(out)];
        args.extend(light);
        assert_eq!(in_process(&args), 0);
    }
    assert_eq!(fs::read(fa.join("fit.json")).unwrap(), fs::read(fb.join("fit.json")).unwrap());
    assert_eq!(fs::read(fa.join("draws.csv")).unwrap(), fs::read(fb.join("draws.csv")).unwrap());
    let fit = read_json(&fa.join("fit.json"));
    assert_eq!(fit["seed"], 5);
    assert_eq!(fit["config"]["run"]["chains"], 2);
    assert_eq!(fit["config"]["prior"]["transition"], serde_json::to_value(snhmm::inference::TransitionPrior::default()).unwrap());
    assert_eq!(fit["result"]["chains"].as_array().unwrap().len(), 2);
    // 12 component values, 4 weights, 4 transitions, 2 initial probabilities.
    let params = fit["result"]["parameters"].as_array().unwrap();
    assert_eq!(params.len(), 22);
    assert_eq!(params[21]["name"], "init[2]");
    let draws = fs::read_to_string(fa.join("draws.csv")).unwrap();
    assert_eq!(data_rows(&draws).len(), 80);

    let dec = dir.path().join("dec");
    assert_eq!(in_process(&["decode", "--data", p(&data), "--fit", p(&fa.join("fit.json")), "--out", p(&dec)]), 0);
    let states: Vec<u64> = data_rows(&fs::read_to_string(dec.join("path.csv")).unwrap())
        .iter()
        .map(|r| r.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let want: Vec<u64> = fit["result"]["decoded_path"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(states, want);
}

#[test]
fn study_decode_matches_report() {
    let dir = tempfile::tempdir().unwrap();
    let study = dir.path().join("study");
    let args = ["study", "--scenario", "two-state", "--T", "90", "--seed", "13", "--chains", "2", "--warmup", "60", "--iters", "40", "--out", p(&study)];
    assert_eq!(in_process(&args), 0);
    let report = read_json(&study.join("study.json"));
    let r = &report["result"];
    assert_eq!(report["seed"], 13);
    assert_eq!(report["config"]["scenario"], "two-state");
    assert_eq!(r["parameters"].as_array().unwrap().len(), 18);
    assert!(r["accuracy"].is_f64() && r["kappa"].is_f64());

    let sim = dir.path().join("sim");
    assert_eq!(in_process(&["simulate", "--scenario", "two-state", "--T", "90", "--seed", "13", "--out", p(&sim)]), 0);
    let truth = read_json(&sim.join("truth.json"));
    let fit = dir.path().join("fit.json");
    fs::write(&fit, serde_json::json!({ "result": { "point": r["estimate"] } }).to_string()).unwrap();
    let dec = dir.path().join("dec");
    assert_eq!(in_process(&["decode", "--data", p(&sim.join("series.csv")), "--fit", p(&fit), "--out", p(&dec)]), 0);
    let decoded: Vec<u64> = data_rows(&fs::read_to_string(dec.join("path.csv")).unwrap())
        .iter()
        .map(|row| row.rsplit(',').next().unwrap().parse::<u64>().unwrap() - 1)
        .collect();
    let want: Vec<u64> = r["decoded_path"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(decoded, want);
    // The simulated states are in the same (mean-ordered) labels as the study's true path.
    let states: Vec<u64> = truth["result"]["states"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() - 1).collect();
    let true_path: Vec<u64> = r["true_path"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(states, true_path);
}

#[test]
fn select_reports_both_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    assert_eq!(in_process(&["simulate", "--scenario", "two-state", "--T", "70", "--seed", "2", "--out", p(&sim)]), 0);
    let out = dir.path().join("sel");
    let series = sim.join("series.csv");
    let args = ["select", "--data", p(&series), "--states", "2,3", "--chains", "1", "--warmup", "50", "--iters", "30", "--plug-in", "max-draw", "--out", p(&out)];
    assert_eq!(in_process(&args), 0);
    let sel = read_json(&out.join("selection.json"));
    assert_eq!(sel["command"], "select");
    assert_eq!(sel["config"]["plug_in"], "max-draw");
    let cands = sel["result"]["candidates"].as_array().unwrap();
    assert_eq!(cands.len(), 2);
    for c in cands {
        let (b, i, h) = (c["bic"].as_f64().unwrap(), c["icl"].as_f64().unwrap(), c["entropy"].as_f64().unwrap());
        let ll = c["log_likelihood"].as_f64().unwrap();
        let k = c["parameters"].as_f64().unwrap();
        assert!((b - (-2.0 * ll + k * 70f64.ln())).abs() <= 1e-9 * b.abs());
        assert!((i - (b - h)).abs() <= 1e-9 * b.abs().max(1.0));
        assert!(i <= b);
    }
    assert_eq!(sel["result"]["ranking_bic"].as_array().unwrap().len(), 2);
    let one = dir.path().join("one");
    let args = ["select", "--data", p(&series), "--states", "2", "--chains", "1", "--warmup", "30", "--iters", "20", "--out", p(&one)];
    assert_eq!(in_process(&args), 0);
    assert_eq!(read_json(&one.join("selection.json"))["result"]["ranking_bic"], serde_json::json!([2]));
}

#[test]
fn gp_writes_series_and_exclusions() {
    let dir = tempfile::tempdir().unwrap();
    let deaths = dir.path().join("Deaths_1x1.txt");
    let exposures = dir.path().join("Exposures_1x1.txt");
    fs::write(
        &deaths,
        "Country, Deaths (period 1x1)\n\n  Year   Age   Female   Male   Total\n  1960   0   10   20   30\n  1960   1   .   4   4\n  1961   0   12   18   30\n  1961   1   5   6   11\n  1961   110+   1   1   2\n",
    )
    .unwrap();
    fs::write(
        &exposures,
        "Country, Exposures\n\n  Year   Age   Female   Male   Total\n  1960   0   1000   1000   2000\n  1960   1   900   900   1800\n  1961   0   1000   1200   2200\n  1961   1   800   600   1400\n",
    )
    .unwrap();
    let out = dir.path().join("gp");
    let args = ["gp", "--deaths", p(&deaths), "--exposures", p(&exposures), "--ages", "0:1", "--years", "1960:1961", "--order", "age-major", "--out", p(&out)];
    assert_eq!(exit_code(&args), 0);
    let gp = fs::read_to_string(out.join("gp.csv")).unwrap();
    assert!(gp.contains("command=gp"));
    let rows = data_rows(&gp);
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("1,1960,0,") && rows[1].starts_with("2,1961,0,") && rows[2].starts_with("3,1961,1,"));
    let y: f64 = rows[0].rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(y, 2f64.ln());
    assert_eq!(fs::read_to_string(out.join("exclusions.log")).unwrap(), "year=1960 age=1 reason=missing female deaths\n");

    let empty = dir.path().join("empty");
    let args = ["gp", "--deaths", p(&deaths), "--exposures", p(&exposures), "--ages", "5:9", "--years", "1960:1961", "--out", p(&empty)];
    assert_eq!(exit_code(&args), 3);
    assert!(!empty.exists());
    let args = ["gp", "--deaths", p(&deaths), "--exposures", p(&exposures), "--ages", "9:5", "--out", p(&empty)];
    assert_eq!(exit_code(&args), 2);
}

#[test]
fn gp_output_feeds_fit_input() {
    let dir = tempfile::tempdir().unwrap();
    let csv = "# tool=snhmm\nt,year,age,male_rate,female_rate,y\n1,1960,0,1.0e0,1.0e0,6.9314718055994529e-1\n";
    let f = dir.path().join("gp.csv");
    fs::write(&f, csv).unwrap();
    let s = snhmm::data::load_series(&f, "y", Some("year")).unwrap();
    assert_eq!(s.values, vec![2f64.ln()]);
}
