use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kmexp_cli::commands::{load_grid, run_km};
use kmexp_cli::data::{read_sample, KmTable};
use kmexp_core::statistics::{evaluate, evaluate_all};
use kmexp_core::{ExperimentGrid, StatisticId};

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn kmexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kmexp")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, contents).unwrap();
    p
}

#[test]
fn leukemia_transcription_is_unchanged() {
    let (sample, id) = read_sample(&example("leukemia.csv")).unwrap();
    assert_eq!(id.sha256, "61c31ce09b4ecde650554e752ff2967a7e8e6e2c84416b0014ab3c13bae7fc24");
    assert_eq!(sample.len(), 66);
    assert_eq!(sample.censored_count(), 14);
    assert_eq!(sample.times().iter().sum::<f64>(), 5236.0);
    assert_eq!(sample.estimate_rate().unwrap(), 52.0 / 5236.0);
}

#[test]
fn leukemia_km_table_has_a_row_per_patient() {
    let mut out = Vec::new();
    run_km(&example("leukemia.csv"), &mut out).unwrap();
    let table = KmTable::parse(&out, "km").unwrap();
    assert_eq!(table.rows.len(), 66);
    let mass: f64 = table.rows.iter().map(|r| r.jump).sum();
    assert!((mass - 1.0).abs() < 1e-12);
}

#[test]
fn km_output_reproduces_the_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(
        dir.path(),
        "d.csv",
        "time,delta\n3.1,1\n0.4,0\n2.2,1\n2.2,0\n5.9,1\n1.7,1\n4.4,0\n0.9,1\n7.3,0\n",
    );
    let out = kmexp(&["km", "--input", data.to_str().unwrap()]);
    assert!(out.status.success());
    let table = KmTable::parse(&out.stdout, "km").unwrap();
    let (scaled, weights) = table.weighted().unwrap();
    let (original, _) = read_sample(&data).unwrap();
    let ids = StatisticId::standard_set();
    let expected = evaluate_all(&ids, &original).unwrap();
    for (id, e) in ids.iter().zip(expected) {
        assert_eq!(evaluate(*id, &scaled, &weights).unwrap().value, e.value, "{id}");
    }
    // and the table itself can be fed back as input
    let again = write(dir.path(), "again.csv", std::str::from_utf8(&out.stdout).unwrap());
    let second = kmexp(&["km", "--input", again.to_str().unwrap()]);
    assert_eq!(second.stdout, out.stdout);
}

#[test]
fn two_point_complete_sample_steps_down_twice() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "time,delta\n2,1\n1,1\n");
    let out = kmexp(&["km", "--input", data.to_str().unwrap()]);
    let table = KmTable::parse(&out.stdout, "km").unwrap();
    let steps: Vec<(f64, f64, f64)> = table.rows.iter().map(|r| (r.time, r.survival, r.jump)).collect();
    assert_eq!(steps, vec![(1.0, 0.5, 0.5), (2.0, 0.0, 0.5)]);
}

#[test]
fn exit_codes_separate_usage_from_numerical_problems() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.csv", "");
    let censored = write(dir.path(), "censored.csv", "time,delta\n1,0\n2,0\n");
    let bad = write(dir.path(), "bad.csv", "time,delta\n1,1\n2,7\n");

    let code = |args: &[&str]| kmexp(args).status.code().unwrap();
    assert_eq!(code(&["test", "--input", empty.to_str().unwrap()]), 1);
    assert_eq!(code(&["km", "--input", bad.to_str().unwrap()]), 1);
    assert_eq!(code(&["km", "--input", censored.to_str().unwrap()]), 2);
    assert_eq!(code(&["test", "--input", censored.to_str().unwrap(), "--B", "50"]), 2);
    assert_eq!(code(&["test", "--input", "/nonexistent/file.csv"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["--help"]), 0);
    let leuk = example("leukemia.csv");
    assert_eq!(code(&["test", "--input", leuk.to_str().unwrap(), "--B", "1"]), 1);
    assert_eq!(code(&["test", "--input", leuk.to_str().unwrap(), "--stats", "xx"]), 1);
    assert_eq!(code(&["--threads", "0", "km", "--input", leuk.to_str().unwrap()]), 1);
}

#[test]
fn malformed_configs_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let smoke = fs::read_to_string(example("smoke_grid.json")).unwrap();
    let cases = [
        ("mc_reps", smoke.replace("\"mc_reps\": 500", "\"mc_reps\": 5")),
        ("mc_reps", smoke.replace("\"mc_reps\": 500", "\"mc_reps\": \"many\"")),
        ("censoring_fractions", smoke.replace("0.1", "1.5")),
        ("sample_sizes", smoke.replace("\"sample_sizes\"", "\"sample_size\"")),
    ];
    for (field, text) in cases {
        let path = write(dir.path(), "grid.json", &text);
        let out = kmexp(&["power", "--config", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "{field}: {err}");
    }
}

#[test]
fn bundled_configs_describe_the_standard_design() {
    let standard = load_grid(&example("standard_grid.json")).unwrap();
    assert_eq!(standard, ExperimentGrid::standard());
    let full = load_grid(&example("standard_grid_full.json")).unwrap();
    assert_eq!(full, ExperimentGrid { mc_reps: 50_000, ..ExperimentGrid::standard() });
    load_grid(&example("smoke_grid.json")).unwrap();
}

#[test]
fn smoke_grid_runs_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = example("smoke_grid.json");
    let started = std::time::Instant::now();
    let first = kmexp(&["power", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(started.elapsed().as_secs() < 60);

    let long = fs::read_to_string(out.join("power_long.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(long.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let power = headers.iter().position(|h| h == "power").unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let p: f64 = rec.unwrap()[power].parse().unwrap();
        assert!((2.0..=8.0).contains(&p), "null size {p}");
        rows += 1;
    }
    assert_eq!(rows, 10);
    let table = fs::read_to_string(out.join("table_n30_c10.txt")).unwrap();
    assert_eq!(table.lines().count(), 3);

    let second = kmexp(&["power", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&second.stderr).contains("0 cells computed, 10 reused"));
    assert_eq!(fs::read_to_string(out.join("power_long.csv")).unwrap(), long);
}

#[test]
fn reports_echo_the_seed_and_reproduce() {
    let leuk = example("leukemia.csv");
    let args = ["test", "--input", leuk.to_str().unwrap(), "--B", "300", "--seed", "42", "--json"];
    let a = kmexp(&args);
    let b = kmexp(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["seed"], 42);
    assert_eq!(report["results"].as_array().unwrap().len(), 10);
    let text = kmexp(&args[..args.len() - 1]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("seed = 42"));
}

#[test]
fn null_data_is_rarely_rejected() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Exp};
    let exp = Exp::new(1.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (mut rejections, mut decisions) = (0, 0);
    for seed in 0..40 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut csv = String::from("time,delta\n");
        for _ in 0..100 {
            csv.push_str(&format!("{},1\n", exp.sample(&mut rng)));
        }
        let data = write(dir.path(), "null.csv", &csv);
        let out = kmexp(&["test", "--input", data.to_str().unwrap(), "--B", "199", "--seed", "3", "--json"]);
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        for r in report["results"].as_array().unwrap() {
            decisions += 1;
            if r["decision"] == "reject" {
                rejections += 1;
            } else {
                assert_eq!(r["decision"], "fail_to_reject");
            }
        }
    }
    assert_eq!(decisions, 400);
    // about 5% expected; the ten statistics are strongly correlated
    assert!(rejections <= 40, "{rejections} of {decisions} rejected");
}
