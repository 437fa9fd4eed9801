use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mpemba_cli::output::format_float;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mpemba"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(bytes: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn dot_trajectories_conserve_trace() {
    let o = run(&["evolve", "--config", config("dot_populations_biased.toml").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = read_csv(&o.stdout);
    assert_eq!(h.len(), 9);
    assert_eq!(rows.len(), 1001);
    for label in ["I", "II"] {
        let cols: Vec<Vec<f64>> = (1..=4).map(|k| column(&h, &rows, &format!("{label}_rho{k}"))).collect();
        for i in 0..rows.len() {
            let s: f64 = cols.iter().map(|c| c[i]).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn concurrence_columns_show_sudden_death() {
    let o = run(&["evolve", "--config", config("entanglement_race.toml").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = read_csv(&o.stdout);
    let a = column(&h, &rows, "I_concurrence");
    let b = column(&h, &rows, "II_concurrence");
    let first_zero = |c: &[f64]| c.iter().position(|&x| x == 0.0).expect("reaches zero");
    assert!(a[0] > b[0]);
    assert!(first_zero(&a) < first_zero(&b));
}

#[test]
fn csv_output_round_trips_byte_for_byte() {
    let o = run(&["evolve", "--config", config("coherence_redfield.toml").to_str().unwrap(), "--precision", "9"]);
    assert!(o.status.success());
    let (h, rows) = read_csv(&o.stdout);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&h).unwrap();
    for r in rows {
        w.write_record(r.iter().map(|f| f.parse::<f64>().map_or(f.clone(), |v| format_float(v, 9)))).unwrap();
    }
    assert_eq!(w.into_inner().unwrap(), o.stdout);
    assert!(!o.stdout.contains(&b'\r'));
}

#[test]
fn flags_override_config_and_json_has_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("race.json");
    let o = run(&[
        "evolve",
        "--config",
        config("mutual_info_cold.toml").to_str().unwrap(),
        "--format",
        "json",
        "--precision",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["metadata"]["engine"], "mpemba");
    assert_eq!(v["metadata"]["config"]["output"]["precision"], 7);
    assert_eq!(v["metadata"]["config"]["output"]["format"], "json");
    assert_eq!(v["columns"][0], "t");
    assert_eq!(v["rows"].as_array().unwrap().len(), 1201);
}

#[test]
fn missing_crossing_is_an_empty_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = std::fs::read_to_string(config("entanglement_crossing_times.toml"))
        .unwrap()
        .replace("[0.1, 0.7, 0.1, 0.1]", "[0.0, 0.2, 0.7, 0.1]")
        .replace("points = 17", "points = 3");
    let p = write_temp(&dir, "same.toml", &cfg);
    let o = run(&["scan", "--config", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(',')), "{text}");
}

#[test]
fn zero_length_time_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = std::fs::read_to_string(config("entanglement_race.toml")).unwrap().replace("samples = 1200", "samples = 0");
    let p = write_temp(&dir, "zero.toml", &cfg);
    let o = run(&["evolve", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("time.samples"));
}

#[test]
fn zero_temperature_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = std::fs::read_to_string(config("dot_populations_biased.toml")).unwrap().replace("temperature = 1.0", "temperature = 0.0");
    let p = write_temp(&dir, "cold.toml", &cfg);
    let o = run(&["validate", "--config", p.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    let e = stderr(&o);
    assert!(e.contains("dot.temperature") && e.contains("strictly positive"), "{e}");
}

#[test]
fn degenerate_two_site_spectrum_is_surfaced() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = std::fs::read_to_string(config("entanglement_race.toml")).unwrap().replace("delta = 0.2", "delta = 0.0");
    let p = write_temp(&dir, "flat.toml", &cfg);
    let o = run(&["validate", "--config", p.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    let e = stderr(&o);
    assert!(e.contains("degenerate spectrum") && e.contains("two_site.delta"), "{e}");
}

#[test]
fn unknown_key_is_rejected_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = std::fs::read_to_string(config("entanglement_race.toml")).unwrap().replace("gamma = 0.05", "gamma = 0.05\ngama = 1.0");
    let p = write_temp(&dir, "typo.toml", &cfg);
    let o = run(&["evolve", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("gama") && e.contains("line"), "{e}");
}

#[test]
fn validate_without_config_passes() {
    let o = run(&["validate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let (h, rows) = read_csv(&o.stdout);
    assert_eq!(h, ["check", "value", "tolerance", "status"]);
    assert!(rows.iter().all(|r| r[3] != "fail"));
}

#[test]
fn region_map_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = std::fs::read_to_string(config("coherence_region_map.toml"))
        .unwrap()
        .replace("points = 13", "points = 4")
        .replace("points = 7", "points = 3");
    let p = write_temp(&dir, "small.toml", &cfg);
    let one = run(&["scan", "--config", p.to_str().unwrap(), "--threads", "1"]);
    let four = run(&["scan", "--config", p.to_str().unwrap(), "--threads", "4"]);
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let (h, rows) = read_csv(&one.stdout);
    assert_eq!(h, ["bias", "mean", "flag", "lindblad_flag"]);
    assert_eq!(rows.len(), 12);
}

#[test]
fn boundary_scan_reports_intersection_near_one_two() {
    let o = run(&["scan", "--config", config("dot_regime_equilibrium.toml").to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let hits = v["summary"]["intersections"].as_array().unwrap();
    assert!(hits.iter().any(|p| {
        (p["mu2"].as_f64().unwrap() - 1.0).abs() <= 0.05 && (p["mu4"].as_f64().unwrap() - 2.0).abs() <= 0.05
    }));
}

#[test]
fn scan_kind_must_match_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = std::fs::read_to_string(config("dot_threshold.toml")).unwrap().replace("kind = \"threshold\"", "kind = \"region-map\"");
    let p = write_temp(&dir, "mismatch.toml", &cfg);
    let o = run(&["scan", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scan.kind"));
}
