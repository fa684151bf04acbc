mod common;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cavmag::cli::config::DeviceConfig;
use cavmag::cli::presets::{preset, NAMES};
use cavmag::fieldmap::write_samples;
use cavmag::gauge::GaugeReduction;
use cavmag::phase::approx_eq;
use cavmag::{build_hamiltonian, SystemModel};
use serde_json::Value;
use tempfile::TempDir;

use common::*;

fn cavmag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavmag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cavmag(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = cavmag(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

// ---------------------------------------------------------------------------
// gauge

#[test]
fn gauge_reports_presets() {
    let table1: GaugeReduction = serde_json::from_str(&ok(&["gauge", "--preset", "cavity-pi-table1"])).unwrap();
    assert_eq!(table1.physical_phases.len(), 1);
    assert!(approx_eq(table1.physical_phases[0].theta_rad, PI, 1e-12));

    let pi0: GaugeReduction = serde_json::from_str(&ok(&["gauge", "--preset", "cavity-pi0-table2"])).unwrap();
    let t = pi0.thetas();
    assert!(approx_eq(t[0], PI, 1e-12) && approx_eq(t[1], 0.0, 1e-12), "{t:?}");
}

#[test]
fn gauge_overrides_apply() {
    let r: GaugeReduction =
        serde_json::from_str(&ok(&["gauge", "--preset", "cavity-pi-fit", "--theta", "0"])).unwrap();
    assert!(approx_eq(r.thetas()[0], 0.0, 1e-12));
    let r: GaugeReduction =
        serde_json::from_str(&ok(&["gauge", "--preset", "cavity-pi-fit", "--remove-mode", "m2"])).unwrap();
    assert!(r.physical_phases.is_empty());
    let r: GaugeReduction =
        serde_json::from_str(&ok(&["gauge", "--preset", "cavity-pi0-table2", "--gauge-root", "c1"])).unwrap();
    assert!(r.thetas().iter().all(|t| approx_eq(*t, PI, 1e-12)));
}

#[test]
fn edgeless_config_has_no_phases() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "bare.json");
    std::fs::write(
        &cfg,
        r#"{"system": {"modes": [{"label": "c1", "kind": "photon", "frequency_ghz": 5.0},
                                 {"label": "m1", "kind": "magnon", "frequency_ghz": 5.0}]}}"#,
    )
    .unwrap();
    let r: GaugeReduction = serde_json::from_str(&ok(&["gauge", "--config", s(&cfg)])).unwrap();
    assert!(r.physical_phases.is_empty() && r.reduced_edges.is_empty());
}

#[test]
fn device_config_round_trips() {
    let dir = TempDir::new().unwrap();
    for name in NAMES {
        let device = preset(name).unwrap();
        let cfg = path(&dir, &format!("{name}.json"));
        std::fs::write(&cfg, serde_json::to_string_pretty(&device).unwrap()).unwrap();
        let back: DeviceConfig = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, device);
        // the file drives the CLI exactly like the preset
        assert_eq!(
            ok(&["spectrum", "--config", s(&cfg), "--grid-points", "11"]),
            ok(&["spectrum", "--preset", name, "--grid-points", "11"])
        );
    }
}

// ---------------------------------------------------------------------------
// exit codes

#[test]
fn input_errors_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, "{\n  \"system\": {\"modes\": [\n    {\"label\": \"c1\", \"kind\": \"photon\"}\n  ]}\n}\n").unwrap();
    let (c, err) = code(&["gauge", "--config", s(&bad)]);
    assert_eq!(c, 2);
    assert!(err.contains("line"), "{err}");

    let cases: &[&[&str]] = &[
        &["gauge", "--preset", "no-such-device"],
        &["gauge"],
        &["spectrum", "--preset", "cavity-pi-fit", "--grid-points", "0"],
        &["spectrum", "--preset", "cavity-pi-fit", "--set-frequency", "c9=5"],
        &["spectrum", "--preset", "cavity-pi-fit", "--theta", "pi,0"],
        &["gauge", "--preset", "cavity-pi-fit", "--gauge-root", "zz"],
        &["s21", "--preset", "cavity-pi-fit", "--omega-points", "2", "--omega-start-ghz", "5", "--omega-stop-ghz", "4"],
        &["spectrum", "--preset", "cavity-pi-fit", "--grid-start-ghz", "nan"],
        &["no-such-command"],
    ];
    for args in cases {
        assert_eq!(code(args).0, 2, "{args:?}");
    }
    assert_eq!(code(&["--help"]).0, 0);
}

// ---------------------------------------------------------------------------
// spectrum goldens

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.csv"))
}

#[test]
fn golden_spectra_match() {
    for name in NAMES {
        let want = std::fs::read_to_string(golden(name)).unwrap();
        let got = ok(&["spectrum", "--preset", name, "--grid-points", "61"]);
        let (h1, r1) = read_csv(&want);
        let (h2, r2) = read_csv(&got);
        assert_eq!(h1, h2);
        assert_eq!(r1.len(), r2.len());
        for (a, b) in r1.iter().zip(&r2) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0), "{name}: {x} vs {y}");
            }
        }
    }
}

/// The stored goldens agree with the bisection oracle, independently of
/// the Jacobi solver that wrote them.
#[test]
fn golden_spectra_agree_with_oracle() {
    for name in NAMES {
        let system: SystemModel = preset(name).unwrap().system;
        let (header, rows) = read_csv(&std::fs::read_to_string(golden(name)).unwrap());
        let n = header.iter().filter(|h| h.starts_with("branch_")).count();
        assert_eq!(n, system.dim());
        for row in rows.iter().step_by(5) {
            let h = build_hamiltonian(&system, row[0]).unwrap();
            let oracle = oracle_eigenvalues(h.matrix());
            for (k, e) in oracle.iter().enumerate() {
                // nine significant digits in the file
                assert!((row[1 + k] - e).abs() < 2e-8, "{name} at {}: {} vs {e}", row[0], row[1 + k]);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// s21

#[test]
fn s21_is_deterministic_with_sidecar() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    let args = |out: &Path| {
        vec![
            "s21".to_string(),
            "--preset".into(),
            "cavity-pi-fit".into(),
            "--grid-points".into(),
            "11".into(),
            "--omega-points".into(),
            "101".into(),
            "--out".into(),
            s(out).into(),
        ]
    };
    let run = |out: &Path| ok(&args(out).iter().map(String::as_str).collect::<Vec<_>>());
    run(&a);
    run(&b);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let side_a = std::fs::read_to_string(path(&dir, "a.csv.json")).unwrap();
    assert_eq!(side_a, std::fs::read_to_string(path(&dir, "b.csv.json")).unwrap());
    let meta: Value = serde_json::from_str(&side_a).unwrap();
    assert!(meta.get("generated_unix_s").is_none());
    assert_eq!(meta["losses"]["c1"]["intrinsic_mhz"], 5.0);
    assert_eq!(meta["losses"]["c1"]["intrinsic_defaulted"], true);
    let (header, rows) = read_csv(&std::fs::read_to_string(&a).unwrap());
    assert_eq!(header, ["omega_ghz", "omega_m_ghz", "s21_db"]);
    assert_eq!(rows.len(), 11 * 101);

    let mut with_time = args(&a);
    with_time.push("--timestamp".into());
    ok(&with_time.iter().map(String::as_str).collect::<Vec<_>>());
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(path(&dir, "a.csv.json")).unwrap()).unwrap();
    assert!(meta["generated_unix_s"].is_u64());
}

#[test]
fn line_cut_with_offset() {
    let base = ["s21", "--preset", "cavity-pi-fit", "--line-cut-omega-m", "5.36", "--omega-points", "301"];
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    ok(&[&base[..], &["--out", s(&a)]].concat());
    ok(&[&base[..], &["--offset-db", "-20", "--out", s(&b)]].concat());
    let (h, ra) = read_csv(&std::fs::read_to_string(&a).unwrap());
    let (_, rb) = read_csv(&std::fs::read_to_string(&b).unwrap());
    assert_eq!(h, ["omega_ghz", "s21_db"]);
    assert_eq!(ra.len(), 301);
    for (x, y) in ra.iter().zip(&rb) {
        assert!((x[1] - 20.0 - y[1]).abs() < 1e-6);
    }
}

// ---------------------------------------------------------------------------
// fieldmap

#[test]
fn fieldmap_end_to_end() {
    let dir = TempDir::new().unwrap();
    for (label, currents) in [("c1", MODE_SAME), ("c2", MODE_OPPOSITE)] {
        let samples = cavity_samples(|p| post_field(currents, p), 6, 16);
        let file = std::fs::File::create(path(&dir, &format!("{label}.csv"))).unwrap();
        write_samples(&samples, file).unwrap();
    }
    let regions: Vec<Value> = sphere_regions()
        .iter()
        .map(|r| serde_json::to_value(r).unwrap())
        .collect();
    let config = serde_json::json!({
        "modes": [
            {"label": "c1", "frequency_ghz": 4.524, "file": "c1.csv"},
            {"label": "c2", "frequency_ghz": 6.378}
        ],
        "regions": regions,
    });
    let cfg = path(&dir, "fieldmap.json");
    std::fs::write(&cfg, config.to_string()).unwrap();
    let c2 = path(&dir, "c2.csv");
    let c2_arg = format!("c2={}", s(&c2));
    let table: Value = serde_json::from_str(&ok(&["fieldmap", "--config", s(&cfg), "--mode-file", &c2_arg])).unwrap();
    let edges = table["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 4);
    for e in edges {
        let eta = e["eta"].as_f64().unwrap();
        assert!(eta > 0.0 && eta <= 1.0);
    }

    // the edge table feeds a device config and reduces to θ = π
    let system = serde_json::json!({
        "modes": [
            {"label": "c1", "kind": "photon", "frequency_ghz": 4.524},
            {"label": "c2", "kind": "photon", "frequency_ghz": 6.378},
            {"label": "m1", "kind": "magnon", "frequency_ghz": 5.0},
            {"label": "m2", "kind": "magnon", "frequency_ghz": 5.0}
        ],
        "edges": edges,
    });
    let dev = path(&dir, "device.json");
    std::fs::write(&dev, serde_json::json!({ "system": system }).to_string()).unwrap();
    let r: GaugeReduction = serde_json::from_str(&ok(&["gauge", "--config", s(&dev)])).unwrap();
    assert!(approx_eq(r.thetas()[0], PI, 1e-9));

    // a mode without any field file is an input error
    std::fs::write(
        &cfg,
        serde_json::json!({"modes": [{"label": "c1", "frequency_ghz": 4.5}], "regions": []}).to_string(),
    )
    .unwrap();
    assert_eq!(code(&["fieldmap", "--config", s(&cfg)]).0, 2);
}

// ---------------------------------------------------------------------------
// fit

const FIT_SPEC: &str = r#"{
  "parameters": [
    {"name": "omega_c1", "kind": "frequency", "modes": ["c1"], "lower": 4.4, "upper": 4.65, "initial": 4.52},
    {"name": "omega_c2", "kind": "frequency", "modes": ["c2"], "lower": 6.0, "upper": 6.4, "initial": 6.2},
    {"name": "g1", "kind": "coupling", "edges": [["c1", "m1"], ["c1", "m2"]], "lower": 40, "upper": 200, "initial": 95},
    {"name": "g2", "kind": "coupling", "edges": [["c2", "m1"], ["c2", "m2"]], "lower": 40, "upper": 200, "initial": 105}
  ],
  "theta_hypotheses": [["0"], ["pi"]]
}"#;

#[test]
fn fit_recovers_peaks_written_by_s21() {
    let dir = TempDir::new().unwrap();
    let (map, peaks, spec, out) = (
        path(&dir, "map.csv"),
        path(&dir, "peaks.csv"),
        path(&dir, "spec.json"),
        path(&dir, "fit.json"),
    );
    ok(&[
        "s21",
        "--preset",
        "cavity-pi-fit",
        "--grid-start-ghz",
        "4.2",
        "--grid-stop-ghz",
        "6.6",
        "--grid-points",
        "25",
        "--omega-start-ghz",
        "4.0",
        "--omega-stop-ghz",
        "7.0",
        "--omega-points",
        "3001",
        "--out",
        s(&map),
        "--peaks",
        s(&peaks),
    ]);
    std::fs::write(&spec, FIT_SPEC).unwrap();
    ok(&[
        "fit",
        "--preset",
        "cavity-pi-fit",
        "--data",
        s(&peaks),
        "--spec",
        s(&spec),
        "--out",
        s(&out),
    ]);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let best = &doc["hypotheses"][doc["best"].as_u64().unwrap() as usize];
    assert!(approx_eq(best["thetas_rad"][0].as_f64().unwrap(), PI, 1e-9), "{best}");
    assert_eq!(doc["ambiguous"], false);
    let values: Vec<f64> = best["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let truth = [4.527, 6.19, 81.0, 120.0];
    // map peaks sit within a linewidth of the branches
    assert!((values[0] - truth[0]).abs() < 2e-3 && (values[1] - truth[1]).abs() < 2e-3, "{values:?}");
    assert!((values[2] - truth[2]).abs() < 3.0 && (values[3] - truth[3]).abs() < 3.0, "{values:?}");
    // the fitted system is a valid device
    let fitted: SystemModel = serde_json::from_value(doc["system"].clone()).unwrap();
    assert_eq!(fitted.dim(), 4);
}

#[test]
fn fit_rejects_bad_specs() {
    let dir = TempDir::new().unwrap();
    let (peaks, spec) = (path(&dir, "peaks.csv"), path(&dir, "spec.json"));
    std::fs::write(&peaks, "omega_m_ghz,omega_peak_ghz\n5.0,4.9\n").unwrap();
    std::fs::write(&spec, FIT_SPEC.replace("\"c1\"]", "\"c7\"]")).unwrap();
    let (c, _) = code(&["fit", "--preset", "cavity-pi-fit", "--data", s(&peaks), "--spec", s(&spec)]);
    assert_eq!(c, 2);
    std::fs::write(&spec, FIT_SPEC).unwrap();
    std::fs::write(&peaks, "omega_m_ghz,omega_peak_ghz\n5.0,abc\n").unwrap();
    let (c, _) = code(&["fit", "--preset", "cavity-pi-fit", "--data", s(&peaks), "--spec", s(&spec)]);
    assert_eq!(c, 2);
}
