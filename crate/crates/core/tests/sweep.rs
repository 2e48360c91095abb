use kineticon::sweep::{parse_config, run_sweep, SweepMode};
use kineticon::{Error, OutputFormat};

fn run(text: &str) -> kineticon::SweepResult {
    run_sweep(&parse_config(text).unwrap()).unwrap()
}

const GRID: &str = r#"{
    "schema_version": 1,
    "mode": "alpha_vs_L_Istar",
    "axes": [
        {"name": "L_nH", "start": 0.1, "stop": 10, "points": 3, "scale": "log"},
        {"name": "Istar_uA", "start": 1, "stop": 100, "points": 3, "scale": "log"}
    ],
    "fixed": {"f_r_GHz": 100}
}"#;

#[test]
fn grid_point_matches_circuit_value() {
    let r = run(GRID);
    let t = &r.table;
    let (l, i, a) = (
        t.numbers("L_nH").unwrap(),
        t.numbers("Istar_uA").unwrap(),
        t.numbers("alpha").unwrap(),
    );
    let k = (0..a.len())
        .find(|&k| l[k] == 1.0 && (i[k] - 10.0).abs() < 1e-12)
        .unwrap();
    assert!((a[k] - 9.939_105_225e-4).abs() / 9.939_105_225e-4 < 1e-9);
    assert_eq!(r.failures, 0);
}

#[test]
fn dimension_sweep_values() {
    let r = run(r#"{"schema_version": 1, "mode": "alpha_vs_dimension",
        "axes": [{"name": "w_um", "start": 0.5, "stop": 1.5, "points": 3}],
        "materials": ["TiN", "nbn"]}"#);
    let tin = r.table.numbers("alpha_TiN").unwrap();
    let nbn = r.table.numbers("alpha_NbN").unwrap();
    assert!((tin[1] - 5.704_369_237_136_357e-5).abs() / 5.704e-5 < 1e-12);
    for (a, b) in tin.iter().zip(&nbn) {
        assert!((a / b - 11.126_436_781_609_195).abs() < 1e-9);
    }
}

#[test]
fn materials_without_density_of_states_are_rejected() {
    let err = parse_config(
        r#"{"schema_version": 1, "mode": "alpha_vs_dimension",
        "axes": [{"name": "w_um", "start": 0.5, "stop": 1.5, "points": 3}],
        "materials": ["Al"]}"#,
    )
    .unwrap_err();
    assert!(
        err.to_string().contains("N0") || err.to_string().contains("n0"),
        "{err}"
    );
}

#[test]
fn custom_material_record() {
    let r = run(r#"{"schema_version": 1, "mode": "alpha_vs_dimension",
        "axes": [{"name": "w_um", "start": 0.5, "stop": 1.5, "points": 3}],
        "materials": [{"name": "TiN2", "tc_k": 3.0, "delta_mev": 0.5, "n0_ev_um3": 8.7e9}, "TiN"]}"#);
    assert_eq!(r.table.numbers("alpha_TiN2"), r.table.numbers("alpha_TiN"));
}

#[test]
fn csv_and_contour_shapes() {
    let r = run(GRID);
    let csv = String::from_utf8(r.render(OutputFormat::Csv)).unwrap();
    assert_eq!(csv.lines().count(), 10);
    assert_eq!(csv.lines().next().unwrap(), "L_nH,Istar_uA,alpha,status");
    let contour = String::from_utf8(r.render(OutputFormat::Contour)).unwrap();
    assert!(contour.contains(&r.provenance.config_hash));
    assert!(contour.contains("CODATA-2018"));
    let body: Vec<&str> = contour.lines().filter(|l| !l.starts_with('#')).collect();
    let blocks: Vec<_> = body.split(|l| l.is_empty()).collect();
    assert_eq!(blocks.len(), 3);
    assert!(blocks.iter().all(|b| b.len() == 3));
}

#[test]
fn emit_writes_and_reports_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(GRID);
    let path = dir.path().join("grid.csv");
    r.emit(OutputFormat::Csv, &path).unwrap();
    let first = std::fs::read(&path).unwrap();
    r.emit(OutputFormat::Csv, &path).unwrap();
    assert_eq!(first, std::fs::read(&path).unwrap());
    let bad = dir.path().join("missing").join("x.csv");
    match r.emit(OutputFormat::Csv, &bad) {
        Err(Error::Io { path, .. }) => assert_eq!(path, bad),
        other => panic!("{other:?}"),
    }
}

#[test]
fn resonator_and_coupled_headers() {
    for text in [
        r#"{"schema_version": 1, "mode": "resonator_s21",
            "axes": [{"name": "f_GHz", "start": 90, "stop": 98, "points": 5}]}"#,
        r#"{"schema_version": 1, "mode": "coupled_s21",
            "axes": [{"name": "f_GHz", "start": 99.9, "stop": 100.1, "points": 5}]}"#,
    ] {
        let r = run(text);
        assert_eq!(r.table.columns.join(","), "f_hz,s21_re,s21_im,s21_db");
        assert_eq!(r.table.rows.len(), 5);
    }
    let modes = run(r#"{"schema_version": 1, "mode": "cavity_modes", "fixed": {"f_max_GHz": 200}}"#);
    assert_eq!(modes.mode, SweepMode::CavityModes);
    let csv = String::from_utf8(modes.render(OutputFormat::Csv)).unwrap();
    assert!(csv.starts_with("family,m,n,p,f_hz\nTE,0,1,1,"));
}

#[test]
fn duffing_sweep_records_bifurcation() {
    let r = run(r#"{"schema_version": 1, "mode": "duffing_power",
        "axes": [{"name": "power_W", "start": 1e-17, "stop": 1e-12, "points": 6, "scale": "log"}]}"#);
    let status: Vec<String> = r.table.rows.iter().map(|row| row[4].to_string()).collect();
    assert_eq!(status[0], "ok");
    assert!(status.contains(&"bifurcation".to_string()), "{status:?}");
    assert!(r.failures > 0);
    let df = r.table.numbers("delta_f_hz").unwrap();
    assert!(df[0] < 0.0);
    assert!(df.iter().zip(&status).all(|(d, s)| (s == "ok") != d.is_nan()));
}

#[test]
fn diagonalization_method_agrees_with_perturbative_when_weak() {
    let text = r#"{"schema_version": 1, "mode": "alpha_vs_L_Istar", "method": "METHOD",
        "axes": [{"name": "L_nH", "start": 1, "stop": 2, "points": 2},
                 {"name": "Istar_uA", "start": 20, "stop": 40, "points": 2}]}"#;
    let exact = run(&text.replace("METHOD", "diagonalization"))
        .table
        .numbers("alpha")
        .unwrap();
    let pert = run(&text.replace("METHOD", "perturbative"))
        .table
        .numbers("alpha")
        .unwrap();
    for (e, p) in exact.iter().zip(&pert) {
        assert!((e / p - 1.0).abs() < 20.0 * p / 3.0 + 1e-6);
    }
}

#[test]
fn network_rejected_for_other_modes() {
    let err = parse_config(
        r#"{"schema_version": 1, "mode": "cavity_modes",
        "network": {"elements": [{"type": "nanowire"}]}}"#,
    )
    .unwrap_err();
    assert!(matches!(err, Error::ConfigValidation(_)));
}
