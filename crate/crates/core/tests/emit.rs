use sfa_fisher::config::{OutputFormat, RunConfig, Spacing, SweepConfig, SweepVariable};
use sfa_fisher::fisher::FisherReport;
use sfa_fisher::pipeline::{emit, presets, run_sweep, write_csv, write_json, CSV_HEADER};

fn small_sweep() -> Vec<FisherReport> {
    let mut c: RunConfig = presets::single_channel(None);
    c.grid.n_par = Some(24);
    c.grid.n_perp = Some(16);
    c.grid.energy_panel = 0.05;
    c.grid.n_theta = 12;
    c.sweep = Some(SweepConfig {
        variable: SweepVariable::Dp,
        values: None,
        range: Some([0.05, 0.2]),
        points: Some(3),
        spacing: Spacing::Log,
    });
    run_sweep(&c).unwrap().reports
}

#[test]
fn empty_report_list_is_header_only() {
    let mut buf = Vec::new();
    write_csv(&mut buf, &[]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text, format!("{}\n", CSV_HEADER.join(",")));
    assert_eq!(
        CSV_HEADER.join(","),
        "sweep_var,qf,alpha,cfi_full,cfi_coarse,cfi_yield,cfi_spec,cfi_spec_coarse,unc_opt_pct,unc_full_pct,\
         unc_coarse_pct,unc_yield_pct,unc_spec_pct,unc_spec_coarse_pct,yield_total,depletion_flag"
    );
}

#[test]
fn csv_rows_and_json_round_trip() {
    let reports = small_sweep();
    assert_eq!(reports.len(), 3);

    let mut buf = Vec::new();
    write_csv(&mut buf, &reports).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    let rows: Vec<csv::StringRecord> = rd.records().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), reports.len());
    for (row, r) in rows.iter().zip(&reports) {
        assert_eq!(row.len(), CSV_HEADER.len());
        assert_eq!(row[0].parse::<f64>().unwrap(), r.params.sweep_var.unwrap());
        assert_eq!(row[1].parse::<f64>().unwrap(), r.qf);
    }

    let mut buf = Vec::new();
    write_json(&mut buf, &reports).unwrap();
    let back: Vec<FisherReport> = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back, reports);
}

#[test]
fn emit_writes_files_and_reports_path_errors() {
    let reports = small_sweep();
    let dir = std::env::temp_dir().join(format!("sfa-fisher-emit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.json");
    emit(&reports, OutputFormat::Json, Some(&path)).unwrap();
    let a = std::fs::read(&path).unwrap();
    emit(&reports, OutputFormat::Json, Some(&path)).unwrap();
    assert_eq!(a, std::fs::read(&path).unwrap());

    let bad = dir.join("missing").join("out.csv");
    let err = emit(&reports, OutputFormat::Csv, Some(&bad)).unwrap_err().to_string();
    assert!(err.contains("missing"), "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn identical_config_gives_identical_bytes() {
    let a = serde_json::to_vec(&small_sweep()).unwrap();
    let b = serde_json::to_vec(&small_sweep()).unwrap();
    assert_eq!(a, b);
}
