use slitspdc_core::*;

fn base() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.detectors.step_um = 6.0;
    cfg.integration.z_planes = 7;
    cfg
}

fn direct(cfg: &RunConfig) -> f64 {
    let map = Simulation::from_config(cfg).unwrap().run().unwrap();
    pearson(&map, cfg.stats.centering).unwrap()
}

#[test]
fn rows_equal_direct_runs_bit_for_bit() {
    let spec = SweepSpec {
        param: SweepParam::SlitPitch,
        values: [50.0, 100.0, 200.0].map(SweepValue::Number).to_vec(),
        base: base(),
        bootstrap: None,
    };
    let result = run_sweep(&spec).unwrap();
    assert_eq!(result.rows.len(), 3);
    for row in &result.rows {
        let cfg = spec.config_for(row.value).unwrap();
        assert_eq!(row.rho.unwrap().to_bits(), direct(&cfg).to_bits());
        assert!(row.sigma_rho.is_none());
    }
}

#[test]
fn order_of_values_does_not_leak_state() {
    let values: Vec<SweepValue> = [5.0, 20.0, 10.0].map(SweepValue::Number).to_vec();
    let mut spec = SweepSpec {
        param: SweepParam::CrystalLz,
        values: values.clone(),
        base: base(),
        bootstrap: None,
    };
    let forward = run_sweep(&spec).unwrap();
    spec.values.reverse();
    let backward = run_sweep(&spec).unwrap();
    for (a, b) in forward.rows.iter().zip(backward.rows.iter().rev()) {
        assert_eq!(a.value, b.value);
        assert_eq!(a.rho, b.rho);
    }
}

#[test]
fn single_value_sweep_matches_direct_run() {
    let spec = SweepSpec {
        param: SweepParam::SlitWidth,
        values: vec![SweepValue::Number(30.0)],
        base: base(),
        bootstrap: Some(200),
    };
    let result = run_sweep(&spec).unwrap();
    assert_eq!(result.rows.len(), 1);
    let cfg = spec.config_for(SweepValue::Number(30.0)).unwrap();
    assert_eq!(result.rows[0].rho, Some(direct(&cfg)));
    let map = Simulation::from_config(&cfg).unwrap().run().unwrap();
    let boot = bootstrap_sigma(&map, cfg.stats.counts_total, 200, cfg.seed, cfg.stats.centering).unwrap();
    assert_eq!(result.rows[0].sigma_rho, boot.sigma_rho);
}

#[test]
fn process_sweep_runs_both_types() {
    let mut cfg = base();
    cfg.detectors.step_um = 15.0;
    cfg.integration.z_planes = 3;
    let spec = SweepSpec {
        param: SweepParam::Process,
        values: vec![
            SweepValue::Process(Process::TypeIEoo),
            SweepValue::Process(Process::TypeIIEoe),
        ],
        base: cfg,
        bootstrap: None,
    };
    let result = run_sweep(&spec).unwrap();
    assert_eq!(result.failures(), 0);
    assert_ne!(result.rows[0].rho, result.rows[1].rho);
}

#[test]
fn sweep_csv_has_one_line_per_row() {
    let spec = SweepSpec {
        param: SweepParam::SlitPitch,
        values: vec![SweepValue::Number(-1.0), SweepValue::Number(100.0)],
        base: base(),
        bootstrap: None,
    };
    let result = run_sweep(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    io::write_sweep_csv(&path, &result).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,value,rho,sigma_rho,seconds");
    assert!(lines[1].starts_with("pitch,-1,,,"));
    assert!(lines[2].starts_with("pitch,100,0.9"));
    assert_eq!(lines.len(), 3);
}
