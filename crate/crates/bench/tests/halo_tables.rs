use tlbm_bench::{bench_halo_exchange, BenchSettings, BenchmarkRegistry, HaloParams, Repeat};
use tlbm_planner::{scaling_curve, BandwidthTables, CostModelInput, PlannerConfig, DEFAULT_S};

fn quick() -> HaloParams {
    HaloParams {
        edges: vec![8, 16, 32],
        bytes_per_sample: 1 << 18,
        repeat: Repeat { warmup: 1, reps: 5 },
        ..HaloParams::default()
    }
}

#[test]
fn measured_table_feeds_the_planner() {
    let r = bench_halo_exchange(&quick()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("halo_bandwidth.csv");
    r.tables.save(&path).unwrap();
    let loaded = BandwidthTables::load(&path).unwrap();
    assert_eq!(loaded, r.tables);

    std::fs::write(
        dir.path().join("plan.toml"),
        "lx = 3600\nly = 3600\nbeta = 1e-8\nnp_max = 16\nbandwidth_table = \"halo_bandwidth.csv\"\n",
    )
    .unwrap();
    let cfg = PlannerConfig::load(&dir.path().join("plan.toml")).unwrap();
    let input = cfg.input().unwrap();
    assert!(input.bx > 0.0 && input.by > 0.0);
    let rows = scaling_curve(&input, &cfg.np_list().unwrap(), &cfg.tables().unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.t_total.is_finite() && r.t_total > 0.0));
}

#[test]
fn csv_report_has_a_row_per_direction_and_edge() {
    let r = bench_halo_exchange(&quick()).unwrap();
    let mut buf = Vec::new();
    r.report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with(
        "benchmark,variant,tile_edge [site],repetitions,median [s],min [s],max [s],bandwidth [B/s]"
    ));
    assert_eq!(text.lines().count(), 1 + 6);
}

#[test]
fn registry_halo_returns_tables() {
    let settings = BenchSettings {
        tile_edges: vec![8, 12],
        repeat: Repeat { warmup: 0, reps: 5 },
        ..BenchSettings::default()
    };
    let out = BenchmarkRegistry::builtin().get("halo").unwrap().run(&settings).unwrap();
    let tables = out.tables.expect("halo bench emits tables");
    let input = CostModelInput::new(64.0, 64.0, 4, 1.0, 1.0, 1e-8, DEFAULT_S).unwrap();
    let resolved = tables.resolve(&input, 2.0, 2.0);
    assert!(resolved.bx.is_finite() && resolved.by.is_finite());
}

#[test]
fn registry_layout_and_misalignment_run_small() {
    let settings = BenchSettings {
        lattice: (16, 16),
        copy_bytes: 1024,
        offsets: vec![0, 3],
        repeat: Repeat { warmup: 0, reps: 5 },
        ..BenchSettings::default()
    };
    let reg = BenchmarkRegistry::builtin();
    let layout = reg.get("layout").unwrap().run(&settings).unwrap();
    let names: Vec<&str> = layout.report.results.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["soa-propagate", "aos-propagate", "soa-collide", "aos-collide"]);
    let mis = reg.get("misalignment").unwrap().run(&settings).unwrap();
    assert_eq!(mis.report.results.len(), 4);
}
