use sagin_core::runner::{run_figure, run_metric, run_validation, Cell, Figure, Metric, Suite};
use sagin_core::scenario::Scenario;

fn quick() -> Scenario {
    Scenario::default().with("run.trials", 2000.0).unwrap()
}

#[test]
fn csv_dialect_and_metadata() {
    let t = run_metric(&quick(), Metric::DelayViolation, false).unwrap();
    let csv = t.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines.iter().any(|l| l.starts_with("# scenario_hash=")));
    assert!(lines.iter().any(|l| *l == "# seed=1"));
    assert!(lines.iter().any(|l| l.starts_with("# version=")));
    let header = lines.iter().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(*header, "rate_sat,p_sat,rate_uav,p_uav");
    assert_eq!(t.meta("scenario_hash").unwrap(), quick().hash());
    // Small values are written in scientific notation.
    let sc = quick().with("qos.theta", 0.1).unwrap();
    let csv = run_metric(&sc, Metric::DelayViolation, false).unwrap().to_csv();
    let row = csv.lines().last().unwrap();
    assert!(row.split(',').nth(1).unwrap().contains('e'), "{row}");
}

#[test]
fn sweep_adds_a_leading_column_and_one_row_per_value() {
    let mut sc = quick();
    sc.set_sweep("qos.theta", vec![0.001, 0.003, 0.01, 0.03, 0.1]).unwrap();
    let t = run_metric(&sc, Metric::DelayViolation, false).unwrap();
    assert_eq!(t.columns[0], "qos.theta");
    assert_eq!(t.rows.len(), 5);
    for c in ["p_sat", "p_uav"] {
        let v = t.column(c).unwrap();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "{c}: {v:?}");
    }
}

#[test]
fn mutated_scenario_changes_hash() {
    let a = run_metric(&quick(), Metric::OutageCapacity, false).unwrap();
    let b = run_metric(&quick().with("satellite.gain_db", 31.0).unwrap(), Metric::OutageCapacity, false).unwrap();
    assert_ne!(a.meta("scenario_hash"), b.meta("scenario_hash"));
}

#[test]
fn epsilon_uav_decreases_with_density_and_gain() {
    let base = Scenario::default()
        .with("uav.altitude_min", 20.0)
        .unwrap()
        .with("uav.altitude_max", 20.0)
        .unwrap()
        .with("uav.serving_altitude", 20.0)
        .unwrap();
    let mut prev_by_gain: Option<Vec<f64>> = None;
    for gain in [10.0, 30.0] {
        let mut sc = base.with("uav.gain_db", gain).unwrap();
        sc.set_sweep("uav.density", vec![5e-6, 15e-6, 45e-6]).unwrap();
        let v = run_metric(&sc, Metric::EpsilonUav, false).unwrap().column("epsilon_uav").unwrap();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "gain {gain}: {v:?}");
        if let Some(p) = &prev_by_gain {
            assert!(v.iter().zip(p).all(|(a, b)| a < b));
        }
        prev_by_gain = Some(v);
    }
}

#[test]
fn oracle_columns_track_the_analytics() {
    let sc = Scenario::default().with("run.trials", 20000.0).unwrap();
    let t = run_metric(&sc, Metric::EpsilonUav, true).unwrap();
    let an = t.column("epsilon_uav").unwrap()[0];
    let mc = t.column("mc").unwrap()[0];
    let se = t.column("mc_std_error").unwrap()[0];
    assert!((an - mc).abs() < 4.0 * se + 1e-3, "{an} vs {mc} ± {se}");

    let t = run_metric(&sc, Metric::OutageProb, true).unwrap();
    for (a, m, s) in [("outage_sat", "mc_sat", "mc_sat_std_error"), ("outage_uav", "mc_uav", "mc_uav_std_error")] {
        let (a, m, s) = (t.column(a).unwrap()[0], t.column(m).unwrap()[0], t.column(s).unwrap()[0]);
        assert!((a - m).abs() < 4.0 * s + 2e-3, "{a} vs {m} ± {s}");
    }
}

#[test]
fn with_uav_capacity_exceeds_satellite_only() {
    for theta in [0.01, 0.001] {
        let sc = quick().with("qos.theta", theta).unwrap();
        let t = run_metric(&sc, Metric::EffectiveCapacity, true).unwrap();
        let with = t.column("mc_with_uav").unwrap()[0];
        let without = t.column("mc_sat").unwrap()[0];
        assert!(with >= without, "theta {theta}: {with} < {without}");
        let method = t.text_column("ec_uav_method").unwrap();
        assert!(!method[0].is_empty());
    }
}

#[test]
fn laplace_and_moments_tables() {
    let t = run_metric(&quick(), Metric::Laplace, true).unwrap();
    assert_eq!(t.rows.len(), 14);
    let l = t.column("laplace").unwrap();
    assert!(l.iter().all(|v| (0.0..=1.0).contains(v)));
    let t = run_metric(&quick(), Metric::Moments, false).unwrap();
    assert_eq!(t.columns, vec!["tier", "mean", "variance"]);
    assert!(matches!(&t.rows[0][0], Cell::Text(s) if s == "ground"));
}

#[test]
fn cheap_suites_pass_on_defaults() {
    for s in [Suite::Theorem1VsQuadrature, Suite::OutageRoundtrip, Suite::EcLimits] {
        let r = run_validation(&quick(), s).unwrap();
        assert!(r.passed, "{s}:\n{}", r.table.to_csv());
    }
}

#[test]
fn figures_are_reproducible() {
    let sc = Scenario::default().with("run.trials", 500.0).unwrap();
    for f in [Figure::Fig2, Figure::Fig9] {
        let a = run_figure(&sc, f).unwrap().to_csv();
        let b = run_figure(&sc, f).unwrap().to_csv();
        assert_eq!(a, b);
        let c = run_figure(&sc.with("run.seed", 2.0).unwrap(), f).unwrap().to_csv();
        assert_ne!(a, c);
    }
}
