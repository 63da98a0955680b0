use sagin_core::scenario::Scenario;
use sagin_core::Error;

#[test]
fn empty_file_gives_defaults() {
    let sc = Scenario::parse("").unwrap();
    assert_eq!(sc, Scenario::default());
    assert_eq!(sc.ground_frequency_hz, 2.4e9);
    assert_eq!(sc.uav_frequency_hz, 28e9);
    assert_eq!(sc.uav_altitude_max_m, 500.0);
    assert_eq!(sc.uav_altitude_min_m, 10.0);
    assert_eq!(sc.uav_density, 15e-6);
    assert_eq!(sc.ground_exponent, 3.5);
}

#[test]
fn keys_override_defaults() {
    let sc = Scenario::parse("# comment\nuav.density = 3e-5  # trailing\n\nfbc.blocklength = 400\n").unwrap();
    assert_eq!(sc.uav_density, 3e-5);
    assert_eq!(sc.fbc_blocklength, 400);
    assert_eq!(sc.uav_process().density, 3e-5);
}

#[test]
fn malformed_input_reports_key_and_line() {
    let e = Scenario::parse("uav.density = 1e-6\nuav.densty = 2e-6\n").unwrap_err();
    match &e {
        Error::Config { line, key, .. } => {
            assert_eq!(*line, Some(2));
            assert_eq!(key.as_deref(), Some("uav.densty"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(e.to_string().contains("uav.densty"));

    let e = Scenario::parse("fbc.epsilon = abc").unwrap_err();
    assert!(e.to_string().contains("fbc.epsilon"), "{e}");
    let e = Scenario::parse("just some text").unwrap_err();
    assert!(matches!(e, Error::Config { line: Some(1), .. }));
}

#[test]
fn invariant_violations_name_the_key() {
    for (text, key) in [
        ("fbc.epsilon = 1.5", "fbc.epsilon"),
        ("uav.altitude_max = 5", "uav.altitude_max"),
        ("region.guard_radius = 20000", "region.guard_radius"),
        ("run.trials = 0", "run.trials"),
        ("uav.density = -1", "uav.density"),
    ] {
        let e = Scenario::parse(text).unwrap_err();
        assert!(e.to_string().contains(key), "{text}: {e}");
    }
}

#[test]
fn sweep_parsing() {
    let sc = Scenario::parse("sweep.param = qos.theta\nsweep.values = 0.001, 0.01, 0.1\n").unwrap();
    let sw = sc.sweep.as_ref().unwrap();
    assert_eq!(sw.param, "qos.theta");
    assert_eq!(sw.values, vec![0.001, 0.01, 0.1]);
    assert!(Scenario::parse("sweep.param = qos.theta\n").is_err());
    assert!(Scenario::parse("sweep.param = nope\nsweep.values = 1\n").is_err());
    assert!(Scenario::parse("sweep.param = qos.theta\nsweep.values =\n").is_err());
}

#[test]
fn hash_tracks_content() {
    let a = Scenario::default();
    let b = Scenario::parse(&a.canonical()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.hash(), b.hash());
    let c = a.with("uav.density", 16e-6).unwrap();
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn file_loading() {
    let dir = std::env::temp_dir().join(format!("sagin-scenario-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("s.cfg");
    std::fs::write(&p, "uav.bias_db = 0\n").unwrap();
    assert_eq!(Scenario::load(&p).unwrap().uav_bias_db, 0.0);
    assert!(matches!(Scenario::load(&dir.join("missing.cfg")), Err(Error::Io(_))));
    std::fs::remove_dir_all(&dir).unwrap();
}
