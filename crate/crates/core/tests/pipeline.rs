mod common;

use bellbench::records::MeasurementRecord;
use bellbench::report::ReportDocument;
use bellbench::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

#[test]
fn csv_round_trip_reproduces_the_report() {
    let mut c = RunConfig::preset("paper").unwrap();
    c.plan.sets = 20;
    let recs = simulate(&c).unwrap();
    let direct = build_report(&recs, &c).unwrap();
    let text = recs.to_csv_string();
    let back = MeasurementRecordSet::read_csv(text.as_bytes(), "records.csv").unwrap();
    let again = build_report(&back, &c).unwrap();
    assert_eq!(direct, again);
    assert_eq!(direct.to_json(), again.to_json());
    assert_eq!(ReportDocument::from_json(&direct.to_json()).unwrap(), direct);
}

#[test]
fn paper_preset_full_scale_report() {
    let c = RunConfig::preset("paper").unwrap();
    let recs = simulate(&c).unwrap();
    let doc = build_report(&recs, &c).unwrap();
    assert_eq!(doc.data.sets, 312);
    let d = (doc.chsh.s - doc.model.expected_s).abs();
    assert!(d < 3.0 * doc.chsh.sigma, "{} vs {}", doc.chsh.s, doc.model.expected_s);
    assert!((doc.budget.total / 5.1e-4 - 1.0).abs() < 0.15, "{}", doc.budget.total);
    assert_eq!(doc.budget.dominant, BudgetTerm::Counting);
}

#[test]
fn ideal_single_set_reaches_tsirelson() {
    let c = RunConfig::preset("ideal").unwrap();
    let doc = build_report(&simulate(&c).unwrap(), &c).unwrap();
    assert!((doc.chsh.abs_s - TSIRELSON_BOUND).abs() < 3.0 * doc.chsh.sigma, "{:?}", doc.chsh);
}

#[test]
fn same_seed_same_bytes() {
    for mode in [SimulationMode::Aggregate, SimulationMode::Event] {
        let mut c = RunConfig::preset("paper").unwrap();
        c.plan.sets = 2;
        c.apparatus.timing.interval = 1.0;
        c.mode = mode;
        let a = simulate(&c).unwrap().to_csv_string();
        let b = simulate(&c).unwrap().to_csv_string();
        assert_eq!(a, b);
        c.plan.seed += 1;
        assert_ne!(a, simulate(&c).unwrap().to_csv_string());
    }
}

/// Records whose pooled correlations are `±S/4` with the reference grand total.
fn synthetic_paper_records() -> MeasurementRecordSet {
    let sets = preset::SETS;
    let per_pair = preset::TOTAL_PAIRS as f64 / 4.0;
    let e = preset::MEASURED_S / 4.0;
    let signs = [-1.0, 1.0, -1.0, -1.0];
    let angles = preset::paper_angles();
    let mut records = Vec::new();
    for set in 0..sets {
        for pair in 0..4 {
            let ep = signs[pair] * e;
            let same = (per_pair * (1.0 + ep) / 4.0).round() as u64;
            let diff = (per_pair * (1.0 - ep) / 4.0).round() as u64;
            // spread a pooled total over the sets, remainder to the first ones
            let share = |total: u64| total / sets as u64 + u64::from((set as u64) < total % sets as u64);
            let (a, b) = match pair {
                0 => (angles.a0, angles.b0),
                1 => (angles.a0, angles.b1),
                2 => (angles.a1, angles.b0),
                _ => (angles.a1, angles.b1),
            };
            for (o, n) in [share(same), share(diff), share(diff), share(same)].into_iter().enumerate() {
                records.push(MeasurementRecord {
                    set,
                    setting: (4 * pair + o) as u32,
                    alice_deg: if o >= 2 { PolarizerAngle::new(a + 90.0).degrees() } else { a },
                    bob_deg: if o % 2 == 1 { PolarizerAngle::new(b + 90.0).degrees() } else { b },
                    duration_s: preset::INTERVAL,
                    singles_a: 290_400,
                    singles_b: 207_000,
                    coincidences: n,
                });
            }
        }
    }
    MeasurementRecordSet::new(records)
}

#[test]
fn analysis_of_the_reference_aggregate() {
    let c = RunConfig::preset("paper").unwrap();
    let recs = synthetic_paper_records();
    let doc = build_report(&recs, &c).unwrap();
    assert!((doc.chsh.abs_s - preset::MEASURED_S).abs() < 2e-5, "{}", doc.chsh.abs_s);
    assert!((doc.chsh.sigma / 4.9e-4 - 1.0).abs() < 0.05);
    let z = doc.bounds.report.z_grinbaum;
    assert!(z > 4.2 && z < 4.7, "{z}");
    assert!((doc.bounds.report.tsirelson_gap - 0.00084).abs() < 3e-5);
}

#[test]
fn all_zero_coincidences_name_the_setting() {
    let c = RunConfig::preset("paper").unwrap();
    let mut recs = synthetic_paper_records();
    for r in &mut recs.records {
        r.coincidences = 0;
    }
    let err = build_report(&recs, &c).unwrap_err();
    assert!(matches!(err, Error::UndefinedCorrelation { pair: 0, first_setting: 0, last_setting: 3 }), "{err}");
}

#[test]
fn missing_setting_is_incomplete() {
    let c = RunConfig::preset("paper").unwrap();
    let mut recs = synthetic_paper_records();
    recs.records.retain(|r| !(r.set == 5 && r.setting == 7));
    assert!(matches!(build_report(&recs, &c), Err(Error::IncompleteRecords(_))));
}

#[test]
fn malformed_row_has_line_number() {
    let c = RunConfig::preset("ideal").unwrap();
    let mut text = simulate(&c).unwrap().to_csv_string();
    text = text.replacen("\n0,3,", "\n0,3,x", 1);
    match MeasurementRecordSet::read_csv(text.as_bytes(), "bad.csv") {
        Err(Error::Parse { path, line, .. }) => {
            assert_eq!(path, "bad.csv");
            assert_eq!(line, 5);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn correlation_sigma_matches_poisson_resampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = Poisson::new(25.0).unwrap();
    let es: Vec<f64> = (0..100_000)
        .filter_map(|_| {
            let n: Vec<u64> = (0..4).map(|_| d.sample(&mut rng) as u64).collect();
            estimate_correlation(&CoincidenceCounts::new(n[0], n[1], n[2], n[3])).ok().map(|e| e.e)
        })
        .collect();
    let (_, sd) = common::mean_std(&es);
    let analytic = estimate_correlation(&CoincidenceCounts::new(25, 25, 25, 25)).unwrap().sigma;
    assert!((sd / analytic - 1.0).abs() < 0.02, "{sd} vs {analytic}");
}

#[test]
fn fitted_visibility_of_a_simulated_fringe() {
    let mut p = preset::paper();
    p.model = CorrelationModel::with_visibilities(0.999, 0.999);
    p.source.pair_rate = 1.0e4;
    p.source.singles_rate_a = 3.0e4;
    p.source.singles_rate_b = 3.0e4;
    p.det_a.dark_rate = 0.0;
    p.det_b.dark_rate = 0.0;
    p.det_a.dead_time = 0.0;
    p.det_b.dead_time = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let scan: Vec<(f64, f64)> = (0..36)
        .map(|k| {
            let b = 5.0 * k as f64;
            let mean = bellbench::expected_setting_rates(&p, SettingPair::new(45.0, b)).coincidences() * 4.0;
            (b, Poisson::new(mean.max(1e-9)).unwrap().sample(&mut rng))
        })
        .collect();
    let peak = scan.iter().map(|s| s.1).fold(0.0, f64::max);
    assert!(peak > 1e4);
    let v = estimate_visibility(&scan).unwrap();
    assert!((v.v - 0.999).abs() < 3.0 * v.sigma.max(1e-4), "{v:?}");
    assert!(v.sigma < 0.002);
}
