mod common;

use bellbench::apparatus::expected_setting_rates;
use bellbench::sim::{cell_rng, generate_stream, simulate_setting_with, SETTINGS_PER_SET};
use bellbench::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn generate_stream_count_is_poisson() {
    let inside = (0..100)
        .filter(|&seed| {
            let n = generate_stream(1000.0, 100.0, 0.0, seed).unwrap().len() as f64;
            (n - 1e5).abs() <= 3.0 * 1e5f64.sqrt()
        })
        .count();
    assert!(inside >= 99, "{inside}");
    assert!(generate_stream(0.0, 1.0, 0.0, 1).unwrap().is_empty());
}

#[test]
fn matcher_against_brute_force_on_large_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let a = common::random_stream(&mut rng, 10_000, 1.0);
        let b = common::random_stream(&mut rng, 10_000, 1.0);
        for w in [1e-6, 2e-5, 1e-4] {
            let got = match_coincidences(
                &TimestampStream::new("a", a.clone()),
                &TimestampStream::new("b", b.clone()),
                CoincidenceWindow { half_width: w },
            )
            .unwrap();
            assert_eq!(got, common::brute_force_match(&a, &b, w));
        }
    }
}

#[test]
fn event_rates_converge_to_expected_rates() {
    let p = preset::paper();
    let s = SettingPair::new(1.9, 67.7);
    let want = expected_setting_rates(&p, s);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = 600.0;
    let c = simulate_setting_with(&p, s, t, &mut rng).unwrap();
    let n = c.coincidences as f64;
    assert!((n - want.coincidences() * t).abs() < 3.0 * (want.coincidences() * t).sqrt());
    let na = c.singles_a as f64;
    assert!((na - want.singles_a * t).abs() < 3.0 * (want.singles_a * t).sqrt());
    let nb = c.singles_b as f64;
    assert!((nb - want.singles_b * t).abs() < 3.0 * (want.singles_b * t).sqrt());
}

#[test]
fn ideal_single_set_follows_projector_probabilities() {
    let p = preset::ideal();
    let plan = preset::ideal_plan(1, 9);
    let recs = run_experiment(&p, &plan).unwrap();
    assert_eq!(recs.records.len(), SETTINGS_PER_SET);
    for r in &recs.records {
        let mean = p.source.pair_rate * r.duration_s * common::singlet_probability(r.alice_deg, r.bob_deg, 1.0, 1.0);
        let n = r.coincidences as f64;
        assert!((n - mean).abs() <= 4.0 * mean.sqrt().max(1.0), "setting {}: {n} vs {mean}", r.setting);
    }
}

#[test]
fn paper_scale_total_at_desk_scale() {
    let p = preset::paper();
    let recs = run_experiment(&p, &preset::paper_plan(3, 21)).unwrap();
    let want = preset::TOTAL_PAIRS as f64 * 3.0 / 312.0;
    let n = recs.total_coincidences() as f64;
    assert!((n - want).abs() < 5.0 * want.sqrt(), "{n} vs {want}");
}

#[test]
fn runs_are_bit_identical_across_thread_counts() {
    let p = preset::paper();
    let mut plan = preset::paper_plan(2, 77);
    plan.interval = 2.0;
    let one = pool(1).install(|| run_experiment(&p, &plan).unwrap());
    let many = pool(4).install(|| run_experiment(&p, &plan).unwrap());
    assert_eq!(one, many);
    assert_eq!(one, run_experiment(&p, &plan).unwrap());
    let agg1 = pool(1).install(|| sample_counts_aggregate(&p, &preset::paper_plan(20, 3)).unwrap());
    let agg4 = pool(4).install(|| sample_counts_aggregate(&p, &preset::paper_plan(20, 3)).unwrap());
    assert_eq!(agg1, agg4);
}

#[test]
fn aggregate_mean_matches_event_mean() {
    let p = preset::paper();
    let s = SettingPair::new(46.8, 22.9);
    let event: Vec<f64> = (0..100)
        .map(|k| {
            let mut rng = cell_rng(1000, k, 0);
            simulate_setting_with(&p, s, 60.0, &mut rng).unwrap().coincidences as f64
        })
        .collect();
    let mut plan = preset::paper_plan(1000, 4);
    plan.angles = ChshAngles::new(46.8, 46.8, 22.9, 22.9);
    let agg = sample_counts_aggregate(&p, &plan).unwrap();
    let agg: Vec<f64> = agg.records.iter().filter(|r| r.setting == 0).map(|r| r.coincidences as f64).collect();
    assert_eq!(agg.len(), 1000);
    let (me, se) = common::mean_std(&event);
    let (ma, sa) = common::mean_std(&agg);
    let combined = (se * se / 100.0 + sa * sa / 1000.0).sqrt();
    assert!((me - ma).abs() < 3.0 * combined, "{me} vs {ma} (σ {combined})");
}

#[test]
fn event_and_aggregate_s_distributions_agree() {
    let p = preset::paper();
    let s_of = |recs: MeasurementRecordSet| estimate_s(&recs).unwrap().s;
    let mut plan = preset::paper_plan(1, 0);
    plan.interval = 1.0;
    let event: Vec<f64> = (0..100)
        .map(|k| {
            plan.seed = 500 + k;
            s_of(run_experiment(&p, &plan).unwrap())
        })
        .collect();
    let agg: Vec<f64> = (0..100)
        .map(|k| {
            plan.seed = 900 + k;
            s_of(sample_counts_aggregate(&p, &plan).unwrap())
        })
        .collect();
    let (_, pval) = common::ks_two_sample(&event, &agg);
    assert!(pval > 0.01, "KS p = {pval}");
}

#[test]
fn event_count_variance_is_poisson() {
    let p = preset::paper();
    let s = SettingPair::new(1.9, 67.7);
    let counts: Vec<f64> = (0..2000)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(10_000 + k);
            simulate_setting_with(&p, s, 0.5, &mut rng).unwrap().coincidences as f64
        })
        .collect();
    let (m, sd) = common::mean_std(&counts);
    assert!((sd * sd / m - 1.0).abs() < 0.10, "var {} mean {m}", sd * sd);
}

#[test]
fn darks_only_accidentals() {
    let mut p = preset::paper();
    p.source.pair_rate = 0.0;
    let s = SettingPair::new(0.0, 0.0);
    let want = expected_setting_rates(&p, s).accidental_coinc * 60.0;
    assert!((want / 60.0 - preset::ACCIDENTAL_RATE).abs() < 1e-4);
    let total: f64 = (0..50)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(k);
            simulate_setting_with(&p, s, 60.0, &mut rng).unwrap().coincidences as f64
        })
        .sum();
    let mean_want = want * 50.0;
    assert!((total - mean_want).abs() < 5.0 * mean_want.sqrt(), "{total} vs {mean_want}");
}

#[test]
fn zero_rates_give_zero_counts() {
    let mut p = preset::ideal();
    p.source.pair_rate = 0.0;
    p.source.singles_rate_a = 0.0;
    p.source.singles_rate_b = 0.0;
    let recs = sample_counts_aggregate(&p, &preset::ideal_plan(2, 1)).unwrap();
    assert!(recs.records.iter().all(|r| r.coincidences == 0 && r.singles_a == 0 && r.singles_b == 0));
    let recs = run_experiment(&p, &preset::ideal_plan(1, 1)).unwrap();
    assert_eq!(recs.total_coincidences(), 0);
}

#[test]
fn aggregate_s_spread_at_full_scale() {
    let p = preset::paper();
    let s: Vec<f64> = (0..60)
        .map(|k| estimate_s(&sample_counts_aggregate(&p, &preset::paper_plan(312, 40 + k)).unwrap()).unwrap().s)
        .collect();
    let (_, sd) = common::mean_std(&s);
    // the sample sd of 60 draws has a relative spread of about 9%
    assert!((sd / 4.9e-4 - 1.0).abs() < 0.3, "{sd}");
}
