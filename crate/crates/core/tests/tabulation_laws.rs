use gof_core::tabulation::{empirical_quantile, simulate_all, tabulate, Innovation};
use gof_core::{Interval, Sided, TabulationConfig, WeightFunction};

fn config(n: usize, m: usize, interval: Interval, sided: Sided, seed: u64) -> TabulationConfig {
    TabulationConfig::new(n, m, WeightFunction::EfkpLogLog, interval, sided, seed).unwrap()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Standard error of the empirical `p`-quantile, with the density taken
/// from a symmetric difference of neighbouring quantiles.
fn quantile_se(sorted: &[f64], p: f64) -> f64 {
    let h = 0.02;
    let density = 2.0 * h / (empirical_quantile(sorted, p + h) - empirical_quantile(sorted, p - h));
    (p * (1.0 - p) / sorted.len() as f64).sqrt() / density
}

/// The interval stays clear of the first and last lattice points, where the
/// maximum is driven by one or two skewed increments at this `n`.
#[test]
fn exponential_innovations_give_the_same_law() {
    let normal = config(20_000, 20_000, Interval::new(0.01, 0.99).unwrap(), Sided::One, 61);
    let expo = normal.clone().with_innovation(Innovation::CenteredExponential);
    let a = sorted(simulate_all(&normal).unwrap());
    let b = sorted(simulate_all(&expo).unwrap());
    for p in [0.25, 0.5, 0.75] {
        let (qa, qb) = (empirical_quantile(&a, p), empirical_quantile(&b, p));
        let se = quantile_se(&a, p).hypot(quantile_se(&b, p));
        assert!((qa - qb).abs() <= 3.0 * se, "p = {p}: {qa} vs {qb}, se {se}");
    }
}

#[test]
fn restricting_the_interval_and_dropping_the_sign_lower_every_replicate() {
    let full_one = config(3_000, 400, Interval::UNIT, Sided::One, 8);
    let inner = Interval::new(0.1, 0.9).unwrap();
    let inner_one = config(3_000, 400, inner, Sided::One, 8);
    let full_two = config(3_000, 400, Interval::UNIT, Sided::Two, 8);
    let a = simulate_all(&full_one).unwrap();
    let b = simulate_all(&inner_one).unwrap();
    let c = simulate_all(&full_two).unwrap();
    for i in 0..a.len() {
        assert!(b[i] <= a[i], "replicate {i}");
        assert!(a[i] <= c[i], "replicate {i}");
    }
    let (ta, tb, tc) = (tabulate(&full_one).unwrap(), tabulate(&inner_one).unwrap(), tabulate(&full_two).unwrap());
    for i in 0..99 {
        assert!(tb.points[i].0 <= ta.points[i].0);
        assert!(ta.points[i].0 <= tc.points[i].0);
    }
}

#[test]
fn tables_do_not_depend_on_the_thread_count() {
    let cfg = config(4_000, 1_500, Interval::new(0.0, 0.5).unwrap(), Sided::Two, 99);
    let docs: Vec<String> = [1, 2, 8]
        .iter()
        .map(|&t| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
            pool.install(|| tabulate(&cfg).unwrap().to_json())
        })
        .collect();
    assert_eq!(docs[0], docs[1]);
    assert_eq!(docs[0], docs[2]);
}

#[test]
fn saved_tables_reload_with_raw_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(500, 300, Interval::UNIT, Sided::One, 3);
    let table = tabulate(&cfg).unwrap();
    let path = dir.path().join("t.json");
    table.save_json(&path).unwrap();
    table.save_raw_csv(&dir.path().join("t.raw.csv")).unwrap();
    let mut back = gof_core::QuantileTable::load_json(&path).unwrap();
    assert_eq!(back.points, table.points);
    back.attach_raw_csv(&dir.path().join("t.raw.csv")).unwrap();
    assert_eq!(back.raw, table.raw);
    for x in [0.5, 1.0, 2.0, 3.3] {
        assert_eq!(back.cdf(x), table.cdf(x));
    }
}
