//! Brute-force evaluation of the weighted sup statistics: the EDF ratio is
//! evaluated on a dense equispaced grid of the interval plus every jump, every
//! left limit at a jump and both interval ends. Weights are recomputed from
//! their closed forms rather than taken from the library.

use gof_core::{StatisticFamily, WeightFunction};

/// Closed-form weight `q(u)` with `v = u(1−u)`.
pub fn q_closed_form(w: &WeightFunction, u: f64) -> f64 {
    let v = u * (1.0 - u);
    match *w {
        WeightFunction::EfkpLogLog => (v * (1.0 / v).ln().ln()).sqrt(),
        WeightFunction::Sdp => v.sqrt(),
        WeightFunction::ChibisovOReilly { nu } => v.powf(0.5 - nu),
        WeightFunction::LogLogPower { sigma } => v.sqrt() * (1.0 / v).ln().ln().powf(0.5 + sigma),
    }
}

#[derive(Clone, Copy)]
pub enum Denom<'a> {
    /// `q(t)`.
    AtLocation(&'a WeightFunction),
    /// `q(𝔾ₙ(t))`, ratio 0 where the EDF is 0 or 1.
    AtEdf(&'a WeightFunction),
    Unit,
}

/// Largest signed and absolute ratio over the candidates, times `√n`.
#[derive(Debug, Clone, Copy)]
pub struct DenseSup {
    pub one_sided: f64,
    pub two_sided: f64,
}

fn ratio(denom: Denom<'_>, c: f64, t: f64) -> f64 {
    match denom {
        Denom::Unit => c - t,
        Denom::AtLocation(w) => {
            if t <= 0.0 || t >= 1.0 {
                0.0
            } else {
                (c - t) / q_closed_form(w, t)
            }
        }
        Denom::AtEdf(w) => {
            if c <= 0.0 || c >= 1.0 {
                0.0
            } else {
                (c - t) / q_closed_form(w, c)
            }
        }
    }
}

/// `u` sorted in (0, 1); the statistic ranges over the open interval `(a, b)`.
pub fn dense_sup(u: &[f64], denom: Denom<'_>, a: f64, b: f64, grid: usize) -> DenseSup {
    let n = u.len() as f64;
    let le = |t: f64| u.partition_point(|&x| x <= t) as f64 / n;
    let lt = |t: f64| u.partition_point(|&x| x < t) as f64 / n;
    let mut one = f64::NEG_INFINITY;
    let mut two = f64::NEG_INFINITY;
    let mut offer = |r: f64| {
        one = one.max(r);
        two = two.max(r.abs());
    };

    offer(ratio(denom, le(a), a));
    offer(ratio(denom, lt(b), b));
    for &x in u.iter().filter(|&&x| x > a && x < b) {
        offer(ratio(denom, le(x), x));
        offer(ratio(denom, lt(x), x));
    }
    let mut j = u.partition_point(|&x| x <= a);
    for k in 1..grid {
        let t = a + (b - a) * (k as f64 / grid as f64);
        while j < u.len() && u[j] <= t {
            j += 1;
        }
        offer(ratio(denom, j as f64 / n, t));
    }
    DenseSup {
        one_sided: n.sqrt() * one,
        two_sided: n.sqrt() * two,
    }
}

/// Interval over which a higher-criticism family takes its sup, or `None`
/// when it is empty for this sample.
pub fn hc_interval(family: StatisticFamily, alpha0: f64, u: &[f64]) -> Option<(f64, f64)> {
    let n = u.len();
    match family {
        StatisticFamily::Hc => Some((0.0, alpha0)),
        StatisticFamily::HcPlus => {
            let a = 1.0 / n as f64;
            (a < alpha0).then_some((a, alpha0))
        }
        StatisticFamily::HcStar => {
            let k = ((alpha0 * n as f64).floor() as usize).max(1);
            (k >= 2 && u[0] < u[k - 1]).then(|| (u[0], u[k - 1]))
        }
        _ => unreachable!("not a higher-criticism family"),
    }
}

pub const RELATIVE_TOLERANCE: f64 = 1e-6;

pub fn builtin_weights() -> Vec<WeightFunction> {
    vec![
        WeightFunction::EfkpLogLog,
        WeightFunction::Sdp,
        WeightFunction::chibisov_oreilly(0.25).unwrap(),
        WeightFunction::loglog_power(0.25).unwrap(),
    ]
}

fn agrees(exact: f64, brute: f64) -> bool {
    (exact - brute).abs() <= RELATIVE_TOLERANCE * brute.abs().max(1e-9)
}

/// Evaluates every family and built-in weight on `u` with the library and
/// with the dense grid. Returns the number of comparisons and a description
/// of each disagreement.
pub fn compare_all_families(u: &[f64], interval: (f64, f64), alpha0: f64, grid: usize) -> (usize, Vec<String>) {
    use gof_core::statistics::evaluate_uniform;
    use gof_core::{Interval, Sample, StatisticDescriptor};

    let sample = Sample::from_sorted(u.to_vec()).unwrap();
    let iv = Interval::new(interval.0, interval.1).unwrap();
    let mut pairs: Vec<(String, f64, f64)> = Vec::new();
    let mut bad = Vec::new();
    let eval = |d: &StatisticDescriptor| evaluate_uniform(&sample, d).map(|r| r.value);

    for w in builtin_weights() {
        let plain = dense_sup(u, Denom::AtLocation(&w), iv.a, iv.b, grid);
        let hat = dense_sup(u, Denom::AtEdf(&w), iv.a, iv.b, grid);
        let cases = [
            (StatisticFamily::CscshmOneSided, plain.one_sided),
            (StatisticFamily::CscshmTwoSided, plain.two_sided),
            (StatisticFamily::CscshmHatOneSided, hat.one_sided),
            (StatisticFamily::CscshmHatTwoSided, hat.two_sided),
        ];
        for (family, brute) in cases {
            let d = StatisticDescriptor::cscshm(family, w, iv).unwrap();
            pairs.push((format!("{family} {w} on {iv}"), eval(&d).unwrap(), brute));
        }
    }

    let ks = dense_sup(u, Denom::Unit, iv.a, iv.b, grid);
    let mut d = StatisticDescriptor::ks();
    d.interval = iv;
    pairs.push((format!("ks on {iv}"), eval(&d).unwrap(), ks.two_sided));

    let sdp = WeightFunction::Sdp;
    for family in [StatisticFamily::Hc, StatisticFamily::HcPlus, StatisticFamily::HcStar] {
        let d = StatisticDescriptor::higher_criticism(family, alpha0).unwrap();
        match hc_interval(family, alpha0, u) {
            Some((a, b)) => {
                let brute = dense_sup(u, Denom::AtLocation(&sdp), a, b, grid).one_sided;
                pairs.push((format!("{family} alpha0 = {alpha0}"), eval(&d).unwrap(), brute));
            }
            None => {
                if eval(&d).is_ok() {
                    bad.push(format!("{family} alpha0 = {alpha0}: expected an empty interval"));
                }
            }
        }
    }
    for (label, exact, brute) in &pairs {
        if !agrees(*exact, *brute) {
            bad.push(format!("{label}: library {exact} vs grid {brute} (n = {})", u.len()));
        }
    }
    (pairs.len(), bad)
}

/// Random sample of size 1..=50 in (0, 1): plain uniform, piled up near
/// either end, or rounded to produce ties.
pub fn random_unit_sample<R: rand::Rng>(rng: &mut R) -> Vec<f64> {
    let n = rng.random_range(1..=50);
    let shape = rng.random_range(0..4);
    let mut u: Vec<f64> = (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(1e-9..1.0 - 1e-9);
            match shape {
                0 => x,
                1 => x.powi(4).max(1e-12),
                2 => 1.0 - x.powi(4).max(1e-12),
                _ => ((x * 20.0).round() / 20.0).clamp(0.01, 0.99),
            }
        })
        .collect();
    u.sort_by(f64::total_cmp);
    u
}

/// Either the whole unit interval or a random subinterval.
pub fn random_interval<R: rand::Rng>(rng: &mut R) -> (f64, f64) {
    if rng.random_bool(0.5) {
        (0.0, 1.0)
    } else {
        let a: f64 = rng.random_range(0.0..0.5);
        let b: f64 = rng.random_range(a + 0.05..=1.0);
        (a, b)
    }
}
