//! Special functions against series evaluations written out here.

use gof_core::special::{
    chisq_cdf, chisq_sf, noncentral_chisq_cdf, normal_cdf, normal_quantile_as241, normal_sf, std_normal_quantile,
};

/// `erf(x) = 2/√π · e^{−x²} · Σ 2ᵏ x^{2k+1} / (1·3·…·(2k+1))`; every term is
/// positive, so there is no cancellation.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        k += 1.0;
        term *= 2.0 * x * x / (2.0 * k + 1.0);
        sum += term;
    }
    2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp() * sum
}

fn phi_series(x: f64) -> f64 {
    0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2))
}

/// Central chi-square CDF for even `nu`: `1 − e^{−x/2} Σ_{j<ν/2} (x/2)ʲ/j!`.
fn chisq_even_cdf(x: f64, nu: u32) -> f64 {
    let h = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..nu / 2 {
        term *= h / j as f64;
        sum += term;
    }
    1.0 - (-h).exp() * sum
}

/// Poisson(δ/2) mixture of central CDFs with `ν + 2j` degrees of freedom.
fn noncentral_even_cdf(x: f64, nu: u32, delta: f64) -> f64 {
    let lam = delta / 2.0;
    let mut weight = (-lam).exp();
    let mut total = 0.0;
    for j in 0..400u32 {
        total += weight * chisq_even_cdf(x, nu + 2 * j);
        weight *= lam / (j + 1) as f64;
    }
    total
}

#[test]
fn normal_cdf_matches_erf_series() {
    for i in -600..=600 {
        let x = i as f64 / 100.0;
        let want = phi_series(x);
        assert!((normal_cdf(x) - want).abs() < 2e-15, "x = {x}: {} vs {want}", normal_cdf(x));
        assert!((normal_sf(x) - (1.0 - want)).abs() < 2e-15, "x = {x}");
    }
}

#[test]
fn normal_tails_are_relatively_accurate() {
    // Mills-ratio continued fraction, evaluated bottom up.
    let mills = |x: f64| {
        let mut f = x;
        for k in (1..200).rev() {
            f = x + k as f64 / f;
        }
        (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt() / f
    };
    for x in [8.0, 10.0, 15.0, 25.0, 35.0] {
        let want = mills(x);
        assert!((normal_sf(x) / want - 1.0).abs() < 1e-12, "x = {x}");
        assert!((normal_cdf(-x) / want - 1.0).abs() < 1e-12, "x = {x}");
    }
}

#[test]
fn quantiles_invert_the_cdf() {
    for i in 1..1000 {
        let p = i as f64 / 1000.0;
        let z = std_normal_quantile(p).unwrap();
        assert!((normal_cdf(z) - p).abs() < 1e-15, "p = {p}");
        assert!((normal_quantile_as241(p) - z).abs() < 1e-13 * z.abs().max(1.0), "p = {p}");
    }
    for p in [1e-300, 1e-100, 1e-20, 1e-10] {
        let z = std_normal_quantile(p).unwrap();
        assert!((normal_cdf(z) / p - 1.0).abs() < 1e-12, "p = {p}");
    }
}

#[test]
fn chisq_matches_closed_form_for_even_dof() {
    for nu in [2u32, 4, 6, 10, 20] {
        for i in 1..200 {
            let x = i as f64 * 0.25;
            let want = chisq_even_cdf(x, nu);
            let got = chisq_cdf(x, nu as f64);
            assert!((got - want).abs() < 1e-13, "nu = {nu}, x = {x}: {got} vs {want}");
            assert!((chisq_sf(x, nu as f64) - (1.0 - want)).abs() < 1e-13);
        }
    }
}

#[test]
fn noncentral_chisq_matches_poisson_mixture() {
    for nu in [2u32, 4, 8] {
        for delta in [0.0, 0.5, 3.0, 12.0, 40.0] {
            for x in [0.5, 2.0, 5.0, 10.0, 30.0, 80.0] {
                let want = noncentral_even_cdf(x, nu, delta);
                let got = noncentral_chisq_cdf(x, nu, delta).unwrap().get();
                assert!((got - want).abs() < 1e-10, "nu = {nu}, delta = {delta}, x = {x}: {got} vs {want}");
            }
        }
    }
}
