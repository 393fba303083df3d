//! Adaptive Simpson quadrature for positive integrands on log-scaled panels.

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` with adaptive Simpson refinement to relative
/// tolerance `rel_tol`. Returns `None` if `f` produced a non-finite value.
///
/// The plain (un-extrapolated) Simpson estimate is returned so that a
/// nonnegative integrand always yields a nonnegative result.
pub(crate) fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Option<f64> {
    if b <= a {
        return Some(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return None;
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let abs_tol = (rel_tol * whole.abs()).max(1e-300);

    let mut total = 0.0;
    let mut stack = vec![(a, b, fa, fm, fb, whole, abs_tol, 0u32)];
    while let Some((a, b, fa, fm, fb, whole, tol, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        if !(flm.is_finite() && frm.is_finite()) {
            return None;
        }
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let refined = left + right;
        if depth >= MAX_DEPTH || (refined - whole).abs() <= 15.0 * tol {
            total += refined;
        } else {
            stack.push((a, m, fa, flm, fm, left, 0.5 * tol, depth + 1));
            stack.push((m, b, fm, frm, fb, right, 0.5 * tol, depth + 1));
        }
    }
    Some(total)
}

/// Integrates `f` over `[lo, hi] ⊂ (0, ∞)` using the substitution `x = e^s`,
/// split into panels of unit width in `s`.
pub(crate) fn integrate_log_scaled(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> Option<f64> {
    if hi <= lo {
        return Some(0.0);
    }
    let (s0, s1) = (lo.ln(), hi.ln());
    let panels = ((s1 - s0).ceil() as usize).max(1);
    let width = (s1 - s0) / panels as f64;
    let g = |s: f64| {
        let x = s.exp();
        f(x) * x
    };
    let mut sum = 0.0;
    for i in 0..panels {
        let a = s0 + i as f64 * width;
        let b = if i + 1 == panels { s1 } else { a + width };
        sum += adaptive_simpson(&g, a, b, rel_tol)?;
    }
    Some(sum)
}
