//! Exact supremum of `(𝔾ₙ(u) − u)/d(u)` (or its absolute value) over an open
//! interval, where `𝔾ₙ` is the EDF of a sorted sample in (0, 1).
//!
//! The EDF is constant on `[u₍ᵢ₎, u₍ᵢ₊₁₎)`, so the sup is the largest of the
//! per-segment suprema of `σ(c − u)/d(u)` with `c` fixed and `σ = ±1`. Each
//! segment contributes its two endpoint values (the value at the jump and the
//! left limit at the next jump). Segments are further cut at the points where
//! `q` switches between increasing and decreasing. On each monotone piece one
//! of the two branches is monotone and settled by its endpoints; the other is
//! bounded from above and only searched (golden section from an 8-point seed
//! grid) when the bound beats the running maximum.

use crate::weights::WeightFunction;

use super::Sided;

/// Golden-section search stops once the bracket is narrower than this.
pub(crate) const SEARCH_WIDTH: f64 = 1e-10;
const SEED_POINTS: usize = 8;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Denominator<'a> {
    /// `q(u)` evaluated at the uniform-scale location.
    Weight(&'a WeightFunction),
    /// `q(𝔾ₙ(u))`, with the ratio set to 0 where `𝔾ₙ ∈ {0, 1}`.
    Hat(&'a WeightFunction),
    /// Constant 1 (Kolmogorov–Smirnov).
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SupOutcome {
    /// Supremum without the `√n` factor.
    pub value: f64,
    pub argmax: f64,
}

struct Best {
    value: f64,
    argmax: f64,
}

impl Best {
    #[inline]
    fn offer(&mut self, value: f64, at: f64) {
        if value > self.value {
            self.value = value;
            self.argmax = at;
        }
    }
}

/// `u` must be sorted and inside (0, 1); `0 ≤ a < b ≤ 1`.
pub(crate) fn weighted_sup(u: &[f64], denom: Denominator<'_>, sided: Sided, a: f64, b: f64) -> SupOutcome {
    debug_assert!(a < b);
    let n = u.len() as f64;
    let mut best = Best {
        value: f64::NEG_INFINITY,
        argmax: a,
    };

    let mut i = u.partition_point(|&x| x <= a);
    let mut lo = a;
    let mut count = i;
    let mut cache = QCache::new(denom);
    let pieces = match denom {
        Denominator::Weight(q) => q.monotone_pieces(),
        _ => Vec::new(),
    };
    loop {
        let hi = if i < u.len() && u[i] < b { u[i] } else { b };
        let c = count as f64 / n;
        segment(&mut best, &mut cache, denom, &pieces, sided, c, lo, hi);
        if hi >= b {
            break;
        }
        let mut j = i;
        while j < u.len() && u[j] == hi {
            j += 1;
        }
        count = j;
        i = j;
        lo = hi;
    }

    SupOutcome {
        value: best.value,
        argmax: best.argmax,
    }
}

/// Remembers the last `q(u)` evaluation; consecutive segments share an endpoint.
struct QCache<'a> {
    q: Option<&'a WeightFunction>,
    at: f64,
    val: f64,
}

impl<'a> QCache<'a> {
    fn new(denom: Denominator<'a>) -> Self {
        let q = match denom {
            Denominator::Weight(q) => Some(q),
            _ => None,
        };
        Self {
            q,
            at: f64::NAN,
            val: f64::NAN,
        }
    }

    #[inline]
    fn get(&mut self, u: f64) -> f64 {
        if u != self.at {
            self.at = u;
            self.val = self.q.map_or(1.0, |q| q.value(u));
        }
        self.val
    }
}

/// `σ(c − u)/q(u)` with the endpoint convention `0` at `u ∈ {0, 1}`.
#[inline]
fn ratio(q: &WeightFunction, sign: f64, c: f64, u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        sign * (c - u) / q.value(u)
    }
}

#[allow(clippy::too_many_arguments)]
fn segment(
    best: &mut Best,
    cache: &mut QCache<'_>,
    denom: Denominator<'_>,
    pieces: &[(f64, f64, bool)],
    sided: Sided,
    c: f64,
    lo: f64,
    hi: f64,
) {
    match denom {
        Denominator::Unit => linear_segment(best, sided, c, 1.0, lo, hi),
        Denominator::Hat(q) => {
            if c > 0.0 && c < 1.0 {
                linear_segment(best, sided, c, q.value(c), lo, hi);
            } else {
                best.offer(0.0, lo);
            }
        }
        Denominator::Weight(q) => weight_segment(best, cache, q, pieces, sided, c, lo, hi),
    }
}

/// Constant denominator: the numerator is linear, so the endpoints suffice.
fn linear_segment(best: &mut Best, sided: Sided, c: f64, d: f64, lo: f64, hi: f64) {
    best.offer((c - lo) / d, lo);
    if sided == Sided::Two {
        best.offer((hi - c) / d, hi);
        best.offer((lo - c) / d, lo);
        best.offer((c - hi) / d, hi);
    }
}

fn endpoint_value(cache: &mut QCache<'_>, sign: f64, c: f64, u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        sign * (c - u) / cache.get(u)
    }
}

#[allow(clippy::too_many_arguments)]
fn weight_segment(
    best: &mut Best,
    cache: &mut QCache<'_>,
    q: &WeightFunction,
    pieces: &[(f64, f64, bool)],
    sided: Sided,
    c: f64,
    lo: f64,
    hi: f64,
) {
    let signs: &[f64] = match sided {
        Sided::One => &[1.0],
        Sided::Two => &[1.0, -1.0],
    };
    for &sign in signs {
        best.offer(endpoint_value(cache, sign, c, lo), lo);
        best.offer(endpoint_value(cache, sign, c, hi), hi);
    }

    for &(p_lo, p_hi, increasing) in pieces {
        let (l, h) = (lo.max(p_lo), hi.min(p_hi));
        if h <= l {
            continue;
        }
        for &sign in signs {
            if l > lo {
                best.offer(ratio(q, sign, c, l), l);
            }
            refine_piece(best, q, sign, c, l, h, increasing, sided);
        }
    }
}

/// Handles one branch `σ(c − u)/q(u)` on a piece `[l, h]` where `q` is
/// monotone (increasing when `increasing`).
#[allow(clippy::too_many_arguments)]
fn refine_piece(best: &mut Best, q: &WeightFunction, sign: f64, c: f64, l: f64, h: f64, increasing: bool, sided: Sided) {
    // Sub-range where the numerator σ(c − u) is positive.
    let (pl, ph) = if sign > 0.0 { (l, h.min(c)) } else { (l.max(c), h) };
    if ph > pl {
        // Positive part: σ = +1 with q increasing and σ = −1 with q
        // decreasing are monotone ratios, settled by the endpoint candidates.
        let needs_search = (sign > 0.0) != increasing;
        if needs_search {
            // q is monotone on the piece, so its minimum sits at an end. At
            // u ∈ {0, 1} q vanishes and no finite bound is available.
            let bound = if pl <= 0.0 || ph >= 1.0 {
                f64::INFINITY
            } else {
                let qmin = if increasing { q.value(pl) } else { q.value(ph) };
                let num_max = if sign > 0.0 { c - pl } else { ph - c };
                num_max / qmin
            };
            if bound > best.value {
                search(best, q, sign, c, pl, ph);
            }
        }
    } else if sided == Sided::One && sign > 0.0 && best.value < 0.0 {
        // Entirely negative piece of a one-sided statistic; only relevant when
        // nothing nonnegative has been seen.
        let qmax = q.value(if increasing { h } else { l });
        let bound = -(l - c) / qmax;
        if bound > best.value {
            search(best, q, sign, c, l, h);
        }
    }
}

/// Golden-section maximization of `σ(c − u)/q(u)` on `[l, h]`, seeded from an
/// equispaced grid that includes both ends.
fn search(best: &mut Best, q: &WeightFunction, sign: f64, c: f64, l: f64, h: f64) {
    let f = |u: f64| ratio(q, sign, c, u);
    let step = (h - l) / (SEED_POINTS - 1) as f64;
    let mut top = (f(l), 0usize);
    for k in 1..SEED_POINTS {
        let u = if k == SEED_POINTS - 1 { h } else { l + k as f64 * step };
        let v = f(u);
        if v > top.0 {
            top = (v, k);
        }
    }
    let at = |k: usize| if k == SEED_POINTS - 1 { h } else { l + k as f64 * step };
    best.offer(top.0, at(top.1));

    let mut a = at(top.1.saturating_sub(1));
    let mut b = at((top.1 + 1).min(SEED_POINTS - 1));
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > SEARCH_WIDTH {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        if x1 >= x2 {
            break;
        }
    }
    best.offer(f1, x1);
    best.offer(f2, x2);
}
