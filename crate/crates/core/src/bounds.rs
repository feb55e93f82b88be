//! Exact checks of the β conditions that turn a certificate into an
//! exponential lower bound, and a crude estimate of |Λ|.
//!
//! With a certificate `(C, α)` for period bound `p`, any `β > 1` with
//!
//! ```text
//! α - β^(1-p) / (β - 1) >= β
//! ```
//!
//! gives `Ŝ_{n+1} >= β Ŝ_n` for the weighted count of square-free words
//! respecting any list assignment, hence at least `βⁿ` such words of
//! length `n`. For lists of size four the hand-made weights
//! `(1, √3 - 1)` lead to the condition `1 + √3 - 1/(β(β-1)) >= β`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::graph::TransitionGraph;
use crate::rational::{self, ratio, Rational};
use crate::weights::{find_violation, Certificate, Violation};

/// Lower and upper rational bounds on √3.
pub fn sqrt3_bounds() -> (Rational, Rational) {
    (ratio(17_320_508, 10_000_000), ratio(17_320_509, 10_000_000))
}

/// Largest denominator [`search_beta`] will scan.
pub const MAX_SEARCH_DENOMINATOR: u64 = 1_000_000;

fn require_beta(beta: &Rational) -> Result<()> {
    if *beta <= Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "beta must exceed 1, got {}",
            rational::exact(beta)
        )));
    }
    Ok(())
}

/// `α - 1/(β^(p-1)(β-1)) - β`; the main condition holds iff this is `>= 0`.
pub fn beta_margin(alpha: &Rational, p: usize, beta: &Rational) -> Result<Rational> {
    require_beta(beta)?;
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    let exponent = i32::try_from(p - 1)
        .map_err(|_| Error::InvalidParameter(format!("p = {p} is too large")))?;
    let tail = (beta.pow(exponent) * (beta - Rational::one())).recip();
    Ok(alpha - tail - beta)
}

pub fn check_beta_main(alpha: &Rational, p: usize, beta: &Rational) -> Result<bool> {
    Ok(!beta_margin(alpha, p, beta)?.is_negative())
}

/// Largest `β = k/m > 1` with `m = ⌈1/precision⌉` satisfying
/// [`check_beta_main`], or `None` when no grid point does.
///
/// The margin is strictly concave in β (the subtracted tail is a product of
/// positive, decreasing, convex functions), so the feasible grid points form
/// an interval: a ternary search finds the maximizer and a bisection finds
/// the right end of the interval.
pub fn search_beta(alpha: &Rational, p: usize, precision: &Rational) -> Result<Option<Rational>> {
    if !precision.is_positive() {
        return Err(Error::InvalidParameter("precision must be positive".into()));
    }
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    let m = precision.recip().ceil().to_integer();
    let m = m
        .to_u64()
        .filter(|&m| m <= MAX_SEARCH_DENOMINATOR)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "precision finer than 1/{MAX_SEARCH_DENOMINATOR} is not supported"
            ))
        })?;
    // β < α is necessary since the tail is positive.
    let k_max = (alpha * Rational::from_integer(m.into()))
        .ceil()
        .to_integer();
    let Some(k_max) = k_max.to_u64() else {
        return Ok(None);
    };
    if k_max <= m {
        return Ok(None);
    }
    let margin = |k: u64| beta_margin(alpha, p, &ratio(k, m)).expect("k > m");

    let (mut lo, mut hi) = (m + 1, k_max);
    while hi - lo > 2 {
        let third = (hi - lo) / 3;
        let (m1, m2) = (lo + third, hi - third);
        if margin(m1) < margin(m2) {
            lo = m1 + 1;
        } else {
            hi = m2;
        }
    }
    let best = (lo..=hi)
        .map(|k| (margin(k), k))
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(_, k)| k)
        .expect("non-empty range");
    if margin(best).is_negative() {
        return Ok(None);
    }
    // Largest feasible k in [best, k_max].
    let (mut good, mut bad) = (best, k_max + 1);
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if margin(mid).is_negative() {
            bad = mid;
        } else {
            good = mid;
        }
    }
    Ok(Some(ratio(good, m)))
}

/// Outcome of a condition involving √3 evaluated with rational bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// The bounds on √3 are too loose to decide.
    Indeterminate,
}

/// Decides `1 + √3 - 1/(β(β-1)) >= β` using the lower bound of √3 to prove
/// it and the upper bound to refute it.
pub fn beta_four_verdict(beta: &Rational) -> Result<Verdict> {
    require_beta(beta)?;
    let (low, high) = sqrt3_bounds();
    let rest = Rational::one() - (beta * (beta - Rational::one())).recip() - beta;
    Ok(if !(rest.clone() + low).is_negative() {
        Verdict::Holds
    } else if (rest + high).is_negative() {
        Verdict::Fails
    } else {
        Verdict::Indeterminate
    })
}

/// [`beta_four_verdict`] collapsed to a boolean; only a proof counts.
pub fn check_beta_four(beta: &Rational) -> Result<bool> {
    Ok(beta_four_verdict(beta)? == Verdict::Holds)
}

/// Number of square-free words ≥ `multiplicative_constant · βⁿ`, and by
/// submultiplicativity ≥ `βⁿ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthBound {
    pub beta: Rational,
    /// `C_ε / max_w C_w`.
    pub multiplicative_constant: Rational,
}

pub fn growth_bound(
    g: &TransitionGraph,
    cert: &Certificate,
    beta: &Rational,
) -> Result<GrowthBound> {
    match find_violation(g, cert)? {
        None => {}
        Some(Violation::ZeroRoot) => {
            return Err(Error::VerificationFailed("root weight is zero".into()))
        }
        Some(Violation::Inequality { vertex }) => {
            return Err(Error::VerificationFailed(format!(
                "inequality fails at vertex {vertex}"
            )))
        }
    }
    if !check_beta_main(&cert.alpha, cert.period, beta)? {
        return Err(Error::InvalidParameter(format!(
            "beta = {} does not satisfy the growth condition for alpha = {} and p = {}",
            rational::exact(beta),
            rational::exact(&cert.alpha),
            cert.period
        )));
    }
    let max = cert.weights.max().cloned().unwrap_or_else(BigUint::zero);
    Ok(GrowthBound {
        beta: beta.clone(),
        multiplicative_constant: rational::from_uints(cert.root_weight(), &max),
    })
}

/// How to treat the `n = 1` cells of the estimator, where `(k-1)^(n-2)`
/// has a negative exponent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CellConvention {
    /// Evaluate `(k-1)^(-1)` as `1/(k-1)`.
    #[default]
    Reciprocal,
    /// Drop the `n = 1` row.
    Strict,
}

/// `Σ_{n=1..p} Σ_{k=2..s} n (k-1)^(n-2) / (k-2)!`, an upper bound on the
/// number of prefixes of minimal squares of period at most `p` over `s`
/// letters. The `k = 1` column involves `(-1)!` and counts nothing.
pub fn estimate_lambda_size(p: usize, s: usize, cells: CellConvention) -> Result<Rational> {
    if p == 0 || s < 2 {
        return Err(Error::InvalidParameter(format!(
            "estimator needs p >= 1 and s >= 2, got p={p} s={s}"
        )));
    }
    let first_n = match cells {
        CellConvention::Reciprocal => 1,
        CellConvention::Strict => 2,
    };
    let mut total = Rational::zero();
    let mut factorial = BigInt::one(); // (k-2)!
    for k in 2..=s {
        if k > 2 {
            factorial *= k - 2;
        }
        let base = BigInt::from(k - 1);
        for n in first_n..=p {
            let term = if n == 1 {
                Rational::new(BigInt::one(), base.clone())
            } else {
                Rational::from_integer(base.pow(n as u32 - 2))
            };
            total += term * BigInt::from(n) / factorial.clone();
        }
    }
    Ok(total)
}
