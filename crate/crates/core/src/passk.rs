//! PASS@k estimators for single provers and for ensembles.

use alloc::vec::Vec;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PassError {
    #[error("successes {c} exceed attempts {n}")]
    TooManySuccesses { n: u64, c: u64 },
    #[error("k = {k} outside 1..={n}")]
    BadK { n: u64, k: u64 },
    #[error("k = {k} is not divisible by the number of variants {variants}")]
    NotDivisible { k: u64, variants: usize },
    #[error("no variants")]
    Empty,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `C(n, k)`, with `C(n, k) = 0` for `k > n`; `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral
        let num = (n - i) as u128;
        let den = (i + 1) as u128;
        let g = gcd(acc, den);
        acc = (acc / g).checked_mul(num / (den / g))?;
    }
    Some(acc)
}

/// Miss ratio `C(n - c, k) / C(n, k)` as a reduced fraction when it fits.
fn miss_fraction(n: u64, c: u64, k: u64) -> Option<(u128, u128)> {
    let num = binomial(n - c, k)?;
    let den = binomial(n, k)?;
    let g = gcd(num, den).max(1);
    Some((num / g, den / g))
}

/// `C(n - c, k) / C(n, k)` in floating point via the product form.
fn miss_product(n: u64, c: u64, k: u64) -> f64 {
    if n - c < k {
        return 0.0;
    }
    let mut p = 1.0;
    for i in (n - c + 1)..=n {
        p *= 1.0 - k as f64 / i as f64;
    }
    p
}

fn check(n: u64, c: u64, k: u64) -> Result<(), PassError> {
    if c > n {
        return Err(PassError::TooManySuccesses { n, c });
    }
    if k < 1 || k > n {
        return Err(PassError::BadK { n, k });
    }
    Ok(())
}

/// `1 - C(N - C, k) / C(N, k)`.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, PassError> {
    check(n, c, k)?;
    Ok(match miss_fraction(n, c, k) {
        Some((num, den)) => (den - num) as f64 / den as f64,
        None => 1.0 - miss_product(n, c, k),
    })
}

/// `1 - prod_i C(N_i - C_i, k/K) / C(N_i, k/K)` with `K` the number of pairs.
pub fn pass_ens_at_k(pairs: &[(u64, u64)], k: u64) -> Result<f64, PassError> {
    if pairs.is_empty() {
        return Err(PassError::Empty);
    }
    let variants = pairs.len();
    if !k.is_multiple_of(variants as u64) {
        return Err(PassError::NotDivisible { k, variants });
    }
    let j = k / variants as u64;
    for &(n, c) in pairs {
        check(n, c, j)?;
    }
    let mut exact: Option<(u128, u128)> = Some((1, 1));
    for &(n, c) in pairs {
        exact = exact.and_then(|(a, b)| {
            let (x, y) = miss_fraction(n, c, j)?;
            let (num, den) = (a.checked_mul(x)?, b.checked_mul(y)?);
            let g = gcd(num, den).max(1);
            Some((num / g, den / g))
        });
    }
    Ok(match exact {
        Some((num, den)) if den < (1u128 << 53) => (den - num) as f64 / den as f64,
        _ => {
            let miss: f64 = pairs.iter().map(|&(n, c)| miss_product(n, c, j)).product();
            1.0 - miss
        }
    })
}

/// Mean of [`pass_at_k`] over several problems.
pub fn mean_pass_at_k(records: &[(u64, u64)], k: u64) -> Result<f64, PassError> {
    let vals: Vec<f64> = records.iter().map(|&(n, c)| pass_at_k(n, c, k)).collect::<Result<_, _>>()?;
    Ok(vals.iter().sum::<f64>() / vals.len().max(1) as f64)
}
