//! Independent oracles for the integration tests.
//!
//! Everything here recomputes reference values through routes that share no
//! code with the library: exact rational arithmetic for the Laguerre series,
//! the normally ordered operator series for the coupling function, and plain
//! brute-force scans.

use num::{BigInt, BigRational, ToPrimitive};

/// `C(n, k)` as an exact big integer, by the incremental product (each
/// intermediate value is itself a binomial, so the division is exact).
pub fn binomial_big(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let k = k.min(n - k);
    let mut acc = BigInt::from(1);
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `L_n^(alpha)(x)` summed term by term in exact rational arithmetic:
/// `sum_k (-1)^k C(n + alpha, n - k) x^k / k!`.
pub fn laguerre_exact_rational(n: u64, alpha: u64, x: BigRational) -> BigRational {
    let mut total = BigRational::from_integer(BigInt::from(0));
    let mut x_power = BigRational::from_integer(BigInt::from(1));
    let mut k_factorial = BigInt::from(1);
    for k in 0..=n {
        if k > 0 {
            x_power *= &x;
            k_factorial *= BigInt::from(k);
        }
        let coefficient = BigRational::new(binomial_big(n + alpha, n - k), k_factorial.clone());
        let term = coefficient * &x_power;
        if k % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// Same series evaluated straight to f64 for a float argument.
pub fn laguerre_exact_f64(n: u64, alpha: u64, num: i64, den: i64) -> f64 {
    let x = BigRational::new(BigInt::from(num), BigInt::from(den));
    laguerre_exact_rational(n, alpha, x)
        .to_f64()
        .expect("rational fits in f64")
}

/// Coupling function through the truncated normally ordered series
///
/// `f(n; eta) = exp(-eta^2/2) sum_k (-1)^k eta^(2k) / (k! (k+1)!) * n!/(n-k)!`
///
/// with the term ratio `t_{k+1} = t_k * (-eta^2) (n - k) / ((k+1)(k+2))`.
pub fn coupling_series(n: usize, eta: f64, max_terms: usize) -> f64 {
    let x = eta * eta;
    let mut term = 1.0;
    let mut total = 1.0;
    for k in 0..n.min(max_terms) {
        term *= -x * (n - k) as f64 / ((k + 1) as f64 * (k + 2) as f64);
        total += term;
    }
    total * (-0.5 * x).exp()
}

/// Brute-force scan for the discrete trapping numbers using the series
/// evaluation of the coupling (independent of the recurrence sweep):
/// levels where `f` changes sign between `n` and `n + 1`, taking the member
/// with the smaller magnitude.
pub fn trapping_numbers_by_series(eta: f64, n_max: usize) -> Vec<usize> {
    let f: Vec<f64> = (0..=n_max + 1)
        .map(|n| coupling_series(n, eta, n + 1))
        .collect();
    let mut numbers = Vec::new();
    for n in 0..=n_max {
        if f[n] * f[n + 1] <= 0.0 && !(f[n] == 0.0 && f[n + 1] == 0.0) {
            let pick = if f[n].abs() <= f[n + 1].abs() { n } else { n + 1 };
            if pick <= n_max && numbers.last() != Some(&pick) {
                numbers.push(pick);
            }
        }
    }
    numbers
}
