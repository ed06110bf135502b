//! Trapping-state conditions.
//!
//! A vibrational level `n0` is a trapping state when the excitation rate out
//! of it vanishes. Two distinct mechanisms produce this:
//!
//! * **Pulse-area trapping** (micro-maser type): the sideband pulse area is
//!   tuned so the level performs complete Rabi cycles,
//!   `area * f(n0; eta) * sqrt(n0 + 1) = 2 pi m`.
//! * **Coupling-zero trapping**: the Lamb–Dicke parameter sits on a zero of
//!   the coupling nonlinearity, `f(n0; eta) = 0`, equivalently
//!   `L_{n0}^(1)(eta^2) = 0`. This condition survives dephasing and is the
//!   robust mechanism of interest.
//!
//! Roots of `L_{n0}^(1)` are bracketed by a sign scan in `eta^2` (grid step:
//! one fiftieth of the smallest-root estimate from the Bessel asymptotics,
//! comfortably below the root spacing for degrees up to ~10^3) and refined by
//! bisection until the bracket collapses to machine resolution.

use crate::error::{Error, Result};
use crate::specfun::{coupling_f, laguerre_raw, tabulate_coupling};

/// First positive zero of the Bessel function J1; the smallest root of
/// `L_n^(1)(x)` approaches `j11^2 / (4n + 4)` for large `n`.
pub const FIRST_BESSEL_J1_ZERO: f64 = 3.831_705_970_207_512;

/// Couplings below this magnitude are treated as degenerate when solving the
/// pulse-area condition.
pub const DEGENERATE_COUPLING_LIMIT: f64 = 1e-8;

/// Which of the two trapping mechanisms a solution satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrappingKind {
    PulseArea,
    CouplingZero,
}

/// A solved trapping condition for one vibrational level.
#[derive(Debug, Clone)]
pub struct TrappingSolution {
    pub n0: usize,
    pub eta: f64,
    pub kind: TrappingKind,
    /// Sideband pulse area (radians) for pulse-area solutions.
    pub pulse_area: Option<f64>,
    /// `|f(n0; eta)|` for coupling zeros, `|sin(area f sqrt(n0+1) / 2)|` for
    /// pulse-area solutions.
    pub residual: f64,
}

/// One `(n0, eta)` pair satisfying the coupling-zero condition, tagged with
/// the index of the root in ascending order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingZeroEntry {
    pub n0: usize,
    pub eta: f64,
    pub root_index: usize,
}

/// Pulse area `|Omega_s| tau_s = 2 pi m / (f(n0; eta) sqrt(n0 + 1))` that
/// makes `n0` a micro-maser-type trapping state.
///
/// Fails with [`Error::DegenerateCoupling`] when `|f(n0; eta)|` is below
/// [`DEGENERATE_COUPLING_LIMIT`]: the level is then already a coupling-zero
/// trapping state and the pulse-area condition is singular.
pub fn pulse_area_for_state(n0: usize, eta: f64, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("pulse-area multiple m must be >= 1".into()));
    }
    let coupling = coupling_f(n0, eta);
    if coupling.abs() <= DEGENERATE_COUPLING_LIMIT {
        return Err(Error::DegenerateCoupling {
            n0,
            eta,
            coupling,
            limit: DEGENERATE_COUPLING_LIMIT,
        });
    }
    Ok(2.0 * std::f64::consts::PI * f64::from(m) / (coupling.abs() * ((n0 + 1) as f64).sqrt()))
}

/// Solve the pulse-area condition and report it with its residual.
pub fn solve_pulse_area(n0: usize, eta: f64, m: u32) -> Result<TrappingSolution> {
    let area = pulse_area_for_state(n0, eta, m)?;
    let arg = 0.5 * area * coupling_f(n0, eta) * ((n0 + 1) as f64).sqrt();
    Ok(TrappingSolution {
        n0,
        eta,
        kind: TrappingKind::PulseArea,
        pulse_area: Some(area),
        residual: arg.sin().abs(),
    })
}

/// Solve the coupling-zero condition for the root of the given index
/// (0 = smallest eta).
pub fn solve_coupling_zero(n0: usize, root_index: usize) -> Result<TrappingSolution> {
    let roots = eta_zeros_for_n(n0, root_index + 1)?;
    let eta = roots[root_index];
    Ok(TrappingSolution {
        n0,
        eta,
        kind: TrappingKind::CouplingZero,
        pulse_area: None,
        residual: coupling_f(n0, eta).abs(),
    })
}

enum RootLimit {
    Count(usize),
    Ceiling(f64),
}

/// The `count` smallest Lamb–Dicke parameters at which `f(n0; eta) = 0`,
/// ascending. `L_{n0}^(1)` has exactly `n0` positive roots, so
/// `count <= n0` is required; `n0 = 0` has none.
pub fn eta_zeros_for_n(n0: usize, count: usize) -> Result<Vec<f64>> {
    if n0 == 0 {
        return Err(Error::NoZeros);
    }
    if count == 0 || count > n0 {
        return Err(Error::Domain(format!(
            "requested {count} roots; L_{n0}^(1) has exactly {n0} positive roots"
        )));
    }
    Ok(laguerre1_roots(n0, RootLimit::Count(count)))
}

/// All coupling zeros of level `n0` with `eta` at most `eta_ceiling`,
/// ascending. Empty when even the smallest root lies above the ceiling.
pub fn eta_zeros_below(n0: usize, eta_ceiling: f64) -> Result<Vec<f64>> {
    if n0 == 0 {
        return Err(Error::NoZeros);
    }
    Ok(laguerre1_roots(n0, RootLimit::Ceiling(eta_ceiling)))
}

fn laguerre1_roots(n0: usize, limit: RootLimit) -> Vec<f64> {
    let eval = |x: f64| laguerre_raw(n0, 1.0, x);
    // Grid resolution tied to the smallest-root scale.
    let smallest_estimate = FIRST_BESSEL_J1_ZERO.powi(2) / (4.0 * n0 as f64 + 4.0);
    let step = smallest_estimate / 50.0;
    // All n0 roots lie below the upper edge of the oscillatory region.
    let hard_ceiling = 4.0 * n0 as f64 + 6.0;
    let x_ceiling = match limit {
        RootLimit::Count(_) => hard_ceiling,
        RootLimit::Ceiling(eta) => (eta * eta).min(hard_ceiling),
    };
    let want = match limit {
        RootLimit::Count(c) => c,
        RootLimit::Ceiling(_) => n0,
    };

    let mut roots = Vec::new();
    let mut x_prev = 0.0;
    let mut f_prev = eval(0.0);
    let mut i: u64 = 1;
    loop {
        let x = i as f64 * step;
        if x > x_ceiling + step {
            break;
        }
        let f = eval(x);
        if f == 0.0 {
            roots.push(x.sqrt());
        } else if f_prev * f < 0.0 {
            let x_root = bisect_root(&eval, x_prev, x);
            roots.push(x_root.sqrt());
        }
        if roots.len() >= want {
            break;
        }
        x_prev = x;
        f_prev = f;
        i += 1;
    }
    if let RootLimit::Ceiling(eta) = limit {
        roots.retain(|&r| r <= eta);
    }
    roots
}

/// Bisection on a bracketing interval, run until the midpoint can no longer
/// be distinguished from the endpoints in f64.
fn bisect_root<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
}

/// Discrete trapping numbers at a fixed Lamb–Dicke parameter: every level
/// `n <= n_max` where the coupling changes sign between `n` and `n + 1`,
/// taking from each sign-change pair the member with the smaller `|f|`
/// (exact zeros almost never fall on an integer).
pub fn trapping_numbers_for_eta(eta: f64, n_max: usize) -> Vec<usize> {
    let profile = tabulate_coupling(eta, n_max + 1);
    let mut numbers: Vec<usize> = Vec::new();
    for n in 0..=n_max {
        let a = profile.value(n);
        let b = profile.value(n + 1);
        if a * b <= 0.0 && !(a == 0.0 && b == 0.0) {
            let pick = if a.abs() <= b.abs() { n } else { n + 1 };
            // A chosen member past the truncation bound is dropped; its pair
            // will reappear once n_max is extended.
            if pick <= n_max && numbers.last() != Some(&pick) {
                numbers.push(pick);
            }
        }
    }
    numbers
}

/// Flat table of coupling-zero trapping conditions: for every
/// `n0 in [1, n0_max]`, all roots with `eta <= eta_ceiling`, ascending.
pub fn fig5_dataset(n0_max: usize, eta_ceiling: f64) -> Vec<CouplingZeroEntry> {
    let mut table = Vec::new();
    for n0 in 1..=n0_max {
        let roots = laguerre1_roots(n0, RootLimit::Ceiling(eta_ceiling));
        for (root_index, eta) in roots.into_iter().enumerate() {
            table.push(CouplingZeroEntry {
                n0,
                eta,
                root_index,
            });
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::laguerre;

    #[test]
    fn pulse_area_reproduces_fig2_condition() {
        let area = pulse_area_for_state(50, 0.1, 1).unwrap();
        assert!((area - 1.149).abs() < 0.001, "area = {area}");
    }

    #[test]
    fn pulse_area_in_lamb_dicke_ground_state() {
        let area = pulse_area_for_state(0, 0.0, 1).unwrap();
        assert!((area - 2.0 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn pulse_area_degenerate_at_coupling_zero() {
        let eta = eta_zeros_for_n(50, 1).unwrap()[0];
        match pulse_area_for_state(50, eta, 1) {
            Err(Error::DegenerateCoupling { n0, .. }) => assert_eq!(n0, 50),
            other => panic!("expected DegenerateCoupling, got {other:?}"),
        }
    }

    #[test]
    fn pulse_area_solution_residual_vanishes() {
        let solution = solve_pulse_area(50, 0.1, 1).unwrap();
        assert!(solution.residual < 1e-12);
        let area = solution.pulse_area.unwrap();
        let arg = area * coupling_f(50, 0.1) * 51.0_f64.sqrt();
        let nearest = (arg / (2.0 * std::f64::consts::PI)).round() * 2.0 * std::f64::consts::PI;
        assert!((arg - nearest).abs() < 1e-9);
    }

    #[test]
    fn first_root_of_level_one_is_sqrt_two() {
        let roots = eta_zeros_for_n(1, 1).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn first_root_of_level_fifty() {
        let roots = eta_zeros_for_n(50, 1).unwrap();
        assert!((roots[0] - 0.268).abs() < 0.001, "eta = {}", roots[0]);
    }

    #[test]
    fn level_two_roots_match_quadratic() {
        // L_2^(1)(x) = 3 - 3x + x^2/2 has roots x = 3 -+ sqrt(3).
        let roots = eta_zeros_for_n(2, 2).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - (3.0 - 3.0_f64.sqrt()).sqrt()).abs() < 1e-12);
        assert!((roots[1] - (3.0 + 3.0_f64.sqrt()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn root_count_and_simplicity() {
        for n0 in [3, 8, 20] {
            let roots = eta_zeros_for_n(n0, n0).unwrap();
            assert_eq!(roots.len(), n0, "L_{n0}^(1) must have {n0} roots");
            for window in roots.windows(2) {
                assert!(window[0] < window[1]);
            }
            // Simple roots: the polynomial changes sign across each.
            for &eta in &roots {
                let x = eta * eta;
                let h = (1e-6 * x).max(1e-9);
                let left = laguerre_raw(n0, 1.0, x - h);
                let right = laguerre_raw(n0, 1.0, x + h);
                assert!(left * right < 0.0, "no sign change at eta = {eta}");
            }
        }
    }

    #[test]
    fn roots_annihilate_the_polynomial() {
        for n0 in [1, 2, 10, 50] {
            for eta in eta_zeros_for_n(n0, n0.min(3)).unwrap() {
                let residual = laguerre(n0, 1, eta * eta).unwrap().abs();
                let scale = (n0 + 1) as f64;
                assert!(residual < 1e-8 * scale, "residual {residual} at n0 = {n0}");
            }
        }
    }

    #[test]
    fn smallest_root_tracks_bessel_asymptotics() {
        for n0 in [20, 35, 50, 80, 120] {
            let eta = eta_zeros_for_n(n0, 1).unwrap()[0];
            let estimate = FIRST_BESSEL_J1_ZERO.powi(2) / (4.0 * n0 as f64 + 4.0);
            let rel = ((eta * eta - estimate) / estimate).abs();
            assert!(rel < 0.05, "n0 = {n0}: relative deviation {rel}");
        }
    }

    #[test]
    fn rejects_invalid_root_requests() {
        assert!(matches!(eta_zeros_for_n(0, 1), Err(Error::NoZeros)));
        assert!(eta_zeros_for_n(3, 4).is_err());
        assert!(eta_zeros_for_n(3, 0).is_err());
    }

    #[test]
    fn trapping_numbers_at_fig2_eta() {
        assert_eq!(trapping_numbers_for_eta(0.268, 60), vec![50]);
    }

    #[test]
    fn no_trapping_numbers_for_tiny_eta() {
        assert!(trapping_numbers_for_eta(0.05, 100).is_empty());
    }

    #[test]
    fn fig5_contains_level_one_with_raised_ceiling() {
        let table = fig5_dataset(1, 1.5);
        assert_eq!(table.len(), 1);
        assert_eq!(table[0].n0, 1);
        assert_eq!(table[0].root_index, 0);
        assert!((table[0].eta - std::f64::consts::SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn fig5_contains_fig2_pair() {
        let table = fig5_dataset(60, 1.0);
        assert!(table
            .iter()
            .any(|e| e.n0 == 50 && e.root_index == 0 && (e.eta - 0.268).abs() < 0.001));
    }

    #[test]
    fn fig5_first_roots_decrease_with_level() {
        let table = fig5_dataset(100, 1.5);
        let mut previous = f64::INFINITY;
        for n0 in 1..=100 {
            let first = table
                .iter()
                .find(|e| e.n0 == n0 && e.root_index == 0)
                .expect("every level has a first root below 1.5 for n0 >= 1")
                .eta;
            assert!(first < previous, "first root not decreasing at n0 = {n0}");
            previous = first;
        }
    }

    #[test]
    fn coupling_zero_solution_metadata() {
        let solution = solve_coupling_zero(50, 0).unwrap();
        assert_eq!(solution.kind, TrappingKind::CouplingZero);
        assert!(solution.pulse_area.is_none());
        assert!(solution.residual < 1e-10 * 51.0);
    }
}
