//! Special functions underlying the vibronic coupling of a trapped ion.
//!
//! The laser-ion coupling on the red vibrational sideband carries a
//! Franck–Condon-type nonlinearity
//!
//! ```text
//! f(n; eta) = L_n^(1)(eta^2) exp(-eta^2 / 2) / (n + 1)
//! ```
//!
//! where `eta` is the Lamb–Dicke parameter and `L_n^(1)` a generalized
//! Laguerre polynomial. This module evaluates the Laguerre polynomials, the
//! coupling profile over the number basis, displaced-Fock transition
//! probabilities for photon-recoil kicks, and angular averages over the
//! dipole radiation pattern `w(s) = (3/8)(1 + s^2)`.
//!
//! All functions here are pure and safe for concurrent use.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Degrees above this are rejected; nothing physical lives up there and the
/// O(n) recurrence would spin for seconds.
pub const MAX_LAGUERRE_DEGREE: usize = 1_000_000;

/// Generalized Laguerre polynomial `L_n^(alpha)(x)` for integer `alpha >= 0`
/// and `x >= 0`, by the ascending three-term recurrence
///
/// ```text
/// (k + 1) L_{k+1} = (2k + 1 + alpha - x) L_k - (k + alpha) L_{k-1}
/// ```
///
/// which is forward-stable on the positive real axis. At `x = 0` the
/// recurrence reproduces the binomial value `C(n + alpha, n)` exactly.
pub fn laguerre(n: usize, alpha: u32, x: f64) -> Result<f64> {
    if n > MAX_LAGUERRE_DEGREE {
        return Err(Error::Domain(format!(
            "laguerre degree {n} exceeds {MAX_LAGUERRE_DEGREE}"
        )));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "laguerre argument must be finite and >= 0, got {x}"
        )));
    }
    Ok(laguerre_raw(n, f64::from(alpha), x))
}

/// Unchecked recurrence core shared by the hot paths.
pub(crate) fn laguerre_raw(n: usize, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Nonlinear coupling function `f(n; eta)` of the sideband interaction.
///
/// Equals the diagonal number-basis matrix element of the normally ordered
/// coupling operator; in the Lamb–Dicke limit `eta -> 0` it is exactly 1 for
/// every `n`. Zeros of `f` in either argument break the laser-ion coupling
/// and define the nonlinear trapping states.
pub fn coupling_f(n: usize, eta: f64) -> f64 {
    let x = eta * eta;
    laguerre_raw(n, 1.0, x) * (-0.5 * x).exp() / (n as f64 + 1.0)
}

/// Tabulated coupling values `f(0; eta) .. f(n_max; eta)` for one Lamb–Dicke
/// parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingProfile {
    eta: f64,
    values: Vec<f64>,
}

impl CouplingProfile {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `f(n; eta)` for a tabulated level.
    pub fn value(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Tabulate the coupling profile in a single O(n_max) recurrence sweep.
pub fn tabulate_coupling(eta: f64, n_max: usize) -> CouplingProfile {
    let x = eta * eta;
    let damp = (-0.5 * x).exp();
    let mut values = Vec::with_capacity(n_max + 1);
    // L_k^(1)(x) carried through the recurrence; values[k] = damp * L_k / (k+1).
    let mut prev = 1.0;
    let mut cur = 2.0 - x;
    values.push(damp);
    if n_max >= 1 {
        values.push(damp * cur / 2.0);
    }
    for k in 1..n_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 2.0 - x) * cur - (kf + 1.0) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        values.push(damp * cur / (kf + 2.0));
    }
    CouplingProfile { eta, values }
}

/// Transition probability `|<m| exp(i beta (a^+ + a)) |n>|^2` between Fock
/// states under a momentum kick of size `beta`.
///
/// With `p = min(m, n)`, `q = max(m, n)`, `d = q - p` and `x = beta^2`:
///
/// ```text
/// P(m|n) = exp(-x) x^d (p!/q!) [L_p^(d)(x)]^2
/// ```
///
/// Symmetric in `(m, n)`; each row sums to 1 over `m` (unitarity) and the
/// mean number of quanta added is exactly `beta^2`.
pub fn displacement_prob(m: usize, n: usize, beta: f64) -> f64 {
    let x = beta * beta;
    if x == 0.0 {
        return if m == n { 1.0 } else { 0.0 };
    }
    let (p, q) = if m < n { (m, n) } else { (n, m) };
    // Split the prefactor into the square root so the (possibly huge)
    // Laguerre value is tamed before squaring.
    let mut root = (-0.5 * x).exp();
    for k in (p + 1)..=q {
        root *= (x / k as f64).sqrt();
    }
    if root == 0.0 {
        // Prefactor underflowed: the true probability is far below 1e-300.
        return 0.0;
    }
    let amp = root * laguerre_raw(p, (q - p) as f64, x);
    amp * amp
}

/// Angular weight of electric-dipole radiation projected on the motional
/// axis, `w(s) = (3/8)(1 + s^2)`, normalized on `[-1, 1]`.
pub fn dipole_weight(s: f64) -> f64 {
    0.375 * (1.0 + s * s)
}

const QUADRATURE_ORDER: usize = 32;

/// Average of `g` over the dipole radiation pattern:
/// `integral_{-1}^{1} w(s) g(s) ds` by 32-node Gauss–Legendre quadrature.
///
/// Exact (to rounding) for polynomial `g` up to degree 61; `w * g` is smooth
/// for every integrand used here, so the fixed order is ample.
pub fn dipole_average<G>(g: G) -> f64
where
    G: Fn(f64) -> f64,
{
    let (nodes, weights) = gauss_legendre_32();
    nodes
        .iter()
        .zip(weights.iter())
        .map(|(&s, &w)| w * dipole_weight(s) * g(s))
        .sum()
}

fn gauss_legendre_32() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| gauss_legendre_nodes(QUADRATURE_ORDER))
}

/// Legendre value and derivative at `x` by the standard recurrence.
fn legendre_value_deriv(order: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = x;
    for k in 2..=order {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * cur - (kf - 1.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    let deriv = order as f64 * (x * cur - prev) / (x * x - 1.0);
    (cur, deriv)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, Newton-refined from the
/// Chebyshev initial guess and mirrored so the rule is exactly symmetric.
fn gauss_legendre_nodes(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (value, d) = legendre_value_deriv(order, x);
            deriv = d;
            let step = value / deriv;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[i] = x;
        weights[i] = w;
        nodes[order - 1 - i] = -x;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}
