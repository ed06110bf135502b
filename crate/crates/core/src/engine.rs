//! Deterministic propagation of the vibrational number distribution over
//! pump + sideband cycles.
//!
//! One cycle maps the number statistics through a column-stochastic kernel
//!
//! ```text
//! T(m|n) = stay(n) delta_{m,n} + up(n) R(m | n+1)
//! ```
//!
//! where `R` is the recoil kernel of the optical pumping stage (identity when
//! spontaneous recoil is neglected, in which case `T` is lower bidiagonal and
//! the cycle reduces to the two-term recurrence for the probabilities).
//! Recoil acts only on the up-branch: population that stayed behind was never
//! transferred to the pumped electronic state, so the pump laser does not
//! address it.
//!
//! The number basis is truncated at `n_max`; any probability transported past
//! the cutoff is accumulated in an explicit `leak` term and never silently
//! renormalized away.

use ndarray::parallel::prelude::*;
use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::rates::TransitionRates;
use crate::specfun::{dipole_average, displacement_prob};

/// Default bound on tolerated truncation leak during evolution.
pub const DEFAULT_LEAK_TOLERANCE: f64 = 1e-3;

/// Column-norm threshold at which the pump scattering series is truncated.
const PUMP_SERIES_TOLERANCE: f64 = 1e-12;

/// Branching ratios above this are handed to the direct linear solve; the
/// geometric series would need thousands of terms.
const PUMP_SERIES_MAX_P1: f64 = 0.99;

/// Probability weights over vibrational quantum numbers `0 ..= n_max`, with
/// explicit accounting of the weight lost past the truncation bound.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberDistribution {
    probs: Vec<f64>,
    leak: f64,
}

impl NumberDistribution {
    /// Point distribution at level `n` on a basis truncated at `n_max`.
    pub fn delta(n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::Domain(format!(
                "delta level {n} exceeds truncation bound {n_max}"
            )));
        }
        let mut probs = vec![0.0; n_max + 1];
        probs[n] = 1.0;
        Ok(Self { probs, leak: 0.0 })
    }

    /// Wrap explicit weights; any deficit from unit total becomes initial leak.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        for (n, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Domain(format!("probability at n = {n} is {p}")));
            }
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::Domain(format!(
                "probabilities sum to {total} > 1"
            )));
        }
        Ok(Self {
            probs,
            leak: (1.0 - total).max(0.0),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn leak(&self) -> f64 {
        self.leak
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// Total weight remaining on the truncated support.
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// First and second moments of a number distribution, taken over the
/// truncated support and normalized by the weight remaining there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    /// `variance / mean`; undefined for a distribution pinned at `n = 0`.
    pub relvar: Option<f64>,
    /// Weight of the support the moments were normalized with; the excluded
    /// leak is `1 - support_mass`.
    pub support_mass: f64,
}

/// Moments of the truncated support. The relative variance is reported only
/// when the mean is strictly positive.
pub fn moments(dist: &NumberDistribution) -> Result<Moments> {
    let total = dist.total();
    if total <= 0.0 {
        return Err(Error::EmptyDistribution);
    }
    Ok(moments_of(dist.probs(), total))
}

fn moments_of(probs: &[f64], total: f64) -> Moments {
    let mean = probs
        .iter()
        .enumerate()
        .map(|(n, &p)| n as f64 * p)
        .sum::<f64>()
        / total;
    // Two-pass central moment; immune to the cancellation of E[n^2] - E[n]^2.
    let variance = probs
        .iter()
        .enumerate()
        .map(|(n, &p)| {
            let d = n as f64 - mean;
            d * d * p
        })
        .sum::<f64>()
        / total;
    let relvar = if mean > 0.0 { Some(variance / mean) } else { None };
    Moments {
        mean,
        variance,
        relvar,
        support_mass: total,
    }
}

/// Per-cycle summary of the evolving distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRecord {
    pub cycle: usize,
    pub mean: f64,
    pub variance: f64,
    pub relvar: Option<f64>,
    pub argmax: usize,
    pub pmax: f64,
    pub leak: f64,
}

pub type MomentSeries = Vec<MomentRecord>;

fn moment_record(cycle: usize, probs: &[f64], leak: f64) -> MomentRecord {
    let total: f64 = probs.iter().sum();
    let (argmax, pmax) = probs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(ai, ap), (i, &p)| {
            if p > ap {
                (i, p)
            } else {
                (ai, ap)
            }
        });
    if total > 0.0 {
        let m = moments_of(probs, total);
        MomentRecord {
            cycle,
            mean: m.mean,
            variance: m.variance,
            relvar: m.relvar,
            argmax,
            pmax,
            leak,
        }
    } else {
        MomentRecord {
            cycle,
            mean: f64::NAN,
            variance: f64::NAN,
            relvar: None,
            argmax,
            pmax,
            leak,
        }
    }
}

/// Recoil branching of the optical pumping stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoilParams {
    /// Lamb–Dicke parameter of the decay back to the pumped state.
    pub eta1: f64,
    /// Lamb–Dicke parameter of the terminating decay.
    pub eta2: f64,
    /// Probability `gamma_1 / (gamma_1 + gamma_2)` of branching back and
    /// scattering again.
    pub branch_p1: f64,
}

/// What a recoil kernel describes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecoilKind {
    /// A single spontaneous emission of kick size `beta`.
    SingleEmission { beta: f64 },
    /// The full pump cascade: a geometric number of `eta1` emissions followed
    /// by one terminating `eta2` emission.
    PumpComposite(RecoilParams),
}

/// Column-stochastic transition matrix of a photon-recoil process over the
/// truncated number basis. Column deficits are truncation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoilKernel {
    matrix: Array2<f64>,
    kind: RecoilKind,
}

impl RecoilKernel {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> RecoilKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Mean quanta added by one application to level `n`,
    /// `sum_m (m - n) K(m|n)`. Meaningful for columns away from truncation.
    pub fn column_heating(&self, n: usize) -> f64 {
        self.matrix
            .column(n)
            .iter()
            .enumerate()
            .map(|(m, &k)| (m as f64 - n as f64) * k)
            .sum()
    }
}

/// Band beyond which displaced-Fock matrix elements are below 1e-9 of a
/// column's weight, with margin.
fn displacement_band(beta: f64) -> usize {
    (10.0 * (beta * beta + beta.abs())).ceil() as usize + 60
}

/// Recoil kernel of a single spontaneous emission with Lamb–Dicke parameter
/// `beta`, averaged over the dipole radiation pattern:
///
/// ```text
/// K(m|n) = integral ds w(s) |<m| exp(i s beta (a^+ + a)) |n>|^2
/// ```
///
/// The mean heating of each (untruncated) column is `0.4 beta^2` because the
/// dipole-pattern second moment is 2/5.
pub fn single_emission_kernel(beta: f64, n_max: usize) -> RecoilKernel {
    let dim = n_max + 1;
    let kind = RecoilKind::SingleEmission { beta };
    if beta == 0.0 {
        return RecoilKernel {
            matrix: Array2::eye(dim),
            kind,
        };
    }
    let band = displacement_band(beta);
    let mut matrix = Array2::zeros((dim, dim));
    // Columns are independent; the parallel build writes disjoint memory and
    // is bit-identical to the sequential one.
    matrix
        .axis_iter_mut(Axis(1))
        .into_par_iter()
        .enumerate()
        .for_each(|(n, mut column)| {
            let lo = n.saturating_sub(band);
            let hi = (n + band).min(n_max);
            for m in lo..=hi {
                column[m] = dipole_average(|s| displacement_prob(m, n, s * beta));
            }
        });
    RecoilKernel { matrix, kind }
}

fn max_column_sum(matrix: &Array2<f64>) -> f64 {
    matrix
        .sum_axis(Axis(0))
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v))
}

fn validate_branching(branch_p1: f64) -> Result<()> {
    if !branch_p1.is_finite() || !(0.0..1.0).contains(&branch_p1) {
        return Err(Error::NonConvergent(branch_p1));
    }
    Ok(())
}

/// Composite recoil kernel of one optical pumping stage.
///
/// The excited state branches back to the pumped level with probability `p1`
/// (kick `eta1`, then another scattering round) or terminates with
/// probability `p2 = 1 - p1` (kick `eta2`), giving the geometric series
///
/// ```text
/// R = sum_k p1^k p2 K(eta1)^k K(eta2) = p2 (I - p1 K(eta1))^{-1} K(eta2).
/// ```
///
/// Built by the truncated series for moderate `p1` and by the direct linear
/// solve when `p1` approaches 1; the two routes agree to 1e-9.
pub fn pump_kernel(params: RecoilParams, n_max: usize) -> Result<RecoilKernel> {
    validate_branching(params.branch_p1)?;
    if params.eta1 == 0.0 && params.eta2 == 0.0 {
        return Ok(RecoilKernel {
            matrix: Array2::eye(n_max + 1),
            kind: RecoilKind::PumpComposite(params),
        });
    }
    if params.branch_p1 <= PUMP_SERIES_MAX_P1 {
        pump_kernel_series(params, n_max)
    } else {
        pump_kernel_solve(params, n_max)
    }
}

fn pump_emission_kernels(params: RecoilParams, n_max: usize) -> (Array2<f64>, Array2<f64>) {
    let k1 = single_emission_kernel(params.eta1, n_max).matrix;
    let k2 = if params.eta2 == params.eta1 {
        k1.clone()
    } else {
        single_emission_kernel(params.eta2, n_max).matrix
    };
    (k1, k2)
}

/// Pump kernel by direct summation of the scattering series, truncated when
/// a term's largest column sum drops below 1e-12.
pub fn pump_kernel_series(params: RecoilParams, n_max: usize) -> Result<RecoilKernel> {
    validate_branching(params.branch_p1)?;
    let (k1, k2) = pump_emission_kernels(params, n_max);
    let p1 = params.branch_p1;
    let p2 = 1.0 - p1;
    let mut term = &k2 * p2;
    let mut acc = term.clone();
    if p1 > 0.0 {
        loop {
            term = k1.dot(&term) * p1;
            if max_column_sum(&term) < PUMP_SERIES_TOLERANCE {
                break;
            }
            acc += &term;
        }
    }
    Ok(RecoilKernel {
        matrix: acc,
        kind: RecoilKind::PumpComposite(params),
    })
}

/// Pump kernel by solving `(I - p1 K1) X = p2 K2` column-wise with a
/// partially pivoted LU factorization.
pub fn pump_kernel_solve(params: RecoilParams, n_max: usize) -> Result<RecoilKernel> {
    validate_branching(params.branch_p1)?;
    let (k1, k2) = pump_emission_kernels(params, n_max);
    let p1 = params.branch_p1;
    let p2 = 1.0 - p1;
    let dim = n_max + 1;
    let mut a = Array2::eye(dim);
    a.scaled_add(-p1, &k1);
    let b = &k2 * p2;
    let matrix = lu_solve_columns(a, b);
    Ok(RecoilKernel {
        matrix,
        kind: RecoilKind::PumpComposite(params),
    })
}

/// Solve `A X = B` for all columns of `B`. `A` is consumed by the in-place
/// factorization; row swaps are applied to `B` directly so no pivot vector
/// is kept.
fn lu_solve_columns(mut a: Array2<f64>, mut b: Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let cols = b.ncols();
    for k in 0..n {
        let mut pivot = k;
        let mut best = a[[k, k]].abs();
        for i in (k + 1)..n {
            let v = a[[i, k]].abs();
            if v > best {
                best = v;
                pivot = i;
            }
        }
        if pivot != k {
            for j in 0..n {
                a.swap([k, j], [pivot, j]);
            }
            for j in 0..cols {
                b.swap([k, j], [pivot, j]);
            }
        }
        let akk = a[[k, k]];
        for i in (k + 1)..n {
            let factor = a[[i, k]] / akk;
            if factor != 0.0 {
                a[[i, k]] = factor;
                for j in (k + 1)..n {
                    a[[i, j]] -= factor * a[[k, j]];
                }
            }
        }
    }
    // Forward substitution with the stored unit-lower factors.
    for k in 0..n {
        for i in (k + 1)..n {
            let factor = a[[i, k]];
            if factor != 0.0 {
                for j in 0..cols {
                    let upd = factor * b[[k, j]];
                    b[[i, j]] -= upd;
                }
            }
        }
    }
    // Back substitution.
    for k in (0..n).rev() {
        let akk = a[[k, k]];
        for j in 0..cols {
            b[[k, j]] /= akk;
        }
        for i in 0..k {
            let factor = a[[i, k]];
            if factor != 0.0 {
                for j in 0..cols {
                    let upd = factor * b[[k, j]];
                    b[[i, j]] -= upd;
                }
            }
        }
    }
    b
}

/// Column-stochastic transition operator for one full pump + sideband cycle.
#[derive(Debug, Clone)]
pub struct CycleKernel {
    matrix: Array2<f64>,
    rates: TransitionRates,
    recoil: Option<RecoilKernel>,
}

impl CycleKernel {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn rates(&self) -> &TransitionRates {
        &self.rates
    }

    pub fn recoil(&self) -> Option<&RecoilKernel> {
        self.recoil.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_max(&self) -> usize {
        self.dim() - 1
    }
}

/// Assemble the cycle kernel `T(m|n) = stay(n) delta_{m,n} + up(n) R(m|n+1)`.
///
/// Without recoil `T` is exactly lower bidiagonal, so a vanishing `up(n0)`
/// cuts the recurrence off at `n0` bit-exactly. The up-branch out of the top
/// level `n_max` leaves the basis and surfaces as leak during evolution.
pub fn cycle_kernel(rates: TransitionRates, recoil: Option<RecoilKernel>) -> Result<CycleKernel> {
    let dim = rates.len();
    if let Some(r) = &recoil {
        if r.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "rates cover n <= {} but recoil kernel has dimension {}",
                rates.n_max(),
                r.dim()
            )));
        }
    }
    let mut matrix = Array2::zeros((dim, dim));
    for n in 0..dim {
        matrix[[n, n]] += rates.stay()[n];
        let up = rates.up()[n];
        if up != 0.0 && n + 1 < dim {
            match &recoil {
                None => matrix[[n + 1, n]] += up,
                Some(r) => {
                    let source = r.matrix().column(n + 1);
                    let mut target = matrix.column_mut(n);
                    target.scaled_add(up, &source);
                }
            }
        }
    }
    Ok(CycleKernel {
        matrix,
        rates,
        recoil,
    })
}

/// Apply the cycle kernel `cycles` times, recording moments every cycle and
/// snapshots at the listed cycles (which must be sorted and within range).
///
/// Any column deficit of the kernel accumulates in the distribution's leak;
/// evolution aborts with [`Error::LeakExceeded`] once the leak passes
/// `leak_tolerance`.
pub fn evolve_recorded(
    p0: &NumberDistribution,
    kernel: &CycleKernel,
    cycles: usize,
    checkpoints: &[usize],
    leak_tolerance: f64,
) -> Result<(Vec<(usize, NumberDistribution)>, MomentSeries)> {
    if p0.probs.len() != kernel.dim() {
        return Err(Error::DimensionMismatch(format!(
            "distribution has {} levels but kernel has dimension {}",
            p0.probs.len(),
            kernel.dim()
        )));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "checkpoints must be strictly ascending".into(),
        ));
    }
    if checkpoints.last().is_some_and(|&last| last > cycles) {
        return Err(Error::Domain(format!(
            "checkpoint beyond the last cycle {cycles}"
        )));
    }

    let mut snapshots = Vec::new();
    let mut series = MomentSeries::with_capacity(cycles + 1);
    let mut probs = Array1::from(p0.probs.clone());
    let mut leak = p0.leak;

    let snapshot_of = |p: &Array1<f64>, leak: f64| NumberDistribution {
        probs: p.to_vec(),
        leak,
    };

    series.push(moment_record(0, probs.as_slice().unwrap(), leak));
    if checkpoints.first() == Some(&0) {
        snapshots.push((0, snapshot_of(&probs, leak)));
    }

    for cycle in 1..=cycles {
        let next = kernel.matrix.dot(&probs);
        // Column deficits make the total shrink; rounding can produce a
        // formally negative increment of order 1e-16, clamp it away so the
        // leak stays monotone.
        let lost = (probs.sum() - next.sum()).max(0.0);
        leak += lost;
        probs = next;
        if leak > leak_tolerance {
            return Err(Error::LeakExceeded {
                leak,
                tolerance: leak_tolerance,
                cycle,
            });
        }
        series.push(moment_record(cycle, probs.as_slice().unwrap(), leak));
        if checkpoints.binary_search(&cycle).is_ok() {
            snapshots.push((cycle, snapshot_of(&probs, leak)));
        }
    }
    Ok((snapshots, series))
}

/// Apply the cycle kernel `cycles` times with snapshots every
/// `checkpoint_every` cycles (0 = final state only) and the default leak
/// tolerance.
pub fn evolve(
    p0: &NumberDistribution,
    kernel: &CycleKernel,
    cycles: usize,
    checkpoint_every: usize,
) -> Result<(Vec<(usize, NumberDistribution)>, MomentSeries)> {
    let mut checkpoints = Vec::new();
    if checkpoint_every > 0 {
        checkpoints.extend((0..=cycles).step_by(checkpoint_every));
    }
    if checkpoints.last() != Some(&cycles) {
        checkpoints.push(cycles);
    }
    evolve_recorded(p0, kernel, cycles, &checkpoints, DEFAULT_LEAK_TOLERANCE)
}

/// Closed-form solution of the idealized half/half cycle recurrence:
/// each initial level `l` spreads into a binomial of mean `l + k/2`,
///
/// ```text
/// P_n(t_k) = sum_l C(k, n - l) (1/2)^k P_l(t_0).
/// ```
pub fn binomial_closed_form(p0: &NumberDistribution, k: usize) -> NumberDistribution {
    if k == 0 {
        return p0.clone();
    }
    let dim = p0.probs.len();
    // Binomial row C(k, j) / 2^k by the multiplicative recurrence.
    let mut row = vec![0.0; k + 1];
    row[0] = 0.5_f64.powi(k as i32);
    for j in 0..k {
        row[j + 1] = row[j] * (k - j) as f64 / (j + 1) as f64;
    }
    let mut probs = vec![0.0; dim];
    for (l, &weight) in p0.probs.iter().enumerate() {
        if weight == 0.0 {
            continue;
        }
        for (j, &r) in row.iter().enumerate() {
            if l + j >= dim {
                break;
            }
            probs[l + j] += weight * r;
        }
    }
    let total_in: f64 = p0.total();
    let total_out: f64 = probs.iter().sum();
    NumberDistribution {
        probs,
        leak: p0.leak + (total_in - total_out).max(0.0),
    }
}

/// Default truncation bound for an expected final mean occupation:
/// eight times the mean plus headroom.
pub fn default_n_max(expected_final_mean: f64) -> usize {
    (8.0 * expected_final_mean.max(0.0)).ceil() as usize + 50
}
