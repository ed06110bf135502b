//! Stochastic single-ion trajectories through the same cycle model the
//! deterministic engine propagates, used as an independent cross-check.
//!
//! Each cycle draws a Bernoulli excitation from the transition rates; on
//! excitation the pump cascade scatters a geometric number of `eta1` recoil
//! kicks followed by one terminating `eta2` kick, every kick sampled from the
//! dipole radiation pattern and the displaced-Fock distribution directly —
//! none of the quadrature-built kernels enter the sampling path.
//!
//! Trajectory `i` owns the ChaCha stream `i` of the master seed, so ensembles
//! are reproducible and independent of scheduling; aggregation uses integer
//! accumulators only, which makes the results bit-identical for any thread
//! count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{MomentRecord, MomentSeries, NumberDistribution, RecoilParams};
use crate::error::{Error, Result};
use crate::rates::TransitionRates;

/// Hard bound on pump scatterings per cycle; guards pathological branching
/// ratios close to 1.
pub const SCATTER_CAP: u64 = 10_000;

/// Non-fatal events counted during sampling.
#[derive(Debug, Clone, Copy, Default)]
pub struct EventCounters {
    pub scatter_cap_hits: u64,
}

/// Draw an emission direction cosine from the dipole pattern
/// `w(s) = (3/8)(1 + s^2)` by inverting its CDF
/// `F(s) = 1/2 + (3/8)(s + s^3/3)`.
///
/// The cubic `s^3 + 3s = 8u - 4` is strictly monotone and solved in closed
/// form (Cardano), accurate to ~1e-15 over the whole interval.
pub fn sample_dipole_s(uniform: f64) -> f64 {
    let q = 8.0 * uniform - 4.0;
    let root = (0.25 * q * q + 1.0).sqrt();
    let s = (0.5 * q + root).cbrt() + (0.5 * q - root).cbrt();
    s.clamp(-1.0, 1.0)
}

/// Sample the level reached from `n` by a single momentum kick of size
/// `beta`, first drawing the emission direction from the dipole pattern and
/// then the displaced-Fock outcome.
///
/// The inverse-CDF walk visits levels by distance from `n` (where the mass
/// is concentrated) and is confined to `0 ..= n_cap`; a draw that falls
/// outside is a truncation hit and the trajectory has left the basis.
pub fn sample_recoil<R: Rng + ?Sized>(
    n: usize,
    beta: f64,
    n_cap: usize,
    rng: &mut R,
) -> Result<usize> {
    let s = sample_dipole_s(rng.random::<f64>());
    let kick = s * beta;
    let u = rng.random::<f64>();
    let mut cumulative = 0.0;
    for m in proximity_order(n, n_cap) {
        cumulative += crate::specfun::displacement_prob(m, n, kick);
        if u < cumulative {
            return Ok(m);
        }
    }
    Err(Error::TruncationHit { n_max: n_cap })
}

/// Levels `0 ..= cap` ordered by distance from `center`.
fn proximity_order(center: usize, cap: usize) -> impl Iterator<Item = usize> {
    let mut offset = 0usize;
    let mut pick_upper = false;
    std::iter::from_fn(move || loop {
        if offset > cap + center {
            return None;
        }
        if !pick_upper {
            pick_upper = true;
            let up = center + offset;
            if up <= cap {
                return Some(up);
            }
        } else {
            pick_upper = false;
            let here = offset;
            offset += 1;
            if here > 0 && here <= center {
                return Some(center - here);
            }
        }
    })
}

/// Number of scattering rounds before the pump cascade terminates,
/// geometric with continuation probability `p1`, capped at [`SCATTER_CAP`].
fn sample_scatter_count<R: Rng + ?Sized>(
    branch_p1: f64,
    rng: &mut R,
    counters: &mut EventCounters,
) -> u64 {
    if branch_p1 <= 0.0 {
        return 0;
    }
    // u in (0, 1]; k = floor(ln u / ln p1) has P(k) = p1^k (1 - p1).
    let u = 1.0 - rng.random::<f64>();
    let k = (u.ln() / branch_p1.ln()).floor();
    if !k.is_finite() || k >= SCATTER_CAP as f64 {
        counters.scatter_cap_hits += 1;
        return SCATTER_CAP;
    }
    k as u64
}

/// Advance one trajectory by one pump + sideband cycle.
///
/// Draw order per cycle: excitation Bernoulli; on excitation a geometric
/// scatter count, then one (direction, level) pair per recoil kick.
pub fn sample_cycle<R: Rng + ?Sized>(
    n: usize,
    rates: &TransitionRates,
    recoil: Option<&RecoilParams>,
    n_cap: usize,
    rng: &mut R,
    counters: &mut EventCounters,
) -> Result<usize> {
    let up = rates.up()[n];
    let excited = up > 0.0 && rng.random::<f64>() < up;
    if !excited {
        return Ok(n);
    }
    if n + 1 > n_cap {
        return Err(Error::TruncationHit { n_max: n_cap });
    }
    let mut level = n + 1;
    if let Some(params) = recoil {
        let scatterings = sample_scatter_count(params.branch_p1, rng, counters);
        for _ in 0..scatterings {
            level = sample_recoil(level, params.eta1, n_cap, rng)?;
        }
        level = sample_recoil(level, params.eta2, n_cap, rng)?;
    }
    Ok(level)
}

/// Ensemble description: trajectory count, RNG seed, and the cycles at which
/// empirical distributions are collected. The last checkpoint sets the run
/// length.
#[derive(Debug, Clone)]
pub struct TrajectoryConfig {
    pub n_trajectories: usize,
    pub master_seed: u64,
    pub checkpoints: Vec<usize>,
}

/// Counts of exceptional events over a finished ensemble.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct RunReport {
    pub n_trajectories: usize,
    pub cycles: usize,
    /// Trajectories that left the truncated basis (absorbed thereafter;
    /// they appear as leak in the empirical distributions).
    pub truncation_hits: u64,
    /// Cycles whose pump scatter count was clamped at [`SCATTER_CAP`].
    pub scatter_cap_hits: u64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Results of a trajectory ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleOutput {
    /// Empirical distribution at each requested checkpoint.
    pub checkpoints: Vec<(usize, NumberDistribution)>,
    /// Per-cycle empirical moments over the surviving trajectories.
    pub moments: MomentSeries,
    pub report: RunReport,
}

/// Integer accumulator merged across trajectories; addition is commutative,
/// so the reduction is independent of work order.
struct Accumulator {
    /// Histogram per cycle, flattened as `cycle * dim + n`.
    counts: Vec<u64>,
    /// Trajectories already absorbed (escaped) at each cycle.
    escaped: Vec<u64>,
    truncation_hits: u64,
    scatter_cap_hits: u64,
}

impl Accumulator {
    fn new(cycles: usize, dim: usize) -> Self {
        Self {
            counts: vec![0; (cycles + 1) * dim],
            escaped: vec![0; cycles + 1],
            truncation_hits: 0,
            scatter_cap_hits: 0,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        for (a, b) in self.escaped.iter_mut().zip(other.escaped) {
            *a += b;
        }
        self.truncation_hits += other.truncation_hits;
        self.scatter_cap_hits += other.scatter_cap_hits;
        self
    }
}

/// Draw an initial level from the starting distribution; `None` when the
/// draw lands in its (pre-existing) leak.
fn sample_initial<R: Rng + ?Sized>(p0: &NumberDistribution, rng: &mut R) -> Option<usize> {
    let u = rng.random::<f64>();
    let mut cumulative = 0.0;
    for (n, &p) in p0.probs().iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return Some(n);
        }
    }
    None
}

/// Run a trajectory ensemble against the given rates and recoil branching.
///
/// Results depend only on `(master_seed, n_trajectories)`, not on thread
/// count or scheduling. Trajectories that leave the basis are counted and
/// contribute to the empirical leak from that cycle on.
pub fn run_ensemble(
    p0: &NumberDistribution,
    rates: &TransitionRates,
    recoil: Option<&RecoilParams>,
    cfg: &TrajectoryConfig,
) -> Result<EnsembleOutput> {
    if cfg.n_trajectories == 0 {
        return Err(Error::Domain("ensemble needs at least one trajectory".into()));
    }
    if cfg.checkpoints.is_empty() {
        return Err(Error::Domain("ensemble needs at least one checkpoint".into()));
    }
    if cfg.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "checkpoints must be strictly ascending".into(),
        ));
    }
    if rates.len() != p0.probs().len() {
        return Err(Error::DimensionMismatch(format!(
            "rates cover {} levels but the distribution has {}",
            rates.len(),
            p0.probs().len()
        )));
    }
    if let Some(params) = recoil {
        if !(0.0..1.0).contains(&params.branch_p1) {
            return Err(Error::NonConvergent(params.branch_p1));
        }
    }

    let cycles = *cfg.checkpoints.last().unwrap();
    let n_cap = p0.n_max();
    let dim = n_cap + 1;

    let accumulate_one = |mut acc: Accumulator, index: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
        rng.set_stream(index as u64);
        let mut counters = EventCounters::default();
        let mut state = sample_initial(p0, &mut rng);
        if state.is_none() {
            acc.truncation_hits += 1;
        }
        for cycle in 0..=cycles {
            if cycle > 0 {
                if let Some(n) = state {
                    match sample_cycle(n, rates, recoil, n_cap, &mut rng, &mut counters) {
                        Ok(next) => state = Some(next),
                        Err(Error::TruncationHit { .. }) => {
                            state = None;
                            acc.truncation_hits += 1;
                        }
                        Err(other) => unreachable!("sampler returned {other}"),
                    }
                }
            }
            match state {
                Some(n) => acc.counts[cycle * dim + n] += 1,
                None => acc.escaped[cycle] += 1,
            }
        }
        acc.scatter_cap_hits += counters.scatter_cap_hits;
        acc
    };

    let acc = (0..cfg.n_trajectories)
        .into_par_iter()
        .fold(|| Accumulator::new(cycles, dim), accumulate_one)
        .reduce(|| Accumulator::new(cycles, dim), Accumulator::merge);

    let total = cfg.n_trajectories as f64;
    let mut checkpoints = Vec::with_capacity(cfg.checkpoints.len());
    for &cycle in &cfg.checkpoints {
        let probs: Vec<f64> = acc.counts[cycle * dim..(cycle + 1) * dim]
            .iter()
            .map(|&c| c as f64 / total)
            .collect();
        let leak = acc.escaped[cycle] as f64 / total;
        checkpoints.push((
            cycle,
            NumberDistribution::from_probs(probs).map(|d| with_leak(d, leak))?,
        ));
    }

    let moments = (0..=cycles)
        .map(|cycle| empirical_record(cycle, &acc.counts[cycle * dim..(cycle + 1) * dim], acc.escaped[cycle], total))
        .collect();

    Ok(EnsembleOutput {
        checkpoints,
        moments,
        report: RunReport {
            n_trajectories: cfg.n_trajectories,
            cycles,
            truncation_hits: acc.truncation_hits,
            scatter_cap_hits: acc.scatter_cap_hits,
        },
    })
}

fn with_leak(dist: NumberDistribution, leak: f64) -> NumberDistribution {
    // from_probs infers leak from the missing mass; for empirical counts the
    // two definitions coincide, (N - survivors) / N.
    debug_assert!((dist.leak() - leak).abs() < 1e-12);
    dist
}

fn empirical_record(cycle: usize, counts: &[u64], escaped: u64, total: f64) -> MomentRecord {
    let active: u64 = counts.iter().sum();
    let (argmax, cmax) = counts
        .iter()
        .enumerate()
        .fold((0usize, 0u64), |(ai, ac), (i, &c)| {
            if c > ac {
                (i, c)
            } else {
                (ai, ac)
            }
        });
    if active == 0 {
        return MomentRecord {
            cycle,
            mean: f64::NAN,
            variance: f64::NAN,
            relvar: None,
            argmax,
            pmax: 0.0,
            leak: escaped as f64 / total,
        };
    }
    // Exact integer sums; conversion to f64 happens once at the end.
    let sum_n: u64 = counts
        .iter()
        .enumerate()
        .map(|(n, &c)| n as u64 * c)
        .sum();
    let sum_n2: u128 = counts
        .iter()
        .enumerate()
        .map(|(n, &c)| (n as u128) * (n as u128) * c as u128)
        .sum();
    let active_f = active as f64;
    let mean = sum_n as f64 / active_f;
    let variance = (sum_n2 as f64 / active_f - mean * mean).max(0.0);
    MomentRecord {
        cycle,
        mean,
        variance,
        relvar: if mean > 0.0 { Some(variance / mean) } else { None },
        argmax,
        pmax: cmax as f64 / total,
        leak: escaped as f64 / total,
    }
}

/// Total-variation distance between two distributions on the same truncated
/// basis, treating the leaked mass as one extra outcome.
pub fn tv_distance(a: &NumberDistribution, b: &NumberDistribution) -> Result<f64> {
    if a.probs().len() != b.probs().len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions of size {} and {}",
            a.probs().len(),
            b.probs().len()
        )));
    }
    let sum: f64 = a
        .probs()
        .iter()
        .zip(b.probs())
        .map(|(&x, &y)| (x - y).abs())
        .sum();
    Ok(0.5 * (sum + (a.leak() - b.leak()).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{cycle_kernel, evolve, single_emission_kernel};
    use crate::rates::incoherent_rates;
    use crate::specfun::tabulate_coupling;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn dipole_inverse_cdf_special_points() {
        assert_eq!(sample_dipole_s(0.5), 0.0);
        let near_top = sample_dipole_s(1.0 - 1e-12);
        assert!(near_top <= 1.0 && 1.0 - near_top < 1e-8);
        let near_bottom = sample_dipole_s(1e-12);
        assert!(near_bottom >= -1.0 && near_bottom + 1.0 < 1e-8);
    }

    #[test]
    fn dipole_inverse_cdf_solves_cubic() {
        for &u in &[0.01, 0.2, 0.37, 0.5, 0.68, 0.9, 0.999] {
            let s = sample_dipole_s(u);
            let cdf = 0.5 + 0.375 * (s + s * s * s / 3.0);
            assert!((cdf - u).abs() < 1e-12, "u = {u}");
        }
    }

    #[test]
    fn dipole_sample_second_moment() {
        let mut r = rng(7);
        let samples = 1_000_000;
        let mean_sq: f64 = (0..samples)
            .map(|_| {
                let s = sample_dipole_s(r.random::<f64>());
                s * s
            })
            .sum::<f64>()
            / samples as f64;
        assert!((mean_sq - 0.4).abs() < 0.002, "E[s^2] = {mean_sq}");
    }

    #[test]
    fn zero_kick_recoil_keeps_level() {
        let mut r = rng(3);
        for _ in 0..100 {
            assert_eq!(sample_recoil(9, 0.0, 40, &mut r).unwrap(), 9);
        }
    }

    #[test]
    fn recoil_heating_matches_identity() {
        let beta = 0.3;
        let mut r = rng(11);
        let draws = 100_000;
        let n = 12;
        let mean_shift: f64 = (0..draws)
            .map(|_| sample_recoil(n, beta, 200, &mut r).unwrap() as f64 - n as f64)
            .sum::<f64>()
            / draws as f64;
        assert!(
            (mean_shift - 0.4 * beta * beta).abs() < 0.003,
            "E[m - n] = {mean_shift}"
        );
    }

    #[test]
    fn recoil_histogram_matches_kernel_column() {
        let beta = 0.25;
        let n = 15;
        let n_cap = 80;
        let kernel = single_emission_kernel(beta, n_cap);
        let mut counts = vec![0u64; n_cap + 1];
        let draws = 100_000;
        let mut r = rng(23);
        for _ in 0..draws {
            counts[sample_recoil(n, beta, n_cap, &mut r).unwrap()] += 1;
        }
        let tv: f64 = counts
            .iter()
            .enumerate()
            .map(|(m, &c)| (c as f64 / draws as f64 - kernel.matrix()[[m, n]]).abs())
            .sum::<f64>()
            * 0.5;
        assert!(tv < 0.01, "TV = {tv}");
    }

    #[test]
    fn truncation_hit_at_the_boundary() {
        let mut r = rng(5);
        // All mass of a strong kick from the top level lies outside a cap of 1.
        let mut hits = 0;
        for _ in 0..200 {
            if matches!(
                sample_recoil(1, 2.5, 1, &mut r),
                Err(Error::TruncationHit { .. })
            ) {
                hits += 1;
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn cycle_without_excitation_is_static() {
        let rates = incoherent_rates(&tabulate_coupling(0.1, 30), 0.0);
        let mut r = rng(1);
        let mut counters = EventCounters::default();
        for n in [0, 7, 30] {
            assert_eq!(
                sample_cycle(n, &rates, None, 30, &mut r, &mut counters).unwrap(),
                n
            );
        }
    }

    #[test]
    fn saturated_cycle_without_recoil_climbs_one() {
        // eta = 0, huge G: up = 1/2; force the excited branch by retrying.
        let rates = incoherent_rates(&tabulate_coupling(0.0, 30), 1e9);
        let mut r = rng(2);
        let mut counters = EventCounters::default();
        let mut climbed = 0;
        for _ in 0..400 {
            let next = sample_cycle(10, &rates, None, 30, &mut r, &mut counters).unwrap();
            assert!(next == 10 || next == 11);
            if next == 11 {
                climbed += 1;
            }
        }
        assert!(climbed > 120 && climbed < 280, "climbed {climbed}/400");
    }

    #[test]
    fn scatter_count_is_geometric() {
        let mut r = rng(17);
        let mut counters = EventCounters::default();
        let p1 = 9.5 / 12.8;
        let draws = 200_000;
        let mean: f64 = (0..draws)
            .map(|_| sample_scatter_count(p1, &mut r, &mut counters) as f64)
            .sum::<f64>()
            / draws as f64;
        let expected = p1 / (1.0 - p1);
        assert!(
            (mean - expected).abs() < 0.03,
            "E[k] = {mean} vs {expected}"
        );
        assert_eq!(counters.scatter_cap_hits, 0);
    }

    #[test]
    fn scatter_count_cap_engages() {
        let mut r = rng(19);
        let mut counters = EventCounters::default();
        let k = sample_scatter_count(1.0 - 1e-16, &mut r, &mut counters);
        assert_eq!(k, SCATTER_CAP);
        assert_eq!(counters.scatter_cap_hits, 1);
    }

    #[test]
    fn ensemble_is_reproducible_and_thread_independent() {
        let n_max = 60;
        let p0 = NumberDistribution::delta(0, n_max).unwrap();
        let rates = incoherent_rates(&tabulate_coupling(0.25, n_max), 5.0);
        let recoil = RecoilParams {
            eta1: 0.142,
            eta2: 0.142,
            branch_p1: 9.5 / 12.8,
        };
        let cfg = TrajectoryConfig {
            n_trajectories: 400,
            master_seed: 99,
            checkpoints: vec![10, 25],
        };
        let a = run_ensemble(&p0, &rates, Some(&recoil), &cfg).unwrap();
        let b = run_ensemble(&p0, &rates, Some(&recoil), &cfg).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_ensemble(&p0, &rates, Some(&recoil), &cfg).unwrap());
        for (x, y) in [(&a, &b), (&a, &single)] {
            assert_eq!(x.report, y.report);
            for ((ca, da), (cb, db)) in x.checkpoints.iter().zip(&y.checkpoints) {
                assert_eq!(ca, cb);
                assert_eq!(da.probs(), db.probs());
                assert_eq!(da.leak(), db.leak());
            }
        }
    }

    #[test]
    fn single_trajectory_is_deterministic() {
        let n_max = 40;
        let p0 = NumberDistribution::delta(0, n_max).unwrap();
        let rates = incoherent_rates(&tabulate_coupling(0.1, n_max), 2.0);
        let cfg = TrajectoryConfig {
            n_trajectories: 1,
            master_seed: 4242,
            checkpoints: vec![30],
        };
        let a = run_ensemble(&p0, &rates, None, &cfg).unwrap();
        let b = run_ensemble(&p0, &rates, None, &cfg).unwrap();
        assert_eq!(a.checkpoints[0].1.probs(), b.checkpoints[0].1.probs());
    }

    #[test]
    fn one_cycle_ensemble_matches_kernel_column() {
        let n_max = 60;
        let start = 12;
        let recoil = RecoilParams {
            eta1: 0.142,
            eta2: 0.142,
            branch_p1: 9.5 / 12.8,
        };
        let rates = incoherent_rates(&tabulate_coupling(0.2, n_max), 4.0);
        let kernel =
            cycle_kernel(rates.clone(), Some(crate::engine::pump_kernel(recoil, n_max).unwrap()))
                .unwrap();
        let p0 = NumberDistribution::delta(start, n_max).unwrap();
        let cfg = TrajectoryConfig {
            n_trajectories: 50_000,
            master_seed: 314,
            checkpoints: vec![1],
        };
        let ensemble = run_ensemble(&p0, &rates, Some(&recoil), &cfg).unwrap();
        let empirical = &ensemble.checkpoints[0].1;
        let tv: f64 = 0.5
            * (0..=n_max)
                .map(|m| (empirical.probs()[m] - kernel.matrix()[[m, start]]).abs())
                .sum::<f64>();
        assert!(tv < 0.01, "one-cycle TV = {tv}");
    }

    #[test]
    fn ensemble_matches_engine_within_multinomial_error() {
        let n_max = 80;
        let p0 = NumberDistribution::delta(0, n_max).unwrap();
        let rates = incoherent_rates(&tabulate_coupling(0.2, n_max), 3.0);
        let n_trajectories = 4000;
        let cfg = TrajectoryConfig {
            n_trajectories,
            master_seed: 2024,
            checkpoints: vec![40],
        };
        let ensemble = run_ensemble(&p0, &rates, None, &cfg).unwrap();
        let kernel = cycle_kernel(rates, None).unwrap();
        let (snapshots, _) = evolve(&p0, &kernel, 40, 0).unwrap();
        let engine_dist = &snapshots.last().unwrap().1;
        let tv = tv_distance(&ensemble.checkpoints[0].1, engine_dist).unwrap();
        let bound = 3.0 * ((n_max as f64) / n_trajectories as f64).sqrt();
        assert!(tv < bound, "TV = {tv}, bound = {bound}");
    }

    #[test]
    fn relative_variance_reaches_half_shot_noise() {
        let n_max = 140;
        let p0 = NumberDistribution::delta(0, n_max).unwrap();
        // Far from any trapping number: eta tiny, saturated drive.
        let rates = incoherent_rates(&tabulate_coupling(0.02, n_max), 1e5);
        let cfg = TrajectoryConfig {
            n_trajectories: 30_000,
            master_seed: 7,
            checkpoints: vec![100],
        };
        let ensemble = run_ensemble(&p0, &rates, None, &cfg).unwrap();
        let record = ensemble.moments.last().unwrap();
        let relvar = record.relvar.unwrap();
        assert!((relvar - 0.5).abs() < 0.01, "relvar = {relvar}");
        assert_eq!(ensemble.report.truncation_hits, 0);
    }

    #[test]
    fn tv_distance_basics() {
        let a = NumberDistribution::delta(0, 3).unwrap();
        let b = NumberDistribution::delta(2, 3).unwrap();
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
        let c = NumberDistribution::delta(0, 9).unwrap();
        assert!(tv_distance(&a, &c).is_err());
    }
}
