//! Figure presets: canned parameter sets that regenerate the data behind the
//! standard plots.
//!
//! The trapping level is `n0 = 50` throughout. Presets that involve the
//! coupling-zero condition use the machine-precision root of
//! `L_50^(1)(eta^2)` (eta = 0.26827...), of which the commonly quoted 0.268
//! is the rounded value. Recoil runs use the pump-cascade parameters
//! `gamma1/gamma2 = 9.5/3.3` and `eta1 = eta2 = 0.142`.

use std::io::Write;
use std::path::Path;

use sideband::engine::{
    cycle_kernel, evolve_recorded, pump_kernel, NumberDistribution, RecoilParams,
};
use sideband::io as sbio;
use sideband::rates::{coherent_rates, incoherent_rates};
use sideband::specfun::tabulate_coupling;
use sideband::trapping::{eta_zeros_for_n, fig5_dataset, pulse_area_for_state};

const TRAPPING_LEVEL: usize = 50;
const RECOIL: RecoilParams = RecoilParams {
    eta1: 0.142,
    eta2: 0.142,
    branch_p1: 9.5 / (9.5 + 3.3),
};

fn write_to(path: &Path, body: impl FnOnce(&mut dyn Write) -> sideband::Result<()>) -> sideband::Result<()> {
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    body(&mut file)?;
    file.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Coherent rate dip from the pulse-area condition: eta = 0.1, area tuned to
/// trap level 50.
pub fn fig2a(out_dir: &Path) -> sideband::Result<()> {
    let profile = tabulate_coupling(0.1, 70);
    let area = pulse_area_for_state(TRAPPING_LEVEL, 0.1, 1)?;
    let rates = coherent_rates(&profile, area);
    write_to(&out_dir.join("fig2a_rates.csv"), |w| {
        sbio::write_rates_csv(w, &rates)
    })
}

/// Coherent rate dip from the coupling-zero condition: eta at the level-50
/// root, pulse area pi/2 (clear of low-lying complete Rabi cycles).
pub fn fig2b(out_dir: &Path) -> sideband::Result<()> {
    let eta = eta_zeros_for_n(TRAPPING_LEVEL, 1)?[0];
    let profile = tabulate_coupling(eta, 70);
    let rates = coherent_rates(&profile, std::f64::consts::FRAC_PI_2);
    write_to(&out_dir.join("fig2b_rates.csv"), |w| {
        sbio::write_rates_csv(w, &rates)
    })
}

/// Relative variance versus cycle number for the incoherent trapping state
/// at level 50, with spontaneous recoil, for G in {0.2, 1.0, 2.0}.
pub fn fig3(out_dir: &Path) -> sideband::Result<()> {
    let n_max = 350;
    let cycles = 400;
    let eta = eta_zeros_for_n(TRAPPING_LEVEL, 1)?[0];
    let profile = tabulate_coupling(eta, n_max);
    let pump = pump_kernel(RECOIL, n_max)?;
    let p0 = NumberDistribution::delta(0, n_max)?;
    for g in [0.2, 1.0, 2.0] {
        let kernel = cycle_kernel(incoherent_rates(&profile, g), Some(pump.clone()))?;
        let (_, series) = evolve_recorded(&p0, &kernel, cycles, &[cycles], 1e-3)?;
        write_to(&out_dir.join(format!("fig3_moments_g{g}.csv")), |w| {
            sbio::write_moments_csv(w, &series)
        })?;
    }
    Ok(())
}

/// Population snapshots at k = 0, 50, 100, 150, 200 cycles for the same
/// trapping state, for G in {1, 10, 1000}.
pub fn fig4(out_dir: &Path) -> sideband::Result<()> {
    let n_max = 350;
    let checkpoints = [0, 50, 100, 150, 200];
    let eta = eta_zeros_for_n(TRAPPING_LEVEL, 1)?[0];
    let profile = tabulate_coupling(eta, n_max);
    let pump = pump_kernel(RECOIL, n_max)?;
    let p0 = NumberDistribution::delta(0, n_max)?;
    for g in [1.0, 10.0, 1000.0] {
        let kernel = cycle_kernel(incoherent_rates(&profile, g), Some(pump.clone()))?;
        let (snapshots, _) = evolve_recorded(&p0, &kernel, 200, &checkpoints, 1e-3)?;
        write_to(&out_dir.join(format!("fig4_populations_g{g}.csv")), |w| {
            sbio::write_snapshots_csv(w, &snapshots)
        })?;
    }
    Ok(())
}

/// Table of (n0, eta) pairs satisfying the coupling-zero trapping condition,
/// n0 up to 100, eta up to 1.
pub fn fig5(out_dir: &Path) -> sideband::Result<()> {
    let table = fig5_dataset(100, 1.0);
    write_to(&out_dir.join("fig5_zeros.csv"), |w| {
        sbio::write_fig5_csv(w, &table)
    })
}
