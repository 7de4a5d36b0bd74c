//! Measure both transmission matrices with a finite photon budget, design
//! the probe from the noisy estimates, and check how much of the promised
//! distance survives on the real system.

use helion::acquire::{acquisition_study, AcquisitionConfig, ProbeBasis};
use helion::scatter::{gen_system, LossModel, SystemConfig};

pub fn run() -> helion::Result<()> {
    let pair = gen_system(&SystemConfig {
        m_in: 16,
        n_out: 16,
        n_plane: 16,
        target_pixels: vec![5],
        target_transmittance: 0.2,
        target_phase: 0.4,
        loss_model: LossModel::GinibreSubunitary,
        seed: 21,
    })?;

    println!("{:>10} {:>14} {:>8} {:>10}", "n0", "basis", "eta_d", "|corr|");
    for n0 in [1e2, 1e4, 1e6, 1e8] {
        for basis in [ProbeBasis::Canonical, ProbeBasis::PlaneWaveLike] {
            let cfg = AcquisitionConfig { probe_basis: basis, ..AcquisitionConfig::new(n0, 17) };
            let report = acquisition_study(&pair, &cfg)?;
            println!(
                "{n0:>10.0e} {:>14} {:>8.4} {:>10.6}",
                format!("{basis:?}"),
                report.eta_d,
                report.fidelity[1].corr_magnitude
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> helion::Result<()> {
    run()
}
