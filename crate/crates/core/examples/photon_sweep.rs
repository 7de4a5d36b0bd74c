//! Error rate against photon number for the optimal and the average probe.
//! On a log scale both decay linearly; the ratio of slopes is the
//! eigenvalue enhancement.

use helion::discrim::{average_state, build_discrimination_operator, optimal_state, spectrum};
use helion::receiver::{fit_decay_constant, photon_sweep, MeanStrategy, PhotonGrid, SweepProbe, TrialConfig};
use helion::scatter::{gen_system, LossModel, SystemConfig};

pub fn run() -> helion::Result<()> {
    let pair = gen_system(&SystemConfig {
        m_in: 64,
        n_out: 64,
        n_plane: 64,
        target_pixels: vec![10],
        target_transmittance: 0.0,
        target_phase: 0.0,
        loss_model: LossModel::UnitaryEmbed,
        seed: 8,
    })?;
    let d12 = build_discrimination_operator(&pair);
    let spec = spectrum(&d12)?;
    let probes = vec![
        SweepProbe { label: "optimal".into(), state: optimal_state(&spec, 0.0)? },
        SweepProbe { label: "average".into(), state: average_state(&spec, 0.0)? },
    ];
    let grid = PhotonGrid::Exposure(vec![1.0, 2.0, 3.0, 4.0, 6.0, 8.0]);
    let rows = photon_sweep(&pair, &d12, &probes, &grid, &TrialConfig::new(4000, MeanStrategy::OracleMeans, 1))?;

    println!("{:>8} {:>12} {:>10} {:>10} {:>10}", "state", "n", "n d^2", "P_G", "observed");
    for r in &rows {
        println!(
            "{:>8} {:>12.4e} {:>10.3} {:>10.5} {:>10.5}",
            r.label,
            r.photons,
            r.photons * r.d12sq,
            r.p_gaussian,
            r.error_rate
        );
    }

    let slope = |label: &str| {
        let pts: Vec<_> = rows.iter().filter(|r| r.label == label).map(|r| (r.photons, r.error_rate)).collect();
        fit_decay_constant(&pts)
    };
    if let (Some(a), Some(b)) = (slope("optimal"), slope("average")) {
        println!("decay ratio {:.1}, Lambda_1 / mean {:.1}", a / b, spec.enhancement().unwrap_or(f64::NAN));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> helion::Result<()> {
    run()
}
