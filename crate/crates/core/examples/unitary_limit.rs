//! Lossless limit: with unitary S1, S2 every eigenstate of the
//! discrimination operator leaves the medium in the same mode up to a phase,
//! and its eigenvalue is 2(1 - cos θ).

use helion::discrim::{build_discrimination_operator, spectrum, unitary_phase_analysis};
use helion::scatter::{gen_system, LossModel, SystemConfig};

pub fn run() -> helion::Result<()> {
    let pair = gen_system(&SystemConfig {
        m_in: 12,
        n_out: 12,
        n_plane: 12,
        target_pixels: vec![2, 3, 9],
        target_transmittance: 1.0,
        target_phase: 1.3,
        loss_model: LossModel::UnitaryEmbed,
        seed: 5,
    })?;
    let spec = spectrum(&build_discrimination_operator(&pair))?;
    let records = unitary_phase_analysis(&pair, &spec)?;

    println!("{:>4} {:>12} {:>12} {:>10} {:>10}", "j", "Lambda", "2(1-cos)", "theta", "residual");
    for (j, r) in records.iter().enumerate() {
        let tag = if r.degenerate { "  (degenerate)" } else { "" };
        println!(
            "{:>4} {:>12.8} {:>12.8} {:>10.5} {:>10.2e}{tag}",
            j + 1,
            r.eigenvalue,
            r.predicted_eigenvalue(),
            r.theta,
            r.residual
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> helion::Result<()> {
    run()
}
