//! Spectrum of the discrimination operator for a single-pixel target and
//! the gain of the optimal probe over an incoherent average.

use helion::discrim::{
    average_state, build_discrimination_operator, optimal_state, spectrum, statistical_distance,
};
use helion::scatter::{gen_system, LossModel, SystemConfig};

pub fn run() -> helion::Result<()> {
    let pair = gen_system(&SystemConfig {
        m_in: 128,
        n_out: 128,
        n_plane: 128,
        target_pixels: vec![0],
        target_transmittance: 0.0,
        target_phase: 0.0,
        loss_model: LossModel::UnitaryEmbed,
        seed: 11,
    })?;
    let spec = spectrum(&build_discrimination_operator(&pair))?;

    // A single opaque pixel changes one direction only.
    println!("nonzero eigenvalues: {}", spec.count_above(1e-9));
    println!("Lambda_1 = {:.6}, mean = {:.6e}", spec.leading_eigenvalue(), spec.mean_eigenvalue());
    if let Some(r) = spec.enhancement() {
        println!("Lambda_1 / mean = {r:.2} (M = {})", spec.dim());
    }

    let n = 100.0;
    let opt = statistical_distance(&pair, &optimal_state(&spec, n)?)?;
    let avg = statistical_distance(&pair, &average_state(&spec, n)?)?;
    println!("n d^2 with {n} photons: optimal {opt:.4}, average {avg:.4}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> helion::Result<()> {
    run()
}
