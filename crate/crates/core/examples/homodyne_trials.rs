//! Monte Carlo homodyne detection with known and with estimated signal
//! means, compared with the closed-form receiver error.

use helion::bounds::gaussian_receiver_error;
use helion::discrim::{build_discrimination_operator, optimal_state, spectrum};
use helion::receiver::{run_trials, MeanStrategy, TrialConfig};
use helion::scatter::{gen_system, LossModel, SystemConfig};

pub fn run() -> helion::Result<()> {
    let pair = gen_system(&SystemConfig {
        m_in: 16,
        n_out: 16,
        n_plane: 16,
        target_pixels: vec![4],
        target_transmittance: 0.3,
        target_phase: 0.0,
        loss_model: LossModel::GinibreSubunitary,
        seed: 3,
    })?;
    let spec = spectrum(&build_discrimination_operator(&pair))?;
    // Pick the photon number that puts n d^2 at 2.
    let n = 2.0 / spec.leading_eigenvalue();
    let state = optimal_state(&spec, n)?;

    for strategy in [MeanStrategy::OracleMeans, MeanStrategy::EmpiricalSumMean] {
        let cfg = TrialConfig::new(4000, strategy, 99);
        let batch = run_trials(&pair, &state, &cfg)?;
        let pg = gaussian_receiver_error(n, batch.d12sq, cfg.sigma_sq, &cfg.priors)?;
        println!(
            "{strategy:?}: {} errors in {} trials, rate {:.4} [{:.4}, {:.4}], P_G = {pg:.4}",
            batch.errors(),
            batch.n_rep,
            batch.error_rate,
            batch.ci.0,
            batch.ci.1
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> helion::Result<()> {
    run()
}
