//! Closed-form error probabilities: the Helstrom bound against a homodyne
//! receiver with a likelihood-ratio decision, and a photon budget through a
//! lossy optical train.

use helion::bounds::{
    binomial_ci, effective_photons, gaussian_receiver_error, helstrom_bound, PhotonBudget, Priors,
    DEFAULT_SIGMA_SQ,
};

pub fn run() -> helion::Result<()> {
    let priors = Priors::equal();
    println!("{:>8} {:>12} {:>12} {:>24}", "n d^2", "P_H", "P_G", "95% band for 4000 trials");
    for exposure in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let ph = helstrom_bound(exposure, 1.0, &priors)?;
        let pg = gaussian_receiver_error(exposure, 1.0, DEFAULT_SIGMA_SQ, &priors)?;
        let (lo, hi) = binomial_ci(pg, 4000);
        println!("{exposure:>8} {ph:>12.5e} {pg:>12.5e}   [{lo:.5}, {hi:.5}]");
    }

    let skewed = Priors::new(0.9, 0.1)?;
    let pg = gaussian_receiver_error(2.0, 1.0, DEFAULT_SIGMA_SQ, &skewed)?;
    println!("priors 0.9/0.1 at n d^2 = 2: P_G = {pg:.5}");

    let budget = PhotonBudget { n0: 1e9, t_nd: 1e-2, t_va: 0.8, t_mod: 0.9 };
    println!("photons reaching the sample: {:.4e}", effective_photons(&budget));
    Ok(())
}

#[allow(dead_code)]
fn main() -> helion::Result<()> {
    run()
}
