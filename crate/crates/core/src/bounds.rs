//! Closed-form error probabilities for the binary detection problem.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shot-noise variance per field quadrature, in photon units.
pub const DEFAULT_SIGMA_SQ: f64 = 0.5;
/// Repetitions per photon level in the reference experiment.
pub const DEFAULT_N_REP: usize = 4000;
pub const PRIOR_SUM_TOL: f64 = 1e-12;
const D12SQ_SLACK: f64 = 1e-9;
/// Above this `erfc` is evaluated through its asymptotic series in log space.
const LN_ERFC_SWITCH: f64 = 25.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Priors {
    pub pi1: f64,
    pub pi2: f64,
}

impl Priors {
    pub fn new(pi1: f64, pi2: f64) -> Result<Self> {
        let p = Self { pi1, pi2 };
        p.validate()?;
        Ok(p)
    }

    pub fn equal() -> Self {
        Self { pi1: 0.5, pi2: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |p: f64| (0.0..=1.0).contains(&p);
        if !in_range(self.pi1) || !in_range(self.pi2) {
            return Err(Error::Validation(format!(
                "priors ({}, {}) outside [0, 1]",
                self.pi1, self.pi2
            )));
        }
        if (self.pi1 + self.pi2 - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::Validation(format!(
                "priors ({}, {}) do not sum to 1",
                self.pi1, self.pi2
            )));
        }
        Ok(())
    }

    /// `ln(π1 / π2)`, the likelihood-ratio threshold. Infinite when a prior
    /// is zero.
    pub fn log_ratio(&self) -> f64 {
        self.pi1.ln() - self.pi2.ln()
    }

    pub fn swapped(&self) -> Self {
        Self { pi1: self.pi2, pi2: self.pi1 }
    }
}

impl Default for Priors {
    fn default() -> Self {
        Self::equal()
    }
}

/// Attenuation chain between the source and the sample:
/// `n = n0 · T_nd · T_va · T_mod`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonBudget {
    pub n0: f64,
    pub t_nd: f64,
    pub t_va: f64,
    pub t_mod: f64,
}

impl PhotonBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.n0 >= 0.0 && self.n0.is_finite()) {
            return Err(Error::Validation(format!("n0 = {} must be finite and >= 0", self.n0)));
        }
        for (name, t) in [("t_nd", self.t_nd), ("t_va", self.t_va), ("t_mod", self.t_mod)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Validation(format!("{name} = {t} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

pub fn effective_photons(budget: &PhotonBudget) -> f64 {
    budget.n0 * budget.t_nd * budget.t_va * budget.t_mod
}

fn check_exposure(n: f64, d12sq: f64) -> Result<f64> {
    if !(n >= 0.0 && n.is_finite()) {
        return Err(Error::Validation(format!("photon number {n} must be finite and >= 0")));
    }
    if !(-D12SQ_SLACK..=4.0 + D12SQ_SLACK).contains(&d12sq) {
        return Err(Error::Validation(format!("d12^2 = {d12sq} outside [0, 4]")));
    }
    Ok(d12sq.clamp(0.0, 4.0))
}

/// Helstrom bound `½ (1 - sqrt(1 - 4 π1 π2 e^{-n d12²}))`.
///
/// Evaluated as `½ q / (1 + sqrt(1 - q))` so the exponential tail does not
/// cancel to zero.
pub fn helstrom_bound(n: f64, d12sq: f64, priors: &Priors) -> Result<f64> {
    priors.validate()?;
    let d12sq = check_exposure(n, d12sq)?;
    let q = 4.0 * priors.pi1 * priors.pi2 * (-n * d12sq).exp();
    let mut arg = 1.0 - q;
    if arg < -1e-12 {
        return Err(Error::Numeric(format!("negative discriminant {arg:e} in Helstrom bound")));
    }
    arg = arg.max(0.0);
    Ok(0.5 * q / (1.0 + arg.sqrt()))
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `ln erfc(x)`, finite well past the point where `erfc` underflows.
pub fn ln_erfc(x: f64) -> f64 {
    if x <= LN_ERFC_SWITCH {
        return erfc(x).ln();
    }
    let inv2 = 1.0 / (2.0 * x * x);
    // 1 - 1/(2x²) + 3/(2x²)² - 15/(2x²)³ + 105/(2x²)⁴ - 945/(2x²)⁵
    let series = 1.0 + inv2 * (-1.0 + inv2 * (3.0 + inv2 * (-15.0 + inv2 * (105.0 - 945.0 * inv2))));
    -x * x - (x * std::f64::consts::PI.sqrt()).ln() + series.ln()
}

/// Result of [`gaussian_receiver_error_flagged`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianError {
    pub probability: f64,
    /// No signal separation (or a certain prior): the decision is made on
    /// the priors alone.
    pub prior_only: bool,
}

fn check_sigma(sigma_sq: f64) -> Result<()> {
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(Error::Validation(format!("sigma^2 = {sigma_sq} must be finite and > 0")));
    }
    Ok(())
}

/// Erfc arguments `sqrt(x / 8σ²) ± ln(π1/π2) sqrt(σ² / 2x)` with `x = n d12²`.
fn receiver_arguments(x: f64, sigma_sq: f64, priors: &Priors) -> (f64, f64) {
    let centre = (x / (8.0 * sigma_sq)).sqrt();
    let offset = if priors.pi1 == priors.pi2 {
        0.0
    } else {
        priors.log_ratio() * (sigma_sq / (2.0 * x)).sqrt()
    };
    (centre + offset, centre - offset)
}

/// Error probability of the homodyne likelihood-ratio receiver with priors.
pub fn gaussian_receiver_error_flagged(
    n: f64,
    d12sq: f64,
    sigma_sq: f64,
    priors: &Priors,
) -> Result<GaussianError> {
    priors.validate()?;
    check_sigma(sigma_sq)?;
    let d12sq = check_exposure(n, d12sq)?;
    let x = n * d12sq;
    if priors.pi1 == 0.0 || priors.pi2 == 0.0 {
        return Ok(GaussianError { probability: 0.0, prior_only: true });
    }
    if x == 0.0 {
        return Ok(GaussianError { probability: priors.pi1.min(priors.pi2), prior_only: true });
    }
    let (arg1, arg2) = receiver_arguments(x, sigma_sq, priors);
    let probability = 0.5 * priors.pi1 * erfc(arg1) + 0.5 * priors.pi2 * erfc(arg2);
    Ok(GaussianError { probability, prior_only: false })
}

pub fn gaussian_receiver_error(n: f64, d12sq: f64, sigma_sq: f64, priors: &Priors) -> Result<f64> {
    gaussian_receiver_error_flagged(n, d12sq, sigma_sq, priors).map(|g| g.probability)
}

/// `ln P_G`, usable where `P_G` itself underflows.
pub fn ln_gaussian_receiver_error(
    n: f64,
    d12sq: f64,
    sigma_sq: f64,
    priors: &Priors,
) -> Result<f64> {
    let flagged = gaussian_receiver_error_flagged(n, d12sq, sigma_sq, priors)?;
    if flagged.prior_only {
        return Ok(flagged.probability.ln());
    }
    let x = n * d12sq.clamp(0.0, 4.0);
    let (arg1, arg2) = receiver_arguments(x, sigma_sq, priors);
    let t1 = (0.5 * priors.pi1).ln() + ln_erfc(arg1);
    let t2 = (0.5 * priors.pi2).ln() + ln_erfc(arg2);
    let hi = t1.max(t2);
    Ok(hi + ((t1 - hi).exp() + (t2 - hi).exp()).ln())
}

/// `p ± 2 sqrt(p (1 - p) / n_rep)`, clipped to `[0, 1]`.
///
/// Panics if `p` is outside `[0, 1]` or `n_rep` is zero.
pub fn binomial_ci(p: f64, n_rep: usize) -> (f64, f64) {
    assert!((0.0..=1.0).contains(&p), "probability {p} outside [0, 1]");
    assert!(n_rep >= 1, "n_rep must be positive");
    let half = 2.0 * (p * (1.0 - p) / n_rep as f64).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn erfc_matches_high_precision_values() {
        // reference values computed with 40-digit arithmetic
        let cases = [
            (0.0, 1.0),
            (0.1, 0.887_537_083_981_715_1),
            (0.5, 0.479_500_122_186_953_46),
            (1.0, 0.157_299_207_050_285_13),
            (2.0, 0.004_677_734_981_047_265_8),
            (3.5, 7.430_983_723_414_127_5e-7),
            (5.0, 1.537_459_794_428_034_9e-12),
            (7.5, 2.776_649_386_030_569_1e-26),
            (10.0, 2.088_487_583_762_544_8e-45),
        ];
        for (x, want) in cases {
            assert!(rel(erfc(x), want) <= 1e-12, "erfc({x}) = {:e}", erfc(x));
        }
    }

    #[test]
    fn ln_erfc_tail() {
        for (x, want) in [(30.0, -903.974_117_110_643_9), (100.0, -10_005.177_585_122_664), (1000.0, -1_000_007.480_120_721_9)] {
            assert!(rel(ln_erfc(x), want) <= 1e-12, "ln_erfc({x}) = {}", ln_erfc(x));
        }
        // continuity across the switch point
        let below = erfc(LN_ERFC_SWITCH).ln();
        let above = ln_erfc(LN_ERFC_SWITCH + 1e-9);
        assert!((below - above).abs() < 1e-9 * below.abs());
        assert!(erfc(40.0) == 0.0 && ln_erfc(40.0).is_finite());
    }

    #[test]
    fn helstrom_examples() {
        let eq = Priors::equal();
        assert_eq!(helstrom_bound(0.0, 1.0, &eq).unwrap(), 0.5);
        assert_eq!(helstrom_bound(5.0, 0.0, &eq).unwrap(), 0.5);
        assert_eq!(helstrom_bound(3.0, 2.0, &Priors::new(1.0, 0.0).unwrap()).unwrap(), 0.0);
        let p = helstrom_bound(4f64.ln(), 1.0, &eq).unwrap();
        assert!(rel(p, 0.066_987_298_107_780_68) < 1e-14);
        let pri = Priors::new(0.7, 0.3).unwrap();
        assert!(rel(helstrom_bound(3.0, 0.8, &pri).unwrap(), 0.019_428_226_162_601_83) < 1e-13);
    }

    #[test]
    fn helstrom_rejects_bad_input() {
        let eq = Priors::equal();
        assert!(helstrom_bound(-1.0, 1.0, &eq).is_err());
        assert!(helstrom_bound(1.0, 4.5, &eq).is_err());
        assert!(helstrom_bound(1.0, 1.0, &Priors { pi1: 0.6, pi2: 0.6 }).is_err());
    }

    #[test]
    fn gaussian_examples() {
        let eq = Priors::equal();
        assert_eq!(gaussian_receiver_error(0.0, 1.0, 0.5, &eq).unwrap(), 0.5);
        let p = gaussian_receiver_error(4.0, 1.0, 0.5, &eq).unwrap();
        assert!(rel(p, 0.078_649_603_525_142_57) < 1e-13);
        let pri = Priors::new(0.7, 0.3).unwrap();
        assert!(rel(gaussian_receiver_error(3.0, 0.8, 0.5, &pri).unwrap(), 0.120_177_989_626_469_87) < 1e-12);
    }

    #[test]
    fn gaussian_degenerate_cases() {
        let pri = Priors::new(0.8, 0.2).unwrap();
        let g = gaussian_receiver_error_flagged(0.0, 1.0, 0.5, &pri).unwrap();
        assert!(g.prior_only);
        assert_eq!(g.probability, 0.2);
        assert_eq!(gaussian_receiver_error(5.0, 1.0, 0.5, &Priors::new(0.0, 1.0).unwrap()).unwrap(), 0.0);
        assert!(gaussian_receiver_error(1.0, 1.0, 0.0, &pri).is_err());
    }

    #[test]
    fn helstrom_never_exceeds_gaussian() {
        let eq = Priors::equal();
        for i in 0..60 {
            let n = 10f64.powf(-2.0 + i as f64 * 0.1);
            for d in [1e-4, 0.01, 0.3, 1.0, 2.5, 4.0] {
                let ph = helstrom_bound(n, d, &eq).unwrap();
                let pg = gaussian_receiver_error(n, d, DEFAULT_SIGMA_SQ, &eq).unwrap();
                assert!(ph <= pg + 1e-12, "n={n} d={d}: {ph} > {pg}");
            }
        }
    }

    #[test]
    fn monotone_in_photons_and_distance() {
        let pri = Priors::new(0.3, 0.7).unwrap();
        for d in [0.05, 0.5, 2.0] {
            let mut last = (f64::INFINITY, f64::INFINITY);
            for i in 0..80 {
                let n = i as f64 * 0.5;
                let ph = helstrom_bound(n, d, &pri).unwrap();
                let pg = gaussian_receiver_error(n.max(1e-9), d, 0.5, &pri).unwrap();
                assert!(ph <= last.0 && pg <= last.1 + 1e-15);
                last = (ph, pg);
            }
        }
        let mut last = (f64::INFINITY, f64::INFINITY);
        for i in 1..80 {
            let d = i as f64 * 0.05;
            let ph = helstrom_bound(3.0, d, &pri).unwrap();
            let pg = gaussian_receiver_error(3.0, d, 0.5, &pri).unwrap();
            assert!(ph <= last.0 && pg <= last.1 + 1e-15);
            last = (ph, pg);
        }
    }

    #[test]
    fn asymptotic_decay_constants() {
        let eq = Priors::equal();
        for d in [0.1, 1.0, 3.0] {
            let n = 50.0 / d;
            let slope = -(2.0 * helstrom_bound(n, d, &eq).unwrap()).ln() / n;
            assert!(rel(slope, d) < 0.05, "helstrom slope {slope} vs {d}");
            // the erfc prefactor decays slowly; check deep in the tail
            let n = 2e4 / d;
            let ln_pg = ln_gaussian_receiver_error(n, d, 0.5, &eq).unwrap();
            let slope = -(2f64.ln() + ln_pg) / n;
            assert!(rel(slope, d / 4.0) < 0.05, "gaussian slope {slope} vs {}", d / 4.0);
        }
    }

    #[test]
    fn ln_form_agrees_with_direct_form() {
        let pri = Priors::new(0.6, 0.4).unwrap();
        for n in [0.5, 3.0, 40.0] {
            let direct = gaussian_receiver_error(n, 1.3, 0.5, &pri).unwrap();
            let via_ln = ln_gaussian_receiver_error(n, 1.3, 0.5, &pri).unwrap().exp();
            assert!(rel(via_ln, direct) < 1e-12);
        }
    }

    #[test]
    fn relabeling_symmetry() {
        for pi in [0.1, 0.35, 0.5, 0.9] {
            let p = Priors::new(pi, 1.0 - pi).unwrap();
            let a = gaussian_receiver_error(2.0, 0.7, 0.5, &p).unwrap();
            let b = gaussian_receiver_error(2.0, 0.7, 0.5, &p.swapped()).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn binomial_intervals() {
        assert_eq!(binomial_ci(0.0, 17), (0.0, 0.0));
        let (lo, hi) = binomial_ci(0.5, DEFAULT_N_REP);
        assert!(((hi - lo) / 2.0 - 0.015_811_388_300_841_9).abs() < 1e-15);
        assert_eq!(binomial_ci(1.0, 3), (1.0, 1.0));
        let (lo, hi) = binomial_ci(0.01, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.01 && hi <= 1.0);
    }

    #[test]
    fn photon_budget() {
        let plain = PhotonBudget { n0: 123.0, t_nd: 1.0, t_va: 1.0, t_mod: 1.0 };
        assert_eq!(effective_photons(&plain), 123.0);
        let reference = PhotonBudget { n0: 2.2e11, t_nd: 10f64.powf(-3.6), t_va: 1.0, t_mod: 0.13 };
        reference.validate().unwrap();
        assert!(rel(effective_photons(&reference), 7_183_995.194_117_398) < 1e-12);
        assert_eq!(effective_photons(&PhotonBudget { t_va: 0.0, ..reference }), 0.0);
        assert!(PhotonBudget { t_mod: 1.2, ..reference }.validate().is_err());
    }
}
