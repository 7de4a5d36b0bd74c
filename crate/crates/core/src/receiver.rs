//! Monte Carlo homodyne detection with likelihood-ratio decisions.
//!
//! Trial `t` of a batch draws everything (truth label and field noise) from
//! stream `t` of the batch seed, so a batch is reproducible bit for bit and
//! independent of how trials are scheduled across threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    binomial_ci, gaussian_receiver_error, helstrom_bound, Priors, DEFAULT_SIGMA_SQ,
};
use crate::discrim::{quadratic_form, ProbeState};
use crate::persist::{fmt_f64, CsvTable};
use crate::rng::{self, substream};
use crate::scatter::{Hypothesis, ScatteringPair};
use crate::{ComplexMatrix, ComplexVector, Error, Result, C64};

pub const TRIALS_SCHEMA: &str = "helion.trials/1";
pub const SWEEP_SCHEMA: &str = "helion.sweep/1";

/// How the expected fields entering the log-likelihood ratio are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanStrategy {
    /// Exact `√n S_i x` from the known matrices.
    OracleMeans,
    /// Prior-weighted sum estimated from the batch itself; difference from
    /// the matrices.
    EmpiricalSumMean,
}

/// One homodyne record: the noisy field and which hypothesis produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct HomodyneSample {
    pub z: ComplexVector,
    pub truth: Hypothesis,
}

fn check_sigma(sigma_sq: f64) -> Result<()> {
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(Error::Validation(format!("sigma^2 = {sigma_sq} must be finite and > 0")));
    }
    Ok(())
}

/// Adds independent `N(0, σ²)` noise to both quadratures of every mode.
pub fn sample_homodyne<R: Rng + ?Sized>(
    expected: &ComplexVector,
    sigma_sq: f64,
    rng: &mut R,
) -> Result<ComplexVector> {
    check_sigma(sigma_sq)?;
    let data = expected.iter().map(|&e| e + rng::complex_normal(rng, sigma_sq)).collect();
    ComplexVector::new(data)
}

/// `ln p(z|H2) - ln p(z|H1)` for circular Gaussian noise of variance `σ²`
/// per quadrature.
pub fn log_likelihood_ratio(
    z: &ComplexVector,
    e1: &ComplexVector,
    e2: &ComplexVector,
    sigma_sq: f64,
) -> Result<f64> {
    if z.dim() != e1.dim() || z.dim() != e2.dim() {
        return Err(Error::Dimension(format!(
            "sample of length {} against means of length {} and {}",
            z.dim(),
            e1.dim(),
            e2.dim()
        )));
    }
    let mut linear = 0.0;
    let mut energy = 0.0;
    for ((&zk, &a), &b) in z.iter().zip(e1.iter()).zip(e2.iter()) {
        linear += ((b - a).conj() * zk).re;
        energy += a.norm_sqr() - b.norm_sqr();
    }
    Ok(linear / sigma_sq + energy / (2.0 * sigma_sq))
}

/// Threshold test against `ln(π1/π2)`; ties go to H1.
pub fn decide(llr: f64, priors: &Priors) -> Hypothesis {
    if llr > priors.log_ratio() {
        Hypothesis::H2
    } else {
        Hypothesis::H1
    }
}

fn default_sigma_sq() -> f64 {
    DEFAULT_SIGMA_SQ
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    #[serde(default)]
    pub priors: Priors,
    #[serde(default = "default_sigma_sq")]
    pub sigma_sq: f64,
    pub n_rep: usize,
    pub mean_strategy: MeanStrategy,
    pub seed: u64,
    /// Exactly `round(π1 n_rep)` H1 trials followed by H2 trials, instead of
    /// drawing each truth label from the priors.
    #[serde(default)]
    pub fixed_split: bool,
    /// With `EmpiricalSumMean`, exclude the trial being decided from the
    /// batch mean.
    #[serde(default)]
    pub leave_one_out: bool,
}

impl TrialConfig {
    pub fn new(n_rep: usize, mean_strategy: MeanStrategy, seed: u64) -> Self {
        Self {
            priors: Priors::equal(),
            sigma_sq: DEFAULT_SIGMA_SQ,
            n_rep,
            mean_strategy,
            seed,
            fixed_split: false,
            leave_one_out: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.priors.validate()?;
        check_sigma(self.sigma_sq)?;
        if self.n_rep == 0 {
            return Err(Error::Validation("n_rep must be at least 1".into()));
        }
        if self.mean_strategy == MeanStrategy::EmpiricalSumMean {
            if self.priors.pi1 == 0.0 || self.priors.pi2 == 0.0 {
                return Err(Error::Validation(
                    "empirical_sum_mean needs both priors positive".into(),
                ));
            }
            if self.leave_one_out && self.n_rep < 2 {
                return Err(Error::Validation("leave_one_out needs n_rep >= 2".into()));
            }
        }
        Ok(())
    }
}

/// Outcome of a Monte Carlo batch.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialBatch {
    pub n_rep: usize,
    pub decisions: Vec<Hypothesis>,
    pub truths: Vec<Hypothesis>,
    pub llr: Vec<f64>,
    pub error_rate: f64,
    pub ci: (f64, f64),
    pub seed: u64,
    pub mean_strategy: MeanStrategy,
    pub photons: f64,
    pub d12sq: f64,
}

impl TrialBatch {
    pub fn errors(&self) -> usize {
        self.decisions.iter().zip(&self.truths).filter(|(d, t)| d != t).count()
    }

    /// `trial, truth, llr, decision`.
    pub fn to_table(&self) -> CsvTable {
        let mut table = CsvTable::new(TRIALS_SCHEMA, &["trial", "truth", "llr", "decision"]);
        for (t, ((truth, llr), decision)) in
            self.truths.iter().zip(&self.llr).zip(&self.decisions).enumerate()
        {
            table.push(vec![
                t.to_string(),
                truth.label().to_string(),
                fmt_f64(*llr),
                decision.label().to_string(),
            ]);
        }
        table
    }
}

fn draw_truth(rng: &mut rng::StreamRng, t: usize, cfg: &TrialConfig) -> Hypothesis {
    if cfg.fixed_split {
        let n_h1 = (cfg.priors.pi1 * cfg.n_rep as f64).round() as usize;
        if t < n_h1 {
            Hypothesis::H1
        } else {
            Hypothesis::H2
        }
    } else {
        let u: f64 = rng.random();
        if u < cfg.priors.pi2 {
            Hypothesis::H2
        } else {
            Hypothesis::H1
        }
    }
}

/// Draws the truth labels and noisy fields of a batch.
pub fn draw_samples(
    e1: &ComplexVector,
    e2: &ComplexVector,
    cfg: &TrialConfig,
) -> Result<Vec<HomodyneSample>> {
    cfg.validate()?;
    (0..cfg.n_rep)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(cfg.seed, t as u64);
            let truth = draw_truth(&mut rng, t, cfg);
            let mean = match truth {
                Hypothesis::H1 => e1,
                Hypothesis::H2 => e2,
            };
            Ok(HomodyneSample { z: sample_homodyne(mean, cfg.sigma_sq, &mut rng)?, truth })
        })
        .collect()
}

/// Expected outgoing fields `√n S1 x` and `√n S2 x`.
pub fn expected_fields(
    pair: &ScatteringPair,
    state: &ProbeState,
) -> Result<(ComplexVector, ComplexVector)> {
    let amp = C64::new(state.photons().sqrt(), 0.0);
    let x = state.amplitudes();
    Ok((pair.s1().mul_vec(x)?.scale(amp), pair.s2().mul_vec(x)?.scale(amp)))
}

/// Runs a full virtual detection experiment for one probe state.
pub fn run_trials(pair: &ScatteringPair, state: &ProbeState, cfg: &TrialConfig) -> Result<TrialBatch> {
    cfg.validate()?;
    if state.dim() != pair.m_in() {
        return Err(Error::Dimension(format!(
            "state of dimension {} for {} incident modes",
            state.dim(),
            pair.m_in()
        )));
    }
    let (e1, e2) = expected_fields(pair, state)?;
    let d12sq = {
        let x = state.amplitudes();
        let diff = pair.s2().mul_vec(x)?.sub(&pair.s1().mul_vec(x)?)?;
        diff.norm_sqr()
    };
    let samples = draw_samples(&e1, &e2, cfg)?;

    let llr: Vec<f64> = match cfg.mean_strategy {
        MeanStrategy::OracleMeans => samples
            .par_iter()
            .map(|s| log_likelihood_ratio(&s.z, &e1, &e2, cfg.sigma_sq))
            .collect::<Result<_>>()?,
        MeanStrategy::EmpiricalSumMean => {
            let (p1, p2) = (cfg.priors.pi1, cfg.priors.pi2);
            let dim = e1.dim();
            let mut sum = vec![C64::new(0.0, 0.0); dim];
            for s in &samples {
                for (acc, z) in sum.iter_mut().zip(s.z.iter()) {
                    *acc += z;
                }
            }
            let diff_mean = e2.scale(C64::new(p2, 0.0)).sub(&e1.scale(C64::new(p1, 0.0)))?;
            let reconstruct = |sum_mean: ComplexVector| -> Result<(ComplexVector, ComplexVector)> {
                let h1 = sum_mean.sub(&diff_mean)?.scale(C64::new(1.0 / (2.0 * p1), 0.0));
                let h2 = sum_mean.add(&diff_mean)?.scale(C64::new(1.0 / (2.0 * p2), 0.0));
                Ok((h1, h2))
            };
            if cfg.leave_one_out {
                let others = (cfg.n_rep - 1) as f64;
                samples
                    .par_iter()
                    .map(|s| {
                        let mean = ComplexVector::new(
                            sum.iter().zip(s.z.iter()).map(|(&a, &z)| (a - z) / others).collect(),
                        )?;
                        let (h1, h2) = reconstruct(mean)?;
                        log_likelihood_ratio(&s.z, &h1, &h2, cfg.sigma_sq)
                    })
                    .collect::<Result<_>>()?
            } else {
                let n = cfg.n_rep as f64;
                let mean = ComplexVector::new(sum.iter().map(|&a| a / n).collect())?;
                let (h1, h2) = reconstruct(mean)?;
                samples
                    .par_iter()
                    .map(|s| log_likelihood_ratio(&s.z, &h1, &h2, cfg.sigma_sq))
                    .collect::<Result<_>>()?
            }
        }
    };

    let decisions: Vec<Hypothesis> = llr.iter().map(|&l| decide(l, &cfg.priors)).collect();
    let truths: Vec<Hypothesis> = samples.iter().map(|s| s.truth).collect();
    let errors = decisions.iter().zip(&truths).filter(|(d, t)| d != t).count();
    let error_rate = errors as f64 / cfg.n_rep as f64;
    Ok(TrialBatch {
        n_rep: cfg.n_rep,
        decisions,
        truths,
        llr,
        error_rate,
        ci: binomial_ci(error_rate, cfg.n_rep),
        seed: cfg.seed,
        mean_strategy: cfg.mean_strategy,
        photons: state.photons(),
        d12sq,
    })
}

/// Photon levels of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PhotonGrid {
    /// The same absolute photon numbers for every probe.
    Photons(Vec<f64>),
    /// Target exposures `n · d12²`; each probe gets `n = exposure / d12²`.
    Exposure(Vec<f64>),
}

impl PhotonGrid {
    pub fn len(&self) -> usize {
        match self {
            PhotonGrid::Photons(v) | PhotonGrid::Exposure(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn photons_for(&self, d12sq: f64) -> Result<Vec<f64>> {
        match self {
            PhotonGrid::Photons(v) => Ok(v.clone()),
            PhotonGrid::Exposure(v) => {
                if d12sq <= 0.0 {
                    return Err(Error::Validation(
                        "exposure grid needs a probe with d12^2 > 0".into(),
                    ));
                }
                Ok(v.iter().map(|&x| x / d12sq).collect())
            }
        }
    }
}

/// A named probe direction (unit norm) for a sweep.
#[derive(Clone, Debug)]
pub struct SweepProbe {
    pub label: String,
    pub state: ProbeState,
}

/// One row of a sweep: closed-form predictions next to the observed rate.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub photons: f64,
    pub d12sq: f64,
    pub p_helstrom: f64,
    pub p_gaussian: f64,
    pub error_rate: f64,
    /// Binomial interval around the observed rate.
    pub ci: (f64, f64),
    /// Binomial interval around the Gaussian-receiver prediction.
    pub predicted_ci: (f64, f64),
}

/// Seed of sweep point `(probe, level)`, decorrelated from the batch seed.
pub fn sweep_point_seed(seed: u64, probe: usize, level: usize) -> u64 {
    let mut z = seed ^ ((probe as u64) << 32 | level as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one trial batch per (probe, photon level).
pub fn photon_sweep(
    pair: &ScatteringPair,
    d12: &ComplexMatrix,
    probes: &[SweepProbe],
    grid: &PhotonGrid,
    cfg: &TrialConfig,
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(probes.len() * grid.len());
    for (pi, probe) in probes.iter().enumerate() {
        let d12sq = quadratic_form(d12, probe.state.amplitudes())?.max(0.0);
        for (gi, &n) in grid.photons_for(d12sq)?.iter().enumerate() {
            let state = probe.state.with_photons(n)?;
            let point_cfg = TrialConfig { seed: sweep_point_seed(cfg.seed, pi, gi), ..cfg.clone() };
            let batch = run_trials(pair, &state, &point_cfg)?;
            let p_gaussian = gaussian_receiver_error(n, d12sq, cfg.sigma_sq, &cfg.priors)?;
            rows.push(SweepRow {
                label: probe.label.clone(),
                photons: n,
                d12sq,
                p_helstrom: helstrom_bound(n, d12sq, &cfg.priors)?,
                p_gaussian,
                error_rate: batch.error_rate,
                ci: batch.ci,
                predicted_ci: binomial_ci(p_gaussian, cfg.n_rep),
            });
        }
    }
    Ok(rows)
}

pub fn sweep_table(rows: &[SweepRow]) -> CsvTable {
    let mut table = CsvTable::new(
        SWEEP_SCHEMA,
        &[
            "state", "n", "d12sq", "P_H", "P_G", "error_rate", "ci_lo", "ci_hi", "pred_ci_lo",
            "pred_ci_hi",
        ],
    );
    for r in rows {
        table.push(vec![
            r.label.clone(),
            fmt_f64(r.photons),
            fmt_f64(r.d12sq),
            fmt_f64(r.p_helstrom),
            fmt_f64(r.p_gaussian),
            fmt_f64(r.error_rate),
            fmt_f64(r.ci.0),
            fmt_f64(r.ci.1),
            fmt_f64(r.predicted_ci.0),
            fmt_f64(r.predicted_ci.1),
        ]);
    }
    table
}

/// Least-squares slope of `-ln(2 · rate)` against `n`, using the points with
/// `0 < rate < 0.5`. `None` with fewer than two usable points.
pub fn fit_decay_constant(points: &[(f64, f64)]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, r)| *r > 0.0 && *r < 0.5)
        .map(|&(n, r)| (n, -(2.0 * r).ln()))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let k = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / k;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
