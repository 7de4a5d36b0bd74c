//! Virtual transmission-matrix acquisition.
//!
//! Each column of `S_hyp` is measured by sending one probe field carrying
//! `n0` photons and recording a single homodyne shot of the outgoing
//! field. Dividing by `√n0` gives an unbiased estimate with per-entry noise
//! variance `σ² / n0` on each quadrature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::DEFAULT_SIGMA_SQ;
use crate::discrim::{
    build_discrimination_operator, optimal_state, quadratic_form, spectrum, DiscriminationSpectrum,
    ProbeState,
};
use crate::receiver::sample_homodyne;
use crate::rng::{self, substream};
use crate::scatter::{Hypothesis, ScatteringPair};
use crate::{ComplexMatrix, ComplexVector, Error, Result, C64};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeBasis {
    /// One incident mode at a time.
    #[default]
    Canonical,
    /// Columns of the unitary DFT matrix.
    PlaneWaveLike,
}

fn default_sigma_sq() -> f64 {
    DEFAULT_SIGMA_SQ
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionConfig {
    pub n0_per_column: f64,
    #[serde(default)]
    pub probe_basis: ProbeBasis,
    #[serde(default = "default_sigma_sq")]
    pub sigma_sq: f64,
    pub seed: u64,
    /// Standard deviation (rad) of a random global phase applied to each
    /// stored column; models residual reference drift.
    #[serde(default)]
    pub phase_jitter_rad: f64,
}

impl AcquisitionConfig {
    pub fn new(n0_per_column: f64, seed: u64) -> Self {
        Self {
            n0_per_column,
            probe_basis: ProbeBasis::Canonical,
            sigma_sq: DEFAULT_SIGMA_SQ,
            seed,
            phase_jitter_rad: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n0_per_column > 0.0 && self.n0_per_column.is_finite()) {
            return Err(Error::Validation(format!(
                "n0_per_column = {} must be finite and > 0",
                self.n0_per_column
            )));
        }
        if !(self.sigma_sq > 0.0 && self.sigma_sq.is_finite()) {
            return Err(Error::Validation(format!("sigma^2 = {} must be > 0", self.sigma_sq)));
        }
        if !(self.phase_jitter_rad >= 0.0 && self.phase_jitter_rad.is_finite()) {
            return Err(Error::Validation("phase_jitter_rad must be >= 0".into()));
        }
        Ok(())
    }
}

/// Probe fields as columns of an `m x m` unitary.
pub fn probe_matrix(basis: ProbeBasis, m: usize) -> ComplexMatrix {
    match basis {
        ProbeBasis::Canonical => ComplexMatrix::identity(m),
        ProbeBasis::PlaneWaveLike => {
            let w = 1.0 / (m as f64).sqrt();
            ComplexMatrix::from_fn(m, m, |k, j| {
                let angle = -2.0 * std::f64::consts::PI * ((k * j) % m) as f64 / m as f64;
                C64::from_polar(w, angle)
            })
        }
    }
}

/// Stream used for column `col` of hypothesis `hyp`.
pub fn column_stream(hyp: Hypothesis, col: usize) -> u64 {
    (u64::from(hyp.label()) << 32) | col as u64
}

/// Noisy estimate of `S_hyp`, expressed in the canonical input basis.
pub fn measure_matrix(
    pair: &ScatteringPair,
    hyp: Hypothesis,
    cfg: &AcquisitionConfig,
) -> Result<ComplexMatrix> {
    cfg.validate()?;
    let s = pair.s(hyp);
    let m = pair.m_in();
    let probes = probe_matrix(cfg.probe_basis, m);
    let root = cfg.n0_per_column.sqrt();
    let columns: Vec<ComplexVector> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(cfg.seed, column_stream(hyp, j));
            let expected = s.mul_vec(&probes.column(j))?.scale(C64::new(root, 0.0));
            let shot = sample_homodyne(&expected, cfg.sigma_sq, &mut rng)?;
            let phase = if cfg.phase_jitter_rad > 0.0 {
                C64::from_polar(1.0, cfg.phase_jitter_rad * rng::normal(&mut rng))
            } else {
                C64::new(1.0, 0.0)
            };
            Ok(shot.scale(phase / root))
        })
        .collect::<Result<_>>()?;
    let measured = ComplexMatrix::from_columns(&columns)?;
    match cfg.probe_basis {
        ProbeBasis::Canonical => Ok(measured),
        ProbeBasis::PlaneWaveLike => measured.matmul(&probes.adjoint()),
    }
}

/// Both matrices measured with the same configuration.
pub fn measure_pair(pair: &ScatteringPair, cfg: &AcquisitionConfig) -> Result<ScatteringPair> {
    ScatteringPair::from_matrices(
        measure_matrix(pair, Hypothesis::H1, cfg)?,
        measure_matrix(pair, Hypothesis::H2, cfg)?,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fidelity {
    /// `|<pred|meas>| / (||pred|| ||meas||)`.
    pub corr_magnitude: f64,
    /// `||meas||² / ||pred||²`.
    pub norm_ratio: f64,
}

pub fn fidelity_metrics(predicted: &ComplexVector, measured: &ComplexVector) -> Result<Fidelity> {
    if predicted.dim() != measured.dim() {
        return Err(Error::Dimension(format!(
            "predicted length {} vs measured length {}",
            predicted.dim(),
            measured.dim()
        )));
    }
    let pp = predicted.norm_sqr();
    if pp == 0.0 {
        return Err(Error::Validation("predicted field is zero".into()));
    }
    let mm = measured.norm_sqr();
    let corr_magnitude = if mm == 0.0 {
        0.0
    } else {
        (predicted.dot(measured)?.norm() / (pp.sqrt() * mm.sqrt())).min(1.0)
    };
    Ok(Fidelity { corr_magnitude, norm_ratio: mm / pp })
}

/// Ratio of measured to predicted `d12²`.
pub fn eta_d(d12sq_measured: f64, d12sq_predicted: f64) -> Result<f64> {
    if !(d12sq_predicted > 0.0) {
        return Err(Error::Validation(format!(
            "predicted d12^2 = {d12sq_predicted} must be positive"
        )));
    }
    Ok(d12sq_measured / d12sq_predicted)
}

/// Spectrum of the operator built from noisy matrix estimates.
pub fn end_to_end_spectrum(
    pair: &ScatteringPair,
    cfg: &AcquisitionConfig,
) -> Result<DiscriminationSpectrum> {
    let measured = measure_pair(pair, cfg)?;
    spectrum(&build_discrimination_operator(&measured))
}

/// Everything an acquisition study produces for the optimal probe.
#[derive(Clone, Debug)]
pub struct AcquisitionReport {
    pub measured: ScatteringPair,
    pub spectrum: DiscriminationSpectrum,
    /// Leading eigenvector of the estimated operator.
    pub optimal: ProbeState,
    /// `Λ̂1`, the distance promised by the estimated matrices.
    pub predicted_d12sq: f64,
    /// Distance the probe actually achieves on the true system.
    pub realized_d12sq: f64,
    pub eta_d: f64,
    /// Output fields predicted from the estimates against the true ones,
    /// for H1 and H2.
    pub fidelity: [Fidelity; 2],
}

/// Measures both matrices, designs the optimal probe from the estimates
/// and evaluates it on the true system.
pub fn acquisition_study(pair: &ScatteringPair, cfg: &AcquisitionConfig) -> Result<AcquisitionReport> {
    let measured = measure_pair(pair, cfg)?;
    let spectrum = spectrum(&build_discrimination_operator(&measured))?;
    let optimal = optimal_state(&spectrum, cfg.n0_per_column)?;
    let predicted_d12sq = spectrum.leading_eigenvalue();
    let realized_d12sq =
        quadratic_form(&build_discrimination_operator(pair), optimal.amplitudes())?;
    let eta = eta_d(realized_d12sq, predicted_d12sq)?;
    let x = optimal.amplitudes();
    let fid = |hyp| -> Result<Fidelity> {
        fidelity_metrics(&measured.s(hyp).mul_vec(x)?, &pair.s(hyp).mul_vec(x)?)
    };
    let fidelity = [fid(Hypothesis::H1)?, fid(Hypothesis::H2)?];
    Ok(AcquisitionReport {
        measured,
        spectrum,
        optimal,
        predicted_d12sq,
        realized_d12sq,
        eta_d: eta,
        fidelity,
    })
}
