//! Discrimination operator, its spectrum, and probe states.
//!
//! For a unit-norm incident state `x`, the per-photon statistical distance
//! between the two hypotheses is the quadratic form `x^† D12 x` with
//! `D12 = (S2 - S1)^† (S2 - S1)`. The leading eigenvector of `D12` is the
//! optimal probe; the uniform superposition of all eigenvectors reaches the
//! mean eigenvalue.

use crate::linalg::{eig_hermitian, gram};
use crate::persist::{fmt_f64, CsvTable};
use crate::scatter::ScatteringPair;
use crate::{ComplexMatrix, ComplexVector, Error, Result, C64};

/// Upper end of the eigenvalue range; reached by a pi phase flip between two
/// unitary matrices.
pub const MAX_EIGENVALUE: f64 = 4.0;
/// Eigenvalues this far outside `[0, 4]` are clamped; further out is an error.
pub const CLAMP_SLACK: f64 = 1e-9;
/// Relative agreement required between the per-mode sum and the quadratic form.
pub const DISTANCE_REL_TOL: f64 = 1e-9;
/// Tolerance on `Λ = 2(1 - cos θ)` and on `||S2 v - e^{iθ} S1 v||`.
pub const UNITARY_IDENTITY_TOL: f64 = 1e-7;
/// Overlap magnitude below `1 - DEGENERACY_GAP` marks a mixed eigenvector.
pub const DEGENERACY_GAP: f64 = 1e-6;
/// Eigenvalues at or below this are treated as zero when reporting ratios.
pub const ZERO_EIGENVALUE: f64 = 1e-12;
pub const SPECTRUM_SCHEMA: &str = "helion.spectrum/1";

/// `D12 = (S2 - S1)^† (S2 - S1)`, symmetrized.
pub fn build_discrimination_operator(pair: &ScatteringPair) -> ComplexMatrix {
    gram(&pair.difference()).hermitian_part().expect("gram matrix is square")
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminationSpectrum {
    eigenvalues: Vec<f64>,
    eigenstates: ComplexMatrix,
    mean_eigenvalue: f64,
}

impl DiscriminationSpectrum {
    /// Descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenstates as orthonormal columns, in eigenvalue order.
    pub fn eigenstates(&self) -> &ComplexMatrix {
        &self.eigenstates
    }

    pub fn eigenstate(&self, j: usize) -> ComplexVector {
        self.eigenstates.column(j)
    }

    /// `Tr(D12) / M`.
    pub fn mean_eigenvalue(&self) -> f64 {
        self.mean_eigenvalue
    }

    pub fn leading_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Λ1 / Λ̄`, undefined when every eigenvalue is zero.
    pub fn enhancement(&self) -> Option<f64> {
        (self.leading_eigenvalue() > ZERO_EIGENVALUE)
            .then(|| self.leading_eigenvalue() / self.mean_eigenvalue)
    }

    pub fn count_above(&self, threshold: f64) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > threshold).count()
    }

    /// `index, eigenvalue, eigenvalue_over_mean`, 1-based index.
    pub fn to_table(&self) -> CsvTable {
        let mut table =
            CsvTable::new(SPECTRUM_SCHEMA, &["index", "eigenvalue", "eigenvalue_over_mean"]);
        let defined = self.enhancement().is_some();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let ratio = if defined { l / self.mean_eigenvalue } else { f64::NAN };
            table.push(vec![(j + 1).to_string(), fmt_f64(l), fmt_f64(ratio)]);
        }
        table
    }
}

/// Rotates `v` so its largest-magnitude entry (first one on ties) is real
/// positive.
fn fix_global_phase(v: &ComplexVector) -> ComplexVector {
    let mut best = 0;
    for (k, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() {
            best = k;
        }
    }
    let pivot = v[best];
    if pivot.norm() == 0.0 {
        return v.clone();
    }
    v.scale(pivot.conj() / pivot.norm())
}

pub fn spectrum(d12: &ComplexMatrix) -> Result<DiscriminationSpectrum> {
    let eig = eig_hermitian(d12)?;
    let m = eig.eigenvalues.len();
    let mut eigenvalues = Vec::with_capacity(m);
    for &l in &eig.eigenvalues {
        if !(-CLAMP_SLACK..=MAX_EIGENVALUE + CLAMP_SLACK).contains(&l) {
            return Err(Error::Numeric(format!(
                "eigenvalue {l:e} outside [0, 4]; the scattering pair is not physical"
            )));
        }
        eigenvalues.push(l.clamp(0.0, MAX_EIGENVALUE));
    }
    let columns: Vec<ComplexVector> =
        (0..m).map(|j| fix_global_phase(&eig.eigenvectors.column(j))).collect();
    let eigenstates = ComplexMatrix::from_columns(&columns)?;
    let mean_eigenvalue = eigenvalues.iter().sum::<f64>() / m as f64;
    Ok(DiscriminationSpectrum { eigenvalues, eigenstates, mean_eigenvalue })
}

/// Unit-norm incident field with a photon budget.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeState {
    amplitudes: ComplexVector,
    photons: f64,
}

impl ProbeState {
    pub const NORM_TOL: f64 = 1e-10;

    pub fn new(amplitudes: ComplexVector, photons: f64) -> Result<Self> {
        check_photons(photons)?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::Validation(format!("probe state has norm {norm}, expected 1")));
        }
        Ok(Self { amplitudes, photons })
    }

    /// Normalizes `field` first. Fails on the zero vector.
    pub fn from_field(field: &ComplexVector, photons: f64) -> Result<Self> {
        let amplitudes = field
            .normalized()
            .ok_or_else(|| Error::Validation("cannot normalize a zero field".into()))?;
        Self::new(amplitudes, photons)
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn photons(&self) -> f64 {
        self.photons
    }

    pub fn with_photons(&self, photons: f64) -> Result<Self> {
        check_photons(photons)?;
        Ok(Self { amplitudes: self.amplitudes.clone(), photons })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.dim()
    }
}

fn check_photons(photons: f64) -> Result<()> {
    if !(photons >= 0.0 && photons.is_finite()) {
        return Err(Error::Validation(format!("photon number {photons} must be finite and >= 0")));
    }
    Ok(())
}

/// Leading eigenvector of `D12`.
pub fn optimal_state(spec: &DiscriminationSpectrum, photons: f64) -> Result<ProbeState> {
    ProbeState::new(spec.eigenstate(0), photons)
}

/// `(1/√M) Σ_j v_j`.
pub fn average_state(spec: &DiscriminationSpectrum, photons: f64) -> Result<ProbeState> {
    let m = spec.dim();
    let v = spec.eigenstates();
    let w = 1.0 / (m as f64).sqrt();
    let data = (0..m).map(|i| v.row(i).iter().sum::<C64>() * w).collect();
    ProbeState::new(ComplexVector::new(data)?, photons)
}

/// `Re <x| D |x>`.
pub fn quadratic_form(d12: &ComplexMatrix, x: &ComplexVector) -> Result<f64> {
    Ok(x.dot(&d12.mul_vec(x)?)?.re)
}

/// Squared statistical distance `d12^2` for a probe state.
pub fn statistical_distance(pair: &ScatteringPair, state: &ProbeState) -> Result<f64> {
    statistical_distance_with(pair, &build_discrimination_operator(pair), state)
}

/// As [`statistical_distance`] with a prebuilt operator.
///
/// Evaluates both the per-mode sum `Σ_k |E2_k - E1_k|^2` and the quadratic
/// form, errors if they disagree, and returns the quadratic form.
pub fn statistical_distance_with(
    pair: &ScatteringPair,
    d12: &ComplexMatrix,
    state: &ProbeState,
) -> Result<f64> {
    let x = state.amplitudes();
    if x.dim() != pair.m_in() {
        return Err(Error::Dimension(format!(
            "state of dimension {} for {} incident modes",
            x.dim(),
            pair.m_in()
        )));
    }
    let e1 = pair.s1().mul_vec(x)?;
    let e2 = pair.s2().mul_vec(x)?;
    let per_mode: f64 = e1.iter().zip(e2.iter()).map(|(a, b)| (b - a).norm_sqr()).sum();
    let form = quadratic_form(d12, x)?;
    let tol = DISTANCE_REL_TOL * per_mode.abs().max(form.abs()) + 1e-12 * d12.frobenius_norm();
    if (per_mode - form).abs() > tol {
        return Err(Error::Consistency(format!(
            "per-mode distance {per_mode:e} vs quadratic form {form:e}"
        )));
    }
    Ok(form)
}

/// Output phase shift carried by one eigenstate of a unitary pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseRecord {
    pub eigenvalue: f64,
    /// `arg <S1 v | S2 v>`.
    pub theta: f64,
    /// `||S2 v - e^{iθ} S1 v||`.
    pub residual: f64,
    pub overlap: f64,
    /// The eigenvector mixes invariant modes of different phase; the
    /// identity checks do not apply to it.
    pub degenerate: bool,
}

impl PhaseRecord {
    pub fn predicted_eigenvalue(&self) -> f64 {
        2.0 * (1.0 - self.theta.cos())
    }

    pub fn satisfies_identity(&self) -> bool {
        (self.eigenvalue - self.predicted_eigenvalue()).abs() <= UNITARY_IDENTITY_TOL
            && self.residual <= UNITARY_IDENTITY_TOL
    }
}

/// For a unitary pair, each eigenstate `v` of `D12` leaves the system with
/// `S2 v = e^{iθ} S1 v` and `Λ = 2(1 - cos θ)`.
///
/// Eigenvectors flagged degenerate are reported but not checked.
pub fn unitary_phase_analysis(
    pair: &ScatteringPair,
    spec: &DiscriminationSpectrum,
) -> Result<Vec<PhaseRecord>> {
    if !pair.is_unitary() {
        return Err(Error::Precondition("phase analysis requires a unitary pair".into()));
    }
    if spec.dim() != pair.m_in() {
        return Err(Error::Dimension(format!(
            "spectrum of dimension {} for {} incident modes",
            spec.dim(),
            pair.m_in()
        )));
    }
    let mut records = Vec::with_capacity(spec.dim());
    for (j, &eigenvalue) in spec.eigenvalues().iter().enumerate() {
        let v = spec.eigenstate(j);
        let u = pair.s1().mul_vec(&v)?;
        let w = pair.s2().mul_vec(&v)?;
        let ov = u.dot(&w)?;
        let theta = ov.arg();
        let residual = w.sub(&u.scale(C64::from_polar(1.0, theta)))?.norm();
        let overlap = ov.norm();
        let record = PhaseRecord {
            eigenvalue,
            theta,
            residual,
            overlap,
            degenerate: overlap < 1.0 - DEGENERACY_GAP,
        };
        if !record.degenerate && !record.satisfies_identity() {
            return Err(Error::Consistency(format!(
                "eigenstate {j}: Λ = {eigenvalue:e}, 2(1 - cos θ) = {:e}, residual {residual:e}",
                record.predicted_eigenvalue()
            )));
        }
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scatter::{gen_random_unitary, gen_system, LossModel, SystemConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn flip_pair() -> ScatteringPair {
        ScatteringPair::from_matrices(
            ComplexMatrix::identity(2),
            ComplexMatrix::from_diag(&[c(-1.0), c(1.0)]),
        )
        .unwrap()
    }

    fn system(m: usize, pixels: Vec<usize>, model: LossModel, seed: u64) -> ScatteringPair {
        gen_system(&SystemConfig {
            m_in: m,
            n_out: m,
            n_plane: m,
            target_pixels: pixels,
            target_transmittance: if model == LossModel::UnitaryEmbed { 1.0 } else { 0.4 },
            target_phase: 2.0,
            loss_model: model,
            seed,
        })
        .unwrap()
    }

    fn random_unit(m: usize, rng: &mut ChaCha8Rng) -> ComplexVector {
        let v = ComplexVector::new(
            (0..m).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
        )
        .unwrap();
        v.normalized().unwrap()
    }

    #[test]
    fn operator_of_identical_pair_is_zero() {
        let s = gen_random_unitary(4, 1);
        let pair = ScatteringPair::from_matrices(s.clone(), s).unwrap();
        assert_eq!(build_discrimination_operator(&pair).max_abs(), 0.0);
    }

    #[test]
    fn operator_of_sign_flip() {
        let d = build_discrimination_operator(&flip_pair());
        assert!(d.max_abs_diff(&ComplexMatrix::from_diag(&[c(4.0), c(0.0)])) < 1e-15);
    }

    #[test]
    fn operator_matches_naive_sum() {
        let pair = system(5, vec![1, 3], LossModel::GinibreSubunitary, 8);
        let d = build_discrimination_operator(&pair);
        let delta = pair.difference();
        for j in 0..5 {
            for k in 0..5 {
                let mut acc = c(0.0);
                for i in 0..delta.rows() {
                    acc += delta[(i, j)].conj() * delta[(i, k)];
                }
                assert!((d[(j, k)] - acc).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn spectrum_of_diagonal() {
        let spec = spectrum(&ComplexMatrix::from_diag(&[c(4.0), c(0.0)])).unwrap();
        assert_eq!(spec.eigenvalues(), &[4.0, 0.0]);
        assert_eq!(spec.mean_eigenvalue(), 2.0);
        let opt = optimal_state(&spec, 1.0).unwrap();
        assert!((opt.amplitudes()[0] - c(1.0)).norm() < 1e-15);
        let avg = average_state(&spec, 1.0).unwrap();
        let d = ComplexMatrix::from_diag(&[c(4.0), c(0.0)]);
        assert!((quadratic_form(&d, avg.amplitudes()).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn spectrum_rank_follows_target_size() {
        for k in 1..=5 {
            let pair = system(12, (0..k).collect(), LossModel::GinibreSubunitary, k as u64);
            let spec = spectrum(&build_discrimination_operator(&pair)).unwrap();
            assert_eq!(spec.count_above(1e-9), k);
        }
    }

    #[test]
    fn mean_eigenvalue_is_normalized_trace() {
        let pair = system(9, vec![0, 4, 7], LossModel::GinibreSubunitary, 3);
        let d = build_discrimination_operator(&pair);
        let spec = spectrum(&d).unwrap();
        let trace = d.trace().re / 9.0;
        assert!((spec.mean_eigenvalue() - trace).abs() <= 1e-10 * trace);
    }

    #[test]
    fn spectrum_rejects_out_of_range() {
        let d = ComplexMatrix::from_diag(&[c(4.1), c(0.0)]);
        assert!(matches!(spectrum(&d), Err(Error::Numeric(_))));
        let d = ComplexMatrix::from_diag(&[c(-1e-6), c(0.0)]);
        assert!(matches!(spectrum(&d), Err(Error::Numeric(_))));
        // inside the slack window: clamped
        let d = ComplexMatrix::from_diag(&[c(4.0 + 5e-10), c(-5e-10)]);
        assert_eq!(spectrum(&d).unwrap().eigenvalues(), &[4.0, 0.0]);
    }

    #[test]
    fn eigenvector_phase_convention() {
        let pair = system(6, vec![1], LossModel::GinibreSubunitary, 4);
        let spec = spectrum(&build_discrimination_operator(&pair)).unwrap();
        for j in 0..6 {
            let v = spec.eigenstate(j);
            let big = v.iter().fold(c(0.0), |acc, &z| if z.norm() > acc.norm() { z } else { acc });
            assert!(big.im.abs() < 1e-15 && big.re > 0.0);
        }
    }

    #[test]
    fn optimal_state_beats_random_states() {
        let pair = system(16, vec![2, 9], LossModel::GinibreSubunitary, 5);
        let d = build_discrimination_operator(&pair);
        let spec = spectrum(&d).unwrap();
        let opt = optimal_state(&spec, 10.0).unwrap();
        assert_eq!(opt.photons(), 10.0);
        let top = spec.leading_eigenvalue();
        assert!((quadratic_form(&d, opt.amplitudes()).unwrap() - top).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = random_unit(16, &mut rng);
            let q = quadratic_form(&d, &x).unwrap();
            assert!(q <= top + 1e-9);
            assert!(q >= -1e-12);
        }
    }

    #[test]
    fn average_state_reaches_mean() {
        for seed in 0..4 {
            let pair = system(10, vec![seed as usize], LossModel::GinibreSubunitary, seed);
            let d = build_discrimination_operator(&pair);
            let spec = spectrum(&d).unwrap();
            let avg = average_state(&spec, 0.0).unwrap();
            assert!((avg.amplitudes().norm() - 1.0).abs() < 1e-10);
            let q = quadratic_form(&d, avg.amplitudes()).unwrap();
            assert!((q - spec.mean_eigenvalue()).abs() <= 1e-10 * spec.mean_eigenvalue());
        }
    }

    #[test]
    fn distance_simple_cases() {
        let s = ComplexMatrix::identity(2);
        let same = ScatteringPair::from_matrices(s.clone(), s).unwrap();
        let e1 = ProbeState::new(ComplexVector::basis(2, 0), 1.0).unwrap();
        assert_eq!(statistical_distance(&same, &e1).unwrap(), 0.0);
        assert!((statistical_distance(&flip_pair(), &e1).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn distance_matches_per_mode_oracle() {
        let pair = system(7, vec![3], LossModel::GinibreSubunitary, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_unit(7, &mut rng);
        let state = ProbeState::new(x.clone(), 1.0).unwrap();
        let mut oracle = 0.0;
        for k in 0..7 {
            let mut diff = c(0.0);
            for j in 0..7 {
                diff += (pair.s2()[(k, j)] - pair.s1()[(k, j)]) * x[j];
            }
            oracle += diff.norm_sqr();
        }
        let got = statistical_distance(&pair, &state).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn distance_checks_dimension() {
        let state = ProbeState::new(ComplexVector::basis(3, 0), 1.0).unwrap();
        assert!(matches!(statistical_distance(&flip_pair(), &state), Err(Error::Dimension(_))));
    }

    #[test]
    fn probe_state_validation() {
        assert!(ProbeState::new(ComplexVector::from_real(&[1.0, 1.0]).unwrap(), 1.0).is_err());
        assert!(ProbeState::new(ComplexVector::basis(2, 0), -1.0).is_err());
        assert!(ProbeState::from_field(&ComplexVector::zeros(2), 1.0).is_err());
        let p = ProbeState::from_field(&ComplexVector::from_real(&[3.0, 4.0]).unwrap(), 2.0).unwrap();
        assert!((p.amplitudes()[1].re - 0.8).abs() < 1e-15);
    }

    #[test]
    fn phase_analysis_sign_flip() {
        let pair = flip_pair();
        let spec = spectrum(&build_discrimination_operator(&pair)).unwrap();
        let rec = unitary_phase_analysis(&pair, &spec).unwrap();
        assert!((rec[0].theta.abs() - std::f64::consts::PI).abs() < 1e-12);
        assert!((rec[0].predicted_eigenvalue() - 4.0).abs() < 1e-12);
        assert!(rec[1].theta.abs() < 1e-12);
    }

    #[test]
    fn phase_analysis_identical_pair() {
        let s = gen_random_unitary(5, 3);
        let pair = ScatteringPair::from_matrices(s.clone(), s).unwrap();
        let spec = spectrum(&build_discrimination_operator(&pair)).unwrap();
        for r in unitary_phase_analysis(&pair, &spec).unwrap() {
            assert_eq!(r.eigenvalue, 0.0);
            assert!(r.theta.abs() < 1e-12);
        }
    }

    #[test]
    fn phase_analysis_haar_with_phase_mask() {
        let pair = system(16, vec![5], LossModel::UnitaryEmbed, 12);
        assert!(pair.is_unitary());
        let spec = spectrum(&build_discrimination_operator(&pair)).unwrap();
        let records = unitary_phase_analysis(&pair, &spec).unwrap();
        assert!((records[0].eigenvalue - 2.0 * (1.0 - 2f64.cos())).abs() < 1e-9);
        assert!(records.iter().all(|r| r.degenerate || r.satisfies_identity()));
    }

    #[test]
    fn phase_analysis_requires_unitary() {
        let pair = system(6, vec![1], LossModel::GinibreSubunitary, 1);
        let spec = spectrum(&build_discrimination_operator(&pair)).unwrap();
        assert!(matches!(unitary_phase_analysis(&pair, &spec), Err(Error::Precondition(_))));
    }

    #[test]
    fn enhancement_undefined_without_target() {
        let s = gen_random_unitary(3, 9);
        let pair = ScatteringPair::from_matrices(s.clone(), s).unwrap();
        let spec = spectrum(&build_discrimination_operator(&pair)).unwrap();
        assert_eq!(spec.enhancement(), None);
        assert!(spec.to_table().to_csv().contains("nan"));
    }
}
