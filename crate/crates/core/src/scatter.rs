//! Synthetic scattering systems.
//!
//! A system is two random propagators sandwiching the target plane:
//! `S_i = B · diag(mask_i) · A`, where `A` (P x M) carries the incident
//! modes to the P target-plane pixels and `B` (N x P) carries the plane to
//! the N outgoing modes. Without the target the mask is all ones; with it,
//! the target pixels are multiplied by `t · e^{iφ}`.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::{largest_singular_value, read_cmx, write_cmx};
use crate::rng::{self, StreamRng, GENERATOR_ID};
use crate::{persist, ComplexMatrix, ComplexVector, Error, Result, C64};

/// Largest singular value the subunitary model is rescaled to.
pub const SUBUNITARY_SIGMA_MAX: f64 = 0.95;
/// Max entry of `S^† S - I` for a matrix to count as unitary.
pub const UNITARY_TOL: f64 = 1e-9;
pub const PAIR_FORMAT: &str = "helion.pair/1";

/// Which configuration of the system is being probed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Target absent, `S1`.
    H1,
    /// Target present, `S2`.
    H2,
}

impl Hypothesis {
    pub fn label(self) -> u8 {
        match self {
            Hypothesis::H1 => 1,
            Hypothesis::H2 => 2,
        }
    }

    pub fn from_label(label: u8) -> Result<Self> {
        match label {
            1 => Ok(Hypothesis::H1),
            2 => Ok(Hypothesis::H2),
            other => Err(Error::Validation(format!("hypothesis label {other}, expected 1 or 2"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossModel {
    /// Square Haar-unitary propagators; lossless when the mask is a pure phase.
    UnitaryEmbed,
    /// Ginibre propagators, rescaled so the larger of `σ_max(S1)`,
    /// `σ_max(S2)` equals [`SUBUNITARY_SIGMA_MAX`].
    GinibreSubunitary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub m_in: usize,
    pub n_out: usize,
    pub n_plane: usize,
    pub target_pixels: Vec<usize>,
    pub target_transmittance: f64,
    pub target_phase: f64,
    pub loss_model: LossModel,
    pub seed: u64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_in == 0 || self.n_out == 0 || self.n_plane == 0 {
            return Err(Error::Validation(format!(
                "mode counts must be positive (m_in={}, n_out={}, n_plane={})",
                self.m_in, self.n_out, self.n_plane
            )));
        }
        let mut seen = HashSet::new();
        for &p in &self.target_pixels {
            if p >= self.n_plane {
                return Err(Error::Validation(format!(
                    "target pixel {p} outside plane of {} pixels",
                    self.n_plane
                )));
            }
            if !seen.insert(p) {
                return Err(Error::Validation(format!("duplicate target pixel {p}")));
            }
        }
        if !(0.0..=1.0).contains(&self.target_transmittance) {
            return Err(Error::Validation(format!(
                "target_transmittance {} outside [0, 1]",
                self.target_transmittance
            )));
        }
        if !self.target_phase.is_finite() {
            return Err(Error::Validation("target_phase must be finite".into()));
        }
        if self.loss_model == LossModel::UnitaryEmbed
            && !(self.m_in == self.n_out && self.n_out == self.n_plane)
        {
            return Err(Error::Validation(format!(
                "unitary_embed requires m_in = n_out = n_plane (got {}, {}, {})",
                self.m_in, self.n_out, self.n_plane
            )));
        }
        Ok(())
    }

    /// Target-plane masks `(mask1, mask2)`.
    pub fn masks(&self) -> (Vec<C64>, Vec<C64>) {
        let mask1 = vec![C64::new(1.0, 0.0); self.n_plane];
        let mut mask2 = mask1.clone();
        let value = C64::from_polar(self.target_transmittance, self.target_phase);
        for &p in &self.target_pixels {
            mask2[p] = value;
        }
        (mask1, mask2)
    }
}

/// Intermediate structure of a synthesized pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagators {
    /// Input side, P x M.
    pub a: ComplexMatrix,
    /// Output side, N x P.
    pub b: ComplexMatrix,
    pub mask1: Vec<C64>,
    pub mask2: Vec<C64>,
    pub config: SystemConfig,
}

impl Propagators {
    pub fn mask(&self, hyp: Hypothesis) -> &[C64] {
        match hyp {
            Hypothesis::H1 => &self.mask1,
            Hypothesis::H2 => &self.mask2,
        }
    }
}

/// Scattering matrices for the two hypotheses.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringPair {
    s1: ComplexMatrix,
    s2: ComplexMatrix,
    propagators: Option<Propagators>,
    sigma_max: f64,
    unitary: bool,
}

impl ScatteringPair {
    /// Wraps two measured or hand-built matrices; no propagators attached.
    pub fn from_matrices(s1: ComplexMatrix, s2: ComplexMatrix) -> Result<Self> {
        Self::assemble(s1, s2, None)
    }

    fn assemble(
        s1: ComplexMatrix,
        s2: ComplexMatrix,
        propagators: Option<Propagators>,
    ) -> Result<Self> {
        if s1.shape() != s2.shape() {
            return Err(Error::Dimension(format!(
                "S1 is {}x{} but S2 is {}x{}",
                s1.rows(),
                s1.cols(),
                s2.rows(),
                s2.cols()
            )));
        }
        let sigma_max = largest_singular_value(&s1).max(largest_singular_value(&s2));
        let unitary = s1.is_square()
            && s1.unitarity_defect() <= UNITARY_TOL
            && s2.unitarity_defect() <= UNITARY_TOL;
        Ok(Self { s1, s2, propagators, sigma_max, unitary })
    }

    pub fn s1(&self) -> &ComplexMatrix {
        &self.s1
    }

    pub fn s2(&self) -> &ComplexMatrix {
        &self.s2
    }

    pub fn s(&self, hyp: Hypothesis) -> &ComplexMatrix {
        match hyp {
            Hypothesis::H1 => &self.s1,
            Hypothesis::H2 => &self.s2,
        }
    }

    pub fn propagators(&self) -> Option<&Propagators> {
        self.propagators.as_ref()
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn is_physical(&self) -> bool {
        self.sigma_max <= 1.0 + 1e-9
    }

    /// Number of incident modes M.
    pub fn m_in(&self) -> usize {
        self.s1.cols()
    }

    /// Number of outgoing modes N.
    pub fn n_out(&self) -> usize {
        self.s1.rows()
    }

    pub fn difference(&self) -> ComplexMatrix {
        self.s2.sub(&self.s1).expect("shapes checked at construction")
    }
}

fn ginibre_from(rng: &mut StreamRng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| rng::complex_normal(rng, 0.5))
}

/// Haar unitary from the QR factorization of a Ginibre matrix.
///
/// Classical Gram-Schmidt with one reorthogonalization pass. The `R`
/// diagonal produced this way is already real positive, which is the phase
/// convention that makes `Q` Haar distributed.
fn unitary_from(rng: &mut StreamRng, dim: usize) -> ComplexMatrix {
    let z = ginibre_from(rng, dim, dim);
    let mut q: Vec<ComplexVector> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v = z.column(j);
        for _pass in 0..2 {
            for u in &q {
                let proj = u.dot(&v).expect("same length");
                v = v.sub(&u.scale(proj)).expect("same length");
            }
        }
        let r = v.norm();
        q.push(v.scale(C64::new(1.0 / r, 0.0)));
    }
    ComplexMatrix::from_columns(&q).expect("non-empty, equal columns")
}

/// i.i.d. circular complex Gaussian entries with variance 1/2 per quadrature.
pub fn gen_ginibre(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    ginibre_from(&mut rng::substream(seed, 0), rows, cols)
}

pub fn gen_random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    unitary_from(&mut rng::substream(seed, 0), dim)
}

fn sandwich(a: &ComplexMatrix, b: &ComplexMatrix, mask: &[C64]) -> Result<ComplexMatrix> {
    b.scale_columns(mask)?.matmul(a)
}

/// Builds `(S1, S2)` for the configured system.
///
/// `A` is drawn from stream 0 of `config.seed` and `B` from stream 1.
pub fn gen_system(config: &SystemConfig) -> Result<ScatteringPair> {
    config.validate()?;
    let (mask1, mask2) = config.masks();
    let mut rng_a = rng::substream(config.seed, 0);
    let mut rng_b = rng::substream(config.seed, 1);
    let (a, b) = match config.loss_model {
        LossModel::UnitaryEmbed => {
            (unitary_from(&mut rng_a, config.n_plane), unitary_from(&mut rng_b, config.n_plane))
        }
        LossModel::GinibreSubunitary => {
            let a = ginibre_from(&mut rng_a, config.n_plane, config.m_in);
            let b = ginibre_from(&mut rng_b, config.n_out, config.n_plane);
            let s1 = sandwich(&a, &b, &mask1)?;
            let s2 = sandwich(&a, &b, &mask2)?;
            let sigma = largest_singular_value(&s1).max(largest_singular_value(&s2));
            if !(sigma > 0.0) {
                return Err(Error::Numeric("synthesized system has zero response".into()));
            }
            let b = b.scale(C64::new(SUBUNITARY_SIGMA_MAX / sigma, 0.0));
            (a, b)
        }
    };
    let s1 = sandwich(&a, &b, &mask1)?;
    let s2 = sandwich(&a, &b, &mask2)?;
    let propagators = Propagators { a, b, mask1, mask2, config: config.clone() };
    ScatteringPair::assemble(s1, s2, Some(propagators))
}

/// Field just after the target plane: `diag(mask_hyp) · A · state`.
pub fn target_plane_field(
    pair: &ScatteringPair,
    state: &ComplexVector,
    hyp: Hypothesis,
) -> Result<ComplexVector> {
    let props = pair
        .propagators()
        .ok_or_else(|| Error::Precondition("pair has no target-plane propagators".into()))?;
    if state.dim() != pair.m_in() {
        return Err(Error::Dimension(format!(
            "state of dimension {} for a system with {} incident modes",
            state.dim(),
            pair.m_in()
        )));
    }
    let field = props.a.mul_vec(state)?;
    let data = field.iter().zip(props.mask(hyp)).map(|(f, m)| f * m).collect();
    ComplexVector::new(data)
}

/// Share of target-plane intensity (without the target) landing on the
/// target pixels.
pub fn target_intensity_fraction(pair: &ScatteringPair, state: &ComplexVector) -> Result<f64> {
    let field = target_plane_field(pair, state, Hypothesis::H1)?;
    let intensity = field.intensity();
    let total: f64 = intensity.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let props = pair.propagators().expect("checked by target_plane_field");
    let on_target: f64 = props.config.target_pixels.iter().map(|&p| intensity[p]).sum();
    Ok(on_target / total)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairMeta {
    format: String,
    generator: String,
    config: Option<SystemConfig>,
    m_in: usize,
    n_out: usize,
    sigma_max: f64,
    unitary: bool,
}

/// Writes `s1.cmx`, `s2.cmx`, `a.cmx`, `b.cmx` (when available) and
/// `meta.json` into `dir`.
pub fn save_pair(dir: &Path, pair: &ScatteringPair) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_cmx(dir.join("s1.cmx"), pair.s1())?;
    write_cmx(dir.join("s2.cmx"), pair.s2())?;
    if let Some(p) = pair.propagators() {
        write_cmx(dir.join("a.cmx"), &p.a)?;
        write_cmx(dir.join("b.cmx"), &p.b)?;
    }
    let meta = PairMeta {
        format: PAIR_FORMAT.into(),
        generator: GENERATOR_ID.into(),
        config: pair.propagators().map(|p| p.config.clone()),
        m_in: pair.m_in(),
        n_out: pair.n_out(),
        sigma_max: pair.sigma_max(),
        unitary: pair.is_unitary(),
    };
    persist::write_json(&dir.join("meta.json"), &meta)
}

pub fn load_pair(dir: &Path) -> Result<ScatteringPair> {
    let meta_path = dir.join("meta.json");
    let meta: PairMeta = persist::read_json(&meta_path)?;
    if meta.format != PAIR_FORMAT {
        return Err(Error::Format {
            path: meta_path,
            message: format!("unsupported pair format {:?}", meta.format),
        });
    }
    let s1 = read_cmx(dir.join("s1.cmx"))?;
    let s2 = read_cmx(dir.join("s2.cmx"))?;
    let propagators = match meta.config {
        Some(config) if dir.join("a.cmx").exists() => {
            config.validate()?;
            let a = read_cmx(dir.join("a.cmx"))?;
            let b = read_cmx(dir.join("b.cmx"))?;
            if a.shape() != (config.n_plane, config.m_in) || b.shape() != (config.n_out, config.n_plane)
            {
                return Err(Error::Format {
                    path: dir.to_path_buf(),
                    message: "propagator shapes disagree with meta.json config".into(),
                });
            }
            let (mask1, mask2) = config.masks();
            Some(Propagators { a, b, mask1, mask2, config })
        }
        _ => None,
    };
    let pair = ScatteringPair::assemble(s1, s2, propagators)?;
    if pair.m_in() != meta.m_in || pair.n_out() != meta.n_out {
        return Err(Error::Format {
            path: meta_path,
            message: "matrix shapes disagree with meta.json".into(),
        });
    }
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_hermitian, gram};

    fn config(m: usize, pixels: Vec<usize>, model: LossModel) -> SystemConfig {
        SystemConfig {
            m_in: m,
            n_out: m,
            n_plane: m,
            target_pixels: pixels,
            target_transmittance: 0.3,
            target_phase: 1.1,
            loss_model: model,
            seed: 42,
        }
    }

    #[test]
    fn ginibre_is_deterministic() {
        assert_eq!(gen_ginibre(5, 4, 9), gen_ginibre(5, 4, 9));
        assert_ne!(gen_ginibre(5, 4, 9), gen_ginibre(5, 4, 10));
    }

    #[test]
    fn ginibre_moments() {
        let g = gen_ginibre(1000, 1000, 3);
        let n = 1e6;
        let mean_sq = g.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        assert!((mean_sq - 1.0).abs() < 0.05, "mean |z|^2 = {mean_sq}");
        // cov(Re, Im) has standard error ~ 0.5 / sqrt(n)
        let cov = g.as_slice().iter().map(|z| z.re * z.im).sum::<f64>() / n;
        assert!(cov.abs() < 3.0 * 0.5 / n.sqrt(), "cov = {cov}");
    }

    #[test]
    fn random_unitary_properties() {
        let u1 = gen_random_unitary(1, 5);
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-14);
        let u = gen_random_unitary(32, 6);
        assert!(u.unitarity_defect() < 1e-10);
        for i in 0..32 {
            for j in i + 1..32 {
                assert!(u.column(i).dot(&u.column(j)).unwrap().norm() < 1e-10);
            }
        }
    }

    #[test]
    fn no_perturbation_gives_equal_matrices() {
        let mut cfg = config(8, vec![2], LossModel::GinibreSubunitary);
        cfg.target_transmittance = 1.0;
        cfg.target_phase = 0.0;
        let pair = gen_system(&cfg).unwrap();
        assert_eq!(pair.s1(), pair.s2());
    }

    #[test]
    fn unitary_embed_with_sign_flip_stays_unitary() {
        let mut cfg = config(16, vec![3], LossModel::UnitaryEmbed);
        cfg.target_transmittance = 1.0;
        cfg.target_phase = std::f64::consts::PI;
        let pair = gen_system(&cfg).unwrap();
        assert!(pair.is_unitary());
        assert!((largest_singular_value(pair.s1()) - 1.0).abs() < 1e-9);
        assert!((largest_singular_value(pair.s2()) - 1.0).abs() < 1e-9);
        assert!(pair.s1().unitarity_defect() < 1e-9);
        assert!(pair.s2().unitarity_defect() < 1e-9);
    }

    #[test]
    fn lossy_target_in_unitary_embed_is_not_flagged_unitary() {
        let pair = gen_system(&config(8, vec![1], LossModel::UnitaryEmbed)).unwrap();
        assert!(!pair.is_unitary());
        assert!(pair.is_physical());
    }

    #[test]
    fn subunitary_is_rescaled() {
        let mut cfg = config(12, vec![0, 5], LossModel::GinibreSubunitary);
        cfg.n_out = 10;
        cfg.n_plane = 20;
        let pair = gen_system(&cfg).unwrap();
        assert_eq!(pair.s1().shape(), (10, 12));
        assert!((pair.sigma_max() - SUBUNITARY_SIGMA_MAX).abs() < 1e-9);
        assert!(largest_singular_value(pair.s1()) <= 1.0);
        assert!(largest_singular_value(pair.s2()) <= 1.0);
        let p = pair.propagators().unwrap();
        let rebuilt = p.b.scale_columns(&p.mask2).unwrap().matmul(&p.a).unwrap();
        assert!(rebuilt.max_abs_diff(pair.s2()) < 1e-10);
    }

    #[test]
    fn rank_of_difference_matches_target_size() {
        for k in 1..=4 {
            let cfg = config(10, (0..k).map(|i| 2 * i).collect(), LossModel::GinibreSubunitary);
            let pair = gen_system(&cfg).unwrap();
            let e = eig_hermitian(&gram(&pair.difference())).unwrap();
            let rank = e.eigenvalues.iter().filter(|&&l| l > 1e-9).count();
            assert_eq!(rank, k);
        }
    }

    #[test]
    fn system_is_bitwise_deterministic() {
        let cfg = config(8, vec![1, 4], LossModel::GinibreSubunitary);
        assert_eq!(gen_system(&cfg).unwrap(), gen_system(&cfg).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(8, vec![1, 1], LossModel::GinibreSubunitary);
        assert!(matches!(gen_system(&cfg), Err(Error::Validation(_))));
        cfg.target_pixels = vec![8];
        assert!(gen_system(&cfg).is_err());
        cfg.target_pixels = vec![0];
        cfg.target_transmittance = 1.5;
        assert!(gen_system(&cfg).is_err());
        let mut u = config(8, vec![0], LossModel::UnitaryEmbed);
        u.n_plane = 9;
        assert!(matches!(gen_system(&u), Err(Error::Validation(_))));
    }

    #[test]
    fn target_plane_field_basics() {
        let pair = gen_system(&config(6, vec![2], LossModel::GinibreSubunitary)).unwrap();
        let zero = ComplexVector::zeros(6);
        assert_eq!(
            target_plane_field(&pair, &zero, Hypothesis::H2).unwrap(),
            ComplexVector::zeros(6)
        );
        let state = ComplexVector::basis(6, 1);
        let field = target_plane_field(&pair, &state, Hypothesis::H1).unwrap();
        let direct = pair.propagators().unwrap().a.mul_vec(&state).unwrap();
        assert_eq!(field, direct);
        assert!(target_plane_field(&pair, &ComplexVector::zeros(5), Hypothesis::H1).is_err());
        let bare = ScatteringPair::from_matrices(pair.s1().clone(), pair.s2().clone()).unwrap();
        assert!(matches!(
            target_plane_field(&bare, &state, Hypothesis::H1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn pair_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pair = gen_system(&config(6, vec![2], LossModel::GinibreSubunitary)).unwrap();
        save_pair(dir.path(), &pair).unwrap();
        for f in ["s1.cmx", "s2.cmx", "a.cmx", "b.cmx", "meta.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert_eq!(load_pair(dir.path()).unwrap(), pair);

        let bare_dir = tempfile::tempdir().unwrap();
        let bare = ScatteringPair::from_matrices(pair.s1().clone(), pair.s2().clone()).unwrap();
        save_pair(bare_dir.path(), &bare).unwrap();
        assert!(!bare_dir.path().join("a.cmx").exists());
        assert_eq!(load_pair(bare_dir.path()).unwrap(), bare);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let r = ScatteringPair::from_matrices(ComplexMatrix::zeros(2, 3), ComplexMatrix::zeros(3, 2));
        assert!(matches!(r, Err(Error::Dimension(_))));
    }
}
