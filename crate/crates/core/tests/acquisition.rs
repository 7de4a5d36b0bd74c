use helion::acquire::{acquisition_study, end_to_end_spectrum, measure_matrix, AcquisitionConfig, ProbeBasis};
use helion::discrim::{build_discrimination_operator, spectrum};
use helion::scatter::{gen_system, Hypothesis, LossModel, ScatteringPair, SystemConfig};

fn system(m: usize, pixels: Vec<usize>, seed: u64) -> ScatteringPair {
    gen_system(&SystemConfig {
        m_in: m,
        n_out: m,
        n_plane: m,
        target_pixels: pixels,
        target_transmittance: 0.2,
        target_phase: 0.3,
        loss_model: LossModel::GinibreSubunitary,
        seed,
    })
    .unwrap()
}

#[test]
fn estimator_is_unbiased_with_expected_variance() {
    let pair = system(4, vec![1], 1);
    let n0 = 100.0;
    let repeats = 10_000;
    let truth = pair.s2();
    let entries = 16;
    let mut sum = vec![[0.0f64; 2]; entries];
    let mut sum_sq = vec![[0.0f64; 2]; entries];
    for r in 0..repeats {
        let cfg = AcquisitionConfig::new(n0, 50_000 + r);
        let est = measure_matrix(&pair, Hypothesis::H2, &cfg).unwrap();
        for (k, (e, t)) in est.as_slice().iter().zip(truth.as_slice()).enumerate() {
            let d = e - t;
            for (q, x) in [d.re, d.im].into_iter().enumerate() {
                sum[k][q] += x;
                sum_sq[k][q] += x * x;
            }
        }
    }
    let expected_var = 0.5 / n0;
    let reps = repeats as f64;
    let mut pooled = 0.0;
    for k in 0..entries {
        for q in 0..2 {
            let mean = sum[k][q] / reps;
            let var = (sum_sq[k][q] - reps * mean * mean) / (reps - 1.0);
            // Sixteen entries times two quadratures: a slightly wider band per entry.
            assert!(mean.abs() < 4.0 * (expected_var / reps).sqrt(), "entry {k}/{q} bias {mean}");
            assert!(
                (var - expected_var).abs() < 4.0 * expected_var * (2.0 / (reps - 1.0)).sqrt(),
                "entry {k}/{q} variance {var}"
            );
            pooled += var;
        }
    }
    pooled /= (2 * entries) as f64;
    let se = expected_var * (2.0 / (2.0 * entries as f64 * (reps - 1.0))).sqrt();
    assert!((pooled - expected_var).abs() < 3.0 * se, "pooled variance {pooled} vs {expected_var}");
}

#[test]
fn noise_floor_scales_inversely_with_photons() {
    let k = 2;
    let pair = system(16, vec![3, 11], 2);
    let clean = spectrum(&build_discrimination_operator(&pair)).unwrap();
    assert_eq!(clean.count_above(1e-9), k);

    let floor = |n0: f64| {
        let spec = end_to_end_spectrum(&pair, &AcquisitionConfig::new(n0, 6)).unwrap();
        (spec.eigenvalues()[k], spec.eigenvalues()[k - 1])
    };
    let (lo_floor, _) = floor(1e4);
    let (hi_floor, hi_kth) = floor(1e6);
    let ratio = lo_floor / hi_floor;
    assert!((50.0..200.0).contains(&ratio), "floor ratio {ratio} for a 100x photon increase");
    assert!(hi_floor < clean.eigenvalues()[k - 1] && hi_floor < hi_kth);
    let c = hi_floor * 1e6 / 0.5;
    println!("noise-floor constant c = {c:.3} (M = N = 16)");
    assert!(c > 0.0);
}

#[test]
fn leading_eigenvalue_recovered_at_high_photon_number() {
    let pair = system(32, vec![9], 3);
    let clean = spectrum(&build_discrimination_operator(&pair)).unwrap();
    let noisy = end_to_end_spectrum(&pair, &AcquisitionConfig::new(1e8, 4)).unwrap();
    let r = noisy.leading_eigenvalue() / clean.leading_eigenvalue();
    assert!((0.9..=1.1).contains(&r), "ratio {r}");
}

#[test]
fn eta_d_in_band_on_small_system() {
    let pair = system(8, vec![2], 4);
    for basis in [ProbeBasis::Canonical, ProbeBasis::PlaneWaveLike] {
        let cfg = AcquisitionConfig { probe_basis: basis, ..AcquisitionConfig::new(1e8, 8) };
        let report = acquisition_study(&pair, &cfg).unwrap();
        assert!((0.9..=1.1).contains(&report.eta_d), "{basis:?}: eta_d = {}", report.eta_d);
        assert!(report.fidelity.iter().all(|f| f.corr_magnitude > 0.999));
    }
}

#[test]
fn noiseless_run_has_unit_eta() {
    let pair = system(8, vec![5], 5);
    let cfg = AcquisitionConfig { sigma_sq: 1e-20, ..AcquisitionConfig::new(1e3, 1) };
    let report = acquisition_study(&pair, &cfg).unwrap();
    assert!((report.eta_d - 1.0).abs() < 1e-9);
    let clean = spectrum(&build_discrimination_operator(&pair)).unwrap();
    for (a, b) in report.spectrum.eigenvalues().iter().zip(clean.eigenvalues()) {
        assert!((a - b).abs() < 1e-7);
    }
}

#[test]
fn phase_jitter_degrades_fidelity() {
    let pair = system(8, vec![5], 6);
    let base = AcquisitionConfig { sigma_sq: 1e-20, ..AcquisitionConfig::new(1e6, 2) };
    let jittered = AcquisitionConfig { phase_jitter_rad: 0.3, ..base.clone() };
    let clean = acquisition_study(&pair, &base).unwrap();
    let rough = acquisition_study(&pair, &jittered).unwrap();
    assert!(rough.fidelity[0].corr_magnitude < clean.fidelity[0].corr_magnitude);
    assert!(rough.eta_d < 1.0);
}
