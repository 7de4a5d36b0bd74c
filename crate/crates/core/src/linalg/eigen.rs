use super::{gram, ComplexMatrix, ComplexVector, C64};
use crate::{Error, Result};

/// Allowed `max |h - h^†|` entry, relative to `max(1, max |h|)`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Off-diagonal Frobenius norm at which Jacobi stops, relative to `||h||_F`.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Relative residual `||G x - λ x|| / λ` at which power iteration stops.
pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITERS: usize = 10_000;

/// Eigen-decomposition of a Hermitian matrix.
///
/// `eigenvalues` are sorted in descending order and column `j` of
/// `eigenvectors` is the eigenvector belonging to `eigenvalues[j]`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
    pub sweeps: usize,
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `h[p][q]` and then
/// applies the real symmetric Jacobi rotation, so the working matrix stays
/// Hermitian with a real diagonal throughout.
pub fn eig_hermitian(h: &ComplexMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::Validation(format!(
            "eigendecomposition of non-square {}x{} matrix",
            h.rows(),
            h.cols()
        )));
    }
    let defect = h.hermitian_defect();
    if defect > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian (max |h - h^†| = {defect:e})"
        )));
    }

    let n = h.rows();
    let mut a = h.hermitian_part()?;
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    let norm = a.frobenius_norm();
    let target = JACOBI_TOL * norm;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Convergence { sweeps, residual: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen { eigenvalues, eigenvectors, sweeps })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Pivot negligible against both diagonal entries: rotating would not
    // change them in floating point.
    if app.abs() + 1e3 * r == app.abs() && aqq.abs() + 1e3 * r == aqq.abs() {
        a[(p, q)] = C64::new(0.0, 0.0);
        a[(q, p)] = C64::new(0.0, 0.0);
        return;
    }

    let phase = apq / r;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // G = diag(1, conj(phase)) · [[c, s], [-s, c]]
    let g00 = C64::new(c, 0.0);
    let g01 = C64::new(s, 0.0);
    let g10 = -phase.conj() * s;
    let g11 = phase.conj() * c;

    let n = a.rows();
    for k in 0..n {
        let x = a[(k, p)];
        let y = a[(k, q)];
        a[(k, p)] = x * g00 + y * g10;
        a[(k, q)] = x * g01 + y * g11;
    }
    for k in 0..n {
        let x = a[(p, k)];
        let y = a[(q, k)];
        a[(p, k)] = g00.conj() * x + g10.conj() * y;
        a[(q, k)] = g01.conj() * x + g11.conj() * y;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(app - t * r, 0.0);
    a[(q, q)] = C64::new(aqq + t * r, 0.0);

    for k in 0..n {
        let x = v[(k, p)];
        let y = v[(k, q)];
        v[(k, p)] = x * g00 + y * g10;
        v[(k, q)] = x * g01 + y * g11;
    }
}

/// Largest singular value by power iteration on `a^† a`.
///
/// Starts from the normalized all-ones vector. If that start lies in the
/// null space of `a`, a fixed quasi-random start is used instead.
pub fn largest_singular_value(a: &ComplexMatrix) -> f64 {
    if a.max_abs() == 0.0 {
        return 0.0;
    }
    let g = gram(a);
    let cols = a.cols();
    let ones = ComplexVector { data: vec![C64::new(1.0, 0.0); cols] };
    let lambda = match power_iterate(&g, ones) {
        Some(l) => l,
        None => {
            let alt = ComplexVector {
                data: (0..cols)
                    .map(|k| C64::from_polar(1.0 + k as f64 / cols as f64, 2.399_963 * k as f64))
                    .collect(),
            };
            power_iterate(&g, alt).unwrap_or(0.0)
        }
    };
    lambda.max(0.0).sqrt()
}

/// Dominant eigenvalue of PSD `g`, or `None` when the start vector is
/// annihilated by `g`.
fn power_iterate(g: &ComplexMatrix, start: ComplexVector) -> Option<f64> {
    let mut x = start.normalized()?;
    let mut best = 0.0f64;
    for _ in 0..POWER_MAX_ITERS {
        let z = g.mul_vec(&x).expect("square gram matrix");
        let lambda = x.dot(&z).expect("same length").re;
        let znorm = z.norm();
        if znorm == 0.0 {
            return (best > 0.0).then_some(best);
        }
        best = best.max(lambda);
        let residual = z.sub(&x.scale(C64::new(lambda, 0.0))).expect("same length").norm();
        if residual <= POWER_TOL * lambda.abs() {
            return Some(best);
        }
        x = z.scale(C64::new(1.0 / znorm, 0.0));
    }
    Some(best)
}
