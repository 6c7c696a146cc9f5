//! Small dense Jacobi solvers: singular values (one-sided, cyclic) and
//! Hermitian eigenvalues (two-sided on the real symmetric embedding).
//!
//! Inputs here are tiny (at most 64x64 flattenings), so plain cyclic sweeps are
//! accurate and fast enough.

use crate::error::{Error, Result};
use crate::scalar::{Scalar, C};
use crate::tensor::Matrix;

/// Maximum number of cyclic sweeps before giving up.
pub const SWEEP_BUDGET: usize = 60;

fn rotation_tol<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0))
}

/// Singular values of `m`, sorted descending.
pub fn singular_values<T: Scalar>(m: &Matrix<T>) -> Result<Vec<T>> {
    // columns are orthogonalized in place; keep the short side as column count
    let a = if m.cols() > m.rows() {
        m.adjoint()
    } else {
        m.clone()
    };
    let (rows, cols) = (a.rows(), a.cols());
    let mut colv: Vec<Vec<C<T>>> = (0..cols)
        .map(|c| (0..rows).map(|r| a.get(r, c)).collect())
        .collect();
    let tol = rotation_tol::<T>();
    let mut converged = false;
    let mut worst = T::zero();
    for _ in 0..SWEEP_BUDGET {
        worst = T::zero();
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: T = colv[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: T = colv[q].iter().map(|z| z.norm_sqr()).sum();
                if alpha == T::zero() || beta == T::zero() {
                    continue;
                }
                let gamma = colv[p]
                    .iter()
                    .zip(&colv[q])
                    .fold(C::new(T::zero(), T::zero()), |acc, (x, y)| {
                        acc + x.conj() * y
                    });
                let g = gamma.norm();
                let rel = g / (alpha * beta).sqrt();
                worst = worst.max(rel);
                if rel <= tol {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (g + g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = colv.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let yq = *y * phase.conj();
                    let xp = *x;
                    *x = xp * c - yq * s;
                    *y = xp * s + yq * c;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: SWEEP_BUDGET,
            residual: worst.as_f64(),
        });
    }
    let mut sv: Vec<T> = colv
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    Ok(sv)
}

/// Sum of singular values (Schatten 1-norm). For an order-2 tensor this is
/// its exact projective norm.
pub fn svd_nuclear_norm<T: Scalar>(m: &Matrix<T>) -> Result<T> {
    Ok(singular_values(m)?.into_iter().sum())
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Works on the real symmetric embedding `[[Re, -Im], [Im, Re]]`, whose
/// spectrum is that of the input with every eigenvalue doubled.
pub fn hermitian_eigenvalues<T: Scalar>(m: &Matrix<T>) -> Result<Vec<T>> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::Shape(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let herm_tol = T::lit(1e-10) * (T::one() + m.frobenius_norm());
    for i in 0..n {
        for j in 0..n {
            if (m.get(i, j) - m.get(j, i).conj()).norm() > herm_tol {
                return Err(Error::Shape("matrix is not Hermitian".into()));
            }
        }
    }
    let k = 2 * n;
    let mut a = vec![T::zero(); k * k];
    for i in 0..n {
        for j in 0..n {
            let z = m.get(i, j);
            a[i * k + j] = z.re;
            a[(i + n) * k + (j + n)] = z.re;
            a[i * k + (j + n)] = -z.im;
            a[(i + n) * k + j] = z.im;
        }
    }
    let mut ev = symmetric_eigenvalues(&mut a, k)?;
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(ev.into_iter().step_by(2).collect())
}

/// Cyclic Jacobi on a real symmetric `k x k` row-major matrix (destroyed).
fn symmetric_eigenvalues<T: Scalar>(a: &mut [T], k: usize) -> Result<Vec<T>> {
    let tol = rotation_tol::<T>();
    let scale = a.iter().map(|x| *x * *x).sum::<T>().sqrt();
    let mut off = T::zero();
    for _ in 0..SWEEP_BUDGET {
        off = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * k + j] * a[i * k + j])
            .sum::<T>()
            .sqrt();
        if off <= tol * scale || scale == T::zero() {
            return Ok((0..k).map(|i| a[i * k + i]).collect());
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = a[p * k + q];
                if apq.abs() <= tol * T::lit(1e-3) * scale {
                    continue;
                }
                let theta = (a[q * k + q] - a[p * k + p]) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for r in 0..k {
                    let arp = a[r * k + p];
                    let arq = a[r * k + q];
                    a[r * k + p] = c * arp - s * arq;
                    a[r * k + q] = s * arp + c * arq;
                }
                for r in 0..k {
                    let apr = a[p * k + r];
                    let aqr = a[q * k + r];
                    a[p * k + r] = c * apr - s * aqr;
                    a[q * k + r] = s * apr + c * aqr;
                }
            }
        }
    }
    Err(Error::NoConvergence {
        sweeps: SWEEP_BUDGET,
        residual: off.as_f64(),
    })
}
