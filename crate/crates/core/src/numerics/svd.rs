//! Singular value decomposition of small dense complex matrices.
//!
//! One-sided Jacobi on the columns: rotations orthogonalise column pairs until
//! the implicit Gram matrix is diagonal. Quadratically convergent and fully
//! deterministic, which matters because downstream results depend on the
//! factor phases. Convention: singular values sorted descending, and the first
//! element of magnitude above 1e-8 in each left singular vector is made real
//! and nonnegative.

use crate::error::{BicmError, Result};
use crate::numerics::{all_finite, CMatrix, Cx};

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left factor, `rows x rows`, unitary.
    pub u: CMatrix,
    /// Singular values, length `cols`, sorted descending.
    pub singular_values: Vec<f64>,
    /// Right factor, `cols x cols`, unitary.
    pub v: CMatrix,
}

impl SvdResult {
    /// `U Λ V^H` with `Λ` the `rows x cols` diagonal embedding of the
    /// singular values.
    pub fn reconstruct(&self) -> CMatrix {
        let rows = self.u.nrows();
        let cols = self.v.nrows();
        let mut lam = CMatrix::zeros(rows, cols);
        for (i, &s) in self.singular_values.iter().enumerate() {
            lam[(i, i)] = Cx::new(s, 0.0);
        }
        &self.u * lam * self.v.adjoint()
    }
}

/// Factorises `m = U Λ V^H`. Requires at least as many rows as columns.
pub fn svd(m: &CMatrix) -> Result<SvdResult> {
    let rows = m.nrows();
    let cols = m.ncols();
    if rows == 0 || cols == 0 {
        return Err(BicmError::InvalidInput("empty matrix".into()));
    }
    if rows < cols {
        return Err(BicmError::InvalidInput(format!(
            "svd expects rows >= cols, got {rows}x{cols}"
        )));
    }
    if !all_finite(m) {
        return Err(BicmError::InvalidInput(
            "matrix contains non-finite entries".into(),
        ));
    }

    let mut a = m.clone();
    let mut v = CMatrix::identity(cols, cols);

    let mut converged = cols == 1;
    for _sweep in 0..64 {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Cx::new(0.0, 0.0);
                for i in 0..rows {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    app += aip.norm_sqr();
                    aqq += aiq.norm_sqr();
                    apq += aip.conj() * aiq;
                }
                let mag = apq.norm();
                if mag <= 1e-14 * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let sp = phase * s;
                for i in 0..rows {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c - sp.conj() * aiq;
                    a[(i, q)] = sp * aip + aiq * c;
                }
                for i in 0..cols {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - sp.conj() * viq;
                    v[(i, q)] = sp * vip + viq * c;
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(BicmError::Singularity(
            "jacobi svd failed to converge in 64 sweeps".into(),
        ));
    }

    // Singular values with a deterministic descending order.
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let sigma_max = order.first().map(|&j| norms[j]).unwrap_or(0.0);
    let rank_tol = sigma_max * 1e-13;

    let mut u = CMatrix::zeros(rows, rows);
    let mut v_sorted = CMatrix::zeros(cols, cols);
    let mut singular_values = Vec::with_capacity(cols);
    let mut filled = 0usize;
    for (slot, &j) in order.iter().enumerate() {
        singular_values.push(norms[j]);
        v_sorted.set_column(slot, &v.column(j));
        if norms[j] > rank_tol && norms[j] > 0.0 {
            let col = a.column(j) / Cx::new(norms[j], 0.0);
            u.set_column(slot, &col);
            filled = slot + 1;
        }
    }

    complete_orthonormal_basis(&mut u, filled);
    apply_phase_convention(&mut u, &mut v_sorted, &singular_values, rank_tol);

    Ok(SvdResult {
        u,
        singular_values,
        v: v_sorted,
    })
}

/// Fills columns `filled..` of `u` with an orthonormal completion, chosen
/// deterministically from the standard basis (largest residual first, two
/// Gram-Schmidt passes).
fn complete_orthonormal_basis(u: &mut CMatrix, filled: usize) {
    let rows = u.nrows();
    for slot in filled..rows {
        let mut best: Option<(f64, CMatrix)> = None;
        for k in 0..rows {
            let mut r = CMatrix::zeros(rows, 1);
            r[(k, 0)] = Cx::new(1.0, 0.0);
            for _ in 0..2 {
                for j in 0..slot {
                    let proj: Cx = (0..rows).map(|i| u[(i, j)].conj() * r[(i, 0)]).sum();
                    for i in 0..rows {
                        let uij = u[(i, j)];
                        r[(i, 0)] -= uij * proj;
                    }
                }
            }
            let n = r.norm();
            if best.as_ref().map(|(bn, _)| n > *bn).unwrap_or(true) {
                best = Some((n, r));
            }
        }
        let (n, r) = best.expect("nonempty basis");
        let col = r / Cx::new(n, 0.0);
        u.set_column(slot, &col.column(0));
    }
}

/// Makes the first non-negligible element of each left singular vector real
/// and nonnegative; the paired right vector absorbs the conjugate phase so
/// the product is unchanged.
fn apply_phase_convention(u: &mut CMatrix, v: &mut CMatrix, sigma: &[f64], rank_tol: f64) {
    let rows = u.nrows();
    let cols = v.nrows();
    for j in 0..rows {
        let mut pivot = None;
        for i in 0..rows {
            if u[(i, j)].norm() > 1e-8 {
                pivot = Some(u[(i, j)]);
                break;
            }
        }
        let Some(p) = pivot else { continue };
        let phase = p / p.norm();
        let rot = phase.conj();
        for i in 0..rows {
            let uij = u[(i, j)];
            u[(i, j)] = uij * rot;
        }
        if j < cols && sigma[j] > rank_tol {
            for i in 0..cols {
                let vij = v[(i, j)];
                v[(i, j)] = vij * rot;
            }
        }
    }
}
