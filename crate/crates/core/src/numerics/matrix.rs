//! Complex matrix aliases and small helpers.
//!
//! Storage and elementwise algebra are delegated to `nalgebra`; this crate
//! only adds the decompositions and statistics it actually needs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type Cx = Complex<f64>;
pub type CMatrix = DMatrix<Cx>;
pub type CVector = DVector<Cx>;

/// True if every entry of `m` has finite real and imaginary parts.
pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_detection() {
        let mut m = CMatrix::zeros(2, 2);
        assert!(all_finite(&m));
        m[(0, 1)] = Cx::new(f64::NAN, 0.0);
        assert!(!all_finite(&m));
        m[(0, 1)] = Cx::new(0.0, f64::INFINITY);
        assert!(!all_finite(&m));
    }

    #[test]
    fn product_with_unitary_preserves_frobenius_norm() {
        // Unitary factor: a rotation with a complex phase.
        let c = 0.6_f64;
        let s = 0.8_f64;
        let phase = Cx::from_polar(1.0, 0.7);
        let q = CMatrix::from_row_slice(
            2,
            2,
            &[
                Cx::new(c, 0.0),
                s * phase,
                -s * phase.conj(),
                Cx::new(c, 0.0),
            ],
        );
        let m = CMatrix::from_row_slice(
            3,
            2,
            &[
                Cx::new(1.0, -0.5),
                Cx::new(0.2, 0.4),
                Cx::new(-1.3, 0.0),
                Cx::new(0.0, 2.0),
                Cx::new(0.7, 0.7),
                Cx::new(-0.1, 0.9),
            ],
        );
        let prod = &m * &q;
        let rel = (prod.norm() - m.norm()).abs() / m.norm();
        assert!(rel < 1e-10, "relative norm change {rel}");
    }
}
