//! Small dense matrix inversion, generic over the scalar.
//!
//! Gauss-Jordan with partial pivoting on the real part. Working over jets
//! propagates derivatives through the inverse, which is how the metric
//! importer differentiates g⁻¹ without symbolic inversion. Dimensions here
//! are desk scale (≤ 64), so no factorization machinery is warranted.

use crate::error::{Error, Result};
use crate::jet::Scalar;

pub fn invert<S: Scalar>(a: &[Vec<S>]) -> Result<Vec<Vec<S>>> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch("matrix is not square".to_string()));
    }
    // Augmented [A | I].
    let mut m: Vec<Vec<S>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            for j in 0..n {
                r.push(if i == j { S::one() } else { S::zero() });
            }
            r
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                m[i][col]
                    .re()
                    .abs()
                    .partial_cmp(&m[j][col].re().abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[pivot][col].re() == 0.0 {
            return Err(Error::Config(
                "singular matrix in explicit inversion".to_string(),
            ));
        }
        m.swap(col, pivot);
        let inv_pivot = S::one() / m[col][col];
        for entry in m[col][col..].iter_mut() {
            *entry = *entry * inv_pivot;
        }
        for i in 0..n {
            if i != col {
                let factor = m[i][col];
                if factor.re() != 0.0 {
                    let pivot_row = m[col].clone();
                    for (entry, p) in m[i][col..].iter_mut().zip(&pivot_row[col..]) {
                        *entry = *entry - factor * *p;
                    }
                }
            }
        }
    }
    Ok(m.into_iter().map(|row| row[n..].to_vec()).collect())
}
