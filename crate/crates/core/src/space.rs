//! Model spaces: graded coordinate truncations with a seminorm family.
//!
//! A graded space fixes cumulative coordinate counts d₁ ≤ … ≤ d_N. Working
//! at level k means working in ℝ^{d_k}; projecting between levels drops or
//! keeps leading coordinates. This is the computable stand-in for a space
//! topologized by countably many seminorms: the same chart data can be
//! instantiated at two adjacent levels and compared under projection.

use crate::error::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub enum SeminormKind {
    /// sup |coordinate| over the first d_level coordinates.
    Sup,
    /// Per-grade weighted sup: block k contributes weight_k · sup |c|.
    WeightedSup { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpace {
    grades: Vec<usize>,
    active_level: usize,
    seminorm: SeminormKind,
}

impl ModelSpace {
    pub fn new(grades: Vec<usize>, active_level: usize, seminorm: SeminormKind) -> Result<Self> {
        if grades.is_empty() || grades[0] == 0 {
            return Err(Error::Config(
                "grades must be nonempty with d1 >= 1".to_string(),
            ));
        }
        if grades.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config(format!(
                "grades must be nondecreasing, got {grades:?}"
            )));
        }
        if active_level == 0 || active_level > grades.len() {
            return Err(Error::LevelOutOfRange {
                level: active_level,
                max: grades.len(),
            });
        }
        if let SeminormKind::WeightedSup { weights } = &seminorm {
            if weights.len() != grades.len() {
                return Err(Error::Config(format!(
                    "{} seminorm weights for {} grades",
                    weights.len(),
                    grades.len()
                )));
            }
            if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
                return Err(Error::Config("seminorm weights must be positive".to_string()));
            }
        }
        Ok(ModelSpace {
            grades,
            active_level,
            seminorm,
        })
    }

    /// Ungraded space: a single level of the given dimension, sup seminorm.
    pub fn simple(dim: usize) -> Self {
        ModelSpace::new(vec![dim], 1, SeminormKind::Sup).expect("dim >= 1")
    }

    pub fn grades(&self) -> &[usize] {
        &self.grades
    }

    pub fn levels(&self) -> usize {
        self.grades.len()
    }

    pub fn active_level(&self) -> usize {
        self.active_level
    }

    /// Dimension at the active level.
    pub fn dim(&self) -> usize {
        self.grades[self.active_level - 1]
    }

    pub fn dim_at(&self, level: usize) -> Result<usize> {
        if level == 0 || level > self.grades.len() {
            return Err(Error::LevelOutOfRange {
                level,
                max: self.grades.len(),
            });
        }
        Ok(self.grades[level - 1])
    }

    /// The same grading with a different active level.
    pub fn at_level(&self, level: usize) -> Result<ModelSpace> {
        self.dim_at(level)?;
        Ok(ModelSpace {
            grades: self.grades.clone(),
            active_level: level,
            seminorm: self.seminorm.clone(),
        })
    }

    pub fn vector(&self, coords: Vec<f64>) -> Result<Vector> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coordinates at level {}, got {}",
                self.dim(),
                self.active_level,
                coords.len()
            )));
        }
        Vector::new(coords)
    }

    /// Seminorm of x at the given grade level (level ≤ active level).
    pub fn seminorm(&self, x: &Vector, level: usize) -> Result<f64> {
        if level == 0 || level > self.active_level {
            return Err(Error::LevelOutOfRange {
                level,
                max: self.active_level,
            });
        }
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector has {} coordinates, space dimension is {}",
                x.len(),
                self.dim()
            )));
        }
        match &self.seminorm {
            SeminormKind::Sup => {
                let d = self.grades[level - 1];
                Ok(x[..d].iter().fold(0.0, |m, c| m.max(c.abs())))
            }
            SeminormKind::WeightedSup { weights } => {
                let mut m = 0.0f64;
                let mut start = 0;
                for (weight, &end) in weights.iter().zip(&self.grades).take(level) {
                    for c in &x[start..end] {
                        m = m.max(weight * c.abs());
                    }
                    start = end;
                }
                Ok(m)
            }
        }
    }

    /// Truncation projection from one level to a lower (or equal) one.
    pub fn project(&self, x: &Vector, from_level: usize, to_level: usize) -> Result<Vector> {
        let d_from = self.dim_at(from_level)?;
        if to_level > from_level {
            return Err(Error::LevelOutOfRange {
                level: to_level,
                max: from_level,
            });
        }
        let d_to = self.dim_at(to_level)?;
        if x.len() != d_from {
            return Err(Error::DimensionMismatch(format!(
                "vector has {} coordinates, level {} has dimension {}",
                x.len(),
                from_level,
                d_from
            )));
        }
        Vector::new(x[..d_to].to_vec())
    }
}

/// A coordinate vector: finite entries, length fixed by its space.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    coords: Vec<f64>,
}

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Vector { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl std::ops::Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.coords
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space24() -> ModelSpace {
        ModelSpace::new(vec![2, 4], 2, SeminormKind::Sup).unwrap()
    }

    #[test]
    fn seminorm_examples() {
        let s = space24();
        let zero = s.vector(vec![0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.seminorm(&zero, 1).unwrap(), 0.0);
        let x = s.vector(vec![1.0, -3.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.seminorm(&x, 1).unwrap(), 3.0);
        assert_eq!(s.seminorm(&x, 2).unwrap(), 3.0);
    }

    #[test]
    fn seminorm_level_out_of_range() {
        let s = space24();
        let x = s.vector(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            s.seminorm(&x, 3),
            Err(Error::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn project_examples() {
        let s = space24();
        let x = Vector::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(
            s.project(&x, 2, 2).unwrap().coords(),
            &[1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(s.project(&x, 2, 1).unwrap().coords(), &[1.0, 2.0]);

        let s1 = ModelSpace::new(vec![1], 1, SeminormKind::Sup).unwrap();
        let y = Vector::new(vec![5.0]).unwrap();
        assert_eq!(s1.project(&y, 1, 1).unwrap().coords(), &[5.0]);
    }

    #[test]
    fn project_upward_is_an_error() {
        let s = space24();
        let x = Vector::new(vec![1.0, 2.0]).unwrap();
        assert!(s.project(&x, 1, 2).is_err());
    }

    #[test]
    fn vectors_reject_non_finite_entries() {
        assert!(matches!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
        assert!(Vector::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn grades_must_be_nondecreasing() {
        assert!(ModelSpace::new(vec![4, 2], 1, SeminormKind::Sup).is_err());
        assert!(ModelSpace::new(vec![], 1, SeminormKind::Sup).is_err());
        assert!(ModelSpace::new(vec![0, 2], 1, SeminormKind::Sup).is_err());
    }

    #[test]
    fn weighted_sup_uses_block_weights() {
        let s = ModelSpace::new(
            vec![1, 2],
            2,
            SeminormKind::WeightedSup {
                weights: vec![1.0, 10.0],
            },
        )
        .unwrap();
        let x = s.vector(vec![2.0, 0.5]).unwrap();
        assert_eq!(s.seminorm(&x, 1).unwrap(), 2.0);
        assert_eq!(s.seminorm(&x, 2).unwrap(), 5.0);
    }
}
