//! Matrices, cones and polytopes shared by the solvers.
//!
//! A [`FactorMatrix`] stores its columns normalized to unit 1-norm. The conic
//! hull of the columns does not depend on their scale, so every check below is
//! invariant under that normalization.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Numerical tolerances used throughout a check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Additive slack on linear constraints.
    pub eps_feas: f64,
    /// Relative gap between incumbent and bound for declaring convergence.
    pub eps_gap: f64,
    /// Squared-norm value at which the search stops with a violation.
    pub stop_threshold: f64,
    /// Width of the band below the optimum in which solutions count as optimal.
    pub eps_pool: f64,
    /// ℓ∞ radius for treating two points as the same.
    pub delta_unit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_feas: 1e-9,
            eps_gap: 1e-6,
            stop_threshold: 1.0001,
            eps_pool: 1e-6,
            delta_unit: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.eps_feas) {
            return Err(Error::InvalidTolerance("eps_feas must be positive"));
        }
        if !positive(self.eps_gap) {
            return Err(Error::InvalidTolerance("eps_gap must be positive"));
        }
        if !positive(self.eps_pool) {
            return Err(Error::InvalidTolerance("eps_pool must be positive"));
        }
        if !positive(self.delta_unit) {
            return Err(Error::InvalidTolerance("delta_unit must be positive"));
        }
        if !(self.stop_threshold.is_finite() && self.stop_threshold > 1.0) {
            return Err(Error::InvalidTolerance("stop_threshold must exceed 1"));
        }
        Ok(())
    }
}

/// A nonnegative r×n matrix with no zero column.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorMatrix {
    rank: usize,
    // Hᵀ in row-major order: row j is the normalized column j of H.
    columns: Arc<[f64]>,
    ncols: usize,
    dropped: Vec<usize>,
}

impl FactorMatrix {
    /// Builds a matrix from `rows` × `cols` entries in row-major order.
    ///
    /// Zero columns are dropped, the rest are scaled to unit 1-norm.
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if rows < 2 {
            return Err(Error::RankTooSmall(rows));
        }
        for (k, &v) in data.iter().enumerate() {
            let (row, col) = (k / cols, k % cols);
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row, col });
            }
            if v < 0.0 {
                return Err(Error::NegativeEntry { row, col, value: v });
            }
        }

        let mut columns = Vec::with_capacity(rows * cols);
        let mut dropped = Vec::new();
        for j in 0..cols {
            let sum: f64 = (0..rows).map(|i| data[i * cols + j]).sum();
            if sum == 0.0 {
                dropped.push(j);
                continue;
            }
            columns.extend((0..rows).map(|i| data[i * cols + j] / sum));
        }
        if !dropped.is_empty() {
            log::warn!("dropped {} all-zero column(s): {:?}", dropped.len(), dropped);
        }
        let ncols = cols - dropped.len();
        if ncols == 0 {
            return Err(Error::NoColumns);
        }
        Ok(Self {
            rank: rows,
            columns: columns.into(),
            ncols,
            dropped,
        })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), cols, &data)
    }

    /// The r×r identity.
    pub fn identity(r: usize) -> Result<Self> {
        let mut data = vec![0.0; r * r];
        for i in 0..r {
            data[i * r + i] = 1.0;
        }
        Self::from_row_major(r, r, &data)
    }

    /// The matrix eeᵀ − I.
    pub fn all_pairs(r: usize) -> Result<Self> {
        let mut data = vec![1.0; r * r];
        for i in 0..r {
            data[i * r + i] = 0.0;
        }
        Self::from_row_major(r, r, &data)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Indices (in the input) of the all-zero columns that were dropped.
    pub fn dropped_columns(&self) -> &[usize] {
        &self.dropped
    }

    /// Normalized column `j`.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.rank..(j + 1) * self.rank]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.columns[j * self.rank + i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.ncols).map(|j| self.entry(i, j)).collect()
    }

    /// Row-major copy of the normalized matrix.
    pub fn to_row_major(&self) -> Vec<f64> {
        (0..self.rank).flat_map(|i| self.row(i)).collect()
    }

    /// Hᵀx.
    pub fn transpose_times(&self, x: &[f64]) -> Vec<f64> {
        (0..self.ncols).map(|j| dot(self.column(j), x)).collect()
    }

    /// Hy.
    pub fn times(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rank];
        for (j, &yj) in y.iter().enumerate() {
            for (o, h) in out.iter_mut().zip(self.column(j)) {
                *o += h * yj;
            }
        }
        out
    }

    pub(crate) fn shared_columns(&self) -> Arc<[f64]> {
        Arc::clone(&self.columns)
    }
}

/// The unit vector e_i of dimension `dim`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnitVector {
    pub index: usize,
    pub dim: usize,
}

impl UnitVector {
    pub fn new(index: usize, dim: usize) -> Self {
        assert!(index < dim, "unit vector index {index} out of range {dim}");
        Self { index, dim }
    }

    pub fn to_vec(self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        v[self.index] = 1.0;
        v
    }

    pub fn linf_distance(self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let target = if i == self.index { 1.0 } else { 0.0 };
                (xi - target).abs()
            })
            .fold(0.0, f64::max)
    }

    /// All unit vectors of dimension `dim`.
    pub fn all(dim: usize) -> impl Iterator<Item = UnitVector> {
        (0..dim).map(move |i| UnitVector::new(i, dim))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeKind {
    /// {x : eᵀx ≥ √(r−1)‖x‖₂}
    Inner,
    /// {x : eᵀx ≥ ‖x‖₂}, the dual of `Inner`.
    Dual,
}

#[derive(Clone, Copy, Debug)]
pub struct SecondOrderCone {
    dim: usize,
    kind: ConeKind,
}

impl SecondOrderCone {
    pub fn new(dim: usize, kind: ConeKind) -> Result<Self> {
        if dim < 2 {
            return Err(Error::RankTooSmall(dim));
        }
        Ok(Self { dim, kind })
    }

    fn coefficient(&self) -> f64 {
        match self.kind {
            ConeKind::Inner => ((self.dim - 1) as f64).sqrt(),
            ConeKind::Dual => 1.0,
        }
    }

    pub fn contains(&self, x: &[f64], eps_feas: f64) -> Result<bool> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let sum: f64 = x.iter().sum();
        Ok(sum >= self.coefficient() * norm2(x) - eps_feas)
    }
}

/// {x : A·x ≥ 0, eᵀx = 1 (optional), lower ≤ x ≤ upper}.
#[derive(Clone, Debug)]
pub struct Polytope {
    dim: usize,
    normals: Arc<[f64]>,
    sum_constraint: bool,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Polytope {
    /// `normals` holds one constraint normal of length `dim` per row.
    pub fn new(
        dim: usize,
        normals: Vec<f64>,
        sum_constraint: bool,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || !normals.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: normals.len(),
            });
        }
        let p = Self {
            dim,
            normals: normals.into(),
            sum_constraint,
            lower,
            upper,
        };
        p.check_box(&p.lower, &p.upper)?;
        Ok(p)
    }

    /// The feasible set of the norm maximization for `h`.
    ///
    /// `bounded` selects the box [−1, 1]ʳ; otherwise the implied box
    /// [2−r, 1]ʳ of the unrestricted problem is used.
    pub fn for_matrix(h: &FactorMatrix, bounded: bool) -> Self {
        let r = h.rank();
        let low = if bounded { -1.0 } else { 2.0 - r as f64 };
        Self {
            dim: r,
            normals: h.shared_columns(),
            sum_constraint: true,
            lower: vec![low; r],
            upper: vec![1.0; r],
        }
    }

    /// {p : Hᵀp ≥ 0, −1 ≤ p ≤ 1}, the normalized dual cone of `h`.
    pub fn dual_cone_slice(h: &FactorMatrix) -> Self {
        let r = h.rank();
        Self {
            dim: r,
            normals: h.shared_columns(),
            sum_constraint: false,
            lower: vec![-1.0; r],
            upper: vec![1.0; r],
        }
    }

    fn check_box(&self, lower: &[f64], upper: &[f64]) -> Result<()> {
        for (v, len) in [(lower.len(), self.dim), (upper.len(), self.dim)] {
            if v != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    found: v,
                });
            }
        }
        for (index, (l, u)) in lower.iter().zip(upper).enumerate() {
            if l.is_finite() && u.is_finite() && l > u {
                return Err(Error::InvalidBox { index });
            }
        }
        Ok(())
    }

    /// The same constraints intersected with a different box.
    pub fn with_box(&self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        self.check_box(&lower, &upper)?;
        Ok(Self {
            dim: self.dim,
            normals: Arc::clone(&self.normals),
            sum_constraint: self.sum_constraint,
            lower,
            upper,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_normals(&self) -> usize {
        self.normals.len() / self.dim
    }

    pub fn normal(&self, j: usize) -> &[f64] {
        &self.normals[j * self.dim..(j + 1) * self.dim]
    }

    pub fn has_sum_constraint(&self) -> bool {
        self.sum_constraint
    }

    pub fn is_box_finite(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    /// Largest constraint violation of `x` (0 when feasible).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.num_normals() {
            worst = worst.max(-dot(self.normal(j), x));
        }
        for (i, &xi) in x.iter().enumerate() {
            worst = worst.max(self.lower[i] - xi).max(xi - self.upper[i]);
        }
        if self.sum_constraint {
            worst = worst.max((x.iter().sum::<f64>() - 1.0).abs());
        }
        worst
    }

    pub fn contains(&self, x: &[f64], eps_feas: f64) -> bool {
        x.len() == self.dim && self.violation(x) <= eps_feas
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    squared_norm(x).sqrt()
}

pub fn squared_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_is_in_inner_cone() {
        let c = SecondOrderCone::new(3, ConeKind::Inner).unwrap();
        assert!(c.contains(&[1.0, 1.0, 1.0], 1e-9).unwrap());
    }

    #[test]
    fn e_minus_unit_lies_on_inner_cone_border() {
        for r in 2..9 {
            let c = SecondOrderCone::new(r, ConeKind::Inner).unwrap();
            let mut x = vec![1.0; r];
            x[0] = 0.0;
            assert!(c.contains(&x, 1e-9).unwrap());
            let sum: f64 = x.iter().sum();
            let rhs = ((r - 1) as f64).sqrt() * norm2(&x);
            assert!((sum - rhs).abs() < 1e-12);
            assert_eq!(sum, (r - 1) as f64);
        }
    }

    #[test]
    fn difference_of_units_is_outside_dual_cone() {
        let c = SecondOrderCone::new(2, ConeKind::Dual).unwrap();
        assert!(!c.contains(&[1.0, -1.0], 1e-9).unwrap());
    }

    #[test]
    fn cone_rejects_wrong_dimension() {
        let c = SecondOrderCone::new(3, ConeKind::Dual).unwrap();
        assert!(matches!(
            c.contains(&[1.0, 0.0], 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(SecondOrderCone::new(1, ConeKind::Inner).is_err());
    }

    #[test]
    fn rank_one_is_rejected() {
        assert!(matches!(
            FactorMatrix::from_rows(&[[1.0, 2.0]]),
            Err(Error::RankTooSmall(1))
        ));
    }

    #[test]
    fn negative_entry_reports_location() {
        let err = FactorMatrix::from_rows(&[[1.0, 0.0], [0.5, -0.1]]).unwrap_err();
        match err {
            Error::NegativeEntry { row, col, .. } => assert_eq!((row, col), (1, 1)),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn zero_columns_are_dropped_and_columns_normalized() {
        let h = FactorMatrix::from_rows(&[[2.0, 0.0, 1.0], [2.0, 0.0, 0.0]]).unwrap();
        assert_eq!(h.ncols(), 2);
        assert_eq!(h.dropped_columns(), &[1]);
        assert_eq!(h.column(0), &[0.5, 0.5]);
        assert_eq!(h.column(1), &[1.0, 0.0]);
        assert!(matches!(
            FactorMatrix::from_rows(&[[0.0], [0.0]]),
            Err(Error::NoColumns)
        ));
    }

    #[test]
    fn bounded_polytope_of_identity() {
        let h = FactorMatrix::identity(3).unwrap();
        let p = Polytope::for_matrix(&h, true);
        assert_eq!(p.lower, vec![-1.0; 3]);
        assert_eq!(p.upper, vec![1.0; 3]);
        assert!(p.has_sum_constraint());
        assert!(p.contains(&[1.0, 0.0, 0.0], 1e-9));
        assert!(!p.contains(&[1.5, -0.5, 0.0], 1e-9));
    }

    #[test]
    fn unbounded_formulation_uses_implied_box() {
        let p3 = Polytope::for_matrix(&FactorMatrix::all_pairs(3).unwrap(), false);
        assert_eq!(p3.lower, vec![-1.0; 3]);
        assert_eq!(p3.upper, vec![1.0; 3]);
        let p5 = Polytope::for_matrix(&FactorMatrix::all_pairs(5).unwrap(), false);
        assert_eq!(p5.lower, vec![-3.0; 5]);
        assert_eq!(p5.upper, vec![1.0; 5]);
    }

    #[test]
    fn unit_vectors_are_feasible() {
        let h = FactorMatrix::from_rows(&[[0.3, 0.0, 1.0], [0.7, 1.0, 0.0], [0.0, 2.0, 0.0]]).unwrap();
        let p = Polytope::for_matrix(&h, true);
        for e in UnitVector::all(3) {
            assert!(p.contains(&e.to_vec(), 1e-12));
        }
    }

    #[test]
    fn tolerances_validate() {
        assert!(Tolerances::default().validate().is_ok());
        let t = Tolerances {
            stop_threshold: 1.0,
            ..Default::default()
        };
        assert!(t.validate().is_err());
        let t = Tolerances {
            eps_pool: 0.0,
            ..Default::default()
        };
        assert!(t.validate().is_err());
    }

    #[test]
    fn with_box_rejects_crossed_bounds() {
        let p = Polytope::for_matrix(&FactorMatrix::identity(2).unwrap(), true);
        assert!(matches!(
            p.with_box(vec![0.5, 0.0], vec![0.2, 1.0]),
            Err(Error::InvalidBox { index: 0 })
        ));
    }

    proptest::proptest! {
        #[test]
        fn inner_cone_lies_in_orthant(
            x in proptest::collection::vec(-1.0f64..1.0, 2..8)
        ) {
            let c = SecondOrderCone::new(x.len(), ConeKind::Inner).unwrap();
            if c.contains(&x, 1e-12).unwrap() {
                let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
                proptest::prop_assert!(min >= -1e-6);
            }
        }
    }
}
