//! Linear overestimators of the squared norm over a box.
//!
//! On `[l, u]` the chord of `t ↦ t²` is `(l + u)·t − l·u`; summing the chords
//! gives an affine function that dominates `‖x‖²` on the whole box and agrees
//! with it at every corner.

use crate::error::{Error, Result};
use crate::geometry::{dot, Polytope};
use crate::lp::{coordinate_range, maximize_linear, minimize_linear};

#[derive(Clone, Debug, PartialEq)]
pub struct SecantBound {
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl SecantBound {
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.slope, x) + self.offset
    }
}

pub fn secant_overestimator(lower: &[f64], upper: &[f64]) -> Result<SecantBound> {
    if lower.len() != upper.len() {
        return Err(Error::DimensionMismatch {
            expected: lower.len(),
            found: upper.len(),
        });
    }
    let mut slope = Vec::with_capacity(lower.len());
    let mut offset = 0.0;
    for (index, (&l, &u)) in lower.iter().zip(upper).enumerate() {
        if !(l.is_finite() && u.is_finite()) {
            return Err(Error::UnboundedBox);
        }
        if l > u {
            return Err(Error::InvalidBox { index });
        }
        slope.push(l + u);
        offset -= l * u;
    }
    Ok(SecantBound { slope, offset })
}

/// Per-coordinate gap `(u − x)(x − l)` between the chord and the square.
pub fn secant_gap(lower: f64, upper: f64, x: f64) -> f64 {
    (upper - x) * (x - lower)
}

#[derive(Clone, Debug)]
pub struct NodeBound {
    /// `−∞` when the node is empty.
    pub ub: f64,
    pub relax_point: Option<Vec<f64>>,
}

/// Upper bound on `max ‖x‖²` over `p ∩ [lower, upper]` from the secant LP.
pub fn node_upper_bound(p: &Polytope, lower: &[f64], upper: &[f64]) -> Result<NodeBound> {
    let secant = secant_overestimator(lower, upper)?;
    let node = p.with_box(lower.to_vec(), upper.to_vec())?;
    let res = maximize_linear(&node, &secant.slope)?;
    if !res.is_optimal() {
        return Ok(NodeBound {
            ub: f64::NEG_INFINITY,
            relax_point: None,
        });
    }
    Ok(NodeBound {
        ub: res.objective + secant.offset,
        relax_point: res.point,
    })
}

/// Shrinks `[lower, upper]` to the LP bounding box of `p ∩ [lower, upper]`.
///
/// Returns `None` when the intersection is empty.
pub fn tighten_box(p: &Polytope, lower: &[f64], upper: &[f64]) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let node = p.with_box(lower.to_vec(), upper.to_vec())?;
    let (mut lo, mut hi) = (lower.to_vec(), upper.to_vec());
    let mut c = vec![0.0; p.dim()];
    for i in 0..p.dim() {
        c[i] = 1.0;
        let max = maximize_linear(&node, &c)?;
        if !max.is_optimal() {
            return Ok(None);
        }
        let min = minimize_linear(&node, &c)?;
        c[i] = 0.0;
        // Never cut past the original bounds, whatever the rounding.
        hi[i] = max.objective.min(upper[i]);
        lo[i] = min.objective.max(lower[i]).min(hi[i]);
    }
    Ok(Some((lo, hi)))
}

/// Convenience wrapper returning per-coordinate ranges of `p`.
pub fn bounding_box(p: &Polytope) -> Result<Option<Vec<(f64, f64)>>> {
    (0..p.dim())
        .map(|i| coordinate_range(p, i))
        .collect::<Result<Option<Vec<_>>>>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{squared_norm, FactorMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_box_gives_constant_bound() {
        let s = secant_overestimator(&[-1.0; 4], &[1.0; 4]).unwrap();
        assert_eq!(s.slope, vec![0.0; 4]);
        assert_eq!(s.offset, 4.0);
    }

    #[test]
    fn unit_box_bound_is_sum() {
        let s = secant_overestimator(&[0.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(s.slope, vec![1.0; 3]);
        assert_eq!(s.offset, 0.0);
    }

    #[test]
    fn single_coordinate_chord() {
        let s = secant_overestimator(&[2.0], &[6.0]).unwrap();
        assert_eq!(s.slope, vec![8.0]);
        assert_eq!(s.offset, -12.0);
        assert_eq!(s.eval(&[2.0]), 4.0);
        assert_eq!(s.eval(&[6.0]), 36.0);
    }

    #[test]
    fn crossed_bounds_rejected() {
        assert!(matches!(
            secant_overestimator(&[1.0, 0.0], &[0.0, 1.0]),
            Err(Error::InvalidBox { index: 0 })
        ));
    }

    #[test]
    fn soundness_on_random_boxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let r = rng.random_range(1..7);
            let lower: Vec<f64> = (0..r).map(|_| rng.random_range(-3.0..1.0)).collect();
            let upper: Vec<f64> = lower.iter().map(|l| l + rng.random_range(0.0..3.0)).collect();
            let s = secant_overestimator(&lower, &upper).unwrap();
            let x: Vec<f64> = lower
                .iter()
                .zip(&upper)
                .map(|(l, u)| rng.random_range(*l..=*u))
                .collect();
            assert!(squared_norm(&x) <= s.eval(&x) + 1e-9);
            let corner: Vec<f64> = lower
                .iter()
                .zip(&upper)
                .map(|(l, u)| if rng.random_bool(0.5) { *l } else { *u })
                .collect();
            assert!((squared_norm(&corner) - s.eval(&corner)).abs() < 1e-9);
        }
    }

    #[test]
    fn gap_is_at_most_quarter_width_squared() {
        let (l, u) = (-0.7, 1.3);
        let w = u - l;
        for k in 0..=100 {
            let x = l + w * k as f64 / 100.0;
            assert!(secant_gap(l, u, x) <= w * w / 4.0 + 1e-15);
        }
        let mid = 0.5 * (l + u);
        let halves = [(l, mid), (mid, u)];
        for (a, b) in halves {
            let worst = (b - a) * (b - a) / 4.0;
            assert!(worst <= w * w / 16.0 + 1e-15);
        }
    }

    #[test]
    fn identity_node_bound_after_tightening() {
        let h = FactorMatrix::identity(3).unwrap();
        let p = Polytope::for_matrix(&h, true);
        let loose = node_upper_bound(&p, &p.lower, &p.upper).unwrap();
        assert!((loose.ub - 3.0).abs() < 1e-12);
        let (lo, hi) = tighten_box(&p, &p.lower, &p.upper).unwrap().unwrap();
        for i in 0..3 {
            assert!(lo[i].abs() < 1e-12 && (hi[i] - 1.0).abs() < 1e-12);
        }
        let tight = node_upper_bound(&p, &lo, &hi).unwrap();
        assert!((tight.ub - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_node_has_negative_infinite_bound() {
        let p = Polytope::for_matrix(&FactorMatrix::identity(3).unwrap(), true);
        let b = node_upper_bound(&p, &[0.6; 3], &[1.0; 3]).unwrap();
        assert_eq!(b.ub, f64::NEG_INFINITY);
        assert!(b.relax_point.is_none());
        assert!(tighten_box(&p, &[0.6; 3], &[1.0; 3]).unwrap().is_none());
    }

    #[test]
    fn all_pairs_root_bound_covers_known_point() {
        let h = FactorMatrix::all_pairs(3).unwrap();
        let p = Polytope::for_matrix(&h, true);
        assert!(p.contains(&[-1.0, 1.0, 1.0], 1e-12));
        let b = node_upper_bound(&p, &p.lower, &p.upper).unwrap();
        assert!(b.ub >= 3.0 - 1e-9);
    }
}
