//! Brute-force vertex enumeration for small polytopes.
//!
//! Every vertex is the unique solution of r linearly independent active
//! constraints, so trying every subset of r constraints (the sum constraint is
//! always one of them) and keeping the feasible solutions finds them all.
//! This is exponential and only meant for r ≤ 8 or so; it exists to check the
//! branch-and-bound results and to decide small instances exactly.

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{linf_distance, squared_norm, Polytope, Tolerances};
use crate::lp::solve_square;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_dim: usize,
    pub max_constraints: usize,
    pub max_subsets: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_dim: 8,
            max_constraints: 60,
            max_subsets: 5_000_000,
        }
    }
}

impl OracleLimits {
    pub fn unlimited() -> Self {
        Self {
            max_dim: usize::MAX,
            max_constraints: usize::MAX,
            max_subsets: u64::MAX,
        }
    }

    /// Errors with `BudgetExceeded` when `p` is too large to enumerate.
    pub fn admit(&self, p: &Polytope) -> Result<()> {
        let r = p.dim();
        let eq = usize::from(p.has_sum_constraint());
        let inequalities = p.num_normals() + 2 * r;
        let total = inequalities + eq;
        if r > self.max_dim {
            return Err(Error::BudgetExceeded {
                reason: format!("dimension {r} exceeds {}", self.max_dim),
            });
        }
        if total > self.max_constraints {
            return Err(Error::BudgetExceeded {
                reason: format!("{total} constraints exceed {}", self.max_constraints),
            });
        }
        let subsets = binomial(inequalities as u64, (r - eq) as u64);
        if subsets > self.max_subsets {
            return Err(Error::BudgetExceeded {
                reason: format!("{subsets} constraint subsets exceed {}", self.max_subsets),
            });
        }
        Ok(())
    }

    pub fn fits(&self, p: &Polytope) -> bool {
        self.admit(p).is_ok()
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

#[derive(Clone, Debug)]
pub struct VertexList {
    pub vertices: Vec<Vec<f64>>,
    pub source: String,
}

pub fn enumerate_vertices(p: &Polytope, limits: &OracleLimits, tol: &Tolerances) -> Result<VertexList> {
    limits.admit(p)?;
    if !p.is_box_finite() {
        return Err(Error::UnboundedBox);
    }
    let (n, r) = (p.num_normals(), p.dim());
    let eq = p.has_sum_constraint();
    let m = n + 2 * r;

    let row = |j: usize| -> (Vec<f64>, f64) {
        if j < n {
            (p.normal(j).to_vec(), 0.0)
        } else if j < n + r {
            let mut g = vec![0.0; r];
            g[j - n] = 1.0;
            (g, p.lower[j - n])
        } else {
            let mut g = vec![0.0; r];
            g[j - n - r] = -1.0;
            (g, -p.upper[j - n - r])
        }
    };
    let rows: Vec<(Vec<f64>, f64)> = (0..m).map(row).collect();
    let k = if eq { r - 1 } else { r };

    let mut found: Vec<Vec<f64>> = (0..m)
        .combinations(k)
        .par_bridge()
        .filter_map(|subset| {
            let mut a = Vec::with_capacity(r * r);
            let mut b = Vec::with_capacity(r);
            for &j in &subset {
                a.extend_from_slice(&rows[j].0);
                b.push(rows[j].1);
            }
            if eq {
                a.extend(std::iter::repeat_n(1.0, r));
                b.push(1.0);
            }
            let x = solve_square(&a, &b, r)?;
            p.contains(&x, tol.eps_feas).then_some(x)
        })
        .collect();

    found.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for v in found {
        let duplicate = vertices
            .iter()
            .rev()
            .take_while(|kept| kept[0] >= v[0] - tol.delta_unit)
            .any(|kept| linf_distance(kept, &v) <= tol.delta_unit);
        if !duplicate {
            vertices.push(v);
        }
    }
    Ok(VertexList {
        vertices,
        source: format!("{} normals, dim {}, sum constraint {}", n, r, eq),
    })
}

#[derive(Clone, Debug)]
pub struct ExactMax {
    pub value: f64,
    pub maximizers: Vec<Vec<f64>>,
    pub num_vertices: usize,
}

/// Maximum of `‖x‖²` over `p` and every vertex within `eps_pool` of it.
pub fn exact_max_norm(p: &Polytope, limits: &OracleLimits, tol: &Tolerances) -> Result<ExactMax> {
    let list = enumerate_vertices(p, limits, tol)?;
    if list.vertices.is_empty() {
        return Err(Error::InfeasiblePolytope);
    }
    let value = list
        .vertices
        .iter()
        .map(|v| squared_norm(v))
        .fold(f64::NEG_INFINITY, f64::max);
    let num_vertices = list.vertices.len();
    let maximizers = list
        .vertices
        .into_iter()
        .filter(|v| squared_norm(v) >= value - tol.eps_pool)
        .collect();
    Ok(ExactMax {
        value,
        maximizers,
        num_vertices,
    })
}
