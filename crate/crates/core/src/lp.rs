//! Dense simplex over small polytopes.
//!
//! Problems live in the r-dimensional variable space and carry many more
//! constraints than variables, so the solver walks vertices directly: the
//! basis is a set of r linearly independent active constraints (the simplex
//! method applied to the dual). Bland's smallest-index rule picks both the
//! leaving and the entering constraint, which rules out cycling on the
//! degenerate vertices that sparse factor matrices produce. The basis inverse
//! is recomputed from scratch after every pivot.
//!
//! Constraints of a [`Polytope`] with n normals in dimension r are indexed as
//! follows; duals and Farkas certificates use the same layout.
//!
//! | index            | constraint          |
//! |------------------|---------------------|
//! | `0..n`           | `a_jᵀx ≥ 0`         |
//! | `n..n+r`         | `x_i ≥ l_i`         |
//! | `n+r..n+2r`      | `−x_i ≥ −u_i`       |
//! | `n+2r`           | `eᵀx = 1` (if set)  |

use crate::error::{Error, Result};
use crate::geometry::{dot, FactorMatrix, Polytope};

const PIVOT_TOL: f64 = 1e-8;
const DUAL_TOL: f64 = 1e-11;
const RATIO_TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpResult {
    pub status: LpStatus,
    /// Maximizer (or cone witness) when optimal.
    pub point: Option<Vec<f64>>,
    pub objective: f64,
    /// Multipliers `μ ≥ 0` with `c = −Σ μ_j g_j` over the constraint layout.
    pub duals: Option<Vec<f64>>,
    /// Farkas multipliers when infeasible.
    pub certificate: Option<Vec<f64>>,
}

impl LpResult {
    fn infeasible(certificate: Vec<f64>) -> Self {
        Self {
            status: LpStatus::Infeasible,
            point: None,
            objective: f64::NEG_INFINITY,
            duals: None,
            certificate: Some(certificate),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Constraint rows `g_jᵀx ≥ h_j` (or `=` when flagged) stored densely.
struct Rows {
    dim: usize,
    g: Vec<f64>,
    h: Vec<f64>,
    eq: Vec<bool>,
}

impl Rows {
    fn with_capacity(dim: usize, m: usize) -> Self {
        Self {
            dim,
            g: Vec::with_capacity(m * dim),
            h: Vec::with_capacity(m),
            eq: Vec::with_capacity(m),
        }
    }

    fn push(&mut self, g: impl IntoIterator<Item = f64>, h: f64, eq: bool) {
        let before = self.g.len();
        self.g.extend(g);
        debug_assert_eq!(self.g.len() - before, self.dim);
        self.h.push(h);
        self.eq.push(eq);
    }

    fn len(&self) -> usize {
        self.h.len()
    }

    fn row(&self, j: usize) -> &[f64] {
        &self.g[j * self.dim..(j + 1) * self.dim]
    }

    fn from_polytope(p: &Polytope, extra: usize) -> Self {
        let (n, r) = (p.num_normals(), p.dim());
        let d = r + extra;
        let mut rows = Rows::with_capacity(d, n + 2 * r + 2);
        let pad = |v: f64| std::iter::repeat_n(v, extra);
        for j in 0..n {
            rows.push(p.normal(j).iter().copied().chain(pad(1.0)), 0.0, false);
        }
        for i in 0..r {
            rows.push(unit(r, i, 1.0).chain(pad(0.0)), p.lower[i], false);
        }
        for i in 0..r {
            rows.push(unit(r, i, -1.0).chain(pad(0.0)), -p.upper[i], false);
        }
        if p.has_sum_constraint() {
            rows.push(std::iter::repeat_n(1.0, r).chain(pad(0.0)), 1.0, true);
        }
        rows
    }
}

fn unit(len: usize, i: usize, v: f64) -> impl Iterator<Item = f64> {
    (0..len).map(move |k| if k == i { v } else { 0.0 })
}

/// Gauss–Jordan inverse of a row-major `d×d` matrix.
fn invert(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; d * d];
    for i in 0..d {
        inv[i * d + i] = 1.0;
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&x, &y| m[x * d + col].abs().total_cmp(&m[y * d + col].abs()))?;
        if m[piv * d + col].abs() < 1e-12 {
            return None;
        }
        if piv != col {
            for k in 0..d {
                m.swap(piv * d + k, col * d + k);
                inv.swap(piv * d + k, col * d + k);
            }
        }
        let p = m[col * d + col];
        for k in 0..d {
            m[col * d + k] /= p;
            inv[col * d + k] /= p;
        }
        for row in 0..d {
            if row == col {
                continue;
            }
            let f = m[row * d + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..d {
                m[row * d + k] -= f * m[col * d + k];
                inv[row * d + k] -= f * inv[col * d + k];
            }
        }
    }
    Some(inv)
}

/// Solves the square system `a·x = b` (row-major), `None` when singular.
pub(crate) fn solve_square(a: &[f64], b: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..d {
        let piv = (col..d).max_by(|&x, &y| m[x * d + col].abs().total_cmp(&m[y * d + col].abs()))?;
        if m[piv * d + col].abs() < 1e-10 {
            return None;
        }
        if piv != col {
            for k in 0..d {
                m.swap(piv * d + k, col * d + k);
            }
            rhs.swap(piv, col);
        }
        for row in col + 1..d {
            let f = m[row * d + col] / m[col * d + col];
            if f == 0.0 {
                continue;
            }
            for k in col..d {
                m[row * d + k] -= f * m[col * d + k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; d];
    for row in (0..d).rev() {
        let s: f64 = (row + 1..d).map(|k| m[row * d + k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row * d + row];
    }
    Some(x)
}

enum Walk {
    Optimal {
        working: Vec<usize>,
        x: Vec<f64>,
        lambda: Vec<f64>,
    },
    Unbounded,
}

struct Basis<'a> {
    rows: &'a Rows,
    working: Vec<usize>,
    inv: Vec<f64>,
}

impl<'a> Basis<'a> {
    fn new(rows: &'a Rows, working: Vec<usize>) -> Option<Self> {
        let mut b = Self {
            rows,
            working,
            inv: Vec::new(),
        };
        b.refactor()?;
        Some(b)
    }

    fn refactor(&mut self) -> Option<()> {
        let d = self.rows.dim;
        let mut a = Vec::with_capacity(d * d);
        for &j in &self.working {
            a.extend_from_slice(self.rows.row(j));
        }
        self.inv = invert(&a, d)?;
        Some(())
    }

    fn vertex(&self) -> Vec<f64> {
        let d = self.rows.dim;
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|k| self.inv[i * d + k] * self.rows.h[self.working[k]])
                    .sum()
            })
            .collect()
    }

    /// Coefficients of `c` in the basis rows: `c = Σ λ_k g_{W_k}`.
    fn multipliers(&self, c: &[f64]) -> Vec<f64> {
        let d = self.rows.dim;
        (0..d)
            .map(|k| (0..d).map(|i| self.inv[i * d + k] * c[i]).sum())
            .collect()
    }

    /// Column `pos` of the inverse.
    fn direction(&self, pos: usize) -> Vec<f64> {
        let d = self.rows.dim;
        (0..d).map(|i| self.inv[i * d + pos]).collect()
    }

    fn replace(&mut self, pos: usize, entering: usize) -> Option<()> {
        self.working[pos] = entering;
        self.refactor()
    }
}

fn walk(rows: &Rows, c: &[f64], working: Vec<usize>, budget: usize) -> Result<Walk> {
    let mut basis = Basis::new(rows, working).ok_or(Error::SingularBasis(0))?;
    let dual_tol = DUAL_TOL * c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut in_working = vec![false; rows.len()];
    for &j in &basis.working {
        in_working[j] = true;
    }

    for iter in 0..budget {
        let x = basis.vertex();
        let lambda = basis.multipliers(c);

        let leave = (0..rows.dim)
            .filter(|&k| !rows.eq[basis.working[k]] && lambda[k] > dual_tol)
            .min_by_key(|&k| basis.working[k]);
        let Some(pos) = leave else {
            return Ok(Walk::Optimal {
                working: basis.working,
                x,
                lambda,
            });
        };

        let dir = basis.direction(pos);
        let dir_scale = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut best: Option<(usize, f64)> = None;
        for (i, &working_row) in in_working.iter().enumerate() {
            if working_row {
                continue;
            }
            let g = rows.row(i);
            let gd = dot(g, &dir);
            let g_scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if gd >= -PIVOT_TOL * g_scale * dir_scale {
                continue;
            }
            let slack = (dot(g, &x) - rows.h[i]).max(0.0);
            let t = slack / -gd;
            let better = match best {
                None => true,
                Some((_, bt)) => t < bt - RATIO_TIE * (1.0 + bt),
            };
            if better {
                best = Some((i, t));
            }
        }
        let Some((entering, _)) = best else {
            return Ok(Walk::Unbounded);
        };

        in_working[basis.working[pos]] = false;
        in_working[entering] = true;
        basis.replace(pos, entering).ok_or(Error::SingularBasis(iter))?;
    }
    Err(Error::PivotBudget(budget))
}

fn budget_for(rows: &Rows) -> usize {
    1000 + 50 * (rows.len() + rows.dim)
}

/// A feasible vertex of the box slab `{l ≤ x ≤ u, eᵀx = 1}` together with its
/// active box constraints, or a Farkas certificate if that slab is empty.
fn box_start(p: &Polytope) -> std::result::Result<(Vec<f64>, Vec<usize>), Vec<f64>> {
    let (n, r) = (p.num_normals(), p.dim());
    let m = n + 2 * r + usize::from(p.has_sum_constraint());
    let lower_row = |i: usize| n + i;
    let upper_row = |i: usize| n + r + i;

    for i in 0..r {
        if p.lower[i] > p.upper[i] {
            let mut y = vec![0.0; m];
            y[lower_row(i)] = 1.0;
            y[upper_row(i)] = 1.0;
            return Err(y);
        }
    }
    if !p.has_sum_constraint() {
        return Ok((p.lower.clone(), (0..r).map(lower_row).collect()));
    }

    let sum_row = n + 2 * r;
    let lo: f64 = p.lower.iter().sum();
    let hi: f64 = p.upper.iter().sum();
    if lo > 1.0 {
        let mut y = vec![0.0; m];
        (0..r).for_each(|i| y[lower_row(i)] = 1.0);
        y[sum_row] = -1.0;
        return Err(y);
    }
    if hi < 1.0 {
        let mut y = vec![0.0; m];
        (0..r).for_each(|i| y[upper_row(i)] = 1.0);
        y[sum_row] = 1.0;
        return Err(y);
    }

    let mut x = p.lower.clone();
    let mut remaining = 1.0 - lo;
    let mut free = r - 1;
    for (i, xi) in x.iter_mut().enumerate() {
        if remaining <= 0.0 {
            break;
        }
        let step = (p.upper[i] - p.lower[i]).min(remaining);
        *xi += step;
        remaining -= step;
        free = i;
    }
    // `free` absorbs the equality; the others sit on a bound.
    let mut working = Vec::with_capacity(r);
    for i in (0..r).filter(|&i| i != free) {
        let at_upper = x[i] > p.lower[i];
        working.push(if at_upper { upper_row(i) } else { lower_row(i) });
    }
    working.push(sum_row);
    x[free] = 1.0 - (0..r).filter(|&i| i != free).map(|i| x[i]).sum::<f64>();
    Ok((x, working))
}

/// Returns a feasible basis (working set) of `p`, or a Farkas certificate.
fn feasible_basis(p: &Polytope) -> Result<std::result::Result<Vec<usize>, Vec<f64>>> {
    let (x0, working) = match box_start(p) {
        Ok(v) => v,
        Err(cert) => return Ok(Err(cert)),
    };
    let n = p.num_normals();
    let (worst, most_violated) = (0..n)
        .map(|j| (-dot(p.normal(j), &x0), j))
        .fold((0.0, usize::MAX), |acc, v| if v.0 > acc.0 { v } else { acc });
    if worst <= 0.0 {
        return Ok(Ok(working));
    }

    // Phase 1: relax the normal constraints by s ≥ 0 and drive s to zero.
    let r = p.dim();
    let mut rows = Rows::from_polytope(p, 1);
    let s_row = rows.len();
    rows.push(unit(r + 1, r, 1.0), 0.0, false);
    let mut phase1 = working.clone();
    phase1.push(most_violated);
    let mut c = vec![0.0; r + 1];
    c[r] = -1.0;

    let budget = budget_for(&rows);
    let (working, x, lambda) = match walk(&rows, &c, phase1, budget)? {
        Walk::Optimal { working, x, lambda } => (working, x, lambda),
        Walk::Unbounded => return Err(Error::InfeasiblePolytope),
    };
    let s = x[r];
    if s > 1e-10 {
        let mut y = vec![0.0; s_row];
        for (k, &j) in working.iter().enumerate() {
            if j < s_row {
                y[j] = -lambda[k];
            }
        }
        return Ok(Err(y));
    }

    if let Some(pos) = working.iter().position(|&j| j == s_row) {
        let mut w = working;
        w.remove(pos);
        return Ok(Ok(w));
    }
    // s sits at zero but its bound is not in the basis: swap it in for the row
    // with the largest coefficient in the representation of e_s.
    let basis = Basis::new(&rows, working.clone()).ok_or(Error::SingularBasis(0))?;
    let d = r + 1;
    let pos = (0..d)
        .filter(|&k| !rows.eq[working[k]])
        .max_by(|&a, &b| basis.inv[r * d + a].abs().total_cmp(&basis.inv[r * d + b].abs()))
        .ok_or(Error::InfeasiblePolytope)?;
    let mut w = working;
    w.remove(pos);
    Ok(Ok(w))
}

/// Maximizes `cᵀx` over a polytope with a finite box.
pub fn maximize_linear(p: &Polytope, c: &[f64]) -> Result<LpResult> {
    if c.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: c.len(),
        });
    }
    if !p.is_box_finite() {
        return Err(Error::UnboundedBox);
    }
    let working = match feasible_basis(p)? {
        Ok(w) => w,
        Err(cert) => return Ok(LpResult::infeasible(cert)),
    };
    let rows = Rows::from_polytope(p, 0);
    match walk(&rows, c, working, budget_for(&rows))? {
        Walk::Optimal { working, x, lambda } => {
            let mut duals = vec![0.0; rows.len()];
            for (k, &j) in working.iter().enumerate() {
                duals[j] = if rows.eq[j] {
                    -lambda[k]
                } else {
                    (-lambda[k]).max(0.0)
                };
            }
            Ok(LpResult {
                status: LpStatus::Optimal,
                objective: dot(c, &x),
                point: Some(x),
                duals: Some(duals),
                certificate: None,
            })
        }
        Walk::Unbounded => Ok(LpResult {
            status: LpStatus::Unbounded,
            point: None,
            objective: f64::INFINITY,
            duals: None,
            certificate: None,
        }),
    }
}

pub fn minimize_linear(p: &Polytope, c: &[f64]) -> Result<LpResult> {
    let neg: Vec<f64> = c.iter().map(|v| -v).collect();
    let mut res = maximize_linear(p, &neg)?;
    if res.is_optimal() {
        res.objective = -res.objective;
    }
    Ok(res)
}

/// Exact LP range of coordinate `i` over `p`; `None` when `p` is empty.
pub fn coordinate_range(p: &Polytope, i: usize) -> Result<Option<(f64, f64)>> {
    if i >= p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: i + 1,
        });
    }
    let mut c = vec![0.0; p.dim()];
    c[i] = 1.0;
    let hi = maximize_linear(p, &c)?;
    if !hi.is_optimal() {
        return Ok(None);
    }
    let lo = minimize_linear(p, &c)?;
    if !lo.is_optimal() {
        return Ok(None);
    }
    Ok(Some((lo.objective, hi.objective)))
}

/// Checks Farkas multipliers `y` against the constraints of `p`: `y ≥ 0` on
/// inequalities, `Σ y_j g_j = 0` and `Σ y_j h_j > 0`.
pub fn verify_farkas(p: &Polytope, y: &[f64], eps_feas: f64) -> bool {
    let rows = Rows::from_polytope(p, 0);
    if y.len() != rows.len() {
        return false;
    }
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut combo = vec![0.0; rows.dim];
    let mut rhs = 0.0;
    for (j, &yj) in y.iter().enumerate() {
        if !rows.eq[j] && yj < -eps_feas * scale {
            return false;
        }
        for (c, g) in combo.iter_mut().zip(rows.row(j)) {
            *c += yj * g;
        }
        rhs += yj * rows.h[j];
    }
    combo.iter().all(|v| v.abs() <= eps_feas * scale) && rhs > eps_feas * scale
}

/// Decides whether `v` lies in cone(H).
///
/// Minimizes `pᵀv` over `{Hᵀp ≥ 0, −1 ≤ p ≤ 1}`. A negative optimum yields a
/// separating `p` (returned as the certificate with status `Infeasible`);
/// otherwise the LP duals on `Hᵀp ≥ 0` form a witness `y ≥ 0` with `Hy = v`
/// (status `Optimal`, witness in `point`).
pub fn cone_member(h: &FactorMatrix, v: &[f64], eps_feas: f64) -> Result<LpResult> {
    if v.len() != h.rank() {
        return Err(Error::DimensionMismatch {
            expected: h.rank(),
            found: v.len(),
        });
    }
    let p = Polytope::dual_cone_slice(h);
    let res = minimize_linear(&p, v)?;
    if !res.is_optimal() {
        // p = 0 is always feasible, so this is a numerical failure.
        return Err(Error::InfeasiblePolytope);
    }
    if res.objective < -eps_feas {
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            point: None,
            objective: res.objective,
            duals: None,
            certificate: res.point,
        });
    }
    let duals = res.duals.expect("optimal result carries duals");
    let y = duals[..h.ncols()].to_vec();
    Ok(LpResult {
        status: LpStatus::Optimal,
        point: Some(y),
        objective: res.objective,
        duals: None,
        certificate: None,
    })
}
