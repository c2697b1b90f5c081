//! Spatial branch-and-bound for `max ‖x‖²` over a box-bounded polytope.
//!
//! Each node is a sub-box; its bound comes from maximizing the secant
//! overestimator over the polytope restricted to the box. Nodes are explored
//! best-bound first. Every relaxation point is pushed to a vertex of the
//! polytope by successive linearization (`x ← argmax xᵀy`), which never
//! decreases the norm and lands exactly on vertices, so incumbents and pool
//! members are vertices rather than points near them.
//!
//! Around a unit vector `e_i` that is a strict local maximizer, the tangent
//! cone K_i of the polytope gives `‖d‖∞ ≤ M_i·|d_i|` for every `d ∈ K_i`.
//! Since the polytope lies in `e_i + K_i`, every feasible x satisfies
//! `‖x‖² ≤ 1 − 2s + c_i·s²` with `s = 1 − x_i` and `c_i = 1 + (r−1)·M_i²`.
//! This caps node bounds near `e_i` and closes nodes with `x_i ≥ 1 − 1/c_i`,
//! whose near-optimal points all lie within a small radius of `e_i`.
//!
//! Workers share one frontier behind a mutex. Bounds are computed outside the
//! lock; incumbent, pool and frontier updates happen inside it, one node at a
//! time.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dot, linf_distance, squared_norm, FactorMatrix, Polytope, Tolerances, UnitVector};
use crate::lp::{maximize_linear, minimize_linear};
use crate::relax::{node_upper_bound, secant_gap, tighten_box};

const MAX_POLISH_STEPS: usize = 16;
/// Box half-width for the tangent-cone LPs; reaching half of it means unbounded.
const CONE_BOX: f64 = 1e4;
const SPLIT_MARGIN: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct BnbConfig {
    pub deadline: Duration,
    pub pool_mode: bool,
    pub workers: usize,
    /// Tighten the node box by LP every `tighten_stride` levels.
    pub tighten_stride: usize,
    pub max_nodes: usize,
    /// Defaults to r + 1.
    pub pool_capacity: Option<usize>,
    /// Use the tangent-cone bounds at unit vectors.
    pub unit_caps: bool,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self {
            deadline: Duration::from_secs(300),
            pool_mode: false,
            workers: 1,
            tighten_stride: 4,
            max_nodes: 1_000_000,
            pool_capacity: None,
            unit_caps: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalStatus {
    ThresholdExceeded,
    Converged,
    Deadline,
}

/// Distinct near-optimal points found during the search.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SolutionPool {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    capacity: usize,
}

impl SolutionPool {
    pub fn new(capacity: usize) -> Self {
        Self {
            points: Vec::new(),
            values: Vec::new(),
            capacity,
        }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn near(&self, x: &[f64], delta: f64) -> bool {
        self.points.iter().any(|p| linf_distance(p, x) <= delta)
    }

    /// Admits `x` if it is within `eps_pool` of `best` and distinct from
    /// every member; evicts the worst member when full.
    pub fn offer(&mut self, x: &[f64], value: f64, best: f64, tol: &Tolerances) -> bool {
        if value < best - tol.eps_pool || self.near(x, tol.delta_unit) {
            return false;
        }
        if self.points.len() < self.capacity {
            self.points.push(x.to_vec());
            self.values.push(value);
            return true;
        }
        let Some((worst, &worst_value)) = self.values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))
        else {
            return false;
        };
        if value > worst_value {
            self.points[worst] = x.to_vec();
            self.values[worst] = value;
            return true;
        }
        false
    }

    fn retain_at_least(&mut self, floor: f64) {
        let mut k = 0;
        while k < self.points.len() {
            if self.values[k] < floor {
                self.points.remove(k);
                self.values.remove(k);
            } else {
                k += 1;
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalResult {
    pub status: GlobalStatus,
    /// Best squared norm found; a valid lower bound on the optimum.
    pub best_value: f64,
    pub best_point: Vec<f64>,
    /// Upper bound on the optimal squared norm.
    pub global_ub: f64,
    pub pool: SolutionPool,
    pub nodes_explored: u64,
    #[serde(serialize_with = "serialize_secs")]
    pub elapsed: Duration,
    /// The frontier reached `max_nodes`; reported with status `Deadline`.
    pub node_limit_hit: bool,
    /// Pool mode: minimal boxes closed without a nearby pool member.
    pub unmatched_tiny_nodes: u64,
    /// Pool mode: nodes closed by a unit-vector cap.
    pub unit_capped_nodes: u64,
    /// Largest ℓ∞ radius around a capped unit vector inside which
    /// near-optimal points are identified with it.
    pub unit_match_radius: f64,
}

fn serialize_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Clone, Debug)]
struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    depth: usize,
    ub: f64,
    relax_point: Vec<f64>,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap on the bound; older nodes first among equal bounds.
    fn cmp(&self, other: &Self) -> Ordering {
        self.ub
            .total_cmp(&other.ub)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// A bounded child box plus the points found while bounding it.
struct Evaluated {
    lower: Vec<f64>,
    upper: Vec<f64>,
    depth: usize,
    ub: f64,
    relax_point: Vec<f64>,
    relax_value: f64,
    vertex: Option<(Vec<f64>, f64)>,
}

/// Local bound at a unit vector that strictly maximizes the norm nearby.
#[derive(Clone, Copy, Debug)]
struct UnitCap {
    index: usize,
    c: f64,
    match_radius: f64,
}

impl UnitCap {
    /// Upper bound on `‖x‖²` over feasible x with `x_i ∈ [lo, hi]`.
    fn bound(&self, lo: f64, hi: f64) -> f64 {
        let g = |s: f64| 1.0 - 2.0 * s + self.c * s * s;
        g(1.0 - hi).max(g(1.0 - lo))
    }

    /// Whether `x_i ≥ lo` confines the node to the region where e_i is the
    /// only near-optimal point.
    fn closes(&self, lo: f64) -> bool {
        self.match_radius.is_finite() && 1.0 - lo <= 1.0 / self.c
    }
}

/// Computes the cap at `e_i`, or `None` when e_i is infeasible or not a
/// strict local maximizer with a bounded cone ratio.
fn unit_cap(p: &Polytope, i: usize, tol: &Tolerances) -> Result<Option<UnitCap>> {
    let r = p.dim();
    let e = UnitVector::new(i, r).to_vec();
    if !p.has_sum_constraint() || !p.contains(&e, 0.0) || p.upper[i] != 1.0 || r < 2 {
        return Ok(None);
    }
    // Q_i = {d ∈ K_i : d_i = −1} in the coordinates k ≠ i, where Σ d_k = 1.
    let drop_i = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, &x)| x)
            .collect()
    };
    let mut normals = Vec::new();
    for j in 0..p.num_normals() {
        let a = p.normal(j);
        if a[i] == 0.0 {
            normals.extend(drop_i(a));
        }
    }
    let others: Vec<usize> = (0..r).filter(|&k| k != i).collect();
    let lower = others
        .iter()
        .map(|&k| if p.lower[k] == 0.0 { 0.0 } else { -CONE_BOX })
        .collect();
    let upper = others
        .iter()
        .map(|&k| if p.upper[k] == 0.0 { 0.0 } else { CONE_BOX })
        .collect();
    let q = Polytope::new(r - 1, normals, true, lower, upper)?;
    let mut m = 0.0f64;
    let mut c = vec![0.0; r - 1];
    for k in 0..r - 1 {
        c[k] = 1.0;
        let hi = maximize_linear(&q, &c)?;
        let lo = minimize_linear(&q, &c)?;
        c[k] = 0.0;
        if !hi.is_optimal() || !lo.is_optimal() {
            return Ok(None);
        }
        m = m.max(hi.objective.abs()).max(lo.objective.abs());
    }
    if m >= 0.5 * CONE_BOX {
        return Ok(None);
    }
    let c = 1.0 + (r - 1) as f64 * m * m;
    let eps = tol.eps_pool;
    let match_radius = if c * eps < 1.0 {
        m.max(1.0) * eps / (2.0 - c * eps)
    } else {
        f64::INFINITY
    };
    Ok(Some(UnitCap {
        index: i,
        c,
        match_radius,
    }))
}

struct Search<'a> {
    polytope: &'a Polytope,
    tol: &'a Tolerances,
    cfg: &'a BnbConfig,
    caps: Vec<UnitCap>,
}

impl Search<'_> {
    fn evaluate(&self, lower: Vec<f64>, upper: Vec<f64>, depth: usize) -> Result<Option<Evaluated>> {
        let (lower, upper) = if self.cfg.tighten_stride > 0 && depth.is_multiple_of(self.cfg.tighten_stride) {
            match tighten_box(self.polytope, &lower, &upper)? {
                Some(b) => b,
                None => return Ok(None),
            }
        } else {
            (lower, upper)
        };
        let bound = node_upper_bound(self.polytope, &lower, &upper)?;
        let Some(relax_point) = bound.relax_point else {
            return Ok(None);
        };
        let relax_value = squared_norm(&relax_point);
        let cap_ub = self
            .caps
            .iter()
            .map(|cap| cap.bound(lower[cap.index], upper[cap.index]))
            .fold(f64::INFINITY, f64::min);
        let vertex = self.polish(&relax_point)?;
        Ok(Some(Evaluated {
            lower,
            upper,
            depth,
            // The relaxation can never be below a point it contains.
            ub: bound.ub.min(cap_ub).max(relax_value),
            relax_point,
            relax_value,
            vertex,
        }))
    }

    /// Successive linearization from `x` to a vertex of the whole polytope.
    fn polish(&self, x: &[f64]) -> Result<Option<(Vec<f64>, f64)>> {
        let mut dir = x.to_vec();
        let mut best: Option<(Vec<f64>, f64)> = None;
        for _ in 0..MAX_POLISH_STEPS {
            let res = maximize_linear(self.polytope, &dir)?;
            let Some(y) = res.point else { break };
            let fy = squared_norm(&y);
            if best.as_ref().is_some_and(|(_, f)| fy <= f + 1e-12) {
                break;
            }
            dir.clone_from(&y);
            best = Some((y, fy));
        }
        Ok(best)
    }
}

enum Stop {
    Threshold,
    Converged,
    Deadline,
    Failed(Error),
}

struct State {
    heap: BinaryHeap<Node>,
    seq: u64,
    in_flight: usize,
    stop: Option<Stop>,
    best_value: f64,
    best_point: Vec<f64>,
    pool: SolutionPool,
    nodes_explored: u64,
    max_discarded_ub: f64,
    node_limit_hit: bool,
    unmatched_tiny_nodes: u64,
    unit_capped_nodes: u64,
}

impl State {
    fn prunable(&self, ub: f64, tol: &Tolerances, pool_mode: bool) -> bool {
        if pool_mode {
            ub < self.best_value - tol.eps_pool
        } else {
            ub <= self.best_value + tol.eps_gap * self.best_value.abs().max(1.0)
        }
    }

    fn discard(&mut self, ub: f64) {
        self.max_discarded_ub = self.max_discarded_ub.max(ub);
    }

    fn record(&mut self, x: &[f64], value: f64, is_vertex: bool, tol: &Tolerances, pool_mode: bool) {
        if value > self.best_value {
            self.best_value = value;
            self.best_point = x.to_vec();
            self.pool.retain_at_least(value - tol.eps_pool);
        }
        if is_vertex {
            self.pool.offer(x, value, self.best_value, tol);
        }
        let reached =
            self.best_value >= tol.stop_threshold || (pool_mode && self.best_value > 1.0 + tol.eps_pool);
        if reached && self.stop.is_none() {
            self.stop = Some(Stop::Threshold);
        }
    }

    fn push(&mut self, e: Evaluated, tol: &Tolerances, pool_mode: bool) {
        if let Some((v, f)) = &e.vertex {
            self.record(v, *f, true, tol, pool_mode);
        }
        self.record(&e.relax_point, e.relax_value, false, tol, pool_mode);
        if self.prunable(e.ub, tol, pool_mode) {
            self.discard(e.ub);
            return;
        }
        self.seq += 1;
        self.heap.push(Node {
            lower: e.lower,
            upper: e.upper,
            depth: e.depth,
            ub: e.ub,
            relax_point: e.relax_point,
            seq: self.seq,
        });
    }
}

enum Action {
    Fathom,
    Branch(Node, usize, f64),
}

fn choose_action(node: Node, st: &mut State, search: &Search<'_>) -> Action {
    let (tol, pool_mode) = (search.tol, search.cfg.pool_mode);
    if pool_mode && st.best_value >= 1.0 && search.caps.iter().any(|cap| cap.closes(node.lower[cap.index])) {
        st.unit_capped_nodes += 1;
        st.discard(node.ub);
        return Action::Fathom;
    }
    let widths: Vec<f64> = node.lower.iter().zip(&node.upper).map(|(l, u)| u - l).collect();
    let diameter = widths.iter().cloned().fold(0.0, f64::max);
    if pool_mode && diameter <= tol.delta_unit {
        if !st.pool.near(&node.relax_point, tol.delta_unit) {
            st.unmatched_tiny_nodes += 1;
        }
        st.discard(node.ub);
        return Action::Fathom;
    }
    if diameter <= 1e-12 {
        st.discard(node.ub);
        return Action::Fathom;
    }
    let gaps = (0..widths.len()).map(|i| secant_gap(node.lower[i], node.upper[i], node.relax_point[i]));
    let (mut coord, max_gap) =
        gaps.enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, g)| if g > acc.1 { (i, g) } else { acc },
        );
    if max_gap <= 0.0 {
        coord = widths
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &w)| if w > acc.1 { (i, w) } else { acc },
            )
            .0;
    }
    let (l, u) = (node.lower[coord], node.upper[coord]);
    let w = u - l;
    let split = node.relax_point[coord].clamp(l + SPLIT_MARGIN * w, u - SPLIT_MARGIN * w);
    Action::Branch(node, coord, split)
}

/// Globally maximizes `‖x‖²` over `p`.
///
/// Stops early once a point reaches `tol.stop_threshold`. With
/// `cfg.pool_mode`, nodes are kept until their bound drops below
/// `best − eps_pool` (or they shrink to `delta_unit`), so the pool ends up
/// holding every distinct vertex within `eps_pool` of the optimum, up to its
/// capacity. Pool mode looks for the maximizers of a unit optimum, so it also
/// stops as soon as a point exceeds `1 + eps_pool`.
pub fn maximize_norm(p: &Polytope, tol: &Tolerances, cfg: &BnbConfig) -> Result<GlobalResult> {
    tol.validate()?;
    if !p.is_box_finite() {
        return Err(Error::UnboundedBox);
    }
    let start = Instant::now();
    let r = p.dim();
    let mut caps = Vec::new();
    if cfg.unit_caps {
        for i in 0..r {
            if let Some(cap) = unit_cap(p, i, tol)? {
                caps.push(cap);
            }
        }
    }
    let unit_match_radius = caps.iter().map(|c| c.match_radius).fold(0.0, f64::max);
    let search = Search {
        polytope: p,
        tol,
        cfg,
        caps,
    };

    let mut st = State {
        heap: BinaryHeap::new(),
        seq: 0,
        in_flight: 0,
        stop: None,
        best_value: f64::NEG_INFINITY,
        best_point: Vec::new(),
        pool: SolutionPool::new(cfg.pool_capacity.unwrap_or(r + 1)),
        nodes_explored: 0,
        max_discarded_ub: f64::NEG_INFINITY,
        node_limit_hit: false,
        unmatched_tiny_nodes: 0,
        unit_capped_nodes: 0,
    };
    if p.has_sum_constraint() {
        for e in UnitVector::all(r) {
            let x = e.to_vec();
            if p.contains(&x, tol.eps_feas) {
                st.record(&x, 1.0, true, tol, cfg.pool_mode);
            }
        }
    }
    let root = search
        .evaluate(p.lower.clone(), p.upper.clone(), 0)?
        .ok_or(Error::InfeasiblePolytope)?;
    st.push(root, tol, cfg.pool_mode);

    let shared = Mutex::new(st);
    let wake = Condvar::new();
    let deadline = start + cfg.deadline;
    std::thread::scope(|scope| {
        for _ in 0..cfg.workers.max(1) {
            scope.spawn(|| worker(&search, &shared, &wake, deadline));
        }
    });

    let st = shared.into_inner().expect("worker panicked");
    let status = match st.stop {
        Some(Stop::Threshold) => GlobalStatus::ThresholdExceeded,
        Some(Stop::Converged) => GlobalStatus::Converged,
        Some(Stop::Deadline) => GlobalStatus::Deadline,
        Some(Stop::Failed(e)) => return Err(e),
        None => GlobalStatus::Converged,
    };
    let frontier_ub = st.heap.peek().map_or(f64::NEG_INFINITY, |n| n.ub);
    let global_ub = st.best_value.max(st.max_discarded_ub).max(frontier_ub);
    let mut pool = st.pool;
    if status == GlobalStatus::ThresholdExceeded && !pool.near(&st.best_point, tol.delta_unit) {
        if pool.points.len() >= pool.capacity {
            pool.points.pop();
            pool.values.pop();
        }
        pool.points.push(st.best_point.clone());
        pool.values.push(st.best_value);
    }
    Ok(GlobalResult {
        status,
        best_value: st.best_value,
        best_point: st.best_point,
        global_ub,
        pool,
        nodes_explored: st.nodes_explored,
        elapsed: start.elapsed(),
        node_limit_hit: st.node_limit_hit,
        unmatched_tiny_nodes: st.unmatched_tiny_nodes,
        unit_capped_nodes: st.unit_capped_nodes,
        unit_match_radius,
    })
}

fn worker(search: &Search<'_>, shared: &Mutex<State>, wake: &Condvar, deadline: Instant) {
    let (tol, cfg) = (search.tol, search.cfg);
    loop {
        let (node, coord, split) = {
            let mut st = shared.lock().expect("poisoned");
            loop {
                if st.stop.is_some() {
                    wake.notify_all();
                    return;
                }
                if Instant::now() >= deadline {
                    st.stop = Some(Stop::Deadline);
                    continue;
                }
                if st.heap.len() >= cfg.max_nodes {
                    st.node_limit_hit = true;
                    st.stop = Some(Stop::Deadline);
                    continue;
                }
                if let Some(node) = st.heap.pop() {
                    if st.prunable(node.ub, tol, cfg.pool_mode) {
                        st.discard(node.ub);
                        continue;
                    }
                    st.nodes_explored += 1;
                    match choose_action(node, &mut st, search) {
                        Action::Fathom => continue,
                        Action::Branch(node, coord, split) => {
                            st.in_flight += 1;
                            break (node, coord, split);
                        }
                    }
                }
                if st.in_flight == 0 {
                    st.stop = Some(Stop::Converged);
                    continue;
                }
                st = wake.wait(st).expect("poisoned");
            }
        };

        let mut children = Vec::with_capacity(2);
        let mut failure = None;
        for (lo, hi) in [(node.lower[coord], split), (split, node.upper[coord])] {
            let mut lower = node.lower.clone();
            let mut upper = node.upper.clone();
            lower[coord] = lo;
            upper[coord] = hi;
            match search.evaluate(lower, upper, node.depth + 1) {
                Ok(Some(e)) => children.push(e),
                Ok(None) => {}
                Err(e) => failure = Some(e),
            }
        }

        let mut st = shared.lock().expect("poisoned");
        st.in_flight -= 1;
        if let Some(e) = failure {
            if st.stop.is_none() {
                st.stop = Some(Stop::Failed(e));
            }
        }
        for child in children {
            st.push(child, tol, cfg.pool_mode);
        }
        drop(st);
        wake.notify_all();
    }
}

/// Independent check of a violation certificate: `Hᵀx ≥ 0`, `eᵀx = 1` and
/// `‖x‖² ≥ threshold`, all up to `eps_feas`.
pub fn verify_certificate_at(h: &FactorMatrix, x: &[f64], threshold: f64, eps_feas: f64) -> bool {
    if x.len() != h.rank() || x.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let cone_ok = (0..h.ncols()).all(|j| dot(h.column(j), x) >= -eps_feas);
    let sum_ok = (x.iter().sum::<f64>() - 1.0).abs() <= eps_feas;
    cone_ok && sum_ok && squared_norm(x) >= threshold
}

/// [`verify_certificate_at`] with the stop threshold of `tol`.
pub fn verify_certificate(h: &FactorMatrix, x: &[f64], tol: &Tolerances) -> bool {
    verify_certificate_at(h, x, tol.stop_threshold, tol.eps_feas)
}
