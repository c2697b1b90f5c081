//! End-to-end check of the sufficiently scattered condition.
//!
//! H passes when (1) every `e − e_i` lies in cone(H), (2) the maximum of
//! `‖x‖²` over `{eᵀx = 1, Hᵀx ≥ 0, −1 ≤ x ≤ 1}` equals one and (3) the unit
//! vectors are its only maximizers. Step (1) is a sequence of LPs, steps
//! (2)–(3) use either branch-and-bound with a solution pool or exhaustive
//! vertex enumeration.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::bnb::{
    maximize_norm, verify_certificate, verify_certificate_at, BnbConfig, GlobalResult, GlobalStatus,
};
use crate::error::Result;
use crate::geometry::{squared_norm, FactorMatrix, Polytope, Tolerances, UnitVector};
use crate::lp::cone_member;
use crate::oracle::{exact_max_norm, OracleLimits};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    NcsscFailed,
    NormExceedsOne,
    ExtraMaximizer,
    AllChecksPassed,
    DeadlineReached,
    SparsityScreenFailed,
}

/// Requested decision path for the norm maximization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Vertex enumeration when within budget, branch-and-bound otherwise.
    #[default]
    Auto,
    Bnb,
    Oracle,
}

/// The path that decided the maximizer set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodUsed {
    /// The verdict was reached before any norm maximization.
    None,
    /// Branch-and-bound without pool, stopped at the threshold.
    BnbThreshold,
    BnbPool,
    OracleExact,
}

#[derive(Clone, Debug, Serialize)]
pub struct NcsscReport {
    pub holds: bool,
    /// `y_i ≥ 0` with `H y_i = e − e_i`, over the normalized columns of H.
    pub witnesses: Vec<Vec<f64>>,
    pub witnesses_verified: bool,
    pub failed_index: Option<usize>,
    /// `p` with `pᵀH ≥ 0` and `pᵀ(e − e_i) < 0` for the failing index.
    pub farkas_certificate: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// `‖x‖² ≥ stop_threshold`, checked by `verify_certificate`.
    NormAboveThreshold,
    /// `1 + eps_pool < ‖x‖² < stop_threshold`.
    NormAboveOne,
    /// A non-unit point of norm one.
    ExtraMaximizer,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub point: Vec<f64>,
    pub squared_norm: f64,
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchStats {
    pub status: GlobalStatus,
    pub pool_mode: bool,
    pub nodes_explored: u64,
    pub node_limit_hit: bool,
    pub unmatched_tiny_nodes: u64,
    pub unit_capped_nodes: u64,
    pub unit_match_radius: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub sparsity_s: f64,
    pub ncssc_s: f64,
    pub search_s: f64,
    pub oracle_s: f64,
    pub total_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SscReport {
    pub verdict: Verdict,
    pub verdict_label: String,
    pub reason: Reason,
    pub method: MethodUsed,
    pub rank: usize,
    pub ncols: usize,
    pub dropped_columns: Vec<usize>,
    pub sparsity_screen_passed: bool,
    pub strict_sparsity: bool,
    pub ncssc: Option<NcsscReport>,
    pub certificate: Option<Certificate>,
    /// Maximizers (oracle) or pool members (branch-and-bound).
    pub maximizers: Vec<Vec<f64>>,
    /// Lower and upper bound on the optimal squared norm.
    pub q_star_bounds: Option<(f64, f64)>,
    pub search: Option<SearchStats>,
    /// How the threshold test and the maximizer inspection were scheduled.
    pub search_phases: &'static str,
    pub tolerances: Tolerances,
    pub deadline_s: f64,
    pub note: Option<String>,
    pub stats: Timings,
}

#[derive(Clone, Debug)]
pub struct SscOptions {
    pub tol: Tolerances,
    pub deadline: Duration,
    pub method: Method,
    pub workers: usize,
    pub strict_sparsity: bool,
    pub oracle_limits: OracleLimits,
    pub tighten_stride: usize,
    pub max_nodes: usize,
}

impl Default for SscOptions {
    fn default() -> Self {
        let bnb = BnbConfig::default();
        Self {
            tol: Tolerances::default(),
            deadline: bnb.deadline,
            method: Method::Auto,
            workers: 1,
            strict_sparsity: false,
            oracle_limits: OracleLimits::default(),
            tighten_stride: bnb.tighten_stride,
            max_nodes: bnb.max_nodes,
        }
    }
}

impl SscOptions {
    fn bnb_config(&self, pool_mode: bool, remaining: Duration) -> BnbConfig {
        BnbConfig {
            deadline: remaining,
            pool_mode,
            workers: self.workers,
            tighten_stride: self.tighten_stride,
            max_nodes: self.max_nodes,
            pool_capacity: None,
            unit_caps: true,
        }
    }
}

/// True iff every row has at least r − 1 entries below `eps_feas`.
pub fn sparsity_screen(h: &FactorMatrix, eps_feas: f64) -> bool {
    let r = h.rank();
    (0..r).all(|i| {
        let zeros = (0..h.ncols()).filter(|&j| h.entry(i, j) < eps_feas).count();
        zeros + 1 >= r
    })
}

/// Checks `e − e_i ∈ cone(H)` for each i, stopping at the first failure.
pub fn check_ncssc(h: &FactorMatrix, tol: &Tolerances) -> Result<NcsscReport> {
    let r = h.rank();
    let mut witnesses = Vec::with_capacity(r);
    let mut verified = true;
    for i in 0..r {
        let mut v = vec![1.0; r];
        v[i] = 0.0;
        let res = cone_member(h, &v, tol.eps_feas)?;
        match res.point {
            Some(y) => {
                verified &= witness_ok(h, &y, &v, tol.eps_feas);
                witnesses.push(y);
            }
            None => {
                return Ok(NcsscReport {
                    holds: false,
                    witnesses,
                    witnesses_verified: verified,
                    failed_index: Some(i),
                    farkas_certificate: res.certificate,
                });
            }
        }
    }
    Ok(NcsscReport {
        holds: true,
        witnesses,
        witnesses_verified: verified,
        failed_index: None,
        farkas_certificate: None,
    })
}

fn witness_ok(h: &FactorMatrix, y: &[f64], v: &[f64], eps: f64) -> bool {
    let scale = 1.0 + y.iter().map(|t| t.abs()).sum::<f64>();
    let hy = h.times(y);
    y.iter().all(|&t| t >= -eps * scale) && hy.iter().zip(v).all(|(a, b)| (a - b).abs() <= eps * scale)
}

/// Distance (ℓ∞) from `x` to the nearest unit vector.
pub fn distance_to_units(x: &[f64]) -> f64 {
    UnitVector::all(x.len())
        .map(|e| e.linf_distance(x))
        .fold(f64::INFINITY, f64::min)
}

/// Checks a point offered as a non-unit maximizer of norm one.
pub fn verify_extra_maximizer(h: &FactorMatrix, x: &[f64], tol: &Tolerances) -> bool {
    if x.len() != h.rank() {
        return false;
    }
    let sum_ok = (x.iter().sum::<f64>() - 1.0).abs() <= tol.eps_feas;
    let norm_ok = (squared_norm(x).sqrt() - 1.0).abs() <= tol.eps_pool;
    let cone_ok = h.transpose_times(x).iter().all(|&v| v >= -tol.eps_feas);
    sum_ok && norm_ok && cone_ok && distance_to_units(x) > tol.delta_unit
}

struct Decision {
    verdict: Verdict,
    reason: Reason,
    certificate: Option<Certificate>,
}

/// Verdict from the optimal value and the (complete) near-optimal vertex set.
fn decide(h: &FactorMatrix, value: f64, best: &[f64], maximizers: &[Vec<f64>], tol: &Tolerances) -> Decision {
    if value >= tol.stop_threshold {
        return Decision {
            verdict: Verdict::Fails,
            reason: Reason::NormExceedsOne,
            certificate: Some(Certificate {
                kind: CertificateKind::NormAboveThreshold,
                point: best.to_vec(),
                squared_norm: value,
                verified: verify_certificate(h, best, tol),
            }),
        };
    }
    if value > 1.0 + tol.eps_pool {
        return Decision {
            verdict: Verdict::Fails,
            reason: Reason::NormExceedsOne,
            certificate: Some(Certificate {
                kind: CertificateKind::NormAboveOne,
                point: best.to_vec(),
                squared_norm: value,
                verified: verify_certificate_at(h, best, 1.0 + tol.eps_pool, tol.eps_feas),
            }),
        };
    }
    if let Some(x) = maximizers.iter().find(|x| distance_to_units(x) > tol.delta_unit) {
        return Decision {
            verdict: Verdict::Fails,
            reason: Reason::ExtraMaximizer,
            certificate: Some(Certificate {
                kind: CertificateKind::ExtraMaximizer,
                point: x.clone(),
                squared_norm: squared_norm(x),
                verified: verify_extra_maximizer(h, x, tol),
            }),
        };
    }
    Decision {
        verdict: Verdict::Holds,
        reason: Reason::AllChecksPassed,
        certificate: None,
    }
}

const UNKNOWN_NOTE: &str = "deadline reached before the search finished; no point with squared \
     norm above the threshold was found in any explored node, so the condition is plausible but \
     not certified";
const PRECISION_NOTE: &str = "maximizer set verified up to the reported tolerances";

fn search_stats(res: &GlobalResult, pool_mode: bool) -> SearchStats {
    SearchStats {
        status: res.status,
        pool_mode,
        nodes_explored: res.nodes_explored,
        node_limit_hit: res.node_limit_hit,
        unmatched_tiny_nodes: res.unmatched_tiny_nodes,
        unit_capped_nodes: res.unit_capped_nodes,
        unit_match_radius: res.unit_match_radius,
    }
}

pub fn check_ssc(h: &FactorMatrix, opts: &SscOptions) -> Result<SscReport> {
    let tol = &opts.tol;
    tol.validate()?;
    let start = Instant::now();
    let mut stats = Timings::default();

    let mut report = SscReport {
        verdict: Verdict::Unknown,
        verdict_label: String::new(),
        reason: Reason::DeadlineReached,
        method: MethodUsed::None,
        rank: h.rank(),
        ncols: h.ncols(),
        dropped_columns: h.dropped_columns().to_vec(),
        sparsity_screen_passed: true,
        strict_sparsity: opts.strict_sparsity,
        ncssc: None,
        certificate: None,
        maximizers: Vec::new(),
        q_star_bounds: None,
        search: None,
        search_phases: "none",
        tolerances: *tol,
        deadline_s: opts.deadline.as_secs_f64(),
        note: None,
        stats: Timings::default(),
    };

    let t = Instant::now();
    report.sparsity_screen_passed = sparsity_screen(h, tol.eps_feas);
    stats.sparsity_s = t.elapsed().as_secs_f64();
    if !report.sparsity_screen_passed {
        log::info!("sparsity screen: some row has fewer than r - 1 zeros");
        if opts.strict_sparsity {
            report.verdict = Verdict::Fails;
            report.reason = Reason::SparsityScreenFailed;
            return Ok(finish(report, stats, start));
        }
    }

    let t = Instant::now();
    let ncssc = check_ncssc(h, tol)?;
    stats.ncssc_s = t.elapsed().as_secs_f64();
    let ncssc_holds = ncssc.holds;
    report.ncssc = Some(ncssc);
    if !ncssc_holds {
        report.verdict = Verdict::Fails;
        report.reason = Reason::NcsscFailed;
        return Ok(finish(report, stats, start));
    }

    let p = Polytope::for_matrix(h, true);
    let in_budget = opts.oracle_limits.fits(&p);
    let remaining = opts.deadline.saturating_sub(start.elapsed());

    let decision = match opts.method {
        Method::Oracle => {
            opts.oracle_limits.admit(&p)?;
            report.search_phases = "oracle";
            oracle_decision(h, &p, opts, &mut report, &mut stats)?
        }
        Method::Auto if in_budget => {
            report.search_phases = "threshold-bnb+oracle";
            let t = Instant::now();
            let res = maximize_norm(&p, tol, &opts.bnb_config(false, remaining))?;
            stats.search_s = t.elapsed().as_secs_f64();
            report.method = MethodUsed::BnbThreshold;
            report.search = Some(search_stats(&res, false));
            report.q_star_bounds = Some((res.best_value, res.global_ub));
            match res.status {
                GlobalStatus::Deadline => None,
                GlobalStatus::ThresholdExceeded => Some(decide(h, res.best_value, &res.best_point, &[], tol)),
                GlobalStatus::Converged if res.best_value > 1.0 + tol.eps_pool => {
                    Some(decide(h, res.best_value, &res.best_point, &[], tol))
                }
                GlobalStatus::Converged => oracle_decision(h, &p, opts, &mut report, &mut stats)?,
            }
        }
        Method::Auto | Method::Bnb => {
            report.search_phases = "pool-bnb";
            report.method = MethodUsed::BnbPool;
            let t = Instant::now();
            let res = maximize_norm(&p, tol, &opts.bnb_config(true, remaining))?;
            stats.search_s = t.elapsed().as_secs_f64();
            report.search = Some(search_stats(&res, true));
            report.q_star_bounds = Some((res.best_value, res.global_ub));
            report.maximizers = res.pool.points().to_vec();
            match res.status {
                GlobalStatus::Deadline => None,
                _ => Some(decide(h, res.best_value, &res.best_point, res.pool.points(), tol)),
            }
        }
    };

    match decision {
        Some(d) => {
            report.verdict = d.verdict;
            report.reason = d.reason;
            report.certificate = d.certificate;
        }
        None => {
            report.verdict = Verdict::Unknown;
            report.reason = Reason::DeadlineReached;
            report.note = Some(UNKNOWN_NOTE.to_string());
        }
    }
    Ok(finish(report, stats, start))
}

fn oracle_decision(
    h: &FactorMatrix,
    p: &Polytope,
    opts: &SscOptions,
    report: &mut SscReport,
    stats: &mut Timings,
) -> Result<Option<Decision>> {
    let t = Instant::now();
    let exact = exact_max_norm(p, &opts.oracle_limits, &opts.tol)?;
    stats.oracle_s = t.elapsed().as_secs_f64();
    report.method = MethodUsed::OracleExact;
    report.q_star_bounds = Some((exact.value, exact.value));
    let best = exact
        .maximizers
        .iter()
        .max_by(|a, b| squared_norm(a).total_cmp(&squared_norm(b)))
        .cloned()
        .unwrap_or_default();
    let d = decide(h, exact.value, &best, &exact.maximizers, &opts.tol);
    report.maximizers = exact.maximizers;
    Ok(Some(d))
}

fn finish(mut report: SscReport, mut stats: Timings, start: Instant) -> SscReport {
    stats.total_s = start.elapsed().as_secs_f64();
    report.stats = stats;
    report.verdict_label = match (report.verdict, report.method) {
        (Verdict::Holds, MethodUsed::OracleExact) => {
            format!(
                "holds (exact at tolerance eps_feas = {:e})",
                report.tolerances.eps_feas
            )
        }
        (Verdict::Holds, _) => "holds (numerical)".to_string(),
        (Verdict::Fails, _) => "fails".to_string(),
        (Verdict::Unknown, _) => "unknown (deadline reached)".to_string(),
    };
    if report.verdict == Verdict::Holds && report.note.is_none() {
        report.note = Some(PRECISION_NOTE.to_string());
    }
    report
}

impl SscReport {
    /// Process exit code: 0 holds, 1 fails, 2 unknown.
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Holds => 0,
            Verdict::Fails => 1,
            Verdict::Unknown => 2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without wall-clock fields, for comparing reruns.
    pub fn without_timings(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("stats");
        }
        v
    }
}
