//! Random sparse nonnegative matrices and success-rate experiments.
//!
//! Column j has exactly k nonzeros at uniformly random positions, with
//! weights drawn from Exp(1) and normalized to sum to one. Each column uses its
//! own ChaCha8 stream of the seed, so a column depends only on `(seed, j)`.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::FactorMatrix;
use crate::ssc::{check_ssc, SscOptions, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GenSpec {
    pub r: usize,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.r < 2 {
            return Err(Error::InvalidSpec(format!("r = {} must be at least 2", self.r)));
        }
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        if self.k == 0 || self.k >= self.r {
            return Err(Error::InvalidSpec(format!(
                "k = {} must lie in 1..={}",
                self.k,
                self.r - 1
            )));
        }
        Ok(())
    }
}

/// Row-major `r × n` entries, each column summing to one.
pub fn generate_raw(spec: &GenSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let GenSpec { r, n, k, seed } = *spec;
    let mut data = vec![0.0; r * n];
    let mut idx: Vec<usize> = Vec::with_capacity(r);
    let mut w = vec![0.0; k];
    for j in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        idx.clear();
        idx.extend(0..r);
        for t in 0..k {
            let s = rng.random_range(t..r);
            idx.swap(t, s);
        }
        for v in w.iter_mut() {
            let e: f64 = rng.sample(Exp1);
            // Exp1 can return exactly 0 with negligible probability.
            *v = e.max(f64::MIN_POSITIVE);
        }
        let total: f64 = w.iter().sum();
        for t in 0..k {
            data[idx[t] * n + j] = w[t] / total;
        }
    }
    Ok(data)
}

pub fn generate(spec: &GenSpec) -> Result<FactorMatrix> {
    let data = generate_raw(spec)?;
    FactorMatrix::from_row_major(spec.r, spec.n, &data)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub r: usize,
    pub k: usize,
    pub n: usize,
    pub trials: usize,
    pub ssc_count: usize,
    /// Trials where the necessary condition held but the full check failed.
    pub ncssc_not_ssc_count: usize,
    pub fail_count: usize,
    pub timeout_count: usize,
    pub mean_time_s: f64,
}

impl ExperimentRecord {
    pub fn success_rate(&self) -> f64 {
        self.ssc_count as f64 / self.trials as f64
    }
}

#[derive(Clone, Debug)]
pub struct GridSpec {
    pub r_values: Vec<usize>,
    /// Requested k values; cells with `k ≥ r` are skipped.
    pub k_values: Vec<usize>,
    /// n = `n_multiplier` · r.
    pub n_multipliers: Vec<usize>,
    pub trials: usize,
    pub seed_base: u64,
    pub options: SscOptions,
}

/// Runs every `(r, k, n)` cell, calling `on_record` as each one completes.
pub fn run_grid<F: FnMut(&ExperimentRecord)>(
    grid: &GridSpec,
    mut on_record: F,
) -> Result<Vec<ExperimentRecord>> {
    if grid.trials == 0 {
        return Err(Error::InvalidSpec("trials must be positive".into()));
    }
    let mut out = Vec::new();
    for &r in &grid.r_values {
        for &k in &grid.k_values {
            if k == 0 || k >= r {
                continue;
            }
            for &mult in &grid.n_multipliers {
                let rec = run_cell(r, k, mult * r, grid)?;
                on_record(&rec);
                out.push(rec);
            }
        }
    }
    Ok(out)
}

fn run_cell(r: usize, k: usize, n: usize, grid: &GridSpec) -> Result<ExperimentRecord> {
    let opts = SscOptions {
        workers: 1,
        ..grid.options.clone()
    };
    let outcomes = (0..grid.trials)
        .into_par_iter()
        .map(|t| {
            let spec = GenSpec {
                r,
                n,
                k,
                seed: grid.seed_base.wrapping_add(t as u64),
            };
            let h = generate(&spec)?;
            let start = Instant::now();
            let rep = check_ssc(&h, &opts)?;
            let ncssc = rep.ncssc.as_ref().is_some_and(|c| c.holds);
            Ok((rep.verdict, ncssc, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rec = ExperimentRecord {
        r,
        k,
        n,
        trials: grid.trials,
        ssc_count: 0,
        ncssc_not_ssc_count: 0,
        fail_count: 0,
        timeout_count: 0,
        mean_time_s: 0.0,
    };
    for (verdict, ncssc, secs) in &outcomes {
        match verdict {
            Verdict::Holds => rec.ssc_count += 1,
            Verdict::Fails => {
                rec.fail_count += 1;
                if *ncssc {
                    rec.ncssc_not_ssc_count += 1;
                }
            }
            Verdict::Unknown => rec.timeout_count += 1,
        }
        rec.mean_time_s += secs;
    }
    rec.mean_time_s /= grid.trials as f64;
    Ok(rec)
}

pub const CSV_HEADER: &str = "r,k,n,trials,ssc_count,ncssc_not_ssc_count,timeout_count,mean_time_s";

pub fn csv_line(rec: &ExperimentRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        rec.r,
        rec.k,
        rec.n,
        rec.trials,
        rec.ssc_count,
        rec.ncssc_not_ssc_count,
        rec.timeout_count,
        rec.mean_time_s
    )
}

pub fn to_csv(records: &[ExperimentRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for rec in records {
        s.push_str(&csv_line(rec));
        s.push('\n');
    }
    s
}

/// Success rates as a text table with one row per r and one column per k.
pub fn success_table(records: &[ExperimentRecord]) -> String {
    let mut rs: Vec<usize> = records.iter().map(|x| x.r).collect();
    let mut ks: Vec<usize> = records.iter().map(|x| x.k).collect();
    rs.sort_unstable();
    rs.dedup();
    ks.sort_unstable();
    ks.dedup();
    let mut s = String::from("  r \\ k");
    for k in &ks {
        let _ = write!(s, " {k:>6}");
    }
    s.push('\n');
    for r in &rs {
        let _ = write!(s, "{r:>7}");
        for k in &ks {
            let cell: Vec<&ExperimentRecord> = records.iter().filter(|x| x.r == *r && x.k == *k).collect();
            if cell.is_empty() {
                let _ = write!(s, " {:>6}", "-");
            } else {
                let ok: usize = cell.iter().map(|x| x.ssc_count).sum();
                let total: usize = cell.iter().map(|x| x.trials).sum();
                let _ = write!(s, " {:>6.2}", ok as f64 / total as f64);
            }
        }
        s.push('\n');
    }
    s
}
