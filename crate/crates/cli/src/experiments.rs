//! The four parameter sweeps and the single-pair query.

use std::f64::consts::PI;
use std::path::Path;

use divisio::channels::{collisional_pair, dephasing_hd, dephasing_t, read_choi_file, seeded_rng, unitary_mixture, Channel, CptpStatus};
use divisio::divisibility::{analyze, classify_absolute, cp_distance, cp_distance_timed, p_distance_qubit, AbsoluteFlag, DivisibilityReport, Kind};
use divisio::exec::{self, Execution};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// Tolerance of the CPTP check applied to query inputs.
pub const CPTP_CHECK: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionalRow {
    pub p: f64,
    pub cp_distance: f64,
    pub p_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingRow {
    pub t1: f64,
    pub t2: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingHdRow {
    pub p: f64,
    pub q: f64,
    pub distance: f64,
    pub identity_flag: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub d: usize,
    pub n: usize,
    pub sample: usize,
    pub seed: u64,
    pub solve_seconds: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingGroup {
    pub d: usize,
    pub n: usize,
    pub count: usize,
    pub mean_seconds: f64,
    pub stddev_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub groups: Vec<TimingGroup>,
    /// Slope of log(mean time) against log(d), pooled over `n`. Needs at
    /// least two distinct dimensions.
    pub exponent: Option<f64>,
}

/// `steps` evenly spaced points from `min` to `max` inclusive.
pub fn grid(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(CliError::Config("steps must be at least 1".into()));
    }
    if !(min <= max) {
        return Err(CliError::Config(format!("empty range [{min}, {max}]")));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    Ok((0..steps).map(|i| min + (max - min) * i as f64 / (steps - 1) as f64).collect())
}

fn collect<T>(items: Vec<divisio::Result<T>>) -> Result<Vec<T>> {
    Ok(items.into_iter().collect::<divisio::Result<Vec<T>>>()?)
}

/// CP and P distances of the collisional pair at each `p`.
pub fn run_collisional(ps: &[f64], exec: Execution) -> Result<Vec<CollisionalRow>> {
    if let Some(p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(CliError::Config(format!("p = {p} outside [0, 1]")));
    }
    collect(exec::map_slice(exec, ps, |&p| {
        let (first, target) = collisional_pair(p)?;
        let cp = cp_distance(&target, &first)?;
        let pp = p_distance_qubit(&target, &first)?;
        Ok(CollisionalRow { p, cp_distance: cp.distance, p_distance: pp.distance })
    }))
}

/// CP distance on the upper-triangular grid `t1 ≤ t2` over `[0, 2π]`.
pub fn run_dephasing(steps: usize, exec: Execution) -> Result<Vec<DephasingRow>> {
    let ts = grid(0.0, 2.0 * PI, steps)?;
    let cells: Vec<(f64, f64)> =
        ts.iter().enumerate().flat_map(|(i, &t1)| ts[i..].iter().map(move |&t2| (t1, t2))).collect();
    collect(exec::map_slice(exec, &cells, |&(t1, t2)| {
        let r = cp_distance(&dephasing_t(t2)?, &dephasing_t(t1)?)?;
        Ok(DephasingRow { t1, t2, distance: r.distance })
    }))
}

/// CP distance from `dephasing_hd(d, p)` to `dephasing_hd(d, q)` for every
/// `(p, q)` cell, with the absolute-non-divisibility identity flag.
pub fn run_dephasing_hd(d: usize, ps: &[f64], qs: &[f64], exec: Execution) -> Result<Vec<DephasingHdRow>> {
    if d < 2 {
        return Err(CliError::Config(format!("dimension {d} must be at least 2")));
    }
    let cells: Vec<(f64, f64)> = ps.iter().flat_map(|&p| qs.iter().map(move |&q| (p, q))).collect();
    collect(exec::map_slice(exec, &cells, |&(p, q)| {
        let first = dephasing_hd(d, p)?;
        let target = dephasing_hd(d, q)?;
        let r = classify_absolute(cp_distance(&target, &first)?, &target, &first)?;
        Ok(DephasingHdRow { p, q, distance: r.distance, identity_flag: r.absolute_flag == AbsoluteFlag::IdentityOptimal })
    }))
}

/// Seed of one sample, a fixed function of the base seed and `(d, n, sample)`.
pub fn sample_seed(seed: u64, d: usize, n: usize, sample: usize) -> u64 {
    seed.wrapping_add((d as u64) * 1_000_000_007 + (n as u64) * 1_000_003 + sample as u64)
}

/// Timed CP distance from a random unitary mixture to the identity. Solves
/// run one after another so that timings do not compete for cores.
pub fn run_unitary_mix(dims: &[usize], ns: &[usize], samples: usize, seed: u64) -> Result<Vec<TimingRecord>> {
    if samples == 0 {
        return Err(CliError::Config("samples must be at least 1".into()));
    }
    if let Some(d) = dims.iter().find(|&&d| d < 2) {
        return Err(CliError::Config(format!("dimension {d} must be at least 2")));
    }
    if ns.contains(&0) {
        return Err(CliError::Config("mixture size must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(dims.len() * ns.len() * samples);
    for &d in dims {
        for &n in ns {
            for sample in 0..samples {
                let s = sample_seed(seed, d, n, sample);
                let first = unitary_mixture(d, n, &mut seeded_rng(s))?;
                let (r, elapsed) = cp_distance_timed(&Channel::identity(d), &first)?;
                out.push(TimingRecord {
                    d,
                    n,
                    sample,
                    seed: s,
                    solve_seconds: elapsed.as_secs_f64().max(f64::MIN_POSITIVE),
                    distance: r.distance,
                });
            }
        }
    }
    Ok(out)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Per-`(d, n)` mean and sample standard deviation of the solve time, and
/// the log-log slope of the mean time against `d`.
pub fn summarize(records: &[TimingRecord]) -> TimingSummary {
    let mut keys: Vec<(usize, usize)> = records.iter().map(|r| (r.d, r.n)).collect();
    keys.sort_unstable();
    keys.dedup();
    let groups: Vec<TimingGroup> = keys
        .into_iter()
        .map(|(d, n)| {
            let times: Vec<f64> = records.iter().filter(|r| r.d == d && r.n == n).map(|r| r.solve_seconds).collect();
            let (mean_seconds, stddev_seconds) = mean_std(&times);
            TimingGroup { d, n, count: times.len(), mean_seconds, stddev_seconds }
        })
        .collect();

    let mut dims: Vec<usize> = records.iter().map(|r| r.d).collect();
    dims.sort_unstable();
    dims.dedup();
    let exponent = (dims.len() >= 2).then(|| {
        let pts: Vec<(f64, f64)> = dims
            .iter()
            .map(|&d| {
                let times: Vec<f64> = records.iter().filter(|r| r.d == d).map(|r| r.solve_seconds).collect();
                ((d as f64).ln(), mean_std(&times).0.ln())
            })
            .collect();
        let (mx, _) = mean_std(&pts.iter().map(|p| p.0).collect::<Vec<_>>());
        let (my, _) = mean_std(&pts.iter().map(|p| p.1).collect::<Vec<_>>());
        let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        sxy / sxx
    });
    TimingSummary { groups, exponent }
}

#[derive(Clone, Debug)]
pub struct QueryOutcome {
    pub report: DivisibilityReport,
    pub divisible: bool,
}

fn load(path: &Path, allow_noncptp: bool) -> Result<Channel> {
    let input = |source| CliError::Input { path: path.to_path_buf(), source };
    let c = read_choi_file(path).map_err(input)?;
    if !allow_noncptp {
        let check = c.is_cptp(CPTP_CHECK).map_err(input)?;
        if check.status != CptpStatus::Cptp {
            return Err(CliError::Config(format!(
                "{} is not CPTP ({:?}: min eigenvalue {:.3e}, trace deviation {:.3e}); pass --allow-noncptp to override",
                path.display(),
                check.status,
                check.min_eigenvalue,
                check.tp_deviation
            )));
        }
    }
    Ok(c)
}

/// Divisibility of `target` (file `b`) through `first` (file `a`).
pub fn run_query(first: &Path, target: &Path, kind: Kind, allow_noncptp: bool, tol: f64) -> Result<QueryOutcome> {
    let a = load(first, allow_noncptp)?;
    let b = load(target, allow_noncptp)?;
    let report = analyze(&b, &a, kind)?;
    Ok(QueryOutcome { divisible: report.distance <= tol, report })
}
