//! Monte Carlo estimation of the exit law: Euler-Maruyama paths with
//! absorbing boundary, burn-in approximation of the conditioned stationary
//! start, exit histograms with confidence intervals, and the exit-time /
//! exit-point independence diagnostic.
//!
//! Determinism contract: path i draws from a counter-based stream derived
//! from (seed, i), so results are bit-identical regardless of how paths are
//! scheduled across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::SamplerError;
use crate::potential::{DomainGeometry, PotentialField};

/// Where paths start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    Point([f64; 2]),
    /// Evolve from the anchor for `burn_time`, restarting on exit; the
    /// surviving endpoint approximates a draw from the conditioned
    /// stationary law.
    QsdBurnIn {
        anchor: [f64; 2],
        burn_time: f64,
    },
}

/// Simulation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub h: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub max_steps: usize,
    pub start: Start,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if !(self.dt > 0.0) {
            return Err(SamplerError::InvalidConfig("dt must be positive".into()));
        }
        if self.dt > self.h / 50.0 {
            return Err(SamplerError::InvalidConfig(format!(
                "dt = {} exceeds h/50 = {}",
                self.dt,
                self.h / 50.0
            )));
        }
        if self.n_paths < 1 {
            return Err(SamplerError::InvalidConfig(
                "n_paths must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One recorded exit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitRecord {
    pub path_id: u64,
    pub exit_time: f64,
    pub exit_point: [f64; 2],
    pub boundary_coordinate: f64,
    pub start_used: [f64; 2],
}

/// All exits plus the censoring count.
#[derive(Debug, Clone, Serialize)]
pub struct SimOutput {
    pub records: Vec<ExitRecord>,
    pub censored: usize,
    pub n_paths: usize,
    /// Burn-in rejection rate (QSD starts only).
    pub burn_rejection_rate: f64,
}

/// Per-path stream: independent of scheduling.
fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

enum StepOutcome {
    Exited { time: f64, point: [f64; 2] },
    Censored,
}

/// Run one path from `start` until exit or `max_steps`.
fn run_path(
    field: &PotentialField,
    geom: &DomainGeometry,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
    start: [f64; 2],
) -> Result<StepOutcome, SamplerError> {
    if let DomainGeometry::Interval { a, b } = *geom {
        return run_path_1d(field, a, b, cfg, rng, start[0]);
    }
    let dim = geom.dim();
    let noise = (cfg.h * cfg.dt).sqrt();
    let mut x = start;
    for step in 0..cfg.max_steps {
        let (_, g) = field.value_grad(&x[..dim])?;
        let mut next = x;
        for d in 0..dim {
            let xi: f64 = rng.sample(StandardNormal);
            next[d] = x[d] - g[d] * cfg.dt + noise * xi;
        }
        if !geom.contains(&next[..dim]) {
            let (point, s) = crossing(geom, &x, &next, dim);
            let time = (step as f64 + s) * cfg.dt;
            return Ok(StepOutcome::Exited { time, point });
        }
        x = next;
    }
    Ok(StepOutcome::Censored)
}

/// Scalar-state fast path for intervals.
fn run_path_1d(
    field: &PotentialField,
    a: f64,
    b: f64,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
    start: f64,
) -> Result<StepOutcome, SamplerError> {
    let noise = (cfg.h * cfg.dt).sqrt();
    let dt = cfg.dt;
    let mut x = start;
    for step in 0..cfg.max_steps {
        let (_, g) = field.value_grad1(x)?;
        let xi: f64 = rng.sample(StandardNormal);
        let next = x - g * dt + noise * xi;
        if next <= a || next >= b {
            let target = if next <= a { a } else { b };
            let s = ((target - x) / (next - x)).clamp(0.0, 1.0);
            return Ok(StepOutcome::Exited {
                time: (step as f64 + s) * dt,
                point: [target, 0.0],
            });
        }
        x = next;
    }
    Ok(StepOutcome::Censored)
}

/// Linear interpolation of the boundary crossing of the segment x -> y.
/// Returns the crossing point and the fraction s in [0, 1].
fn crossing(geom: &DomainGeometry, x: &[f64; 2], y: &[f64; 2], dim: usize) -> ([f64; 2], f64) {
    match geom {
        DomainGeometry::Interval { a, b } => {
            let (x0, y0) = (x[0], y[0]);
            let s = if y0 <= *a {
                (a - x0) / (y0 - x0)
            } else {
                (b - x0) / (y0 - x0)
            };
            let s = s.clamp(0.0, 1.0);
            ([x0 + s * (y0 - x0), 0.0], s)
        }
        DomainGeometry::Ball { center, radius } => {
            // solve |x + s(y - x) - c|^2 = r^2 for s in [0, 1]
            let dx = [x[0] - center[0], x[1] - center[1]];
            let dv = [y[0] - x[0], y[1] - x[1]];
            let aa = dv[0] * dv[0] + dv[1] * dv[1];
            let bb = 2.0 * (dx[0] * dv[0] + dx[1] * dv[1]);
            let cc = dx[0] * dx[0] + dx[1] * dx[1] - radius * radius;
            let disc = (bb * bb - 4.0 * aa * cc).max(0.0).sqrt();
            let s = ((-bb + disc) / (2.0 * aa)).clamp(0.0, 1.0);
            let mut p = [x[0] + s * dv[0], x[1] + s * dv[1]];
            // snap exactly onto the circle
            let pr = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
            p = [
                center[0] + (p[0] - center[0]) * radius / pr,
                center[1] + (p[1] - center[1]) * radius / pr,
            ];
            let _ = dim;
            (p, s)
        }
    }
}

/// Burn-in phase for one path: evolve from the anchor for `burn_time`,
/// restarting with fresh noise from the same stream whenever the path exits.
/// Returns the surviving point and the number of rejected attempts.
fn burn_in(
    field: &PotentialField,
    geom: &DomainGeometry,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
    anchor: [f64; 2],
    burn_time: f64,
) -> Result<([f64; 2], usize), SamplerError> {
    let dim = geom.dim();
    let noise = (cfg.h * cfg.dt).sqrt();
    let steps = (burn_time / cfg.dt).ceil() as usize;
    let mut rejected = 0usize;
    if let DomainGeometry::Interval { a, b } = *geom {
        'attempt_1d: loop {
            if rejected >= 1000 {
                return Err(SamplerError::BurnInInfeasible { rate: 1.0 });
            }
            let mut x = anchor[0];
            for _ in 0..steps {
                let (_, g) = field.value_grad1(x)?;
                let xi: f64 = rng.sample(StandardNormal);
                x = x - g * cfg.dt + noise * xi;
                if x <= a || x >= b {
                    rejected += 1;
                    continue 'attempt_1d;
                }
            }
            return Ok(([x, 0.0], rejected));
        }
    }
    'attempt: loop {
        if rejected >= 1000 {
            return Err(SamplerError::BurnInInfeasible { rate: 1.0 });
        }
        let mut x = anchor;
        for _ in 0..steps {
            let (_, g) = field.value_grad(&x[..dim])?;
            for d in 0..dim {
                let xi: f64 = rng.sample(StandardNormal);
                x[d] = x[d] - g[d] * cfg.dt + noise * xi;
            }
            if !geom.contains(&x[..dim]) {
                rejected += 1;
                continue 'attempt;
            }
        }
        return Ok((x, rejected));
    }
}

/// Simulate `n_paths` exits. Deterministic for a fixed config, independent
/// of thread count. Errors if more than half the paths are censored.
pub fn simulate_exit(
    field: &PotentialField,
    geom: &DomainGeometry,
    cfg: &SimConfig,
) -> Result<SimOutput, SamplerError> {
    cfg.validate()?;
    if let Start::Point(p) = cfg.start {
        if !geom.contains(&p[..geom.dim()]) {
            return Err(SamplerError::InvalidConfig(
                "start point must lie inside the domain".into(),
            ));
        }
    }
    let results: Vec<Result<(Option<ExitRecord>, usize), SamplerError>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|pid| {
            let mut rng = path_rng(cfg.seed, pid);
            let (start, rejected) = match cfg.start {
                Start::Point(p) => (p, 0),
                Start::QsdBurnIn { anchor, burn_time } => {
                    burn_in(field, geom, cfg, &mut rng, anchor, burn_time)?
                }
            };
            let out = run_path(field, geom, cfg, &mut rng, start)?;
            Ok(match out {
                StepOutcome::Exited { time, point } => {
                    let coord = geom
                        .boundary_coordinate(&point[..geom.dim()])
                        .expect("crossing point lies on the boundary");
                    (
                        Some(ExitRecord {
                            path_id: pid,
                            exit_time: time,
                            exit_point: point,
                            boundary_coordinate: coord,
                            start_used: start,
                        }),
                        rejected,
                    )
                }
                StepOutcome::Censored => (None, rejected),
            })
        })
        .collect();

    let mut records = Vec::with_capacity(cfg.n_paths);
    let mut censored = 0usize;
    let mut rejected_total = 0usize;
    for r in results {
        let (rec, rej) = r?;
        rejected_total += rej;
        match rec {
            Some(rec) => records.push(rec),
            None => censored += 1,
        }
    }
    if 2 * censored > cfg.n_paths {
        return Err(SamplerError::CensoredMajority {
            censored,
            total: cfg.n_paths,
        });
    }
    let attempts = cfg.n_paths + rejected_total;
    let rate = rejected_total as f64 / attempts as f64;
    if matches!(cfg.start, Start::QsdBurnIn { .. }) && rate > 0.999 {
        return Err(SamplerError::BurnInInfeasible { rate });
    }
    Ok(SimOutput {
        records,
        censored,
        n_paths: cfg.n_paths,
        burn_rejection_rate: rate,
    })
}

/// Draw approximate samples of the conditioned stationary law by burn-in
/// with restarts. Returns the samples and the overall rejection rate.
pub fn sample_qsd_start(
    field: &PotentialField,
    geom: &DomainGeometry,
    cfg: &SimConfig,
    anchor: [f64; 2],
    burn_time: f64,
) -> Result<(Vec<[f64; 2]>, f64), SamplerError> {
    cfg.validate()?;
    if !(burn_time > 0.0) {
        return Err(SamplerError::InvalidConfig(
            "burn_time must be positive".into(),
        ));
    }
    let results: Vec<Result<([f64; 2], usize), SamplerError>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|pid| {
            let mut rng = path_rng(cfg.seed, pid);
            burn_in(field, geom, cfg, &mut rng, anchor, burn_time)
        })
        .collect();
    let mut out = Vec::with_capacity(cfg.n_paths);
    let mut rejected = 0usize;
    for r in results {
        let (p, rej) = r?;
        rejected += rej;
        out.push(p);
    }
    let rate = rejected as f64 / (rejected + out.len()) as f64;
    if rate > 0.999 {
        return Err(SamplerError::BurnInInfeasible { rate });
    }
    Ok((out, rate))
}

/// A named boundary region in chart coordinates: [lo, hi].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl RegionSpec {
    pub fn contains(&self, coord: f64) -> bool {
        coord >= self.lo && coord <= self.hi
    }
}

/// One histogram bin.
#[derive(Debug, Clone, Serialize)]
pub struct HistogramBin {
    pub region: RegionSpec,
    pub count: usize,
    pub probability: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

/// Exit histogram over disjoint boundary regions plus a catch-all.
#[derive(Debug, Clone, Serialize)]
pub struct ExitHistogram {
    pub bins: Vec<HistogramBin>,
    pub censored_count: usize,
    pub n_exited: usize,
}

/// 95% Wilson interval for `count` successes out of `n`.
pub fn wilson_interval(count: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64;
    let nf = n as f64;
    let p = count as f64 / nf;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / (1.0 + z2 / nf);
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Count exits per region; a catch-all "elsewhere" bin completes the
/// partition. Regions must be pairwise disjoint.
pub fn aggregate(
    output: &SimOutput,
    regions: &[RegionSpec],
) -> Result<ExitHistogram, SamplerError> {
    for (i, a) in regions.iter().enumerate() {
        for b in regions.iter().skip(i + 1) {
            if a.lo <= b.hi && b.lo <= a.hi {
                return Err(SamplerError::OverlappingRegions {
                    a: a.name.clone(),
                    b: b.name.clone(),
                });
            }
        }
    }
    let n = output.records.len();
    let mut counts = vec![0usize; regions.len() + 1];
    for r in &output.records {
        let mut hit = regions.len();
        for (i, reg) in regions.iter().enumerate() {
            if reg.contains(r.boundary_coordinate) {
                hit = i;
                break;
            }
        }
        counts[hit] += 1;
    }
    let mut bins = Vec::with_capacity(regions.len() + 1);
    for (i, reg) in regions
        .iter()
        .cloned()
        .chain(std::iter::once(RegionSpec {
            name: "elsewhere".into(),
            lo: f64::NAN,
            hi: f64::NAN,
        }))
        .enumerate()
    {
        let c = counts[i];
        let p = if n > 0 { c as f64 / n as f64 } else { 0.0 };
        let (lo, hi) = wilson_interval(c, n);
        bins.push(HistogramBin {
            region: reg,
            count: c,
            probability: p,
            wilson_low: lo,
            wilson_high: hi,
        });
    }
    Ok(ExitHistogram {
        bins,
        censored_count: output.censored,
        n_exited: n,
    })
}

/// Exit-time exponentiality and time/location independence diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct IndependenceReport {
    pub n: usize,
    pub mean_exit_time: f64,
    /// KS distance of the exit times against the fitted exponential.
    pub ks_statistic: f64,
    /// 1% significance threshold 1.63 / sqrt(n).
    pub ks_threshold: f64,
    /// Point-biserial correlation between exit time and the indicator of
    /// the dominant exit region.
    pub correlation: f64,
    /// 3 / sqrt(n) reference bound for the correlation.
    pub corr_threshold: f64,
    /// Two-sided normal-approximation p-value of the correlation.
    pub p_value: f64,
}

/// Diagnostics the conditioned-start theory predicts: exponential exit
/// times, independent of the exit location. Reports statistics only.
pub fn independence_check(records: &[ExitRecord]) -> Result<IndependenceReport, SamplerError> {
    let n = records.len();
    if n < 10_000 {
        return Err(SamplerError::InsufficientSamples {
            got: n,
            need: 10_000,
        });
    }
    let mut times: Vec<f64> = records.iter().map(|r| r.exit_time).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean: f64 = times.iter().sum::<f64>() / n as f64;
    let mut ks = 0.0_f64;
    for (i, t) in times.iter().enumerate() {
        let fexp = 1.0 - (-t / mean).exp();
        ks = ks.max((fexp - i as f64 / n as f64).abs());
        ks = ks.max(((i + 1) as f64 / n as f64 - fexp).abs());
    }

    // dominant exit region: modal boundary-coordinate bin
    let (lo, hi) = records
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, r| {
            (
                acc.0.min(r.boundary_coordinate),
                acc.1.max(r.boundary_coordinate),
            )
        });
    let bins = 16usize;
    let width = ((hi - lo) / bins as f64).max(1e-12);
    let mut histogram = vec![0usize; bins];
    for r in records {
        let k = (((r.boundary_coordinate - lo) / width) as usize).min(bins - 1);
        histogram[k] += 1;
    }
    let modal = histogram
        .iter()
        .enumerate()
        .max_by_key(|(_, c)| **c)
        .map(|(k, _)| k)
        .unwrap();
    let indicator = |r: &ExitRecord| -> bool {
        let k = (((r.boundary_coordinate - lo) / width) as usize).min(bins - 1);
        k == modal
    };

    let n1 = records.iter().filter(|r| indicator(r)).count();
    let n0 = n - n1;
    let correlation = if n1 == 0 || n0 == 0 {
        0.0
    } else {
        let m1: f64 = records
            .iter()
            .filter(|r| indicator(r))
            .map(|r| r.exit_time)
            .sum::<f64>()
            / n1 as f64;
        let m0: f64 = records
            .iter()
            .filter(|r| !indicator(r))
            .map(|r| r.exit_time)
            .sum::<f64>()
            / n0 as f64;
        let var: f64 = records
            .iter()
            .map(|r| {
                let d = r.exit_time - mean;
                d * d
            })
            .sum::<f64>()
            / n as f64;
        (m1 - m0) * ((n1 as f64 * n0 as f64) / (n as f64 * n as f64)).sqrt() / var.sqrt()
    };
    let z = correlation.abs() * (n as f64).sqrt();
    Ok(IndependenceReport {
        n,
        mean_exit_time: mean,
        ks_statistic: ks,
        ks_threshold: 1.63 / (n as f64).sqrt(),
        correlation,
        corr_threshold: 3.0 / (n as f64).sqrt(),
        p_value: 2.0 * (1.0 - normal_cdf(z)),
    })
}

/// Standard normal CDF via the Abramowitz-Stegun rational approximation.
fn normal_cdf(z: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.2316419 * z.abs());
    let poly = t
        * (0.319381530
            + t * (-0.356563782 + t * (1.781477937 + t * (-1.821255978 + t * 1.330274429))));
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let tail = pdf * poly;
    if z >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}
