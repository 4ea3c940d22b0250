//! Deterministic, checkpointed execution of an [`ExperimentConfig`].
//!
//! Replica `i` draws from stream `(seed, i)`, quenched environments from
//! `(env_seed, ENV_STREAM)`. Replicas run in fixed-size chunks on a worker
//! pool; outcomes are kept in replica order, so the written files do not
//! depend on the number of workers.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Estimator, ExperimentConfig, Mode};
use super::ld::{run_ld_replica, Closure};
use super::outcome::{
    outcome_header, outcome_line, parse_outcome_lines, render_estimates, render_outcomes,
    write_text, EstimateRow, ReplicaOutcome,
};
use super::stats::{
    chi_square_gof, estimate_growth_exponent, estimate_ld_rate, mean_estimate, wilson_interval,
    LdPoint, Z95,
};
use crate::engine::{
    run_confined_bbm, run_free_bbm, run_obstacle_bbm, run_obstacle_bbm_subsampled, sample_bm_path, ConfinedSpec,
    ObstacleBranchSpec,
};
use crate::environment::{
    clearing_scale, good_point_hit, largest_clearing, lattice_cube_centers, read_env_file, write_env_file, ClearingScale,
    TrapField,
};
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Point};
use crate::kernels::RngStream;
use crate::theory::{
    confinement_probability_series, displacement_tail,
    extinction_rate_lower_bound, good_point_radius, ld_rate_prediction, omega_d,
    quenched_growth_exponent, yule_pmf, yule_tail, LdRegime, TheoryConstants,
};

/// Stream id reserved for quenched environments.
pub const ENV_STREAM: u64 = u64::MAX;

/// Time between thinning checks in subsampled obstacle runs.
pub const SUBSAMPLE_SLICE: f64 = 0.05;

const CHECKPOINT_FORMAT: &str = "bbmlab-checkpoint v1";

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub workers: usize,
    pub checkpoint: Option<PathBuf>,
    /// Replicas per chunk; a checkpoint is written after every chunk.
    pub chunk_size: u64,
    /// Stop after this many chunks of the current invocation, as if
    /// interrupted.
    pub stop_after_chunks: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: 1,
            checkpoint: None,
            chunk_size: 1024,
            stop_after_chunks: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub config_hash: String,
    pub outcomes: Vec<ReplicaOutcome>,
    pub estimates: Vec<EstimateRow>,
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug)]
pub enum RunStatus {
    Complete(RunSummary),
    Interrupted { completed: u64 },
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    config_hash: String,
    config: ExperimentConfig,
    completed: u64,
    rows: Vec<String>,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    format: &'static str,
    version: &'static str,
    mode: &'static str,
    config_hash: &'a str,
    replicas: u64,
    workers: usize,
    wall_time_seconds: f64,
    config: &'a ExperimentConfig,
}

/// Per-horizon constants of a confined experiment.
struct Horizon {
    t: f64,
    radius: f64,
    p_t: f64,
    p_asymptotic: bool,
    gammas: Vec<f64>,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    field: Option<TrapField>,
    horizons: Vec<Horizon>,
    hit_radius: f64,
}

fn build_quenched_field(cfg: &ExperimentConfig) -> Result<TrapField> {
    if let Some(path) = &cfg.env_file {
        let field = read_env_file(path)?;
        if field.dim() != cfg.dim {
            return Err(Error::schema("env_file", "environment dimension differs from dim"));
        }
        return Ok(field);
    }
    let domain = AxisBox::centered_cube(cfg.dim, cfg.effective_half_width())?;
    let mut stream = RngStream::new(cfg.env_seed, ENV_STREAM);
    TrapField::build(&mut stream, cfg.dim, cfg.nu, cfg.trap_radius, domain)
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let field = match cfg.mode {
            Mode::Obstacle | Mode::ClearingHit => Some(build_quenched_field(cfg)?),
            _ => None,
        };
        let mut horizons = Vec::new();
        if let (Mode::Confined, Some(radius_fn)) = (cfg.mode, cfg.radius) {
            for &t in &cfg.times {
                let radius = radius_fn.eval(t)?;
                let p = confinement_probability_series(cfg.dim, radius, t)?;
                horizons.push(Horizon {
                    t,
                    radius,
                    p_t: p.value,
                    p_asymptotic: p.asymptotic,
                    gammas: cfg.kappa.iter().map(|k| (-k * radius).exp()).collect(),
                });
            }
        }
        let hit_radius = match (cfg.mode, cfg.hit.clearing_radius) {
            (Mode::ClearingHit, Some(r)) => r,
            (Mode::ClearingHit, None) => good_point_radius(cfg.dim, cfg.nu, cfg.t_end())?,
            _ => 0.0,
        };
        Ok(Context {
            cfg,
            field,
            horizons,
            hit_radius,
        })
    }

    fn env_seed(&self) -> u64 {
        self.field
            .as_ref()
            .map(|f| f.env_seed())
            .unwrap_or(self.cfg.env_seed)
    }

    fn replica(&self, id: u64) -> Result<Vec<ReplicaOutcome>> {
        let cfg = self.cfg;
        let mut stream = RngStream::new(cfg.seed, id);
        let env_seed = self.env_seed();
        match cfg.mode {
            Mode::Free => {
                let run = run_free_bbm(&mut stream, cfg.dim, cfg.beta, cfg.t_end(), &cfg.times, cfg.cap)?;
                Ok(cfg
                    .times
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| {
                        let mut o = ReplicaOutcome::new(id, env_seed, t);
                        match run.observations.get(k) {
                            Some(obs) => {
                                o.population = Some(obs.population);
                                o.range_radius = Some(obs.range_radius);
                            }
                            None => o.censored = true,
                        }
                        o
                    })
                    .collect())
            }
            Mode::Confined => self
                .horizons
                .iter()
                .map(|h| self.confined_outcome(&mut stream, id, h))
                .collect(),
            Mode::Obstacle => {
                let field = self.field.as_ref().expect("obstacle mode builds a field");
                let spec = ObstacleBranchSpec::new(cfg.beta, cfg.beta_bar, field)?;
                let run = match cfg.subsample {
                    Some(keep) => run_obstacle_bbm_subsampled(
                        &mut stream,
                        &spec,
                        cfg.t_end(),
                        &cfg.times,
                        keep,
                        SUBSAMPLE_SLICE,
                    )?,
                    None => run_obstacle_bbm(&mut stream, &spec, cfg.t_end(), &cfg.times, cfg.cap)?,
                };
                Ok(cfg
                    .times
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| {
                        let mut o = ReplicaOutcome::new(id, env_seed, t);
                        match run.observations.get(k) {
                            Some(&(_, n)) => o.population = Some(n),
                            None => o.censored = true,
                        }
                        o
                    })
                    .collect())
            }
            Mode::ClearingScan => {
                let c = &cfg.clearing;
                let centers = if c.lattice {
                    lattice_cube_centers(cfg.dim, c.ell, c.lattice_power)?
                } else {
                    vec![Point::origin(cfg.dim)]
                };
                let reach = centers
                    .iter()
                    .flat_map(|p| p.iter().map(|x| x.abs()))
                    .fold(0.0, f64::max);
                let domain = AxisBox::centered_cube(cfg.dim, reach + c.ell)?;
                let mut env = RngStream::new(cfg.env_seed, id);
                let field = TrapField::build(&mut env, cfg.dim, cfg.nu, cfg.trap_radius, domain)?;
                let mut radius = f64::INFINITY;
                for center in &centers {
                    let lo: Vec<f64> = center.iter().map(|x| x - c.ell).collect();
                    let hi: Vec<f64> = center.iter().map(|x| x + c.ell).collect();
                    let report = largest_clearing(&field, &AxisBox::new(lo, hi)?, c.resolution, c.mode)?;
                    radius = radius.min(report.radius);
                }
                let mut o = ReplicaOutcome::new(id, cfg.env_seed, 0.0);
                o.clearing_radius = Some(radius);
                o.hit = Some(radius >= c.rho);
                Ok(vec![o])
            }
            Mode::ClearingHit => {
                let field = self.field.as_ref().expect("clearing_hit mode builds a field");
                let path = sample_bm_path(&mut stream, cfg.dim, cfg.t_end(), cfg.step)?;
                let mut first_hit = f64::INFINITY;
                for vertex in &path {
                    match good_point_hit(field, std::slice::from_ref(vertex), self.hit_radius) {
                        Ok(true) => {
                            first_hit = vertex.0;
                            break;
                        }
                        Ok(false) => {}
                        Err(Error::OutOfDomain { .. }) => {
                            return Err(Error::EnvironmentTooSmall {
                                time: vertex.0,
                                required_half_width: 6.0 * cfg.t_end().sqrt() + self.hit_radius + cfg.trap_radius,
                            })
                        }
                        Err(e) => return Err(e),
                    }
                }
                Ok(cfg
                    .times
                    .iter()
                    .map(|&t| {
                        let mut o = ReplicaOutcome::new(id, env_seed, t);
                        o.clearing_radius = Some(self.hit_radius);
                        o.hit = Some(first_hit <= t);
                        o
                    })
                    .collect())
            }
            Mode::Theory => Ok(Vec::new()),
        }
    }

    fn confined_outcome(&self, stream: &mut RngStream, id: u64, h: &Horizon) -> Result<ReplicaOutcome> {
        let cfg = self.cfg;
        let mut o = ReplicaOutcome::new(id, self.env_seed(), h.t);
        let scale = h.p_t * (cfg.beta * h.t).exp();
        match cfg.estimator {
            Estimator::Exact => {
                let spec = ConfinedSpec {
                    dim: cfg.dim,
                    beta: cfg.beta,
                    radius: cfg.radius.expect("validated"),
                    t_end: h.t,
                    step: cfg.step,
                    cap: cfg.cap,
                    halving: cfg.halving,
                    trace_times: Vec::new(),
                };
                let run = run_confined_bbm(stream, &spec)?;
                if run.censored {
                    o.censored = true;
                    return Ok(o);
                }
                o.n_t = Some(run.n_t);
                o.n_t_fine = run.n_t_fine;
                o.normalized_mass = Some(run.n_t as f64 / scale);
                o.extinct = Some(run.n_t == 0);
                o.events = h.gammas.iter().map(|g| (run.n_t as f64) < g * scale).collect();
            }
            Estimator::Closure => {
                let rep = run_ld_replica(stream, cfg.beta, h.radius, h.t, h.p_t, &h.gammas, cfg.step, &cfg.ld)?;
                o.n_t = rep.n_t;
                o.normalized_mass = Some(rep.normalized_mass);
                o.extinct = Some(rep.extinct);
                o.closure = Some(rep.closure);
                o.events = rep.events;
            }
        }
        Ok(o)
    }
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Format {
        what: "checkpoint",
        message: e.to_string(),
    })?;
    if ck.format != CHECKPOINT_FORMAT {
        return Err(Error::Format {
            what: "checkpoint",
            message: format!("unsupported format {:?}", ck.format),
        });
    }
    Ok(ck)
}

/// The config embedded in a checkpoint file.
pub fn checkpoint_config(path: &Path) -> Result<ExperimentConfig> {
    Ok(read_checkpoint(path)?.config)
}

fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let text = serde_json::to_string(ck).expect("checkpoint serializes");
    write_text(&tmp, &text)?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Runs an experiment from scratch.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, opts: &RunOptions) -> Result<RunStatus> {
    execute(cfg, out_dir, opts, None)
}

/// Continues from a checkpoint. With `cfg` given, its hash must match the
/// checkpoint's; otherwise the embedded config is used.
pub fn resume_experiment(
    cfg: Option<&ExperimentConfig>,
    checkpoint: &Path,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<RunStatus> {
    let ck = read_checkpoint(checkpoint)?;
    let cfg = cfg.cloned().unwrap_or_else(|| ck.config.clone());
    let expected = cfg.hash();
    if expected != ck.config_hash {
        return Err(Error::ConfigHashMismatch {
            expected,
            found: ck.config_hash,
        });
    }
    let mut opts = opts.clone();
    opts.checkpoint = Some(checkpoint.to_path_buf());
    execute(&cfg, out_dir, &opts, Some(ck))
}

fn execute(cfg: &ExperimentConfig, out_dir: &Path, opts: &RunOptions, resume: Option<Checkpoint>) -> Result<RunStatus> {
    cfg.validate()?;
    if opts.workers == 0 || opts.chunk_size == 0 {
        return Err(Error::param("workers", "workers and chunk size must be positive"));
    }
    let started = Instant::now();
    let hash = cfg.hash();
    let ctx = Context::new(cfg)?;
    let replicas = if cfg.mode == Mode::Theory { 0 } else { cfg.replicas };
    let (mut completed, mut rows) = match resume {
        Some(ck) => (ck.completed, ck.rows),
        None => (0, Vec::new()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    let mut chunks = 0usize;
    while completed < replicas {
        let end = (completed + opts.chunk_size).min(replicas);
        let batch: Vec<Vec<ReplicaOutcome>> =
            pool.install(|| (completed..end).into_par_iter().map(|i| ctx.replica(i)).collect::<Result<_>>())?;
        for o in batch.iter().flatten() {
            rows.push(outcome_line(o)?);
        }
        completed = end;
        chunks += 1;
        if let Some(path) = &opts.checkpoint {
            write_checkpoint(
                path,
                &Checkpoint {
                    format: CHECKPOINT_FORMAT.into(),
                    config_hash: hash.clone(),
                    config: cfg.clone(),
                    completed,
                    rows: rows.clone(),
                },
            )?;
        }
        if opts.stop_after_chunks == Some(chunks) && completed < replicas {
            return Ok(RunStatus::Interrupted { completed });
        }
    }

    let outcomes = parse_outcome_lines(&rows.concat())?;
    let estimates = estimate(&ctx, &outcomes)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mode = cfg.mode.as_str();
    let header = outcome_header(mode, &hash, &cfg.kappa);
    write_text(
        &out_dir.join("outcomes.csv"),
        &render_outcomes(&header, cfg.kappa.len(), &rows)?,
    )?;
    write_text(&out_dir.join("estimates.csv"), &render_estimates(mode, &hash, &estimates)?)?;
    if let Some(field) = &ctx.field {
        write_env_file(field, &out_dir.join("env.csv"))?;
    }
    let record = RunRecord {
        format: "bbmlab run v1",
        version: env!("CARGO_PKG_VERSION"),
        mode,
        config_hash: &hash,
        replicas,
        workers: opts.workers,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        config: cfg,
    };
    write_text(
        &out_dir.join("run.json"),
        &serde_json::to_string_pretty(&record).expect("run record serializes"),
    )?;
    Ok(RunStatus::Complete(RunSummary {
        config_hash: hash,
        outcomes,
        estimates,
        out_dir: out_dir.to_path_buf(),
    }))
}

fn proportion_row(name: impl Into<String>, t: Option<f64>, k: u64, n: u64, censored: u64) -> EstimateRow {
    let (lo, hi) = wilson_interval(k, n, Z95);
    EstimateRow {
        estimand: name.into(),
        t,
        point: if n == 0 { f64::NAN } else { k as f64 / n as f64 },
        ci_low: lo,
        ci_high: hi,
        replicas_used: n,
        censored,
        note: "wilson95".into(),
    }
}

fn mean_row(name: impl Into<String>, t: Option<f64>, xs: &[f64], censored: u64) -> EstimateRow {
    let m = mean_estimate(xs);
    let (lo, hi) = m.ci(Z95);
    EstimateRow {
        estimand: name.into(),
        t,
        point: m.mean,
        ci_low: lo,
        ci_high: hi,
        replicas_used: m.n,
        censored,
        note: "normal95".into(),
    }
}

/// `log(P)/r` with a Wilson-derived interval; zero-event horizons report the
/// upper bound only.
fn rate_row(name: String, t: f64, k: u64, n: u64, radius: f64, censored: u64) -> EstimateRow {
    let (lo, hi) = wilson_interval(k, n, Z95);
    let (point, low, note) = if k == 0 {
        (hi.ln() / radius, f64::NEG_INFINITY, "upper_bound")
    } else {
        ((k as f64 / n as f64).ln() / radius, lo.ln() / radius, "wilson95")
    };
    EstimateRow {
        estimand: name,
        t: Some(t),
        point,
        ci_low: low,
        ci_high: hi.ln() / radius,
        replicas_used: n,
        censored,
        note: note.into(),
    }
}

fn at_time(outcomes: &[ReplicaOutcome], t: f64) -> (Vec<&ReplicaOutcome>, u64) {
    let rows: Vec<&ReplicaOutcome> = outcomes.iter().filter(|o| o.t == t).collect();
    let censored = rows.iter().filter(|o| o.censored).count() as u64;
    (rows.into_iter().filter(|o| !o.censored).collect(), censored)
}

fn estimate(ctx: &Context<'_>, outcomes: &[ReplicaOutcome]) -> Result<Vec<EstimateRow>> {
    let cfg = ctx.cfg;
    let mut rows = Vec::new();
    match cfg.mode {
        Mode::Free => {
            for &t in &cfg.times {
                let (kept, censored) = at_time(outcomes, t);
                let n = kept.len() as u64;
                let sizes: Vec<u64> = kept.iter().filter_map(|o| o.population).collect();
                let ones = sizes.iter().filter(|&&s| s == 1).count() as u64;
                rows.push(proportion_row("P(N=1)", Some(t), ones, n, censored));
                rows.push(EstimateRow::exact("theory P(N=1)", Some(t), yule_pmf(cfg.beta, t, 1)?, "exact"));
                let xs: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
                rows.push(mean_row("mean N", Some(t), &xs, censored));
                rows.push(EstimateRow::exact("theory mean N", Some(t), (cfg.beta * t).exp(), "exact"));
                let ranges: Vec<f64> = kept.iter().filter_map(|o| o.range_radius).collect();
                rows.push(mean_row("mean M", Some(t), &ranges, censored));
                if n > 0 {
                    let mut observed = vec![0u64; 21];
                    for &s in &sizes {
                        observed[(s.min(21) - 1) as usize] += 1;
                    }
                    let mut expected: Vec<f64> = (1..=20)
                        .map(|k| yule_pmf(cfg.beta, t, k).map(|p| p * n as f64))
                        .collect::<Result<_>>()?;
                    expected.push(yule_tail(cfg.beta, t, 20)? * n as f64);
                    if let Ok(chi) = chi_square_gof(&observed, &expected) {
                        let mut row = EstimateRow::exact("chi2 p-value N", Some(t), chi.p_value, format!("statistic={} df={}", chi.statistic, chi.df));
                        row.replicas_used = n;
                        row.censored = censored;
                        rows.push(row);
                    }
                }
            }
        }
        Mode::Confined => {
            let mut ladders: Vec<Vec<LdPoint>> = vec![Vec::new(); cfg.kappa.len()];
            for h in &ctx.horizons {
                let (kept, censored) = at_time(outcomes, h.t);
                let n = kept.len() as u64;
                let note = if h.p_asymptotic { "asymptotic" } else { "exact" };
                rows.push(EstimateRow::exact("theory p_t", Some(h.t), h.p_t, note));
                rows.push(EstimateRow::exact(
                    "theory E[n_t]",
                    Some(h.t),
                    h.p_t * (cfg.beta * h.t).exp(),
                    note,
                ));
                let counts: Vec<f64> = kept.iter().filter_map(|o| o.n_t.map(|v| v as f64)).collect();
                if counts.len() as u64 == n && n > 0 {
                    rows.push(mean_row("mean n_t", Some(h.t), &counts, censored));
                }
                let fine: Vec<f64> = kept.iter().filter_map(|o| o.n_t_fine.map(|v| v as f64)).collect();
                if !fine.is_empty() {
                    rows.push(mean_row("mean n_t half-step", Some(h.t), &fine, censored));
                }
                let masses: Vec<f64> = kept.iter().filter_map(|o| o.normalized_mass).collect();
                rows.push(mean_row("mean normalized mass", Some(h.t), &masses, censored));
                let extinct = kept.iter().filter(|o| o.extinct == Some(true)).count() as u64;
                rows.push(proportion_row("P(n_t=0)", Some(h.t), extinct, n, censored));
                rows.push(rate_row("extinction rate".into(), h.t, extinct, n, h.radius, censored));
                let capped = kept.iter().filter(|o| o.closure == Some(Closure::Cap)).count();
                if capped > 0 {
                    rows.push(EstimateRow::exact("closures at survivor cap", Some(h.t), capped as f64, "count"));
                }
                for (j, kappa) in cfg.kappa.iter().enumerate() {
                    let k = kept.iter().filter(|o| o.events.get(j) == Some(&true)).count() as u64;
                    rows.push(proportion_row(format!("P(E) kappa={kappa}"), Some(h.t), k, n, censored));
                    rows.push(rate_row(format!("rate kappa={kappa}"), h.t, k, n, h.radius, censored));
                    if n > 0 {
                        ladders[j].push(LdPoint {
                            radius: h.radius,
                            events: k,
                            trials: n,
                        });
                    }
                }
            }
            for (j, kappa) in cfg.kappa.iter().enumerate() {
                let pred = ld_rate_prediction(*kappa, cfg.beta)?;
                let (lo, hi) = pred.interval();
                let regime = match pred.regime {
                    LdRegime::Exact { .. } => "exact",
                    LdRegime::Band { .. } => "band",
                };
                rows.push(EstimateRow {
                    estimand: format!("theory rate kappa={kappa}"),
                    t: None,
                    point: hi,
                    ci_low: lo,
                    ci_high: hi,
                    replicas_used: 0,
                    censored: 0,
                    note: regime.into(),
                });
                if ladders[j].len() >= 3 {
                    let fit = estimate_ld_rate(&ladders[j])?;
                    rows.push(EstimateRow {
                        estimand: format!("ld slope kappa={kappa}"),
                        t: None,
                        point: fit.slope,
                        ci_low: fit.slope_low.min(fit.slope),
                        ci_high: fit.slope_high.max(fit.slope),
                        replicas_used: ladders[j].iter().map(|p| p.trials).sum(),
                        censored: 0,
                        note: if fit.one_sided { "one_sided" } else { "ols" }.into(),
                    });
                }
            }
            let ext = extinction_rate_lower_bound(cfg.beta)?;
            rows.push(EstimateRow::exact(
                "theory extinction rate",
                None,
                -ext.rate,
                format!("time_scale={}", ext.time_scale),
            ));
        }
        Mode::Obstacle => {
            for &t in &cfg.times {
                let (kept, censored) = at_time(outcomes, t);
                let samples: Vec<(u64, bool)> = kept.iter().filter_map(|o| o.population.map(|n| (n, false))).collect();
                let g = estimate_growth_exponent(cfg.dim, cfg.beta, t, &samples)?;
                let (lo, hi) = g.log_growth.ci(Z95);
                rows.push(EstimateRow {
                    estimand: "mean log(N)/t".into(),
                    t: Some(t),
                    point: g.log_growth.mean,
                    ci_low: lo,
                    ci_high: hi,
                    replicas_used: g.log_growth.n,
                    censored,
                    note: "normal95".into(),
                });
                if let Some(r) = g.rescaled {
                    let (lo, hi) = r.ci(Z95);
                    rows.push(EstimateRow {
                        estimand: "rescaled growth exponent".into(),
                        t: Some(t),
                        point: r.mean,
                        ci_low: lo,
                        ci_high: hi,
                        replicas_used: r.n,
                        censored,
                        note: "normal95".into(),
                    });
                }
                if cfg.nu > 0.0 && t > std::f64::consts::E {
                    let pred = quenched_growth_exponent(cfg.dim, cfg.nu, cfg.beta, t)?;
                    rows.push(EstimateRow::exact("theory log(N)/t", Some(t), pred.exponent, "asymptotic"));
                }
            }
            if cfg.nu > 0.0 {
                let c = TheoryConstants::new(cfg.dim, cfg.nu)?;
                rows.push(EstimateRow::exact("theory rescaled limit", None, -c.c_d_nu, "asymptotic"));
            }
        }
        Mode::ClearingScan => {
            let c = &cfg.clearing;
            let n = outcomes.len() as u64;
            let k = outcomes.iter().filter(|o| o.hit == Some(true)).count() as u64;
            if c.lattice {
                rows.push(proportion_row(
                    format!("P(every lattice cube has clearing>=rho) rho={} n={}", c.rho, c.lattice_power),
                    None,
                    k,
                    n,
                    0,
                ));
            } else {
                rows.push(proportion_row(format!("P(clearing>=rho) rho={}", c.rho), None, k, n, 0));
                let cells = (c.ell / c.rho).floor().powi(cfg.dim as i32);
                let bound = 1.0 - (-cells * (-cfg.nu * omega_d(cfg.dim) * c.rho.powi(cfg.dim as i32)).exp()).exp();
                rows.push(EstimateRow::exact("clearing existence lower bound", None, bound, "bound"));
            }
            let radii: Vec<f64> = outcomes.iter().filter_map(|o| o.clearing_radius).collect();
            rows.push(mean_row("mean largest clearing", None, &radii, 0));
            if let Some(scale) = scale_if_defined(cfg.dim, cfg.nu, c.ell)? {
                rows.push(EstimateRow::exact(
                    "theory R_ell",
                    None,
                    scale.r_ell,
                    if scale.clamped { "clamped" } else { "asymptotic" },
                ));
            }
        }
        Mode::ClearingHit => {
            for &t in &cfg.times {
                let (kept, censored) = at_time(outcomes, t);
                let n = kept.len() as u64;
                let misses = kept.iter().filter(|o| o.hit == Some(false)).count() as u64;
                rows.push(proportion_row("P(miss)", Some(t), misses, n, censored));
                rows.push(EstimateRow::exact("miss bound", Some(t), (-t.cbrt()).exp(), format!("clearing_radius={}", ctx.hit_radius)));
            }
        }
        Mode::Theory => rows = theory_rows(cfg)?,
    }
    Ok(rows)
}

fn scale_if_defined(dim: usize, nu: f64, ell: f64) -> Result<Option<ClearingScale>> {
    if nu > 0.0 && ell > std::f64::consts::E {
        clearing_scale(dim, nu, ell).map(Some)
    } else {
        Ok(None)
    }
}

/// Closed-form reference values for the parameters of `cfg`.
pub fn theory_rows(cfg: &ExperimentConfig) -> Result<Vec<EstimateRow>> {
    let mut rows = Vec::new();
    let dim = cfg.dim;
    rows.push(EstimateRow::exact("lambda_d", None, crate::theory::lambda_d(dim)?, "exact"));
    rows.push(EstimateRow::exact("omega_d", None, omega_d(dim), "exact"));
    if cfg.nu > 0.0 {
        let c = TheoryConstants::new(dim, cfg.nu)?;
        rows.push(EstimateRow::exact("R0", None, c.r0, "exact"));
        rows.push(EstimateRow::exact("c(d,nu)", None, c.c_d_nu, "exact"));
        if let Some(scale) = scale_if_defined(dim, cfg.nu, cfg.clearing.ell)? {
            rows.push(EstimateRow::exact(
                "R_ell",
                None,
                scale.r_ell,
                format!("ell={} clamped={}", cfg.clearing.ell, scale.clamped),
            ));
        }
    }
    for &t in &cfg.times {
        let radius = match cfg.radius {
            Some(f) => f.eval(t).ok(),
            None => None,
        };
        let r = radius.unwrap_or(1.0);
        let p = confinement_probability_series(dim, r, t)?;
        let note = |asym: bool| if asym { "asymptotic" } else { "exact" };
        rows.push(EstimateRow::exact("p_t", Some(t), p.value, format!("r={r} {}", note(p.asymptotic))));
        if radius.is_some() {
            rows.push(EstimateRow::exact(
                "E[n_t]",
                Some(t),
                p.value * (cfg.beta * t).exp(),
                format!("r={r} {}", note(p.asymptotic)),
            ));
        }
        let tail = displacement_tail(dim, 1.0, t)?;
        rows.push(EstimateRow::exact("P(sup|X|>=t)", Some(t), tail.value, note(tail.asymptotic)));
        rows.push(EstimateRow::exact("P(N=1)", Some(t), yule_pmf(cfg.beta, t, 1)?, "exact"));
        rows.push(EstimateRow::exact("mean N", Some(t), (cfg.beta * t).exp(), "exact"));
        if cfg.nu > 0.0 && t > std::f64::consts::E {
            let g = quenched_growth_exponent(dim, cfg.nu, cfg.beta, t)?;
            rows.push(EstimateRow::exact("log(N)/t", Some(t), g.exponent, "asymptotic"));
        }
        if cfg.nu > 0.0 && t > 1.0 {
            rows.push(EstimateRow::exact("good point radius", Some(t), good_point_radius(dim, cfg.nu, t)?, "exact"));
        }
    }
    for kappa in &cfg.kappa {
        let pred = ld_rate_prediction(*kappa, cfg.beta)?;
        let (lo, hi) = pred.interval();
        let regime = if lo == hi { "exact" } else { "band" };
        rows.push(EstimateRow {
            estimand: format!("ld rate kappa={kappa}"),
            t: None,
            point: hi,
            ci_low: lo,
            ci_high: hi,
            replicas_used: 0,
            censored: 0,
            note: regime.into(),
        });
    }
    let ext = extinction_rate_lower_bound(cfg.beta)?;
    rows.push(EstimateRow::exact(
        "extinction rate",
        None,
        -ext.rate,
        format!("time_scale={}", ext.time_scale),
    ));
    Ok(rows)
}
