use serde::{Deserialize, Serialize};

use super::{Monitor, ObstacleBranchSpec, Population, RadiusFunction};
use crate::error::{Error, Result};
use crate::kernels::RngStream;

/// Validates a sorted list of observation times in `(0, t_end]` and appends
/// `t_end` when missing.
fn observation_grid(times: &[f64], t_end: f64) -> Result<Vec<f64>> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::param("t_end", format!("must be positive, got {t_end}")));
    }
    let mut grid = Vec::with_capacity(times.len() + 1);
    let mut last = 0.0;
    for &t in times {
        if !(t > last) || t > t_end {
            return Err(Error::param(
                "observation_times",
                "must be strictly increasing inside (0, t_end]",
            ));
        }
        grid.push(t);
        last = t;
    }
    if grid.last() != Some(&t_end) {
        grid.push(t_end);
    }
    Ok(grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeObservation {
    pub time: f64,
    pub population: u64,
    /// Largest `|position|` over all vertices visited up to `time`.
    pub range_radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreeRun {
    /// Observations completed before censoring.
    pub observations: Vec<FreeObservation>,
    pub censored: bool,
    pub total_born: u64,
}

/// Free dyadic BBM observed at the given times.
pub fn run_free_bbm(
    stream: &mut RngStream,
    dim: usize,
    beta: f64,
    t_end: f64,
    observation_times: &[f64],
    cap: usize,
) -> Result<FreeRun> {
    let grid = observation_grid(observation_times, t_end)?;
    let mut pop = Population::new(stream, dim, beta, cap)?;
    let mut observations = Vec::with_capacity(grid.len());
    for &t in &grid {
        pop.advance_free(stream, t)?;
        if pop.censored() {
            break;
        }
        observations.push(FreeObservation {
            time: t,
            population: pop.len() as u64,
            range_radius: pop.range_radius(),
        });
    }
    Ok(FreeRun {
        observations,
        censored: pop.censored(),
        total_born: pop.total_born(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfinedSpec {
    pub dim: usize,
    pub beta: f64,
    pub radius: RadiusFunction,
    pub t_end: f64,
    pub step: f64,
    pub cap: usize,
    /// Also carry the half-step discretization on the same paths.
    pub halving: bool,
    /// Times strictly before `t_end` at which the survivor count is recorded.
    pub trace_times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfinedRun {
    /// `r(t_end)`.
    pub radius: f64,
    pub n_t: u64,
    /// `n_t` under the half-step monitor, when requested.
    pub n_t_fine: Option<u64>,
    /// Survivor counts `(time, count)` at the trace times.
    pub trace: Vec<(f64, u64)>,
    pub censored: bool,
    pub root_exited_before_branch: bool,
    pub total_born: u64,
}

/// BBM counted only along ancestral lines that stay in `B(0, r(t_end))` up to
/// `t_end`. Lines that have left the ball are pruned as soon as detected.
pub fn run_confined_bbm(stream: &mut RngStream, spec: &ConfinedSpec) -> Result<ConfinedRun> {
    let radius = spec.radius.eval(spec.t_end)?;
    let monitor = Monitor::new(radius, spec.step)?.with_halving(spec.halving);
    let grid = observation_grid(&spec.trace_times, spec.t_end)?;
    let mut pop = Population::new(stream, spec.dim, spec.beta, spec.cap)?;
    let mut trace = Vec::with_capacity(grid.len());
    for &t in &grid {
        pop.advance_confined(stream, t, &monitor)?;
        if pop.censored() {
            break;
        }
        if t < spec.t_end {
            trace.push((t, pop.count_within(radius)));
        }
    }
    Ok(ConfinedRun {
        radius,
        n_t: pop.count_within(radius),
        n_t_fine: spec.halving.then(|| pop.count_within_fine(radius)),
        trace,
        censored: pop.censored(),
        root_exited_before_branch: pop.root_exited_before_branch(),
        total_born: pop.total_born(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassProfile {
    pub radii: Vec<f64>,
    /// `n_t(r)` for each radius.
    pub counts: Vec<u64>,
    /// `N_t`, the unconstrained population.
    pub population: u64,
    pub censored: bool,
}

/// `n_t(r)` for a whole ascending grid of radii from a single replica.
pub fn confined_mass_profile(
    stream: &mut RngStream,
    dim: usize,
    beta: f64,
    t_end: f64,
    r_grid: &[f64],
    step: f64,
    cap: usize,
) -> Result<MassProfile> {
    if r_grid.is_empty() || r_grid.windows(2).any(|w| !(w[0] <= w[1])) || !(r_grid[0] > 0.0) {
        return Err(Error::param("r_grid", "must be a non-empty ascending list of positive radii"));
    }
    if !(t_end > 0.0) {
        return Err(Error::param("t_end", format!("must be positive, got {t_end}")));
    }
    let monitor = Monitor::new(*r_grid.last().unwrap(), step)?.with_pruning(false);
    let mut pop = Population::new(stream, dim, beta, cap)?;
    pop.advance_confined(stream, t_end, &monitor)?;
    Ok(MassProfile {
        radii: r_grid.to_vec(),
        counts: r_grid.iter().map(|&r| pop.count_within(r)).collect(),
        population: pop.len() as u64,
        censored: pop.censored(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObstacleRun {
    /// `(time, N_t)` for observations completed before censoring.
    pub observations: Vec<(f64, u64)>,
    pub censored: bool,
    pub total_born: u64,
    /// Number of halvings in a subsampled run; observed counts are already
    /// multiplied by `2^halvings`.
    pub halvings: u32,
}

/// BBM among mild obstacles, branching at `beta` off the traps and at
/// `beta_bar` on them.
pub fn run_obstacle_bbm(
    stream: &mut RngStream,
    spec: &ObstacleBranchSpec<'_>,
    t_end: f64,
    observation_times: &[f64],
    cap: usize,
) -> Result<ObstacleRun> {
    let grid = observation_grid(observation_times, t_end)?;
    let mut pop = Population::new(stream, spec.field.dim(), spec.beta, cap)?;
    let mut observations = Vec::with_capacity(grid.len());
    for &t in &grid {
        pop.advance_obstacle(stream, t, spec)?;
        if pop.censored() {
            break;
        }
        observations.push((t, pop.len() as u64));
    }
    Ok(ObstacleRun {
        observations,
        censored: pop.censored(),
        total_born: pop.total_born(),
        halvings: 0,
    })
}

/// Weighted variant of [`run_obstacle_bbm`] for populations too large to
/// follow individually. At every multiple of `slice` the population is halved
/// by independent coin flips while it exceeds `keep`, and each halving doubles
/// the weight. Reported counts are `weight * survivors`, an unbiased
/// estimate of `N_t`.
pub fn run_obstacle_bbm_subsampled(
    stream: &mut RngStream,
    spec: &ObstacleBranchSpec<'_>,
    t_end: f64,
    observation_times: &[f64],
    keep: usize,
    slice: f64,
) -> Result<ObstacleRun> {
    if keep < 2 {
        return Err(Error::param("keep", "must be at least 2"));
    }
    if !(slice > 0.0) || !slice.is_finite() {
        return Err(Error::param("slice", "must be positive"));
    }
    let grid = observation_grid(observation_times, t_end)?;
    let cap = keep.saturating_mul(16);
    let mut pop = Population::new(stream, spec.field.dim(), spec.beta, cap)?;
    let mut observations = Vec::with_capacity(grid.len());
    let mut halvings = 0u32;
    let mut slices = 0u64;
    for &t_obs in &grid {
        loop {
            let boundary = (slices + 1) as f64 * slice;
            let target = boundary.min(t_obs);
            pop.advance_obstacle(stream, target, spec)?;
            if pop.censored() {
                return Err(Error::param(
                    "slice",
                    "population outgrew 16 * keep within one slice; use a shorter slice",
                ));
            }
            if target == boundary {
                slices += 1;
                while pop.len() > keep {
                    pop.thin_by_half(stream);
                    halvings += 1;
                }
            }
            if target >= t_obs {
                break;
            }
        }
        let weight = 2u64.checked_pow(halvings).unwrap_or(u64::MAX);
        observations.push((t_obs, (pop.len() as u64).saturating_mul(weight)));
    }
    Ok(ObstacleRun {
        observations,
        censored: false,
        total_born: pop.total_born(),
        halvings,
    })
}
