//! The particle engine: dyadic branching Brownian motion in free space, with
//! ancestral confinement monitoring, and among mild obstacles.
//!
//! A [`Population`] is advanced synchronously to a target time. Particles are
//! processed in index order and offspring are appended to the end of the same
//! pass, so a replica is a pure function of its stream and a run stopped by
//! the population cap is an exact prefix of the uncapped run.

mod paths;
mod radius;
mod runs;

pub use paths::{sample_bm_path, sample_confinement, sample_sup_norm, sample_yule_count};
pub use radius::RadiusFunction;
pub use runs::{
    confined_mass_profile, run_confined_bbm, run_free_bbm, run_obstacle_bbm,
    run_obstacle_bbm_subsampled, ConfinedRun,
    ConfinedSpec, FreeObservation, FreeRun, MassProfile, ObstacleRun,
};

use crate::environment::TrapField;
use crate::error::{Error, Result};
use crate::geometry::{check_dim, Point};
use crate::kernels::{add_gaussian_step, bridge_max_from_uniform, RngStream};

/// Default population cap.
pub const DEFAULT_CAP: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    pub position: Point,
    pub birth_time: f64,
    pub next_branch_candidate: f64,
    /// Running supremum of `|Y(s)|` over the whole ancestral line. In
    /// monitored runs this is the bridge-corrected value of the primary step.
    pub ancestral_sup_norm: f64,
    pub alive: bool,
    clock: f64,
    fine_sup: f64,
    anchor_radius: f64,
    anchor_time: f64,
    branched: bool,
}

impl Particle {
    fn root(dim: usize, first_candidate: f64) -> Self {
        Particle {
            position: Point::origin(dim),
            birth_time: 0.0,
            next_branch_candidate: first_candidate,
            ancestral_sup_norm: 0.0,
            alive: true,
            clock: 0.0,
            fine_sup: 0.0,
            anchor_radius: 0.0,
            anchor_time: 0.0,
            branched: false,
        }
    }

    /// Bridge-corrected sup-norm at half the primary step; equals
    /// `ancestral_sup_norm` unless step halving is enabled.
    pub fn fine_sup_norm(&self) -> f64 {
        self.fine_sup
    }
}

/// Boundary monitoring for confined runs.
///
/// Positions are sampled on the absolute grid `k * step` (or `k * step / 2`
/// with `halving`) and at every branch and observation time; between two
/// vertices the radial crossing is decided by a sampled Brownian-bridge
/// maximum. With `halving` both discretizations are carried on the same path:
/// `ancestral_sup_norm` uses vertices at the coarse pitch `step` and
/// `fine_sup_norm` the fine pitch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Monitor {
    pub barrier: f64,
    pub step: f64,
    pub halving: bool,
    /// Drop particles once every monitored level exceeds `barrier`.
    pub prune: bool,
}

impl Monitor {
    pub fn new(barrier: f64, step: f64) -> Result<Self> {
        if !(barrier > 0.0) {
            return Err(Error::param("radius", format!("must be positive, got {barrier}")));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::param("step", format!("must be positive, got {step}")));
        }
        Ok(Monitor {
            barrier,
            step,
            halving: false,
            prune: true,
        })
    }

    pub fn with_halving(mut self, halving: bool) -> Self {
        self.halving = halving;
        self
    }

    pub fn with_pruning(mut self, prune: bool) -> Self {
        self.prune = prune;
        self
    }

    fn fine_step(&self) -> f64 {
        if self.halving {
            0.5 * self.step
        } else {
            self.step
        }
    }
}

/// Branching rates among traps: `beta` outside `K`, `beta_bar` inside.
#[derive(Clone, Copy, Debug)]
pub struct ObstacleBranchSpec<'a> {
    pub beta: f64,
    pub beta_bar: f64,
    pub field: &'a TrapField,
}

impl<'a> ObstacleBranchSpec<'a> {
    /// `beta_bar == beta` is accepted so inert traps can serve as a control.
    pub fn new(beta: f64, beta_bar: f64, field: &'a TrapField) -> Result<Self> {
        check_rate(beta)?;
        if !(beta_bar >= 0.0 && beta_bar <= beta) {
            return Err(Error::param(
                "beta_bar",
                format!("must lie in [0, beta] = [0, {beta}], got {beta_bar}"),
            ));
        }
        Ok(ObstacleBranchSpec {
            beta,
            beta_bar,
            field,
        })
    }

    fn rate_at(&self, x: &Point) -> f64 {
        if self.field.contains_unchecked(x) {
            self.beta_bar
        } else {
            self.beta
        }
    }
}

fn check_rate(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::param("beta", format!("must be positive, got {beta}")))
    }
}

/// Box half-width that keeps a BBM of rate `beta` inside with high
/// probability up to time `t`.
pub fn required_half_width(beta: f64, t: f64) -> f64 {
    (2.0 * beta).sqrt() * t + 6.0 * t.sqrt()
}

#[derive(Clone, Debug)]
pub struct Population {
    dim: usize,
    beta: f64,
    particles: Vec<Particle>,
    current_time: f64,
    total_born: u64,
    alive: usize,
    cap: usize,
    censored: bool,
    root_exited_before_branch: bool,
}

enum Flow {
    Continue,
    Censored,
}

impl Population {
    /// A single particle at the origin at time 0. `beta` is the branching
    /// rate, or the dominating candidate rate in obstacle runs.
    pub fn new(stream: &mut RngStream, dim: usize, beta: f64, cap: usize) -> Result<Self> {
        check_dim(dim)?;
        check_rate(beta)?;
        if cap == 0 {
            return Err(Error::param("cap", "must be at least 1"));
        }
        let first = stream.exp1() / beta;
        Ok(Population {
            dim,
            beta,
            particles: vec![Particle::root(dim, first)],
            current_time: 0.0,
            total_born: 1,
            alive: 1,
            cap,
            censored: false,
            root_exited_before_branch: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Live particles, in creation order.
    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.alive
    }

    pub fn is_empty(&self) -> bool {
        self.alive == 0
    }

    pub fn current_time(&self) -> f64 {
        self.current_time
    }

    pub fn total_born(&self) -> u64 {
        self.total_born
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn censored(&self) -> bool {
        self.censored
    }

    /// Whether the initial particle's path left the monitored ball before
    /// its first branching (confined runs only).
    pub fn root_exited_before_branch(&self) -> bool {
        self.root_exited_before_branch
    }

    /// Particles whose ancestral sup-norm is at most `r`.
    pub fn count_within(&self, r: f64) -> u64 {
        self.particles
            .iter()
            .filter(|p| p.ancestral_sup_norm <= r)
            .count() as u64
    }

    /// As [`count_within`](Self::count_within) for the fine monitoring level.
    pub fn count_within_fine(&self, r: f64) -> u64 {
        self.particles.iter().filter(|p| p.fine_sup <= r).count() as u64
    }

    /// Largest ancestral sup-norm over live particles.
    pub fn range_radius(&self) -> f64 {
        self.particles
            .iter()
            .map(|p| p.ancestral_sup_norm)
            .fold(0.0, f64::max)
    }

    fn check_target(&self, t: f64) -> Result<bool> {
        if !t.is_finite() || t < self.current_time {
            return Err(Error::param(
                "time",
                format!("cannot advance from {} to {t}", self.current_time),
            ));
        }
        Ok(!self.censored)
    }

    fn spawn(&mut self, stream: &mut RngStream, parent: &mut Particle, s: f64) -> Flow {
        if self.alive + 1 > self.cap {
            self.censored = true;
            return Flow::Censored;
        }
        parent.branched = true;
        parent.next_branch_candidate = s + stream.exp1() / self.beta;
        let mut child = *parent;
        child.birth_time = s;
        child.clock = s;
        child.next_branch_candidate = s + stream.exp1() / self.beta;
        self.particles.push(child);
        self.alive += 1;
        self.total_born += 1;
        Flow::Continue
    }

    /// Keeps each particle independently with probability 1/2. Used by
    /// weighted runs that double the weight of every survivor.
    pub fn thin_by_half(&mut self, stream: &mut RngStream) {
        for p in self.particles.iter_mut() {
            if stream.uniform() < 0.5 {
                p.alive = false;
                self.alive -= 1;
            }
        }
        self.particles.retain(|p| p.alive);
    }

    fn finish(&mut self, t: f64) {
        if self.particles.len() != self.alive {
            self.particles.retain(|p| p.alive);
        }
        if !self.censored {
            self.current_time = t;
        }
    }

    /// Exact free evolution: Brownian increments between branch times and `t`.
    pub fn advance_free(&mut self, stream: &mut RngStream, t: f64) -> Result<()> {
        if !self.check_target(t)? {
            return Ok(());
        }
        let mut i = 0;
        while i < self.particles.len() {
            let mut p = self.particles[i];
            let flow = loop {
                let branch = p.next_branch_candidate <= t;
                let next = if branch { p.next_branch_candidate } else { t };
                let dt = next - p.clock;
                if dt > 0.0 {
                    add_gaussian_step(stream, dt.sqrt(), &mut p.position);
                }
                p.clock = next;
                p.ancestral_sup_norm = p.ancestral_sup_norm.max(p.position.norm());
                p.fine_sup = p.ancestral_sup_norm;
                if !branch {
                    break Flow::Continue;
                }
                if let Flow::Censored = self.spawn(stream, &mut p, next) {
                    break Flow::Censored;
                }
            };
            self.particles[i] = p;
            if let Flow::Censored = flow {
                break;
            }
            i += 1;
        }
        self.finish(t);
        Ok(())
    }

    /// Evolution with ancestral confinement monitoring against
    /// `monitor.barrier`.
    pub fn advance_confined(&mut self, stream: &mut RngStream, t: f64, monitor: &Monitor) -> Result<()> {
        if !self.check_target(t)? {
            return Ok(());
        }
        let fine = monitor.fine_step();
        let b = monitor.barrier;
        let mut i = 0;
        while i < self.particles.len() {
            let mut p = self.particles[i];
            if !p.alive {
                i += 1;
                continue;
            }
            let flow = loop {
                let mut k = (p.clock / fine).floor() + 1.0;
                let mut grid = k * fine;
                if grid <= p.clock {
                    k += 1.0;
                    grid = k * fine;
                }
                let branch = p.next_branch_candidate <= t && p.next_branch_candidate <= grid;
                let next = if branch {
                    p.next_branch_candidate
                } else {
                    grid.min(t)
                };
                let r_old = p.position.norm();
                let dt = next - p.clock;
                if dt > 0.0 {
                    add_gaussian_step(stream, dt.sqrt(), &mut p.position);
                    let r_new = p.position.norm();
                    let m = bridge_max_from_uniform(r_old, r_new, dt, stream.uniform_open0());
                    p.fine_sup = p.fine_sup.max(m);
                }
                p.clock = next;
                if monitor.halving {
                    let coarse_vertex = branch || next >= t || (next == grid && k % 2.0 == 0.0);
                    if coarse_vertex {
                        let dtc = next - p.anchor_time;
                        let r_new = p.position.norm();
                        if dtc > 0.0 {
                            let m = bridge_max_from_uniform(p.anchor_radius, r_new, dtc, stream.uniform_open0());
                            p.ancestral_sup_norm = p.ancestral_sup_norm.max(m);
                        }
                        p.anchor_radius = r_new;
                        p.anchor_time = next;
                    }
                } else {
                    p.ancestral_sup_norm = p.fine_sup;
                }
                if i == 0 && !p.branched && p.ancestral_sup_norm > b {
                    self.root_exited_before_branch = true;
                }
                if monitor.prune && p.fine_sup > b && p.ancestral_sup_norm > b {
                    p.alive = false;
                    self.alive -= 1;
                    break Flow::Continue;
                }
                if branch {
                    if let Flow::Censored = self.spawn(stream, &mut p, next) {
                        break Flow::Censored;
                    }
                } else if next >= t {
                    break Flow::Continue;
                }
            };
            self.particles[i] = p;
            if let Flow::Censored = flow {
                break;
            }
            i += 1;
        }
        self.finish(t);
        Ok(())
    }

    /// Evolution among mild obstacles by thinning: candidate branch times at
    /// rate `beta`, each accepted with probability `beta(x) / beta`.
    pub fn advance_obstacle(&mut self, stream: &mut RngStream, t: f64, spec: &ObstacleBranchSpec<'_>) -> Result<()> {
        if spec.beta != self.beta {
            return Err(Error::param("beta", "population and obstacle spec rates differ"));
        }
        if spec.field.dim() != self.dim {
            return Err(Error::param("dim", "population and trap field dimensions differ"));
        }
        if !self.check_target(t)? {
            return Ok(());
        }
        let domain = spec.field.domain();
        let mut i = 0;
        while i < self.particles.len() {
            let mut p = self.particles[i];
            let flow = loop {
                let candidate = p.next_branch_candidate <= t;
                let next = if candidate { p.next_branch_candidate } else { t };
                let dt = next - p.clock;
                if dt > 0.0 {
                    add_gaussian_step(stream, dt.sqrt(), &mut p.position);
                }
                p.clock = next;
                p.ancestral_sup_norm = p.ancestral_sup_norm.max(p.position.norm());
                p.fine_sup = p.ancestral_sup_norm;
                if !domain.contains(&p.position) {
                    return Err(Error::EnvironmentTooSmall {
                        time: next,
                        required_half_width: required_half_width(self.beta, t),
                    });
                }
                if !candidate {
                    break Flow::Continue;
                }
                let u = stream.uniform();
                if u * self.beta < spec.rate_at(&p.position) {
                    if let Flow::Censored = self.spawn(stream, &mut p, next) {
                        break Flow::Censored;
                    }
                } else {
                    p.next_branch_candidate = next + stream.exp1() / self.beta;
                }
            };
            self.particles[i] = p;
            if let Flow::Censored = flow {
                break;
            }
            i += 1;
        }
        self.finish(t);
        Ok(())
    }
}
