//! Lower-deviation events `{n_t < gamma p_t e^{beta t}}` for one-dimensional
//! confined BBM, with early closure once the conditional mean is decisive.
//!
//! The population is simulated explicitly in time slices. Once at least
//! `min_survivors` particles remain confined at time `s`, the normalized
//! conditional mean
//!
//! ```text
//! W(s) = e^{-beta s} sum_i q(t - s, y_i, r) / p_t,   q(u, y, r) = P_y(sup_{v<=u} |X_v| < r)
//! ```
//! satisfies `E[n_t | F_s] = W(s) p_t e^{beta t}` exactly, and `n_t / E[n_t | F_s]`
//! is an average over many independent subtrees. The replica is closed when
//! `W(s)` lies outside `[gamma / margin, gamma * margin]` for every requested
//! `gamma`, or when `max_survivors` is reached; the event is then decided by
//! `W(s) < gamma`.

use serde::{Deserialize, Serialize};

use crate::engine::{Monitor, Population};
use crate::error::{Error, Result};
use crate::kernels::RngStream;
use crate::theory::interval_survival;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClosureParams {
    pub min_survivors: usize,
    pub max_survivors: usize,
    pub margin: f64,
    pub slice: f64,
}

impl Default for ClosureParams {
    fn default() -> Self {
        ClosureParams {
            min_survivors: 128,
            max_survivors: 2048,
            margin: 1.5,
            slice: 0.1,
        }
    }
}

impl ClosureParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_survivors == 0 || self.max_survivors < self.min_survivors {
            return Err(Error::schema(
                "ld.max_survivors",
                "need 1 <= min_survivors <= max_survivors",
            ));
        }
        if !(self.margin >= 1.0) || !self.margin.is_finite() {
            return Err(Error::schema("ld.margin", "must be a finite number >= 1"));
        }
        if !(self.slice > 0.0) || !self.slice.is_finite() {
            return Err(Error::schema("ld.slice", "must be positive"));
        }
        Ok(())
    }
}

/// How an LD replica was resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Simulated to the horizon; `n_t` is exact.
    Horizon,
    /// Every confined line died before closure; `n_t = 0` exactly.
    Extinct,
    /// Conditional mean far from every threshold.
    Decided,
    /// `max_survivors` reached while still near a threshold.
    Cap,
}

impl Closure {
    pub fn as_str(&self) -> &'static str {
        match self {
            Closure::Horizon => "horizon",
            Closure::Extinct => "extinct",
            Closure::Decided => "decided",
            Closure::Cap => "cap",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdReplica {
    /// `n_t / (p_t e^{beta t})` when exact, else `W(s)` at closure.
    pub normalized_mass: f64,
    /// Exact `n_t` when the replica reached the horizon or died out.
    pub n_t: Option<u64>,
    pub extinct: bool,
    pub closure: Closure,
    pub closure_time: f64,
    pub survivors: u64,
    /// One indicator per threshold `gamma`.
    pub events: Vec<bool>,
}

/// Normalized conditional mean `W(s)` of a confined population at time `s`.
pub fn conditional_mass(pop: &Population, beta: f64, radius: f64, t: f64, p_t: f64) -> f64 {
    let s = pop.current_time();
    let sum: f64 = pop
        .particles()
        .iter()
        .map(|p| interval_survival(radius, p.position[0], t - s))
        .sum();
    (-beta * s).exp() * sum / p_t
}

/// Runs one replica of the LD experiment for horizon `t`.
///
/// `gammas` are the thresholds `gamma_t`, `p_t` the confinement probability
/// used in the threshold, `step` the monitoring pitch.
pub fn run_ld_replica(
    stream: &mut RngStream,
    beta: f64,
    radius: f64,
    t: f64,
    p_t: f64,
    gammas: &[f64],
    step: f64,
    params: &ClosureParams,
) -> Result<LdReplica> {
    params.validate()?;
    if !(p_t > 0.0) {
        return Err(Error::param("p_t", format!("must be positive, got {p_t}")));
    }
    let monitor = Monitor::new(radius, step)?;
    let scale = p_t * (beta * t).exp();
    let cap = params.max_survivors.saturating_mul(64).max(1 << 16);
    let mut pop = Population::new(stream, 1, beta, cap)?;
    let mut slices = 0u64;
    loop {
        slices += 1;
        let next = (slices as f64 * params.slice).min(t);
        pop.advance_confined(stream, next, &monitor)?;
        let n = pop.len();
        if pop.censored() {
            return Err(Error::param(
                "ld.slice",
                "population overshot the survivor cap inside one slice; use a shorter slice",
            ));
        }
        if n == 0 {
            return Ok(LdReplica {
                normalized_mass: 0.0,
                n_t: Some(0),
                extinct: true,
                closure: Closure::Extinct,
                closure_time: next,
                survivors: 0,
                events: vec![true; gammas.len()],
            });
        }
        if next >= t {
            let exact = n as f64;
            return Ok(LdReplica {
                normalized_mass: exact / scale,
                n_t: Some(n as u64),
                extinct: false,
                closure: Closure::Horizon,
                closure_time: t,
                survivors: n as u64,
                events: gammas.iter().map(|g| exact < g * scale).collect(),
            });
        }
        if n >= params.min_survivors {
            let w = conditional_mass(&pop, beta, radius, t, p_t);
            let decided = gammas
                .iter()
                .all(|g| w < g / params.margin || w > g * params.margin);
            if decided || n >= params.max_survivors {
                return Ok(LdReplica {
                    normalized_mass: w,
                    n_t: None,
                    extinct: false,
                    closure: if decided { Closure::Decided } else { Closure::Cap },
                    closure_time: next,
                    survivors: n as u64,
                    events: gammas.iter().map(|g| w < *g).collect(),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_horizon_is_exact() {
        let p = interval_survival(1.0, 0.0, 1.0);
        for i in 0..200 {
            let mut s = RngStream::new(5, i);
            let rep = run_ld_replica(&mut s, 1.0, 1.0, 1.0, p, &[0.5], 0.02, &ClosureParams::default()).unwrap();
            assert!(matches!(rep.closure, Closure::Horizon | Closure::Extinct));
            let n = rep.n_t.unwrap();
            assert_eq!(rep.events[0], (n as f64) < 0.5 * p * 1f64.exp());
            assert_eq!(rep.extinct, n == 0);
        }
    }

    #[test]
    fn conditional_mass_has_unit_mean() {
        // E[W(s)] = 1 for every s: check at a fixed intermediate time.
        let (beta, r, t, s_mid) = (1.0, 2.0, 6.0, 2.0);
        let p = interval_survival(r, 0.0, t);
        let reps = 4_000;
        let mut acc = Vec::with_capacity(reps);
        let monitor = Monitor::new(r, 0.01).unwrap();
        for i in 0..reps {
            let mut s = RngStream::new(6, i as u64);
            let mut pop = Population::new(&mut s, 1, beta, 1 << 20).unwrap();
            pop.advance_confined(&mut s, s_mid, &monitor).unwrap();
            acc.push(conditional_mass(&pop, beta, r, t, p));
        }
        let m = acc.iter().sum::<f64>() / reps as f64;
        let sd = (acc.iter().map(|w| (w - m) * (w - m)).sum::<f64>() / reps as f64).sqrt();
        assert!((m - 1.0).abs() < 4.0 * sd / (reps as f64).sqrt() + 0.01, "{m}");
    }

    #[test]
    fn rejects_bad_params() {
        let mut s = RngStream::new(1, 1);
        let bad = ClosureParams {
            min_survivors: 10,
            max_survivors: 5,
            ..ClosureParams::default()
        };
        assert!(run_ld_replica(&mut s, 1.0, 1.0, 1.0, 0.3, &[0.5], 0.02, &bad).is_err());
        assert!(run_ld_replica(&mut s, 1.0, 1.0, 1.0, 0.0, &[0.5], 0.02, &ClosureParams::default()).is_err());
    }
}
