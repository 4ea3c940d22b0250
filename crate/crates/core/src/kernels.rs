//! Low-level randomness: counter-addressed streams, exponential / Gaussian /
//! Poisson sampling and the Brownian-bridge boundary-crossing correction.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Point};

/// A reproducible random stream addressed by `(seed, stream_id, counter)`.
///
/// Backed by ChaCha8 in counter mode: the 64-bit seed is expanded into the
/// key, `stream_id` selects the ChaCha stream (nonce) and the counter is the
/// 32-bit word position inside that stream. Draw `k` of a stream is therefore
/// a pure function of the triple, and distinct stream ids never share state.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn expand_key(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(expand_key(seed));
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    /// Stream positioned at an arbitrary counter value.
    pub fn at(seed: u64, stream_id: u64, counter: u128) -> Self {
        let mut s = RngStream::new(seed, stream_id);
        s.rng.set_word_pos(counter);
        s
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on `(0, 1]`, safe to take a logarithm of.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    #[inline]
    pub(crate) fn exp1(&mut self) -> f64 {
        Exp1.sample(&mut self.rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Exponential waiting time with the given rate.
pub fn sample_exponential(stream: &mut RngStream, rate: f64) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::param("rate", format!("must be positive and finite, got {rate}")));
    }
    Ok(stream.exp1() / rate)
}

/// Brownian increment over a time step `h`: i.i.d. `N(0, h)` coordinates.
pub fn sample_gaussian_step(stream: &mut RngStream, dim: usize, step: f64) -> Result<Point> {
    crate::geometry::check_dim(dim)?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::param("step", format!("must be positive, got {step}")));
    }
    let mut p = Point::origin(dim);
    add_gaussian_step(stream, step.sqrt(), &mut p);
    Ok(p)
}

/// Moves `x` by a Brownian increment with standard deviation `sd` per axis.
#[inline]
pub(crate) fn add_gaussian_step(stream: &mut RngStream, sd: f64, x: &mut Point) {
    for c in x.iter_mut() {
        *c += sd * stream.standard_normal();
    }
}

/// Radial endpoints of one monitoring sub-step against a ball of radius `barrier`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BridgeQuery {
    pub from_radius: f64,
    pub to_radius: f64,
    pub barrier: f64,
    pub step: f64,
}

/// One-sided Brownian-bridge level-crossing probability applied to the radial
/// coordinate: `exp(-2 (b - r0)(b - r1) / h)`, and 1 once an endpoint is at
/// or beyond the barrier.
pub fn bridge_crossing_probability(q: &BridgeQuery) -> f64 {
    if q.from_radius >= q.barrier || q.to_radius >= q.barrier {
        return 1.0;
    }
    let p = (-2.0 * (q.barrier - q.from_radius) * (q.barrier - q.to_radius) / q.step).exp();
    p.clamp(0.0, 1.0)
}

/// Samples the maximum of a one-dimensional Brownian bridge from `a` to `b`
/// over duration `h`, by inverting `P(max >= m) = exp(-2 (m - a)(m - b) / h)`.
///
/// With `u` uniform on `(0, 1]`, `max >= barrier` holds exactly when
/// `u <= bridge_crossing_probability`, so a running maximum of these samples
/// decides every barrier at once.
#[inline]
pub fn bridge_max_from_uniform(a: f64, b: f64, h: f64, u: f64) -> f64 {
    let d = a - b;
    0.5 * (a + b + (d * d - 2.0 * h * u.ln()).sqrt())
}

/// Draws one bridge maximum from `stream`.
#[inline]
pub fn sample_bridge_max(stream: &mut RngStream, a: f64, b: f64, h: f64) -> f64 {
    let u = stream.uniform_open0();
    bridge_max_from_uniform(a, b, h, u)
}

/// Homogeneous Poisson point process of the given intensity inside `bx`:
/// a Poisson count followed by i.i.d. uniform placement.
pub fn sample_ppp_in_box(stream: &mut RngStream, intensity: f64, bx: &AxisBox) -> Result<Vec<Point>> {
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return Err(Error::param("intensity", format!("must be non-negative, got {intensity}")));
    }
    if bx.is_degenerate() {
        return Err(Error::param("box", "box has zero extent along some axis"));
    }
    let mean = intensity * bx.volume();
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let count = sample_poisson(stream, mean)?;
    let dim = bx.dim();
    let mut points = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut p = Point::origin(dim);
        for (k, c) in p.iter_mut().enumerate() {
            *c = bx.lo[k] + stream.uniform() * bx.extent(k);
        }
        points.push(p);
    }
    Ok(points)
}

pub(crate) fn sample_poisson(stream: &mut RngStream, mean: f64) -> Result<u64> {
    let dist = Poisson::new(mean)
        .map_err(|e| Error::param("intensity", format!("poisson mean {mean}: {e}")))?;
    let v: f64 = dist.sample(stream);
    Ok(v as u64)
}
