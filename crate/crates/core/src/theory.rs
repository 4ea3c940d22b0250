//! Closed-form and series evaluators: Brownian confinement and displacement
//! laws, the Yule distribution, Dirichlet eigenvalues of the ball, the
//! large-deviation rate predictions for confined mass and the quenched growth
//! exponent among mild obstacles.
//!
//! Values that are only leading-order asymptotics carry `asymptotic = true`
//! so callers can never mistake them for exact probabilities.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest dimension covered by the eigenvalue root finder.
pub const MAX_THEORY_DIM: usize = 10;

const SERIES_CUTOFF: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 10_000_000;

/// A value together with a flag telling whether it is exact or a leading-order
/// asymptotic with an implicit `(1 + o(1))` in the exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluated {
    pub value: f64,
    pub asymptotic: bool,
}

impl Evaluated {
    fn exact(value: f64) -> Self {
        Evaluated {
            value,
            asymptotic: false,
        }
    }

    fn asymptotic(value: f64) -> Self {
        Evaluated {
            value,
            asymptotic: true,
        }
    }
}

fn check_theory_dim(dim: usize) -> Result<()> {
    if (1..=MAX_THEORY_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::Range {
            dim,
            min: 1,
            max: MAX_THEORY_DIM,
        })
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

// ---------------------------------------------------------------------------
// Bessel zeros and ball constants

/// `J_nu(x)` up to the positive factor `(x/2)^nu / Gamma(nu + 1)`:
/// `sum_k (-1)^k (x^2/4)^k / (k! (nu+1)_k)`. Same sign and zeros as `J_nu`
/// on `x > 0`.
fn reduced_bessel_j(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -q / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > q.sqrt() {
            break;
        }
        if k > 500.0 {
            break;
        }
    }
    sum
}

/// First positive zero of `J_nu`, `nu > -1`, by scanning for a sign change
/// and bisecting to machine precision.
pub fn first_bessel_zero(nu: f64) -> f64 {
    assert!(nu > -1.0, "order must exceed -1");
    let step = 0.05;
    let mut lo = 1e-3;
    let mut f_lo = reduced_bessel_j(nu, lo);
    let mut hi = lo + step;
    let mut f_hi = reduced_bessel_j(nu, hi);
    while f_lo.signum() == f_hi.signum() {
        lo = hi;
        f_lo = f_hi;
        hi += step;
        f_hi = reduced_bessel_j(nu, hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = reduced_bessel_j(nu, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Principal Dirichlet eigenvalue of `-1/2 Laplacian` on the unit ball of
/// `R^d`: half the square of the first zero of `J_{d/2 - 1}`.
pub fn lambda_d(dim: usize) -> Result<f64> {
    check_theory_dim(dim)?;
    let j = first_bessel_zero(dim as f64 / 2.0 - 1.0);
    Ok(0.5 * j * j)
}

/// Volume of the unit ball in `R^d`.
pub fn omega_d(dim: usize) -> f64 {
    // omega_0 = 1, omega_1 = 2, omega_d = omega_{d-2} * 2 pi / d
    let (mut even, mut odd) = (1.0, 2.0);
    let mut k = 1;
    while k < dim {
        k += 1;
        if k % 2 == 0 {
            even *= 2.0 * PI / k as f64;
        } else {
            odd *= 2.0 * PI / k as f64;
        }
    }
    if dim == 0 {
        1.0
    } else if dim % 2 == 0 {
        even
    } else {
        odd
    }
}

/// Constants attached to a dimension and a trap intensity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoryConstants {
    pub dim: usize,
    pub lambda_d: f64,
    pub omega_d: f64,
    pub nu: f64,
    /// Clearing scale `(d / (nu omega_d))^{1/d}`.
    pub r0: f64,
    /// Growth-rate constant `lambda_d (d / (nu omega_d))^{-2/d}`.
    pub c_d_nu: f64,
}

impl TheoryConstants {
    pub fn new(dim: usize, nu: f64) -> Result<Self> {
        let nu = positive("nu", nu)?;
        let lambda = lambda_d(dim)?;
        let omega = omega_d(dim);
        let ratio = dim as f64 / (nu * omega);
        Ok(TheoryConstants {
            dim,
            lambda_d: lambda,
            omega_d: omega,
            nu,
            r0: ratio.powf(1.0 / dim as f64),
            c_d_nu: lambda * ratio.powf(-2.0 / dim as f64),
        })
    }
}

// ---------------------------------------------------------------------------
// Brownian confinement and displacement

/// `P_y(sup_{s <= t} |X_s| < r)` for one-dimensional Brownian motion started
/// at `y` in `(-r, r)`, via the eigenfunction expansion
/// `(4/pi) sum_n (-1)^n/(2n+1) cos((2n+1) pi y / (2r)) exp(-(2n+1)^2 pi^2 t / (8 r^2))`.
///
/// Summation stops once the term envelope drops below `1e-16` of the leading
/// term, which keeps full relative precision deep in the large-`t` tail.
/// Short times, where that series converges slowly, use the method of images.
pub fn interval_survival(r: f64, y: f64, t: f64) -> f64 {
    if y.abs() >= r {
        return 0.0;
    }
    if t <= 0.0 {
        return 1.0;
    }
    if PI * PI * t / (8.0 * r * r) < 1.0 {
        interval_survival_images(r, y, t)
    } else {
        interval_survival_series(r, y, t)
    }
}

fn interval_survival_series(r: f64, y: f64, t: f64) -> f64 {
    let rate = PI * PI * t / (8.0 * r * r);
    let phase = PI * y / (2.0 * r);
    let leading = (-rate).exp();
    if leading == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for n in 0..SERIES_MAX_TERMS {
        let m = (2 * n + 1) as f64;
        let envelope = (-m * m * rate).exp() / m;
        if envelope < SERIES_CUTOFF * leading {
            break;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * envelope * (m * phase).cos();
    }
    (4.0 / PI * sum).clamp(0.0, 1.0)
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Image expansion on `(0, 2r)` with the start shifted to `y + r`.
fn interval_survival_images(r: f64, y: f64, t: f64) -> f64 {
    let len = 2.0 * r;
    let x = y + r;
    let s = t.sqrt();
    let mass = |c: f64| std_normal_cdf((len - c) / s) - std_normal_cdf(-c / s);
    let reach = ((40.0 * s / len + 1.0) / 2.0).ceil() as i64 + 1;
    let mut sum = 0.0;
    for k in -reach..=reach {
        let shift = 2.0 * k as f64 * len;
        sum += mass(x + shift) - mass(shift - x);
    }
    sum.clamp(0.0, 1.0)
}

/// Confinement probability `p_t = P_0(sigma_{B(0,r)} >= t)`.
///
/// Exact series in `d = 1`; for `d >= 2` the leading-order value
/// `exp(-lambda_d t / r^2)` flagged as asymptotic.
pub fn confinement_probability_series(dim: usize, r: f64, t: f64) -> Result<Evaluated> {
    check_theory_dim(dim)?;
    let r = positive("r", r)?;
    let t = positive("t", t)?;
    if dim == 1 {
        Ok(Evaluated::exact(interval_survival(r, 0.0, t)))
    } else {
        Ok(Evaluated::asymptotic((-lambda_d(dim)? * t / (r * r)).exp()))
    }
}

/// `P(sup_{s<=t} |X_s| >= r)` in `d = 1` by the method of images:
/// `4 sum_{k>=1} (-1)^{k+1} Phi_bar((2k-1) r / sqrt t)`.
fn interval_exit_images(r: f64, t: f64) -> f64 {
    let scale = r / t.sqrt();
    let mut sum: f64 = 0.0;
    for k in 1..10_000 {
        let z = (2 * k - 1) as f64 * scale;
        let term = 0.5 * libm::erfc(z / std::f64::consts::SQRT_2);
        if term < SERIES_CUTOFF * sum.abs().max(1e-300) || term == 0.0 {
            break;
        }
        sum += if k % 2 == 1 { term } else { -term };
    }
    (4.0 * sum).clamp(0.0, 1.0)
}

/// Linear displacement tail `P(sup_{s<=t} |X_s| > k t)`.
///
/// In `d = 1` this is the exact complement of the confinement series at
/// radius `k t` (evaluated through the image expansion when the complement
/// is small, to avoid cancellation). For `d >= 2` the leading order
/// `exp(-k^2 t / 2)` flagged as asymptotic.
pub fn displacement_tail(dim: usize, k: f64, t: f64) -> Result<Evaluated> {
    check_theory_dim(dim)?;
    let k = positive("k", k)?;
    let t = positive("t", t)?;
    if dim == 1 {
        let r = k * t;
        let p = interval_survival(r, 0.0, t);
        let tail = if p < 0.5 { 1.0 - p } else { interval_exit_images(r, t) };
        Ok(Evaluated::exact(tail))
    } else {
        Ok(Evaluated::asymptotic((-k * k * t / 2.0).exp()))
    }
}

// ---------------------------------------------------------------------------
// Yule law

fn check_yule(beta: f64, t: f64, k: u64) -> Result<()> {
    positive("beta", beta)?;
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("must be non-negative, got {t}")));
    }
    if k < 1 {
        return Err(Error::param("k", "population sizes start at 1"));
    }
    Ok(())
}

/// `P(N_t = k) = e^{-beta t} (1 - e^{-beta t})^{k-1}`, `k >= 1`.
pub fn yule_pmf(beta: f64, t: f64, k: u64) -> Result<f64> {
    check_yule(beta, t, k)?;
    let q = -(-beta * t).exp_m1();
    Ok((-beta * t).exp() * q.powf((k - 1) as f64))
}

/// `P(N_t > k) = (1 - e^{-beta t})^k`, `k >= 1`.
pub fn yule_tail(beta: f64, t: f64, k: u64) -> Result<f64> {
    check_yule(beta, t, k)?;
    let q = -(-beta * t).exp_m1();
    Ok(q.powf(k as f64))
}

// ---------------------------------------------------------------------------
// Large-deviation predictions for confined mass

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum LdRegime {
    /// The limit exists and equals `value`.
    Exact { value: f64 },
    /// Only `lower <= liminf <= limsup <= upper` is known.
    Band { lower: f64, upper: f64 },
}

/// Predicted `lim (1/r(t)) log P(n_t < gamma_t p_t e^{beta t})` for
/// `gamma_t = e^{-kappa r(t)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LdRatePrediction {
    pub kappa: f64,
    pub beta: f64,
    #[serde(flatten)]
    pub regime: LdRegime,
}

impl LdRatePrediction {
    /// Interval of rates compatible with the prediction (degenerate when exact).
    pub fn interval(&self) -> (f64, f64) {
        match self.regime {
            LdRegime::Exact { value } => (value, value),
            LdRegime::Band { lower, upper } => (lower, upper),
        }
    }
}

pub fn ld_rate_prediction(kappa: f64, beta: f64) -> Result<LdRatePrediction> {
    let kappa = positive("kappa", kappa)?;
    let beta = positive("beta", beta)?;
    let threshold = (beta / 2.0).sqrt();
    let regime = if kappa <= threshold {
        LdRegime::Exact { value: -kappa }
    } else {
        LdRegime::Band {
            lower: -kappa.min((2.0 * beta).sqrt()),
            upper: -threshold,
        }
    };
    Ok(LdRatePrediction {
        kappa,
        beta,
        regime,
    })
}

/// Exponent of the extinction lower bound `P(n_t = 0) >= exp(-rate r(t) (1+o(1)))`
/// and the time scale `k` (in units of `r(t)`) of the optimal strategy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtinctionBound {
    pub rate: f64,
    pub time_scale: f64,
}

/// Suppress branching over `[0, k r(t)]` while the initial particle leaves the
/// ball: cost `beta k + 1/(2k)` per unit `r(t)`, minimized at `k = 1/sqrt(2 beta)`.
pub fn extinction_rate_lower_bound(beta: f64) -> Result<ExtinctionBound> {
    let beta = positive("beta", beta)?;
    let k = 1.0 / (2.0 * beta).sqrt();
    Ok(ExtinctionBound {
        rate: beta * k + 1.0 / (2.0 * k),
        time_scale: k,
    })
}

// ---------------------------------------------------------------------------
// Mild obstacles

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthPrediction {
    /// Predicted `(log N_t) / t = beta - c(d,nu) / (log t)^{2/d}`.
    pub exponent: f64,
    /// Limit of `(log t)^{2/d} ((log N_t)/t - beta)`, i.e. `-c(d,nu)`.
    pub rescaled_limit: f64,
    pub asymptotic: bool,
}

/// Quenched growth exponent of the total mass among mild obstacles. The trap
/// branching rate does not enter.
pub fn quenched_growth_exponent(dim: usize, nu: f64, beta: f64, t: f64) -> Result<GrowthPrediction> {
    let beta = positive("beta", beta)?;
    if !(t > std::f64::consts::E) {
        return Err(Error::param("t", format!("must exceed e, got {t}")));
    }
    let c = TheoryConstants::new(dim, nu)?.c_d_nu;
    Ok(GrowthPrediction {
        exponent: beta - c / t.ln().powf(2.0 / dim as f64),
        rescaled_limit: -c,
        asymptotic: true,
    })
}

/// Clearing radius scale `(R0/3) (1/(6d))^{1/d} (log t)^{1/d}` used for the
/// hitting estimate of large clearings.
pub fn good_point_radius(dim: usize, nu: f64, t: f64) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::param("t", format!("must exceed 1, got {t}")));
    }
    let r0 = TheoryConstants::new(dim, nu)?.r0;
    let d = dim as f64;
    Ok(r0 / 3.0 * (1.0 / (6.0 * d)).powf(1.0 / d) * t.ln().powf(1.0 / d))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on an arbitrary function, independent of the Bessel code.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo).signum() == f(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn eigenvalues_match_trigonometric_oracles() {
        // J_{-1/2} ~ cos x, J_{1/2} ~ sin x, J_{3/2} ~ sin x / x - cos x.
        let l1 = lambda_d(1).unwrap();
        assert!((l1 / (PI * PI / 8.0) - 1.0).abs() < 1e-10);
        let l3 = lambda_d(3).unwrap();
        assert!((l3 / (PI * PI / 2.0) - 1.0).abs() < 1e-10);
        let j52 = bisect(|x| x.sin() / x - x.cos(), 4.0, 5.0);
        let l5 = lambda_d(5).unwrap();
        assert!((l5 / (0.5 * j52 * j52) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eigenvalue_d2_matches_tabulated_zero() {
        // j_{0,1} from standard tables.
        let j01: f64 = 2.404_825_557_695_773;
        let l2 = lambda_d(2).unwrap();
        assert!((l2 / (0.5 * j01 * j01) - 1.0).abs() < 1e-10);
        assert!((l2 - 2.8916).abs() < 1e-4);
    }

    #[test]
    fn eigenvalue_dimension_range() {
        assert!(lambda_d(0).is_err());
        assert!(lambda_d(11).is_err());
        // Eigenvalues grow with dimension.
        let ls: Vec<f64> = (1..=10).map(|d| lambda_d(d).unwrap()).collect();
        assert!(ls.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(omega_d(1), 2.0);
        assert!((omega_d(2) - PI).abs() < 1e-15);
        assert!((omega_d(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((omega_d(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn constants_identities() {
        for dim in 1..=10 {
            for &nu in &[0.1, 1.0, 2.5, 17.0] {
                let c = TheoryConstants::new(dim, nu).unwrap();
                let rel = |a: f64, b: f64| (a / b - 1.0).abs();
                assert!(rel(c.c_d_nu * c.r0 * c.r0, c.lambda_d) < 1e-13);
                assert!(rel(c.r0.powi(dim as i32) * nu * c.omega_d, dim as f64) < 1e-13);
            }
        }
        assert!(TheoryConstants::new(1, 0.0).is_err());
        let c11 = TheoryConstants::new(1, 1.0).unwrap();
        assert!((c11.r0 - 0.5).abs() < 1e-15);
        assert!((c11.c_d_nu - PI * PI / 2.0).abs() < 1e-12);
    }

    /// Independent oracle: Crank-Nicolson on the 1-d heat equation
    /// `u_t = u_xx / 2` on `(-r, r)` with zero boundary values.
    fn heat_equation_survival(r: f64, t: f64, cells: usize, steps: usize) -> f64 {
        let dx = 2.0 * r / cells as f64;
        let n = cells - 1;
        let dt = t / steps as f64;
        let a = 0.25 * dt / (dx * dx);
        let mut u = vec![1.0; n];
        let mut rhs = vec![0.0; n];
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for _ in 0..steps {
            for i in 0..n {
                let left = if i > 0 { u[i - 1] } else { 0.0 };
                let right = if i + 1 < n { u[i + 1] } else { 0.0 };
                rhs[i] = a * left + (1.0 - 2.0 * a) * u[i] + a * right;
            }
            // Thomas algorithm for (-a, 1 + 2a, -a).
            let b = 1.0 + 2.0 * a;
            cp[0] = -a / b;
            dp[0] = rhs[0] / b;
            for i in 1..n {
                let m = b + a * cp[i - 1];
                cp[i] = -a / m;
                dp[i] = (rhs[i] + a * dp[i - 1]) / m;
            }
            u[n - 1] = dp[n - 1];
            for i in (0..n - 1).rev() {
                u[i] = dp[i] - cp[i] * u[i + 1];
            }
        }
        u[n / 2]
    }

    #[test]
    fn confinement_series_against_heat_equation() {
        let oracle = heat_equation_survival(1.0, 1.0, 400, 4000);
        let p = confinement_probability_series(1, 1.0, 1.0).unwrap();
        assert!(!p.asymptotic);
        assert!((p.value - oracle).abs() < 1e-4, "{} vs {}", p.value, oracle);
        // Frozen from the ten-term series.
        assert!((p.value - 0.370_777_429_799_524).abs() < 1e-12);
    }

    #[test]
    fn confinement_series_limits() {
        let small = confinement_probability_series(1, 1.0, 1e-4).unwrap().value;
        assert!(small > 0.9999 && small <= 1.0);
        let p50 = confinement_probability_series(1, 1.0, 50.0).unwrap().value;
        // -log p_t / t = pi^2/8 - log(4/pi)/t exactly up to e^{-9 pi^2 t/8}.
        let rate = -p50.ln() / 50.0;
        assert!((rate - (PI * PI / 8.0 - (4.0 / PI).ln() / 50.0)).abs() < 1e-12);
        let p2 = confinement_probability_series(2, 1.0, 1.0).unwrap();
        assert!(p2.asymptotic);
        assert!((p2.value - (-lambda_d(2).unwrap()).exp()).abs() < 1e-15);
    }

    #[test]
    fn off_center_survival_is_symmetric_and_peaks_at_center() {
        let c = interval_survival(2.0, 0.0, 3.0);
        let off = interval_survival(2.0, 0.7, 3.0);
        assert!((off - interval_survival(2.0, -0.7, 3.0)).abs() < 1e-15);
        assert!(off < c);
        assert_eq!(interval_survival(2.0, 2.0, 3.0), 0.0);
    }

    #[test]
    fn survival_expansions_agree_off_center() {
        for &(r, t) in &[(1.0, 0.3), (1.0, 0.9), (2.0, 2.5), (1.9, 4.0)] {
            for &y in &[0.0, 0.4, -0.9, 0.97 * r] {
                let a = interval_survival_series(r, y, t);
                let b = interval_survival_images(r, y, t);
                assert!((a - b).abs() < 1e-12, "r={r} y={y} t={t}: {a} vs {b}");
            }
        }
        // Vanishing remaining time must be immediate and give survival 1.
        assert!((interval_survival(1.9, 0.3, 1.8e-15) - 1.0).abs() < 1e-15);
        assert!(interval_survival(1.9, 1.9 - 1e-9, 1e-6) < 1e-3);
    }

    #[test]
    fn displacement_tail_routes_agree() {
        // Both expansions are exact; they must agree where both are well conditioned.
        for &(r, t) in &[(1.0, 1.0), (1.0, 0.5), (2.0, 3.0), (0.8, 0.4)] {
            let series = 1.0 - interval_survival_series(r, 0.0, t);
            let images = interval_exit_images(r, t);
            assert!((series - images).abs() < 1e-12, "r={r} t={t}");
        }
        let tail = displacement_tail(1, 1.0, 1.0).unwrap().value;
        assert!((tail - (1.0 - 0.370_777_429_799_524)).abs() < 1e-12);
        // At k = 1, t = 4 the decay rate is still 0.599, well above the limit 1/2.
        let t4 = displacement_tail(1, 1.0, 4.0).unwrap().value;
        assert!((-t4.ln() / 4.0 - 0.599_222_504).abs() < 1e-6);
        let mut prev = 1.0;
        for k in 1..20 {
            let v = displacement_tail(1, k as f64 * 0.5, 2.0).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
        assert!(displacement_tail(3, 1.0, 2.0).unwrap().asymptotic);
    }

    #[test]
    fn yule_law_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert!((yule_pmf(ln2, 1.0, 3).unwrap() - 0.125).abs() < 1e-15);
        for k in 1..50 {
            let lhs = yule_tail(1.0, 1.0, k).unwrap() - yule_tail(1.0, 1.0, k + 1).unwrap();
            assert!((lhs - yule_pmf(1.0, 1.0, k + 1).unwrap()).abs() < 1e-15);
        }
        let total: f64 = (1..=200).map(|k| yule_pmf(1.0, 1.0, k).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(yule_pmf(1.0, 1.0, 0).is_err());
        assert!(yule_tail(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn ld_predictions() {
        let p = ld_rate_prediction(0.5, 2.0).unwrap();
        assert_eq!(p.regime, LdRegime::Exact { value: -0.5 });
        let p = ld_rate_prediction(3.0, 2.0).unwrap();
        assert_eq!(p.regime, LdRegime::Band { lower: -2.0, upper: -1.0 });
        let p = ld_rate_prediction(1.0, 2.0).unwrap();
        assert_eq!(p.regime, LdRegime::Exact { value: -1.0 });
        // Continuity at the regime boundary.
        let just_above = ld_rate_prediction(1.0 + 1e-12, 2.0).unwrap().interval();
        assert!((just_above.1 - -1.0).abs() < 1e-12);
    }

    #[test]
    fn extinction_bound_examples() {
        let b = extinction_rate_lower_bound(2.0).unwrap();
        assert!((b.rate - 2.0).abs() < 1e-15 && (b.time_scale - 0.5).abs() < 1e-15);
        let b = extinction_rate_lower_bound(0.5).unwrap();
        assert!((b.rate - 1.0).abs() < 1e-15 && (b.time_scale - 1.0).abs() < 1e-15);
        for &beta in &[0.3, 2.0, 7.0] {
            let bound = extinction_rate_lower_bound(beta).unwrap();
            let kappa = 2.0 * (2.0 * beta).sqrt();
            let (lower, _) = ld_rate_prediction(kappa, beta).unwrap().interval();
            assert!((lower + bound.rate).abs() < 1e-12);
        }
    }

    #[test]
    fn growth_exponent_examples() {
        let t = 4f64.exp();
        let g = quenched_growth_exponent(1, 1.0, 6.0, t).unwrap();
        assert!((g.exponent - (6.0 - PI * PI / 32.0)).abs() < 1e-12);
        assert!((g.exponent - 5.6916).abs() < 1e-4);
        assert!((g.rescaled_limit + PI * PI / 2.0).abs() < 1e-12);
        let mut prev = 0.0;
        for k in 1..30 {
            let e = quenched_growth_exponent(2, 1.0, 3.0, (k as f64 * 2.0).exp()).unwrap().exponent;
            assert!(e > prev && e < 3.0);
            prev = e;
        }
        assert!(quenched_growth_exponent(1, 1.0, 6.0, 2.0).is_err());
    }

    #[test]
    fn good_point_radius_examples() {
        let r = good_point_radius(1, 1.0, 6f64.exp()).unwrap();
        assert!((r - 1.0 / 6.0).abs() < 1e-14);
        assert!(good_point_radius(2, 1.0, 10.0).unwrap() < good_point_radius(2, 1.0, 100.0).unwrap());
        let ratio = good_point_radius(2, 4.0, 50.0).unwrap() / good_point_radius(2, 1.0, 50.0).unwrap();
        assert!((ratio - 0.5).abs() < 1e-14);
        assert!(good_point_radius(1, 1.0, 1.0).is_err());
    }
}
