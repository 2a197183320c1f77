//! Quantitative checks of the decay hypotheses on the potential: the two
//! weighted tail integrals of Phi, Kato-class membership of the derived
//! profiles, and boundedness of the Newton potential.
//!
//! Convergence of an improper integral is not decidable from finitely many
//! samples, so every verdict is three-way: the integral is computed up to a
//! cutoff and the tail is classified by a fitted log-log slope with a margin.

use crate::error::{Error, Result};
use crate::problem::{geometric_grid, RadialMajorant};
use crate::quad;
use serde::Serialize;

/// Shared tuning for the condition checks.
#[derive(Debug, Clone, Copy)]
pub struct ConditionParams {
    /// Truncation radius for all improper integrals.
    pub r_max: f64,
    /// Absolute quadrature tolerance.
    pub abs_tol: f64,
    /// Relative quadrature tolerance.
    pub rel_tol: f64,
    /// Margin around the critical slope -1 in the tail classifier.
    pub delta_tail: f64,
    /// Kato sup estimates below this at the smallest radius count as vanishing.
    pub tau_kato: f64,
    /// Relative last-decade growth above which a sup estimate is not stable.
    pub stabilization_ratio: f64,
    /// Sample count for tail fits.
    pub tail_samples: usize,
}

impl Default for ConditionParams {
    fn default() -> Self {
        ConditionParams {
            r_max: 1e6,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            delta_tail: 0.1,
            tau_kato: 1e-2,
            stabilization_ratio: 1e-2,
            tail_samples: 33,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Finite,
    Divergent,
    Inconclusive,
}

/// Outcome of a truncated improper integral with tail classification.
#[derive(Debug, Clone, Serialize)]
pub struct IntegralVerdict {
    /// Partial integral up to the cutoff.
    pub value: f64,
    /// Fitted log-log slope of the integrand near the cutoff; absent when the
    /// integrand vanishes identically there or the fit is impossible.
    pub tail_exponent: Option<f64>,
    pub verdict: Verdict,
    pub r_max: f64,
    pub quadrature_error_estimate: f64,
}

fn classify_tail(fit: &quad::TailFit, delta_tail: f64) -> Verdict {
    match fit.slope {
        None => {
            if fit.stable {
                // Identically vanishing tail.
                Verdict::Finite
            } else {
                Verdict::Inconclusive
            }
        }
        Some(s) => {
            if !fit.stable {
                Verdict::Inconclusive
            } else if s < -1.0 - delta_tail {
                Verdict::Finite
            } else if s >= -1.0 + delta_tail {
                Verdict::Divergent
            } else {
                Verdict::Inconclusive
            }
        }
    }
}

fn weighted_tail_check(
    phi: &RadialMajorant,
    weight_exp: f64,
    params: &ConditionParams,
) -> Result<IntegralVerdict> {
    let g = |r: f64| -> f64 {
        let v = phi.eval(r).unwrap_or(f64::NAN);
        r.powf(weight_exp) * v
    };
    let q = quad::integrate_decades(&g, params.r_max, params.abs_tol, params.rel_tol)?;
    if !q.value.is_finite() || q.value < -1e-12 {
        return Err(Error::Quadrature(format!(
            "weighted potential integral evaluated to {}",
            q.value
        )));
    }
    let fit = quad::tail_fit(&g, params.r_max, params.tail_samples);
    Ok(IntegralVerdict {
        value: q.value.max(0.0),
        tail_exponent: fit.slope,
        verdict: classify_tail(&fit, params.delta_tail),
        r_max: params.r_max,
        quadrature_error_estimate: q.error,
    })
}

/// Check the planar-decay condition: finiteness of the integral of r Phi(r).
pub fn check_rho1(phi: &RadialMajorant, params: &ConditionParams) -> Result<IntegralVerdict> {
    weighted_tail_check(phi, 1.0, params)
}

/// Check the volume-decay condition: finiteness of the integral of
/// r^(N-1) Phi(r).
pub fn check_rho2(phi: &RadialMajorant, dim: usize, params: &ConditionParams) -> Result<IntegralVerdict> {
    if dim < 3 {
        return Err(Error::Invalid(format!("dimension must be >= 3, got {dim}")));
    }
    weighted_tail_check(phi, dim as f64 - 1.0, params)
}

// ---------------------------------------------------------------------------
// Kato-class profile
// ---------------------------------------------------------------------------

/// Which derived profile is integrated against the fundamental solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KatoVariant {
    /// psi(r) = r^(N-3) Phi(r)
    Rho1,
    /// psi(r) = r^(-1) Phi(r)
    Rho2,
}

/// Kernel placement in the local integral. `Printed` weighs psi by E(y),
/// the fundamental solution centered at the origin; `Translated` uses
/// E(x - y). Both are provided; `Printed` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KatoKernel {
    Printed,
    Translated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KatoTrend {
    Vanishing,
    NonVanishing,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct KatoProfile {
    pub alphas: Vec<f64>,
    /// sup over the center set of the local weighted integral, one per alpha.
    pub sup_estimates: Vec<f64>,
    pub trend: KatoTrend,
    pub variant: KatoVariant,
    pub kernel: KatoKernel,
    pub centers: Vec<f64>,
}

/// Surface area of the unit sphere in R^n.
pub fn sphere_area(n: usize) -> f64 {
    // 2 pi^(n/2) / Gamma(n/2), with Gamma built by recurrence.
    let half = n as f64 / 2.0;
    let mut gamma;
    let mut x;
    if n % 2 == 0 {
        gamma = 1.0; // Gamma(1)
        x = 1.0;
    } else {
        gamma = std::f64::consts::PI.sqrt(); // Gamma(1/2)
        x = 0.5;
    }
    while x < half - 0.25 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(half) / gamma
}

/// Normalization of the fundamental solution E(y) = c_n |y|^(2-n).
pub fn fundamental_constant(n: usize) -> f64 {
    1.0 / ((n as f64 - 2.0) * sphere_area(n))
}

/// sin^m integral I_m(theta) = int_0^theta sin^m t dt by recurrence.
fn sin_power_integral(m: usize, theta: f64) -> f64 {
    match m {
        0 => theta,
        1 => 1.0 - theta.cos(),
        _ => {
            let s = theta.sin();
            let c = theta.cos();
            (-s.powi(m as i32 - 1) * c + (m as f64 - 1.0) * sin_power_integral(m - 2, theta))
                / m as f64
        }
    }
}

pub fn default_alphas() -> Vec<f64> {
    (0..9).map(|j| 2f64.powi(-j)).collect()
}

pub fn default_kato_centers() -> Vec<f64> {
    let mut c = vec![0.0];
    c.extend(geometric_grid(1e-2, 1e2, 16));
    c
}

fn psi_eval(phi: &RadialMajorant, variant: KatoVariant, dim: usize, s: f64) -> f64 {
    let p = phi.eval(s).unwrap_or(f64::NAN);
    match variant {
        KatoVariant::Rho1 => s.powi(dim as i32 - 3) * p,
        KatoVariant::Rho2 => p / s,
    }
}

/// Local integral of E psi over the ball of radius `alpha` centered at
/// distance `d` from the origin, with the kernel E anchored at the origin.
///
/// Reduces to one radial quadrature: each sphere |y| = s meets the ball in a
/// cap whose angular measure is available in closed form, and the s^(2-n)
/// kernel cancels against the s^(n-1) surface factor.
fn kato_local_printed(
    phi: &RadialMajorant,
    variant: KatoVariant,
    dim: usize,
    d: f64,
    alpha: f64,
    params: &ConditionParams,
) -> Result<f64> {
    let n = dim;
    let c_n = fundamental_constant(n);
    if d == 0.0 {
        // Full spheres: (1/(n-2)) int_0^alpha s psi(s) ds.
        let g = |s: f64| s * psi_eval(phi, variant, n, s);
        let q = quad::adaptive(&g, 0.0, alpha, params.abs_tol, params.rel_tol)?;
        return Ok(q.value / (n as f64 - 2.0));
    }
    let omega_cap = sphere_area(n - 1); // S^(n-2), the cap cross-section measure
    let lo = (d - alpha).max(0.0);
    let hi = d + alpha;
    let g = |s: f64| {
        let u = (s * s + d * d - alpha * alpha) / (2.0 * s * d);
        let theta = u.clamp(-1.0, 1.0).acos();
        if theta <= 0.0 {
            return 0.0;
        }
        s * psi_eval(phi, variant, n, s) * sin_power_integral(n - 2, theta)
    };
    let q = quad::adaptive(&g, lo, hi, params.abs_tol, params.rel_tol)?;
    Ok(c_n * omega_cap * q.value)
}

/// Same local integral with the kernel translated to the center, E(x - y).
/// Evaluated in polar coordinates around the center (product quadrature).
fn kato_local_translated(
    phi: &RadialMajorant,
    variant: KatoVariant,
    dim: usize,
    d: f64,
    alpha: f64,
    params: &ConditionParams,
) -> Result<f64> {
    let n = dim;
    if d == 0.0 {
        return kato_local_printed(phi, variant, dim, 0.0, alpha, params);
    }
    let c_n = fundamental_constant(n);
    let omega_cap = sphere_area(n - 1);
    let inner_abs = params.abs_tol.max(1e-12);
    let inner_rel = params.rel_tol.max(1e-7);
    let outer = |t: f64| -> f64 {
        let f_theta = |theta: f64| {
            let s2 = d * d + t * t + 2.0 * d * t * theta.cos();
            let s = s2.max(0.0).sqrt();
            if s == 0.0 {
                return 0.0;
            }
            psi_eval(phi, variant, n, s) * theta.sin().powi(n as i32 - 2)
        };
        match quad::adaptive(&f_theta, 0.0, std::f64::consts::PI, inner_abs, inner_rel) {
            Ok(q) => t * q.value,
            Err(_) => f64::NAN,
        }
    };
    let q = quad::adaptive(&outer, 0.0, alpha, params.abs_tol.max(1e-11), params.rel_tol.max(1e-7))?;
    Ok(c_n * omega_cap * q.value)
}

/// Estimate sup over centers of the local fundamental-solution-weighted
/// integral of the derived profile, for each ball radius in `alphas`.
pub fn kato_profile(
    phi: &RadialMajorant,
    dim: usize,
    variant: KatoVariant,
    alphas: &[f64],
    kernel: KatoKernel,
    centers: &[f64],
    params: &ConditionParams,
) -> Result<KatoProfile> {
    if alphas.is_empty() {
        return Err(Error::Invalid("alphas must be nonempty".into()));
    }
    for w in alphas.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Invalid("alphas must be strictly decreasing".into()));
        }
    }
    if !(*alphas.last().unwrap() > 0.0) {
        return Err(Error::Invalid("alphas must be positive".into()));
    }

    let mut sups = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut sup = 0.0f64;
        for &d in centers {
            let v = match kernel {
                KatoKernel::Printed => kato_local_printed(phi, variant, dim, d, alpha, params)?,
                KatoKernel::Translated => {
                    kato_local_translated(phi, variant, dim, d, alpha, params)?
                }
            };
            if !v.is_finite() || v < -1e-12 {
                return Err(Error::Quadrature(format!(
                    "Kato local integral evaluated to {v} at center {d}, alpha {alpha}"
                )));
            }
            sup = sup.max(v.max(0.0));
        }
        sups.push(sup);
    }

    // alphas decrease, so the estimates must not increase.
    let mut monotone = true;
    for w in sups.windows(2) {
        if w[1] > w[0] * (1.0 + 1e-9) + 1e-14 {
            monotone = false;
            break;
        }
    }
    let trend = if !monotone {
        KatoTrend::Inconclusive
    } else if *sups.last().unwrap() < params.tau_kato {
        KatoTrend::Vanishing
    } else {
        KatoTrend::NonVanishing
    };

    Ok(KatoProfile {
        alphas: alphas.to_vec(),
        sup_estimates: sups,
        trend,
        variant,
        kernel,
        centers: centers.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// Newton potential bound
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundedness {
    Bounded,
    Unbounded,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonPotentialReport {
    /// Largest sampled value of the Newton potential (surface measure
    /// normalization included), plus the fitted tail correction.
    pub sup_estimate: f64,
    pub verdict: Boundedness,
    /// Tail exponent of the integrand s rho(s) near the cutoff.
    pub tail_exponent: Option<f64>,
    /// Relative growth of the sup estimate contributed by the last decade.
    pub decade_growth: f64,
    /// True when an anisotropic potential was replaced by its majorant,
    /// making the estimate an upper bound.
    pub used_majorant: bool,
}

/// Estimate sup over x of the Newton potential of rho and classify its
/// boundedness. Radial reduction: the spherical mean of |x - y|^(2-N) over
/// |y| = s equals max(|x|, s)^(2-N).
pub fn newton_potential_bound(
    phi: &RadialMajorant,
    params: &ConditionParams,
) -> Result<NewtonPotentialReport> {
    let n = phi.dim();
    let omega = sphere_area(n);
    let used_majorant = !phi.potential().is_radial();

    // Cumulative integrals on a geometric grid.
    let mut grid = vec![0.0];
    grid.extend(geometric_grid(1e-3, params.r_max, 61));
    let mut f_cum = vec![0.0; grid.len()]; // int_0^r s^(n-1) rho
    let mut t_cum = vec![0.0; grid.len()]; // int_0^r s rho
    let g_vol = |s: f64| s.powi(n as i32 - 1) * phi.eval(s).unwrap_or(f64::NAN);
    let g_lin = |s: f64| s * phi.eval(s).unwrap_or(f64::NAN);
    for i in 1..grid.len() {
        let (a, b) = (grid[i - 1], grid[i]);
        f_cum[i] = f_cum[i - 1] + quad::adaptive(&g_vol, a, b, params.abs_tol, params.rel_tol)?.value;
        t_cum[i] = t_cum[i - 1] + quad::adaptive(&g_lin, a, b, params.abs_tol, params.rel_tol)?.value;
    }
    let t_total = *t_cum.last().unwrap();

    let fit = quad::tail_fit(&g_lin, params.r_max, params.tail_samples);
    let tail_class = classify_tail(&fit, params.delta_tail);

    // sup over the grid; the centered value is omega * int_0^R s rho + tail.
    let mut sup = omega * (t_total + fit.tail_estimate);
    for i in 1..grid.len() {
        let r = grid[i];
        let v = omega * (r.powi(2 - n as i32) * f_cum[i] + (t_total - t_cum[i]) + fit.tail_estimate);
        sup = sup.max(v);
    }

    if t_total <= 1e-300 && sup <= 1e-300 {
        return Ok(NewtonPotentialReport {
            sup_estimate: 0.0,
            verdict: Boundedness::Bounded,
            tail_exponent: fit.slope,
            decade_growth: 0.0,
            used_majorant,
        });
    }

    // Growth of the last decade of the linear-weight integral.
    let idx_decade = grid
        .iter()
        .position(|&r| r >= params.r_max / 10.0)
        .unwrap_or(grid.len() - 1);
    let decade_increment = omega * (t_total - t_cum[idx_decade]);
    let decade_growth = decade_increment / sup.max(1e-300);

    let growing = decade_growth > params.stabilization_ratio;
    let verdict = match (tail_class, growing) {
        (Verdict::Divergent, _) => Boundedness::Unbounded,
        (Verdict::Finite, false) => Boundedness::Bounded,
        (Verdict::Finite, true) => Boundedness::Inconclusive,
        (Verdict::Inconclusive, true) => Boundedness::Unbounded,
        (Verdict::Inconclusive, false) => Boundedness::Inconclusive,
    };

    Ok(NewtonPotentialReport {
        sup_estimate: sup,
        verdict,
        tail_exponent: fit.slope,
        decade_growth,
        used_majorant,
    })
}
