//! Problem instances: the sublinear nonlinearity f, the nonnegative potential
//! rho with its radial majorant Phi(r) = max over the sphere |x| = r, and the
//! sampled certificates for the structural hypotheses on f.
//!
//! The hypothesis checks are sampled evidence over a finite grid, not proofs;
//! their serialized form says so explicitly.

use crate::error::{Error, Result};
use crate::interp::Pchip;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

// ---------------------------------------------------------------------------
// Nonlinearity
// ---------------------------------------------------------------------------

#[derive(Clone)]
pub enum NonlinKind {
    /// f(u) = u^p with p < 1 in the sublinear regime (any real p is evaluable).
    Power { p: f64 },
    /// Monotone cubic interpolation of sampled (u, f(u)) pairs.
    Table { interp: Pchip },
    /// Arbitrary user closure.
    Closure { f: ScalarFn },
}

/// The nonlinearity f on (0, infinity), optionally extended by continuity at 0.
#[derive(Clone)]
pub struct Nonlinearity {
    pub kind: NonlinKind,
    /// Value of f(0+) when it exists and was declared; evaluation at u = 0 is
    /// a domain error without it.
    pub f_at_zero: Option<f64>,
    /// Human-readable description for reports.
    pub label: String,
}

impl std::fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Nonlinearity").field("label", &self.label).finish()
    }
}

impl Nonlinearity {
    pub fn power(p: f64) -> Self {
        // f(u) = u^p extends continuously to 0 when p >= 0.
        let f_at_zero = if p > 0.0 {
            Some(0.0)
        } else if p == 0.0 {
            Some(1.0)
        } else {
            None
        };
        Nonlinearity {
            kind: NonlinKind::Power { p },
            f_at_zero,
            label: format!("power(p={p})"),
        }
    }

    pub fn table(pairs: &[(f64, f64)], f_at_zero: Option<f64>) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::Invalid("nonlinearity table needs at least two samples".into()));
        }
        for (u, fu) in pairs {
            if !(*u > 0.0) || !(*fu > 0.0) {
                return Err(Error::Domain(format!(
                    "nonlinearity table must have u > 0 and f(u) > 0, got ({u}, {fu})"
                )));
            }
        }
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        Ok(Nonlinearity {
            kind: NonlinKind::Table { interp: Pchip::new(xs, ys)? },
            f_at_zero,
            label: format!("table({} samples)", pairs.len()),
        })
    }

    pub fn closure(f: ScalarFn, f_at_zero: Option<f64>, label: &str) -> Self {
        Nonlinearity { kind: NonlinKind::Closure { f }, f_at_zero, label: label.to_string() }
    }

    /// Evaluate f(u). Requires u > 0, or u = 0 with a declared extension.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if u < 0.0 || !u.is_finite() {
            return Err(Error::Domain(format!("f is defined on (0, inf); got u = {u}")));
        }
        if u == 0.0 {
            return match self.f_at_zero {
                Some(v) => Ok(v),
                None => Err(Error::Domain(
                    "f evaluated at 0 without a declared continuous extension".into(),
                )),
            };
        }
        let v = match &self.kind {
            NonlinKind::Power { p } => u.powf(*p),
            NonlinKind::Table { interp } => {
                if u < interp.x_min() * (1.0 - 1e-12) || u > interp.x_max() * (1.0 + 1e-12) {
                    return Err(Error::Domain(format!(
                        "u = {u} outside the table range [{}, {}]",
                        interp.x_min(),
                        interp.x_max()
                    )));
                }
                interp.eval(u)
            }
            NonlinKind::Closure { f } => f(u),
        };
        if !v.is_finite() {
            return Err(Error::Domain(format!("f({u}) is not finite")));
        }
        if v <= 0.0 {
            return Err(Error::Domain(format!("f must be positive on (0, inf); f({u}) = {v}")));
        }
        Ok(v)
    }
}

// ---------------------------------------------------------------------------
// Hypothesis certificates
// ---------------------------------------------------------------------------

/// Default check grid: 65 geometric points spanning [1e-8, 1e8].
pub fn standard_grid() -> Vec<f64> {
    geometric_grid(1e-8, 1e8, 65)
}

pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let ratio = (hi / lo).powf(1.0 / (n as f64 - 1.0));
    let mut g = Vec::with_capacity(n);
    let mut x = lo;
    for _ in 0..n {
        g.push(x);
        x *= ratio;
    }
    let last = g.last_mut().unwrap();
    *last = hi;
    g
}

/// Quotient threshold below which f(u)/u is considered to vanish at infinity.
pub const TAU_F1: f64 = 1e-6;
/// Quotient threshold above which f(u)/u is considered to blow up at zero.
pub const TAU_F2: f64 = 1e6;
/// Margin on the fitted log-slope used when extrapolating quotient limits;
/// separates power exponents with |p - 1| >= 0.05 comfortably.
const SLOPE_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct QuotientViolation {
    pub u_lo: f64,
    pub u_hi: f64,
    pub q_lo: f64,
    pub q_hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCertificate {
    pub hypothesis: String,
    pub passed: bool,
    /// First consecutive grid pair violating the monotonicity requirement.
    pub first_violation: Option<QuotientViolation>,
    /// Extrapolated limit of f(u)/u at the relevant end of the grid:
    /// "0", "infinity", or a finite plateau value as a string.
    pub estimated_limit: String,
    /// Whether the extrapolated limit clears the declared threshold.
    pub limit_flag: bool,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_len: usize,
    /// Evidence disclaimer carried into every serialized report.
    pub nature: String,
}

fn nature_line() -> String {
    "sampled evidence on a finite grid, not a proof".to_string()
}

fn quotients(f: &Nonlinearity, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mut q = Vec::with_capacity(grid.len());
    for &u in grid {
        if !(u > 0.0) {
            return Err(Error::Invalid("hypothesis grid must be strictly positive".into()));
        }
        q.push((u, f.eval(u)? / u));
    }
    Ok(q)
}

fn check_grid_shape(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::Invalid("hypothesis grid needs at least 3 points".into()));
    }
    let span = grid.last().unwrap() / grid[0];
    if span < 1e6 {
        return Err(Error::Invalid(format!(
            "hypothesis grid must span at least 6 decades, got {span:.3e}"
        )));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Invalid("hypothesis grid must be strictly increasing".into()));
        }
    }
    Ok(())
}

/// Sampled check that u -> f(u)/u is decreasing with limit 0 at infinity.
pub fn certify_f1(f: &Nonlinearity, grid: &[f64]) -> Result<HypothesisCertificate> {
    check_grid_shape(grid)?;
    let q = quotients(f, grid)?;

    let mut first_violation = None;
    for w in q.windows(2) {
        if !(w[1].1 < w[0].1) {
            first_violation = Some(QuotientViolation {
                u_lo: w[0].0,
                u_hi: w[1].0,
                q_lo: w[0].1,
                q_hi: w[1].1,
            });
            break;
        }
    }

    // Extrapolate at the large end from the last three samples.
    let tail = &q[q.len() - 3..];
    let slope = crate::quad::log_log_slope(tail);
    let decreasing_tail = tail[0].1 > tail[1].1 && tail[1].1 > tail[2].1;
    let (estimated_limit, limit_flag) = match slope {
        Some(s) if decreasing_tail && s <= -SLOPE_MARGIN => ("0".to_string(), 0.0 < TAU_F1),
        _ => {
            let plateau = tail[2].1;
            (format!("{plateau}"), plateau < TAU_F1)
        }
    };

    Ok(HypothesisCertificate {
        hypothesis: "f1: u -> f(u)/u decreasing on (0, inf) with limit 0 at infinity".into(),
        passed: first_violation.is_none(),
        first_violation,
        estimated_limit,
        limit_flag,
        grid_min: grid[0],
        grid_max: *grid.last().unwrap(),
        grid_len: grid.len(),
        nature: nature_line(),
    })
}

/// Sampled check that f is increasing and f(u)/u blows up as u tends to 0.
pub fn certify_f2(f: &Nonlinearity, grid: &[f64]) -> Result<HypothesisCertificate> {
    check_grid_shape(grid)?;
    let mut vals = Vec::with_capacity(grid.len());
    for &u in grid {
        vals.push((u, f.eval(u)?));
    }

    let mut first_violation = None;
    for w in vals.windows(2) {
        if !(w[1].1 > w[0].1) {
            first_violation = Some(QuotientViolation {
                u_lo: w[0].0,
                u_hi: w[1].0,
                q_lo: w[0].1,
                q_hi: w[1].1,
            });
            break;
        }
    }

    // Quotient trend at the small end: q must grow as u decreases.
    let q: Vec<(f64, f64)> = vals.iter().map(|(u, fu)| (*u, fu / u)).collect();
    let head = &q[..3];
    let slope = crate::quad::log_log_slope(head);
    let growing_toward_zero = head[0].1 > head[1].1 && head[1].1 > head[2].1;
    let (estimated_limit, limit_flag) = match slope {
        Some(s) if growing_toward_zero && s <= -SLOPE_MARGIN => {
            ("infinity".to_string(), true)
        }
        _ => {
            let plateau = head[0].1;
            (format!("{plateau}"), plateau > TAU_F2)
        }
    };

    let passed = first_violation.is_none() && limit_flag;
    Ok(HypothesisCertificate {
        hypothesis: "f2: f increasing on (0, inf) with f(u)/u -> infinity as u -> 0".into(),
        passed,
        first_violation,
        estimated_limit,
        limit_flag,
        grid_min: grid[0],
        grid_max: *grid.last().unwrap(),
        grid_len: grid.len(),
        nature: nature_line(),
    })
}

// ---------------------------------------------------------------------------
// Potential and radial majorant
// ---------------------------------------------------------------------------

#[derive(Clone)]
pub enum PotentialForm {
    Radial(RadialFn),
    Anisotropic(FieldFn),
}

/// Nonnegative potential rho on R^N, N >= 3.
#[derive(Clone)]
pub struct Potential {
    pub dim: usize,
    pub form: PotentialForm,
    /// Directions per radius used to estimate the spherical maximum for
    /// anisotropic potentials.
    pub sphere_samples: usize,
    pub label: String,
    seen_positive: Arc<AtomicBool>,
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Potential")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish()
    }
}

impl Potential {
    pub fn radial(dim: usize, f: RadialFn, label: &str) -> Result<Self> {
        if dim < 3 {
            return Err(Error::Invalid(format!("dimension must be >= 3, got {dim}")));
        }
        Ok(Potential {
            dim,
            form: PotentialForm::Radial(f),
            sphere_samples: 200,
            label: label.to_string(),
            seen_positive: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn anisotropic(dim: usize, f: FieldFn, sphere_samples: usize, label: &str) -> Result<Self> {
        if dim < 3 {
            return Err(Error::Invalid(format!("dimension must be >= 3, got {dim}")));
        }
        Ok(Potential {
            dim,
            form: PotentialForm::Anisotropic(f),
            sphere_samples: sphere_samples.max(8),
            label: label.to_string(),
            seen_positive: Arc::new(AtomicBool::new(false)),
        })
    }

    /// The inverse-power family rho(r) = (1 + r^p)^(-1).
    pub fn inverse_power(dim: usize, p: f64) -> Result<Self> {
        Self::radial(
            dim,
            Arc::new(move |r: f64| 1.0 / (1.0 + r.powf(p))),
            &format!("(1+r^{p})^-1"),
        )
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.form, PotentialForm::Radial(_))
    }

    /// Evaluate rho at a point given by radius and unit direction.
    pub fn eval_dir(&self, r: f64, dir: &[f64]) -> Result<f64> {
        let v = match &self.form {
            PotentialForm::Radial(f) => f(r),
            PotentialForm::Anisotropic(f) => {
                let x: Vec<f64> = dir.iter().map(|d| d * r).collect();
                f(&x)
            }
        };
        if !v.is_finite() {
            return Err(Error::Domain(format!("rho evaluated non-finite at r = {r}")));
        }
        if v < 0.0 {
            return Err(Error::Domain(format!("rho must be nonnegative; got {v} at r = {r}")));
        }
        if v > 0.0 {
            self.seen_positive.store(true, Ordering::Relaxed);
        }
        Ok(v)
    }

    /// Whether any evaluation so far returned a strictly positive value.
    pub fn seen_positive(&self) -> bool {
        self.seen_positive.load(Ordering::Relaxed)
    }
}

/// Quasi-uniform unit directions on the sphere S^(N-1).
///
/// N = 3 uses a Fibonacci lattice; higher dimensions use a product-of-angles
/// grid with roughly the same total budget. Deterministic by construction.
pub fn direction_set(dim: usize, budget: usize) -> Vec<Vec<f64>> {
    assert!(dim >= 3);
    if dim == 3 {
        let n = budget.max(8);
        let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
        (0..n)
            .map(|i| {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * i as f64;
                vec![rho * phi.cos(), rho * phi.sin(), z]
            })
            .collect()
    } else {
        // dim-1 angles; m points per angle with m^(dim-1) ~ budget.
        let angles = dim - 1;
        let m = (budget as f64).powf(1.0 / angles as f64).ceil().max(3.0) as usize;
        let mut dirs = Vec::new();
        let mut idx = vec![0usize; angles];
        loop {
            // Midpoint grid: theta_j in (0, pi) except the last in (0, 2 pi).
            let mut x = vec![0.0; dim];
            let mut sin_prod = 1.0;
            for (j, &ij) in idx.iter().enumerate() {
                let frac = (ij as f64 + 0.5) / m as f64;
                let theta = if j + 1 == angles {
                    2.0 * std::f64::consts::PI * frac
                } else {
                    std::f64::consts::PI * frac
                };
                x[j] = sin_prod * theta.cos();
                sin_prod *= theta.sin();
            }
            x[dim - 1] = sin_prod;
            let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            dirs.push(x.iter().map(|v| v / norm).collect());
            // Odometer increment.
            let mut j = 0;
            loop {
                idx[j] += 1;
                if idx[j] < m {
                    break;
                }
                idx[j] = 0;
                j += 1;
                if j == angles {
                    return dirs;
                }
            }
        }
    }
}

const MAJORANT_CACHE_CAP: usize = 1 << 20;

/// Radius-indexed evaluator of Phi(r) = max over |x| = r of rho(x).
///
/// For radial potentials Phi coincides with rho. For anisotropic potentials
/// the maximum is taken over a fixed quasi-uniform direction set, which is a
/// lower estimate of the true spherical maximum. Values are cached; the cache
/// tolerates concurrent readers with exclusive writers.
pub struct RadialMajorant {
    potential: Arc<Potential>,
    directions: Vec<Vec<f64>>,
    cache: RwLock<BTreeMap<u64, f64>>,
}

impl std::fmt::Debug for RadialMajorant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialMajorant")
            .field("potential", &self.potential)
            .field("directions", &self.directions.len())
            .finish()
    }
}

impl RadialMajorant {
    pub fn new(potential: Arc<Potential>) -> Self {
        let directions = match potential.form {
            PotentialForm::Radial(_) => Vec::new(),
            PotentialForm::Anisotropic(_) => {
                direction_set(potential.dim, potential.sphere_samples)
            }
        };
        RadialMajorant { potential, directions, cache: RwLock::new(BTreeMap::new()) }
    }

    pub fn dim(&self) -> usize {
        self.potential.dim
    }

    pub fn potential(&self) -> &Arc<Potential> {
        &self.potential
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    /// Phi(r). Exact for radial rho; a max over the direction set otherwise.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if r < 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!("radius must be nonnegative, got {r}")));
        }
        let key = r.to_bits();
        if let Some(v) = self.cache.read().expect("majorant cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = match &self.potential.form {
            PotentialForm::Radial(_) => self.potential.eval_dir(r, &[])?,
            PotentialForm::Anisotropic(_) => {
                if r == 0.0 {
                    // The sphere degenerates to a point.
                    let e1: Vec<f64> = (0..self.potential.dim)
                        .map(|i| if i == 0 { 1.0 } else { 0.0 })
                        .collect();
                    self.potential.eval_dir(0.0, &e1)?
                } else {
                    let mut best = f64::NEG_INFINITY;
                    for d in &self.directions {
                        best = best.max(self.potential.eval_dir(r, d)?);
                    }
                    best
                }
            }
        };
        let mut cache = self.cache.write().expect("majorant cache poisoned");
        if cache.len() < MAJORANT_CACHE_CAP {
            cache.insert(key, v);
        }
        Ok(v)
    }

    pub fn cached_len(&self) -> usize {
        self.cache.read().expect("majorant cache poisoned").len()
    }
}

// ---------------------------------------------------------------------------
// Problem spec
// ---------------------------------------------------------------------------

/// A full problem instance: -Laplace(u) = rho(x) f(u), u -> ell at infinity.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub potential: Arc<Potential>,
    pub f: Arc<Nonlinearity>,
    pub ell: f64,
}

impl ProblemSpec {
    pub fn new(potential: Arc<Potential>, f: Arc<Nonlinearity>, ell: f64) -> Result<Self> {
        if ell < 0.0 || !ell.is_finite() {
            return Err(Error::Invalid(format!("asymptote ell must be >= 0, got {ell}")));
        }
        Ok(ProblemSpec { potential, f, ell })
    }

    pub fn dim(&self) -> usize {
        self.potential.dim
    }

    /// rho(x) f(u) evaluated radially (radial potentials only).
    pub fn source_radial(&self, r: f64, u: f64) -> Result<f64> {
        let rho = self.potential.eval_dir(r, &[])?;
        Ok(rho * self.f.eval(u)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_f_power_examples() {
        let f = Nonlinearity::power(0.5);
        assert_eq!(f.eval(4.0).unwrap(), 2.0);
        assert_eq!(f.eval(1.0).unwrap(), 1.0);
        let g = Nonlinearity::power(-1.0);
        assert_eq!(g.eval(2.0).unwrap(), 0.5);
    }

    #[test]
    fn eval_f_domain_errors() {
        let f = Nonlinearity::power(0.5);
        assert!(f.eval(-1.0).is_err());
        // p > 0 extends by 0 at the origin.
        assert_eq!(f.eval(0.0).unwrap(), 0.0);
        let g = Nonlinearity::power(-1.0);
        assert!(g.eval(0.0).is_err());
    }

    #[test]
    fn eval_f_is_pure() {
        let f = Nonlinearity::power(1.0 / 3.0);
        let a = f.eval(7.25).unwrap();
        let b = f.eval(7.25).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn f1_passes_sublinear_power() {
        let f = Nonlinearity::power(0.5);
        let cert = certify_f1(&f, &geometric_grid(1e-6, 1e6, 49)).unwrap();
        assert!(cert.passed);
        assert_eq!(cert.estimated_limit, "0");
        assert!(cert.limit_flag);
    }

    #[test]
    fn f1_fails_linear_power() {
        let f = Nonlinearity::power(1.0);
        let cert = certify_f1(&f, &standard_grid()).unwrap();
        assert!(!cert.passed);
        let v = cert.first_violation.expect("violating pair reported");
        assert!(v.u_lo < v.u_hi);
    }

    #[test]
    fn f1_passes_saturating_table() {
        // f(u) = u/(1+u); quotient 1/(1+u) strictly decreasing.
        let grid = geometric_grid(1e-3, 1e3, 41);
        let pairs: Vec<(f64, f64)> = geometric_grid(5e-4, 2e3, 301)
            .into_iter()
            .map(|u| (u, u / (1.0 + u)))
            .collect();
        let f = Nonlinearity::table(&pairs, Some(0.0)).unwrap();
        let cert = certify_f1(&f, &grid).unwrap();
        assert!(cert.passed, "violation: {:?}", cert.first_violation);
        // Direct-evaluation oracle at the grid points; tolerance reflects
        // the interpolation error of the 301-sample table.
        for &u in &grid {
            let q = f.eval(u).unwrap() / u;
            assert!((q - 1.0 / (1.0 + u)).abs() < 5e-5 * q.abs() + 1e-12);
        }
    }

    #[test]
    fn f2_examples() {
        assert!(certify_f2(&Nonlinearity::power(0.5), &standard_grid()).unwrap().passed);
        assert!(certify_f2(&Nonlinearity::power(1.0 / 3.0), &standard_grid()).unwrap().passed);
        let cert = certify_f2(&Nonlinearity::power(-1.0), &standard_grid()).unwrap();
        assert!(!cert.passed);
        assert!(cert.first_violation.is_some());
    }

    #[test]
    fn f2_rejects_finite_quotient_limit() {
        // f(u) = u/(1+u) is increasing but f(u)/u -> 1, not infinity.
        let pairs: Vec<(f64, f64)> = geometric_grid(1e-9, 1e9, 401)
            .into_iter()
            .map(|u| (u, u / (1.0 + u)))
            .collect();
        let f = Nonlinearity::table(&pairs, Some(0.0)).unwrap();
        let cert = certify_f2(&f, &standard_grid()).unwrap();
        assert!(!cert.passed);
        assert!(cert.first_violation.is_none(), "monotone but limit fails");
        assert!(!cert.limit_flag);
    }

    #[test]
    fn majorant_radial_examples() {
        let pot = Arc::new(Potential::inverse_power(3, 4.0).unwrap());
        let phi = RadialMajorant::new(pot);
        assert_eq!(phi.eval(1.0).unwrap(), 0.5);
        assert_eq!(phi.eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn majorant_anisotropic_close_to_true_max() {
        // rho(x) = (1+|x|^4)^-1 (1 + x1^2/|x|^2); true max at x = (r,0,0).
        let pot = Arc::new(
            Potential::anisotropic(
                3,
                Arc::new(|x: &[f64]| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    if r2 == 0.0 {
                        return 1.0;
                    }
                    (1.0 + x[0] * x[0] / r2) / (1.0 + r2 * r2)
                }),
                200,
                "anisotropic demo",
            )
            .unwrap(),
        );
        let phi = RadialMajorant::new(pot.clone());
        let truth = 2.0 / 17.0;
        let est = phi.eval(2.0).unwrap();
        assert!(est <= truth + 1e-12);
        assert!(est >= truth * (1.0 - 1e-2), "est {est} too far below {truth}");
        // Estimator dominates every direction sample it used.
        for d in phi.directions() {
            let v = pot.eval_dir(2.0, d).unwrap();
            assert!(v <= est + 1e-12);
        }
    }

    #[test]
    fn direction_set_higher_dim_is_unit() {
        for dim in [4usize, 5] {
            for d in direction_set(dim, 200) {
                let n: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn potential_rejects_low_dimension() {
        assert!(Potential::inverse_power(2, 3.0).is_err());
    }
}
