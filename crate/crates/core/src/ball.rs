//! Dirichlet problems on balls |x| < k, radial path.
//!
//! The discrete operator is the standard second-order radial Laplacian with a
//! ghost-node symmetry row at the origin. The nonlinear problem is solved by
//! a shifted fixed-point iteration
//!
//!   (-Laplace_h + lambda I) u_next = rho f(u) + lambda u,
//!
//! which decreases monotonically from a discrete supersolution when lambda
//! dominates the local slopes of rho f. Newton is avoided on purpose: f need
//! only be Hoelder near 0, so its derivative may blow up at the boundary.

use crate::barrier::Barrier;
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::tridiag::Tridiag;
use serde::Serialize;

/// Uniform grid on [0, k]: nodes r_i = i h, h = k / m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    pub k: f64,
    pub m: usize,
}

impl RadialGrid {
    pub fn new(k: f64, m: usize) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Invalid(format!("ball radius must be positive, got {k}")));
        }
        if m < 8 {
            return Err(Error::Invalid(format!("grid needs at least 8 intervals, got {m}")));
        }
        Ok(RadialGrid { k, m })
    }

    pub fn h(&self) -> f64 {
        self.k / self.m as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..=self.m).map(|i| self.node(i)).collect()
    }
}

/// Discrete -Laplace_h on the grid, rows 0..m-1 the differential stencil and
/// row m the identity (Dirichlet). Row 0 uses the symmetry limit at r = 0:
/// -2N (u_1 - u_0) / h^2.
pub fn assemble_radial_operator(grid: &RadialGrid, dim: usize) -> Tridiag {
    let m = grid.m;
    let h = grid.h();
    let h2 = h * h;
    let n = dim as f64;
    let mut a = Tridiag::zeros(m + 1);

    a.diag[0] = 2.0 * n / h2;
    a.sup[0] = -2.0 * n / h2;

    for i in 1..m {
        let coef = (n - 1.0) / (2.0 * i as f64);
        a.sub[i - 1] = -(1.0 - coef) / h2;
        a.diag[i] = 2.0 / h2;
        a.sup[i] = -(1.0 + coef) / h2;
    }

    a.sub[m - 1] = 0.0;
    a.diag[m] = 1.0;
    a
}

/// Starting iterate for the fixed-point loop.
#[derive(Debug, Clone)]
pub enum InitialIterate {
    /// The barrier supersolution v restricted to the grid (default).
    BarrierProfile,
    /// A constant interior value (the admissible choice is c + ell).
    Constant(f64),
    /// Explicit nodal values, e.g. a previous solution for warm starts.
    Profile(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Sup-norm tolerance on iterate differences and the residual scale.
    pub tol: f64,
    pub max_iters: usize,
    /// Test-only override of the boundary value (default is ell).
    pub boundary_override: Option<f64>,
    pub initial: InitialIterate,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iters: 500,
            boundary_override: None,
            initial: InitialIterate::BarrierProfile,
        }
    }
}

/// Discrete solution of the ball problem.
#[derive(Debug, Clone, Serialize)]
pub struct BallSolution {
    pub k: f64,
    pub m: usize,
    pub ell: f64,
    pub boundary_value: f64,
    pub values: Vec<f64>,
    /// max over interior nodes of |Laplace_h u + rho f(u)|.
    pub residual_sup: f64,
    pub iterations: usize,
    /// Whether every iterate step was non-increasing up to 10 tol.
    pub monotone_certificate: bool,
    /// Shift used in the last sweep.
    pub lambda_shift: f64,
}

impl BallSolution {
    pub fn grid(&self) -> RadialGrid {
        RadialGrid { k: self.k, m: self.m }
    }

    pub fn radii(&self) -> Vec<f64> {
        self.grid().radii()
    }

    /// Value at radius r, extending by ell outside the ball. Radii that hit
    /// nodes (within roundoff) return the nodal value; interior off-node
    /// radii use linear interpolation.
    pub fn value_at(&self, r: f64) -> f64 {
        if r >= self.k {
            return self.ell;
        }
        let h = self.k / self.m as f64;
        let x = r / h;
        let i = x.floor() as usize;
        let frac = x - i as f64;
        if frac.abs() < 1e-9 {
            return self.values[i];
        }
        if i + 1 > self.m {
            return self.ell;
        }
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

fn node_rho(spec: &ProblemSpec, radii: &[f64]) -> Result<Vec<f64>> {
    if !spec.potential.is_radial() {
        return Err(Error::Invalid(
            "the radial solver requires a radial potential; anisotropic instances go through \
             the 3-D solver or the radial majorant"
                .into(),
        ));
    }
    radii.iter().map(|&r| spec.potential.eval_dir(r, &[])).collect()
}

/// Largest sampled difference quotient of f over [lo, hi].
fn slope_estimate(spec: &ProblemSpec, lo: f64, hi: f64) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    let samples = 5usize;
    let ratio = (hi / lo.max(1e-300)).powf(1.0 / samples as f64);
    let mut t = lo;
    let mut prev = spec.f.eval(t).unwrap_or(f64::NAN);
    for _ in 0..samples {
        let t_next = (t * ratio).min(hi);
        let f_next = spec.f.eval(t_next).unwrap_or(f64::NAN);
        if t_next > t {
            let dq = ((f_next - prev) / (t_next - t)).abs();
            if dq.is_finite() {
                worst = worst.max(dq);
            }
        }
        t = t_next;
        prev = f_next;
    }
    worst
}

/// Shift estimate: sup over sampled nodes of rho(r_i) times a local
/// difference quotient of f around the current iterate. The product keeps the
/// shift modest where rho decays even though f' blows up near the boundary.
fn estimate_lambda(spec: &ProblemSpec, radii: &[f64], rho: &[f64], u: &[f64], cap_hi: f64) -> f64 {
    let ell = spec.ell;
    let stride = (radii.len() / 64).max(1);
    let mut lambda: f64 = 0.0;
    let floor = 1e-8 * (1.0 + cap_hi);
    for i in (0..radii.len()).step_by(stride) {
        if rho[i] == 0.0 {
            continue;
        }
        let hi = (u[i].max(ell) + floor).min(cap_hi.max(ell + floor));
        let lo = (0.5 * (u[i] - ell).max(0.0) + ell).max(ell + floor).min(hi * 0.999);
        lambda = lambda.max(rho[i] * slope_estimate(spec, lo, hi));
    }
    lambda
}

/// Solve the ball problem with boundary value ell (or the test override).
pub fn solve_ball(
    spec: &ProblemSpec,
    barrier: &Barrier,
    grid: &RadialGrid,
    opts: &SolveOptions,
) -> Result<BallSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let m = grid.m;
    let radii = grid.radii();
    let rho = node_rho(spec, &radii)?;
    let ell = spec.ell;
    let g_boundary = opts.boundary_override.unwrap_or(ell);

    let mut u: Vec<f64> = match &opts.initial {
        InitialIterate::BarrierProfile => {
            barrier.profile(&radii)?.into_iter().map(|(_, v)| v).collect()
        }
        InitialIterate::Constant(x) => vec![*x; m + 1],
        InitialIterate::Profile(vals) => {
            if vals.len() != m + 1 {
                return Err(Error::Invalid(format!(
                    "warm-start profile has {} values, grid has {}",
                    vals.len(),
                    m + 1
                )));
            }
            vals.clone()
        }
    };
    u[m] = g_boundary;
    // The iteration needs f evaluable along the way; lift interior values at
    // least to the boundary level.
    for v in u.iter_mut().take(m) {
        if *v < ell {
            *v = ell;
        }
    }

    let op = assemble_radial_operator(grid, spec.dim());
    let cap_hi = barrier.scale_c() + ell + 1.0;
    let mut lambda = estimate_lambda(spec, &radii, &rho, &u, cap_hi);
    let mut shifted = op.shifted(lambda);
    // Keep the boundary row an exact identity.
    shifted.diag[m] = 1.0;

    let mut monotone = true;
    let mut iterations = 0;
    let mut rhs = vec![0.0; m + 1];
    let clamp_slack = 10.0 * opts.tol;

    loop {
        if iterations >= opts.max_iters {
            let res = residual_sup(spec, &op, &rho, &u)?;
            return Err(Error::NoConvergence(format!(
                "ball solve at k = {} did not converge within {} iterations \
                 (last residual {res:.3e})",
                grid.k, opts.max_iters
            )));
        }
        iterations += 1;

        if iterations % 25 == 0 {
            lambda = estimate_lambda(spec, &radii, &rho, &u, cap_hi);
            shifted = op.shifted(lambda);
            shifted.diag[m] = 1.0;
        }

        for i in 0..m {
            rhs[i] = rho[i] * spec.f.eval(u[i])? + lambda * u[i];
        }
        rhs[m] = g_boundary;

        let mut u_next = shifted.solve(&rhs)?;

        // Positivity guard: clamp tiny undershoots, reject real ones.
        let lower = if opts.boundary_override.is_some() { ell.min(g_boundary) } else { ell };
        let mut max_increase = 0.0f64;
        let mut diff = 0.0f64;
        for i in 0..m {
            if u_next[i] < lower {
                if u_next[i] < lower - clamp_slack {
                    return Err(Error::NoConvergence(format!(
                        "iterate dipped to {} below the admissible level {lower} at node {i}",
                        u_next[i]
                    )));
                }
                u_next[i] = lower;
            }
            let d = u_next[i] - u[i];
            diff = diff.max(d.abs());
            max_increase = max_increase.max(d);
        }
        if max_increase > clamp_slack {
            monotone = false;
        }
        u = u_next;

        if diff < opts.tol {
            let res = residual_sup(spec, &op, &rho, &u)?;
            let mut source_sup = 0.0f64;
            for i in 0..m {
                source_sup = source_sup.max((rho[i] * spec.f.eval(u[i])?).abs());
            }
            if res <= opts.tol * (1.0 + source_sup) {
                return Ok(BallSolution {
                    k: grid.k,
                    m,
                    ell,
                    boundary_value: g_boundary,
                    values: u,
                    residual_sup: res,
                    iterations,
                    monotone_certificate: monotone,
                    lambda_shift: lambda,
                });
            }
        }
    }
}

fn residual_sup(spec: &ProblemSpec, op: &Tridiag, rho: &[f64], u: &[f64]) -> Result<f64> {
    let lap = op.apply(u); // rows 0..m-1 give -Laplace_h u
    let mut worst = 0.0f64;
    for i in 0..u.len() - 1 {
        let r = lap[i] - rho[i] * spec.f.eval(u[i])?;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// First Dirichlet eigenvalue
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoCondition {
    /// lambda_1(-Laplace - a_0) < 0
    Bo108,
    /// lambda_1(-Laplace - a_inf) > 0
    Bo109,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenReport {
    pub lambda1: f64,
    pub eigvec_positive: bool,
    pub condition: Option<BoCondition>,
    pub iterations: usize,
    pub residual: f64,
    pub note: String,
}

const EIGEN_MAX_ITERS: usize = 200;

/// Smallest eigenvalue of -Laplace_h - diag(a) with a zero Dirichlet
/// condition, by shifted inverse iteration with a restart safeguard.
/// `a` is node-indexed over the full grid; the boundary node is dropped.
pub fn first_eigenvalue(grid: &RadialGrid, dim: usize, a: &[f64]) -> Result<EigenReport> {
    let m = grid.m;
    if a.len() != m + 1 {
        return Err(Error::Invalid(format!(
            "coefficient has {} values, grid has {}",
            a.len(),
            m + 1
        )));
    }
    let full = assemble_radial_operator(grid, dim);
    // Interior system: rows 0..m-1, column m dropped (phi_m = 0).
    let mut t = Tridiag::zeros(m);
    for i in 0..m {
        t.diag[i] = full.diag[i] - a[i];
        if i > 0 {
            t.sub[i - 1] = full.sub[i - 1];
        }
        if i + 1 < m {
            t.sup[i] = full.sup[i];
        }
    }

    let start_plain: Vec<f64> = (0..m).map(|_| 1.0).collect();
    let start_alt: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * ((i % 3) as f64)).collect();
    match inverse_iteration(&t, &start_plain) {
        Ok(rep) if rep.eigvec_positive => Ok(rep),
        first => {
            // Safeguard restart with a different start vector; keep whichever
            // result is honest about positivity.
            match inverse_iteration(&t, &start_alt) {
                Ok(rep) => Ok(rep),
                Err(e) => first.and(Err(e)),
            }
        }
    }
}

fn inverse_iteration(t: &Tridiag, start: &[f64]) -> Result<EigenReport> {
    let m = t.n();
    let row_scale: f64 = (0..m)
        .map(|i| {
            t.diag[i].abs()
                + if i > 0 { t.sub[i - 1].abs() } else { 0.0 }
                + if i + 1 < m { t.sup[i].abs() } else { 0.0 }
        })
        .fold(0.0, f64::max);

    // Start below the spectrum so the smallest eigenvalue dominates.
    let gersh = (0..m)
        .map(|i| {
            t.diag[i]
                - if i > 0 { t.sub[i - 1].abs() } else { 0.0 }
                - if i + 1 < m { t.sup[i].abs() } else { 0.0 }
        })
        .fold(f64::INFINITY, f64::min);
    let mut sigma = gersh - 1.0;

    let mut x: Vec<f64> = start.to_vec();
    normalize(&mut x);
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let tol = 1e-13 * row_scale.max(1.0);

    for it in 1..=EIGEN_MAX_ITERS {
        let shifted = t.shifted(-sigma);
        let y = match shifted.solve(&x) {
            Ok(y) => y,
            Err(_) => {
                // Shift parked on an eigenvalue; nudge and retry.
                sigma += 1e-10 * row_scale.max(1.0);
                continue;
            }
        };
        x = y;
        normalize(&mut x);
        let tx = t.apply(&x);
        lambda = dot(&x, &tx);
        residual = tx
            .iter()
            .zip(x.iter())
            .map(|(txi, xi)| (txi - lambda * xi).abs())
            .fold(0.0, f64::max);
        if residual <= tol {
            let positive = one_signed(&x);
            return Ok(EigenReport {
                lambda1: lambda,
                eigvec_positive: positive,
                condition: None,
                iterations: it,
                residual,
                note: String::new(),
            });
        }
        if it >= 4 {
            sigma = lambda;
        }
    }
    Err(Error::NoConvergence(format!(
        "inverse iteration stalled after {EIGEN_MAX_ITERS} steps \
         (lambda ~ {lambda:.6e}, residual {residual:.3e})"
    )))
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn one_signed(x: &[f64]) -> bool {
    let max_abs = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let sign = x
        .iter()
        .max_by(|p, q| p.abs().total_cmp(&q.abs()))
        .map(|v| v.signum())
        .unwrap_or(1.0);
    x.iter().all(|v| v * sign >= -1e-10 * max_abs)
}

// ---------------------------------------------------------------------------
// Brezis-Oswald sign conditions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct BrezisOswaldReport {
    pub c108: EigenReport,
    /// (delta, lambda1) pairs tried while halving.
    pub c108_trail: Vec<(f64, f64)>,
    pub c108_sign_reached: bool,
    pub c109: EigenReport,
    pub c109_sign_reached: bool,
    /// Surrogate level used for the growth coefficient at infinity.
    pub u_infinity: f64,
}

/// Check the two sign conditions on the ball of radius k: the zero-level
/// surrogate a_0(x) = rho(x) f(delta + ell) / delta must push the first
/// eigenvalue negative for small delta, and the infinity-level surrogate
/// a_inf(x) = rho(x) f(U + ell) / U must leave it positive.
///
/// "Small enough" delta has no quantitative form, so delta is halved up to
/// 8 times; the trail is reported either way.
pub fn check_brezis_oswald(
    spec: &ProblemSpec,
    k: f64,
    m: usize,
    delta0: f64,
) -> Result<BrezisOswaldReport> {
    if !(delta0 > 0.0) {
        return Err(Error::Invalid("delta must be positive".into()));
    }
    let grid = RadialGrid::new(k, m)?;
    let radii = grid.radii();
    let rho = node_rho(spec, &radii)?;
    let ell = spec.ell;
    let dim = spec.dim();

    let mut c108_trail = Vec::new();
    let mut delta = delta0;
    let mut c108 = None;
    for _ in 0..=8 {
        let coeff = spec.f.eval(delta + ell)? / delta;
        let a: Vec<f64> = rho.iter().map(|&r| r * coeff).collect();
        let mut rep = first_eigenvalue(&grid, dim, &a)?;
        rep.condition = Some(BoCondition::Bo108);
        rep.note = format!("a_0 surrogate at delta = {delta:.3e}");
        c108_trail.push((delta, rep.lambda1));
        let negative = rep.lambda1 < 0.0;
        c108 = Some(rep);
        if negative {
            break;
        }
        delta *= 0.5;
    }
    let mut c108 = c108.expect("at least one delta tried");
    let c108_sign_reached = c108.lambda1 < 0.0;
    if !c108_sign_reached {
        c108.note = format!(
            "sign not reached: lambda1 stayed nonnegative down to delta = {:.3e}",
            c108_trail.last().unwrap().0
        );
    }

    let u_infinity = 1e6;
    let coeff_inf = spec.f.eval(u_infinity + ell)? / u_infinity;
    let a_inf: Vec<f64> = rho.iter().map(|&r| r * coeff_inf).collect();
    let mut c109 = first_eigenvalue(&grid, dim, &a_inf)?;
    c109.condition = Some(BoCondition::Bo109);
    c109.note = format!("a_inf surrogate at U = {u_infinity:.1e}");
    let c109_sign_reached = c109.lambda1 > 0.0;
    if !c109_sign_reached {
        c109.note =
            format!("sign not reached: lambda1 = {:.6e} at U = {u_infinity:.1e}", c109.lambda1);
    }

    Ok(BrezisOswaldReport {
        c108,
        c108_trail,
        c108_sign_reached,
        c109,
        c109_sign_reached,
        u_infinity,
    })
}
