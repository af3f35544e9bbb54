//! Discrete fixed-point iteration on the right-hand side: iterate
//! psi -> f(t, u, v) with u and v reconstructed through precomputed
//! corrected-quadrature rows, until the sup-norm update falls below
//! tolerance. Levels P2/P3/P4 realize the fourth-, sixth- and
//! eighth-order discrete methods.

use crate::kernels::{
    build_boundary_poly, build_green_kernel, BoundaryConditions, GreenKernel, KernelError,
};
use crate::quadrature::{GridFunction, Level, QuadratureError, QuadratureOperator, UniformGrid};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("deviation phi({t}) = {phi} leaves [0, {a}]")]
    PhiOutOfRange { t: f64, phi: f64, a: f64 },
    #[error("tolerance {tol} below the 1e-16 machine-epsilon guard")]
    BadTolerance { tol: f64 },
    #[error("no convergence after {iterations} iterations; last updates {last_updates:?}")]
    NoConvergence {
        iterations: usize,
        last_updates: Vec<f64>,
    },
    #[error("right-hand side produced a non-finite value at node {node} (t = {t})")]
    NonFiniteIterate { node: usize, t: f64 },
    #[error("contraction check requires Lipschitz constants on the problem")]
    MissingLipschitz,
}

type ScalarFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;
type RhsFn = Box<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// A two-point boundary value problem u^(m)(t) = f(t, u(t), u(phi(t))).
pub struct BvpProblem {
    pub order: usize,
    pub interval_length: f64,
    pub bc: BoundaryConditions,
    rhs: RhsFn,
    deviation: ScalarFn,
    exact: Option<ScalarFn>,
    pub lipschitz: Option<(f64, f64)>,
    pub name: Option<String>,
}

impl std::fmt::Debug for BvpProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BvpProblem")
            .field("order", &self.order)
            .field("interval_length", &self.interval_length)
            .field("bc", &self.bc)
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl BvpProblem {
    /// Construct and validate a problem. The deviation must map [0, a] into
    /// itself (Theorem hypothesis); checked by sampling 1000 points.
    pub fn new(
        bc: BoundaryConditions,
        interval_length: f64,
        rhs: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        deviation: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, SolverError> {
        let order = bc.family.equation_order();
        let a = interval_length;
        for i in 0..=1000 {
            let t = a * i as f64 / 1000.0;
            let phi = deviation(t);
            if !phi.is_finite() || phi < -1e-12 * a.max(1.0) || phi > a + 1e-12 * a.max(1.0) {
                return Err(SolverError::PhiOutOfRange { t, phi, a });
            }
        }
        Ok(BvpProblem {
            order,
            interval_length,
            bc,
            rhs: Box::new(rhs),
            deviation: Box::new(deviation),
            exact: None,
            lipschitz: None,
            name: None,
        })
    }

    pub fn with_exact(mut self, exact: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.exact = Some(Box::new(exact));
        self
    }

    pub fn with_lipschitz(mut self, l1: f64, l2: f64) -> Self {
        self.lipschitz = Some((l1, l2));
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn rhs(&self, t: f64, u: f64, v: f64) -> f64 {
        (self.rhs)(t, u, v)
    }

    pub fn deviation(&self, t: f64) -> f64 {
        (self.deviation)(t)
    }

    pub fn exact(&self, t: f64) -> Option<f64> {
        self.exact.as_ref().map(|f| f(t))
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn kernel(&self) -> Result<GreenKernel, KernelError> {
        build_green_kernel(self.order, self.bc.family, self.interval_length)
    }
}

/// Solver settings: correction level (P2 = Method 1, P3 = Method 2,
/// P4 = Method 3), grid intervals, stopping tolerance and iteration cap.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub level: Level,
    pub n: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl SolverConfig {
    pub fn new(level: Level, n: usize) -> Self {
        SolverConfig {
            level,
            n,
            tol: 1e-14,
            max_iter: 200,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Contraction and kernel-norm diagnostics attached to a report.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// max_t integral of |G(t, s)| ds.
    pub m0: f64,
    /// q = (L1 + L2) M0 when Lipschitz constants were supplied.
    pub q: Option<f64>,
    /// First computed update norm |psi_1 - psi_0|; stands in for the d of
    /// the a-priori bound, which has no computable a-priori value here.
    pub initial_update: f64,
}

/// Result of a solve: converged grid solution, final right-hand-side
/// iterate, iteration trace and error diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub psi: GridFunction,
    pub iterations: usize,
    pub update_history: Vec<f64>,
    pub converged: bool,
    /// True when iteration stalled at the double-precision floor (three
    /// consecutive non-decreasing updates below 1e-13) before reaching tol.
    pub roundoff_stall: bool,
    pub max_error: Option<f64>,
    pub diagnostics: Diagnostics,
}

/// Run the discrete fixed-point iteration.
pub fn solve(problem: &BvpProblem, config: &SolverConfig) -> Result<SolveReport, SolverError> {
    if config.tol < 1e-16 {
        return Err(SolverError::BadTolerance { tol: config.tol });
    }
    let a = problem.interval_length;
    let kernel = problem.kernel()?;
    let g = build_boundary_poly(&problem.bc, a)?;
    let grid = UniformGrid::new(config.n, a)?;
    let n = grid.n;

    // Operator rows are assembled once; each iteration is then a dense
    // matrix-vector product plus right-hand-side evaluations.
    let mut rows_u = Vec::with_capacity(n + 1);
    let mut rows_v = Vec::with_capacity(n + 1);
    let mut g_at_t = Vec::with_capacity(n + 1);
    let mut g_at_xi = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = grid.node(i);
        rows_u.push(QuadratureOperator::new(&kernel, &grid, config.level, t)?);
        let mut xi = problem.deviation(t);
        if xi < 0.0 && xi >= -1e-12 * a.max(1.0) {
            xi = 0.0;
        } else if xi > a && xi <= a + 1e-12 * a.max(1.0) {
            xi = a;
        }
        if !(0.0..=a).contains(&xi) {
            return Err(SolverError::PhiOutOfRange { t, phi: xi, a });
        }
        rows_v.push(QuadratureOperator::new(&kernel, &grid, config.level, xi)?);
        g_at_t.push(g.eval(t));
        g_at_xi.push(g.eval(xi));
    }

    let mut psi: Vec<f64> = (0..=n).map(|i| problem.rhs(grid.node(i), 0.0, 0.0)).collect();
    if let Some(node) = psi.iter().position(|v| !v.is_finite()) {
        return Err(SolverError::NonFiniteIterate {
            node,
            t: grid.node(node),
        });
    }

    let mut u = vec![0.0; n + 1];
    let mut update_history = Vec::new();
    let mut converged = false;
    let mut roundoff_stall = false;
    let mut iterations = 0;

    for _ in 1..=config.max_iter {
        let mut update = 0.0f64;
        let mut next = vec![0.0; n + 1];
        for i in 0..=n {
            u[i] = g_at_t[i] + rows_u[i].apply_values(&psi);
            let v = g_at_xi[i] + rows_v[i].apply_values(&psi);
            let value = problem.rhs(grid.node(i), u[i], v);
            if !value.is_finite() {
                return Err(SolverError::NonFiniteIterate {
                    node: i,
                    t: grid.node(i),
                });
            }
            update = update.max((value - psi[i]).abs());
            next[i] = value;
        }
        psi = next;
        iterations += 1;
        update_history.push(update);
        if update <= config.tol {
            converged = true;
            break;
        }
        let len = update_history.len();
        if len >= 3 {
            let tail = &update_history[len - 3..];
            if tail.iter().all(|&d| d < 1e-13) && tail[1] >= tail[0] && tail[2] >= tail[1] {
                converged = true;
                roundoff_stall = true;
                break;
            }
        }
    }

    if !converged {
        let tail = update_history
            .iter()
            .rev()
            .take(3)
            .rev()
            .copied()
            .collect();
        return Err(SolverError::NoConvergence {
            iterations,
            last_updates: tail,
        });
    }

    let solution = GridFunction::new(grid, u)?;
    let max_error = problem.exact.as_ref().map(|exact| {
        (0..=n)
            .map(|i| (solution.values[i] - exact(grid.node(i))).abs())
            .fold(0.0, f64::max)
    });
    let m0 = estimate_m0(&kernel, 128);
    let diagnostics = Diagnostics {
        m0,
        q: problem.lipschitz.map(|(l1, l2)| (l1 + l2) * m0),
        initial_update: update_history.first().copied().unwrap_or(0.0),
    };
    Ok(SolveReport {
        solution,
        psi: GridFunction::new(grid, psi)?,
        iterations,
        update_history,
        converged,
        roundoff_stall,
        max_error,
        diagnostics,
    })
}

/// M0 = max over t of the integral of |G(t, s)| ds, computed from exact
/// piecewise-polynomial integration of |G| at sampled t, refined by
/// golden-section search on the best bracket.
pub fn estimate_m0(kernel: &GreenKernel, resolution: usize) -> f64 {
    let resolution = resolution.max(64);
    let a = kernel.interval_length();
    let value = |t: f64| kernel.abs_integral(t);
    let mut best_i = 0;
    let mut best = f64::MIN;
    for i in 0..=resolution {
        let v = value(a * i as f64 / resolution as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let step = a / resolution as f64;
    let mut lo = (best_i as f64 - 1.0) * step;
    let mut hi = (best_i as f64 + 1.0) * step;
    lo = lo.max(0.0);
    hi = hi.min(a);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = value(x1);
    let mut f2 = value(x2);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = value(x1);
        }
    }
    best.max(f1).max(f2)
}

/// Outcome of the contraction diagnostic q = (L1 + L2) M0.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub m0: f64,
    pub q: f64,
    pub satisfied: bool,
}

/// Advisory check of the contraction condition; a solve proceeds either way.
pub fn contraction_check(
    problem: &BvpProblem,
    kernel: &GreenKernel,
) -> Result<ContractionReport, SolverError> {
    let (l1, l2) = problem.lipschitz.ok_or(SolverError::MissingLipschitz)?;
    let m0 = estimate_m0(kernel, 256);
    let q = (l1 + l2) * m0;
    Ok(ContractionReport {
        m0,
        q,
        satisfied: q < 1.0,
    })
}
