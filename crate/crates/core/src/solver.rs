//! Linear and nonlinear solvers for the discrete problem.

use std::sync::Arc;
use std::time::{Duration, Instant};

use faer::prelude::*;
use faer::{Mat, Par};
use log::{debug, info};
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::forms::{
    assemble_jacobian, assemble_linearized, assemble_residual, assemble_rhs, extend_free,
    frozen_coefficient, restrict_to_free, CoefficientField, ProblemData, SparseMatrix,
    StabilizationSpec,
};
use crate::space::{boundary_values, VemSpace};

/// Relative algebraic residual accepted from the sparse direct solver.
pub const LINEAR_TOLERANCE: f64 = 1e-11;
const REFINEMENT_STEPS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    FixedPoint,
    #[default]
    Newton,
}

/// Coefficient used in the linearised operator of the fixed-point map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhiStrategy {
    /// `cof(Π_2 v)` at the current iterate.
    #[default]
    Frozen,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub stab: StabilizationSpec,
    pub phi: PhiStrategy,
    /// Run a loose stage at `ε = 1` before the schedule.
    pub warmup: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Newton,
            damping: 0.5,
            tolerance: 1e-9,
            max_iterations: 200,
            stab: StabilizationSpec::default(),
            phi: PhiStrategy::Frozen,
            warmup: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

pub const WARMUP_EPSILON: f64 = 1.0;
pub const WARMUP_TOLERANCE: f64 = 0.1;
pub const WARMUP_ITERATIONS: usize = 10;
const LINE_SEARCH_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub epsilon: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub warmup: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub stages: Vec<StageReport>,
    pub converged: bool,
    pub final_residual: f64,
    pub wall_time: Duration,
}

/// `y = A x` for a column-compressed matrix.
pub fn sparse_mul(a: &SparseMatrix, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(a.nrows());
    let col_ptr = a.symbolic().col_ptr();
    let row_idx = a.symbolic().row_idx();
    let val = a.val();
    for j in 0..a.ncols() {
        let xj = x[j];
        for p in col_ptr[j]..col_ptr[j + 1] {
            y[row_idx[p]] += val[p] * xj;
        }
    }
    y
}

pub fn max_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn inf_norm(a: &SparseMatrix) -> f64 {
    let mut rows = vec![0.0f64; a.nrows()];
    let col_ptr = a.symbolic().col_ptr();
    let row_idx = a.symbolic().row_idx();
    for j in 0..a.ncols() {
        for p in col_ptr[j]..col_ptr[j + 1] {
            rows[row_idx[p]] += a.val()[p].abs();
        }
    }
    rows.into_iter().fold(0.0, f64::max)
}

/// Row and column scalings `r`, `c` with `diag(r) A diag(c)` having unit
/// max-norm rows and columns.
fn equilibrate(a: &SparseMatrix) -> (Vec<f64>, Vec<f64>) {
    let col_ptr = a.symbolic().col_ptr();
    let row_idx = a.symbolic().row_idx();
    let val = a.val();
    let mut r = vec![0.0f64; a.nrows()];
    for j in 0..a.ncols() {
        for p in col_ptr[j]..col_ptr[j + 1] {
            r[row_idx[p]] = r[row_idx[p]].max(val[p].abs());
        }
    }
    let r: Vec<f64> = r
        .into_iter()
        .map(|m| if m > 0.0 { 1.0 / m } else { 1.0 })
        .collect();
    let c = (0..a.ncols())
        .map(|j| {
            let m = (col_ptr[j]..col_ptr[j + 1])
                .fold(0.0f64, |m, p| m.max((r[row_idx[p]] * val[p]).abs()));
            if m > 0.0 {
                1.0 / m
            } else {
                1.0
            }
        })
        .collect();
    (r, c)
}

/// Equilibrated sparse LU solve with iterative refinement; fails when the
/// normwise backward error `‖Ax - b‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)` stays above
/// [`LINEAR_TOLERANCE`].
pub fn solve_linear(a: &SparseMatrix, b: &DVector<f64>) -> Result<DVector<f64>> {
    faer::set_global_parallelism(Par::Seq);
    let n = b.len();
    let bnorm = max_norm(b);
    if bnorm == 0.0 {
        return Ok(DVector::zeros(n));
    }
    let anorm = inf_norm(a);
    let (rs, cs) = equilibrate(a);
    let mut scaled = a.clone();
    {
        let (sym, val) = scaled.parts_mut();
        let col_ptr = sym.col_ptr();
        let row_idx = sym.row_idx();
        for j in 0..n {
            for p in col_ptr[j]..col_ptr[j + 1] {
                val[p] *= rs[row_idx[p]] * cs[j];
            }
        }
    }
    let lu = scaled
        .sp_lu()
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let solve = |rhs: &DVector<f64>| {
        let mut m = Mat::from_fn(n, 1, |i, _| rs[i] * rhs[i]);
        lu.solve_in_place(m.as_mut());
        DVector::from_fn(n, |i, _| cs[i] * m[(i, 0)])
    };
    let backward = |x: &DVector<f64>, r: &DVector<f64>| max_norm(r) / (anorm * max_norm(x) + bnorm);
    let mut x = solve(b);
    let mut r = b - sparse_mul(a, &x);
    let mut err = backward(&x, &r);
    for _ in 0..REFINEMENT_STEPS {
        if err <= LINEAR_TOLERANCE * 1e-2 || !err.is_finite() {
            break;
        }
        let x_new = &x + solve(&r);
        let r_new = b - sparse_mul(a, &x_new);
        let err_new = backward(&x_new, &r_new);
        if err_new.is_nan() || err_new >= err {
            break;
        }
        x = x_new;
        r = r_new;
        err = err_new;
    }
    if !err.is_finite() || err > LINEAR_TOLERANCE {
        return Err(Error::IllConditioned {
            residual: err,
            threshold: LINEAR_TOLERANCE,
        });
    }
    Ok(x)
}

/// Cached data of one nonlinear stage.
pub struct Stage<'a> {
    pub space: &'a VemSpace,
    pub problem: &'a ProblemData,
    pub rhs: DVector<f64>,
    pub stab: StabilizationSpec,
}

impl<'a> Stage<'a> {
    pub fn new(space: &'a VemSpace, problem: &'a ProblemData, stab: StabilizationSpec) -> Self {
        Stage {
            space,
            problem,
            rhs: assemble_rhs(space, problem),
            stab,
        }
    }

    /// Free part of `F(v)`.
    pub fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        let full = assemble_residual(self.space, v, self.problem, &self.stab, &self.rhs);
        restrict_to_free(self.space, &full)
    }

    pub fn jacobian(&self, v: &DVector<f64>) -> SparseMatrix {
        assemble_jacobian(self.space, v, self.problem, &self.stab)
    }
}

/// One step of the damped fixed-point map: solve `A_L,h(d, w) = F(v)(w)`
/// and return `v + ω d`.
pub fn fixed_point_step(
    stage: &Stage,
    v: &DVector<f64>,
    residual: &DVector<f64>,
    phi: PhiStrategy,
    damping: f64,
) -> Result<DVector<f64>> {
    let coefficient = match phi {
        PhiStrategy::Frozen => frozen_coefficient(stage.space, v),
        PhiStrategy::Identity => CoefficientField::Identity,
    };
    let zero = DVector::zeros(stage.space.n_dofs());
    let sys = assemble_linearized(
        stage.space,
        &coefficient,
        stage.problem.epsilon,
        &stage.stab,
        &zero,
    );
    let d = solve_linear(&sys.matrix, residual)?;
    let free = restrict_to_free(stage.space, v) + d * damping;
    Ok(extend_free(stage.space, v, &free))
}

fn fixed_point_loop(
    stage: &Stage,
    mut v: DVector<f64>,
    config: &SolverConfig,
    tolerance: f64,
    max_iterations: usize,
) -> Result<(DVector<f64>, StageReport)> {
    let mut r = stage.residual(&v);
    let mut norm = max_norm(&r);
    let mut it = 0;
    while norm > tolerance && it < max_iterations {
        v = fixed_point_step(stage, &v, &r, config.phi, config.damping)?;
        r = stage.residual(&v);
        norm = max_norm(&r);
        it += 1;
        debug!("fixed point {it}: |F| = {norm:.3e}");
        if !norm.is_finite() {
            break;
        }
    }
    Ok((v, stage_report(stage, it, norm, tolerance)))
}

fn stage_report(stage: &Stage, iterations: usize, residual: f64, tolerance: f64) -> StageReport {
    StageReport {
        epsilon: stage.problem.epsilon,
        iterations,
        residual,
        converged: residual <= tolerance,
        warmup: false,
    }
}

fn newton_loop(
    stage: &Stage,
    mut v: DVector<f64>,
    tolerance: f64,
    max_iterations: usize,
) -> Result<(DVector<f64>, StageReport)> {
    let mut r = stage.residual(&v);
    let mut norm = max_norm(&r);
    let mut it = 0;
    while norm > tolerance && it < max_iterations {
        let jac = stage.jacobian(&v);
        let delta = solve_linear(&jac, &(-&r))?;
        let base = restrict_to_free(stage.space, &v);
        let mut alpha = 1.0;
        let accepted = loop {
            let trial = extend_free(stage.space, &v, &(&base + &delta * alpha));
            let rt = stage.residual(&trial);
            let nt = max_norm(&rt);
            if nt < norm {
                break Some((trial, rt, nt));
            }
            alpha *= 0.5;
            if alpha < LINE_SEARCH_FLOOR {
                break None;
            }
        };
        it += 1;
        match accepted {
            Some((trial, rt, nt)) => {
                debug!("newton {it}: |F| = {nt:.3e}, step {alpha}");
                v = trial;
                r = rt;
                norm = nt;
            }
            None => {
                debug!("newton {it}: line search stalled at |F| = {norm:.3e}");
                break;
            }
        }
    }
    Ok((v, stage_report(stage, it, norm, tolerance)))
}

/// Newton's method with backtracking on `‖F‖_∞`.
pub fn newton_solve(
    space: &VemSpace,
    problem: &ProblemData,
    v0: DVector<f64>,
    config: &SolverConfig,
) -> Result<(DVector<f64>, StageReport)> {
    let stage = Stage::new(space, problem, config.stab);
    newton_loop(&stage, v0, config.tolerance, config.max_iterations)
}

/// The damped fixed-point iteration.
pub fn fixed_point_solve(
    space: &VemSpace,
    problem: &ProblemData,
    v0: DVector<f64>,
    config: &SolverConfig,
) -> Result<(DVector<f64>, StageReport)> {
    let stage = Stage::new(space, problem, config.stab);
    fixed_point_loop(&stage, v0, config, config.tolerance, config.max_iterations)
}

/// Solves one stage with the configured method.
pub fn solve_stage(
    space: &VemSpace,
    problem: &ProblemData,
    v0: DVector<f64>,
    config: &SolverConfig,
    tolerance: f64,
    max_iterations: usize,
) -> Result<(DVector<f64>, StageReport)> {
    let stage = Stage::new(space, problem, config.stab);
    match config.method {
        Method::Newton => newton_loop(&stage, v0, tolerance, max_iterations),
        Method::FixedPoint => fixed_point_loop(&stage, v0, config, tolerance, max_iterations),
    }
}

/// Starting iterate: the solution of `-εΔ²u + Δu = 2√f⁺` with the problem's
/// boundary conditions, which is exact when `D²u` is a multiple of the
/// identity with `det = f`.
pub fn initial_guess(
    space: &VemSpace,
    problem: &ProblemData,
    stab: &StabilizationSpec,
) -> Result<DVector<f64>> {
    let f = problem.f.clone();
    let poisson = ProblemData {
        f: Arc::new(move |p| 2.0 * f(p).max(0.0).sqrt()),
        ..problem.clone()
    };
    let load = restrict_to_free(space, &assemble_rhs(space, &poisson));
    let lift = boundary_values(&space.mesh, &space.layout, |p| (problem.g)(p));
    let sys = assemble_linearized(
        space,
        &CoefficientField::Identity,
        problem.epsilon,
        stab,
        &lift,
    );
    let free = solve_linear(&sys.matrix, &(sys.rhs - load))?;
    Ok(extend_free(space, &lift, &free))
}

/// ε-continuation: optional warmup at `ε = 1`, then every entry of
/// `schedule` starting from the previous stage's solution. `make` builds
/// the problem at a given `ε`; `on_stage` sees every scheduled stage.
pub fn continuation_solve<M, S>(
    space: &VemSpace,
    make: M,
    schedule: &[f64],
    config: &SolverConfig,
    v0: Option<DVector<f64>>,
    mut on_stage: S,
) -> Result<(DVector<f64>, SolveReport)>
where
    M: Fn(f64) -> Result<ProblemData>,
    S: FnMut(&ProblemData, &DVector<f64>, &StageReport) -> Result<()>,
{
    config.validate()?;
    if schedule.is_empty() {
        return Err(Error::Config("empty epsilon schedule".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(
            "epsilon schedule must be strictly decreasing".into(),
        ));
    }
    let start = Instant::now();
    let mut stages = Vec::new();
    let first_eps = if config.warmup {
        WARMUP_EPSILON
    } else {
        schedule[0]
    };
    let first = make(first_eps)?;
    let mut v = match v0 {
        Some(v) => v,
        None => initial_guess(space, &first, &config.stab)?,
    };
    if config.warmup {
        let (w, mut rep) = solve_stage(
            space,
            &first,
            v,
            config,
            WARMUP_TOLERANCE,
            WARMUP_ITERATIONS,
        )?;
        rep.warmup = true;
        info!(
            "warmup eps={} iterations={} residual={:.3e}",
            rep.epsilon, rep.iterations, rep.residual
        );
        v = w;
        stages.push(rep);
    }
    let mut converged = true;
    for (i, &eps) in schedule.iter().enumerate() {
        let problem = make(eps)?;
        let (w, rep) = solve_stage(
            space,
            &problem,
            v,
            config,
            config.tolerance,
            config.max_iterations,
        )?;
        info!(
            "stage {i} eps={eps} dofs={} iterations={} residual={:.3e}",
            space.n_dofs(),
            rep.iterations,
            rep.residual
        );
        v = w;
        on_stage(&problem, &v, &rep)?;
        let ok = rep.converged;
        stages.push(rep);
        if !ok {
            converged = false;
            break;
        }
    }
    let final_residual = stages.last().map(|s| s.residual).unwrap_or(0.0);
    Ok((
        v,
        SolveReport {
            stages,
            converged,
            final_residual,
            wall_time: start.elapsed(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::sparse::{SparseColMat, Triplet};

    #[test]
    fn identity_solve() {
        let n = 5;
        let t: Vec<_> = (0..n).map(|i| Triplet::new(i, i, 1.0)).collect();
        let a = SparseColMat::try_new_from_triplets(n, n, &t).unwrap();
        let b = DVector::from_fn(n, |i, _| i as f64 - 2.0);
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn small_nonsymmetric_solve() {
        let t = vec![
            Triplet::new(0, 0, 4.0),
            Triplet::new(0, 1, 1.0),
            Triplet::new(1, 0, -2.0),
            Triplet::new(1, 1, 3.0),
            Triplet::new(2, 2, 1e-3),
            Triplet::new(2, 0, 1.0),
        ];
        let a = SparseColMat::try_new_from_triplets(3, 3, &t).unwrap();
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = solve_linear(&a, &b).unwrap();
        let r = &b - sparse_mul(&a, &x);
        assert!(r.norm() / b.norm() <= LINEAR_TOLERANCE);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let t = vec![Triplet::new(0, 0, 1.0), Triplet::new(1, 0, 1.0)];
        let a = SparseColMat::try_new_from_triplets(2, 2, &t).unwrap();
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(solve_linear(&a, &b).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.damping = 0.0;
        assert!(c.validate().is_err());
    }
}
