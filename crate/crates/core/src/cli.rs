//! Experiment driver: mesh sequences, projected error norms, rates and the
//! `.dat` tables.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use log::info;
use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::{ExactSolution, StabilizationMode, StabilizationSpec};
use crate::mesh::{build_uniform_quad_mesh, build_voronoi_mesh, Mesh};
use crate::poly::{element_quadrature, poly_dim};
use crate::problems::{manufactured, ProblemId};
use crate::solver::{continuation_solve, Method, PhiStrategy, SolverConfig};
use crate::space::VemSpace;

/// ε values of the viscosity-limit study.
pub const EPSILON_SCHEDULE: [f64; 11] = [
    1.0, 0.5, 0.25, 0.125, 0.05, 0.025, 0.0125, 0.005, 0.0025, 0.00125, 0.0005,
];

pub const LLOYD_ITERATIONS: usize = 100;

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeshFamily {
    Quad,
    Voronoi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Study {
    Convergence,
    Epsilon,
}

/// Quads: `size` cells per axis. Voronoi: `size` cells.
pub fn build_mesh(family: MeshFamily, size: usize, seed: u64) -> Result<Mesh> {
    if size == 0 {
        return Err(Error::Config("mesh size must be positive".into()));
    }
    match family {
        MeshFamily::Quad => Ok(build_uniform_quad_mesh(size)),
        MeshFamily::Voronoi => build_voronoi_mesh(size, seed, LLOYD_ITERATIONS),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    /// Mesh size (for the ε-study, the ε value).
    pub h: f64,
    pub h2: f64,
    pub h1: f64,
    pub l2: f64,
    /// Rates against the previous record, in the order H2, H1, L2.
    pub eoc: Option<[Option<f64>; 3]>,
}

/// `‖D²u - Π_2 u_h‖`, `‖∇u - Π_1 u_h‖` and `‖u - Π_0 u_h‖` over the domain.
pub fn compute_errors(
    space: &VemSpace,
    u: &DVector<f64>,
    exact: &ExactSolution,
) -> Result<ErrorRecord> {
    let l = space.order();
    let n1 = poly_dim(l as isize - 1);
    let n2 = poly_dim(l as isize - 2);
    let parts = (0..space.mesh.n_elements())
        .into_par_iter()
        .map(|k| -> Result<[f64; 3]> {
            let op = &space.operators[k];
            let v = DVector::from_vec(space.layout.gather(k, u.as_slice()));
            let c0 = &op.p0 * &v;
            let c1 = [&op.p1[0] * &v, &op.p1[1] * &v];
            let c2: Vec<DVector<f64>> = op.p2.iter().map(|p| p * &v).collect();
            let q = element_quadrature(&space.mesh, k, 2 * l + 2)?;
            let mut e = [0.0; 3];
            for (x, w) in q.points.iter().zip(&q.weights) {
                let m = op.basis.eval(x);
                let hess = (exact.hessian)(x);
                let mut s2 = 0.0;
                for (comp, c) in c2.iter().enumerate() {
                    let approx = c.dot(&m.rows(0, n2));
                    s2 += (hess[(comp / 2, comp % 2)] - approx).powi(2);
                }
                let grad = (exact.grad)(x);
                let g0 = c1[0].dot(&m.rows(0, n1));
                let g1 = c1[1].dot(&m.rows(0, n1));
                e[0] += w * s2;
                e[1] += w * ((grad.x - g0).powi(2) + (grad.y - g1).powi(2));
                e[2] += w * ((exact.u)(x) - c0.dot(&m)).powi(2);
            }
            Ok(e)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = [0.0; 3];
    for p in parts {
        for i in 0..3 {
            total[i] += p[i];
        }
    }
    Ok(ErrorRecord {
        h: space.mesh.h_max,
        h2: total[0].sqrt(),
        h1: total[1].sqrt(),
        l2: total[2].sqrt(),
        eoc: None,
    })
}

/// `log(e_prev/e)/log(h_prev/h)` per norm; undefined where an error
/// vanishes or the sizes coincide.
pub fn compute_eoc(records: &[ErrorRecord]) -> Vec<ErrorRecord> {
    let rate = |e0: f64, e1: f64, h0: f64, h1: f64| {
        if e0 > 0.0 && e1 > 0.0 && h0 != h1 {
            Some((e0 / e1).ln() / (h0 / h1).ln())
        } else {
            None
        }
    };
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut out = *r;
            out.eoc = (i > 0).then(|| {
                let p = &records[i - 1];
                [
                    rate(p.h2, r.h2, p.h, r.h),
                    rate(p.h1, r.h1, p.h, r.h),
                    rate(p.l2, r.l2, p.h, r.h),
                ]
            });
            out
        })
        .collect()
}

/// Whitespace-separated table with 12 significant digits.
pub fn format_table(first_column: &str, records: &[ErrorRecord]) -> String {
    let mut s = format!("{first_column} H2 H1 L2\n");
    for r in records {
        let _ = writeln!(s, "{:.11e} {:.11e} {:.11e} {:.11e}", r.h, r.h2, r.h1, r.l2);
    }
    s
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    pub study: Study,
    pub mesh: MeshFamily,
    pub order: usize,
    pub sizes: Vec<usize>,
    pub epsilon: f64,
    pub solver: SolverConfig,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < MIN_ORDER {
            return Err(Error::UnsupportedOrder(self.order));
        }
        if self.order > MAX_ORDER {
            return Err(Error::Config(format!("order is capped at {MAX_ORDER}")));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::Config(
                "mesh sizes must be a non-empty list of positive integers".into(),
            ));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub records: Vec<ErrorRecord>,
    pub converged: bool,
    pub table: String,
}

fn write_table(config: &ExperimentConfig, table: &str) -> Result<()> {
    if let Some(path) = &config.output {
        std::fs::write(path, table)?;
    }
    Ok(())
}

/// Solves on every mesh of the sequence and tabulates the errors. Stops at
/// the first non-converged solve; the table then holds the meshes done so
/// far.
pub fn run_convergence_study(config: &ExperimentConfig) -> Result<StudyOutcome> {
    config.validate()?;
    let mut records = Vec::new();
    let mut converged = true;
    for &size in &config.sizes {
        let mesh = build_mesh(config.mesh, size, config.seed)?;
        let space = VemSpace::new(mesh, config.order)?;
        let problem = config.problem;
        let (u, report) = continuation_solve(
            &space,
            |eps| manufactured(problem, eps),
            &[config.epsilon],
            &config.solver,
            None,
            |_, _, _| Ok(()),
        )?;
        let target = manufactured(problem, config.epsilon)?;
        let exact = target
            .exact
            .as_ref()
            .expect("manufactured problems carry u");
        if !report.converged {
            converged = false;
            info!(
                "mesh {size}: not converged (residual {:.3e})",
                report.final_residual
            );
            break;
        }
        let rec = compute_errors(&space, &u, exact)?;
        info!(
            "mesh {size} h={:.4e} dofs={} iterations={} residual={:.3e} H2={:.4e} H1={:.4e} L2={:.4e}",
            rec.h,
            space.n_dofs(),
            report.stages.iter().map(|s| s.iterations).sum::<usize>(),
            report.final_residual,
            rec.h2,
            rec.h1,
            rec.l2
        );
        records.push(rec);
        write_table(config, &format_table("h", &records))?;
    }
    let records = compute_eoc(&records);
    let table = format_table("h", &records);
    write_table(config, &table)?;
    Ok(StudyOutcome {
        records,
        converged,
        table,
    })
}

/// Continuation over `schedule` on the first mesh size; errors against the
/// problem's exact solution (the limit `u₀` for the limit problem).
pub fn run_epsilon_study(config: &ExperimentConfig, schedule: &[f64]) -> Result<StudyOutcome> {
    config.validate()?;
    let size = config.sizes[0];
    let mesh = build_mesh(config.mesh, size, config.seed)?;
    let space = VemSpace::new(mesh, config.order)?;
    let problem = config.problem;
    let mut records = Vec::new();
    let result = continuation_solve(
        &space,
        |eps| manufactured(problem, eps),
        schedule,
        &config.solver,
        None,
        |data, u, rep| {
            if !rep.converged {
                return Ok(());
            }
            let exact = data.exact.as_ref().expect("manufactured problems carry u");
            let mut rec = compute_errors(&space, u, exact)?;
            rec.h = data.epsilon;
            info!(
                "eps={} H2={:.4e} H1={:.4e} L2={:.4e}",
                data.epsilon, rec.h2, rec.h1, rec.l2
            );
            records.push(rec);
            write_table(config, &format_table("Epsilon", &records))
        },
    );
    let (_, report) = result?;
    let table = format_table("Epsilon", &records);
    write_table(config, &table)?;
    Ok(StudyOutcome {
        records,
        converged: report.converged,
        table,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Fixedpoint,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StabArg {
    Constant,
    #[value(name = "paper")]
    Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhiArg {
    Frozen,
    Identity,
}

/// Command-line flags of the `mavem` binary.
#[derive(Debug, Parser)]
#[command(
    name = "mavem",
    version,
    about = "Vanishing-moment Monge-Ampère solver on polygonal meshes"
)]
pub struct Args {
    #[arg(long, default_value = "p1", value_parser = ProblemId::from_str)]
    pub problem: ProblemId,
    #[arg(long, value_enum, default_value = "convergence")]
    pub study: Study,
    #[arg(long, value_enum, default_value = "quad")]
    pub mesh: MeshFamily,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    /// Cells per axis (quad) or cell counts (voronoi).
    #[arg(long, value_delimiter = ',', default_value = "11,20,40")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "newton")]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value = "constant")]
    pub stab: StabArg,
    #[arg(long, value_enum, default_value = "frozen")]
    pub phi: PhiArg,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Skip the loose ε = 1 stage before each solve.
    #[arg(long)]
    pub no_warmup: bool,
}

impl Args {
    pub fn to_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            problem: self.problem,
            study: self.study,
            mesh: self.mesh,
            order: self.order,
            sizes: self.sizes.clone(),
            epsilon: self.epsilon,
            solver: SolverConfig {
                method: match self.solver {
                    SolverArg::Fixedpoint => Method::FixedPoint,
                    SolverArg::Newton => Method::Newton,
                },
                damping: self.damping,
                tolerance: self.tol,
                max_iterations: self.max_iter,
                stab: StabilizationSpec {
                    mode: match self.stab {
                        StabArg::Constant => StabilizationMode::Constant,
                        StabArg::Scaled => StabilizationMode::Scaled,
                    },
                    constant: 1.0,
                },
                phi: match self.phi {
                    PhiArg::Frozen => PhiStrategy::Frozen,
                    PhiArg::Identity => PhiStrategy::Identity,
                },
                warmup: !self.no_warmup,
            },
            seed: self.seed,
            output: self.output.clone(),
        }
    }
}

/// Runs the configured study.
pub fn run(config: &ExperimentConfig) -> Result<StudyOutcome> {
    match config.study {
        Study::Convergence => run_convergence_study(config),
        Study::Epsilon => {
            let schedule: Vec<f64> = EPSILON_SCHEDULE
                .iter()
                .copied()
                .filter(|&e| e >= config.epsilon)
                .collect();
            run_epsilon_study(config, &schedule)
        }
    }
}
