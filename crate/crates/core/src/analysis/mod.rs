//! Experiment drivers: problem setup, spectra, convergence, quadrature and CFL limits.

mod convergence;
mod quadrature;
mod spectrum;

pub use convergence::{convergence_study, fit_loglog, relative_errors, run_case, ConvergenceRow, ConvergenceTable, ErrorNorms};
pub use quadrature::{quadrature_points, quadrature_study, reference_integral, Integrand, QuadKind, QuadratureReport, QuadratureSeries};
pub use spectrum::{
    max_cfl, ode_matrix, ode_matrix_full, rk4_amplification, rk4_real_boundary, run_spectrum_suite, spectrum, MaxCfl,
    ReducedOde, SpectrumReport, MAX_SPECTRUM_SIZE,
};

use alloc::format;

use crate::advection::{SemiDiscreteSystem, VelocityField};
use crate::error::{Error, Result};
use crate::geometry::{generate_evaluation_set, generate_nodes, perturb_nodes, Domain, EvalKind, PointSet};
use crate::interp::monomial_count;
use crate::methods::{build_fd_with, build_kansa, build_patch_cover, build_pum, FdStencils, GlobalOperator, Method};
use crate::voronoi::{assemble_penalty, build_voronoi, PenaltyOperator};

/// One discretization of the advection problem on the star domain (or another domain).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Case {
    pub domain: Domain,
    pub method: Method,
    pub h: f64,
    pub q: usize,
    pub p: usize,
    /// FD stencil size or PUM target patch size; `None` picks the default.
    pub n: Option<usize>,
    /// Jump penalty (FD only).
    pub penalty: bool,
    /// Node perturbation as a fraction of `h`.
    pub perturb: f64,
    pub seed: u64,
    /// Evaluation set kind for `q > 1`; `q = 1` always collocates.
    pub eval_kind: EvalKind,
}

impl Case {
    pub fn new(method: Method, h: f64, q: usize, p: usize) -> Self {
        Case {
            domain: Domain::Star,
            method,
            h,
            q,
            p,
            n: None,
            penalty: false,
            perturb: 0.0,
            seed: 1,
            eval_kind: EvalKind::QuasiUniform,
        }
    }

    /// FD: `2·C(p+2,2)`. PUM: `4·C(p+2,2)` target nodes per patch. Kansa: none.
    pub fn local_size(&self) -> Option<usize> {
        let m = monomial_count(self.p, 2);
        match self.method {
            Method::Kansa => None,
            Method::Fd => Some(self.n.unwrap_or(2 * m)),
            Method::Pum => Some(self.n.unwrap_or(4 * m)),
        }
    }

    /// `h/√q`.
    pub fn hy(&self) -> f64 {
        self.h / (self.q as f64).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if self.penalty && self.method != Method::Fd {
            return Err(Error::config(format!("the jump penalty applies to fd, not {}", self.method.name())));
        }
        if self.q == 0 {
            return Err(Error::config("oversampling q must be at least 1"));
        }
        Ok(())
    }
}

/// Everything built for one [`Case`].
#[derive(Clone, Debug)]
pub struct Setup {
    pub case: Case,
    pub nodes: PointSet,
    pub evals: PointSet,
    pub operator: GlobalOperator,
    pub penalty: Option<PenaltyOperator>,
    pub system: SemiDiscreteSystem,
}

/// Seeds: nodes use `seed`, the perturbation `seed + 1`, the evaluation set `seed + 2`.
pub fn nodes_for(case: &Case) -> Result<PointSet> {
    let x = generate_nodes(&case.domain, case.h, case.seed)?;
    if case.perturb > 0.0 {
        perturb_nodes(&case.domain, &x, case.perturb, case.seed.wrapping_add(1))
    } else {
        Ok(x)
    }
}

pub fn evals_for(case: &Case, nodes: &PointSet) -> Result<PointSet> {
    let kind = if case.q == 1 { EvalKind::Collocate } else { case.eval_kind };
    generate_evaluation_set(&case.domain, nodes, case.q, kind, case.seed.wrapping_add(2))
}

pub fn build_case(case: &Case, velocity: VelocityField) -> Result<Setup> {
    case.validate()?;
    let nodes = nodes_for(case)?;
    let evals = evals_for(case, &nodes)?;
    build_case_on(case, nodes, evals, velocity)
}

/// As [`build_case`] with given node and evaluation sets.
pub fn build_case_on(case: &Case, nodes: PointSet, evals: PointSet, velocity: VelocityField) -> Result<Setup> {
    case.validate()?;
    let (operator, penalty) = match case.method {
        Method::Kansa => (build_kansa(&nodes.points, &evals.points, case.p)?, None),
        Method::Pum => {
            let target = case.local_size().unwrap();
            let cover = build_patch_cover(&nodes.points, &evals.points, case.p, target)?;
            let mut op = build_pum(&nodes.points, &evals.points, case.p, &cover)?;
            op.meta.local_size = Some(target);
            (op, None)
        }
        Method::Fd => {
            let st = FdStencils::build(&nodes.points, case.p, case.local_size().unwrap())?;
            let op = build_fd_with(&st, &evals.points);
            let pen = if case.penalty {
                let vd = build_voronoi(&nodes.points, &case.domain)?;
                Some(assemble_penalty(&vd, &st))
            } else {
                None
            };
            (op, pen)
        }
    };
    let hy = if case.q == 1 { nodes.h } else { case.hy() };
    let system = SemiDiscreteSystem::new(&operator, hy, &nodes, &case.domain, velocity, penalty.as_ref())?;
    Ok(Setup { case: *case, nodes, evals, operator, penalty, system })
}
