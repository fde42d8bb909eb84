use alloc::vec::Vec;

use super::{build_case, Case, Setup};
use crate::advection::{exact_solution, initial_condition, rk4_advance, SolveConfig, VelocityField};
use crate::error::Result;

/// Relative errors in the 1-, 2- and ∞-norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    pub e1: f64,
    pub e2: f64,
    pub einf: f64,
}

pub fn relative_errors(approx: &[f64], exact: &[f64]) -> ErrorNorms {
    let (mut d1, mut d2, mut di, mut u1, mut u2, mut ui) = (0.0, 0.0, 0.0f64, 0.0, 0.0, 0.0f64);
    for (a, e) in approx.iter().zip(exact) {
        let d = (a - e).abs();
        d1 += d;
        d2 += d * d;
        di = di.max(d);
        u1 += e.abs();
        u2 += e * e;
        ui = ui.max(e.abs());
    }
    ErrorNorms { e1: d1 / u1, e2: (d2 / u2).sqrt(), einf: di / ui }
}

/// Advects the bump with the rotational field and compares at the evaluation points.
pub fn run_case(setup: &Setup, cfl: f64, t_final: f64) -> Result<ErrorNorms> {
    let u0: Vec<f64> = setup.nodes.points.iter().map(|&p| initial_condition(p)).collect();
    let cfg = SolveConfig::new(cfl, setup.case.h, t_final);
    let run = rk4_advance(&setup.system, &u0, &cfg)?;
    let uh = setup.system.evaluate_solution(&run.u);
    let exact: Vec<f64> = setup.evals.points.iter().map(|&y| exact_solution(y, t_final)).collect();
    Ok(relative_errors(&uh, &exact))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub nodes: usize,
    pub errors: ErrorNorms,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub case: Case,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slopes of `log e` against `log h` for the 1-, 2- and ∞-norms.
    pub slopes: [f64; 3],
}

/// Ordinary least squares on `(log x, log y)`; returns slope and R².
pub fn fit_loglog(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in lx.iter().zip(&ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Runs `base` at every `h` and fits the error slopes.
pub fn convergence_study(base: &Case, hs: &[f64], cfl: f64, t_final: f64) -> Result<ConvergenceTable> {
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        let case = Case { h, ..*base };
        let setup = build_case(&case, VelocityField::Rotational)?;
        let errors = run_case(&setup, cfl, t_final)?;
        rows.push(ConvergenceRow { h, nodes: setup.nodes.len(), errors });
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let pick = |f: fn(&ErrorNorms) -> f64| -> f64 {
        let e: Vec<f64> = rows.iter().map(|r| f(&r.errors)).collect();
        fit_loglog(&h, &e).0
    };
    let slopes = [pick(|e| e.e1), pick(|e| e.e2), pick(|e| e.einf)];
    Ok(ConvergenceTable { case: *base, rows, slopes })
}
