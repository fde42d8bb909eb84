//! Oversampled least-squares semi-discretization of `∂ₜu + F′(t)·∇u = 0` and its RK4 integration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, PointSet};
use crate::linalg::{cg, CgOptions, CgStats, CsrMatrix, Matrix};
use crate::math::{norm, TAU};
use crate::methods::GlobalOperator;
use crate::voronoi::PenaltyOperator;

/// Spatially constant velocity `F′(t)`.
#[derive(Clone, Copy, Debug)]
pub enum VelocityField {
    /// `½(cos 2πt, sin 2πt)`.
    Rotational,
    Constant(Point),
    Custom(fn(f64) -> Point),
}

impl VelocityField {
    pub fn eval(&self, t: f64) -> Point {
        match self {
            VelocityField::Rotational => {
                let (s, c) = (TAU * t).sin_cos();
                [0.5 * c, 0.5 * s]
            }
            VelocityField::Constant(v) => *v,
            VelocityField::Custom(f) => f(t),
        }
    }
}

/// Support radius of the initial bump.
pub const BUMP_RADIUS: f64 = 0.4;

/// Wendland bump `(1−s)⁶(35s²+18s+3)`, `s = ‖y‖/0.4`.
pub fn initial_condition(y: Point) -> f64 {
    let s = norm(y) / BUMP_RADIUS;
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - s).powi(6) * (35.0 * s * s + 18.0 * s + 3.0)
    }
}

/// Displacement `∫₀ᵗ F′` of the rotational field.
pub fn displacement(t: f64) -> Point {
    let (s, c) = (TAU * t).sin_cos();
    [s / (2.0 * TAU), (1.0 - c) / (2.0 * TAU)]
}

/// Exact solution for the rotational field and zero inflow data.
pub fn exact_solution(y: Point, t: f64) -> f64 {
    let s = displacement(t);
    initial_condition([y[0] - s[0], y[1] - s[1]])
}

/// `Δt = cfl · h / ‖F′(t)‖`.
pub fn timestep(cfl: f64, h: f64, velocity: &VelocityField, t: f64) -> Result<f64> {
    let speed = norm(velocity.eval(t));
    if !(speed > 0.0) {
        return Err(Error::ZeroVelocity { time: t });
    }
    Ok(cfl * h / speed)
}

/// Scaled mass `ĒᵀĒ` and `ĒᵀD̄` pieces for one operator, plus the optional penalty.
///
/// The right-hand side is `∂ₜu = (ĒᵀĒ)⁻¹(−ĒᵀD̄(t)u + γPu)` with `γ = −h_ℰ`.
#[derive(Clone, Debug)]
pub struct SemiDiscreteSystem {
    /// Nominal evaluation spacing `h/√q`.
    pub hy: f64,
    e: Matrix,
    mass: Matrix,
    k1: Matrix,
    k2: Matrix,
    diag: Vec<f64>,
    penalty: Option<(CsrMatrix, f64)>,
    pub velocity: VelocityField,
    /// Boundary node index, position and outward normal.
    boundary: Vec<(usize, Point, Point)>,
    pub cg: CgOptions,
}

impl SemiDiscreteSystem {
    pub fn new(
        op: &GlobalOperator,
        hy: f64,
        nodes: &PointSet,
        domain: &Domain,
        velocity: VelocityField,
        penalty: Option<&PenaltyOperator>,
    ) -> Result<Self> {
        if !(hy > 0.0) {
            return Err(Error::config(format!("evaluation spacing {hy} must be positive")));
        }
        if nodes.len() != op.nodes() {
            return Err(Error::config(format!("{} nodes for an operator on {}", nodes.len(), op.nodes())));
        }
        let s = hy * hy;
        let mass = op.e.gram(&op.e, s);
        let k1 = op.e.gram(&op.d1, s);
        let k2 = op.e.gram(&op.d2, s);
        let diag = mass.diagonal();
        let boundary = nodes
            .boundary_indices()
            .into_iter()
            .map(|i| (i, nodes.points[i], domain.outward_normal(nodes.points[i])))
            .collect();
        Ok(SemiDiscreteSystem {
            hy,
            e: op.e.clone(),
            mass,
            k1,
            k2,
            diag,
            penalty: penalty.map(|p| (p.p.clone(), p.gamma)),
            velocity,
            boundary,
            cg: CgOptions::for_size(op.nodes()),
        })
    }

    pub fn len(&self) -> usize {
        self.mass.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mass(&self) -> &Matrix {
        &self.mass
    }

    /// `ĒᵀD̄₁`, `ĒᵀD̄₂` before multiplication by the velocity components.
    pub fn flux_parts(&self) -> (&Matrix, &Matrix) {
        (&self.k1, &self.k2)
    }

    pub fn penalty(&self) -> Option<(&CsrMatrix, f64)> {
        self.penalty.as_ref().map(|(p, g)| (p, *g))
    }

    pub fn has_penalty(&self) -> bool {
        self.penalty.is_some()
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary.iter().map(|b| b.0)
    }

    /// Boundary nodes with `F′(t)·n < 0`.
    pub fn inflow(&self, t: f64) -> Vec<usize> {
        let f = self.velocity.eval(t);
        self.boundary.iter().filter(|b| f[0] * b.2[0] + f[1] * b.2[1] < 0.0).map(|b| b.0).collect()
    }

    /// `−ĒᵀD̄(t)u + γPu`.
    pub fn projected_flux(&self, u: &[f64], t: f64, out: &mut [f64]) {
        let f = self.velocity.eval(t);
        let mut tmp = vec![0.0; u.len()];
        self.k1.matvec(u, out);
        self.k2.matvec(u, &mut tmp);
        for (o, t2) in out.iter_mut().zip(&tmp) {
            *o = -(f[0] * *o + f[1] * t2);
        }
        if let Some((p, gamma)) = &self.penalty {
            p.matvec(u, &mut tmp);
            for (o, t2) in out.iter_mut().zip(&tmp) {
                *o += gamma * t2;
            }
        }
    }

    /// Solves `(ĒᵀĒ)v = b` by CG; `v` is the warm start.
    pub fn solve_mass(&self, b: &[f64], v: &mut [f64]) -> Result<CgStats> {
        cg(|x, y| self.mass.matvec(x, y), &self.diag, b, v, self.cg)
    }

    /// `∂ₜu` at time `t`; `dudt` holds the CG warm start on entry.
    pub fn rhs(&self, u: &[f64], t: f64, dudt: &mut [f64]) -> Result<CgStats> {
        let mut b = vec![0.0; u.len()];
        self.projected_flux(u, t, &mut b);
        self.solve_mass(&b, dudt)
    }

    /// `‖Ēu‖² = h_y² Σ (Eu)²`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let v = self.evaluate_solution(u);
        self.hy * self.hy * v.iter().map(|x| x * x).sum::<f64>()
    }

    /// `u_h(Y) = E u`.
    pub fn evaluate_solution(&self, u: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.e.rows()];
        self.e.matvec(u, &mut v);
        v
    }
}

/// Dirichlet data on the inflow boundary.
pub type InflowData = fn(Point, f64) -> f64;

#[derive(Clone, Copy, Debug)]
pub struct SolveConfig {
    pub cfl: f64,
    /// Node spacing entering the time step.
    pub h: f64,
    pub t_final: f64,
    /// Fixed step overriding the CFL rule (needed for a zero field).
    pub dt: Option<f64>,
    /// `None` means `g = 0`.
    pub inflow: Option<InflowData>,
    /// Stop as soon as the energy ratio exceeds this value.
    pub stop_ratio: Option<f64>,
    /// Overwrite inflow values after each step. Off only for studying the bare integrator.
    pub inject: bool,
}

impl SolveConfig {
    pub fn new(cfl: f64, h: f64, t_final: f64) -> Self {
        SolveConfig { cfl, h, t_final, dt: None, inflow: None, stop_ratio: None, inject: true }
    }

    fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0) || !(self.h > 0.0) || !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::config(format!(
                "need cfl > 0, h > 0 and a finite t_final ≥ 0 (got {}, {}, {})",
                self.cfl, self.h, self.t_final
            )));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::config(format!("time step {dt} must be positive")));
            }
        }
        Ok(())
    }
}

/// Energy ratios `‖u_h(Y,tₖ)‖² / ‖u_h(Y,0)‖²`, one per step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// At most `limit` samples, always keeping the first and last.
    pub fn decimate(&self, limit: usize) -> EnergyTrace {
        let n = self.len();
        if n <= limit || limit < 2 {
            return self.clone();
        }
        let mut out = EnergyTrace::default();
        for k in 0..limit {
            let i = (k * (n - 1) + (limit - 1) / 2) / (limit - 1);
            out.times.push(self.times[i]);
            out.ratios.push(self.ratios[i]);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub u: Vec<f64>,
    pub time: f64,
    pub steps: usize,
    pub trace: EnergyTrace,
    pub cg_iterations: usize,
    /// True if `stop_ratio` ended the run early.
    pub stopped: bool,
}

/// Overwrites inflow nodes at time `t`.
pub fn inject(sys: &SemiDiscreteSystem, u: &mut [f64], t: f64, g: Option<InflowData>) {
    let f = sys.velocity.eval(t);
    for &(i, p, n) in &sys.boundary {
        if f[0] * n[0] + f[1] * n[1] < 0.0 {
            u[i] = g.map_or(0.0, |g| g(p, t));
        }
    }
}

/// Classical RK4 with injection of the inflow data after every step.
pub fn rk4_advance(sys: &SemiDiscreteSystem, u0: &[f64], cfg: &SolveConfig) -> Result<RunResult> {
    cfg.validate()?;
    let n = sys.len();
    if u0.len() != n {
        return Err(Error::config(format!("initial vector has {} entries, system {}", u0.len(), n)));
    }
    let e0 = sys.energy(u0);
    let mut trace = EnergyTrace { times: vec![0.0], ratios: vec![1.0] };
    let mut u = u0.to_vec();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut iters = 0usize;
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut stage = vec![0.0; n];
    let mut guess = vec![0.0; n];
    let eps = 1e-12 * cfg.t_final.max(1.0);
    let fail = |err: Error, time: f64| match err {
        Error::Solver { residual, .. } if !residual.is_finite() => Error::Diverged { time },
        e => e,
    };
    while t < cfg.t_final - eps {
        let full = match cfg.dt {
            Some(dt) => dt,
            None => timestep(cfg.cfl, cfg.h, &sys.velocity, t)?,
        };
        let dt = full.min(cfg.t_final - t);
        let times = [t, t + 0.5 * dt, t + 0.5 * dt, t + dt];
        let coef = [0.0, 0.5 * dt, 0.5 * dt, dt];
        for s in 0..4 {
            if s == 0 {
                stage.copy_from_slice(&u);
            } else {
                for i in 0..n {
                    stage[i] = u[i] + coef[s] * k[s - 1][i];
                }
            }
            let st = sys.rhs(&stage, times[s], &mut guess).map_err(|e| fail(e, t))?;
            iters += st.iterations;
            k[s].copy_from_slice(&guess);
        }
        for i in 0..n {
            u[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        t = if cfg.t_final - (t + dt) <= eps { cfg.t_final } else { t + dt };
        steps += 1;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { time: t });
        }
        if cfg.inject {
            inject(sys, &mut u, t, cfg.inflow);
        }
        let ratio = if e0 > 0.0 { sys.energy(&u) / e0 } else { 0.0 };
        if !ratio.is_finite() {
            return Err(Error::Diverged { time: t });
        }
        trace.times.push(t);
        trace.ratios.push(ratio);
        if cfg.stop_ratio.map_or(false, |r| ratio > r) {
            return Ok(RunResult { u, time: t, steps, trace, cg_iterations: iters, stopped: true });
        }
    }
    Ok(RunResult { u, time: t, steps, trace, cg_iterations: iters, stopped: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_values() {
        assert_eq!(initial_condition([0.0, 0.0]), 3.0);
        assert_eq!(initial_condition([0.4, 0.0]), 0.0);
        assert!((initial_condition([0.0, 0.2]) - 0.32421875).abs() < 1e-15);
    }

    #[test]
    fn displacement_integrates_the_field() {
        let f = VelocityField::Rotational;
        for &t in &[0.0, 0.13, 0.5, 0.77] {
            let d = 1e-6;
            let (a, b) = (displacement(t + d), displacement(t - d));
            let v = f.eval(t);
            assert!(((a[0] - b[0]) / (2.0 * d) - v[0]).abs() < 1e-8);
            assert!(((a[1] - b[1]) / (2.0 * d) - v[1]).abs() < 1e-8);
        }
        let s = displacement(1.0);
        assert!(s[0].abs() < 1e-15 && s[1].abs() < 1e-15);
    }

    #[test]
    fn timestep_rule() {
        let f = VelocityField::Rotational;
        assert!((timestep(0.2, 0.05, &f, 0.3).unwrap() - 0.02).abs() < 1e-15);
        assert!((timestep(0.6, 0.03, &f, 0.0).unwrap() - 0.036).abs() < 1e-15);
        assert!(timestep(0.2, 0.05, &VelocityField::Constant([0.0, 0.0]), 0.0).is_err());
    }

    #[test]
    fn decimation_keeps_ends() {
        let tr = EnergyTrace { times: (0..5000).map(|i| i as f64).collect(), ratios: vec![1.0; 5000] };
        let d = tr.decimate(2000);
        assert_eq!(d.len(), 2000);
        assert_eq!(d.times[0], 0.0);
        assert_eq!(*d.times.last().unwrap(), 4999.0);
    }
}
