//! Energy minimization, connection relaxation, the vortex ansatz and
//! ε-continuation sweeps.

mod ansatz;
mod ncg;
mod sweep;

use num_complex::Complex64;
use thiserror::Error;

use crate::bundle::{check_shapes, curvature, BundleData, BundleError, Gauge1Form, Section};
use crate::fields::{energy_change, g_energy, g_gradient, truncate, EnergyBreakdown, FieldsError};
use crate::hodge::{coexact_projection, solve_london, HodgeError};
use crate::lattice::{codifferential, exterior_derivative, laplacian, Cochain, LatticeError};
use crate::vortex::{jacobian, supercurrent, VortexError};

pub use ansatz::{default_initial, random_section, vortex_ansatz, AnsatzSpec, CoreProfile, Defect};
pub use sweep::{epsilon_sweep, SweepInit, SweepLattice, SweepRecord, SweepTable};

use ncg::{NcgSettings, Objective, Outcome};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("no convergence after {} iterations (gradient {:e})", .best.iterations, .best.grad_norm)]
    MaxIterations { best: Box<MinimizerResult> },
    #[error("line search stalled after {} iterations (gradient {:e})", .best.iterations, .best.grad_norm)]
    Stalled { best: Box<MinimizerResult> },
    #[error("connection relaxation stopped at residual {residual:e}")]
    ConnectionNotConverged { best: Box<Gauge1Form>, residual: f64 },
    #[error("windings in plane ({}, {}) sum to {got}, bundle requires {expected}", .plane.0, .plane.1)]
    WindingMismatch { plane: (usize, usize), expected: i64, got: i64 },
    #[error("invalid ansatz: {0}")]
    InvalidAnsatz(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Fields(#[from] FieldsError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Hodge(#[from] HodgeError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Vortex(#[from] VortexError),
}

impl SolveError {
    /// The best iterate of a minimization that did not converge.
    pub fn best(&self) -> Option<&MinimizerResult> {
        match self {
            SolveError::MaxIterations { best } | SolveError::Stalled { best } => Some(best),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Stop when the sup-norm of the L² gradient is at most this.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Backtracking factor.
    pub shrink: f64,
    /// Conjugate directions are reset to steepest descent this often.
    pub restart_every: usize,
    /// Truncate `|u| ≤ 1` after every accepted step.
    pub truncate_each: bool,
    /// Observer cadence in iterations, 0 for none.
    pub report_every: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 50_000,
            armijo: 1e-4,
            shrink: 0.5,
            restart_every: 50,
            truncate_each: false,
            report_every: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub energy: EnergyBreakdown,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizerResult {
    pub section: Section,
    pub gauge_field: Gauge1Form,
    pub energy: EnergyBreakdown,
    pub grad_norm: f64,
    /// `‖−ΔF + F − 2J‖ / (1 + ‖F‖)`.
    pub london_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after every accepted step, accumulated from exact local
    /// differences starting at the initial energy.
    pub energy_trace: Vec<f64>,
}

/// `‖−ΔF + F − 2J‖ / (1 + ‖F‖)`; zero at critical points.
pub fn london_residual(u: &Section, a: &Gauge1Form, b: &BundleData) -> Result<f64, BundleError> {
    let f = curvature(a, b)?;
    let jac = jacobian(u, a, b)?;
    let mut r = laplacian(&f);
    r.axpy(1.0, &f);
    r.axpy(-2.0, &jac);
    Ok(r.norm() / (1.0 + f.norm()))
}

/// `‖d*F − j‖`, the gauge part of the Euler–Lagrange system.
pub fn ampere_residual(u: &Section, a: &Gauge1Form, b: &BundleData) -> Result<f64, BundleError> {
    let f = curvature(a, b)?;
    let mut r = codifferential(&f)?;
    r.axpy(-1.0, &supercurrent(u, a, b)?);
    Ok(r.norm())
}

struct GlObjective<'a> {
    u: Vec<Complex64>,
    a: Cochain,
    bundle: &'a BundleData,
    eps: f64,
    truncate_each: bool,
}

impl GlObjective<'_> {
    fn ns(&self) -> usize {
        self.u.len()
    }

    fn pair(&self) -> (Section, Gauge1Form) {
        let geom = self.bundle.geometry();
        (Section::from_values(geom, self.u.clone()).unwrap(), Gauge1Form::from_cochain(self.a.clone()).unwrap())
    }

    fn split(&self, dir: &[f64], step: f64) -> (Vec<Complex64>, Vec<f64>) {
        let ns = self.ns();
        let du = (0..ns).map(|s| Complex64::new(dir[2 * s], dir[2 * s + 1]) * step).collect();
        let da = dir[2 * ns..].iter().map(|v| v * step).collect();
        (du, da)
    }
}

impl Objective for GlObjective<'_> {
    fn gradient(&mut self) -> Vec<f64> {
        let (u, a) = self.pair();
        let g = g_gradient(&u, &a, self.bundle, self.eps).expect("validated");
        let mut out = Vec::with_capacity(2 * self.ns() + g.gauge.values().len());
        for z in &g.section {
            out.push(z.re);
            out.push(z.im);
        }
        out.extend_from_slice(g.gauge.values());
        out
    }

    fn change(&self, dir: &[f64], step: f64) -> f64 {
        let (u, a) = self.pair();
        let (du, da) = self.split(dir, step);
        energy_change(&u, &a, self.bundle, self.eps, &du, &da, true)
    }

    fn advance(&mut self, dir: &[f64], step: f64) {
        let ns = self.ns();
        for (s, z) in self.u.iter_mut().enumerate() {
            *z += Complex64::new(dir[2 * s], dir[2 * s + 1]) * step;
        }
        self.a.values_mut().iter_mut().zip(&dir[2 * ns..]).for_each(|(v, d)| *v += step * d);
    }

    fn residual(&self, g: &[f64]) -> f64 {
        let w = self.bundle.geometry().cell_volume();
        g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / w
    }

    fn after_step(&mut self) -> Option<f64> {
        if !self.truncate_each || self.u.iter().all(|z| z.norm_sqr() <= 1.0) {
            return None;
        }
        let (u, a) = self.pair();
        let v = truncate(&u);
        let du: Vec<Complex64> = v.values().iter().zip(&self.u).map(|(x, y)| x - y).collect();
        let zero = vec![0.0; self.a.values().len()];
        let delta = energy_change(&u, &a, self.bundle, self.eps, &du, &zero, true);
        self.u = v.values().to_vec();
        Some(delta)
    }
}

/// Minimize `G_ε` from `(u₀, A₀)`.
pub fn minimize(
    u0: &Section,
    a0: &Gauge1Form,
    b: &BundleData,
    eps: f64,
    opts: &MinimizeOptions,
) -> Result<MinimizerResult, SolveError> {
    minimize_observed(u0, a0, b, eps, opts, |_| {})
}

/// [`minimize`] with an observer called every `opts.report_every` iterations.
pub fn minimize_observed(
    u0: &Section,
    a0: &Gauge1Form,
    b: &BundleData,
    eps: f64,
    opts: &MinimizeOptions,
    mut observer: impl FnMut(&IterationRecord),
) -> Result<MinimizerResult, SolveError> {
    let start = g_energy(u0, a0, b, eps)?;
    check_shapes(u0, a0, b)?;
    let mut obj = GlObjective {
        u: u0.values().to_vec(),
        a: a0.as_cochain().clone(),
        bundle: b,
        eps,
        truncate_each: opts.truncate_each,
    };
    let settings = NcgSettings {
        tol: opts.grad_tol,
        max_iter: opts.max_iter,
        armijo: opts.armijo,
        shrink: opts.shrink,
        restart_every: opts.restart_every.max(1),
        first_step: 0.1,
    };
    let report = ncg::run(&mut obj, &settings, |o, it, _, residual| {
        if opts.report_every > 0 && it % opts.report_every == 0 {
            let (u, a) = o.pair();
            if let Ok(energy) = g_energy(&u, &a, b, eps) {
                observer(&IterationRecord { iteration: it, energy, grad_norm: residual });
            }
        }
    });
    let (u, a) = obj.pair();
    let energy = g_energy(&u, &a, b, eps)?;
    let result = MinimizerResult {
        london_residual: london_residual(&u, &a, b)?,
        section: u,
        gauge_field: a,
        energy,
        grad_norm: report.residual,
        iterations: report.iterations,
        converged: report.outcome == Outcome::Converged,
        energy_trace: report.trace.iter().map(|d| start.total + d).collect(),
    };
    match report.outcome {
        Outcome::Converged => Ok(result),
        Outcome::MaxIterations => Err(SolveError::MaxIterations { best: Box::new(result) }),
        Outcome::Stalled => Err(SolveError::Stalled { best: Box::new(result) }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    /// Stop when `‖d(d*F_B − j(u, B))‖ ≤ tol · (1 + ‖F_B‖)`, i.e. when the
    /// London residual of `(u, B)` is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 10_000 }
    }
}

/// `∫ |D_B u|² + |F_B|²`.
pub fn connection_functional(u: &Section, a: &Gauge1Form, b: &BundleData) -> Result<f64, BundleError> {
    let e = g_energy(u, a, b, 1.0).map_err(|e| match e {
        FieldsError::Bundle(b) => b,
        _ => unreachable!("epsilon is fixed"),
    })?;
    Ok(2.0 * (e.kinetic + e.curvature))
}

struct ConnectionObjective<'a> {
    u: &'a Section,
    base: &'a Cochain,
    shift: Cochain,
    bundle: &'a BundleData,
}

impl ConnectionObjective<'_> {
    fn current(&self) -> Gauge1Form {
        Gauge1Form::from_cochain(self.base + &self.shift).unwrap()
    }
}

impl Objective for ConnectionObjective<'_> {
    fn gradient(&mut self) -> Vec<f64> {
        let b = self.current();
        let f = curvature(&b, self.bundle).unwrap();
        let mut g = codifferential(&f).unwrap();
        g.axpy(-1.0, &supercurrent(self.u, &b, self.bundle).unwrap());
        let w = self.bundle.geometry().cell_volume();
        let mut g = coexact_projection(&g);
        g.values_mut().iter_mut().for_each(|v| *v *= w);
        g.into_values()
    }

    fn precondition(&self, g: &[f64]) -> Vec<f64> {
        let c = Cochain::from_values(self.bundle.geometry(), 1, g.to_vec()).unwrap();
        solve_london(&c).into_values()
    }

    fn change(&self, dir: &[f64], step: f64) -> f64 {
        let da: Vec<f64> = dir.iter().map(|v| v * step).collect();
        let du = vec![Complex64::new(0.0, 0.0); self.u.values().len()];
        energy_change(self.u, &self.current(), self.bundle, 1.0, &du, &da, false)
    }

    fn advance(&mut self, dir: &[f64], step: f64) {
        self.shift.values_mut().iter_mut().zip(dir).for_each(|(v, d)| *v += step * d);
        self.shift = coexact_projection(&self.shift);
    }

    fn residual(&self, g: &[f64]) -> f64 {
        let geom = self.bundle.geometry();
        let w = geom.cell_volume();
        let c = Cochain::from_values(geom, 1, g.iter().map(|v| v / w).collect()).unwrap();
        let f = curvature(&self.current(), self.bundle).unwrap();
        exterior_derivative(&c).unwrap().norm() / (1.0 + f.norm())
    }
}

/// Minimize `∫ |D_B u|² + |F_B|²` over `B = A + d*ψ` at fixed `u`. The
/// returned connection never has a larger functional value than `A`.
pub fn relax_connection(
    u: &Section,
    a: &Gauge1Form,
    b: &BundleData,
    opts: &RelaxOptions,
) -> Result<Gauge1Form, SolveError> {
    check_shapes(u, a, b)?;
    let geom = b.geometry();
    let mut obj = ConnectionObjective { u, base: a.as_cochain(), shift: Cochain::zeros(geom, 1)?, bundle: b };
    let settings = NcgSettings {
        tol: opts.tol,
        max_iter: opts.max_iter,
        armijo: 1e-4,
        shrink: 0.5,
        restart_every: 50,
        first_step: 0.5,
    };
    let report = ncg::run(&mut obj, &settings, |_, _, _, _| {});
    let relaxed = obj.current();
    let best =
        if connection_functional(u, &relaxed, b)? <= connection_functional(u, a, b)? { relaxed } else { a.clone() };
    match report.outcome {
        Outcome::Converged => Ok(best),
        _ => Err(SolveError::ConnectionNotConverged { best: Box::new(best), residual: report.residual }),
    }
}

/// `(truncate(u), relax_connection(truncate(u), A))`, falling back to `A`
/// if the relaxed connection does not lower `G_ε`.
pub fn optimised_pair(
    u: &Section,
    a: &Gauge1Form,
    b: &BundleData,
    eps: f64,
    opts: &RelaxOptions,
) -> Result<(Section, Gauge1Form), SolveError> {
    let v = truncate(u);
    let relaxed = relax_connection(&v, a, b, opts)?;
    if g_energy(&v, &relaxed, b, eps)?.total <= g_energy(&v, a, b, eps)?.total {
        Ok((v, relaxed))
    } else {
        Ok((v, a.clone()))
    }
}

#[cfg(test)]
mod tests;
