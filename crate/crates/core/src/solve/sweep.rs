//! ε-continuation: one minimization per ε with per-entry observables.

use std::fmt::Write as _;

use super::{default_initial, minimize, vortex_ansatz, AnsatzSpec, MinimizeOptions, MinimizerResult, SolveError};
use crate::bundle::{build_background, BundleData, Gauge1Form, Section};
use crate::lattice::TorusGeometry;
use crate::vortex::{h_minus1_distance, jacobian, vortex_mass, vorticity};

/// How the lattice is chosen along the sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepLattice {
    /// One lattice for every entry; each entry after the first starts from
    /// the previous minimizer.
    Fixed(TorusGeometry),
    /// `N_i = round(L_i / (ratio · ε))` per entry; every entry starts from
    /// the initial data rebuilt on its own lattice.
    Scaled { lengths: Vec<f64>, ratio: f64 },
}

/// Initial data of the first (fixed lattice) or every (scaled lattice) entry.
#[derive(Debug, Clone)]
pub enum SweepInit {
    /// Vortex ansatz for nontrivial bundles, seeded perturbation of `u ≡ 1`
    /// for the trivial one.
    Default {
        seed: u64,
    },
    Ansatz(AnsatzSpec),
    /// Explicit fields; fixed lattice only.
    Given(Section, Gauge1Form),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub sites: Vec<usize>,
    pub g_total: f64,
    pub g_over_log_eps: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub curvature: f64,
    pub vortex_mass: f64,
    pub chern_pairing: i64,
    pub london_residual: f64,
    /// `‖J/π − n/(h_i h_j)‖_{H⁻¹}` against the minimizer's own vorticity.
    pub hminus1_to_target: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    pub records: Vec<SweepRecord>,
}

impl SweepTable {
    pub const COLUMNS: [&'static str; 11] = [
        "epsilon",
        "G_total",
        "G_over_log_eps",
        "kinetic",
        "potential",
        "curvature",
        "vortex_mass",
        "chern_pairing",
        "london_residual",
        "hminus1_to_target",
        "iterations",
    ];

    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }

    /// Comma-separated table with a header row, floats at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = Self::COLUMNS.join(",");
        out.push('\n');
        for r in &self.records {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{}",
                r.epsilon,
                r.g_total,
                r.g_over_log_eps,
                r.kinetic,
                r.potential,
                r.curvature,
                r.vortex_mass,
                r.chern_pairing,
                r.london_residual,
                r.hminus1_to_target,
                r.iterations
            )
            .unwrap();
        }
        out
    }
}

fn check_eps_list(eps_list: &[f64]) -> Result<(), SolveError> {
    if eps_list.is_empty() {
        return Err(SolveError::InvalidSweep("empty epsilon list".into()));
    }
    if let Some(e) = eps_list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(SolveError::InvalidSweep(format!("epsilon > 0 and < 1 required, got {e}")));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SolveError::InvalidSweep("epsilon list must be strictly decreasing".into()));
    }
    Ok(())
}

fn check_resolution(geom: &TorusGeometry, eps: f64) -> Result<(), SolveError> {
    let h = geom.max_spacing();
    if h > 0.5 * eps * (1.0 + 1e-12) {
        return Err(SolveError::InvalidSweep(format!("lattice spacing {h} exceeds epsilon/2 = {}", 0.5 * eps)));
    }
    Ok(())
}

/// Plane reported in the Chern pairing column.
fn pairing_plane(b: &BundleData) -> (usize, usize) {
    b.nontrivial_planes().first().copied().unwrap_or((0, 1))
}

/// Observables of one minimizer.
pub(crate) fn record_for(result: &MinimizerResult, b: &BundleData) -> Result<SweepRecord, SolveError> {
    let geom = b.geometry();
    let eps = result.energy.epsilon;
    let (u, a) = (&result.section, &result.gauge_field);
    let v = vorticity(u, a, b)?;
    let (i, j) = pairing_plane(b);
    let jac = &jacobian(u, a, b)? * (1.0 / std::f64::consts::PI);
    Ok(SweepRecord {
        epsilon: eps,
        sites: geom.sites().to_vec(),
        g_total: result.energy.total,
        g_over_log_eps: result.energy.total / eps.ln().abs(),
        kinetic: result.energy.kinetic,
        potential: result.energy.potential,
        curvature: result.energy.curvature,
        vortex_mass: vortex_mass(&v, geom),
        chern_pairing: v.chern_pairing(i, j),
        london_residual: result.london_residual,
        hminus1_to_target: h_minus1_distance(&jac, &v.as_density())?,
        iterations: result.iterations,
        converged: result.converged,
        grad_norm: result.grad_norm,
    })
}

fn run_entry(
    u: &Section,
    a: &Gauge1Form,
    b: &BundleData,
    eps: f64,
    opts: &MinimizeOptions,
) -> Result<MinimizerResult, SolveError> {
    match minimize(u, a, b, eps, opts) {
        Ok(r) => Ok(r),
        Err(SolveError::MaxIterations { best }) | Err(SolveError::Stalled { best }) => Ok(*best),
        Err(e) => Err(e),
    }
}

fn initial_fields(init: &SweepInit, b: &BundleData, eps: f64) -> Result<(Section, Gauge1Form), SolveError> {
    match init {
        SweepInit::Default { seed } => default_initial(b, eps, *seed),
        SweepInit::Ansatz(spec) => vortex_ansatz(spec, b, eps),
        SweepInit::Given(u, a) => {
            if u.geometry() != b.geometry() || a.geometry() != b.geometry() {
                return Err(SolveError::InvalidSweep("initial fields do not match the lattice".into()));
            }
            Ok((u.clone(), a.clone()))
        }
    }
}

/// Minimize `G_ε` for every ε of a strictly decreasing list. Entries that
/// hit the iteration limit are kept with `converged = false`.
pub fn epsilon_sweep(
    chern: &[Vec<i64>],
    lattice: &SweepLattice,
    init: &SweepInit,
    eps_list: &[f64],
    opts: &MinimizeOptions,
) -> Result<(SweepTable, Vec<MinimizerResult>), SolveError> {
    check_eps_list(eps_list)?;
    let mut table = SweepTable::default();
    let mut results: Vec<MinimizerResult> = Vec::with_capacity(eps_list.len());
    match lattice {
        SweepLattice::Fixed(geom) => {
            for &eps in eps_list {
                check_resolution(geom, eps)?;
            }
            let b = build_background(geom, chern)?;
            for &eps in eps_list {
                let (u, a) = match results.last() {
                    Some(prev) => (prev.section.clone(), prev.gauge_field.clone()),
                    None => initial_fields(init, &b, eps)?,
                };
                let r = run_entry(&u, &a, &b, eps, opts)?;
                table.records.push(record_for(&r, &b)?);
                results.push(r);
            }
        }
        SweepLattice::Scaled { lengths, ratio } => {
            if !(*ratio > 0.0 && *ratio <= 0.5) {
                return Err(SolveError::InvalidSweep(format!(
                    "lattice ratio h/epsilon must lie in (0, 0.5], got {ratio}"
                )));
            }
            if matches!(init, SweepInit::Given(..)) {
                return Err(SolveError::InvalidSweep("explicit initial fields need a fixed lattice".into()));
            }
            for &eps in eps_list {
                let sites: Vec<usize> = lengths.iter().map(|l| (l / (ratio * eps)).round() as usize).collect();
                let geom = TorusGeometry::new(&sites, lengths)?;
                check_resolution(&geom, eps)?;
                let b = build_background(&geom, chern)?;
                let (u, a) = initial_fields(init, &b, eps)?;
                let r = run_entry(&u, &a, &b, eps, opts)?;
                table.records.push(record_for(&r, &b)?);
                results.push(r);
            }
        }
    }
    Ok((table, results))
}
