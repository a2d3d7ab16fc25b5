//! Invariant suite on small lattices, run by `vortexlab selftest`.
//!
//! The exterior derivative and codifferential are taken from an
//! [`Operators`] table so that a harness can substitute a broken operator
//! and watch the corresponding invariant fail.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bundle::{build_background, build_background_2d, slice_fluxes, BundleData, Gauge1Form, Section};
use crate::fields::{g_energy, g_gradient, truncate};
use crate::gauge::{apply_gauge, coulomb_fix, GaugePhase};
use crate::hodge::{hodge_decompose, residual, solve_london, solve_poisson};
use crate::io::{parse_cochain, write_cochain};
use crate::lattice::{
    binomial, codifferential, exterior_derivative, inner_product, kernel_dimension, Cochain, LatticeError,
    TorusGeometry,
};
use crate::solve::{
    ampere_residual, connection_functional, default_initial, minimize, relax_connection, MinimizeOptions, RelaxOptions,
};
use crate::util::seeded_rng;
use crate::vortex::{supercurrent, vorticity};

pub type CochainOp = fn(&Cochain) -> Result<Cochain, LatticeError>;

#[derive(Clone, Copy)]
pub struct Operators {
    pub d: CochainOp,
    pub codiff: CochainOp,
}

impl Default for Operators {
    fn default() -> Self {
        Self { d: exterior_derivative, codiff: codifferential }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub module: &'static str,
    pub invariant: &'static str,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<8} {:<44} measured {:.3e} (limit {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.module,
            self.invariant,
            self.measured,
            self.threshold
        )
    }
}

fn check(module: &'static str, invariant: &'static str, measured: f64, threshold: f64) -> Check {
    Check { module, invariant, measured, threshold, passed: measured <= threshold }
}

fn geometries() -> Vec<TorusGeometry> {
    vec![TorusGeometry::new(&[6, 5], &[1.0, 1.7]).unwrap(), TorusGeometry::new(&[4, 5, 6], &[1.0, 0.8, 1.3]).unwrap()]
}

fn random_cochain(g: &TorusGeometry, k: usize, rng: &mut ChaCha8Rng) -> Cochain {
    Cochain::from_fn(g, k, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
}

fn random_pair(g: &TorusGeometry, rng: &mut ChaCha8Rng, umax: f64) -> (Section, Gauge1Form) {
    let u = Section::from_fn(g, |_| Complex64::from_polar(rng.gen_range(0.2..umax), rng.gen_range(-PI..PI)));
    let a = Cochain::from_fn(g, 1, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
    (u, Gauge1Form::from_cochain(a).unwrap())
}

fn chern_for(g: &TorusGeometry) -> Vec<Vec<i64>> {
    if g.dim() == 2 {
        vec![vec![0, 1], vec![-1, 0]]
    } else {
        vec![vec![0, 1, -1], vec![-1, 0, 2], vec![1, -2, 0]]
    }
}

fn lattice_checks(ops: &Operators, rng: &mut ChaCha8Rng, out: &mut Vec<Check>) {
    let (mut dd, mut adj, mut kernel) = (0.0f64, 0.0f64, 0.0f64);
    for g in geometries() {
        let scale = 1.0 / (g.min_spacing() * g.min_spacing());
        for k in 0..=g.dim() {
            let w = random_cochain(&g, k, rng);
            if k + 2 <= g.dim() {
                let twice = (ops.d)(&(ops.d)(&w).unwrap()).unwrap();
                dd = dd.max(twice.max_abs() / scale);
            }
            if k < g.dim() {
                let eta = random_cochain(&g, k + 1, rng);
                let dw = (ops.d)(&w).unwrap();
                let se = (ops.codiff)(&eta).unwrap();
                let lhs = inner_product(&dw, &eta).unwrap();
                let rhs = inner_product(&w, &se).unwrap();
                adj = adj.max((lhs - rhs).abs() / (dw.norm() * eta.norm() + w.norm() * se.norm()));
            }
            kernel = kernel.max((kernel_dimension(&g, k, 1e-9) as f64 - binomial(g.dim(), k) as f64).abs());
        }
    }
    out.push(check("lattice", "d∘d = 0 (relative)", dd, 1e-12));
    out.push(check("lattice", "<dω,η> = <ω,d*η> (relative)", adj, 1e-12));
    out.push(check("lattice", "dim ker(−Δ) = C(n,k)", kernel, 0.0));
}

fn bundle_checks(out: &mut Vec<Check>) {
    let (mut flux, mut hol) = (0.0f64, 0.0f64);
    for g in geometries() {
        let chern = chern_for(&g);
        let b = build_background(&g, &chern).unwrap();
        hol = hol.max(b.holonomy_residual());
        for i in 0..g.dim() {
            for j in i + 1..g.dim() {
                for s in slice_fluxes(b.f0(), i, j) {
                    flux = flux.max((s - chern[i][j] as f64).abs());
                }
            }
        }
    }
    out.push(check("bundle", "slice flux of F0 = c_ij", flux, 1e-12));
    out.push(check("bundle", "background holonomy residual", hol, 1e-12));
}

fn fields_checks(rng: &mut ChaCha8Rng, out: &mut Vec<Check>) {
    let g = TorusGeometry::uniform(2, 6, 1.0).unwrap();
    let b = build_background_2d(&g, 1).unwrap();
    let eps = 0.3;
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let (u, a) = random_pair(&g, rng, 1.5);
        let grad = g_gradient(&u, &a, &b, eps).unwrap();
        let step = 1e-5;
        for _ in 0..4 {
            let s = rng.gen_range(0..g.n_sites());
            let mut up = u.clone();
            let mut um = u.clone();
            up.values_mut()[s] += Complex64::new(step, 0.0);
            um.values_mut()[s] -= Complex64::new(step, 0.0);
            let fd =
                (g_energy(&up, &a, &b, eps).unwrap().total - g_energy(&um, &a, &b, eps).unwrap().total) / (2.0 * step);
            worst = worst.max((fd - grad.section[s].re).abs() / grad.section[s].re.abs().max(1e-3));
            let e = rng.gen_range(0..g.n_cells(1));
            let mut ap = a.clone();
            let mut am = a.clone();
            ap.as_cochain_mut().values_mut()[e] += step;
            am.as_cochain_mut().values_mut()[e] -= step;
            let fd =
                (g_energy(&u, &ap, &b, eps).unwrap().total - g_energy(&u, &am, &b, eps).unwrap().total) / (2.0 * step);
            let an = grad.gauge.values()[e];
            worst = worst.max((fd - an).abs() / an.abs().max(1e-3));
        }
    }
    out.push(check("fields", "gradient vs central differences", worst, 1e-6));

    let mut rise = f64::NEG_INFINITY;
    for _ in 0..20 {
        let (u, a) = random_pair(&g, rng, 2.0);
        let before = g_energy(&u, &a, &b, eps).unwrap().total;
        let after = g_energy(&truncate(&u), &a, &b, eps).unwrap().total;
        rise = rise.max(after - before);
    }
    out.push(check("fields", "truncation never raises G", rise, 0.0));
}

fn gauge_checks(rng: &mut ChaCha8Rng, out: &mut Vec<Check>) {
    let (mut energy, mut current, mut vort, mut topo, mut coulomb) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for g in geometries() {
        let b = build_background(&g, &chern_for(&g)).unwrap();
        for _ in 0..3 {
            let (u, a) = random_pair(&g, rng, 1.5);
            let th = random_cochain(&g, 0, rng);
            let windings = (0..g.dim()).map(|_| rng.gen_range(-1..=1)).collect();
            let phase = GaugePhase::with_windings(&th * 4.0, windings).unwrap();
            let (u2, a2) = apply_gauge(&u, &a, &phase).unwrap();
            let e1 = g_energy(&u, &a, &b, 0.3).unwrap().total;
            let e2 = g_energy(&u2, &a2, &b, 0.3).unwrap().total;
            energy = energy.max((e1 - e2).abs() / e1);
            let j1 = supercurrent(&u, &a, &b).unwrap();
            let j2 = supercurrent(&u2, &a2, &b).unwrap();
            current = current.max((&j1 - &j2).max_abs() * g.min_spacing());
            let v1 = vorticity(&u, &a, &b).unwrap();
            let v2 = vorticity(&u2, &a2, &b).unwrap();
            vort = vort.max(v1.windings().iter().zip(v2.windings()).filter(|(x, y)| x != y).count() as f64);
            topo = topo.max(if v1.matches_chern(&b) { 0.0 } else { 1.0 });
            let (_, fixed, _) = coulomb_fix(&u, &a).unwrap();
            let div = codifferential(fixed.as_cochain()).unwrap().norm();
            coulomb = coulomb.max(div / (1.0 + a.as_cochain().norm()));
        }
    }
    out.push(check("gauge", "G invariant under gauge (relative)", energy, 1e-10));
    out.push(check("gauge", "h·j invariant under gauge", current, 1e-12));
    out.push(check("vortex", "vorticity invariant under gauge", vort, 0.0));
    out.push(check("vortex", "slice sums of vorticity = c_ij", topo, 0.0));
    out.push(check("gauge", "Coulomb gauge ‖d*A‖/(1+‖A‖)", coulomb, 1e-9));
}

fn hodge_checks(rng: &mut ChaCha8Rng, out: &mut Vec<Check>) {
    let (mut recon, mut ortho, mut solve) = (0.0f64, 0.0f64, 0.0f64);
    for g in geometries() {
        for k in 0..=g.dim() {
            let w = random_cochain(&g, k, rng);
            let parts = hodge_decompose(&w);
            let (ex, co, h) = (parts.exact_part(), parts.coexact_part(), parts.harmonic.clone());
            recon = recon.max((&(&(&ex + &co) + &h) - &w).max_abs());
            let ip = |a: &Cochain, b: &Cochain| inner_product(a, b).unwrap().abs();
            ortho = ortho.max(ip(&ex, &co).max(ip(&ex, &h)).max(ip(&co, &h)) / w.norm().powi(2));
            let v = solve_london(&w);
            solve = solve.max(residual(&v, &w, 1.0));
            let mean_free = &w - &h;
            let p = solve_poisson(&mean_free).unwrap();
            solve = solve.max(residual(&p, &mean_free, 0.0));
        }
    }
    out.push(check("hodge", "dφ + d*ψ + ξ = ω", recon, 1e-10));
    out.push(check("hodge", "pairwise orthogonality (relative)", ortho, 1e-10));
    out.push(check("hodge", "London/Poisson solver residual", solve, 1e-10));
}

fn solve_checks(rng: &mut ChaCha8Rng, out: &mut Vec<Check>) {
    let g = TorusGeometry::uniform(2, 12, 1.0).unwrap();
    let b: BundleData = build_background_2d(&g, 1).unwrap();
    let eps = 0.25;
    let (u, a) = default_initial(&b, eps, 0).unwrap();
    let opts = MinimizeOptions::default();
    match minimize(&u, &a, &b, eps, &opts) {
        Ok(r) => {
            let rise = r.energy_trace.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
            out.push(check("solve", "minimizer gradient sup-norm", r.grad_norm, opts.grad_tol));
            out.push(check("solve", "accepted steps never raise G", rise.max(0.0), 0.0));
            out.push(check("solve", "London residual at minimizer", r.london_residual, 100.0 * opts.grad_tol));
            let amp = ampere_residual(&r.section, &r.gauge_field, &b).unwrap();
            out.push(check("solve", "‖d*F − j‖ at minimizer", amp, 100.0 * opts.grad_tol));
            let ok = vorticity(&r.section, &r.gauge_field, &b).map(|v| v.matches_chern(&b)).unwrap_or(false);
            out.push(check("solve", "minimizer slice sums = c_ij", if ok { 0.0 } else { 1.0 }, 0.0));
        }
        Err(e) => {
            let g = e.best().map(|r| r.grad_norm).unwrap_or(f64::INFINITY);
            out.push(check("solve", "minimizer gradient sup-norm", g, opts.grad_tol));
        }
    }
    let mut rise = f64::NEG_INFINITY;
    for _ in 0..3 {
        let (u, a) = random_pair(&g, rng, 2.0);
        let relaxed = match relax_connection(&u, &a, &b, &RelaxOptions::default()) {
            Ok(r) => r,
            Err(crate::solve::SolveError::ConnectionNotConverged { best, .. }) => *best,
            Err(_) => a.clone(),
        };
        rise = rise.max(connection_functional(&u, &relaxed, &b).unwrap() - connection_functional(&u, &a, &b).unwrap());
    }
    out.push(check("solve", "connection relaxation never raises 𝓕", rise.max(0.0), 0.0));
}

fn io_checks(rng: &mut ChaCha8Rng, out: &mut Vec<Check>) {
    let mut mismatches = 0.0;
    for g in geometries() {
        for k in 0..=g.dim() {
            let c = &random_cochain(&g, k, rng) * 1e3;
            if parse_cochain(&write_cochain(&c)).ok().as_ref() != Some(&c) {
                mismatches += 1.0;
            }
        }
    }
    out.push(check("lattice", "field dump round trip", mismatches, 0.0));
}

/// Run every check with the library operators.
pub fn run_selftest() -> Vec<Check> {
    run_selftest_with(&Operators::default())
}

pub fn run_selftest_with(ops: &Operators) -> Vec<Check> {
    let mut rng = seeded_rng(0x5e1f);
    let mut out = Vec::new();
    lattice_checks(ops, &mut rng, &mut out);
    bundle_checks(&mut out);
    fields_checks(&mut rng, &mut out);
    gauge_checks(&mut rng, &mut out);
    hodge_checks(&mut rng, &mut out);
    solve_checks(&mut rng, &mut out);
    io_checks(&mut rng, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let checks = run_selftest();
        for c in &checks {
            assert!(c.passed, "{c}");
        }
        assert!(checks.len() >= 20);
    }

    fn broken_codiff(c: &Cochain) -> Result<Cochain, LatticeError> {
        codifferential(c).map(|v| -&v)
    }

    #[test]
    fn sign_error_in_codifferential_is_caught() {
        let ops = Operators { codiff: broken_codiff, ..Operators::default() };
        let checks = run_selftest_with(&ops);
        let adj = checks.iter().find(|c| c.invariant.starts_with("<dω")).unwrap();
        assert!(!adj.passed);
    }
}
