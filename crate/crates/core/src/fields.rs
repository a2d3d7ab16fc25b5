//! Discrete energies `G_ε(u, A)` and `E_ε(u)`, their exact gradients,
//! truncation of `|u|`, and the rescaled energy density.
//!
//! Quadrature: potential on vertices, kinetic on edges, curvature on
//! plaquettes, each sample weighted by the full cell volume `Π h_i`.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::bundle::{check_shapes, curvature, BundleData, BundleError, Gauge1Form, Section};
use crate::lattice::{codifferential, Cochain};
use crate::util::det_sum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldsError {
    #[error("epsilon > 0 required, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsilonOutOfRange(f64),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `½ ∫ |D_A u|²`
    pub kinetic: f64,
    /// `∫ (1 − |u|²)² / 4ε²`
    pub potential: f64,
    /// `½ ∫ |F_A|²`
    pub curvature: f64,
    pub total: f64,
    pub epsilon: f64,
}

impl EnergyBreakdown {
    fn new(kinetic: f64, potential: f64, curvature: f64, epsilon: f64) -> Self {
        Self { kinetic, potential, curvature, total: kinetic + potential + curvature, epsilon }
    }

    /// Flat `key = value` record with 17 significant digits.
    pub fn to_record(&self) -> String {
        format!(
            "epsilon = {:.16e}\nkinetic = {:.16e}\npotential = {:.16e}\ncurvature = {:.16e}\ntotal = {:.16e}\n",
            self.epsilon, self.kinetic, self.potential, self.curvature, self.total
        )
    }
}

impl fmt::Display for EnergyBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "G = {:.10} (kinetic {:.10}, potential {:.10}, curvature {:.10}) at eps = {}",
            self.total, self.kinetic, self.potential, self.curvature, self.epsilon
        )
    }
}

fn check_eps(eps: f64) -> Result<(), FieldsError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(FieldsError::NonPositiveEpsilon(eps))
    }
}

/// `exp(−i(θ⁰_e + h A_e))` for every edge, axis-major.
pub(crate) fn link_factors(a: &Gauge1Form, b: &BundleData) -> Vec<Complex64> {
    let geom = b.geometry();
    let ns = geom.n_sites();
    let mut out = vec![Complex64::new(0.0, 0.0); geom.dim() * ns];
    for (axis, chunk) in out.chunks_mut(ns).enumerate() {
        chunk.par_iter_mut().enumerate().for_each(|(s, w)| *w = Complex64::from_polar(1.0, -b.link_phase(a, axis, s)));
    }
    out
}

/// `½ Σ_i |(D_A u)_{s,i}|²` (density, not yet volume weighted).
#[inline]
fn kinetic_at(u: &[Complex64], links: &[Complex64], b: &BundleData, s: usize) -> f64 {
    let geom = b.geometry();
    let ns = geom.n_sites();
    let mut acc = 0.0;
    for axis in 0..geom.dim() {
        let h = geom.spacings()[axis];
        let y = geom.plus(axis, s);
        let a = (u[y] * links[axis * ns + s] - u[s]) / h;
        acc += 0.5 * a.norm_sqr();
    }
    acc
}

#[inline]
fn potential_density(z: Complex64, eps: f64) -> f64 {
    let t = 1.0 - z.norm_sqr();
    t * t / (4.0 * eps * eps)
}

/// `G_ε(u, A)`.
pub fn g_energy(u: &Section, a: &Gauge1Form, b: &BundleData, eps: f64) -> Result<EnergyBreakdown, FieldsError> {
    check_eps(eps)?;
    check_shapes(u, a, b)?;
    let geom = b.geometry();
    let w = geom.cell_volume();
    let links = link_factors(a, b);
    let uv = u.values();
    let kinetic = det_sum(geom.n_sites(), |s| kinetic_at(uv, &links, b, s)) * w;
    let potential = det_sum(geom.n_sites(), |s| potential_density(uv[s], eps)) * w;
    let f = curvature(a, b)?;
    let fv = f.values();
    let curv = det_sum(fv.len(), |i| 0.5 * fv[i] * fv[i]) * w;
    Ok(EnergyBreakdown::new(kinetic, potential, curv, eps))
}

/// `E_ε(u)`: `G_ε` at `A = 0` without the curvature term.
pub fn e_energy(u: &Section, b: &BundleData, eps: f64) -> Result<EnergyBreakdown, FieldsError> {
    check_eps(eps)?;
    let a = Gauge1Form::zeros(b.geometry());
    check_shapes(u, &a, b)?;
    let geom = b.geometry();
    let w = geom.cell_volume();
    let links = link_factors(&a, b);
    let uv = u.values();
    let kinetic = det_sum(geom.n_sites(), |s| kinetic_at(uv, &links, b, s)) * w;
    let potential = det_sum(geom.n_sites(), |s| potential_density(uv[s], eps)) * w;
    Ok(EnergyBreakdown::new(kinetic, potential, 0.0, eps))
}

/// Supercurrent `j_e = Im(conj(u(x)) u(y) e^{−iφ_e}) / h` from precomputed links.
pub(crate) fn supercurrent_from_links(u: &Section, links: &[Complex64], b: &BundleData) -> Cochain {
    let geom = b.geometry();
    let ns = geom.n_sites();
    let uv = u.values();
    let mut j = Cochain::zeros(geom, 1).unwrap();
    for axis in 0..geom.dim() {
        let h = geom.spacings()[axis];
        j.component_mut(axis).par_iter_mut().enumerate().for_each(|(s, o)| {
            let y = geom.plus(axis, s);
            *o = (uv[s].conj() * uv[y] * links[axis * ns + s]).im / h;
        });
    }
    j
}

/// Gradient of `G_ε` with respect to the real unknowns.
#[derive(Debug, Clone)]
pub struct Gradient {
    /// `∂G/∂Re u + i ∂G/∂Im u` per vertex.
    pub section: Vec<Complex64>,
    /// `∂G/∂A_e` per edge; equals `(d*F_A − j(u, A)) · Π h`.
    pub gauge: Cochain,
}

impl Gradient {
    /// Sup-norm of the L² gradient (partials divided by the cell volume).
    pub fn density_sup_norm(&self) -> f64 {
        let w = self.gauge.geometry().cell_volume();
        let su = self.section.iter().fold(0.0f64, |m, z| m.max(z.re.abs()).max(z.im.abs()));
        su.max(self.gauge.max_abs()) / w
    }
}

/// Exact gradient of the discrete `G_ε`.
pub fn g_gradient(u: &Section, a: &Gauge1Form, b: &BundleData, eps: f64) -> Result<Gradient, FieldsError> {
    check_eps(eps)?;
    check_shapes(u, a, b)?;
    let geom = b.geometry();
    let ns = geom.n_sites();
    let dim = geom.dim();
    let w = geom.cell_volume();
    let links = link_factors(a, b);
    let uv = u.values();
    let h = geom.spacings();

    let edge_diff =
        |axis: usize, s: usize| -> Complex64 { (uv[geom.plus(axis, s)] * links[axis * ns + s] - uv[s]) / h[axis] };
    let inv_eps2 = 1.0 / (eps * eps);
    let section: Vec<Complex64> = (0..ns)
        .into_par_iter()
        .map(|s| {
            let mut g = -uv[s] * ((1.0 - uv[s].norm_sqr()) * inv_eps2);
            for axis in 0..dim {
                let m = geom.minus(axis, s);
                g -= edge_diff(axis, s) / h[axis];
                g += edge_diff(axis, m) * links[axis * ns + m].conj() / h[axis];
            }
            g * w
        })
        .collect();

    let f = curvature(a, b)?;
    let mut gauge = codifferential(&f).expect("degree 2");
    let j = supercurrent_from_links(u, &links, b);
    gauge.axpy(-1.0, &j);
    gauge.values_mut().iter_mut().for_each(|v| *v *= w);
    Ok(Gradient { section, gauge })
}

/// `v = u` where `|u| ≤ 1`, `u/|u|` elsewhere.
pub fn truncate(u: &Section) -> Section {
    let mut v = u.clone();
    for z in v.values_mut() {
        let r = z.norm();
        if r > 1.0 {
            *z /= r;
            // rounding may leave the modulus one ulp above 1
            while z.norm() > 1.0 {
                *z *= 1.0 - f64::EPSILON;
            }
        }
    }
    v
}

/// Rescaled density `μ_ε` per vertex: edge terms split between both ends,
/// plaquette terms between the four corners, all divided by `|log ε|`.
pub fn energy_density(u: &Section, a: &Gauge1Form, b: &BundleData, eps: f64) -> Result<Cochain, FieldsError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FieldsError::EpsilonOutOfRange(eps));
    }
    check_shapes(u, a, b)?;
    let geom = b.geometry();
    let ns = geom.n_sites();
    let dim = geom.dim();
    let links = link_factors(a, b);
    let uv = u.values();
    let h = geom.spacings();
    let f = curvature(a, b)?;
    let log_eps = eps.ln().abs();
    let planes = geom.components(2).to_vec();

    let edge_kin = |axis: usize, s: usize| -> f64 {
        0.5 * ((uv[geom.plus(axis, s)] * links[axis * ns + s] - uv[s]) / h[axis]).norm_sqr()
    };
    let values: Vec<f64> = (0..ns)
        .into_par_iter()
        .map(|s| {
            let mut acc = potential_density(uv[s], eps);
            for axis in 0..dim {
                acc += 0.5 * (edge_kin(axis, s) + edge_kin(axis, geom.minus(axis, s)));
            }
            for (p, axes) in planes.iter().enumerate() {
                let (i, j) = (axes[0], axes[1]);
                let mi = geom.minus(i, s);
                let corners = [s, mi, geom.minus(j, s), geom.minus(j, mi)];
                for c in corners {
                    let fp = f.get(p, c);
                    acc += 0.25 * 0.5 * fp * fp;
                }
            }
            acc / log_eps
        })
        .collect();
    Ok(Cochain::from_values(geom, 0, values).unwrap())
}

/// `G_ε(u + du, A + dA) − G_ε(u, A)` evaluated cell by cell from local
/// difference formulas, so the result keeps its relative accuracy when the
/// change is far below the round-off of the totals.
pub(crate) fn energy_change(
    u: &Section,
    a: &Gauge1Form,
    b: &BundleData,
    eps: f64,
    du: &[Complex64],
    da: &[f64],
    include_potential: bool,
) -> f64 {
    let geom = b.geometry();
    let ns = geom.n_sites();
    let dim = geom.dim();
    let h = geom.spacings();
    let w = geom.cell_volume();
    let uv = u.values();
    let theta0 = b.theta0();
    let av = a.values();
    let inv4e2 = 1.0 / (4.0 * eps * eps);
    let f = curvature(a, b).expect("shapes checked by caller");
    let planes = geom.components(2).to_vec();

    let per_site = |s: usize| -> f64 {
        let mut acc = 0.0;
        if include_potential {
            let z = uv[s];
            let dz = du[s];
            let m = (dz * (z * 2.0 + dz).conj()).re;
            let r0 = z.norm_sqr();
            let r1 = (z + dz).norm_sqr();
            acc += -m * (2.0 - r0 - r1) * inv4e2;
        }
        for axis in 0..dim {
            let y = geom.plus(axis, s);
            let e = axis * ns + s;
            let phi = theta0.values()[e] + h[axis] * av[e];
            let wbar = Complex64::from_polar(1.0, -phi);
            let t = h[axis] * da[e];
            // e^{−it} − 1 = −2i sin(t/2) e^{−it/2}
            let dlink = wbar * Complex64::new(0.0, -2.0 * (0.5 * t).sin()) * Complex64::from_polar(1.0, -0.5 * t);
            let wbar1 = wbar + dlink;
            let a0 = (uv[y] * wbar - uv[s]) / h[axis];
            let delta = (du[y] * wbar1 + uv[y] * dlink - du[s]) / h[axis];
            acc += 0.5 * (delta * (a0 * 2.0 + delta).conj()).re;
        }
        for (p, axes) in planes.iter().enumerate() {
            let (i, j) = (axes[0], axes[1]);
            let dfp = (da[j * ns + geom.plus(i, s)] - da[j * ns + s]) / h[i]
                - (da[i * ns + geom.plus(j, s)] - da[i * ns + s]) / h[j];
            acc += 0.5 * dfp * (2.0 * f.get(p, s) + dfp);
        }
        acc
    };
    det_sum(ns, per_site) * w
}
