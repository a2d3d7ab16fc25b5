//! Gauge transformations `(u, A) ↦ (e^{iθ}u, A + dθ)` and Coulomb-type
//! gauge fixing.
//!
//! A phase is a periodic (unwrapped) vertex field plus integer windings
//! `m_i`, so that large gauge transformations `θ = 2π m_i x_i / L_i` have an
//! honest closed differential.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bundle::{BundleError, Gauge1Form, Section};
use crate::hodge::hodge_decompose;
use crate::lattice::{exterior_derivative, Cochain, LatticeError, TorusGeometry};

#[derive(Debug, Clone, PartialEq)]
pub struct GaugePhase {
    theta: Cochain,
    windings: Vec<i64>,
}

impl GaugePhase {
    pub fn zero(geom: &TorusGeometry) -> Self {
        Self { theta: Cochain::zeros(geom, 0).unwrap(), windings: vec![0; geom.dim()] }
    }

    /// Periodic phase field without windings.
    pub fn new(theta: Cochain) -> Result<Self, LatticeError> {
        if theta.degree() != 0 {
            return Err(LatticeError::DegreeMismatch(theta.degree(), 0));
        }
        let dim = theta.geometry().dim();
        Ok(Self { theta, windings: vec![0; dim] })
    }

    pub fn with_windings(theta: Cochain, windings: Vec<i64>) -> Result<Self, LatticeError> {
        let mut p = Self::new(theta)?;
        if windings.len() != p.windings.len() {
            return Err(LatticeError::LengthMismatch { expected: p.windings.len(), got: windings.len() });
        }
        p.windings = windings;
        Ok(p)
    }

    pub fn geometry(&self) -> &TorusGeometry {
        self.theta.geometry()
    }

    /// Periodic part of the phase.
    pub fn theta(&self) -> &Cochain {
        &self.theta
    }

    pub fn windings(&self) -> &[i64] {
        &self.windings
    }

    /// Full phase `θ(x) + Σ 2π m_i x_i / L_i` at a vertex.
    pub fn phase_at(&self, site: usize) -> f64 {
        let geom = self.geometry();
        let mut phase = self.theta.get(0, site);
        for (axis, &m) in self.windings.iter().enumerate() {
            if m != 0 {
                phase += 2.0 * PI * m as f64 * geom.coord(site, axis) as f64 / geom.sites()[axis] as f64;
            }
        }
        phase
    }

    /// `dθ`: the lattice derivative of the periodic part plus `2π m_i / L_i`
    /// on every `x_i`-edge.
    pub fn differential(&self) -> Cochain {
        let geom = self.geometry().clone();
        let mut d = exterior_derivative(&self.theta).expect("degree 0");
        for (axis, &m) in self.windings.iter().enumerate() {
            if m != 0 {
                let shift = 2.0 * PI * m as f64 / geom.lengths()[axis];
                d.component_mut(axis).iter_mut().for_each(|v| *v += shift);
            }
        }
        d
    }

    pub fn inverse(&self) -> Self {
        Self { theta: -&self.theta, windings: self.windings.iter().map(|m| -m).collect() }
    }
}

/// `(e^{iθ}u, A + dθ)`.
pub fn apply_gauge(u: &Section, a: &Gauge1Form, theta: &GaugePhase) -> Result<(Section, Gauge1Form), BundleError> {
    if u.geometry() != theta.geometry() || a.geometry() != theta.geometry() {
        return Err(BundleError::ShapeMismatch);
    }
    let geom = u.geometry();
    let rotated = Section::from_fn(geom, |s| u.values()[s] * Complex64::from_polar(1.0, theta.phase_at(s)));
    let shifted = a.as_cochain() + &theta.differential();
    Ok((rotated, Gauge1Form::from_cochain(shifted)?))
}

/// Integer `m` nearest to `t`, ties toward zero.
fn round_ties_toward_zero(t: f64) -> i64 {
    let m = (t.abs() - 0.5).ceil().max(0.0);
    (m as i64) * t.signum() as i64
}

/// Coulomb-type gauge: remove the exact part of `A` and reduce each
/// harmonic component into `[−π/L_i, π/L_i]` by a large gauge
/// transformation. Returns the transformed pair and the phase used.
pub fn coulomb_fix(u: &Section, a: &Gauge1Form) -> Result<(Section, Gauge1Form, GaugePhase), BundleError> {
    let geom = a.geometry().clone();
    let parts = hodge_decompose(a.as_cochain());
    let phi = parts.exact_potential.expect("degree 1 has an exact potential");
    let windings: Vec<i64> = (0..geom.dim())
        .map(|axis| {
            let xi = parts.harmonic.get(axis, 0);
            -round_ties_toward_zero(xi * geom.lengths()[axis] / (2.0 * PI))
        })
        .collect();
    let theta = GaugePhase::with_windings(-&phi, windings)?;
    let (u2, a2) = apply_gauge(u, a, &theta)?;
    Ok((u2, a2, theta))
}
