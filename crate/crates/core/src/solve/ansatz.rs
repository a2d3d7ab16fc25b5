//! Recovery-sequence initial data: sections with prescribed point or line
//! singularities in the bundle frame, and seeded random perturbations of
//! the constant section.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::SolveError;
use crate::bundle::{BundleData, Gauge1Form, Section};
use crate::hodge::solve_poisson;
use crate::lattice::{codifferential, TorusGeometry};
use crate::util::{seeded_rng, wrap_angle};

/// Radial modulus profile around the singular set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoreProfile {
    /// `f(r) = min(r, 1)`.
    #[default]
    Linear,
}

impl CoreProfile {
    pub fn modulus(self, r: f64) -> f64 {
        match self {
            CoreProfile::Linear => r.min(1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CoreProfile::Linear => "linear",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "linear" => Some(CoreProfile::Linear),
            _ => None,
        }
    }
}

/// A point (2D) or straight line (3D) of unit winding. The position is
/// given in the transverse plane and snapped to the enclosing plaquette's
/// centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Defect {
    pub position: [f64; 2],
    pub winding: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzSpec {
    /// Direction of the vortex lines in three dimensions; `None` in two.
    pub axis: Option<usize>,
    pub defects: Vec<Defect>,
    pub profile: CoreProfile,
}

impl AnsatzSpec {
    /// `|c|` unit defects spread along the diagonal of the one nontrivial
    /// plane, the first one at a plaquette centre near the middle.
    pub fn centered(b: &BundleData) -> Result<Self, SolveError> {
        let geom = b.geometry();
        let planes = b.nontrivial_planes();
        let (axis, plane) = match (geom.dim(), planes.as_slice()) {
            (2, _) => (None, (0, 1)),
            (3, []) => (Some(2), (0, 1)),
            (3, [(i, j)]) => (Some(3 - i - j), (*i, *j)),
            _ => return Err(SolveError::InvalidAnsatz("more than one nontrivial plane".into())),
        };
        let c = b.chern(plane.0, plane.1);
        let count = c.unsigned_abs() as usize;
        let (ni, nj) = (geom.sites()[plane.0], geom.sites()[plane.1]);
        let (hi, hj) = (geom.spacings()[plane.0], geom.spacings()[plane.1]);
        let defects = (0..count)
            .map(|m| {
                let fi = ((ni * (2 * m + 1)) / (2 * count)) as f64 + 0.5;
                let fj = ((nj * (2 * m + 1)) / (2 * count)) as f64 + 0.5;
                Defect { position: [fi * hi, fj * hj], winding: c.signum() }
            })
            .collect();
        Ok(Self { axis, defects, profile: CoreProfile::Linear })
    }

    fn plane(&self, geom: &TorusGeometry) -> Result<(usize, usize), SolveError> {
        match (geom.dim(), self.axis) {
            (2, None) => Ok((0, 1)),
            (3, Some(k)) if k < 3 => {
                let t: Vec<usize> = (0..3).filter(|&a| a != k).collect();
                Ok((t[0], t[1]))
            }
            (2, Some(_)) => Err(SolveError::InvalidAnsatz("a line axis needs three dimensions".into())),
            _ => Err(SolveError::InvalidAnsatz("three dimensions need a line axis in 0..3".into())),
        }
    }
}

fn periodic_gap(x: f64, y: f64, l: f64) -> f64 {
    let d = (x - y).rem_euclid(l);
    d.min(l - d)
}

/// Section with the prescribed singularities and `A = 0`.
pub fn vortex_ansatz(spec: &AnsatzSpec, b: &BundleData, eps: f64) -> Result<(Section, Gauge1Form), SolveError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(crate::fields::FieldsError::NonPositiveEpsilon(eps).into());
    }
    let geom = b.geometry();
    let (i, j) = spec.plane(geom)?;
    let total: i64 = spec.defects.iter().map(|d| d.winding).sum();
    if total != b.chern(i, j) {
        return Err(SolveError::WindingMismatch { plane: (i, j), expected: b.chern(i, j), got: total });
    }
    for &(p, q) in &b.nontrivial_planes() {
        if (p, q) != (i, j) {
            return Err(SolveError::WindingMismatch { plane: (p, q), expected: b.chern(p, q), got: 0 });
        }
    }
    for d in &spec.defects {
        if d.winding.abs() != 1 {
            return Err(SolveError::InvalidAnsatz("each defect must have winding ±1".into()));
        }
        if !d.position.iter().all(|x| x.is_finite()) {
            return Err(SolveError::InvalidAnsatz("defect position must be finite".into()));
        }
    }

    let n = geom.sites();
    let h = geom.spacings();
    let l = geom.lengths();
    // lower plaquette corner and snapped centre of every defect
    let cells: Vec<(usize, usize, [f64; 2], i64)> = spec
        .defects
        .iter()
        .map(|d| {
            let ci = ((d.position[0] / h[i]).floor() as i64).rem_euclid(n[i] as i64) as usize;
            let cj = ((d.position[1] / h[j]).floor() as i64).rem_euclid(n[j] as i64) as usize;
            (ci, cj, [(ci as f64 + 0.5) * h[i], (cj as f64 + 0.5) * h[j]], d.winding)
        })
        .collect();

    let p = geom.plane_index(i, j);
    let mut source = -b.f0();
    let weight = 2.0 * PI / (h[i] * h[j]);
    for s in 0..geom.n_sites() {
        for &(ci, cj, _, w) in &cells {
            if geom.coord(s, i) == ci && geom.coord(s, j) == cj {
                source.component_mut(p)[s] += weight * w as f64;
            }
        }
    }
    let mut v = codifferential(&solve_poisson(&source)?)?;

    // edge phase θ⁰ + h v, with harmonic constants closing every base cycle
    let theta0 = b.theta0();
    for axis in 0..geom.dim() {
        let mut site = 0;
        let mut holonomy = 0.0;
        for _ in 0..n[axis] {
            holonomy += theta0.get(axis, site) + h[axis] * v.get(axis, site);
            site = geom.plus(axis, site);
        }
        let shift = -wrap_angle(holonomy) / l[axis];
        v.component_mut(axis).iter_mut().for_each(|x| *x += shift);
    }
    let edge = |axis: usize, s: usize| theta0.get(axis, s) + h[axis] * v.get(axis, s);

    let mut phase = vec![0.0; geom.n_sites()];
    for s in 1..geom.n_sites() {
        let axis = (0..geom.dim()).rev().find(|&a| geom.coord(s, a) > 0).unwrap();
        let prev = geom.minus(axis, s);
        phase[s] = phase[prev] + edge(axis, prev);
    }

    let u = Section::from_fn(geom, |s| {
        let x = geom.position(s);
        let modulus: f64 = cells
            .iter()
            .map(|&(_, _, c, _)| {
                let di = periodic_gap(x[i], c[0], l[i]);
                let dj = periodic_gap(x[j], c[1], l[j]);
                spec.profile.modulus((di * di + dj * dj).sqrt() / eps)
            })
            .product();
        Complex64::from_polar(modulus, phase[s])
    });
    Ok((u, Gauge1Form::zeros(geom)))
}

/// `u = 1 + amplitude · (ξ + iη)` with `ξ, η` uniform in `[−1, 1]`.
pub fn random_section(geom: &TorusGeometry, seed: u64, amplitude: f64) -> Section {
    let mut rng = seeded_rng(seed);
    Section::from_fn(geom, |_| {
        let re = rng.gen_range(-1.0..=1.0);
        let im = rng.gen_range(-1.0..=1.0);
        Complex64::new(1.0 + amplitude * re, amplitude * im)
    })
}

/// The vortex ansatz for nontrivial bundles, a seeded perturbation of
/// `u ≡ 1` (amplitude 0.1) for the trivial one; `A = 0` in both cases.
pub fn default_initial(b: &BundleData, eps: f64, seed: u64) -> Result<(Section, Gauge1Form), SolveError> {
    let geom = b.geometry();
    if b.is_trivial() {
        return Ok((random_section(geom, seed, 0.1), Gauge1Form::zeros(geom)));
    }
    vortex_ansatz(&AnsatzSpec::centered(b)?, b, eps)
}
