//! Hermitian line bundles over the torus, realized through Chern integers,
//! a background connection with constant curvature, and the compact
//! gauge-covariant difference operator.
//!
//! Sections are stored as periodic complex vertex fields in the global
//! frame fixed by the background link phases `θ⁰`; all bundle
//! nontriviality lives in `θ⁰` (Landau gauge with a seam correction).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::lattice::{exterior_derivative, Cochain, LatticeError, TorusGeometry};
use crate::util::wrap_angle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BundleError {
    #[error("Chern matrix must be {dim}x{dim}")]
    ChernShape { dim: usize },
    #[error("Chern matrix is not antisymmetric at ({0}, {1})")]
    NotAntisymmetric(usize, usize),
    #[error("field shapes do not match one geometry")]
    ShapeMismatch,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Complex vertex field `u` in the frame of the background connection.
#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    geom: TorusGeometry,
    values: Vec<Complex64>,
}

impl Section {
    pub fn constant(geom: &TorusGeometry, value: Complex64) -> Self {
        Self { geom: geom.clone(), values: vec![value; geom.n_sites()] }
    }

    pub fn from_fn(geom: &TorusGeometry, f: impl FnMut(usize) -> Complex64) -> Self {
        Self { geom: geom.clone(), values: (0..geom.n_sites()).map(f).collect() }
    }

    pub fn from_values(geom: &TorusGeometry, values: Vec<Complex64>) -> Result<Self, BundleError> {
        if values.len() != geom.n_sites() {
            return Err(LatticeError::LengthMismatch { expected: geom.n_sites(), got: values.len() }.into());
        }
        Ok(Self { geom: geom.clone(), values })
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geom
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `|u|²` as a 0-cochain.
    pub fn modulus_squared(&self) -> Cochain {
        Cochain::from_values(&self.geom, 0, self.values.iter().map(|z| z.norm_sqr()).collect()).expect("vertex count")
    }
}

/// Real 1-cochain `A` (component samples of the connection 1-form).
#[derive(Clone, Debug, PartialEq)]
pub struct Gauge1Form(Cochain);

impl Gauge1Form {
    pub fn zeros(geom: &TorusGeometry) -> Self {
        Self(Cochain::zeros(geom, 1).expect("dimension >= 1"))
    }

    pub fn from_cochain(c: Cochain) -> Result<Self, LatticeError> {
        if c.degree() != 1 {
            return Err(LatticeError::DegreeMismatch(c.degree(), 1));
        }
        Ok(Self(c))
    }

    pub fn as_cochain(&self) -> &Cochain {
        &self.0
    }

    pub fn as_cochain_mut(&mut self) -> &mut Cochain {
        &mut self.0
    }

    pub fn into_cochain(self) -> Cochain {
        self.0
    }

    pub fn geometry(&self) -> &TorusGeometry {
        self.0.geometry()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }
}

/// Chern integers, background link phases `θ⁰` and the constant reference
/// curvature `F₀_ij = 2π c_ij / (L_i L_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleData {
    chern: Vec<Vec<i64>>,
    theta0: Cochain,
    f0: Cochain,
}

impl BundleData {
    pub fn geometry(&self) -> &TorusGeometry {
        self.theta0.geometry()
    }

    /// Full antisymmetric Chern matrix.
    pub fn chern_matrix(&self) -> &[Vec<i64>] {
        &self.chern
    }

    pub fn chern(&self, i: usize, j: usize) -> i64 {
        self.chern[i][j]
    }

    pub fn is_trivial(&self) -> bool {
        self.chern.iter().flatten().all(|&c| c == 0)
    }

    /// Planes `(i, j)`, `i < j`, carrying a nonzero Chern number.
    pub fn nontrivial_planes(&self) -> Vec<(usize, usize)> {
        let n = self.chern.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.chern[i][j] != 0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn theta0(&self) -> &Cochain {
        &self.theta0
    }

    pub fn f0(&self) -> &Cochain {
        &self.f0
    }

    /// Rebuild from a stored Chern matrix and `θ⁰` field; the phases are
    /// checked against the flux they must carry.
    pub fn from_parts(chern: Vec<Vec<i64>>, theta0: Cochain) -> Result<Self, BundleError> {
        let geom = theta0.geometry().clone();
        check_chern(&geom, &chern)?;
        if theta0.degree() != 1 {
            return Err(LatticeError::DegreeMismatch(theta0.degree(), 1).into());
        }
        let f0 = reference_curvature(&geom, &chern);
        let b = Self { chern, theta0, f0 };
        if b.holonomy_residual() > 1e-9 {
            return Err(BundleError::ShapeMismatch);
        }
        Ok(b)
    }

    /// Phase `θ⁰_e + h_i A_e` of the edge based at `site` along `axis`.
    #[inline]
    pub fn link_phase(&self, a: &Gauge1Form, axis: usize, site: usize) -> f64 {
        let geom = self.geometry();
        self.theta0.get(axis, site) + geom.spacings()[axis] * a.as_cochain().get(axis, site)
    }

    /// Largest `|wrap(circulation(θ⁰) − h_i h_j F₀_ij)|` over all plaquettes.
    pub fn holonomy_residual(&self) -> f64 {
        let geom = self.geometry();
        let h = geom.spacings();
        let mut worst = 0.0f64;
        for (p, axes) in geom.components(2).iter().enumerate() {
            let (i, j) = (axes[0], axes[1]);
            for s in 0..geom.n_sites() {
                let circ = plaquette_circulation(&self.theta0, i, j, s);
                let r = wrap_angle(circ - h[i] * h[j] * self.f0.get(p, s));
                worst = worst.max(r.abs());
            }
        }
        worst
    }
}

/// Oriented sum of a 1-cochain's values around the `(i,j)`-plaquette at `s`.
pub(crate) fn plaquette_circulation(theta: &Cochain, i: usize, j: usize, s: usize) -> f64 {
    let g = theta.geometry();
    theta.get(i, s) + theta.get(j, g.plus(i, s)) - theta.get(i, g.plus(j, s)) - theta.get(j, s)
}

fn check_chern(geom: &TorusGeometry, chern: &[Vec<i64>]) -> Result<(), BundleError> {
    let dim = geom.dim();
    if chern.len() != dim || chern.iter().any(|r| r.len() != dim) {
        return Err(BundleError::ChernShape { dim });
    }
    for i in 0..dim {
        for j in 0..dim {
            if chern[i][j] != -chern[j][i] {
                return Err(BundleError::NotAntisymmetric(i, j));
            }
        }
    }
    Ok(())
}

fn reference_curvature(geom: &TorusGeometry, chern: &[Vec<i64>]) -> Cochain {
    let l = geom.lengths();
    let comps = geom.components(2).to_vec();
    Cochain::from_fn(geom, 2, |p, _| {
        let (i, j) = (comps[p][0], comps[p][1]);
        2.0 * PI * chern[i][j] as f64 / (l[i] * l[j])
    })
    .expect("degree 2")
}

/// Background connection with uniform flux `2π c_ij / (N_i N_j)` per plaquette.
///
/// Landau gauge `θ⁰_j(x) = Φ x_i`; the `x_i`-edges crossing the seam
/// `x_i = N_i − 1 → 0` carry `−2π c_ij x_j / N_j` so that every plaquette
/// circulation matches the flux modulo 2π.
pub fn build_background(geom: &TorusGeometry, chern: &[Vec<i64>]) -> Result<BundleData, BundleError> {
    check_chern(geom, chern)?;
    let dim = geom.dim();
    let n = geom.sites();
    let mut theta0 = Cochain::zeros(geom, 1)?;
    for i in 0..dim {
        for j in i + 1..dim {
            let c = chern[i][j];
            if c == 0 {
                continue;
            }
            let flux = 2.0 * PI * c as f64 / (n[i] * n[j]) as f64;
            for s in 0..geom.n_sites() {
                let xi = geom.coord(s, i);
                let xj = geom.coord(s, j);
                theta0.component_mut(j)[s] += flux * xi as f64;
                if xi == n[i] - 1 {
                    theta0.component_mut(i)[s] -= 2.0 * PI * c as f64 * xj as f64 / n[j] as f64;
                }
            }
        }
    }
    let f0 = reference_curvature(geom, chern);
    Ok(BundleData { chern: chern.to_vec(), theta0, f0 })
}

/// Convenience constructor for the two-dimensional case.
pub fn build_background_2d(geom: &TorusGeometry, c12: i64) -> Result<BundleData, BundleError> {
    build_background(geom, &[vec![0, c12], vec![-c12, 0]])
}

pub(crate) fn check_shapes(u: &Section, a: &Gauge1Form, b: &BundleData) -> Result<(), BundleError> {
    if u.geometry() != b.geometry() || a.geometry() != b.geometry() {
        return Err(BundleError::ShapeMismatch);
    }
    Ok(())
}

/// `(D_A u)_e = (u(y)·exp(−i(θ⁰_e + h_i A_e)) − u(x)) / h_i` on every edge
/// `x → y = x + e_i`, returned axis-major like a 1-cochain.
pub fn covariant_difference(u: &Section, a: &Gauge1Form, b: &BundleData) -> Result<Vec<Complex64>, BundleError> {
    check_shapes(u, a, b)?;
    let geom = b.geometry();
    let ns = geom.n_sites();
    let mut out = vec![Complex64::new(0.0, 0.0); geom.dim() * ns];
    for (axis, chunk) in out.chunks_mut(ns).enumerate() {
        let h = geom.spacings()[axis];
        chunk.par_iter_mut().enumerate().for_each(|(s, o)| {
            let y = geom.plus(axis, s);
            let link = Complex64::from_polar(1.0, -b.link_phase(a, axis, s));
            *o = (u.values[y] * link - u.values[s]) / h;
        });
    }
    Ok(out)
}

/// `F_A = F₀ + dA`.
pub fn curvature(a: &Gauge1Form, b: &BundleData) -> Result<Cochain, BundleError> {
    if a.geometry() != b.geometry() {
        return Err(BundleError::ShapeMismatch);
    }
    let da = exterior_derivative(a.as_cochain())?;
    Ok(&da + b.f0())
}

/// `(1/2π) Σ h_i h_j F_ij` over every `(i,j)`-coordinate slice, one entry per
/// slice (ordered by the row-major index of the transverse coordinates).
pub fn slice_fluxes(f: &Cochain, i: usize, j: usize) -> Vec<f64> {
    let geom = f.geometry();
    let p = geom.plane_index(i, j);
    let h = geom.spacings();
    let weight = h[i] * h[j] / (2.0 * PI);
    let transverse: Vec<usize> = (0..geom.dim()).filter(|&a| a != i && a != j).collect();
    let n_slices: usize = transverse.iter().map(|&a| geom.sites()[a]).product();
    let mut out = vec![0.0; n_slices];
    for s in 0..geom.n_sites() {
        let slice = transverse.iter().fold(0, |acc, &a| acc * geom.sites()[a] + geom.coord(s, a));
        out[slice] += f.get(p, s) * weight;
    }
    out
}
