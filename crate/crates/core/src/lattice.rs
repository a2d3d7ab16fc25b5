//! Periodic cubical cell complex on a flat torus.
//!
//! Cochains store one real sample per oriented k-cell, interpreted as the
//! value of the corresponding form component (`ω_i` on an `x_i`-edge,
//! `ω_ij` on an `(i,j)`-plaquette). The exterior derivative is the scaled
//! forward difference and the codifferential is its exact adjoint for the
//! diagonal inner product `Σ a·b·Πh`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::util::det_sum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("dimension must be 2 or 3, got {0}")]
    InvalidDimension(usize),
    #[error("axis {axis} has {count} sites, need at least 4")]
    TooFewSites { axis: usize, count: usize },
    #[error("axis {axis} has non-positive length {length}")]
    NonPositiveLength { axis: usize, length: f64 },
    #[error("sites and lengths disagree on the dimension ({sites} vs {lengths})")]
    ShapeMismatch { sites: usize, lengths: usize },
    #[error("degree {degree} out of range for dimension {dim}")]
    DegreeOutOfRange { degree: usize, dim: usize },
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("cochains live on different geometries")]
    GeometryMismatch,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// One term of a stencil: `sign · (f_src(x ± e_axis) − f_src(x)) / h_axis`.
#[derive(Debug, Clone, Copy)]
struct StencilTerm {
    sign: f64,
    axis: usize,
    src: usize,
}

#[derive(Debug)]
struct Tables {
    plus: Vec<Vec<usize>>,
    minus: Vec<Vec<usize>>,
    /// `components[k]` lists the sorted axis sets of degree-k cells.
    components: Vec<Vec<Vec<usize>>>,
    /// `d_terms[k][I]`: terms producing component I of d(ω) for deg ω = k.
    d_terms: Vec<Vec<Vec<StencilTerm>>>,
    /// `codiff_terms[k][J]`: terms producing component J of d*(β) for deg β = k.
    codiff_terms: Vec<Vec<Vec<StencilTerm>>>,
}

/// The flat periodic lattice `Π_i (ℤ/N_i) · h_i`.
#[derive(Clone)]
pub struct TorusGeometry {
    sites: Vec<usize>,
    lengths: Vec<f64>,
    spacings: Vec<f64>,
    strides: Vec<usize>,
    n_sites: usize,
    tables: Arc<Tables>,
}

impl fmt::Debug for TorusGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGeometry").field("sites", &self.sites).field("lengths", &self.lengths).finish()
    }
}

impl PartialEq for TorusGeometry {
    fn eq(&self, other: &Self) -> bool {
        self.sites == other.sites && self.lengths == other.lengths
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

impl TorusGeometry {
    pub fn new(sites: &[usize], lengths: &[f64]) -> Result<Self, LatticeError> {
        let dim = sites.len();
        if lengths.len() != dim {
            return Err(LatticeError::ShapeMismatch { sites: dim, lengths: lengths.len() });
        }
        if !(2..=3).contains(&dim) {
            return Err(LatticeError::InvalidDimension(dim));
        }
        for (axis, (&count, &length)) in sites.iter().zip(lengths).enumerate() {
            if count < 4 {
                return Err(LatticeError::TooFewSites { axis, count });
            }
            if !(length > 0.0 && length.is_finite()) {
                return Err(LatticeError::NonPositiveLength { axis, length });
            }
        }
        let spacings: Vec<f64> = sites.iter().zip(lengths).map(|(&n, &l)| l / n as f64).collect();
        let mut strides = vec![1usize; dim];
        for i in (0..dim - 1).rev() {
            strides[i] = strides[i + 1] * sites[i + 1];
        }
        let n_sites: usize = sites.iter().product();

        let mut plus = vec![vec![0usize; n_sites]; dim];
        let mut minus = vec![vec![0usize; n_sites]; dim];
        for s in 0..n_sites {
            for a in 0..dim {
                let x = (s / strides[a]) % sites[a];
                let base = s - x * strides[a];
                plus[a][s] = base + ((x + 1) % sites[a]) * strides[a];
                minus[a][s] = base + ((x + sites[a] - 1) % sites[a]) * strides[a];
            }
        }

        let components: Vec<Vec<Vec<usize>>> = (0..=dim).map(|k| subsets(dim, k)).collect();
        let index_of = |k: usize, set: &[usize]| -> usize {
            components[k].iter().position(|c| c == set).expect("component exists")
        };
        let mut d_terms = Vec::with_capacity(dim);
        for k in 0..dim {
            let mut per_out = Vec::new();
            for set in &components[k + 1] {
                let mut terms = Vec::new();
                for (m, &axis) in set.iter().enumerate() {
                    let rest: Vec<usize> = set.iter().copied().filter(|&a| a != axis).collect();
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    terms.push(StencilTerm { sign, axis, src: index_of(k, &rest) });
                }
                per_out.push(terms);
            }
            d_terms.push(per_out);
        }
        // d* on degree k is the transpose of d on degree k-1.
        let mut codiff_terms = vec![Vec::new()];
        for k in 1..=dim {
            let mut per_out: Vec<Vec<StencilTerm>> = vec![Vec::new(); components[k - 1].len()];
            for (out_comp, terms) in d_terms[k - 1].iter().enumerate() {
                for t in terms {
                    per_out[t.src].push(StencilTerm { sign: t.sign, axis: t.axis, src: out_comp });
                }
            }
            codiff_terms.push(per_out);
        }

        Ok(Self {
            sites: sites.to_vec(),
            lengths: lengths.to_vec(),
            spacings,
            strides,
            n_sites,
            tables: Arc::new(Tables { plus, minus, components, d_terms, codiff_terms }),
        })
    }

    /// Cubic lattice with `n` sites and length `length` along every axis.
    pub fn uniform(dim: usize, n: usize, length: f64) -> Result<Self, LatticeError> {
        Self::new(&vec![n; dim], &vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacings.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacings.iter().copied().fold(0.0, f64::max)
    }

    /// Quadrature weight `Π h_i` attached to every cell sample.
    pub fn cell_volume(&self) -> f64 {
        self.spacings.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Number of k-cells, `C(n,k) · Π N_i`.
    pub fn n_cells(&self, degree: usize) -> usize {
        binomial(self.dim(), degree) * self.n_sites
    }

    pub fn n_components(&self, degree: usize) -> usize {
        binomial(self.dim(), degree)
    }

    /// Sorted axis sets of the degree-k components, in storage order.
    pub fn components(&self, degree: usize) -> &[Vec<usize>] {
        &self.tables.components[degree]
    }

    pub fn component_index(&self, degree: usize, axes: &[usize]) -> Option<usize> {
        self.tables.components.get(degree)?.iter().position(|c| c == axes)
    }

    /// Index of the 2-cochain component spanned by axes `i < j`.
    pub fn plane_index(&self, i: usize, j: usize) -> usize {
        self.component_index(2, &[i.min(j), i.max(j)]).expect("valid plane")
    }

    #[inline]
    pub fn plus(&self, axis: usize, site: usize) -> usize {
        self.tables.plus[axis][site]
    }

    #[inline]
    pub fn minus(&self, axis: usize, site: usize) -> usize {
        self.tables.minus[axis][site]
    }

    /// Integer coordinate of `site` along `axis`.
    #[inline]
    pub fn coord(&self, site: usize, axis: usize) -> usize {
        (site / self.strides[axis]) % self.sites[axis]
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        (0..self.dim()).map(|a| self.coord(site, a)).collect()
    }

    /// Row-major site index (last axis fastest), with periodic wrap.
    pub fn site_index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.sites).zip(&self.strides).map(|((&x, &n), &st)| (x % n) * st).sum()
    }

    /// Physical position `x_i · h_i` of a vertex.
    pub fn position(&self, site: usize) -> Vec<f64> {
        (0..self.dim()).map(|a| self.coord(site, a) as f64 * self.spacings[a]).collect()
    }

    fn check_degree(&self, degree: usize) -> Result<(), LatticeError> {
        if degree > self.dim() {
            Err(LatticeError::DegreeOutOfRange { degree, dim: self.dim() })
        } else {
            Ok(())
        }
    }
}

/// Real k-cochain, stored component-major with row-major sites.
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    geom: TorusGeometry,
    degree: usize,
    values: Vec<f64>,
}

impl Cochain {
    pub fn zeros(geom: &TorusGeometry, degree: usize) -> Result<Self, LatticeError> {
        geom.check_degree(degree)?;
        Ok(Self { geom: geom.clone(), degree, values: vec![0.0; geom.n_cells(degree)] })
    }

    pub fn from_values(geom: &TorusGeometry, degree: usize, values: Vec<f64>) -> Result<Self, LatticeError> {
        geom.check_degree(degree)?;
        let expected = geom.n_cells(degree);
        if values.len() != expected {
            return Err(LatticeError::LengthMismatch { expected, got: values.len() });
        }
        Ok(Self { geom: geom.clone(), degree, values })
    }

    /// Cochain whose every component is the constant `value`.
    pub fn constant(geom: &TorusGeometry, degree: usize, value: f64) -> Result<Self, LatticeError> {
        geom.check_degree(degree)?;
        Ok(Self { geom: geom.clone(), degree, values: vec![value; geom.n_cells(degree)] })
    }

    /// Cochain with value `f(component, site)`.
    pub fn from_fn(
        geom: &TorusGeometry,
        degree: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, LatticeError> {
        geom.check_degree(degree)?;
        let ns = geom.n_sites();
        let values = (0..geom.n_cells(degree)).map(|i| f(i / ns, i % ns)).collect();
        Ok(Self { geom: geom.clone(), degree, values })
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geom
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn n_components(&self) -> usize {
        self.geom.n_components(self.degree)
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let ns = self.geom.n_sites();
        &self.values[c * ns..(c + 1) * ns]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let ns = self.geom.n_sites();
        &mut self.values[c * ns..(c + 1) * ns]
    }

    #[inline]
    pub fn get(&self, c: usize, site: usize) -> f64 {
        self.values[c * self.geom.n_sites() + site]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// L² norm induced by [`inner_product`].
    pub fn norm(&self) -> f64 {
        let w = self.geom.cell_volume();
        (det_sum(self.values.len(), |i| self.values[i] * self.values[i]) * w).sqrt()
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &Cochain) {
        assert_same(self, other);
        self.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += alpha * b);
    }

    pub fn same_shape(&self, other: &Cochain) -> bool {
        self.degree == other.degree && self.geom == other.geom
    }

    pub fn check_same_shape(&self, other: &Cochain) -> Result<(), LatticeError> {
        if self.degree != other.degree {
            return Err(LatticeError::DegreeMismatch(self.degree, other.degree));
        }
        if self.geom != other.geom {
            return Err(LatticeError::GeometryMismatch);
        }
        Ok(())
    }
}

fn assert_same(a: &Cochain, b: &Cochain) {
    assert!(a.same_shape(b), "cochain shape mismatch: degree {} vs {}", a.degree, b.degree);
}

impl Add for &Cochain {
    type Output = Cochain;
    fn add(self, rhs: &Cochain) -> Cochain {
        assert_same(self, rhs);
        let values = self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect();
        Cochain { geom: self.geom.clone(), degree: self.degree, values }
    }
}

impl Sub for &Cochain {
    type Output = Cochain;
    fn sub(self, rhs: &Cochain) -> Cochain {
        assert_same(self, rhs);
        let values = self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect();
        Cochain { geom: self.geom.clone(), degree: self.degree, values }
    }
}

impl Mul<f64> for &Cochain {
    type Output = Cochain;
    fn mul(self, rhs: f64) -> Cochain {
        let values = self.values.iter().map(|a| a * rhs).collect();
        Cochain { geom: self.geom.clone(), degree: self.degree, values }
    }
}

impl Neg for &Cochain {
    type Output = Cochain;
    fn neg(self) -> Cochain {
        self * -1.0
    }
}

/// Scaled forward-difference exterior derivative.
pub fn exterior_derivative(c: &Cochain) -> Result<Cochain, LatticeError> {
    let geom = &c.geom;
    if c.degree >= geom.dim() {
        return Err(LatticeError::DegreeOutOfRange { degree: c.degree + 1, dim: geom.dim() });
    }
    let ns = geom.n_sites();
    let h = geom.spacings();
    let mut out = Cochain::zeros(geom, c.degree + 1)?;
    for (terms, chunk) in geom.tables.d_terms[c.degree].iter().zip(out.values.chunks_mut(ns)) {
        chunk.par_iter_mut().enumerate().for_each(|(s, o)| {
            let mut acc = 0.0;
            for t in terms {
                let src = c.component(t.src);
                acc += t.sign * (src[geom.plus(t.axis, s)] - src[s]) / h[t.axis];
            }
            *o = acc;
        });
    }
    Ok(out)
}

/// Codifferential `d*`, the exact adjoint of [`exterior_derivative`].
pub fn codifferential(c: &Cochain) -> Result<Cochain, LatticeError> {
    let geom = &c.geom;
    if c.degree == 0 {
        return Err(LatticeError::DegreeOutOfRange { degree: 0, dim: geom.dim() });
    }
    let ns = geom.n_sites();
    let h = geom.spacings();
    let mut out = Cochain::zeros(geom, c.degree - 1)?;
    for (terms, chunk) in geom.tables.codiff_terms[c.degree].iter().zip(out.values.chunks_mut(ns)) {
        chunk.par_iter_mut().enumerate().for_each(|(s, o)| {
            let mut acc = 0.0;
            for t in terms {
                let src = c.component(t.src);
                acc += t.sign * (src[geom.minus(t.axis, s)] - src[s]) / h[t.axis];
            }
            *o = acc;
        });
    }
    Ok(out)
}

/// `Σ_cells a·b·Πh`.
pub fn inner_product(a: &Cochain, b: &Cochain) -> Result<f64, LatticeError> {
    a.check_same_shape(b)?;
    let w = a.geom.cell_volume();
    Ok(det_sum(a.values.len(), |i| a.values[i] * b.values[i]) * w)
}

/// The positive Hodge Laplacian `−Δc = (dd* + d*d)c`.
pub fn laplacian(c: &Cochain) -> Cochain {
    let dim = c.geom.dim();
    let mut out = Cochain::zeros(&c.geom, c.degree).expect("valid degree");
    if c.degree > 0 {
        let dd = exterior_derivative(&codifferential(c).expect("degree >= 1")).expect("degree ok");
        out.axpy(1.0, &dd);
    }
    if c.degree < dim {
        let dd = codifferential(&exterior_derivative(c).expect("degree < n")).expect("degree ok");
        out.axpy(1.0, &dd);
    }
    out
}

/// Eigenvalue of the per-component stencil of `−Δ` for the Fourier mode
/// with integer wave numbers `k`.
pub fn mode_eigenvalue(geom: &TorusGeometry, k: &[usize]) -> f64 {
    k.iter()
        .enumerate()
        .map(|(a, &ka)| {
            let h = geom.spacings()[a];
            2.0 / (h * h) * (1.0 - (2.0 * PI * ka as f64 / geom.sites()[a] as f64).cos())
        })
        .sum()
}

/// Full spectrum of `−Δ` on degree-k cochains (one copy of the scalar
/// stencil spectrum per component).
pub fn laplacian_spectrum(geom: &TorusGeometry, degree: usize) -> Vec<f64> {
    let scalar: Vec<f64> = (0..geom.n_sites()).map(|s| mode_eigenvalue(geom, &geom.coords(s))).collect();
    let mut out = Vec::with_capacity(geom.n_cells(degree));
    for _ in 0..geom.n_components(degree) {
        out.extend_from_slice(&scalar);
    }
    out
}

/// Number of eigenvalues of `−Δ` below `tol` on degree-k cochains.
pub fn kernel_dimension(geom: &TorusGeometry, degree: usize, tol: f64) -> usize {
    laplacian_spectrum(geom, degree).into_iter().filter(|&l| l < tol).count()
}
