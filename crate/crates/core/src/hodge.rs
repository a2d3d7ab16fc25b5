//! Hodge decomposition, harmonic projection, Green's operator and the
//! Poisson/London solvers for periodic cochains.
//!
//! On the flat torus `−Δ` acts on every component as the scalar stencil
//! `Σ_i D_i^T D_i`, so all inverses are diagonal in the discrete Fourier
//! basis. Harmonic cochains are exactly the constant-component ones.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use thiserror::Error;

use crate::lattice::{
    codifferential, exterior_derivative, inner_product, laplacian, mode_eigenvalue, Cochain, TorusGeometry,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HodgeError {
    #[error("source has a harmonic component of norm {harmonic_norm:e} (source norm {source_norm:e})")]
    NonCompatibleSource { harmonic_norm: f64, source_norm: f64 },
    #[error("iterative solver stopped after {iterations} iterations with relative residual {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },
}

/// How elliptic problems are inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    /// Diagonalization by the discrete Fourier transform.
    #[default]
    Spectral,
    /// Conjugate gradients with relative tolerance 1e-10 and at most
    /// `10·Π N_i` iterations.
    Iterative,
}

/// `ω = dφ + d*ψ + ξ`.
#[derive(Debug, Clone)]
pub struct HodgeParts {
    /// φ, absent for degree 0.
    pub exact_potential: Option<Cochain>,
    /// ψ, absent for top degree.
    pub coexact_potential: Option<Cochain>,
    /// ξ.
    pub harmonic: Cochain,
}

impl HodgeParts {
    pub fn exact_part(&self) -> Cochain {
        match &self.exact_potential {
            Some(phi) => exterior_derivative(phi).expect("degree < n"),
            None => Cochain::zeros(self.harmonic.geometry(), self.harmonic.degree()).unwrap(),
        }
    }

    pub fn coexact_part(&self) -> Cochain {
        match &self.coexact_potential {
            Some(psi) => codifferential(psi).expect("degree >= 1"),
            None => Cochain::zeros(self.harmonic.geometry(), self.harmonic.degree()).unwrap(),
        }
    }

    pub fn reconstruct(&self) -> Cochain {
        let mut out = self.exact_part();
        out.axpy(1.0, &self.coexact_part());
        out.axpy(1.0, &self.harmonic);
        out
    }
}

fn fft_nd(buf: &mut [Complex64], dims: &[usize], direction: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let total: usize = dims.iter().product();
    for (a, &n) in dims.iter().enumerate() {
        let fft = planner.plan_fft(n, direction);
        let stride: usize = dims[a + 1..].iter().product();
        let outer = total / (n * stride);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for o in 0..outer {
            for inner in 0..stride {
                let start = o * n * stride + inner;
                for (t, z) in line.iter_mut().enumerate() {
                    *z = buf[start + t * stride];
                }
                fft.process(&mut line);
                for (t, z) in line.iter().enumerate() {
                    buf[start + t * stride] = *z;
                }
            }
        }
    }
    if direction == FftDirection::Inverse {
        let scale = 1.0 / total as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
    }
}

/// Apply the Fourier multiplier `symbol(λ_k, k == 0)` to every component.
fn apply_multiplier(c: &Cochain, symbol: impl Fn(f64, bool) -> f64) -> Cochain {
    let geom = c.geometry();
    let ns = geom.n_sites();
    let multipliers: Vec<f64> = (0..ns)
        .map(|s| {
            let k = geom.coords(s);
            symbol(mode_eigenvalue(geom, &k), s == 0)
        })
        .collect();
    let mut out = Cochain::zeros(geom, c.degree()).unwrap();
    let mut buf = vec![Complex64::new(0.0, 0.0); ns];
    for comp in 0..c.n_components() {
        for (z, &v) in buf.iter_mut().zip(c.component(comp)) {
            *z = Complex64::new(v, 0.0);
        }
        fft_nd(&mut buf, geom.sites(), FftDirection::Forward);
        for (z, &m) in buf.iter_mut().zip(&multipliers) {
            *z *= m;
        }
        fft_nd(&mut buf, geom.sites(), FftDirection::Inverse);
        for (o, z) in out.component_mut(comp).iter_mut().zip(&buf) {
            *o = z.re;
        }
    }
    out
}

/// `H(ω)`: per-component mean value.
pub fn harmonic_projection(omega: &Cochain) -> Cochain {
    let mut out = omega.clone();
    let ns = omega.geometry().n_sites() as f64;
    for comp in 0..omega.n_components() {
        let slice = out.component_mut(comp);
        let mean = slice.iter().sum::<f64>() / ns;
        slice.iter_mut().for_each(|v| *v = mean);
    }
    out
}

/// Green's operator: the solution orthogonal to harmonics of
/// `ΔG(ω) = ω − H(ω)` with `Δ = −(dd* + d*d)`.
pub fn green(omega: &Cochain) -> Cochain {
    apply_multiplier(omega, |lambda, zero| if zero { 0.0 } else { -1.0 / lambda })
}

/// `ω = dφ + d*ψ + ξ` with `φ = −d*G(ω)`, `ψ = −dG(ω)`, `ξ = H(ω)`.
pub fn hodge_decompose(omega: &Cochain) -> HodgeParts {
    let dim = omega.geometry().dim();
    let g = green(omega);
    let exact_potential = (omega.degree() > 0).then(|| -&codifferential(&g).unwrap());
    let coexact_potential = (omega.degree() < dim).then(|| -&exterior_derivative(&g).unwrap());
    HodgeParts { exact_potential, coexact_potential, harmonic: harmonic_projection(omega) }
}

/// The `d*`-image component `d*ψ` of `ω`, computed without forming `ψ`.
pub fn coexact_projection(omega: &Cochain) -> Cochain {
    let geom = omega.geometry();
    if omega.degree() == geom.dim() {
        return Cochain::zeros(geom, omega.degree()).unwrap();
    }
    let dw = exterior_derivative(omega).unwrap();
    let psi = apply_multiplier(&dw, |lambda, zero| if zero { 0.0 } else { 1.0 / lambda });
    codifferential(&psi).unwrap()
}

/// The `d`-image component `dφ` of `ω`.
pub fn exact_projection(omega: &Cochain) -> Cochain {
    let geom = omega.geometry();
    if omega.degree() == 0 {
        return Cochain::zeros(geom, 0).unwrap();
    }
    let sw = codifferential(omega).unwrap();
    let phi = apply_multiplier(&sw, |lambda, zero| if zero { 0.0 } else { 1.0 / lambda });
    exterior_derivative(&phi).unwrap()
}

/// Solve `−Δv + v = f`.
pub fn solve_london(f: &Cochain) -> Cochain {
    apply_multiplier(f, |lambda, _| 1.0 / (1.0 + lambda))
}

pub fn solve_london_with(f: &Cochain, method: SolverMethod) -> Result<Cochain, HodgeError> {
    match method {
        SolverMethod::Spectral => Ok(solve_london(f)),
        SolverMethod::Iterative => conjugate_gradient(f, 1.0),
    }
}

fn check_compatible(f: &Cochain) -> Result<(), HodgeError> {
    let harmonic_norm = harmonic_projection(f).norm();
    let source_norm = f.norm();
    if harmonic_norm > 1e-10 * source_norm {
        return Err(HodgeError::NonCompatibleSource { harmonic_norm, source_norm });
    }
    Ok(())
}

/// Solve `−Δv = f` for mean-free `f`, returning the mean-free solution.
pub fn solve_poisson(f: &Cochain) -> Result<Cochain, HodgeError> {
    check_compatible(f)?;
    Ok(apply_multiplier(f, |lambda, zero| if zero { 0.0 } else { 1.0 / lambda }))
}

pub fn solve_poisson_with(f: &Cochain, method: SolverMethod) -> Result<Cochain, HodgeError> {
    match method {
        SolverMethod::Spectral => solve_poisson(f),
        SolverMethod::Iterative => {
            check_compatible(f)?;
            let v = conjugate_gradient(f, 0.0)?;
            Ok(&v - &harmonic_projection(&v))
        }
    }
}

/// CG for `(−Δ + shift) v = f`.
fn conjugate_gradient(f: &Cochain, shift: f64) -> Result<Cochain, HodgeError> {
    let geom = f.geometry();
    let fnorm = f.norm();
    let mut x = Cochain::zeros(geom, f.degree()).unwrap();
    if fnorm == 0.0 {
        return Ok(x);
    }
    let apply = |v: &Cochain| {
        let mut out = laplacian(v);
        if shift != 0.0 {
            out.axpy(shift, v);
        }
        out
    };
    let mut r = f.clone();
    if shift == 0.0 {
        r = &r - &harmonic_projection(&r);
    }
    let mut p = r.clone();
    let mut rr = inner_product(&r, &r).unwrap();
    let max_iter = 10 * geom.n_sites();
    for it in 0..max_iter {
        if rr.sqrt() <= 1e-10 * fnorm {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rr / inner_product(&p, &ap).unwrap();
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        // recompute the true residual periodically to avoid drift
        if it % 50 == 49 {
            r = f - &apply(&x);
            if shift == 0.0 {
                r = &r - &harmonic_projection(&r);
            }
        }
        let rr_new = inner_product(&r, &r).unwrap();
        let beta = rr_new / rr;
        rr = rr_new;
        let mut next = r.clone();
        next.axpy(beta, &p);
        p = next;
    }
    if rr.sqrt() <= 1e-10 * fnorm {
        return Ok(x);
    }
    Err(HodgeError::NonConvergence { iterations: max_iter, residual: rr.sqrt() / fnorm })
}

/// Relative residual `‖−Δv + shift·v − f‖ / ‖f‖`.
pub fn residual(v: &Cochain, f: &Cochain, shift: f64) -> f64 {
    let mut r = laplacian(v);
    r.axpy(shift, v);
    r.axpy(-1.0, f);
    let fnorm = f.norm();
    if fnorm == 0.0 {
        r.norm()
    } else {
        r.norm() / fnorm
    }
}

/// Real Fourier mode `cos(2π k·x/N)` on every component listed in `comps`.
pub fn cosine_mode(geom: &TorusGeometry, degree: usize, k: &[usize], comps: &[usize]) -> Cochain {
    Cochain::from_fn(geom, degree, |c, s| {
        if !comps.contains(&c) {
            return 0.0;
        }
        let phase: f64 = k
            .iter()
            .enumerate()
            .map(|(a, &ka)| 2.0 * std::f64::consts::PI * ka as f64 * geom.coord(s, a) as f64 / geom.sites()[a] as f64)
            .sum();
        phase.cos()
    })
    .unwrap()
}
