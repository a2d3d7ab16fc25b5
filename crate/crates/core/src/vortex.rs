//! Supercurrent, gauge-invariant Jacobian, integer plaquette vorticity and
//! the derived masses, Chern pairings and H⁻¹ distances.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::bundle::{check_shapes, curvature, BundleData, BundleError, Gauge1Form, Section};
use crate::fields::{link_factors, supercurrent_from_links};
use crate::hodge::solve_london;
use crate::lattice::{exterior_derivative, inner_product, Cochain, LatticeError, TorusGeometry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VortexError {
    #[error("u vanishes on a corner of {} plaquette(s)", .plaquettes.len())]
    ZeroOnPlaquette {
        /// `(component, site)` of every flagged plaquette.
        plaquettes: Vec<(usize, usize)>,
    },
    #[error("winding residue {residue:e} exceeds the integrality tolerance")]
    NotIntegral { residue: f64 },
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

/// `j_e = Im(conj(u(x)) u(y) e^{−i(θ⁰_e + h A_e)}) / h`; the exact
/// `A`-derivative of the kinetic energy, up to the sign and volume factor.
pub fn supercurrent(u: &Section, a: &Gauge1Form, b: &BundleData) -> Result<Cochain, BundleError> {
    check_shapes(u, a, b)?;
    Ok(supercurrent_from_links(u, &link_factors(a, b), b))
}

/// `J(u, A) = ½ dj(u, A) + ½ F_A`.
pub fn jacobian(u: &Section, a: &Gauge1Form, b: &BundleData) -> Result<Cochain, BundleError> {
    let j = supercurrent(u, a, b)?;
    let dj = exterior_derivative(&j)?;
    let f = curvature(a, b)?;
    Ok(&(&dj + &f) * 0.5)
}

/// `‖(J(u,A) − J(u,B)) − ½ d((A − B)(1 − |u|²))‖`, with `1 − |u|²` averaged
/// over the two ends of each edge. Vanishes as the lattice is refined.
pub fn jacobian_shift_defect(
    u: &Section,
    a: &Gauge1Form,
    bform: &Gauge1Form,
    b: &BundleData,
) -> Result<f64, BundleError> {
    let ja = jacobian(u, a, b)?;
    let jb = jacobian(u, bform, b)?;
    let geom = b.geometry();
    let diff = a.as_cochain() - bform.as_cochain();
    let weighted = Cochain::from_fn(geom, 1, |axis, s| {
        let y = geom.plus(axis, s);
        let m = 1.0 - 0.5 * (u.values()[s].norm_sqr() + u.values()[y].norm_sqr());
        diff.get(axis, s) * m
    })?;
    let predicted = &exterior_derivative(&weighted)? * 0.5;
    Ok((&(&ja - &jb) - &predicted).norm())
}

/// Integer winding per oriented plaquette, the discrete `⋆J/π`.
#[derive(Debug, Clone, PartialEq)]
pub struct VorticityField {
    geom: TorusGeometry,
    windings: Vec<i64>,
}

impl VorticityField {
    pub fn zeros(geom: &TorusGeometry) -> Self {
        Self { geom: geom.clone(), windings: vec![0; geom.n_cells(2)] }
    }

    pub fn from_windings(geom: &TorusGeometry, windings: Vec<i64>) -> Result<Self, LatticeError> {
        if windings.len() != geom.n_cells(2) {
            return Err(LatticeError::LengthMismatch { expected: geom.n_cells(2), got: windings.len() });
        }
        Ok(Self { geom: geom.clone(), windings })
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geom
    }

    pub fn windings(&self) -> &[i64] {
        &self.windings
    }

    pub fn get(&self, component: usize, site: usize) -> i64 {
        self.windings[component * self.geom.n_sites() + site]
    }

    /// Nonzero entries as `(component, site, winding)`.
    pub fn support(&self) -> Vec<(usize, usize, i64)> {
        let ns = self.geom.n_sites();
        self.windings.iter().enumerate().filter(|(_, &w)| w != 0).map(|(i, &w)| (i / ns, i % ns, w)).collect()
    }

    /// Sum of windings over each `(i,j)` coordinate slice.
    pub fn slice_sums(&self, i: usize, j: usize) -> Vec<i64> {
        let geom = &self.geom;
        let p = geom.plane_index(i, j);
        let transverse: Vec<usize> = (0..geom.dim()).filter(|&a| a != i && a != j).collect();
        let n_slices: usize = transverse.iter().map(|&a| geom.sites()[a]).product();
        let mut out = vec![0i64; n_slices];
        for s in 0..geom.n_sites() {
            let slice = transverse.iter().fold(0, |acc, &a| acc * geom.sites()[a] + geom.coord(s, a));
            out[slice] += self.get(p, s);
        }
        out
    }

    /// True when every `(i,j)`-slice sums to the bundle's `c_ij`.
    pub fn matches_chern(&self, b: &BundleData) -> bool {
        let dim = self.geom.dim();
        (0..dim).all(|i| (i + 1..dim).all(|j| self.slice_sums(i, j).iter().all(|&s| s == b.chern(i, j))))
    }

    /// Total winding of the `(i,j)` slice through the origin.
    pub fn chern_pairing(&self, i: usize, j: usize) -> i64 {
        self.slice_sums(i, j)[0]
    }

    /// The vorticity as a 2-form density `n_p / (h_i h_j)`.
    pub fn as_density(&self) -> Cochain {
        let geom = &self.geom;
        let h = geom.spacings().to_vec();
        let planes = geom.components(2).to_vec();
        Cochain::from_fn(geom, 2, |p, s| self.get(p, s) as f64 / (h[planes[p][0]] * h[planes[p][1]])).unwrap()
    }
}

fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// `n_p = (1/2π)(Σ_{e∈∂p} wrap(arg u(y) − arg u(x) − θ⁰_e − h A_e) + h_i h_j F_ij)`.
pub fn vorticity(u: &Section, a: &Gauge1Form, b: &BundleData) -> Result<VorticityField, VortexError> {
    check_shapes(u, a, b)?;
    let geom = b.geometry();
    let ns = geom.n_sites();
    let h = geom.spacings();
    let links = link_factors(a, b);
    let uv = u.values();
    let f = curvature(a, b)?;

    let flagged: Vec<(usize, usize)> = geom
        .components(2)
        .iter()
        .enumerate()
        .flat_map(|(p, axes)| {
            let (i, j) = (axes[0], axes[1]);
            (0..ns).filter_map(move |s| {
                let pi = geom.plus(i, s);
                let corners = [s, pi, geom.plus(j, s), geom.plus(j, pi)];
                corners.iter().any(|&c| uv[c].norm_sqr() == 0.0).then_some((p, s))
            })
        })
        .collect();
    if !flagged.is_empty() {
        return Err(VortexError::ZeroOnPlaquette { plaquettes: flagged });
    }

    let edge_angle =
        |axis: usize, s: usize| -> f64 { principal_arg(uv[s].conj() * uv[geom.plus(axis, s)] * links[axis * ns + s]) };
    let mut windings = vec![0i64; geom.n_cells(2)];
    let mut worst = 0.0f64;
    for (p, axes) in geom.components(2).iter().enumerate() {
        let (i, j) = (axes[0], axes[1]);
        for s in 0..ns {
            let circ =
                edge_angle(i, s) + edge_angle(j, geom.plus(i, s)) - edge_angle(i, geom.plus(j, s)) - edge_angle(j, s);
            let raw = (circ + h[i] * h[j] * f.get(p, s)) / (2.0 * PI);
            let n = raw.round();
            worst = worst.max((raw - n).abs());
            windings[p * ns + s] = n as i64;
        }
    }
    if worst > 1e-8 {
        return Err(VortexError::NotIntegral { residue: worst });
    }
    Ok(VorticityField { geom: geom.clone(), windings })
}

/// `Σ |n_p|` in two dimensions, `Σ |n_p| · h_k` (k transverse to the
/// plaquette plane) in three.
pub fn vortex_mass(v: &VorticityField, geom: &TorusGeometry) -> f64 {
    let planes = geom.components(2);
    let mut mass = 0.0;
    for (p, axes) in planes.iter().enumerate() {
        let weight: f64 = (0..geom.dim()).filter(|a| !axes.contains(a)).map(|a| geom.spacings()[a]).product();
        let count: i64 = (0..geom.n_sites()).map(|s| v.get(p, s).abs()).sum();
        mass += count as f64 * weight;
    }
    mass
}

/// `‖a − b‖_{H⁻¹}` with `‖ω‖² = ⟨ω, (−Δ + 1)⁻¹ ω⟩`.
pub fn h_minus1_distance(a: &Cochain, b: &Cochain) -> Result<f64, LatticeError> {
    a.check_same_shape(b)?;
    let diff = a - b;
    let solved = solve_london(&diff);
    Ok(inner_product(&diff, &solved)?.max(0.0).sqrt())
}

/// Connected component of the support of a three-dimensional vorticity,
/// viewed as a chain of dual edges between cube centres.
#[derive(Debug, Clone)]
pub struct DualComponent {
    /// `(component, site, winding)` of the plaquettes in this component.
    pub plaquettes: Vec<(usize, usize, i64)>,
    /// Every dual vertex has exactly two incident dual edges and the
    /// component is connected, i.e. it is one closed loop.
    pub is_simple_loop: bool,
}

/// Split the support of a 3D vorticity field into connected dual chains.
pub fn dual_components(v: &VorticityField) -> Vec<DualComponent> {
    let geom = v.geometry();
    assert_eq!(geom.dim(), 3, "dual loops are defined in three dimensions");
    let planes = geom.components(2);
    // plaquette (i,j) at x separates the cubes at x − e_k and x
    let support = v.support();
    let ends: Vec<(usize, usize)> = support
        .iter()
        .map(|&(p, s, _)| {
            let k = (0..3).find(|a| !planes[p].contains(a)).unwrap();
            (geom.minus(k, s), s)
        })
        .collect();
    let mut incidence: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (e, &(a, b)) in ends.iter().enumerate() {
        incidence.entry(a).or_default().push(e);
        incidence.entry(b).or_default().push(e);
    }
    let mut seen = vec![false; support.len()];
    let mut out = Vec::new();
    for start in 0..support.len() {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut members = Vec::new();
        while let Some(e) = stack.pop() {
            members.push(e);
            let (a, b) = ends[e];
            for vtx in [a, b] {
                for &nb in &incidence[&vtx] {
                    if !seen[nb] {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            }
        }
        members.sort_unstable();
        let is_simple_loop = members.iter().all(|&e| {
            let (a, b) = ends[e];
            incidence[&a].len() == 2 && incidence[&b].len() == 2 && support[e].2.abs() == 1
        });
        out.push(DualComponent { plaquettes: members.iter().map(|&e| support[e]).collect(), is_simple_loop });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::build_background_2d;
    use crate::gauge::{apply_gauge, GaugePhase};
    use crate::util::test_rng;
    use rand::Rng;

    fn smooth_modulus_config(g: &TorusGeometry, seed: u64) -> (Section, Gauge1Form) {
        let mut rng = test_rng(seed);
        let u = Section::from_fn(g, |_| Complex64::from_polar(rng.gen_range(0.5..1.5), rng.gen_range(-PI..PI)));
        let a = Cochain::from_fn(g, 1, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
        (u, Gauge1Form::from_cochain(a).unwrap())
    }

    #[test]
    fn ground_state_has_no_current() {
        let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
        let b = build_background_2d(&g, 0).unwrap();
        let one = Section::constant(&g, Complex64::new(1.0, 0.0));
        let a = Gauge1Form::zeros(&g);
        assert_eq!(supercurrent(&one, &a, &b).unwrap().max_abs(), 0.0);
        assert_eq!(jacobian(&one, &a, &b).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn plane_wave_current() {
        let g = TorusGeometry::uniform(2, 16, 1.0).unwrap();
        let b = build_background_2d(&g, 0).unwrap();
        let a = Gauge1Form::zeros(&g);
        let u = Section::from_fn(&g, |s| Complex64::from_polar(1.0, 2.0 * PI * g.position(s)[0]));
        let j = supercurrent(&u, &a, &b).unwrap();
        let h = g.spacings()[0];
        let expect = (2.0 * PI * h).sin() / h;
        for s in 0..g.n_sites() {
            assert!((j.get(0, s) - expect).abs() < 1e-12);
            assert!(j.get(1, s).abs() < 1e-12);
        }
        assert!(jacobian(&u, &a, &b).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn jacobian_definition_identity() {
        let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
        let b = build_background_2d(&g, 1).unwrap();
        let (u, a) = smooth_modulus_config(&g, 1);
        let jac = jacobian(&u, &a, &b).unwrap();
        let dj = exterior_derivative(&supercurrent(&u, &a, &b).unwrap()).unwrap();
        let f = curvature(&a, &b).unwrap();
        let r = &(&(&jac * 2.0) - &dj) - &f;
        assert!(r.max_abs() < 1e-12 * (1.0 + dj.max_abs()));
    }

    #[test]
    fn gauge_invariance_of_observables() {
        let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
        let b = build_background_2d(&g, 1).unwrap();
        let (u, a) = smooth_modulus_config(&g, 2);
        let mut rng = test_rng(3);
        let th = Cochain::from_fn(&g, 0, |_, _| rng.gen_range(-5.0..5.0)).unwrap();
        let p = GaugePhase::with_windings(th, vec![1, 0]).unwrap();
        let (u2, a2) = apply_gauge(&u, &a, &p).unwrap();
        let j1 = supercurrent(&u, &a, &b).unwrap();
        let j2 = supercurrent(&u2, &a2, &b).unwrap();
        assert!((&j1 - &j2).max_abs() < 1e-12 / g.min_spacing());
        let v1 = vorticity(&u, &a, &b).unwrap();
        let v2 = vorticity(&u2, &a2, &b).unwrap();
        assert_eq!(v1, v2);
        assert!(v1.matches_chern(&b));
    }

    #[test]
    fn trivial_bundle_total_winding_zero() {
        let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
        let b = build_background_2d(&g, 0).unwrap();
        for seed in 0..5 {
            let (u, a) = smooth_modulus_config(&g, 10 + seed);
            let v = vorticity(&u, &a, &b).unwrap();
            assert_eq!(v.slice_sums(0, 1), vec![0]);
        }
    }

    #[test]
    fn flags_zeros() {
        let g = TorusGeometry::uniform(2, 4, 1.0).unwrap();
        let b = build_background_2d(&g, 0).unwrap();
        let mut u = Section::constant(&g, Complex64::new(1.0, 0.0));
        u.values_mut()[5] = Complex64::new(0.0, 0.0);
        match vorticity(&u, &Gauge1Form::zeros(&g), &b) {
            Err(VortexError::ZeroOnPlaquette { plaquettes }) => assert_eq!(plaquettes.len(), 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mass_examples() {
        let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
        let mut v = VorticityField::zeros(&g);
        assert_eq!(vortex_mass(&v, &g), 0.0);
        v.windings[9] = 1;
        assert_eq!(vortex_mass(&v, &g), 1.0);
        let g3 = TorusGeometry::uniform(3, 8, 1.0).unwrap();
        let mut w = VorticityField::zeros(&g3);
        let p = g3.plane_index(0, 1);
        for z in 0..8 {
            w.windings[p * g3.n_sites() + g3.site_index(&[2, 3, z])] = 1;
        }
        assert!((vortex_mass(&w, &g3) - 1.0).abs() < 1e-12);
        let comps = dual_components(&w);
        assert_eq!(comps.len(), 1);
        assert!(comps[0].is_simple_loop);
        assert_eq!(comps[0].plaquettes.len(), 8);
    }

    #[test]
    fn h_minus1_examples() {
        let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
        let mut rng = test_rng(7);
        let a = Cochain::from_fn(&g, 2, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
        assert_eq!(h_minus1_distance(&a, &a).unwrap(), 0.0);
        let shifted = &a + &Cochain::constant(&g, 2, 0.5).unwrap();
        assert!((h_minus1_distance(&shifted, &a).unwrap() - 0.5).abs() < 1e-12);
        let c = Cochain::from_fn(&g, 2, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
        let ab = h_minus1_distance(&a, &c).unwrap();
        assert!((ab - h_minus1_distance(&c, &a).unwrap()).abs() < 1e-14);
        let z = Cochain::zeros(&g, 2).unwrap();
        assert!(ab <= h_minus1_distance(&a, &z).unwrap() + h_minus1_distance(&z, &c).unwrap() + 1e-10);
    }
}
