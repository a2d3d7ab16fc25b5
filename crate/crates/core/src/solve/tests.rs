use super::*;
use crate::bundle::{build_background, build_background_2d};
use crate::hodge::cosine_mode;
use crate::lattice::TorusGeometry;
use crate::util::test_rng;
use crate::vortex::{dual_components, vortex_mass, vorticity};
use rand::Rng;
use std::f64::consts::PI;

fn random_pair(g: &TorusGeometry, seed: u64, umax: f64, amax: f64) -> (Section, Gauge1Form) {
    let mut rng = test_rng(seed);
    let u = Section::from_fn(g, |_| Complex64::from_polar(rng.gen_range(0.0..umax), rng.gen_range(-PI..PI)));
    let a = Cochain::from_fn(g, 1, |_, _| rng.gen_range(-amax..amax)).unwrap();
    (u, Gauge1Form::from_cochain(a).unwrap())
}

#[test]
fn trivial_ground_state_is_critical() {
    let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
    let b = build_background_2d(&g, 0).unwrap();
    let u = Section::constant(&g, Complex64::new(1.0, 0.0));
    let r = minimize(&u, &Gauge1Form::zeros(&g), &b, 0.2, &MinimizeOptions::default()).unwrap();
    assert!(r.converged);
    assert!(r.iterations <= 1);
    assert_eq!(r.energy.total, 0.0);
}

#[test]
fn trivial_random_start_relaxes_to_zero_energy() {
    let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
    let b = build_background_2d(&g, 0).unwrap();
    let u = random_section(&g, 3, 0.1);
    let r = minimize(&u, &Gauge1Form::zeros(&g), &b, 0.3, &MinimizeOptions::default()).unwrap();
    assert!(r.energy.total < 1e-12);
    assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn single_vortex_minimizer() {
    let g = TorusGeometry::uniform(2, 16, 1.0).unwrap();
    let b = build_background_2d(&g, 1).unwrap();
    let eps = 0.2;
    let (u, a) = default_initial(&b, eps, 0).unwrap();
    let r = minimize(&u, &a, &b, eps, &MinimizeOptions::default()).unwrap();
    assert!(r.grad_norm <= 1e-8);
    assert!(r.london_residual <= 1e-6, "{}", r.london_residual);
    assert!(ampere_residual(&r.section, &r.gauge_field, &b).unwrap() <= 1e-6);
    assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    let start = g_energy(&u, &a, &b, eps).unwrap().total;
    assert!(r.energy.total < start);
    // the flux alone costs 2π²
    assert!(r.energy.curvature >= 2.0 * PI * PI * (1.0 - 1e-12));
    let v = vorticity(&r.section, &r.gauge_field, &b).unwrap();
    assert_eq!(v.support().len(), 1);
    assert!(v.matches_chern(&b));
    let f = curvature(&r.gauge_field, &b).unwrap();
    let london = &solve_london(&(&jacobian(&r.section, &r.gauge_field, &b).unwrap() * 2.0)) - &f;
    assert!(london.norm() <= 1e-6);
}

#[test]
fn truncating_each_step_keeps_modulus_bounded() {
    let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
    let b = build_background_2d(&g, 1).unwrap();
    let (u, a) = random_pair(&g, 5, 1.8, 0.5);
    let opts = MinimizeOptions { truncate_each: true, max_iter: 300, ..Default::default() };
    let r = match minimize(&u, &a, &b, 0.3, &opts) {
        Ok(r) => r,
        Err(e) => e.best().cloned().expect("best iterate"),
    };
    assert!(r.section.max_modulus() <= 1.0 + 1e-15);
    assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn iteration_limit_returns_best() {
    let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
    let b = build_background_2d(&g, 1).unwrap();
    let (u, a) = random_pair(&g, 6, 1.5, 1.0);
    let opts = MinimizeOptions { max_iter: 3, ..Default::default() };
    let err = minimize(&u, &a, &b, 0.3, &opts).unwrap_err();
    let best = err.best().unwrap();
    assert!(!best.converged);
    assert_eq!(best.iterations, 3);
    assert!(best.energy.total < g_energy(&u, &a, &b, 0.3).unwrap().total);
}

#[test]
fn observer_cadence() {
    let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
    let b = build_background_2d(&g, 0).unwrap();
    let u = random_section(&g, 1, 0.1);
    let opts = MinimizeOptions { report_every: 5, ..Default::default() };
    let mut seen = Vec::new();
    let r = minimize_observed(&u, &Gauge1Form::zeros(&g), &b, 0.3, &opts, |rec| seen.push(rec.iteration)).unwrap();
    assert!(!seen.is_empty());
    assert!(seen.iter().all(|i| i % 5 == 0 && *i <= r.iterations));
}

#[test]
fn relax_single_mode_to_zero() {
    let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
    let b = build_background_2d(&g, 0).unwrap();
    let psi = cosine_mode(&g, 2, &[1, 2], &[0]);
    let a = Gauge1Form::from_cochain(codifferential(&psi).unwrap()).unwrap();
    let u = Section::constant(&g, Complex64::new(1.0, 0.0));
    let relaxed = relax_connection(&u, &a, &b, &RelaxOptions::default()).unwrap();
    assert!(relaxed.as_cochain().max_abs() < 1e-8);
}

#[test]
fn relax_without_section_is_yang_mills() {
    let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
    let b = build_background_2d(&g, 1).unwrap();
    let (_, a) = random_pair(&g, 8, 1.0, 2.0);
    let u = Section::constant(&g, Complex64::new(0.0, 0.0));
    let relaxed = relax_connection(&u, &a, &b, &RelaxOptions::default()).unwrap();
    let ym = coexact_projection(&codifferential(&curvature(&relaxed, &b).unwrap()).unwrap());
    assert!(ym.norm() <= 1e-8);
    // only the constant flux survives
    let f = curvature(&relaxed, &b).unwrap();
    assert!((&f - b.f0()).max_abs() < 1e-8);
}

#[test]
fn relax_never_increases_functional() {
    for (dim, n) in [(2, 8), (3, 4)] {
        let g = TorusGeometry::uniform(dim, n, 1.0).unwrap();
        let chern =
            if dim == 2 { vec![vec![0, 1], vec![-1, 0]] } else { vec![vec![0, 1, 0], vec![-1, 0, 0], vec![0, 0, 0]] };
        let b = build_background(&g, &chern).unwrap();
        for seed in 0..4 {
            let (u, a) = random_pair(&g, 20 + seed, 2.0, 1.5);
            let relaxed = relax_connection(&u, &a, &b, &RelaxOptions::default()).unwrap();
            assert!(connection_functional(&u, &relaxed, &b).unwrap() <= connection_functional(&u, &a, &b).unwrap());
            let diff = relaxed.as_cochain() - a.as_cochain();
            assert!(crate::hodge::exact_projection(&diff).max_abs() < 1e-9);
            assert!(crate::hodge::harmonic_projection(&diff).max_abs() < 1e-9);
        }
    }
}

#[test]
fn optimised_pair_lowers_energy() {
    let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
    let b = build_background_2d(&g, 1).unwrap();
    for seed in 0..5 {
        let (u, a) = random_pair(&g, 40 + seed, 2.0, 1.0);
        let (v, bb) = optimised_pair(&u, &a, &b, 0.2, &RelaxOptions::default()).unwrap();
        assert!(g_energy(&v, &bb, &b, 0.2).unwrap().total <= g_energy(&u, &a, &b, 0.2).unwrap().total);
        assert!(v.max_modulus() <= 1.0);
        // fixed point
        let (w, cc) = optimised_pair(&v, &bb, &b, 0.2, &RelaxOptions::default()).unwrap();
        assert_eq!(w, v);
        let moved = (cc.as_cochain() - bb.as_cochain()).max_abs();
        assert!(moved < 1e-7, "{moved}");
    }
}

#[test]
fn ansatz_point_vortex() {
    let g = TorusGeometry::uniform(2, 32, 1.0).unwrap();
    let b = build_background_2d(&g, 1).unwrap();
    let spec = AnsatzSpec::centered(&b).unwrap();
    let (u, a) = vortex_ansatz(&spec, &b, 0.1).unwrap();
    let v = vorticity(&u, &a, &b).unwrap();
    let support = v.support();
    assert_eq!(support.len(), 1);
    assert_eq!(support[0], (0, g.site_index(&[16, 16]), 1));
    // unit modulus away from the core
    for s in 0..g.n_sites() {
        let x = g.position(s);
        let r = ((x[0] - 16.5 / 32.0).powi(2) + (x[1] - 16.5 / 32.0).powi(2)).sqrt();
        if r >= 0.1 {
            assert!((u.values()[s].norm() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn ansatz_two_defects_and_mismatch() {
    let g = TorusGeometry::uniform(2, 16, 1.0).unwrap();
    let b = build_background_2d(&g, 2).unwrap();
    let (u, a) = vortex_ansatz(&AnsatzSpec::centered(&b).unwrap(), &b, 0.1).unwrap();
    let v = vorticity(&u, &a, &b).unwrap();
    assert_eq!(v.support().len(), 2);
    assert!(v.matches_chern(&b));
    let one = AnsatzSpec {
        axis: None,
        defects: vec![Defect { position: [0.5, 0.5], winding: 1 }],
        profile: CoreProfile::Linear,
    };
    assert!(matches!(vortex_ansatz(&one, &b, 0.1), Err(SolveError::WindingMismatch { expected: 2, got: 1, .. })));
}

#[test]
fn ansatz_line_vortex() {
    let g = TorusGeometry::uniform(3, 16, 1.0).unwrap();
    let chern = vec![vec![0, 1, 0], vec![-1, 0, 0], vec![0, 0, 0]];
    let b = build_background(&g, &chern).unwrap();
    let spec = AnsatzSpec::centered(&b).unwrap();
    assert_eq!(spec.axis, Some(2));
    let (u, a) = vortex_ansatz(&spec, &b, 0.1).unwrap();
    let v = vorticity(&u, &a, &b).unwrap();
    assert!(v.matches_chern(&b));
    assert!((vortex_mass(&v, &g) - 1.0).abs() < 1e-12);
    let loops = dual_components(&v);
    assert_eq!(loops.len(), 1);
    assert!(loops[0].is_simple_loop);
}

#[test]
fn sweep_trivial_and_deterministic() {
    let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
    let chern = vec![vec![0, 0], vec![0, 0]];
    let lattice = SweepLattice::Fixed(g);
    let init = SweepInit::Default { seed: 7 };
    let (t1, _) = epsilon_sweep(&chern, &lattice, &init, &[0.5, 0.4, 0.3], &MinimizeOptions::default()).unwrap();
    let (t2, _) = epsilon_sweep(&chern, &lattice, &init, &[0.5, 0.4, 0.3], &MinimizeOptions::default()).unwrap();
    assert_eq!(t1.to_csv(), t2.to_csv());
    assert_eq!(t1.records.len(), 3);
    for r in &t1.records {
        assert!(r.g_total < 1e-12);
        assert_eq!(r.vortex_mass, 0.0);
        assert_eq!(r.chern_pairing, 0);
    }
    assert_eq!(t1.to_csv().lines().next().unwrap(), SweepTable::COLUMNS.join(","));
}

#[test]
fn sweep_validates_inputs() {
    let g = TorusGeometry::uniform(2, 8, 1.0).unwrap();
    let chern = vec![vec![0, 0], vec![0, 0]];
    let fixed = SweepLattice::Fixed(g);
    let init = SweepInit::Default { seed: 0 };
    let o = MinimizeOptions::default();
    assert!(epsilon_sweep(&chern, &fixed, &init, &[0.3, 0.4], &o).is_err());
    assert!(epsilon_sweep(&chern, &fixed, &init, &[0.2], &o).is_err());
    assert!(epsilon_sweep(&chern, &fixed, &init, &[1.2, 0.5], &o).is_err());
    let scaled = SweepLattice::Scaled { lengths: vec![1.0, 1.0], ratio: 0.6 };
    assert!(epsilon_sweep(&chern, &scaled, &init, &[0.5], &o).is_err());
}
