use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use vortexlab_core::bundle::{build_background, Gauge1Form, Section};
use vortexlab_core::fields::{g_energy, truncate};
use vortexlab_core::gauge::{apply_gauge, coulomb_fix, GaugePhase};
use vortexlab_core::hodge::{hodge_decompose, solve_london};
use vortexlab_core::io::{parse_cochain, parse_section, write_cochain, write_section};
use vortexlab_core::lattice::{codifferential, exterior_derivative, inner_product, Cochain, TorusGeometry};
use vortexlab_core::vortex::{h_minus1_distance, vorticity};
use vortexlab_core::wrap_angle;

fn geometry() -> impl Strategy<Value = TorusGeometry> {
    prop_oneof![
        (prop::collection::vec(4usize..9, 2), prop::collection::vec(0.5f64..2.0, 2)),
        (prop::collection::vec(4usize..7, 3), prop::collection::vec(0.5f64..2.0, 3)),
    ]
    .prop_map(|(n, l)| TorusGeometry::new(&n, &l).unwrap())
}

/// A geometry, a degree and a cochain of that degree.
fn cochain() -> impl Strategy<Value = Cochain> {
    geometry()
        .prop_flat_map(|g| {
            let dim = g.dim();
            (Just(g), 0..=dim)
        })
        .prop_flat_map(|(g, k)| {
            let len = g.n_cells(k);
            (Just(g), Just(k), prop::collection::vec(-10.0f64..10.0, len))
        })
        .prop_map(|(g, k, v)| Cochain::from_values(&g, k, v).unwrap())
}

fn pair() -> impl Strategy<Value = (Section, Gauge1Form, Vec<f64>, Vec<i64>)> {
    geometry().prop_flat_map(|g| {
        let ns = g.n_sites();
        let dim = g.dim();
        (
            prop::collection::vec((0.0f64..1.5, -PI..PI), ns),
            prop::collection::vec(-3.0f64..3.0, g.n_cells(1)),
            prop::collection::vec(-PI..PI, ns),
            prop::collection::vec(-2i64..=2, dim),
            Just(g),
        )
            .prop_map(|(u, a, theta, m, g)| {
                let u = Section::from_values(&g, u.into_iter().map(|(r, t)| Complex64::from_polar(r, t)).collect())
                    .unwrap();
                let a = Gauge1Form::from_cochain(Cochain::from_values(&g, 1, a).unwrap()).unwrap();
                (u, a, theta, m)
            })
    })
}

fn chern_for(dim: usize, c: i64) -> Vec<Vec<i64>> {
    let mut m = vec![vec![0; dim]; dim];
    m[0][1] = c;
    m[1][0] = -c;
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn codifferential_is_adjoint(c in cochain(), seed in any::<u64>()) {
        prop_assume!(c.degree() > 0);
        let g = c.geometry().clone();
        let mut state = seed;
        let alpha = Cochain::from_fn(&g, c.degree() - 1, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }).unwrap();
        let lhs = inner_product(&exterior_derivative(&alpha).unwrap(), &c).unwrap();
        let rhs = inner_product(&alpha, &codifferential(&c).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * alpha.norm() * c.norm() + 1e-300);
    }

    #[test]
    fn hodge_parts_reconstruct_and_are_orthogonal(c in cochain()) {
        let parts = hodge_decompose(&c);
        let n = c.norm().max(1e-300);
        prop_assert!((&parts.reconstruct() - &c).norm() <= 1e-10 * n);
        let (ex, co) = (parts.exact_part(), parts.coexact_part());
        prop_assert!(inner_product(&ex, &co).unwrap().abs() <= 1e-10 * n * n);
        prop_assert!(inner_product(&ex, &parts.harmonic).unwrap().abs() <= 1e-10 * n * n);
    }

    #[test]
    fn london_solver_is_linear(c in cochain(), alpha in -5.0f64..5.0) {
        let mut scaled = c.clone();
        scaled.values_mut().iter_mut().for_each(|v| *v *= alpha);
        let mut expected = solve_london(&c);
        expected.values_mut().iter_mut().for_each(|v| *v *= alpha);
        prop_assert!((&solve_london(&scaled) - &expected).norm() <= 1e-10 * (1.0 + scaled.norm()));
    }

    #[test]
    fn h_minus1_distance_is_a_metric(c in cochain()) {
        prop_assume!(c.degree() == 2);
        let zero = Cochain::zeros(c.geometry(), 2).unwrap();
        let half = {
            let mut h = c.clone();
            h.values_mut().iter_mut().for_each(|v| *v *= 0.5);
            h
        };
        let d = h_minus1_distance(&c, &zero).unwrap();
        prop_assert_eq!(h_minus1_distance(&c, &c).unwrap(), 0.0);
        prop_assert!((d - h_minus1_distance(&zero, &c).unwrap()).abs() <= 1e-12 * (1.0 + d));
        let via = h_minus1_distance(&c, &half).unwrap() + h_minus1_distance(&half, &zero).unwrap();
        prop_assert!(d <= via + 1e-10 * (1.0 + d));
    }

    #[test]
    fn dumps_round_trip_exactly(c in cochain()) {
        prop_assert_eq!(parse_cochain(&write_cochain(&c)).unwrap(), c);
    }

    #[test]
    fn section_dump_round_trips((u, _, _, _) in pair()) {
        prop_assert_eq!(parse_section(&write_section(&u)).unwrap(), u);
    }

    #[test]
    fn gauge_transformations_preserve_energy_and_vorticity(
        (u, a, theta, m) in pair(),
        c in -2i64..=2,
        eps in 0.05f64..0.8,
    ) {
        let g = u.geometry().clone();
        let b = build_background(&g, &chern_for(g.dim(), c)).unwrap();
        let phase = GaugePhase::with_windings(Cochain::from_values(&g, 0, theta).unwrap(), m).unwrap();
        let (u2, a2) = apply_gauge(&u, &a, &phase).unwrap();
        let (e1, e2) = (g_energy(&u, &a, &b, eps).unwrap(), g_energy(&u2, &a2, &b, eps).unwrap());
        prop_assert!((e1.total - e2.total).abs() <= 1e-10 * e1.total);
        prop_assert_eq!(vorticity(&u, &a, &b).ok(), vorticity(&u2, &a2, &b).ok());
        let (u3, a3) = apply_gauge(&u2, &a2, &phase.inverse()).unwrap();
        prop_assert!((&a3.clone().into_cochain() - a.as_cochain()).max_abs() <= 1e-12 * (1.0 + a.as_cochain().max_abs()) / g.min_spacing());
        prop_assert!(u3.values().iter().zip(u.values()).all(|(x, y)| (x - y).norm() <= 1e-12));
    }

    #[test]
    fn coulomb_gauge_is_gauge_equivalent((u, a, _, _) in pair(), c in -2i64..=2) {
        let g = u.geometry().clone();
        let b = build_background(&g, &chern_for(g.dim(), c)).unwrap();
        let (u2, a2, _) = coulomb_fix(&u, &a).unwrap();
        let (e1, e2) = (g_energy(&u, &a, &b, 0.3).unwrap(), g_energy(&u2, &a2, &b, 0.3).unwrap());
        prop_assert!((e1.total - e2.total).abs() <= 1e-10 * e1.total);
        prop_assert!(codifferential(a2.as_cochain()).unwrap().norm() <= 1e-9 * (1.0 + a.as_cochain().norm()));
    }

    #[test]
    fn truncation_clips_modulus_and_energy((u, a, _, _) in pair(), c in -2i64..=2, eps in 0.05f64..0.8) {
        let g = u.geometry().clone();
        let b = build_background(&g, &chern_for(g.dim(), c)).unwrap();
        let t = truncate(&u);
        prop_assert!(t.max_modulus() <= 1.0);
        prop_assert!(g_energy(&t, &a, &b, eps).unwrap().total <= g_energy(&u, &a, &b, eps).unwrap().total);
    }

    #[test]
    fn wrapped_angles_land_in_half_open_interval(x in -1e3f64..1e3) {
        let w = wrap_angle(x);
        prop_assert!(w > -PI && w <= PI);
        let turns = (x - w) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() <= 1e-9);
    }
}
