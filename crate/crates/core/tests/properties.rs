use evaflow::field::VectorField;
use evaflow::poly::{Poly, PolyVectorField};
use evaflow::report::Case;
use evaflow::simulator::{preset, Initial, Limiter, LedgerEntry, Ledger, Mode, Simulation};
use evaflow::surface::{surface_divergence, tangential_project, ClosedSurface, VectorInput};
use evaflow::tensors::{rate_of_strain, MaterialParams};
use evaflow::transport::{bulk_transport_residual, MovingDomain, RadiusLaw};
use evaflow::Vec3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vec3() -> impl Strategy<Value = Vec3> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c)| Vec3::new(a, b, c))
}

fn entry(t: f64) -> LedgerEntry {
    LedgerEntry {
        t,
        mass_a: 1.0,
        mass_b: 2.0,
        surf_mass: 0.5,
        ke_a: 0.0,
        ke_b: 0.1,
        dissipation: 0.0,
        work_b: 0.0,
        work_surf: 0.0,
        src_a: 0.0,
        src_b: 0.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projector_is_idempotent_and_tangent(v in vec3(), node in 0usize..200) {
        let s = ClosedSurface::ellipsoid(1.5, 1.0, 0.7, 10, 20).unwrap();
        let node = node % s.len();
        let p = tangential_project(&s, node, &v).unwrap();
        let pp = tangential_project(&s, node, &p).unwrap();
        prop_assert!((p - pp).norm() <= 1e-14 * (1.0 + v.norm()));
        prop_assert!(p.dot(&s.normal(node).unwrap()).abs() <= 1e-14 * (1.0 + v.norm()));
    }

    #[test]
    fn strain_trace_is_divergence(seed in any::<u64>(), x in vec3(), t in 0.0..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = PolyVectorField::new([0, 1, 2].map(|_| Poly::random(&mut rng, 3, true, 1.0)));
        let d = rate_of_strain(&v, &x, t);
        prop_assert!((d - d.transpose()).norm() <= 1e-12);
        let div = v.divergence(&x, t);
        prop_assert!((d.trace() - div).abs() <= 1e-10 * (1.0 + div.abs()));
    }

    #[test]
    fn ellipsoid_surface_divergence_of_position_is_two(a in 0.5..2.0f64, b in 0.5..2.0f64, c in 0.5..2.0f64) {
        let s = ClosedSurface::ellipsoid(a, b, c, 12, 24).unwrap();
        let id = |x: &Vec3| *x;
        let div = surface_divergence(&s, VectorInput::Ambient(&id)).unwrap();
        for d in div.as_scalar().unwrap() {
            prop_assert!((d - 2.0).abs() < 1e-8, "{}", d);
        }
    }

    #[test]
    fn ledger_rejects_time_going_backwards(t0 in 0.0..10.0f64, back in 0.0..1.0f64) {
        let mut l = Ledger::new();
        l.push(entry(t0)).unwrap();
        prop_assert!(l.push(entry(t0 - back)).is_err());
        prop_assert!(l.push(entry(t0 + 1e-3)).is_ok());
        prop_assert_eq!(l.entries().len(), 2);
    }

    #[test]
    fn case_semantics(value in -1e3..1e3f64, tol in 0.0..1e3f64) {
        prop_assert_eq!(Case::at_most("c", value, tol).pass, value <= tol);
        prop_assert_eq!(Case::at_least("c", value, tol).pass, value >= tol);
        let near = Case::near("c", value, tol, 1.0);
        prop_assert_eq!(near.value, (value - tol).abs());
        prop_assert!(!Case::at_most("c", f64::NAN, tol).pass);
        prop_assert!(!Case::at_least("c", f64::NEG_INFINITY, tol).pass);
    }

    #[test]
    fn static_ball_transport_residual_vanishes(center in vec3(), r in 0.3..1.5f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = evaflow::poly::PolyField::new(Poly::random(&mut rng, 2, true, 1.0));
        let domain = MovingDomain::growing_ball(RadiusLaw::constant(r), center).unwrap();
        let zero = PolyVectorField::zero();
        let res = bulk_transport_residual(&domain, &f, &zero, 0.3, 1e-2).unwrap();
        prop_assert!(res < 1e-10, "{}", res);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn equilibrium_is_a_fixed_point(
        rho_a in 0.5..2.0f64,
        rho_b in 0.5..2.0f64,
        rho_0 in 0.0..1.0f64,
        pi_0 in 0.5..2.0f64,
        spherical in any::<bool>(),
    ) {
        let mut c = preset(if spherical { "shell_acoustic" } else { "equilibrium_planar" }).unwrap();
        c.rho_a = rho_a;
        c.rho_b = rho_b;
        c.initial = Initial::Equilibrium;
        c.params = MaterialParams { rho_0, pi_0, ..c.params };
        c.cells = 40;
        c.steps = Some(20);
        let mut sim = Simulation::new(c).unwrap();
        let start = sim.state.clone();
        sim.run().unwrap();
        prop_assert!(sim.state.max_difference(&start) < 1e-12, "{}", sim.state.max_difference(&start));
    }

    #[test]
    fn conservative_mode_conserves_total_mass(
        amplitude in -0.2..0.2f64,
        center in 0.2..0.8f64,
        width in 0.05..0.3f64,
        spherical in any::<bool>(),
        limiter in prop_oneof![Just(Limiter::Minmod), Just(Limiter::None)],
    ) {
        let mut c = preset(if spherical { "shell_acoustic" } else { "equilibrium_planar" }).unwrap();
        c.initial = Initial::DensityPulse { amplitude, center, width };
        c.mode = Mode::Conservative;
        c.limiter = limiter;
        c.cells = 60;
        c.steps = Some(100);
        let mut sim = Simulation::new(c).unwrap();
        sim.run().unwrap();
        let (t0, t1) = (sim.ledger.entries()[0].t, sim.state.t);
        let drift = sim.ledger.check_mass_law(t0, t1).unwrap();
        prop_assert!(drift < 1e-12, "{}", drift);
    }
}

#[test]
fn classical_limit_is_continuous_in_surface_density() {
    let diffs: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&rho_0| {
            let mut c = preset("planar_piston").unwrap();
            c.params.rho_0 = rho_0;
            let mut sim = Simulation::new(c).unwrap();
            sim.run().unwrap();
            sim.classical_max_diff().unwrap()
        })
        .collect();
    assert!(diffs[0] > diffs[1] && diffs[1] > diffs[2], "{diffs:?}");
    assert!(diffs[2] < 1e-2 * diffs[0], "{diffs:?}");
}
