use proptest::prelude::*;

use pdm_dirac::analytic::{spectrum_value, BoundState};
use pdm_dirac::eigensolver::solve_fixed;
use pdm_dirac::grid::{MappedGrid, QGrid};
use pdm_dirac::pipeline::{build_map, solve, ModeRequest, SolveOptions};
use pdm_dirac::potential::{approx_potential, constant_u_potential, ZetaPair};
use pdm_dirac::profiles::{
    builtin_model, detect_constant_u, five_point, product_u, BuiltinModel, ModelSpec, Params,
};
use pdm_dirac::spinor::{normalize, observables, reconstruct};
use pdm_dirac::tridiag::SymTridiagonal;

fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn abc(alpha: f64, v0: f64, m0: f64) -> Params {
    params(&[("alpha", alpha), ("v0", v0), ("m0", m0)])
}

fn symmetric_kind() -> impl Strategy<Value = BuiltinModel> {
    prop_oneof![Just(BuiltinModel::CoshSquare), Just(BuiltinModel::Rational)]
}

fn any_model() -> impl Strategy<Value = ModelSpec> {
    let abc_models = (
        prop_oneof![
            Just(BuiltinModel::CoshSquare),
            Just(BuiltinModel::Rational),
            Just(BuiltinModel::PoschlTeller),
        ],
        0.3f64..2.5,
        0.3f64..2.5,
        0.3f64..2.0,
    )
        .prop_map(|(kind, a, v0, m0)| builtin_model(kind, &abc(a, v0, m0)).unwrap());
    let oscillator = (0.3f64..2.0, 0.3f64..2.0).prop_map(|(a, v0)| {
        builtin_model(
            BuiltinModel::LinearSingular,
            &params(&[("A", a), ("v0", v0)]),
        )
        .unwrap()
    });
    let rest = (0.1f64..3.0, 0.2f64..3.0).prop_map(|(m0, c)| {
        builtin_model(BuiltinModel::ConstantRest, &params(&[("m0", m0), ("c", c)])).unwrap()
    });
    prop_oneof![abc_models, oscillator, rest]
}

/// A point strictly inside the domain, drawn from `t` in (0, 1).
fn interior_point(model: &ModelSpec, t: f64) -> f64 {
    let d = model.velocity.domain();
    let (lo, hi) = (d.lo.max(-6.0), d.hi.min(6.0));
    let (lo, hi) = if d.lo.is_finite() && d.hi.is_finite() {
        let pad = 0.05 * (hi - lo);
        (lo + pad, hi - pad)
    } else if d.lo.is_finite() {
        (lo + 0.2, hi)
    } else {
        (lo, hi)
    };
    lo + (hi - lo) * t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_derivatives_match_stencils(model in any_model(), t in 0.0f64..1.0) {
        let x = interior_point(&model, t);
        let h = 1e-3 * x.abs().max(0.1);
        for (name, f, d1, d2) in [
            (
                "velocity",
                &(|y: f64| model.velocity.eval(y)) as &dyn Fn(f64) -> f64,
                model.velocity.deriv1(x),
                model.velocity.deriv2(x),
            ),
            ("mass", &|y: f64| model.mass.eval(y), model.mass.deriv1(x), model.mass.deriv2(x)),
        ] {
            let (fd1, fd2) = five_point(f, x, h);
            let scale1 = d1.abs().max(f(x).abs()).max(1e-300);
            let scale2 = d2.abs().max(f(x).abs()).max(1e-300);
            prop_assert!((fd1 - d1).abs() / scale1 <= 1e-6, "{name}' at {x}: {fd1} vs {d1}");
            prop_assert!((fd2 - d2).abs() / scale2 <= 1e-6, "{name}'' at {x}: {fd2} vs {d2}");
        }
    }

    #[test]
    fn transform_is_monotone(model in any_model(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        prop_assume!((t1 - t2).abs() > 1e-6);
        let map = build_map(&model, 1e-12).unwrap();
        let (x1, x2) = (interior_point(&model, t1.min(t2)), interior_point(&model, t1.max(t2)));
        prop_assert!(map.forward(x1).unwrap() < map.forward(x2).unwrap());
    }

    #[test]
    fn transform_round_trip(model in any_model(), t in 0.0f64..1.0) {
        let map = build_map(&model, 1e-12).unwrap();
        let x = interior_point(&model, t);
        let back = map.invert(map.forward(x).unwrap()).unwrap();
        prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0), "{x} -> {back}");
    }

    #[test]
    fn zeta_identity(model in any_model(), t in 0.0f64..1.0, e in -5.0f64..5.0) {
        let x = interior_point(&model, t);
        let z = ZetaPair::new(&model, e);
        let u = product_u(&model, x).unwrap().u;
        let (z1, z2) = (z.zeta1(x).unwrap(), z.zeta2(x).unwrap());
        prop_assert!((z2 - z1 - 2.0 * u).abs() <= 1e-12 * u.abs().max(1.0));
        prop_assert!((z1 + z2 - 2.0 * e).abs() <= 1e-12 * e.abs().max(u.abs()).max(1.0));
    }

    #[test]
    fn symmetric_potentials_are_even(
        kind in symmetric_kind(),
        a in 0.3f64..2.5,
        v0 in 0.3f64..2.5,
        m0 in 0.1f64..2.0,
    ) {
        let model = builtin_model(kind, &abc(a, v0, m0)).unwrap();
        let map = build_map(&model, 1e-12).unwrap();
        let w = 0.9 * map.q_hi();
        let mg = MappedGrid::new(QGrid::vertex(-w, w, 201).unwrap(), &map).unwrap();
        let v = approx_potential(&model, &mg).unwrap().values;
        for i in 0..v.len() {
            prop_assert!((v[i] - v[v.len() - 1 - i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn constant_u_is_detected(
        kind in symmetric_kind(),
        a in 0.3f64..2.5,
        v0 in 0.3f64..2.5,
        m0 in 0.0f64..2.0,
    ) {
        let model = builtin_model(kind, &abc(a, v0, m0)).unwrap();
        let big_a = detect_constant_u(&model, 1e-12).unwrap();
        prop_assert!((big_a - m0 * v0 * v0).abs() <= 1e-12 * big_a.max(1.0));
    }

    #[test]
    fn closed_form_levels_increase(
        kind in symmetric_kind(),
        a in 0.3f64..2.5,
        v0 in 0.3f64..2.5,
        m0 in 0.0f64..2.0,
        n in 1usize..8,
    ) {
        let p = abc(a, v0, m0);
        let (e0, _) = spectrum_value(kind, n, &p).unwrap();
        let (e1, _) = spectrum_value(kind, n + 1, &p).unwrap();
        prop_assert!(e1 > e0);
        let (free, _) = spectrum_value(kind, n, &abc(a, v0, 0.0)).unwrap();
        prop_assert!((e0 * e0 - free * free - (m0 * v0 * v0).powi(2)).abs() <= 1e-10 * e0 * e0);
    }

    #[test]
    fn sturm_count_matches_eigenvalue_index(
        d in prop::collection::vec(-5.0f64..5.0, 2..40),
        seed in prop::collection::vec(-2.0f64..2.0, 40),
    ) {
        let e: Vec<f64> = seed[..d.len() - 1]
            .iter()
            .map(|&x| if x.abs() < 1e-3 { 1e-3 } else { x })
            .collect();
        let t = SymTridiagonal::new(d.clone(), e);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..d.len() {
            let lambda = t.eigenvalue(k);
            prop_assert!(lambda >= prev);
            let eps = 1e-9 * lambda.abs().max(1.0);
            prop_assert!(t.sturm_count(lambda - eps) <= k);
            prop_assert!(t.sturm_count(lambda + eps) > k);
            prev = lambda;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eigenfunctions_alternate_parity(
        kind in prop_oneof![
            Just(BuiltinModel::CoshSquare),
            Just(BuiltinModel::Rational),
            Just(BuiltinModel::PoschlTeller),
        ],
        a in 0.5f64..2.0,
        v0 in 0.5f64..2.0,
        m0 in 0.5f64..2.0,
    ) {
        let model = builtin_model(kind, &abc(a, v0, m0)).unwrap();
        let opts = SolveOptions { nodes: 401, states: 4, ..SolveOptions::default() };
        let out = solve(&model, ModeRequest::Auto, &opts).unwrap();
        for s in &out.states {
            let pair = s.pair.as_ref().unwrap();
            let norm = pair.phi.iter().map(|p| p * p).sum::<f64>().sqrt();
            let sign = if s.index % 2 == 0 { 1.0 } else { -1.0 };
            let n = pair.phi.len();
            for i in 0..n {
                let diff = (pair.phi[i] - sign * pair.phi[n - 1 - i]).abs() / norm;
                prop_assert!(diff <= 1e-6, "state {} node {i}: {diff}", s.index);
            }
            prop_assert_eq!(s.nodes, s.index);
        }
    }

    #[test]
    fn reconstructed_states_carry_no_current(
        kind in symmetric_kind(),
        a in 0.5f64..2.0,
        v0 in 0.5f64..2.0,
        m0 in 0.0f64..2.0,
        k in 0usize..4,
    ) {
        let model = builtin_model(kind, &abc(a, v0, m0)).unwrap();
        let map = build_map(&model, 1e-12).unwrap();
        let mg = MappedGrid::new(QGrid::vertex(map.q_lo(), map.q_hi(), 801).unwrap(), &map).unwrap();
        let big_a = detect_constant_u(&model, 1e-10).unwrap();
        let spectrum = solve_fixed(&constant_u_potential(big_a, &mg), k + 1).unwrap();
        let (e, _) = spectrum.energies[k].unwrap();
        let spinor = normalize(&reconstruct(&spectrum.pairs[k], &model, &map, e).unwrap()).unwrap();
        let obs = observables(&spinor);
        prop_assert!(obs.rho.iter().all(|&r| r >= 0.0));
        prop_assert!(obs.j.iter().all(|j| j.abs() <= 1e-10));
    }
}

#[test]
fn closed_form_spinor_matches_reconstruction() {
    for kind in [BuiltinModel::CoshSquare, BuiltinModel::Rational] {
        for m0 in [0.0, 1.0] {
            let p = abc(1.0, 1.0, m0);
            let model = builtin_model(kind, &p).unwrap();
            let map = build_map(&model, 1e-12).unwrap();
            let opts = SolveOptions {
                states: 3,
                nodes: 4001,
                ..SolveOptions::default()
            };
            let out = solve(&model, ModeRequest::Auto, &opts).unwrap();
            for s in &out.states {
                let pair = s.pair.as_ref().unwrap();
                let mut numeric =
                    normalize(&reconstruct(pair, &model, &map, s.energy_plus).unwrap()).unwrap();
                numeric.align_phase();
                let state = BoundState::new(kind, s.index + 1, &p).unwrap();
                let mut worst: f64 = 0.0;
                let (psi1, psi2) = (numeric.psi1(), numeric.psi2());
                let mut sign = None;
                for (i, &x) in numeric.x.iter().enumerate() {
                    if !x.is_finite() {
                        continue;
                    }
                    let (a, b) = state.eval(x).unwrap();
                    let sg =
                        *sign.get_or_insert(if (a.re * psi1[i].re) < 0.0 { -1.0 } else { 1.0 });
                    worst = worst
                        .max((psi1[i] - a * sg).norm())
                        .max((psi2[i] - b * sg).norm());
                }
                assert!(worst <= 1e-5, "{kind} m0={m0} state {}: {worst}", s.index);
            }
        }
    }
}
