use proptest::prelude::*;
use rom0d::analysis::{impedance, DEFAULT_HARMONIC_FLOOR};
use rom0d::datagen::{fit_ri, fit_rri, sample_geometries, synthesize_timeseries, SamplingRanges, BASE_DIMS};
use rom0d::flowsplit::{estimate_flow_splits, populate_flow_splits};
use rom0d::network::{
    generate_random_tree, poiseuille_elements, BifurcationDefinition, BoundaryCondition, Fluid, Inflow, Junction,
    NetworkOptions, TreeSpec, VascularNetwork, VesselSpec,
};
use rom0d::nondim::{
    nondimensionalize_coeffs, redimensionalize_coeffs, CharacteristicScales, CoefficientSet, ModelKind, ZNormStats,
};
use rom0d::solver::{
    assemble_standard_residual, idx, solve, solve_standard, standard_jacobian, Engine, SolverConfig, Step, Q_IN,
    Q_OUT,
};
use rom0d::Network;

fn splits(net: &Network, x: &[f64]) -> Vec<[f64; 2]> {
    (0..net.junctions().len())
        .map(|j| {
            let q = x[idx(net.junction_inlet(j), Q_OUT)];
            net.junction_outlets(j).map(|c| x[idx(c, Q_IN)] / q)
        })
        .collect()
}

fn gap(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| [(x[0] - y[0]).abs(), (x[1] - y[1]).abs()]).fold(0.0, f64::max)
}

fn attributed_rri_tree(depth: usize, seed: u64, r_quad: f64) -> Network {
    let spec = TreeSpec::<f64>::new(depth);
    let mut net = generate_random_tree(&spec, seed).unwrap();
    for j in 0..net.junctions().len() {
        let lengths = net.junctions()[j].attributed_lengths();
        for (k, c) in net.junction_outlets(j).into_iter().enumerate() {
            let (r, l) = poiseuille_elements(lengths[k], net.vessels()[c].area(), net.fluid()).unwrap();
            net.set_outlet_coefficients(j, k, CoefficientSet::rri(r, r_quad, l)).unwrap();
            net.set_outlet_coefficients(j, k, CoefficientSet::ri(r, l)).unwrap();
        }
    }
    populate_flow_splits(&mut net).unwrap();
    net
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimated_splits_match_solved_splits(depth in 1usize..6, seed in any::<u64>()) {
        let net = generate_random_tree(&TreeSpec::<f64>::new(depth), seed).unwrap();
        let est: Vec<[f64; 2]> = estimate_flow_splits(&net).unwrap().junctions.iter().map(|s| s.phi).collect();
        let x = solve_standard(&net, &SolverConfig::steady()).unwrap().last().to_vec();
        prop_assert!(gap(&est, &splits(&net, &x)) < 1e-10);
        for phi in &est {
            prop_assert!((phi[0] + phi[1] - 1.0).abs() < 1e-12);
            prop_assert!(phi[0] > 0.0 && phi[1] > 0.0);
        }
    }

    #[test]
    fn splits_do_not_depend_on_inflow(depth in 1usize..5, seed in any::<u64>(), q in 1e-3f64..1e3) {
        let mut net = generate_random_tree(&TreeSpec::<f64>::new(depth), seed).unwrap();
        let base: Vec<[f64; 2]> = estimate_flow_splits(&net).unwrap().junctions.iter().map(|s| s.phi).collect();
        net.set_inflow(Inflow::Steady(q)).unwrap();
        let x = solve_standard(&net, &SolverConfig::steady()).unwrap().last().to_vec();
        prop_assert!(gap(&base, &splits(&net, &x)) < 1e-10);
    }

    #[test]
    fn root_pressure_grows_with_inflow(depth in 1usize..5, seed in any::<u64>(), q in 1.0f64..100.0) {
        let mut net = generate_random_tree(&TreeSpec::<f64>::new(depth), seed).unwrap();
        let mut p = Vec::new();
        for scale in [1.0, 2.0] {
            net.set_inflow(Inflow::Steady(q * scale)).unwrap();
            p.push(solve_standard(&net, &SolverConfig::steady()).unwrap().last()[idx(net.root(), 0)]);
        }
        prop_assert!(p[1] > p[0]);
    }

    #[test]
    fn linear_networks_converge_in_one_newton_step(depth in 1usize..6, seed in any::<u64>()) {
        let net = generate_random_tree(&TreeSpec::<f64>::new(depth), seed).unwrap();
        let s = solve_standard(&net, &SolverConfig::steady()).unwrap();
        prop_assert_eq!(s.diagnostics[0].iterations, 1);
    }

    #[test]
    fn ri_and_rri_agree_without_quadratic_term(depth in 1usize..4, seed in any::<u64>()) {
        let net = attributed_rri_tree(depth, seed, 0.0);
        let cfg = SolverConfig::steady();
        let a = solve(&net, Engine::JunctionNewton(ModelKind::Rri), &cfg).unwrap();
        let b = solve(&net, Engine::JunctionNewton(ModelKind::Ri), &cfg).unwrap();
        for (x, y) in a.last().iter().zip(b.last()) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn ri_fit_matches_rri_fit_on_linear_data(r in 1.0f64..1e3, l in 0.1f64..100.0) {
        let time: Vec<f64> = (0..400).map(|i| i as f64 * 1e-3).collect();
        let flow: Vec<f64> = time.iter().map(|t| 5.0 + 3.0 * (15.0 * t).sin()).collect();
        let s = synthesize_timeseries(&CoefficientSet::rri(r, 0.0, l), &time, &flow).unwrap();
        let a = fit_rri(&s).unwrap().coefficients;
        let b = fit_ri(&s).unwrap().coefficients;
        prop_assert!((a.r_lin - b.r_lin).abs() <= 1e-8 * r);
        prop_assert!((a.inductance - b.inductance).abs() <= 1e-8 * l.max(1.0));
        prop_assert!(a.r_quad().abs() <= 1e-8 * r);
    }

    #[test]
    fn impedance_is_linear_in_pressure(a in 0.1f64..10.0, r in 1.0f64..1e3) {
        let period = 0.5;
        let n = 200;
        let time: Vec<f64> = (0..=n).map(|i| i as f64 * period / n as f64).collect();
        let w = 2.0 * std::f64::consts::PI / period;
        let flow: Vec<f64> = time.iter().map(|t| 3.0 + (w * t).sin() + 0.5 * (2.0 * w * t).cos()).collect();
        let dp: Vec<f64> = flow.iter().map(|q| r * q).collect();
        let dp2: Vec<f64> = dp.iter().map(|p| a * p).collect();
        let z1 = impedance(&time, &flow, &dp, period, DEFAULT_HARMONIC_FLOOR).unwrap();
        let z2 = impedance(&time, &flow, &dp2, period, DEFAULT_HARMONIC_FLOOR).unwrap();
        prop_assert!(!z1.harmonics.is_empty());
        for (h1, h2) in z1.harmonics.iter().zip(&z2.harmonics) {
            prop_assert!((h1.magnitude() - r).abs() <= 1e-9 * r);
            prop_assert!((h2.magnitude() - a * h1.magnitude()).abs() <= 1e-9 * h2.magnitude());
            prop_assert!((h2.phase() - h1.phase()).abs() <= 1e-9);
        }
    }

    #[test]
    fn coefficient_scaling_round_trips(
        len in 0.01f64..5.0, re in 10.0f64..1e4,
        r_lin in -1e3f64..1e3, r_quad in -1e2f64..1e2, l in 0.0f64..1e2,
    ) {
        let scales = CharacteristicScales::new(len, &Fluid::blood(), re).unwrap();
        let c = CoefficientSet::rri(r_lin, r_quad, l);
        let star = nondimensionalize_coeffs(&c, &scales).unwrap();
        prop_assert!(star.is_dimensionless());
        let back = redimensionalize_coeffs(&star, &scales).unwrap();
        for (x, y) in back.values().iter().zip(c.values()) {
            prop_assert!((x - y).abs() <= 1e-13 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn znorm_standardizes_and_inverts(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 3..40)) {
        let stats = match ZNormStats::fit(&rows, &["a", "b", "c"]) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let z: Vec<Vec<f64>> = rows.iter().map(|r| stats.apply(r)).collect();
        for d in 0..3 {
            let n = z.len() as f64;
            let mean = z.iter().map(|r| r[d]).sum::<f64>() / n;
            let var = z.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9);
        }
        for (r, zr) in rows.iter().zip(&z) {
            for (x, y) in stats.invert(zr).iter().zip(r) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn latin_hypercube_fills_every_stratum_once(n in 1usize..60, seed in any::<u64>()) {
        let ranges = SamplingRanges::<f64>::default();
        let samples = sample_geometries(n, &ranges, seed).unwrap();
        prop_assert_eq!(samples.len(), n);
        for (d, iv) in ranges.base_intervals().iter().enumerate() {
            let mut seen = vec![false; n];
            for s in &samples {
                let x = s.base()[d];
                prop_assert!(iv.contains(x));
                let k = (((x - iv.min) / iv.width()) * n as f64).floor().min((n - 1) as f64) as usize;
                prop_assert!(!seen[k], "stratum {} of dimension {} hit twice", k, d);
                seen[k] = true;
            }
        }
        prop_assert_eq!(BASE_DIMS, 7);
    }
}

fn stenosed_junction() -> Network {
    let mut vessels: Vec<VesselSpec<f64>> =
        vec![VesselSpec::new(0, 4.0, 0.8), VesselSpec::new(1, 3.0, 0.4), VesselSpec::new(2, 5.0, 0.35)];
    vessels[1].stenosis_area = Some(0.15);
    VascularNetwork::new(
        Fluid::blood(),
        vessels,
        vec![Junction::new(0, 0, [1, 2], [0.4, 0.7])],
        vec![
            (0, BoundaryCondition::Inflow(Inflow::Steady(20.0))),
            (1, BoundaryCondition::Resistance { resistance: 300.0, distal_pressure: 10.0 }),
            (2, BoundaryCondition::Resistance { resistance: 500.0, distal_pressure: 10.0 }),
        ],
        BifurcationDefinition::PartialBranch,
        NetworkOptions::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn jacobian_matches_finite_differences(
        x in prop::collection::vec(-50.0f64..50.0, 12),
        prev in prop::collection::vec(-50.0f64..50.0, 12),
        transient in any::<bool>(),
    ) {
        let net = stenosed_junction();
        let step = Step { inflow: 20.0, previous: transient.then_some((&prev[..], 1e-3)) };
        let jac = standard_jacobian(&net, &x, &step);
        let n = x.len();
        for j in 0..n {
            let h = 1e-6 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let rp = assemble_standard_residual(&net, &xp, &step);
            let rm = assemble_standard_residual(&net, &xm, &step);
            for i in 0..n {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                let an = jac.row(i)[j];
                prop_assert!((fd - an).abs() <= 1e-5 * (1.0 + an.abs()), "J[{},{}] = {} vs {}", i, j, an, fd);
            }
        }
    }
}
