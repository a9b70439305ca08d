use proptest::prelude::*;

use progmeter::channels::{channel_distance, complete_contraction, unitary_channel, Picture};
use progmeter::multimeter::{
    minimal_dilation_multimeter, push_button_channels, shared_pointer_multimeter, spin_pair_multimeter,
    swap_multimeter,
};
use progmeter::observables::{random_sharp_observable, spin_observable, StochasticKernel};
use progmeter::operators::{embed_program_isometry, frobenius_distance, partial_trace, tensor, Factor};
use progmeter::random::{
    haar_unitary, random_channel, random_density, random_direction, random_hermitian, random_isometry,
    random_observable, random_operator, random_state, rng,
};
use progmeter::verify::{
    check_channel_program_orthogonality, check_sharp_program_orthogonality, counterexample_search,
    SearchThresholds, Verdict,
};
use progmeter::{Channel, DensityOperator, MeasurementModel, Multimeter, Observable, Operator, Probe, StateVector};
use rand::Rng;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

fn random_kernel(rows: usize, cols: usize, r: &mut impl Rng) -> StochasticKernel {
    let weights = (0..rows)
        .map(|_| {
            let raw: Vec<f64> = (0..cols).map(|_| r.random_range(0.0..1.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|w| w / total).collect()
        })
        .collect();
    StochasticKernel::new(weights, (1..=cols).map(|i| format!("y{i}")).collect()).unwrap()
}

fn basis_pointer(dk: usize) -> Observable {
    Observable::numbered(dk, (0..dk).map(|k| StateVector::basis(dk, k).projector()).collect()).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn partial_trace_inverts_tensor(seed in any::<u64>(), dh in 1usize..4, dk in 1usize..4) {
        let mut r = rng(seed);
        let rho = random_density(dh, dh, &mut r);
        let xi = random_density(dk, dk, &mut r);
        let joint = tensor(rho.operator(), xi.operator()).unwrap();
        let over_k = partial_trace(&joint, dh, dk, Factor::K).unwrap();
        let over_h = partial_trace(&joint, dh, dk, Factor::H).unwrap();
        prop_assert!(frobenius_distance(&over_k, rho.operator()).unwrap() <= 1e-12);
        prop_assert!(frobenius_distance(&over_h, xi.operator()).unwrap() <= 1e-12);
    }

    #[test]
    fn program_isometry_compresses_product_operators(seed in any::<u64>(), dh in 1usize..4, dk in 1usize..4) {
        let mut r = rng(seed);
        let phi = random_state(dk, &mut r);
        let w = embed_program_isometry(&phi, dh);
        prop_assert!(w.is_isometry(1e-12));
        let b = random_operator(dh, &mut r);
        let lifted = tensor(&b, &Operator::identity(dk)).unwrap();
        let compressed = &(&w.adjoint() * &lifted) * &w;
        prop_assert!(frobenius_distance(&compressed, &b).unwrap() <= 1e-12);
    }

    #[test]
    fn predicates_agree_with_spectrum(seed in any::<u64>(), kind in 0u8..3) {
        let mut r = rng(seed);
        let a = match kind {
            0 => random_hermitian(4, &mut r),
            1 => {
                let g = random_operator(4, &mut r);
                &g * &g.adjoint()
            }
            _ => {
                let rank = r.random_range(0..=4);
                let v = random_isometry(rank, 4, &mut r);
                &v * &v.adjoint()
            }
        };
        let eig = a.eigh();
        let scale = a.norm().max(1.0);
        let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        let positive = min >= -1e-9 * scale;
        let projection = eig.values.iter().all(|&l| l.abs() <= 1e-9 || (l - 1.0).abs() <= 1e-9);
        prop_assert!(a.is_hermitian(1e-9));
        prop_assert_eq!(a.is_positive(1e-9), positive);
        prop_assert_eq!(a.is_projection(1e-9), projection);
    }

    #[test]
    fn generated_observables_are_normalized(seed in any::<u64>(), d in 1usize..5, n in 1usize..5) {
        let e = random_observable(d, n, &mut rng(seed));
        let total = e.effects().iter().fold(Operator::zeros(d, d), |acc, x| &acc + x);
        prop_assert!(frobenius_distance(&total, &Operator::identity(d)).unwrap() <= 1e-12);
        for x in e.effects() {
            prop_assert!(x.eigh().values[0] >= -1e-12);
        }
    }

    #[test]
    fn sharpness_tests_agree(seed in any::<u64>(), d in 2usize..5, sharp in any::<bool>()) {
        let n = 1 + (seed as usize % d);
        let e = if sharp {
            random_sharp_observable(d, n, seed).unwrap()
        } else {
            random_observable(d, n.max(2), &mut rng(seed))
        };
        prop_assert_eq!(e.is_sharp(1e-9), e.satisfies_product_criterion(1e-9));
        prop_assert_eq!(e.is_sharp(1e-9), sharp);
    }

    #[test]
    fn post_processing_composes(seed in any::<u64>(), d in 1usize..4, n in 1usize..4, m in 1usize..4, p in 1usize..4) {
        let mut r = rng(seed);
        let e = random_observable(d, n, &mut r);
        let k1 = random_kernel(n, m, &mut r);
        let k2 = random_kernel(m, p, &mut r);
        let stepwise = e.post_process(&k1).unwrap().post_process(&k2).unwrap();
        let direct = e.post_process(&k1.then(&k2).unwrap()).unwrap();
        prop_assert!(stepwise.distance(&direct).unwrap() <= 1e-12);
    }

    #[test]
    fn sharp_observables_are_extreme(seed in any::<u64>(), d in 1usize..6) {
        let n = 1 + (seed as usize % d);
        prop_assert!(random_sharp_observable(d, n, seed).unwrap().is_extreme(1e-8));
    }

    #[test]
    fn proper_mixtures_are_not_extreme(seed in any::<u64>(), lambda in 0.05f64..0.95) {
        let mut r = rng(seed);
        let e = spin_observable(random_direction(&mut r)).unwrap();
        let f = spin_observable(random_direction(&mut r)).unwrap();
        prop_assume!(e.distance(&f).unwrap() > 1e-3);
        prop_assert!(!Observable::mix(lambda, &e, &f).unwrap().is_extreme(1e-8));
    }

    #[test]
    fn generated_channels_are_valid(seed in any::<u64>(), d in 1usize..4, n in 1usize..4) {
        let c = random_channel(d, n, &mut rng(seed));
        let total = c.kraus().iter().fold(Operator::zeros(d, d), |acc, k| &acc + &(&k.adjoint() * k));
        prop_assert!(frobenius_distance(&total, &Operator::identity(d)).unwrap() <= 1e-12);
        prop_assert!(c.choi().eigh().values[0] >= -1e-10);
    }

    #[test]
    fn multiplicativity_criteria_agree(seed in any::<u64>(), kind in 0u8..3) {
        let mut r = rng(seed);
        let c = match kind {
            0 => unitary_channel(&haar_unitary(2, &mut r)).unwrap(),
            1 => random_channel(2, r.random_range(2..=4), &mut r),
            _ => complete_contraction(&random_state(2, &mut r)),
        };
        let multiplicative = c.is_multiplicative(1e-9);
        prop_assert_eq!(multiplicative, c.projection_preservation_residual() <= 1e-8);
        prop_assert_eq!(multiplicative, c.dilation_commutant_residual() <= 1e-8);
        prop_assert_eq!(multiplicative, kind == 0);
    }

    #[test]
    fn channel_distance_detects_equality(seed in any::<u64>(), d in 1usize..4) {
        let mut r = rng(seed);
        let c = random_channel(d, 3, &mut r);
        // rotate the Kraus family by a unitary: same channel, different Kraus operators
        let v = haar_unitary(3, &mut r);
        let rotated: Vec<Operator> = (0..3)
            .map(|a| (0..3).fold(Operator::zeros(d, d), |acc, b| &acc + &c.kraus()[b].scale(v.get(a, b))))
            .collect();
        let same = Channel::new(rotated).unwrap();
        let other = random_channel(d, 3, &mut r);
        let units: Vec<Operator> = (0..d * d)
            .map(|k| Operator::from_fn(d, d, |i, j| if i * d + j == k { 1.0.into() } else { 0.0.into() }))
            .collect();
        let gap = |x: &Channel, y: &Channel| {
            units.iter().map(|u| {
                frobenius_distance(&x.apply(u, Picture::Schrodinger).unwrap(), &y.apply(u, Picture::Schrodinger).unwrap()).unwrap()
            }).fold(0.0, f64::max)
        };
        prop_assert!(channel_distance(&c, &same).unwrap() <= 1e-10);
        prop_assert!(gap(&c, &same) <= 1e-10);
        if d > 1 {
            prop_assert!(channel_distance(&c, &other).unwrap() > 1e-10);
            prop_assert!(gap(&c, &other) > 1e-10);
        }
    }

    #[test]
    fn probability_reproducibility(seed in any::<u64>(), dh in 1usize..4, dk in 1usize..4) {
        let mut r = rng(seed);
        let pointer = random_observable(dk, r.random_range(1..=3), &mut r);
        let meter = Multimeter::new(dh, pointer, random_channel(dh * dk, 2, &mut r)).unwrap();
        let probe = Probe::Mixed(random_density(dk, r.random_range(1..=dk), &mut r));
        let model = MeasurementModel::new(meter, probe, None).unwrap();
        let e = model.induced_observable().unwrap();
        for _ in 0..20 {
            let rho = random_density(dh, dh, &mut r);
            let direct = e.probabilities(rho.operator());
            let reproduced = model.pointer_statistics(rho.operator()).unwrap();
            for (a, b) in direct.iter().zip(&reproduced) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn normal_paths_agree(seed in any::<u64>(), dh in 1usize..4, dk in 1usize..4) {
        let mut r = rng(seed);
        let meter = Multimeter::normal(dh, basis_pointer(dk), haar_unitary(dh * dk, &mut r)).unwrap();
        let model = meter.program(&random_state(dk, &mut r)).unwrap();
        let general = model.induced_observable().unwrap();
        let closed = model.induced_observable_normal().unwrap();
        prop_assert!(general.distance(&closed).unwrap() <= 1e-12);
        let c1 = model.induced_channel().unwrap();
        let c2 = model.induced_channel_normal().unwrap();
        prop_assert!(channel_distance(&c1, &c2).unwrap() <= 1e-12);
    }

    #[test]
    fn mixed_probes_act_linearly(seed in any::<u64>(), dh in 1usize..4, dk in 2usize..4) {
        let mut r = rng(seed);
        let meter = Multimeter::normal(dh, basis_pointer(dk), haar_unitary(dh * dk, &mut r)).unwrap();
        let xi = random_density(dk, dk, &mut r);
        let components = xi.spectral(1e-12);
        let mixed = MeasurementModel::new(meter.clone(), Probe::Mixed(xi), None).unwrap().induced_observable().unwrap();
        let parts: Vec<Observable> = components.iter().map(|(_, v)| meter.program(v).unwrap().induced_observable().unwrap()).collect();
        let weights: Vec<f64> = components.iter().map(|(w, _)| *w).collect();
        let combined = Observable::mixture(&weights, &parts).unwrap();
        prop_assert!(mixed.distance(&combined).unwrap() <= 1e-10);
    }

    #[test]
    fn minimal_dilation_is_exact(seed in any::<u64>(), d in 1usize..6) {
        let n = 1 + (seed as usize % d);
        let a = random_sharp_observable(d, n, seed).unwrap();
        let (meter, phi) = minimal_dilation_multimeter(&a).unwrap();
        prop_assert_eq!(meter.dim_k(), n);
        let model = meter.program(&phi).unwrap();
        prop_assert!(model.induced_observable().unwrap().distance(&a).unwrap() <= 1e-10);
    }

    #[test]
    fn kernels_equal_smeared_pointer(seed in any::<u64>(), dh in 1usize..4, dk in 1usize..4, m in 1usize..4) {
        let mut r = rng(seed);
        let meter = Multimeter::normal(dh, basis_pointer(dk), haar_unitary(dh * dk, &mut r)).unwrap();
        let model = meter.program(&random_state(dk, &mut r)).unwrap().with_kernel(random_kernel(dk, m, &mut r)).unwrap();
        let with_kernel = model.induced_observable().unwrap();
        let smeared = model.smeared().unwrap().induced_observable().unwrap();
        prop_assert!(with_kernel.distance(&smeared).unwrap() <= 1e-12);
    }

    #[test]
    fn sharp_orthogonality_never_fails(seed in any::<u64>(), kind in 0u8..3) {
        let mut r = rng(seed);
        let (meter, probes) = match kind {
            0 => {
                let d = r.random_range(2..=3);
                let a = random_sharp_observable(d, d, seed).unwrap();
                let (m, phi) = minimal_dilation_multimeter(&a).unwrap();
                (m, vec![phi])
            }
            1 => {
                let obs: Vec<Observable> = (0..3).map(|_| spin_observable(random_direction(&mut r)).unwrap()).collect();
                let sp = shared_pointer_multimeter(&obs).unwrap();
                (sp.meter, sp.probes)
            }
            _ => {
                let a1 = spin_observable(random_direction(&mut r)).unwrap();
                let a2 = spin_observable(random_direction(&mut r)).unwrap();
                let sp = spin_pair_multimeter(&a1, &a2).unwrap();
                (sp.meter, sp.probes)
            }
        };
        let dk = meter.dim_k();
        let mut candidates = probes;
        candidates.extend((0..3).map(|_| random_state(dk, &mut r)));
        for p in &candidates {
            for q in &candidates {
                let report = check_sharp_program_orthogonality(&meter, p, q, 1e-9);
                prop_assert_ne!(report.verdict, Verdict::Fail, "{}", report.details);
            }
        }
    }

    #[test]
    fn channel_orthogonality_never_fails(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let channels: Vec<Channel> = (0..3).map(|_| unitary_channel(&haar_unitary(d, &mut r)).unwrap()).collect();
        let pb = push_button_channels(&channels).unwrap();
        let sw = swap_multimeter(d).unwrap();
        for (meter, mut probes) in [(pb.meter, pb.probes), (sw.meter, sw.probes)] {
            let dk = meter.dim_k();
            probes.extend((0..2).map(|_| random_state(dk, &mut r)));
            for p in &probes {
                for q in &probes {
                    let report = check_channel_program_orthogonality(&meter, p, q, 1e-9);
                    prop_assert_ne!(report.verdict, Verdict::Fail, "{}", report.details);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn search_is_reproducible(seed in any::<u64>()) {
        let a = counterexample_search(2, 2, 50, seed, SearchThresholds::default());
        let b = counterexample_search(2, 2, 50, seed, SearchThresholds::default());
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.verdict, Verdict::Pass);
        prop_assert!(a.residuals.values().all(|v| *v >= 0.0));
    }
}

#[test]
fn density_components_reassemble() {
    let rho = random_density(3, 2, &mut rng(2));
    let back = DensityOperator::mixture(&rho.spectral(1e-12)).unwrap();
    assert!(frobenius_distance(back.operator(), rho.operator()).unwrap() <= 1e-12);
}
