use essbasis_core::basis::{
    coefficient_functionals, eta, functional_bounds, grunblum_certificate, partial_sum_norms, projection_norm,
    t_norms, unconditional_constant, Method,
};
use essbasis_core::generators::{perturb_system, random_system};
use essbasis_core::oracle::{brute_force_operator_norm, OracleConfig};
use essbasis_core::perturbation::{perturbation_lambda, perturbed_constant_bound, sandwich_check, Status};
use essbasis_core::{dual_norm_eval, make_basis, norm_eval, sphere_sample, NormSpec, SampleConfig, VectorR};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn norm_strategy() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        (1.0f64..6.0).prop_map(|p| NormSpec::lp(p).unwrap()),
        Just(NormSpec::lp(1.0).unwrap()),
        Just(NormSpec::euclidean()),
        Just(NormSpec::Sup),
        ((1.0f64..4.0), prop::collection::vec(0.1f64..5.0, 4)).prop_map(|(p, w)| NormSpec::weighted(p, w).unwrap()),
    ]
}

fn vec4() -> impl Strategy<Value = VectorR> {
    prop::collection::vec(-10.0f64..10.0, 4).prop_map(VectorR::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn triangle_inequality(n in norm_strategy(), u in vec4(), v in vec4()) {
        let lhs = norm_eval(&(&u + &v), &n).unwrap();
        let rhs = norm_eval(&u, &n).unwrap() + norm_eval(&v, &n).unwrap();
        prop_assert!(lhs <= rhs + 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn homogeneity(n in norm_strategy(), v in vec4(), c in -100.0f64..100.0) {
        let lhs = norm_eval(&(&v * c), &n).unwrap();
        let rhs = c.abs() * norm_eval(&v, &n).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn pairing_below_dual_norm(n in norm_strategy(), f in vec4(), seed in any::<u64>()) {
        let unit = &sphere_sample(4, &n, SampleConfig::new(seed, 1).unwrap()).unwrap()[0];
        prop_assert!(f.dot(unit) <= dual_norm_eval(&f, &n).unwrap() + 1e-12);
    }
}

#[test]
fn sampled_pairing_approaches_dual_norm() {
    let f = VectorR::from_column_slice(&[1.0, -2.0, 0.5]);
    for n in [NormSpec::euclidean(), NormSpec::lp(3.0).unwrap(), NormSpec::lp(1.5).unwrap()] {
        let dual = dual_norm_eval(&f, &n).unwrap();
        let best = |count| {
            sphere_sample(3, &n, SampleConfig::new(4, count).unwrap())
                .unwrap()
                .iter()
                .map(|v| f.dot(v))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let (coarse, fine) = (best(100), best(20_000));
        assert!(coarse <= fine && fine <= dual + 1e-12);
        assert!(fine >= 0.97 * dual, "{n}: {fine} vs {dual}");
    }
}

fn systems(count: usize) -> Vec<essbasis_core::BasisSystem> {
    (0..count as u64)
        .map(|seed| {
            let d = 2 + (seed % 5) as usize;
            let n = 1 + (seed / 5 % d as u64) as usize;
            random_system(d, n, NormSpec::euclidean(), seed).unwrap()
        })
        .collect()
}

#[test]
fn constants_on_random_systems() {
    let cfg = OracleConfig::new(0, 256, 100).unwrap();
    for b in systems(100) {
        let cert = grunblum_certificate(&b, &cfg);
        assert!(cert.basis_constant >= 1.0 - 1e-12);
        assert_eq!(cert.basis_constant, cert.grunblum_constant);
        for p in cert.projection_norms() {
            assert!(p >= 1.0 - 1e-9);
        }
        for n in 1..=b.count() {
            let k = grunblum_certificate(&b.prefix(n).unwrap(), &cfg).basis_constant;
            assert!(k <= cert.basis_constant + 1e-9);
        }
        let (t, t_inv) = t_norms(&b, &cert, &cfg);
        assert!((t - 1.0).abs() <= 1e-12);
        assert!((t_inv - cert.basis_constant).abs() <= 1e-6, "{t_inv} vs {}", cert.basis_constant);
        let funcs = coefficient_functionals(&b, &cfg);
        for fb in functional_bounds(&b, &funcs, t_inv, 1e-9) {
            assert!(fb.holds, "{fb:?}");
        }
    }
}

#[test]
fn eta_dominates_and_grunblum_pointwise() {
    let cfg = OracleConfig::default();
    for b in systems(20) {
        let m = grunblum_certificate(&b, &cfg).grunblum_constant;
        let coeffs = sphere_sample(b.count(), &NormSpec::euclidean(), SampleConfig::new(1, 2000).unwrap()).unwrap();
        for a in coeffs {
            let ps = partial_sum_norms(&b, a.as_slice());
            assert!(eta(&b, a.as_slice()) >= b.combination_norm(a.as_slice()) - 1e-12);
            for hi in 0..ps.len() {
                for lo in 0..=hi {
                    assert!(ps[lo] <= m * ps[hi] + 1e-9);
                }
            }
        }
    }
}

#[test]
fn exact_spectral_bracketed_by_oracle() {
    for b in systems(30).into_iter().filter(|b| b.dim() <= 5) {
        for m in 1..=b.count() {
            let exact = projection_norm(&b, m, &OracleConfig::default()).unwrap();
            assert_eq!(exact.method, Method::ExactSpectral);
            // P_m as a map on ℝ^d: X·E_m·X⁺, restricted to the span.
            let pinv = b.matrix().clone().pseudo_inverse(1e-14).unwrap();
            let pm = b.matrix() * essbasis_core::basis::truncation(b.count(), m) * pinv;
            let est = brute_force_operator_norm(&pm, Some(b.matrix()), b.norm(), SampleConfig::new(2, 2048).unwrap(), 400).unwrap();
            assert!(est.value <= exact.value + 1e-9);
            assert!(exact.value <= est.value * 1.02);
            let w = &est.witness;
            let r = b.norm().eval((&pm * b.matrix() * w).as_slice()) / b.norm().eval((b.matrix() * w).as_slice());
            assert!((r - est.value).abs() <= 1e-12);
        }
    }
}

#[test]
fn unconditional_at_least_one() {
    let cfg = OracleConfig::new(0, 128, 50).unwrap();
    for b in systems(15) {
        let u = unconditional_constant(&b, 16, &cfg).unwrap();
        assert!(u.value.value >= 1.0 - 1e-9);
    }
    let id: Vec<VectorR> = (0..5).map(|i| VectorR::from_fn(5, |r, _| (r == i) as u8 as f64)).collect();
    let b = make_basis(id, NormSpec::euclidean(), None).unwrap();
    assert!((unconditional_constant(&b, 16, &cfg).unwrap().value.value - 1.0).abs() <= 1e-9);
}

#[test]
fn perturbation_properties() {
    let cfg = OracleConfig::new(0, 256, 100).unwrap();
    for seed in 0..10u64 {
        let x = random_system(4, 3, NormSpec::euclidean(), seed).unwrap();
        let funcs = coefficient_functionals(&x, &cfg);
        let sum: f64 = funcs.norms.iter().sum();
        let y = perturb_system(&x, 0.5 / sum, seed + 100).unwrap().vectors();
        let cert = perturbation_lambda(&x, &y, &cfg).unwrap();
        assert!((cert.lambda - 0.5).abs() < 1e-9);
        assert_eq!(cert.status, Status::Certified);
        let s = sandwich_check(&x, &y, &cert, SampleConfig::new(seed, 10_000).unwrap()).unwrap();
        assert!(s.lower_slack >= -1e-9 && s.upper_slack >= -1e-9);
        assert!(s.min_ratio >= cert.lower - 1e-9 && s.max_ratio <= cert.upper + 1e-9);
        let pb = perturbed_constant_bound(&x, &y, &cert, &cfg).unwrap();
        assert!(pb.holds);
    }
}

#[test]
fn non_euclidean_oracle_never_exceeds_exact() {
    // Full-dimension sup and ℓ1 systems have exact matrix-norm values.
    for (seed, n) in [(3, NormSpec::Sup), (4, NormSpec::lp(1.0).unwrap())] {
        let b = random_system(3, 3, n.clone(), seed).unwrap();
        let inv = b.matrix().clone().try_inverse().unwrap();
        for m in 1..=3 {
            let exact = projection_norm(&b, m, &OracleConfig::default()).unwrap();
            assert_eq!(exact.method, Method::ExactMatrixNorm);
            let pm: DMatrix<f64> = b.matrix() * essbasis_core::basis::truncation(3, m) * &inv;
            let est = brute_force_operator_norm(&pm, None, &n, SampleConfig::new(1, 2048).unwrap(), 400).unwrap();
            assert!(est.value <= exact.value + 1e-9);
            assert!(est.value >= 0.9 * exact.value, "{} vs {}", est.value, exact.value);
        }
    }
}
