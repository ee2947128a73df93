use std::sync::Arc;

use ncfa::linalg::CMatrix;
use ncfa::majorization::hl_submajorize;
use ncfa::operators::{op_l, OperatorMatrix};
use ncfa::rng::Stream;
use ncfa::{
    mu_of_direct_sum, singular_value_function, AlgElement, Block, EnsembleKind, EnsembleSpec, Law, NormSpec,
    OrliczFunction, StepFunction, TensorFamily, TracialAlgebra,
};
use num_complex::Complex64;
use proptest::prelude::*;

const CASES: u32 = 48;

fn cfg() -> ProptestConfig {
    ProptestConfig { cases: CASES, ..ProptestConfig::default() }
}

/// Block layout `(dim, weight)`.
fn layout() -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::vec((1usize..=3, 0.1f64..2.0), 1..=3)
}

fn algebra(layout: &[(usize, f64)]) -> Arc<TracialAlgebra> {
    TracialAlgebra::new(layout.iter().map(|&(dim, weight)| Block { dim, weight }).collect()).unwrap().shared()
}

fn element_from(alg: &Arc<TracialAlgebra>, entries: &[f64], hermitian: bool) -> AlgElement {
    let mut it = entries.iter().copied().cycle();
    let blocks = alg
        .blocks()
        .iter()
        .map(|b| {
            let mut m = CMatrix::zeros(b.dim);
            for i in 0..b.dim {
                for j in 0..b.dim {
                    m[(i, j)] = Complex64::new(it.next().unwrap(), it.next().unwrap());
                }
            }
            if hermitian {
                m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0))
            } else {
                m
            }
        })
        .collect();
    AlgElement::new(alg.clone(), blocks).unwrap()
}

/// An algebra with two elements on it.
fn pair(hermitian: bool) -> impl Strategy<Value = (AlgElement, AlgElement)> {
    layout().prop_flat_map(move |l| {
        let alg = algebra(&l);
        let len = 2 * l.iter().map(|(d, _)| d * d).sum::<usize>();
        (prop::collection::vec(-2.0f64..2.0, len), prop::collection::vec(-2.0f64..2.0, len))
            .prop_map(move |(a, b)| (element_from(&alg, &a, hermitian), element_from(&alg, &b, hermitian)))
    })
}

fn step_function() -> impl Strategy<Value = StepFunction> {
    prop::collection::vec((0.0f64..5.0, 0.05f64..2.0), 0..6).prop_map(StepFunction::from_pairs)
}

/// Nonnegative diagonal elements of `L_infty` on `atoms` cells, as pairs.
fn diagonal_pair() -> impl Strategy<Value = (AlgElement, AlgElement)> {
    (1usize..=8).prop_flat_map(|atoms| {
        let alg = TracialAlgebra::diagonal(atoms).unwrap().shared();
        (prop::collection::vec(0.0f64..3.0, atoms), prop::collection::vec(0.0f64..3.0, atoms)).prop_map(move |(a, b)| {
            (
                AlgElement::from_real_diagonal(alg.clone(), &a).unwrap(),
                AlgElement::from_real_diagonal(alg.clone(), &b).unwrap(),
            )
        })
    })
}

fn family(kind: EnsembleKind, count: usize, n: usize, seed: u64) -> TensorFamily {
    let spec = EnsembleSpec::new(kind, count, n).with_law(Law::MeanZero);
    ncfa::independence::sample_ensemble(&spec, seed, 0).unwrap().family().unwrap().clone()
}

fn kind() -> impl Strategy<Value = EnsembleKind> {
    prop_oneof![Just(EnsembleKind::Classical), Just(EnsembleKind::GueLike), Just(EnsembleKind::Fermionic)]
}

fn library_phis() -> Vec<OrliczFunction> {
    vec![
        OrliczFunction::mpq(2.0, 4.0).unwrap(),
        OrliczFunction::mpq(1.5, 3.0).unwrap(),
        OrliczFunction::power(2.0).unwrap(),
        OrliczFunction::power_log(2.0, 1.0).unwrap(),
    ]
}

fn norm_specs() -> Vec<NormSpec> {
    ["Lp(1)", "Lp(2.5)", "Lp(4)", "cap(2,4)", "sum(1,2)", "sum(1.5,3)", "orlicz(M:2,4)", "ZE2(Lp(3))", "ZE1(Lp(1.5))"]
        .iter()
        .map(|s| NormSpec::parse(s).unwrap())
        .collect()
}

mod algebra_props {
    use super::*;

    proptest! {
        #![proptest_config(cfg())]

        #[test]
        fn trace_is_cyclic((x, y) in pair(false)) {
            let a = x.multiply(&y).unwrap().trace();
            let b = y.multiply(&x).unwrap().trace();
            prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
        }

        #[test]
        fn trace_is_faithful((x, _) in pair(false), zero_out in any::<bool>()) {
            let x = if zero_out { AlgElement::zero(x.algebra().clone()) } else { x };
            let t = x.gram().trace();
            prop_assert!(t.re >= 0.0 && t.im.abs() < 1e-12);
            let min_weight = x.algebra().blocks().iter().map(|b| b.weight).fold(f64::MAX, f64::min);
            let max_entry = x.blocks().iter().map(CMatrix::max_abs).fold(0.0, f64::max);
            prop_assert!(t.re >= min_weight * max_entry * max_entry * (1.0 - 1e-12));
            prop_assert_eq!(t.re == 0.0, max_entry == 0.0);
        }

        #[test]
        fn functional_calculus_composes((x, _) in pair(true)) {
            let f = |t: f64| t * t - 3.0 * t + 1.0;
            let g = |t: f64| 0.5 * t * t * t + t;
            let direct = x.functional_calculus(|t| f(g(t))).unwrap();
            let nested = x.functional_calculus(g).unwrap().functional_calculus(f).unwrap();
            let scale = 1.0 + direct.operator_norm().unwrap();
            prop_assert!(direct.max_abs_diff(&nested).unwrap() <= 1e-8 * scale);
        }

        #[test]
        fn spectral_projection_commutes_with_modulus((x, _) in pair(false), s in 0.0f64..3.0) {
            let a = x.abs_op().unwrap();
            let p = a.spectral_projection_above(s).unwrap();
            let comm = p.multiply(&a).unwrap().sub(&a.multiply(&p).unwrap()).unwrap();
            let zero = AlgElement::zero(x.algebra().clone());
            prop_assert!(comm.max_abs_diff(&zero).unwrap() <= 1e-8 * (1.0 + a.operator_norm().unwrap()));
        }
    }
}

mod rearrangement_props {
    use super::*;

    proptest! {
        #![proptest_config(cfg())]

        #[test]
        fn mu_ignores_adjoint_and_modulus((x, _) in pair(false)) {
            let mu = singular_value_function(&x).unwrap();
            let star = singular_value_function(&x.adjoint()).unwrap();
            let abs = singular_value_function(&x.abs_op().unwrap()).unwrap();
            prop_assert!(mu.sup_distance(&star) <= 1e-9 * (1.0 + mu.top()));
            prop_assert!(mu.sup_distance(&abs) <= 1e-9 * (1.0 + mu.top()));
        }

        #[test]
        fn mu_is_homogeneous((x, _) in pair(false), re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let alpha = Complex64::new(re, im);
            let lhs = singular_value_function(&x.scale(alpha)).unwrap();
            let rhs = singular_value_function(&x).unwrap().scale(alpha.norm());
            prop_assert!(lhs.sup_distance(&rhs) <= 1e-9 * (1.0 + rhs.top()));
        }

        #[test]
        fn direct_sum_matches_block_diagonal((x, _) in pair(false), (y, _) in pair(false)) {
            // x (+) y lives on the algebra with both block lists concatenated
            let mut blocks: Vec<Block> = x.algebra().blocks().to_vec();
            blocks.extend(y.algebra().blocks().iter().cloned());
            let alg = TracialAlgebra::new(blocks).unwrap().shared();
            let mut mats = x.blocks().to_vec();
            mats.extend(y.blocks().iter().cloned());
            let joined = AlgElement::new(alg, mats).unwrap();
            let a = singular_value_function(&joined).unwrap();
            let b = mu_of_direct_sum(&[singular_value_function(&x).unwrap(), singular_value_function(&y).unwrap()]);
            prop_assert!(a.sup_distance(&b) <= 1e-9 * (1.0 + a.top()));
            prop_assert!((a.support_length() - b.support_length()).abs() <= 1e-9);
        }

        #[test]
        fn trace_of_modulus_integrates_mu((x, _) in pair(false)) {
            let t = x.abs_op().unwrap().trace().re;
            let i = singular_value_function(&x).unwrap().integrate_power(1.0, 0.0, f64::INFINITY).unwrap();
            prop_assert!((t - i).abs() <= 1e-9 * (1.0 + t));
        }
    }
}

mod spaces_props {
    use super::*;

    proptest! {
        #![proptest_config(cfg())]

        #[test]
        fn norms_are_homogeneous(mu in step_function(), alpha in 0.01f64..20.0) {
            for spec in norm_specs() {
                let a = spec.norm(&mu.scale(alpha)).unwrap();
                let b = alpha * spec.norm(&mu).unwrap();
                prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b), "{spec}: {a} vs {b}");
            }
        }

        #[test]
        fn norms_are_monotone(mu in step_function(), b in 0.1f64..4.0, shrink in 0.0f64..1.0) {
            // restriction and shrinking both give pointwise smaller functions
            let small = mu.restrict(0.0, b).unwrap().scale(shrink);
            for spec in norm_specs() {
                let lo = spec.norm(&small).unwrap();
                let hi = spec.norm(&mu).unwrap();
                prop_assert!(lo <= hi * (1.0 + 1e-9) + 1e-12, "{spec}: {lo} > {hi}");
            }
        }

        #[test]
        fn triangle_inequality((x, y) in diagonal_pair()) {
            let s = singular_value_function(&x.add(&y).unwrap()).unwrap();
            let mx = singular_value_function(&x).unwrap();
            let my = singular_value_function(&y).unwrap();
            let specs = ["Lp(1)", "Lp(3)", "cap(2,4)", "cap(1.5,3)", "orlicz(M:2,4)", "orlicz(tplog:2,1)"];
            for spec in specs.iter().map(|s| NormSpec::parse(s).unwrap()) {
                let lhs = spec.norm(&s).unwrap();
                let rhs = spec.norm(&mx).unwrap() + spec.norm(&my).unwrap();
                prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12, "{spec}: {lhs} > {rhs}");
            }
        }

        #[test]
        fn ze_on_the_unit_interval_is_a_sum(pairs in prop::collection::vec((0.0f64..5.0, 0.01f64..0.3), 1..4), r in 1.0f64..5.0) {
            let mu = StepFunction::from_pairs(pairs);
            prop_assume!(mu.support_length() < 1.0);
            let ze = NormSpec::ze(NormSpec::Lp(r), 2.0).norm(&mu).unwrap();
            let parts = NormSpec::Lp(r).norm(&mu).unwrap() + NormSpec::Sum(1.0, 2.0).norm(&mu).unwrap();
            prop_assert!(ze <= 2.0 * parts + 1e-12 && parts <= 2.0 * ze + 1e-12);
        }

        #[test]
        fn ze2_of_lp_is_equivalent_to_sum_or_cap(mu in step_function()) {
            prop_assume!(!mu.is_zero());
            for (p, other) in [(1.5, NormSpec::Sum(1.5, 2.0)), (3.0, NormSpec::Cap(2.0, 3.0))] {
                let ze = NormSpec::ze(NormSpec::Lp(p), 2.0).norm(&mu).unwrap();
                let r = ze / other.norm(&mu).unwrap();
                prop_assert!((0.25..=4.0).contains(&r), "p = {p}: ratio {r}");
            }
        }
    }
}

mod majorization_props {
    use super::*;

    /// `y` squeezed under `x`: a restriction followed by a shrink.
    fn below(x: &StepFunction, b: f64, s: f64) -> StepFunction {
        x.restrict(0.0, b).unwrap().scale(s)
    }

    proptest! {
        #![proptest_config(cfg())]

        #[test]
        fn submajorization_is_transitive(x in step_function(), b1 in 0.1f64..4.0, s1 in 0.0f64..1.0, b2 in 0.1f64..4.0, s2 in 0.0f64..1.0, z in step_function()) {
            let y = below(&x, b1, s1);
            let w = below(&y, b2, s2);
            prop_assert!(hl_submajorize(&y, &x) && hl_submajorize(&w, &y) && hl_submajorize(&w, &x));
            if hl_submajorize(&z, &y) {
                prop_assert!(hl_submajorize(&z, &x));
            }
        }

        #[test]
        fn submajorization_is_scale_equivariant(x in step_function(), y in step_function(), alpha in 0.01f64..50.0) {
            prop_assert_eq!(hl_submajorize(&y, &x), hl_submajorize(&y.scale(alpha), &x.scale(alpha)));
        }

        #[test]
        fn phi_moments_respect_submajorization(x in step_function(), y in step_function()) {
            if hl_submajorize(&y, &x) {
                for phi in library_phis() {
                    let a = ncfa::phi_moment(&phi, &y);
                    let b = ncfa::phi_moment(&phi, &x);
                    prop_assert!(a <= b + 1e-9 * (1.0 + b), "{}: {a} > {b}", phi.label());
                }
            }
        }
    }
}

mod independence_props {
    use super::*;

    proptest! {
        #![proptest_config(cfg())]

        #[test]
        fn independence_identity(kind in kind(), count in 2usize..=4, seed in any::<u64>(), k_raw in 0usize..4, powers in prop::collection::vec(1u32..=3, 4)) {
            let f = family(kind, count, 2, seed);
            let k = k_raw % count;
            // a monomial in the other factors
            let mut y = AlgElement::identity(f.ambient().clone());
            for (j, &pw) in powers.iter().enumerate().take(count) {
                if j != k {
                    for _ in 0..pw {
                        y = y.multiply(&f.embedded()[j]).unwrap();
                    }
                }
            }
            let xk = &f.embedded()[k];
            let lhs = xk.multiply(&y).unwrap().trace();
            let rhs = xk.trace() * y.trace();
            prop_assert!((lhs - rhs).norm() <= 1e-8);
        }

        #[test]
        fn mean_zero_families_are_orthogonal(kind in kind(), count in 1usize..=5, seed in any::<u64>()) {
            let f = family(kind, count, 2, seed);
            let lhs = f.sum().unwrap().l2_norm_sqr();
            let rhs: f64 = f.factors().iter().map(AlgElement::l2_norm_sqr).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn conditional_expectations(kind in kind(), count in 1usize..=3, seed in any::<u64>(), k_raw in 0usize..3) {
            let f = family(kind, count, 2, seed);
            let k = k_raw % count;
            let mut rng = Stream::new(seed ^ 0x5eed);
            let y = ncfa::independence::random_ambient_element(&f, false, &mut rng).unwrap();
            let e = f.conditional_expectation(k, &y).unwrap();
            let ee = f.conditional_expectation(k, &e).unwrap();
            let scale = 1.0 + y.operator_norm().unwrap();
            prop_assert!(ee.max_abs_diff(&e).unwrap() <= 1e-9 * scale);
            prop_assert!((e.trace() - y.trace()).norm() <= 1e-9 * scale);
            prop_assert!(e.operator_norm().unwrap() <= y.operator_norm().unwrap() + 1e-9 * scale);
            let mu_e = singular_value_function(&e).unwrap();
            let mu_y = singular_value_function(&y).unwrap();
            prop_assert!(hl_submajorize(&mu_e, &mu_y));
        }
    }
}

mod operator_props {
    use super::*;
    use ncfa::DirectSumElement;

    proptest! {
        #![proptest_config(cfg())]

        #[test]
        fn centered_expectations_are_submajorized_by_twice_the_input(kind in kind(), count in 1usize..=3, seed in any::<u64>()) {
            let f = family(kind, count, 2, seed);
            let mut rng = Stream::new(seed.rotate_left(7));
            let zs: Vec<AlgElement> = (0..count)
                .map(|_| ncfa::independence::random_ambient_element(&f, false, &mut rng).unwrap())
                .collect();
            let one = AlgElement::identity(f.ambient().clone());
            let centered: Vec<AlgElement> = zs
                .iter()
                .enumerate()
                .map(|(k, z)| f.conditional_expectation(k, z).unwrap().sub(&one.scale(z.trace())).unwrap())
                .collect();
            let lhs = DirectSumElement::new(centered).unwrap().mu().unwrap();
            let rhs = DirectSumElement::new(zs).unwrap().mu().unwrap().scale(2.0);
            prop_assert!(hl_submajorize(&lhs, &rhs));
        }

        #[test]
        fn l_is_a_square_contraction(rows in 1usize..=3, cols in 1usize..=3, entries in prop::collection::vec(-2.0f64..2.0, 72)) {
            let alg = TracialAlgebra::matrix(2).unwrap().shared();
            let mut it = entries.chunks(8).cycle();
            let matrix: Vec<Vec<AlgElement>> = (0..rows)
                .map(|_| (0..cols).map(|_| element_from(&alg, it.next().unwrap(), false)).collect())
                .collect();
            let z = OperatorMatrix::new(matrix).unwrap();
            let lz = op_l(&z).unwrap().mu().unwrap();
            let zmu = z.mu().unwrap();
            prop_assert!(hl_submajorize(&lz.powf(2.0), &zmu.powf(2.0)));
        }
    }

    #[test]
    fn duality_pairings_hold() {
        let report = ncfa::oracle::duality(40, 11, ncfa::Execution::Sequential).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
    }
}

mod harness_props {
    use super::*;
    use ncfa::harness::{Direction, Experiment, ModularVariant};
    use ncfa::{run_cell, Execution};

    fn norm_experiments() -> Vec<Experiment> {
        vec![
            Experiment::Rosenthal { p: 4.0 },
            Experiment::Js { spec: NormSpec::Lp(3.0), direction: Direction::Both },
            Experiment::Khinchine { spec: NormSpec::Lp(1.5) },
            Experiment::Khinchine { spec: NormSpec::parse("cap(2,4)").unwrap() },
            Experiment::Rademacher { q: 4.0 },
            Experiment::CapLemma { n: 2 },
            Experiment::LContraction { q: 4.0 },
        ]
    }

    fn scaled(f: &TensorFamily, alpha: f64) -> TensorFamily {
        let factors = f.factors().iter().map(|x| x.scale_real(alpha)).collect();
        match f.embedding() {
            ncfa::independence::Embedding::Kronecker => TensorFamily::build(factors).unwrap(),
            ncfa::independence::Embedding::JordanWigner => TensorFamily::fermionic(factors).unwrap(),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

        #[test]
        fn norm_ratios_are_scale_invariant(kind in kind(), count in 1usize..=3, seed in any::<u64>(), alpha in 0.05f64..20.0) {
            let f = family(kind, count, 2, seed);
            let g = scaled(&f, alpha);
            for exp in norm_experiments() {
                let a = exp.evaluate_family(&f).unwrap();
                let b = exp.evaluate_family(&g).unwrap();
                prop_assert!((b.lhs - alpha * a.lhs).abs() <= 1e-9 * (1.0 + alpha * a.lhs), "{}", exp.theorem_id());
                prop_assert!((b.rhs - alpha * a.rhs).abs() <= 1e-9 * (1.0 + alpha * a.rhs), "{}", exp.theorem_id());
                if a.rhs > 0.0 {
                    prop_assert!((b.lhs / b.rhs - a.lhs / a.rhs).abs() <= 1e-9 * (1.0 + a.lhs / a.rhs));
                }
            }
        }

        #[test]
        fn reports_are_deterministic(kind in kind(), seed in any::<u64>()) {
            let spec = EnsembleSpec::new(kind, 3, 2);
            let phi = OrliczFunction::mpq(2.0, 4.0).unwrap();
            let exp = Experiment::Modular { phi, variant: ModularVariant::MeanZero };
            let a = run_cell(&exp, &spec, 6, seed, Execution::Parallel, false).unwrap();
            let b = run_cell(&exp, &spec, 6, seed, Execution::Sequential, false).unwrap();
            prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        }
    }
}
