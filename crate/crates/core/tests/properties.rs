use num::complex::Complex64;
use proptest::prelude::*;
use quadsolve::exponents::{
    check_corollary1, fuchs_relation, is_n_resonant, monodromy_eigenvalue, Exponent, InfinityPolicy, RationalPolicy,
};
use quadsolve::formal::{formal_data, formal_residual};
use quadsolve::monodromy::Path;
use quadsolve::numkernel::rationalize;
use quadsolve::quadrature::{default_samples, eval_matrix, solve_triangular};
use quadsolve::system::{Location, SingularPoint};
use quadsolve::triangular::simultaneous_triangularize;
use quadsolve::{parse_system, print_system, MatrixC, PointRef, Scalar, SystemSpec};

fn ratio() -> impl Strategy<Value = Scalar> {
    (-12i64..=12, 1i64..=6).prop_map(|(n, d)| Scalar::ratio(n, d))
}

fn gaussian() -> impl Strategy<Value = Scalar> {
    (ratio(), ratio()).prop_map(|(a, b)| &a + &(&b * &Scalar::gauss(0, 1, 1, 1)))
}

fn small_matrix(p: usize) -> impl Strategy<Value = MatrixC> {
    prop::collection::vec((-4i64..=4, 1i64..=4).prop_map(|(n, d)| Scalar::ratio(n, d)), p * p)
        .prop_map(move |v| MatrixC::new(p, p, v).unwrap())
}

fn upper(p: usize) -> impl Strategy<Value = MatrixC> {
    small_matrix(p).prop_map(move |m| {
        let mut m = m;
        for i in 0..p {
            for j in 0..i {
                m.set(i, j, Scalar::zero());
            }
        }
        m
    })
}

/// Unimodular upper times unit lower, so the inverse stays exact and small.
fn gauge(p: usize) -> impl Strategy<Value = MatrixC> {
    (prop::collection::vec(-2i64..=2, p * p), prop::collection::vec(-2i64..=2, p * p)).prop_map(move |(u, l)| {
        let mut up = MatrixC::identity(p);
        let mut lo = MatrixC::identity(p);
        for i in 0..p {
            for j in 0..p {
                if j > i {
                    up.set(i, j, Scalar::int(u[i * p + j]));
                } else if j < i {
                    lo.set(i, j, Scalar::int(l[i * p + j]));
                }
            }
        }
        up.mul(&lo).unwrap()
    })
}

fn nonzero(m: MatrixC) -> MatrixC {
    if m.is_zero() {
        MatrixC::identity(m.rows())
    } else {
        m
    }
}

fn fuchsian(residues: Vec<MatrixC>) -> SystemSpec {
    let locs = [Scalar::zero(), Scalar::one(), Scalar::int(-1), Scalar::gauss(0, 1, 1, 1)];
    SystemSpec::fuchsian(residues.into_iter().map(nonzero).enumerate().map(|(i, m)| (locs[i].clone(), m)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_reconstructs(beta in gaussian(), shift in -5i64..=5) {
        let e = Exponent::split(beta.clone());
        prop_assert_eq!(&(&Scalar::int(e.phi) + &e.rho), &beta);
        let re = e.rho.re().to_c64().re;
        prop_assert!((0.0..1.0).contains(&re));
        let moved = Exponent::split(&beta + &Scalar::int(shift));
        prop_assert!((monodromy_eigenvalue(&e) - monodromy_eigenvalue(&moved)).norm() <= 1e-12 * monodromy_eigenvalue(&e).norm().max(1.0));
    }

    #[test]
    fn singleton_never_resonant(re in -3.0f64..3.0, im in -3.0f64..3.0, n in 2u32..30) {
        prop_assert!(is_n_resonant(&[Complex64::new(re, im)], n, 1e-9).unwrap().is_none());
    }

    #[test]
    fn rationals_recovered(n in -5000i64..5000, d in 1i64..2000) {
        let q = rationalize(n as f64 / d as f64, 1_000_000, 1e-12).unwrap();
        prop_assert_eq!(q, num::BigRational::new(n.into(), d.into()));
    }

    #[test]
    fn documents_round_trip(p in 1usize..=3, count in 1usize..=3, seed in prop::collection::vec(small_matrix(3), 3)) {
        let residues: Vec<MatrixC> = seed.iter().take(count).map(|m| MatrixC::from_rows((0..p).map(|i| m.row(i)[..p].to_vec()).collect()).unwrap()).collect();
        let spec = fuchsian(residues);
        prop_assert_eq!(parse_system(&print_system(&spec)).unwrap(), spec);
    }

    #[test]
    fn fuchs_relation_with_infinity(p in 1usize..=3, mats in prop::collection::vec(small_matrix(3), 1..=3)) {
        let residues = mats.iter().map(|m| MatrixC::from_rows((0..p).map(|i| m.row(i)[..p].to_vec()).collect()).unwrap()).collect();
        let spec = fuchsian(residues);
        prop_assert!(fuchs_relation(&spec, InfinityPolicy::Count).unwrap().holds());
    }

    #[test]
    fn exact_triangularization_complete(c in gauge(3), us in prop::collection::vec(upper(3), 1..=4)) {
        let ci = c.inverse().unwrap();
        let mats: Vec<MatrixC> = us.iter().map(|u| u.conjugate(&ci, &c).unwrap()).collect();
        let flag = simultaneous_triangularize(&mats, 1e-10).unwrap();
        prop_assert!(flag.success);
        let (g, gi) = (flag.c.unwrap(), flag.c_inv.unwrap());
        for m in &mats {
            prop_assert!(m.conjugate(&g, &gi).unwrap().is_upper_triangular());
        }
    }

    #[test]
    fn corollary_check_is_gauge_invariant(c in gauge(2), mats in prop::collection::vec(small_matrix(2), 2..=3)) {
        let spec = fuchsian(mats);
        let ci = c.inverse().unwrap();
        let moved = spec.map_matrices(|m| m.conjugate(&c, &ci)).unwrap();
        let policy = RationalPolicy::default();
        let a = check_corollary1(&spec, 1e-9, &policy).unwrap();
        let b = check_corollary1(&moved, 1e-9, &policy).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.threshold, b.threshold);
    }
}

fn irregular(lead: [i64; 2], rest: MatrixC) -> SystemSpec {
    let d = MatrixC::diagonal(&[Scalar::int(lead[0]), Scalar::int(lead[1])]);
    let pt = SingularPoint::new(Location::Finite(Scalar::zero()), vec![rest, d]).unwrap();
    SystemSpec::new(2, vec![pt], vec![]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn formal_data_gauge_consistent(b0 in -3i64..=3, gap in 1i64..=3, rest in small_matrix(2), c in gauge(2)) {
        let spec = irregular([b0, b0 + gap], rest);
        let ci = c.inverse().unwrap();
        let moved = spec.map_matrices(|m| m.conjugate(&c, &ci)).unwrap();
        let pt = PointRef::Finite(0);
        let a = formal_data(&spec, pt, 4, 1e-9).unwrap();
        let b = formal_data(&moved, pt, 4, 1e-9).unwrap();
        prop_assert_eq!(&a.lambda, &b.lambda);
        prop_assert_eq!(&a.q, &b.q);
        prop_assert_eq!(formal_residual(&moved, &b, 4).unwrap(), 0.0);
        let lead = moved.finite_points()[0].leading().clone();
        let tinv = b.t.inverse().unwrap();
        let d = tinv.mul(&lead).unwrap().mul(&b.t).unwrap();
        prop_assert!(d.is_upper_triangular() && d.transpose().is_upper_triangular());
        prop_assert!(b.t.mul(&tinv).unwrap() == MatrixC::identity(2));
        // Leading law: coefficient of t^{-r} is -b/r.
        for (j, q) in b.q.iter().enumerate() {
            prop_assert_eq!(&q[0], &-&b.leading_eigenvalues[j]);
        }
    }

    #[test]
    fn formal_data_permutation(b0 in -3i64..=3, gap in 1i64..=3, rest in small_matrix(2)) {
        let spec = irregular([b0, b0 + gap], rest);
        let swap = MatrixC::from_ints(&[&[0, 1], &[1, 0]]);
        let moved = spec.map_matrices(|m| m.conjugate(&swap, &swap)).unwrap();
        let a = formal_data(&spec, PointRef::Finite(0), 3, 1e-9).unwrap();
        let b = formal_data(&moved, PointRef::Finite(0), 3, 1e-9).unwrap();
        prop_assert_eq!(a.lambda, b.lambda);
        prop_assert_eq!(a.q, b.q);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn liouville_on_triangular(r0 in upper(2), r1 in upper(2)) {
        let spec = SystemSpec::new(
            2,
            vec![
                SingularPoint::new(Location::Finite(Scalar::zero()), vec![nonzero(r0)]).unwrap(),
                SingularPoint::new(Location::Finite(Scalar::int(2)), vec![nonzero(r1)]).unwrap(),
            ],
            vec![],
        ).unwrap();
        let exprs = solve_triangular(&spec).unwrap();
        let base = quadsolve::quadrature::base_point(&spec).unwrap();
        let y0 = eval_matrix(&exprs, &Path::segment(base, base), 1e-13).unwrap().value.determinant();
        for z in default_samples(&spec, 5).unwrap() {
            let y = eval_matrix(&exprs, &Path::segment(base, z), 1e-13).unwrap().value;
            let mut log = Complex64::new(0.0, 0.0);
            for pt in spec.finite_points() {
                let a = pt.finite_location().unwrap().to_c64();
                log += pt.residue().trace().unwrap().to_c64() * ((z - a) / (base - a)).ln();
            }
            let expected = y0 * log.exp();
            prop_assert!((y.determinant() - expected).norm() <= 1e-8 * expected.norm());
        }
    }
}
