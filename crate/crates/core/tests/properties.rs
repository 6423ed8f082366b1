use latdec::lattice::{
    closest_vector, count_points_in_ball, lll_reduce, shortest_vector, volume, IntMatrix, LatticeBasis, DEFAULT_DELTA,
};
use latdec::linalg::{
    block_diagonal_lift, qr_decompose, sample_gaussian_matrix, singular_values, stream, ComplexMatrix, RealMatrix,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn real_gaussian(rows: usize, cols: usize, seed: u64) -> RealMatrix {
    let mut rng = stream(seed, 0);
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    RealMatrix::new(rows, cols, data).unwrap()
}

fn as_complex(a: &RealMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows(), a.cols(), |r, c| Complex64::new(a[(r, c)], 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qr_reconstructs(rows in 1usize..=8, extra in 0usize..=4, seed in any::<u64>()) {
        let cols = rows.saturating_sub(extra).max(1);
        let a = sample_gaussian_matrix(rows, cols, &mut stream(seed, 1));
        let (q, r) = qr_decompose(&a).unwrap();
        let rel = q.mul(&r).unwrap().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
        prop_assert!(rel <= 1e-10, "relative residual {rel}");
    }

    #[test]
    fn lift_repeats_singular_values(m in 1usize..=3, extra in 0usize..=2, t in 1usize..=3, seed in any::<u64>()) {
        let h = sample_gaussian_matrix(m + extra, m, &mut stream(seed, 2));
        let base = singular_values(&h).unwrap();
        let lifted = singular_values(&block_diagonal_lift(&h, t)).unwrap();
        let mut expect: Vec<f64> = base.as_slice().iter().flat_map(|s| std::iter::repeat_n(*s, t)).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in lifted.as_slice().iter().zip(&expect) {
            prop_assert!((a - b).abs() <= 1e-8 * base.largest(), "{a} vs {b}");
        }
    }

    #[test]
    fn lll_preserves_lattice(dim in 2usize..=6, seed in any::<u64>()) {
        let basis = LatticeBasis::real(real_gaussian(dim, dim, seed)).unwrap();
        let red = lll_reduce(&basis, DEFAULT_DELTA).unwrap();
        prop_assert_eq!(red.transform.determinant().abs(), 1);
        let (v0, v1) = (volume(&basis), volume(&red.reduced));
        prop_assert!((v0 - v1).abs() <= 1e-9 * v0, "{v0} vs {v1}");
        // Reduced columns are the original basis times the transform.
        let g = basis.real_generator();
        let r = red.reduced.real_generator();
        for j in 0..dim {
            let col: Vec<i64> = (0..dim).map(|i| red.transform.get(i, j)).collect();
            let v = g.mul_int_vec(&col);
            for i in 0..dim {
                prop_assert!((v[i] - r[(i, j)]).abs() <= 1e-9 * (1.0 + v[i].abs()));
            }
        }
    }

    #[test]
    fn sandwich_law(seed in any::<u64>()) {
        let l = real_gaussian(4, 4, seed);
        let a = real_gaussian(4, 4, seed ^ 0x5A5A);
        let s = singular_values(&as_complex(&a)).unwrap();
        let d_l = shortest_vector(&LatticeBasis::real(l.clone()).unwrap()).unwrap().1;
        let d_al = shortest_vector(&LatticeBasis::real(a.mul(&l).unwrap()).unwrap()).unwrap().1;
        let tol = 1e-9 * d_l * s.largest();
        prop_assert!(s.smallest() * d_l <= d_al + tol);
        prop_assert!(d_al <= s.largest() * d_l + tol);
    }

    #[test]
    fn shortest_vector_is_smallest_nonzero_ball(seed in any::<u64>()) {
        let basis = LatticeBasis::real(real_gaussian(4, 4, seed)).unwrap();
        let (p, d) = shortest_vector(&basis).unwrap();
        prop_assert!(p.coeffs.iter().any(|c| *c != 0));
        prop_assert_eq!(count_points_in_ball(&basis, d * (1.0 - 1e-9)).unwrap(), 1);
        prop_assert!(count_points_in_ball(&basis, d * (1.0 + 1e-9)).unwrap() >= 3);
    }

    #[test]
    fn cvp_beats_every_nearby_point(seed in any::<u64>()) {
        let g = real_gaussian(3, 3, seed);
        let basis = LatticeBasis::real(g.clone()).unwrap();
        let mut rng = stream(seed, 9);
        let target: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
        let (p, d) = closest_vector(&basis, &target).unwrap();
        for x in -6i64..=6 {
            for y in -6i64..=6 {
                for z in -6i64..=6 {
                    let v = g.mul_int_vec(&[p.coeffs[0] + x, p.coeffs[1] + y, p.coeffs[2] + z]);
                    let dd: f64 = v.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    prop_assert!(d <= dd + 1e-9 * dd.max(1.0));
                }
            }
        }
    }

    #[test]
    fn sampler_is_reproducible(seed in any::<u64>(), index in any::<u64>()) {
        let a = sample_gaussian_matrix(3, 2, &mut stream(seed, index));
        let b = sample_gaussian_matrix(3, 2, &mut stream(seed, index));
        prop_assert_eq!(a, b);
    }
}

#[test]
fn integer_transform_identity() {
    assert_eq!(IntMatrix::identity(5).determinant(), 1);
}
