use latdec::analysis::{
    bonferroni_lower_bound, clopper_pearson, estimate_ser, estimate_ser_point, estimate_short_vector_prob,
    estimate_sigma_tail, fit_loglog_slope, nld_short_vector_conditioning, q_function, sandwich_violations,
    short_vector_curve, upper_bound_lemma2, MonteCarlo,
};
use latdec::channel::{draw_channel, transmit, SnrPoint};
use latdec::decoders::{DecoderId, DecodingContext};
use latdec::lattice::LatticeBasis;
use latdec::linalg::{complex_gaussian, stream, ComplexMatrix};
use latdec::stcodes::{enumerate_codebook, golden_code, vblast_code};
use num_complex::Complex64;
use rand::Rng;

#[test]
fn complex_gaussian_moments() {
    let mut rng = stream(100, 0);
    let n = 1_000_000;
    let (mut mean, mut power, mut pseudo) = (Complex64::new(0.0, 0.0), 0.0, Complex64::new(0.0, 0.0));
    for _ in 0..n {
        let z = complex_gaussian(&mut rng);
        mean += z;
        power += z.norm_sqr();
        pseudo += z * z;
    }
    let nf = n as f64;
    assert!((mean / nf).norm() < 5e-3);
    assert!((power / nf - 1.0).abs() < 5e-3);
    assert!((pseudo / nf).norm() < 5e-3);
}

#[test]
fn noise_energy_matches_dimensions() {
    let code = vblast_code(2, 2, 4, 1.0).unwrap();
    let snr = SnrPoint { rho: 2.0, power: 1.0, noise_var: 0.8 };
    let n = 3;
    let draws = 100_000;
    let mut total = 0.0;
    for i in 0..draws {
        let mut rng = stream(101, i);
        let chan = draw_channel(2, n, 2, &mut rng).unwrap();
        let sent = code.random_coeffs(&mut rng);
        let word = code.codeword(&sent).unwrap();
        let y = transmit(&code, &word, &chan, &snr, &mut rng).unwrap();
        let clean = chan.lifted().mul_vec(&code.vec_signal(&sent)).unwrap();
        total += y.iter().zip(&clean).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
    }
    let expect = (n * 2) as f64 * 0.8;
    assert!((total / draws as f64 / expect - 1.0).abs() < 0.01);
}

#[test]
fn snr_sweep_only_rescales_power() {
    let code = golden_code(4, 1.0).unwrap();
    for rho in [1.0, 10.0, 1000.0] {
        let snr = SnrPoint::from_linear(rho, 2);
        assert_eq!(snr.rho, 2.0 * snr.power);
        let scaled = code.with_power(snr.power).unwrap();
        assert_eq!(scaled.real_generator(), code.real_generator());
        let ratio = scaled.power_scale() / code.power_scale();
        assert!((ratio - snr.power.sqrt()).abs() < 1e-12 * ratio);
    }
}

#[test]
fn clopper_pearson_coverage() {
    // 1000 synthetic Bernoulli experiments per p; 95% intervals should
    // cover the truth about 95% of the time (exact intervals overcover).
    for (k, p) in [0.01f64, 0.2, 0.5].into_iter().enumerate() {
        let mut rng = stream(102, k as u64);
        let n = 400;
        let mut covered = 0;
        for _ in 0..1000 {
            let x = (0..n).filter(|_| rng.random::<f64>() < p).count() as u64;
            let (lo, hi) = clopper_pearson(x, n, 0.95);
            covered += u32::from(lo <= p && p <= hi);
        }
        assert!((930..=1000).contains(&covered), "p = {p}: {covered}/1000");
    }
}

#[test]
fn scalar_rayleigh_short_vector_law() {
    let lattice = LatticeBasis::complex(ComplexMatrix::identity(1)).unwrap();
    let e = estimate_short_vector_prob(1, 1, 1, &lattice, 0.1, &MonteCarlo::new(1_000_000, 103)).unwrap();
    let exact = 1.0 - (-0.01f64).exp();
    assert!(e.ci_low <= exact && exact <= e.ci_high, "{e:?} vs {exact}");
    assert_eq!(e.value, e.successes as f64 / e.trials as f64);

    // Far beyond the typical minimum distance everything is short.
    let sat = estimate_short_vector_prob(2, 2, 1, &LatticeBasis::complex(ComplexMatrix::identity(2)).unwrap(), 30.0, &MonteCarlo::new(2000, 104)).unwrap();
    assert_eq!(sat.value, 1.0);
}

#[test]
fn sigma_tail_saturates() {
    let e = estimate_sigma_tail(2, 3, &[1e6, 1e6], &MonteCarlo::new(2000, 105)).unwrap();
    assert_eq!(e.value, 1.0);
    let e = estimate_sigma_tail(2, 2, &[f64::INFINITY, 1e-9], &MonteCarlo::new(2000, 105)).unwrap();
    assert_eq!(e.value, 0.0);
}

#[test]
fn received_lattice_sandwich() {
    let lattice = LatticeBasis::complex(latdec::stcodes::golden_generator()).unwrap();
    assert_eq!(sandwich_violations(2, 2, 2, &lattice, &MonteCarlo::new(3000, 106)).unwrap(), 0);
    let lattice = LatticeBasis::complex(ComplexMatrix::identity(2)).unwrap();
    assert_eq!(sandwich_violations(2, 3, 1, &lattice, &MonteCarlo::new(3000, 107)).unwrap(), 0);
}

#[test]
fn log_power_envelope_fit_then_verify() {
    let lattice = LatticeBasis::complex(ComplexMatrix::identity(2)).unwrap();
    let eps: Vec<f64> = (0..8).map(|i| 0.05 * 8f64.powf(i as f64 / 7.0)).collect();
    let curve = short_vector_curve(2, 2, 1, &lattice, &eps, &MonteCarlo::new(200_000, 108)).unwrap();
    // Fit C on the even-indexed thresholds, verify on the odd ones.
    let c = curve
        .points
        .iter()
        .step_by(2)
        .filter(|(_, p)| p.successes > 0)
        .map(|(e, p)| p.ci_high / upper_bound_lemma2(2, *e, 1.0).unwrap())
        .fold(0.0, f64::max);
    for (e, p) in curve.points.iter().skip(1).step_by(2) {
        assert!(p.value <= upper_bound_lemma2(2, *e, c).unwrap(), "ε = {e}");
    }
}

#[test]
fn bonferroni_bound_below_monte_carlo() {
    let lattice = LatticeBasis::complex(ComplexMatrix::identity(2)).unwrap();
    let mc = estimate_short_vector_prob(2, 2, 1, &lattice, 0.2, &MonteCarlo::new(100_000, 109)).unwrap();
    let b = bonferroni_lower_bound(2, 0.2).unwrap();
    assert!(b.bound <= mc.ci_high);
}

#[test]
fn ml_is_error_free_without_noise() {
    let code = vblast_code(2, 1, 4, 1.0).unwrap();
    let curves = estimate_ser(&code, 2, &[DecoderId::Ml], &[SnrPoint::from_linear(1e9, 2)], &MonteCarlo::new(2000, 110)).unwrap();
    assert_eq!(curves[0].points[0].1.successes, 0);
}

#[test]
fn ser_ordering_and_monotonicity() {
    let code = golden_code(4, 1.0).unwrap();
    let ids = [DecoderId::Ml, DecoderId::Nld, DecoderId::LllAided];
    let snr: Vec<SnrPoint> = [6.0, 12.0, 18.0].iter().map(|&d| SnrPoint::from_db(d, 2)).collect();
    let curves = estimate_ser(&code, 2, &ids, &snr, &MonteCarlo::new(20_000, 111)).unwrap();
    for i in 0..snr.len() {
        let (ml, nld, lll) = (curves[0].points[i].1, curves[1].points[i].1, curves[2].points[i].1);
        assert!(ml.ci_low <= nld.ci_high && nld.ci_low <= lll.ci_high, "{ml:?} {nld:?} {lll:?}");
        assert!(ml.value <= nld.value && nld.value <= lll.value);
    }
    for c in &curves {
        for w in c.points.windows(2) {
            assert!(w[1].1.ci_low <= w[0].1.ci_high);
        }
    }
}

#[test]
fn ser_rejects_bad_input() {
    let code = vblast_code(2, 1, 4, 1.0).unwrap();
    assert!(estimate_ser_point(&code, 2, &[], SnrPoint::from_db(10.0, 2), &MonteCarlo::new(2000, 1)).is_err());
    assert!(estimate_ser_point(&code, 2, &[DecoderId::Ml], SnrPoint::from_db(10.0, 2), &MonteCarlo::new(10, 1)).is_err());
}

/// Paired re-run of the ML column with an exhaustive scan through complex
/// codeword matrices.
#[test]
fn vblast_ml_matches_independent_scan_at_20db() {
    let snr = SnrPoint::from_db(20.0, 2);
    let code = vblast_code(2, 1, 4, 1.0).unwrap();
    let mc = MonteCarlo::new(20_000, 112);
    let est = estimate_ser_point(&code, 2, &[DecoderId::Ml], snr, &mc).unwrap()[0];

    let scaled = code.with_power(snr.power).unwrap();
    let book = enumerate_codebook(&scaled).unwrap();
    let mut errors = 0u64;
    for trial in 0..mc.trials {
        let mut rng = stream(mc.seed, trial);
        let sent = scaled.random_coeffs(&mut rng);
        let chan = draw_channel(2, 2, 1, &mut rng).unwrap();
        let y = transmit(&scaled, &scaled.codeword(&sent).unwrap(), &chan, &snr, &mut rng).unwrap();
        let mut best = (f64::INFINITY, &book[0].coeffs);
        for w in &book {
            let hx = chan.h().mul(&w.signal).unwrap();
            let d: f64 = (0..2).map(|r| (hx[(r, 0)] - y[r]).norm_sqr()).sum();
            if d < best.0 {
                best = (d, &w.coeffs);
            }
        }
        errors += u64::from(*best.1 != sent);
    }
    assert_eq!(est.successes, errors);
}

#[test]
fn short_lattice_vectors_force_nld_errors() {
    // Among trials whose decoding lattice has a vector no longer than
    // σ/√M, the NLD error rate stays above Q(1/(2√M)).
    let code = vblast_code(2, 1, 4, 1.0).unwrap();
    let out = nld_short_vector_conditioning(&code, 2, SnrPoint::from_db(20.0, 2), &MonteCarlo::new(200_000, 113)).unwrap();
    assert!(out.short.successes >= 20, "{out:?}");
    assert!(out.error_given_short.ci_low > q_function(1.0 / (2.0 * 2f64.sqrt())), "{out:?}");
    assert!(out.error_given_short.value > out.error.value);
}

#[test]
fn budget_errors_carry_the_trial() {
    let snr = SnrPoint::from_db(10.0, 2);
    let code = golden_code(4, snr.power).unwrap();
    let mut rng = stream(114, 0);
    let chan = draw_channel(2, 2, 2, &mut rng).unwrap();
    let ctx = DecodingContext::with_budget(&code, &chan, 1).unwrap();
    let sent = code.random_coeffs(&mut rng);
    let y = transmit(&code, &code.codeword(&sent).unwrap(), &chan, &snr, &mut rng).unwrap();
    assert!(ctx.nld(&y, &sent).unwrap_err().is_budget());
}

#[test]
fn slope_fit_rejects_bad_points() {
    assert!(fit_loglog_slope(&[(0.1, 1e-3), (0.2, -1.0), (0.3, 1e-2)]).is_err());
}
