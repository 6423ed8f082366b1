//! Monte Carlo estimators, slope fits and closed-form reference bounds.
//!
//! All estimators run trials in parallel, one deterministic random stream
//! per trial index, and reduce by summing integer counts, so their output is
//! independent of the number of worker threads.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::channel::{add_noise, draw_channel, noiseless_output, SnrPoint};
use crate::decoders::{DecoderId, DecodingContext};
use crate::error::{Error, Result};
use crate::lattice::{Enumerator, LatticeBasis};
use crate::linalg::{block_diagonal_lift, sample_gaussian_matrix, singular_values, stream, ComplexMatrix};
use crate::stcodes::SpaceTimeCode;

/// Two-sided confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.95;

/// Smallest per-point trial count accepted by the SER estimators.
pub const MIN_SER_TRIALS: u64 = 1000;

/// Estimates with fewer successes than this are not used in fits.
pub const RARE_EVENT_FLOOR: u64 = 20;

/// Trials per parallel work item.
const CHUNK: u64 = 1024;

/// A binomial proportion with its 95% Clopper–Pearson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub successes: u64,
}

impl EstimateWithCI {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        assert!(trials > 0 && successes <= trials, "{successes} successes in {trials} trials");
        let (ci_low, ci_high) = clopper_pearson(successes, trials, CONFIDENCE);
        Self { value: successes as f64 / trials as f64, ci_low, ci_high, trials, successes }
    }

    /// Enough successes for the relative interval width to be usable.
    pub fn is_reliable(&self) -> bool {
        self.successes >= RARE_EVENT_FLOOR
    }
}

/// `P(X <= x)` for `X ~ Binomial(n, p)`, summed over whichever tail has
/// monotonically decreasing terms.
fn binomial_cdf(x: u64, n: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return if x >= n { 1.0 } else { 0.0 };
    }
    if x >= n {
        return 1.0;
    }
    let nf = n as f64;
    let ln_pmf = |k: u64| {
        let kf = k as f64;
        ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0) + kf * p.ln() + (nf - kf) * (-p).ln_1p()
    };
    let mode = ((nf + 1.0) * p).floor() as u64;
    let ratio = p / (1.0 - p);
    if x < mode {
        // Lower tail: terms decrease as k goes down from x.
        let mut term = ln_pmf(x).exp();
        let mut sum = term;
        let mut k = x;
        while k > 0 && term > sum * 1e-17 {
            term *= k as f64 / ((nf - k as f64 + 1.0) * ratio);
            k -= 1;
            sum += term;
        }
        sum.min(1.0)
    } else {
        // Upper tail from x + 1, terms decrease as k goes up.
        let mut k = x + 1;
        let mut term = ln_pmf(k).exp();
        let mut sum = term;
        while k < n && term > sum * 1e-17 {
            term *= (nf - k as f64) / (k as f64 + 1.0) * ratio;
            k += 1;
            sum += term;
        }
        (1.0 - sum).clamp(0.0, 1.0)
    }
}

fn bisect(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> bool) -> f64 {
    // f(lo) is false and f(hi) is true.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact (Clopper–Pearson) binomial confidence interval.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    let alpha = 1.0 - confidence;
    let (x, n) = (successes, trials);
    let lower = if x == 0 {
        0.0
    } else {
        // Smallest p with P(X >= x) >= alpha/2.
        bisect(0.0, 1.0, |p| 1.0 - binomial_cdf(x - 1, n, p) >= alpha / 2.0)
    };
    let upper = if x == n {
        1.0
    } else {
        // Largest p with P(X <= x) >= alpha/2.
        bisect(0.0, 1.0, |p| binomial_cdf(x, n, p) < alpha / 2.0)
    };
    (lower.min(x as f64 / n as f64), upper.max(x as f64 / n as f64))
}

/// Gaussian tail function.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Trial budget and seed for one Monte Carlo experiment.
///
/// Runs start with `trials` and double (continuing the trial index
/// sequence) until every tracked event reaches the rare-event floor or
/// `max_trials` is reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub trials: u64,
    pub max_trials: u64,
    pub seed: u64,
}

impl MonteCarlo {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self { trials, max_trials: trials, seed }
    }

    pub fn with_max_trials(mut self, max_trials: u64) -> Self {
        self.max_trials = max_trials.max(self.trials);
        self
    }
}

/// Counts, for each of `n_events` flags, the trials in `range` where `f`
/// raised it. Errors report the lowest failing trial index.
fn count_events<F>(seed: u64, range: Range<u64>, n_events: usize, f: &F) -> Result<Vec<u64>>
where
    F: Fn(&mut ChaCha8Rng, &mut [bool]) -> Result<()> + Sync,
{
    let starts: Vec<u64> = (range.start..range.end).step_by(CHUNK as usize).collect();
    let partial: Vec<Result<Vec<u64>>> = starts
        .par_iter()
        .map(|&s| {
            let mut counts = vec![0u64; n_events];
            let mut flags = vec![false; n_events];
            for trial in s..(s + CHUNK).min(range.end) {
                let mut rng = stream(seed, trial);
                flags.iter_mut().for_each(|b| *b = false);
                f(&mut rng, &mut flags).map_err(|e| Error::Trial { trial, source: Box::new(e) })?;
                for (c, &b) in counts.iter_mut().zip(&flags) {
                    *c += u64::from(b);
                }
            }
            Ok(counts)
        })
        .collect();
    let mut total = vec![0u64; n_events];
    for part in partial {
        for (t, c) in total.iter_mut().zip(part?) {
            *t += c;
        }
    }
    Ok(total)
}

/// Runs `f` under the doubling schedule of [`MonteCarlo`]. Each extension
/// round evaluates only the events still below the floor (`active` flags);
/// returns `(trials, successes)` per event.
fn run_adaptive<F>(mc: &MonteCarlo, n_events: usize, f: F) -> Result<Vec<(u64, u64)>>
where
    F: Fn(&mut ChaCha8Rng, &[bool], &mut [bool]) -> Result<()> + Sync,
{
    if mc.trials == 0 {
        return Err(Error::InvalidParameter("trial count must be positive".into()));
    }
    let mut done = 0u64;
    let mut next = mc.trials;
    let mut out = vec![(0u64, 0u64); n_events];
    let mut active = vec![true; n_events];
    loop {
        let more = count_events(mc.seed, done..next, n_events, &|rng: &mut ChaCha8Rng, flags: &mut [bool]| {
            f(rng, &active, flags)
        })?;
        for ((o, m), a) in out.iter_mut().zip(more).zip(&active) {
            if *a {
                o.0 += next - done;
                o.1 += m;
            }
        }
        done = next;
        for (a, o) in active.iter_mut().zip(&out) {
            *a = o.1 < RARE_EVENT_FLOOR;
        }
        if !active.iter().any(|a| *a) || done >= mc.max_trials {
            return Ok(out);
        }
        next = (2 * done).min(mc.max_trials);
    }
}

fn estimates(counts: Vec<(u64, u64)>) -> Vec<EstimateWithCI> {
    counts.into_iter().map(|(t, c)| EstimateWithCI::from_counts(c, t)).collect()
}

/// Least-squares line in log–log coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation from the line, in log10 units.
    pub residual: f64,
    pub points: Vec<(f64, f64)>,
}

fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).abs()).fold(0.0, f64::max);
    (slope, intercept, residual)
}

/// Slope of `log10 y` against `log10 x`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!("{} points, need at least 3", points.len())));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::InvalidParameter(format!("nonpositive point ({}, {})", p.0, p.1)));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let distinct = xs.iter().any(|x| (x - xs[0]).abs() > 0.0);
    if !distinct {
        return Err(Error::InsufficientData("all abscissae equal".into()));
    }
    let (slope, intercept, residual) = fit_line(&xs, &ys);
    Ok(SlopeFit { slope, intercept, residual, points: points.to_vec() })
}

/// Probability-versus-threshold curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityCurve {
    pub points: Vec<(f64, EstimateWithCI)>,
}

impl ProbabilityCurve {
    /// Slope over the points that clear the rare-event floor.
    pub fn slope(&self) -> Result<SlopeFit> {
        let pts: Vec<(f64, f64)> =
            self.points.iter().filter(|(_, e)| e.is_reliable()).map(|(x, e)| (*x, e.value)).collect();
        fit_loglog_slope(&pts)
    }
}

fn check_thresholds(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::InvalidParameter("empty threshold list".into()));
    }
    if eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter("thresholds must be positive".into()));
    }
    Ok(())
}

/// Minimum distance of the realified lattice generated by `H_T L` for one
/// channel draw.
pub fn received_minimum_distance(h: &ComplexMatrix, t: usize, lattice: &ComplexMatrix) -> Result<f64> {
    let gen = block_diagonal_lift(h, t).mul(lattice)?;
    let basis = LatticeBasis::complex(gen).map_err(|_| Error::Singular)?;
    Enumerator::new(&basis)?.minimum_distance()
}

fn complex_lattice(code_lattice: &LatticeBasis, dim: usize) -> Result<ComplexMatrix> {
    let g = match code_lattice.generator() {
        crate::lattice::Generator::Complex(g) => g.clone(),
        crate::lattice::Generator::Real(_) => {
            return Err(Error::InvalidParameter("code lattice must be given as a complex generator".into()))
        }
    };
    if g.rows() != dim || g.cols() != dim {
        return Err(Error::Dimension(format!("code lattice must be {dim}x{dim}, got {}x{}", g.rows(), g.cols())));
    }
    Ok(g)
}

/// `Pr{d(H_T L) <= ε}` for every ε in `eps`, from one set of channel draws.
pub fn short_vector_curve(
    m: usize,
    n: usize,
    t: usize,
    code_lattice: &LatticeBasis,
    eps: &[f64],
    mc: &MonteCarlo,
) -> Result<ProbabilityCurve> {
    check_thresholds(eps)?;
    if 2 * m * t > 12 {
        return Err(Error::InvalidParameter(format!("realified dimension {} exceeds 12", 2 * m * t)));
    }
    let lattice = complex_lattice(code_lattice, m * t)?;
    let counts = run_adaptive(mc, eps.len(), |rng, _, flags| {
        let chan = draw_channel(m, n, t, rng)?;
        let d = received_minimum_distance(chan.h(), t, &lattice)?;
        for (f, e) in flags.iter_mut().zip(eps) {
            *f = d <= *e;
        }
        Ok(())
    })?;
    Ok(ProbabilityCurve { points: eps.iter().copied().zip(estimates(counts)).collect() })
}

/// `Pr{d(H_T L) <= ε}` for a single ε.
pub fn estimate_short_vector_prob(
    m: usize,
    n: usize,
    t: usize,
    code_lattice: &LatticeBasis,
    epsilon: f64,
    mc: &MonteCarlo,
) -> Result<EstimateWithCI> {
    Ok(short_vector_curve(m, n, t, code_lattice, &[epsilon], mc)?.points[0].1)
}

/// Counts channel draws violating `σ_1 d(L) <= d(H_T L) <= σ_M d(L)` beyond a
/// relative tolerance of 1e-9.
pub fn sandwich_violations(m: usize, n: usize, t: usize, code_lattice: &LatticeBasis, mc: &MonteCarlo) -> Result<u64> {
    let lattice = complex_lattice(code_lattice, m * t)?;
    let d_l = Enumerator::new(code_lattice)?.minimum_distance()?;
    let counts = count_events(mc.seed, 0..mc.trials, 1, &|rng: &mut ChaCha8Rng, flags: &mut [bool]| {
        let chan = draw_channel(m, n, t, rng)?;
        let d = received_minimum_distance(chan.h(), t, &lattice)?;
        let s = chan.singular_values();
        let tol = 1e-9 * d.max(d_l);
        flags[0] = d < s.smallest() * d_l - tol || d > s.largest() * d_l + tol;
        Ok(())
    })?;
    Ok(counts[0])
}

/// `Pr{σ_1 <= t_1, …, σ_M <= t_M}` for N x M Gaussian `H`. Use
/// `f64::INFINITY` to leave a singular value unconstrained.
pub fn estimate_sigma_tail(m: usize, n: usize, thresholds: &[f64], mc: &MonteCarlo) -> Result<EstimateWithCI> {
    Ok(sigma_tail_curve(m, n, &[thresholds.to_vec()], mc)?[0])
}

/// Joint singular-value tail probabilities for several threshold vectors
/// from one set of draws.
pub fn sigma_tail_curve(m: usize, n: usize, thresholds: &[Vec<f64>], mc: &MonteCarlo) -> Result<Vec<EstimateWithCI>> {
    if thresholds.is_empty() {
        return Err(Error::InvalidParameter("empty threshold list".into()));
    }
    for th in thresholds {
        if th.len() != m {
            return Err(Error::Dimension(format!("{} thresholds for {m} singular values", th.len())));
        }
        if th.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidParameter("thresholds must be positive".into()));
        }
    }
    if m > n {
        return Err(Error::InvalidParameter(format!("M = {m} > N = {n}")));
    }
    let counts = run_adaptive(mc, thresholds.len(), |rng, _, flags| {
        let h = sample_gaussian_matrix(n, m, rng);
        let s = singular_values(&h)?;
        for (f, th) in flags.iter_mut().zip(thresholds) {
            *f = s.as_slice().iter().zip(th).all(|(s, t)| s <= t);
        }
        Ok(())
    })?;
    Ok(estimates(counts))
}

/// Block error rate of one decoder across SNR points.
#[derive(Debug, Clone, PartialEq)]
pub struct SerCurve {
    pub decoder: DecoderId,
    pub points: Vec<(SnrPoint, EstimateWithCI)>,
}

/// Block error rates of several decoders at one SNR point, on paired trials:
/// every decoder sees the same codeword, channel and noise for a given
/// trial index. Decoders still short of the rare-event floor continue on
/// further trial indices while the others stop.
pub fn estimate_ser_point(
    code: &SpaceTimeCode,
    n: usize,
    decoders: &[DecoderId],
    snr: SnrPoint,
    mc: &MonteCarlo,
) -> Result<Vec<EstimateWithCI>> {
    if decoders.is_empty() {
        return Err(Error::InvalidParameter("no decoders selected".into()));
    }
    if mc.trials < MIN_SER_TRIALS {
        return Err(Error::InvalidParameter(format!("SER estimates need at least {MIN_SER_TRIALS} trials per point")));
    }
    let code = code.with_power(snr.power)?;
    let (m, t) = (code.m(), code.t());
    let counts = run_adaptive(mc, decoders.len(), |rng, active, flags| {
        let sent = code.random_coeffs(rng);
        let chan = draw_channel(m, n, t, rng)?;
        let mut y = noiseless_output(&chan, &code.vec_signal(&sent))?;
        add_noise(&mut y, snr.noise_var, rng);
        let ctx = DecodingContext::new(&code, &chan)?;
        for ((f, id), a) in flags.iter_mut().zip(decoders).zip(active) {
            if *a {
                *f = ctx.decode(*id, &y, &sent)?.is_error;
            }
        }
        Ok(())
    })?;
    Ok(estimates(counts))
}

/// Block error rate curves for each decoder over `snr_list`.
pub fn estimate_ser(
    code: &SpaceTimeCode,
    n: usize,
    decoders: &[DecoderId],
    snr_list: &[SnrPoint],
    mc: &MonteCarlo,
) -> Result<Vec<SerCurve>> {
    let mut curves: Vec<SerCurve> = decoders.iter().map(|&d| SerCurve { decoder: d, points: Vec::new() }).collect();
    for snr in snr_list {
        let ests = estimate_ser_point(code, n, decoders, *snr, mc)?;
        for (curve, e) in curves.iter_mut().zip(ests) {
            curve.points.push((*snr, e));
        }
    }
    Ok(curves)
}

/// Diversity order estimate: slope of `-log10 SER` against `log10 SNR` over
/// the points that clear the rare-event floor (zero-error points never do).
pub fn diversity_slope(curve: &[(SnrPoint, EstimateWithCI)]) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> =
        curve.iter().filter(|(_, e)| e.is_reliable()).map(|(s, e)| (s.rho, e.value)).collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} SNR points with at least {RARE_EVENT_FLOOR} errors, need 3",
            pts.len()
        )));
    }
    let fit = fit_loglog_slope(&pts)?;
    Ok(SlopeFit { slope: -fit.slope, intercept: -fit.intercept, ..fit })
}

/// Outcome of conditioning NLD errors on a short decoding-lattice vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortVectorConditioning {
    /// Fraction of trials whose decoding lattice has a vector of norm at most
    /// `σ / √M`.
    pub short: EstimateWithCI,
    /// NLD block error rate among those trials.
    pub error_given_short: EstimateWithCI,
    /// NLD block error rate over all trials.
    pub error: EstimateWithCI,
}

/// Splits NLD trials by whether the lattice the decoder searches (the
/// constellation coset's lattice, `2 · power_scale · H_T L`) has minimum
/// distance at most `σ/√M`.
pub fn nld_short_vector_conditioning(
    code: &SpaceTimeCode,
    n: usize,
    snr: SnrPoint,
    mc: &MonteCarlo,
) -> Result<ShortVectorConditioning> {
    let code = code.with_power(snr.power)?;
    let (m, t) = (code.m(), code.t());
    let threshold = snr.noise_std() / (m as f64).sqrt();
    let counts = count_events(mc.seed, 0..mc.trials, 3, &|rng: &mut ChaCha8Rng, flags: &mut [bool]| {
        let sent = code.random_coeffs(rng);
        let chan = draw_channel(m, n, t, rng)?;
        let mut y = noiseless_output(&chan, &code.vec_signal(&sent))?;
        add_noise(&mut y, snr.noise_var, rng);
        let ctx = DecodingContext::new(&code, &chan)?;
        let short = ctx.coset_minimum_distance()? <= threshold;
        let err = ctx.nld(&y, &sent)?.is_error;
        flags[0] = short;
        flags[1] = short && err;
        flags[2] = err;
        Ok(())
    })?;
    let cond_trials = counts[0];
    if cond_trials == 0 {
        return Err(Error::InsufficientData("no trial had a short lattice vector".into()));
    }
    Ok(ShortVectorConditioning {
        short: EstimateWithCI::from_counts(counts[0], mc.trials),
        error_given_short: EstimateWithCI::from_counts(counts[1], cond_trials),
        error: EstimateWithCI::from_counts(counts[2], mc.trials),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DmtKind {
    NldBound,
    VBlast,
    Optimal,
}

impl FromStr for DmtKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nld_bound" => Ok(DmtKind::NldBound),
            "vblast" => Ok(DmtKind::VBlast),
            "optimal" => Ok(DmtKind::Optimal),
            other => Err(Error::InvalidParameter(format!("unknown trade-off curve `{other}`"))),
        }
    }
}

impl fmt::Display for DmtKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DmtKind::NldBound => "nld_bound",
            DmtKind::VBlast => "vblast",
            DmtKind::Optimal => "optimal",
        })
    }
}

/// Diversity as a function of multiplexing gain.
#[derive(Debug, Clone, PartialEq)]
pub struct DmtCurve {
    pub m: usize,
    pub n: usize,
    pub kind: DmtKind,
    pub points: Vec<(f64, f64)>,
}

fn dmt_value(m: usize, n: usize, kind: DmtKind, r: f64) -> f64 {
    let (mf, nf) = (m as f64, n as f64);
    match kind {
        DmtKind::NldBound => {
            let g = (n - m + 1) as f64;
            mf * g - r * g
        }
        DmtKind::VBlast => mf - r,
        DmtKind::Optimal => {
            // Piecewise linear through (k, (M-k)(N-k)).
            let kmax = m.min(n) as f64;
            let r = r.min(kmax);
            let k = r.floor().min(kmax - 1.0).max(0.0);
            let d0 = (mf - k) * (nf - k);
            let d1 = (mf - k - 1.0) * (nf - k - 1.0);
            d0 + (r - k) * (d1 - d0)
        }
    }
}

/// Closed-form trade-off curves on the given multiplexing-gain grid.
pub fn dmt_reference(m: usize, n: usize, kind: DmtKind, r_grid: &[f64]) -> Result<DmtCurve> {
    if m == 0 || n == 0 || m > n {
        return Err(Error::InvalidParameter(format!("need 1 <= M <= N, got M = {m}, N = {n}")));
    }
    if let Some(r) = r_grid.iter().find(|r| !(**r >= 0.0 && **r <= m as f64)) {
        return Err(Error::InvalidParameter(format!("multiplexing gain {r} outside [0, {m}]")));
    }
    Ok(DmtCurve { m, n, kind, points: r_grid.iter().map(|&r| (r, dmt_value(m, n, kind, r))).collect() })
}

/// Evenly spaced multiplexing gains covering `[0, M]`.
pub fn r_grid(m: usize, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| m as f64 * i as f64 / steps as f64).collect()
}

/// Exact count of primitive integer vectors (entries with no common divisor
/// above one) in the shell `2^{k-1} < ‖z‖_∞ <= 2^k`, by enumeration.
pub fn count_primitive_vectors(dim: usize, k: u32, budget: u64) -> Result<u64> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let hi: i64 = 1i64.checked_shl(k).filter(|v| *v < (1 << 40)).ok_or(Error::Budget { budget })?;
    let side = (2 * hi + 1) as f64;
    if side.powi(dim as i32) > budget as f64 {
        return Err(Error::Budget { budget });
    }
    // Shell lower bound 2^{k-1}; for k = 0 this is 1/2, i.e. any nonzero.
    let lo_exclusive: i64 = if k == 0 { 0 } else { hi / 2 };
    let mut z = vec![-hi; dim];
    let mut count = 0u64;
    loop {
        let inf = z.iter().map(|v| v.abs()).max().unwrap_or(0);
        if inf > lo_exclusive && z.iter().fold(0i64, |g, &v| gcd(g, v.abs())) == 1 {
            count += 1;
        }
        let mut i = dim;
        loop {
            if i == 0 {
                return Ok(count);
            }
            i -= 1;
            if z[i] < hi {
                z[i] += 1;
                for v in &mut z[i + 1..] {
                    *v = -hi;
                }
                break;
            }
        }
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Möbius function values for `1..=n` by a linear sieve.
fn mobius_table(n: usize) -> Vec<i8> {
    let mut mu = vec![1i8; n + 1];
    let mut is_comp = vec![false; n + 1];
    let mut primes = Vec::new();
    if n >= 1 {
        mu[0] = 0;
    }
    for i in 2..=n {
        if !is_comp[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            if i * p > n {
                break;
            }
            is_comp[i * p] = true;
            if i % p == 0 {
                mu[i * p] = 0;
                break;
            }
            mu[i * p] = -mu[i];
        }
    }
    mu
}

/// Number of nonzero primitive integer vectors with `‖z‖_∞ <= radius`,
/// by Möbius inversion over common divisors.
pub fn primitive_in_cube(dim: usize, radius: u64) -> u128 {
    let mu = mobius_table(radius as usize);
    let mut total: i128 = 0;
    for d in 1..=radius {
        let m = mu[d as usize];
        if m == 0 {
            continue;
        }
        let side = 2 * (radius / d) as i128 + 1;
        total += m as i128 * (side.pow(dim as u32) - 1);
    }
    total as u128
}

/// Primitive shell count for `2^{k-1} < ‖z‖_∞ <= 2^k` via [`primitive_in_cube`].
pub fn primitive_shell_count(dim: usize, k: u32) -> u128 {
    let hi = 1u64 << k;
    let lo = if k == 0 { 0 } else { hi / 2 };
    primitive_in_cube(dim, hi) - if lo == 0 { 0 } else { primitive_in_cube(dim, lo) }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

/// Sandwich `c (ε/‖b‖)^{2M} e^{-ε²/‖b‖²} <= Pr{‖v_b‖ <= ε} <= c (ε/‖b‖)^{2M}`
/// with the exact ball-volume constant `c = 1/M!`.
pub fn gaussian_ball_bounds(b_norm: f64, epsilon: f64, m: usize) -> Result<(f64, f64)> {
    if !(b_norm > 0.0 && epsilon > 0.0) || m == 0 {
        return Err(Error::InvalidParameter("need ‖b‖ > 0, ε > 0 and M >= 1".into()));
    }
    let x = (epsilon / b_norm).powi(2);
    let upper = x.powi(m as i32) / factorial(m);
    Ok((upper * (-x).exp(), upper))
}

/// Exact `Pr{‖v_b‖ <= ε}`: `‖v_b‖²/‖b‖²` is Gamma(M, 1).
pub fn gaussian_ball_probability(b_norm: f64, epsilon: f64, m: usize) -> f64 {
    let x = (epsilon / b_norm).powi(2);
    let mut term = 1.0;
    let mut partial = 1.0;
    for k in 1..m {
        term *= x / k as f64;
        partial += term;
    }
    1.0 - (-x).exp() * partial
}

/// Monte Carlo `Pr{‖H b‖ <= ε}` for an M x M Gaussian `H`.
pub fn estimate_gaussian_ball_prob(b: &[Complex64], epsilon: f64, mc: &MonteCarlo) -> Result<EstimateWithCI> {
    let m = b.len();
    if m == 0 {
        return Err(Error::InvalidParameter("empty coefficient vector".into()));
    }
    let counts = count_events(mc.seed, 0..mc.trials, 1, &|rng: &mut ChaCha8Rng, flags: &mut [bool]| {
        let h = sample_gaussian_matrix(m, m, rng);
        let v = h.mul_vec(b)?;
        flags[0] = v.iter().map(|z| z.norm_sqr()).sum::<f64>() <= epsilon * epsilon;
        Ok(())
    })?;
    Ok(EstimateWithCI::from_counts(counts[0], mc.trials))
}

/// The assembled two-term lower bound on `Pr{d(H) <= ε}` for M x M `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonferroniBound {
    /// Single-vector sum over primitive shells `k = 0..=K`.
    pub first_term: f64,
    /// Pairwise correction `|B|² c₈ ε^{4M-1}`.
    pub pair_term: f64,
    pub bound: f64,
    /// Number of shells used, `K + 1`.
    pub shells: u32,
    /// `|B|`, primitive vectors with `‖z‖_∞ <= ε^{-1/2M}`.
    pub set_size: u128,
}

/// Single-vector sum minus pairwise correction, every constant explicit:
///
/// * `c₆ = c₇ = 1/M!` (complex Gaussian ball);
/// * shell `k` holds `n_k` primitive vectors, each with
///   `‖z‖ <= √(2M) 2^k`, contributing at least
///   `c₆ ε^{2M} / ((2^k)^{2M} (2M)^M) · e^{-1}`;
/// * `c₈ = c₇² (2M)^M` from the orthogonal-residual bound
///   `‖r‖ >= ε^{1/2M} / √(2M)`.
pub fn bonferroni_lower_bound(m: usize, epsilon: f64) -> Result<BonferroniBound> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("M = {m}; the bound needs M >= 2")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {epsilon} outside (0, 1)")));
    }
    let dim = 2 * m;
    let mf = m as f64;
    let radius = epsilon.powf(-1.0 / (2.0 * mf));
    if radius > 1e6 {
        return Err(Error::InvalidParameter(format!("ε = {epsilon} too small to evaluate")));
    }
    let shells = radius.log2().floor() as u32 + 1;
    let c6 = 1.0 / factorial(m);
    let c7 = c6;
    let c8 = c7 * c7 * (2.0 * mf).powi(m as i32);
    let eps_2m = epsilon.powi(2 * m as i32);
    let mut first_term = 0.0;
    for k in 0..shells {
        let n_k = primitive_shell_count(dim, k) as f64;
        let scale = 2f64.powi((k * 2 * m as u32) as i32) * (2.0 * mf).powi(m as i32);
        first_term += n_k * c6 * eps_2m / scale * (-1f64).exp();
    }
    let set_size = primitive_in_cube(dim, radius.floor() as u64);
    let pair_term = (set_size as f64).powi(2) * c8 * epsilon.powi(4 * m as i32 - 1);
    Ok(BonferroniBound { first_term, pair_term, bound: first_term - pair_term, shells, set_size })
}

/// Largest ε on a log grid of `points` values in `[lo, hi]` below which the
/// Bonferroni bound stays positive over the whole grid.
pub fn bonferroni_positive_threshold(m: usize, lo: f64, hi: f64, points: usize) -> Result<f64> {
    let grid: Vec<f64> =
        (0..points).map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64)).collect();
    let mut threshold = None;
    for &e in &grid {
        if bonferroni_lower_bound(m, e)?.bound > 0.0 {
            threshold = Some(e);
        } else {
            break;
        }
    }
    threshold.ok_or_else(|| Error::InsufficientData(format!("bound not positive at ε = {lo}")))
}

/// Reference envelope `C ε^{2M} ln(1/ε)^{M-1}`.
pub fn upper_bound_lemma2(m: usize, epsilon: f64, c: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {epsilon} outside (0, 1)")));
    }
    Ok(c * epsilon.powi(2 * m as i32) * (1.0 / epsilon).ln().powi(m as i32 - 1))
}

/// One horizontal SNR gap between two error-rate curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPoint {
    pub target_ser: f64,
    pub gap_db: f64,
    /// Gap between the optimistic NLD and pessimistic ML interval curves.
    pub gap_low_db: f64,
    /// Gap between the pessimistic NLD and optimistic ML interval curves.
    pub gap_high_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub gaps: Vec<GapPoint>,
    /// Targets one of the curves does not span.
    pub excluded: Vec<f64>,
}

/// SNR in dB where a nonincreasing log-interpolated curve first reaches
/// `target`. Points with nonpositive values are skipped.
fn snr_at(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let mut env: Vec<(f64, f64)> = Vec::new();
    let mut running = f64::INFINITY;
    for &(db, v) in points {
        if v <= 0.0 {
            continue;
        }
        running = running.min(v);
        env.push((db, running.log10()));
    }
    let lt = target.log10();
    for w in env.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 >= lt && lt >= y1 {
            if y0 == y1 {
                return Some(x0);
            }
            return Some(x0 + (lt - y0) * (x1 - x0) / (y1 - y0));
        }
    }
    None
}

/// Horizontal dB gap `SNR_nld - SNR_ml` at each target error rate.
pub fn gap_analysis(ml: &SerCurve, nld: &SerCurve, targets: &[f64]) -> GapReport {
    let project = |c: &SerCurve, f: fn(&EstimateWithCI) -> f64| -> Vec<(f64, f64)> {
        c.points.iter().map(|(s, e)| (s.db(), f(e))).collect()
    };
    let ml_v = project(ml, |e| e.value);
    let ml_lo = project(ml, |e| e.ci_low);
    let ml_hi = project(ml, |e| e.ci_high);
    let nld_v = project(nld, |e| e.value);
    let nld_lo = project(nld, |e| e.ci_low);
    let nld_hi = project(nld, |e| e.ci_high);

    let mut report = GapReport { gaps: Vec::new(), excluded: Vec::new() };
    for &target in targets {
        match (snr_at(&ml_v, target), snr_at(&nld_v, target)) {
            (Some(a), Some(b)) => {
                let gap = b - a;
                let low = match (snr_at(&nld_lo, target), snr_at(&ml_hi, target)) {
                    (Some(x), Some(y)) => (x - y).min(gap),
                    _ => f64::NEG_INFINITY,
                };
                let high = match (snr_at(&nld_hi, target), snr_at(&ml_lo, target)) {
                    (Some(x), Some(y)) => (x - y).max(gap),
                    _ => f64::INFINITY,
                };
                report.gaps.push(GapPoint { target_ser: target, gap_db: gap, gap_low_db: low, gap_high_db: high });
            }
            _ => report.excluded.push(target),
        }
    }
    report
}
