//! Quasi-static Rayleigh block fading with additive white Gaussian noise.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::LatticeBasis;
use crate::linalg::{block_diagonal_lift, complex_gaussian, sample_gaussian_matrix, singular_values, ComplexMatrix, SingularValues};
use crate::stcodes::{Codeword, SpaceTimeCode};

/// Smallest-to-largest singular value ratio below which a channel is treated
/// as singular.
const SINGULAR_RATIO: f64 = 1e-12;

/// One channel draw `H` (N x M), held constant over the `T` uses of a block.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    h: ComplexMatrix,
    t: usize,
    lifted: ComplexMatrix,
    sigma: SingularValues,
}

impl ChannelRealization {
    pub fn from_matrix(h: ComplexMatrix, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidParameter("T must be positive".into()));
        }
        if h.cols() > h.rows() {
            return Err(Error::InvalidParameter(format!(
                "M = {} transmit antennas exceeds N = {} receive antennas",
                h.cols(),
                h.rows()
            )));
        }
        let sigma = singular_values(&h)?;
        let lifted = block_diagonal_lift(&h, t);
        Ok(Self { h, t, lifted, sigma })
    }

    pub fn h(&self) -> &ComplexMatrix {
        &self.h
    }

    /// Block-diagonal `H_T`, `NT x MT`.
    pub fn lifted(&self) -> &ComplexMatrix {
        &self.lifted
    }

    pub fn singular_values(&self) -> &SingularValues {
        &self.sigma
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn m(&self) -> usize {
        self.h.cols()
    }

    pub fn n(&self) -> usize {
        self.h.rows()
    }

    pub fn is_singular(&self) -> bool {
        self.sigma.smallest() <= SINGULAR_RATIO * self.sigma.largest()
    }
}

/// SNR bookkeeping: `rho = M P / noise_var`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    pub rho: f64,
    pub power: f64,
    pub noise_var: f64,
}

impl SnrPoint {
    /// Unit noise variance; the transmit power carries the SNR.
    pub fn from_linear(rho: f64, m: usize) -> Self {
        Self { rho, power: rho / m as f64, noise_var: 1.0 }
    }

    pub fn from_db(db: f64, m: usize) -> Self {
        Self::from_linear(10f64.powf(db / 10.0), m)
    }

    pub fn db(&self) -> f64 {
        10.0 * self.rho.log10()
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_var.sqrt()
    }
}

/// Draws i.i.d. unit-variance complex Gaussian `H`.
pub fn draw_channel<R: Rng + ?Sized>(m: usize, n: usize, t: usize, rng: &mut R) -> Result<ChannelRealization> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("antenna counts must be positive".into()));
    }
    if m > n {
        return Err(Error::InvalidParameter(format!("M = {m} > N = {n} is outside the modeled range")));
    }
    ChannelRealization::from_matrix(sample_gaussian_matrix(n, m, rng), t)
}

/// Noiseless received block `H_T vec(X)`.
pub fn noiseless_output(chan: &ChannelRealization, signal: &[Complex64]) -> Result<Vec<Complex64>> {
    chan.lifted.mul_vec(signal)
}

/// `y = H_T vec(X) + w`, `w` i.i.d. circular Gaussian with variance
/// `noise_var` per receive antenna and use.
pub fn transmit<R: Rng + ?Sized>(
    code: &SpaceTimeCode,
    word: &Codeword,
    chan: &ChannelRealization,
    snr: &SnrPoint,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    check_consistent(code, chan, snr)?;
    let signal = code.vec_signal(&word.coeffs);
    let mut y = noiseless_output(chan, &signal)?;
    add_noise(&mut y, snr.noise_var, rng);
    Ok(y)
}

pub(crate) fn check_consistent(code: &SpaceTimeCode, chan: &ChannelRealization, snr: &SnrPoint) -> Result<()> {
    if code.m() != chan.m() || code.t() != chan.t() {
        return Err(Error::Dimension(format!(
            "code is {}x{} but channel has M = {}, T = {}",
            code.m(),
            code.t(),
            chan.m(),
            chan.t()
        )));
    }
    if (code.power() - snr.power).abs() > 1e-9 * snr.power {
        return Err(Error::InvalidParameter(format!(
            "code power {} does not match SNR point power {}",
            code.power(),
            snr.power
        )));
    }
    Ok(())
}

pub fn add_noise<R: Rng + ?Sized>(y: &mut [Complex64], noise_var: f64, rng: &mut R) {
    let std = noise_var.sqrt();
    for v in y.iter_mut() {
        *v += complex_gaussian(rng) * std;
    }
}

/// Realified received lattice generated by `H_T · power_scale · L`.
pub fn received_lattice(code: &SpaceTimeCode, chan: &ChannelRealization) -> Result<LatticeBasis> {
    if chan.is_singular() {
        return Err(Error::Singular);
    }
    let gen = chan.lifted.to_real().mul(code.real_generator())?.scale(code.power_scale());
    LatticeBasis::real(gen).map_err(|_| Error::Singular)
}
