//! Space-time lattice codes: uncoded V-BLAST over QAM and the 2x2 Golden
//! code.
//!
//! A code is a complex `MT`-dimensional lattice generator together with a
//! hypercube of information coefficients. Coefficients are centered odd
//! integers `{±1, ±3, …, ±(m-1)}` per real dimension for an `m²`-QAM
//! alphabet, written as interleaved `(re, im)` pairs, so a codeword has
//! `2MT` integer coefficients and `vec(X) = power_scale · L · c`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{volume, LatticeBasis};
use crate::linalg::{complexify_vector, ComplexMatrix, RealMatrix};

/// Largest codebook [`enumerate_codebook`] and exhaustive power
/// normalization will walk.
pub const MAX_CODEBOOK: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeKind {
    VBlast,
    Golden,
}

impl CodeKind {
    pub const ALL: [CodeKind; 2] = [CodeKind::VBlast, CodeKind::Golden];

    pub fn as_str(self) -> &'static str {
        match self {
            CodeKind::VBlast => "vblast",
            CodeKind::Golden => "golden",
        }
    }
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vblast" => Ok(CodeKind::VBlast),
            "golden" => Ok(CodeKind::Golden),
            other => Err(Error::InvalidParameter(format!(
                "unknown code `{other}` (expected one of: vblast, golden)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpaceTimeCode {
    kind: CodeKind,
    m: usize,
    t: usize,
    qam_order: u32,
    /// Unit-volume lattice generator, `MT x MT` complex.
    lattice: LatticeBasis,
    /// Real form of `lattice` (before power scaling), cached for decoders.
    real_generator: RealMatrix,
    /// Points per real dimension (`sqrt(qam_order)`).
    levels: i64,
    power: f64,
    power_scale: f64,
}

/// One codeword: realified coefficients and the `M x T` transmit matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    pub coeffs: Vec<i64>,
    pub signal: ComplexMatrix,
}

fn qam_levels(qam_order: u32) -> Option<i64> {
    let m = (qam_order as f64).sqrt().round() as i64;
    (m >= 2 && (m * m) as u32 == qam_order && m % 2 == 0).then_some(m)
}

impl SpaceTimeCode {
    fn build(kind: CodeKind, m: usize, t: usize, qam_order: u32, lattice: ComplexMatrix, power: f64) -> Result<Self> {
        let levels = qam_levels(qam_order)
            .ok_or_else(|| Error::InvalidParameter(format!("QAM order {qam_order} is not an even square")))?;
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidParameter(format!("power {power}")));
        }
        // Normalize to unit (real) volume.
        let basis = LatticeBasis::complex(lattice.clone())?;
        let dim = lattice.cols() as f64;
        let vol = volume(&basis);
        let lattice = lattice.scale(Complex64::new(vol.powf(-1.0 / dim), 0.0));
        let basis = LatticeBasis::complex(lattice.clone())?;
        let real_generator = lattice.to_real();
        let mut code = Self {
            kind,
            m,
            t,
            qam_order,
            lattice: basis,
            real_generator,
            levels,
            power,
            power_scale: 1.0,
        };
        let energy = code.unscaled_energy_per_use();
        code.power_scale = (power / energy).sqrt();
        Ok(code)
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    /// Transmit antennas.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Channel uses per codeword.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn qam_order(&self) -> u32 {
        self.qam_order
    }

    pub fn lattice(&self) -> &LatticeBasis {
        &self.lattice
    }

    /// Real generator of the unit-volume code lattice, `2MT x 2MT`.
    pub fn real_generator(&self) -> &RealMatrix {
        &self.real_generator
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn power_scale(&self) -> f64 {
        self.power_scale
    }

    /// Number of integer coefficients of a codeword (`2MT`).
    pub fn coeff_len(&self) -> usize {
        2 * self.m * self.t
    }

    /// Largest allowed coefficient; the range is the odd integers in
    /// `[-max, max]`.
    pub fn coeff_max(&self) -> i64 {
        self.levels - 1
    }

    pub fn codebook_size(&self) -> f64 {
        (self.levels as f64).powi(self.coeff_len() as i32)
    }

    pub fn rate_bits(&self) -> f64 {
        self.coeff_len() as f64 * (self.levels as f64).log2()
    }

    /// Same code with a different transmit power.
    pub fn with_power(&self, power: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidParameter(format!("power {power}")));
        }
        let mut code = self.clone();
        code.power_scale *= (power / self.power).sqrt();
        code.power = power;
        Ok(code)
    }

    /// Average `‖vec(X)‖² / T` over the codebook before power scaling.
    ///
    /// Exhaustive when the codebook is enumerable; otherwise the identical
    /// closed form for i.i.d. symmetric coordinates, `E[c²] · ‖L‖_F² / T`.
    pub fn unscaled_energy_per_use(&self) -> f64 {
        if self.codebook_size() <= MAX_CODEBOOK as f64 {
            let mut total = 0.0;
            let mut count = 0u64;
            for_each_coeffs(self.coeff_len(), self.coeff_max(), |c| {
                let v = self.real_generator.mul_int_vec(c);
                total += v.iter().map(|x| x * x).sum::<f64>();
                count += 1;
            });
            total / count as f64 / self.t as f64
        } else {
            let m = self.levels as f64;
            let second_moment = (m * m - 1.0) / 3.0;
            second_moment * self.real_generator.frobenius_norm().powi(2) / self.t as f64
        }
    }

    /// Exact average energy per channel use of the transmitted codebook.
    pub fn energy_per_use(&self) -> f64 {
        self.unscaled_energy_per_use() * self.power_scale * self.power_scale
    }

    /// `vec(X)` for a coefficient vector, column-major over the T uses.
    pub fn vec_signal(&self, coeffs: &[i64]) -> Vec<Complex64> {
        let real: Vec<f64> = self.real_generator.mul_int_vec(coeffs).iter().map(|x| x * self.power_scale).collect();
        complexify_vector(&real)
    }

    pub fn codeword(&self, coeffs: &[i64]) -> Result<Codeword> {
        if coeffs.len() != self.coeff_len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a code with {}",
                coeffs.len(),
                self.coeff_len()
            )));
        }
        let v = self.vec_signal(coeffs);
        let m = self.m;
        let signal = ComplexMatrix::from_fn(m, self.t, |i, j| v[j * m + i]);
        Ok(Codeword { coeffs: coeffs.to_vec(), signal })
    }

    /// Uniformly random codeword coefficients.
    pub fn random_coeffs<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        (0..self.coeff_len()).map(|_| 2 * rng.random_range(0..self.levels) - self.coeff_max()).collect()
    }
}

/// Calls `f` on every coefficient vector of the hypercube in lexicographic
/// order.
pub(crate) fn for_each_coeffs(len: usize, max: i64, mut f: impl FnMut(&[i64])) {
    let mut c = vec![-max; len];
    loop {
        f(&c);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] < max {
                c[i] += 2;
                for x in &mut c[i + 1..] {
                    *x = -max;
                }
                break;
            }
        }
    }
}

/// V-BLAST: independent QAM symbols per antenna and channel use on the
/// Gaussian-integer lattice.
pub fn vblast_code(m: usize, t: usize, qam_order: u32, power: f64) -> Result<SpaceTimeCode> {
    if m == 0 || t == 0 {
        return Err(Error::InvalidParameter("M and T must be positive".into()));
    }
    SpaceTimeCode::build(CodeKind::VBlast, m, t, qam_order, ComplexMatrix::identity(m * t), power)
}

/// The 2x2 Golden code.
///
/// With `θ = (1+√5)/2`, `θ̄ = (1-√5)/2`, `α = 1 + i(1-θ)`, `ᾱ = 1 + i(1-θ̄)`,
/// the codeword for QAM symbols `a, b, c, d` is
/// `X = 1/√5 [[α(a+bθ), α(c+dθ)], [iᾱ(c+dθ̄), ᾱ(a+bθ̄)]]`.
pub fn golden_code(qam_order: u32, power: f64) -> Result<SpaceTimeCode> {
    if qam_order != 4 && qam_order != 16 {
        return Err(Error::InvalidParameter(format!(
            "Golden code supports 4- and 16-QAM, got {qam_order}"
        )));
    }
    SpaceTimeCode::build(CodeKind::Golden, 2, 2, qam_order, golden_generator(), power)
}

/// Generator acting on `(a, b, c, d)` and producing
/// `vec(X) = (X11, X21, X12, X22)`.
pub fn golden_generator() -> ComplexMatrix {
    let s5 = 5f64.sqrt();
    let theta = (1.0 + s5) / 2.0;
    let theta_bar = (1.0 - s5) / 2.0;
    let alpha = Complex64::new(1.0, 1.0 - theta);
    let alpha_bar = Complex64::new(1.0, 1.0 - theta_bar);
    let i = Complex64::new(0.0, 1.0);
    let z = Complex64::new(0.0, 0.0);
    let rows = vec![
        vec![alpha, alpha * theta, z, z],
        vec![z, z, i * alpha_bar, i * alpha_bar * theta_bar],
        vec![z, z, alpha, alpha * theta],
        vec![alpha_bar, alpha_bar * theta_bar, z, z],
    ];
    ComplexMatrix::from_rows(&rows).expect("fixed shape").scale(Complex64::new(1.0 / s5, 0.0))
}

/// Builds a code by its CLI identifier.
pub fn code_by_kind(kind: CodeKind, m: usize, t: usize, qam_order: u32, power: f64) -> Result<SpaceTimeCode> {
    match kind {
        CodeKind::VBlast => vblast_code(m, t, qam_order, power),
        CodeKind::Golden => {
            if m != 2 || t != 2 {
                return Err(Error::InvalidParameter("the Golden code requires M = T = 2".into()));
            }
            golden_code(qam_order, power)
        }
    }
}

/// All codewords in lexicographic coefficient order.
pub fn enumerate_codebook(code: &SpaceTimeCode) -> Result<Vec<Codeword>> {
    if code.codebook_size() > MAX_CODEBOOK as f64 {
        return Err(Error::Budget { budget: MAX_CODEBOOK });
    }
    let mut out = Vec::with_capacity(code.codebook_size() as usize);
    for_each_coeffs(code.coeff_len(), code.coeff_max(), |c| {
        out.push(code.codeword(c).expect("length matches"));
    });
    Ok(out)
}

/// True iff every coefficient is an odd integer within the QAM range.
pub fn in_region(code: &SpaceTimeCode, coeffs: &[i64]) -> bool {
    coeffs.len() == code.coeff_len() && coeffs.iter().all(|&c| c.rem_euclid(2) == 1 && c.abs() <= code.coeff_max())
}

/// Minimum `|det ΔX|` over nonzero codeword differences, in unscaled lattice
/// units. Only defined for square codes (`M = T`).
///
/// Differences of odd coordinates range over the even integers in
/// `[-2max, 2max]`, and each such difference vector is realized by some
/// pair of codewords, so scanning difference vectors is exhaustive.
pub fn min_difference_determinant(code: &SpaceTimeCode) -> Result<f64> {
    if code.m != code.t {
        return Err(Error::InvalidParameter("determinant needs M = T".into()));
    }
    let per_coord = 2 * code.coeff_max() + 1;
    if (per_coord as f64).powi(code.coeff_len() as i32) > 1e8 {
        return Err(Error::Budget { budget: 100_000_000 });
    }
    let len = code.coeff_len();
    let max = 2 * code.coeff_max();
    let mut best = f64::INFINITY;
    let mut d = vec![-max; len];
    loop {
        if d.iter().any(|&x| x != 0) {
            let v = complexify_vector(&code.real_generator.mul_int_vec(&d));
            let x = ComplexMatrix::from_fn(code.m, code.t, |i, j| v[j * code.m + i]);
            best = best.min(determinant(&x).norm());
        }
        let mut i = len;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if d[i] < max {
                d[i] += 2;
                for x in &mut d[i + 1..] {
                    *x = -max;
                }
                break;
            }
        }
    }
}

/// Determinant of a small square complex matrix by Gaussian elimination.
pub fn determinant(a: &ComplexMatrix) -> Complex64 {
    let n = a.rows();
    assert_eq!(n, a.cols(), "square matrix");
    let mut w: Vec<Complex64> = a.as_slice().to_vec();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| w[i * n + k].norm().total_cmp(&w[j * n + k].norm())).expect("nonempty");
        if w[p * n + k].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != k {
            for c in 0..n {
                w.swap(k * n + c, p * n + c);
            }
            det = -det;
        }
        let pivot = w[k * n + k];
        det *= pivot;
        for r in k + 1..n {
            let f = w[r * n + k] / pivot;
            for c in k..n {
                let v = w[k * n + c];
                w[r * n + c] -= f * v;
            }
        }
    }
    det
}
