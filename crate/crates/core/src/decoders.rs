//! The three receivers under comparison.
//!
//! * ML: exhaustive minimum-distance search over the finite codebook.
//! * NLD: exact closest point of the infinite received lattice coset, with
//!   any decision outside the constellation counted as an error.
//! * LLL-aided: Babai nearest-plane on the LLL-reduced received lattice,
//!   followed by the same region rule.
//!
//! Codeword coefficients are odd integers, so the constellation sits on the
//! coset `1 + 2Z^n` of the code lattice. The lattice decoders search that
//! coset directly: with `B` the received generator, `c = 2u + 1` and the
//! target is shifted to `(y - B·1) / 2` before solving for `u ∈ Z^n`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::lattice::{Enumerator, DEFAULT_NODE_BUDGET, TIE_TOL};
use crate::linalg::{qr_decompose_real, realify_vector, RealMatrix};
use crate::stcodes::{in_region, SpaceTimeCode, MAX_CODEBOOK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecoderId {
    Ml,
    Nld,
    LllAided,
}

impl DecoderId {
    pub const ALL: [DecoderId; 3] = [DecoderId::Ml, DecoderId::Nld, DecoderId::LllAided];

    pub fn as_str(self) -> &'static str {
        match self {
            DecoderId::Ml => "ml",
            DecoderId::Nld => "nld",
            DecoderId::LllAided => "lll",
        }
    }
}

impl fmt::Display for DecoderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecoderId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml" => Ok(DecoderId::Ml),
            "nld" => Ok(DecoderId::Nld),
            "lll" => Ok(DecoderId::LllAided),
            other => Err(Error::InvalidParameter(format!(
                "unknown decoder `{other}` (valid decoders: ml, nld, lll)"
            ))),
        }
    }
}

/// A decoder decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Codeword(Vec<i64>),
    /// The lattice point found lies outside the constellation; the raw
    /// coefficients are kept for inspection.
    OutOfRegion(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub decision: Decision,
    pub is_error: bool,
    pub decoder: DecoderId,
}

impl DecodeOutcome {
    fn from_coeffs(code: &SpaceTimeCode, coeffs: Vec<i64>, sent: &[i64], decoder: DecoderId) -> Self {
        if in_region(code, &coeffs) {
            let is_error = coeffs != sent;
            Self { decision: Decision::Codeword(coeffs), is_error, decoder }
        } else {
            Self { decision: Decision::OutOfRegion(coeffs), is_error: true, decoder }
        }
    }

    pub fn is_out_of_region(&self) -> bool {
        matches!(self.decision, Decision::OutOfRegion(_))
    }

    pub fn coeffs(&self) -> &[i64] {
        match &self.decision {
            Decision::Codeword(c) | Decision::OutOfRegion(c) => c,
        }
    }
}

/// Everything about one channel realization the decoders need, computed
/// once and shared by all decoders of a paired trial.
pub struct DecodingContext<'a> {
    code: &'a SpaceTimeCode,
    /// Realified `H_T · power_scale · L`.
    generator: RealMatrix,
    /// `generator · 1`, the image of the all-ones coefficient vector.
    offset: Vec<f64>,
    enumerator: std::cell::OnceCell<Result<Enumerator>>,
    budget: u64,
}

impl<'a> DecodingContext<'a> {
    pub fn new(code: &'a SpaceTimeCode, chan: &ChannelRealization) -> Result<Self> {
        Self::with_budget(code, chan, DEFAULT_NODE_BUDGET)
    }

    pub fn with_budget(code: &'a SpaceTimeCode, chan: &ChannelRealization, budget: u64) -> Result<Self> {
        if code.m() != chan.m() || code.t() != chan.t() {
            return Err(Error::Dimension(format!(
                "code is {}x{} but channel has M = {}, T = {}",
                code.m(),
                code.t(),
                chan.m(),
                chan.t()
            )));
        }
        let generator = chan.lifted().to_real().mul(code.real_generator())?.scale(code.power_scale());
        let offset = generator.mul_int_vec(&vec![1; code.coeff_len()]);
        Ok(Self { code, generator, offset, enumerator: std::cell::OnceCell::new(), budget })
    }

    pub fn generator(&self) -> &RealMatrix {
        &self.generator
    }

    fn enumerator(&self) -> Result<&Enumerator> {
        let e = self.enumerator.get_or_init(|| {
            if self.code.coeff_len() > 24 {
                return Err(Error::InvalidParameter("lattice rank above 24 is outside enumeration range".into()));
            }
            let basis = crate::lattice::LatticeBasis::real(self.generator.clone()).map_err(|_| Error::Singular)?;
            Enumerator::with_budget(&basis, self.budget)
        });
        e.as_ref().map_err(Clone::clone)
    }

    fn coset_target(&self, y: &[Complex64]) -> Result<Vec<f64>> {
        let y = realify_vector(y);
        if y.len() != self.generator.rows() {
            return Err(Error::Dimension(format!(
                "received vector of real length {} against {} rows",
                y.len(),
                self.generator.rows()
            )));
        }
        Ok(y.iter().zip(&self.offset).map(|(a, b)| (a - b) / 2.0).collect())
    }

    pub fn decode(&self, id: DecoderId, y: &[Complex64], sent: &[i64]) -> Result<DecodeOutcome> {
        match id {
            DecoderId::Ml => self.ml(y, sent),
            DecoderId::Nld => self.nld(y, sent),
            DecoderId::LllAided => self.lll_aided(y, sent),
        }
    }

    /// Exhaustive ML with lexicographic tie-breaking.
    pub fn ml(&self, y: &[Complex64], sent: &[i64]) -> Result<DecodeOutcome> {
        if self.code.codebook_size() > MAX_CODEBOOK as f64 {
            return Err(Error::Budget { budget: MAX_CODEBOOK });
        }
        let y = realify_vector(y);
        if y.len() != self.generator.rows() {
            return Err(Error::Dimension("received vector length".into()));
        }
        let n = self.code.coeff_len();
        let max = self.code.coeff_max();
        // Reversing the columns makes the triangular factor's bottom rows
        // depend only on the leading coefficients, so the lexicographic walk
        // can prune on partial distances.
        let reversed: Vec<Vec<f64>> = (0..n).rev().map(|c| self.generator.column(c)).collect();
        let best = match qr_decompose_real(&RealMatrix::from_columns(&reversed)?) {
            Ok((q, r)) => {
                let qty = q.transpose().mul_vec(&y)?;
                let mut search = BoundedMlSearch {
                    r: &r,
                    qty: &qty,
                    max,
                    current: vec![0; n],
                    best: Vec::new(),
                    best_dist: f64::INFINITY,
                };
                // Any admissible point bounds the search; slack keeps that
                // point and its ties reachable.
                let seed = search.rounded_distance();
                search.best_dist = seed * (1.0 + 4.0 * TIE_TOL) + f64::MIN_POSITIVE;
                search.walk(0, 0.0);
                search.best
            }
            Err(Error::RankDeficient { .. }) => {
                let columns = self.generator.columns();
                let mut search = MlSearch { columns: &columns, max, current: vec![0; n], best: Vec::new(), best_dist: f64::INFINITY };
                search.walk(0, &y);
                search.best
            }
            Err(e) => return Err(e),
        };
        Ok(DecodeOutcome::from_coeffs(self.code, best, sent, DecoderId::Ml))
    }

    /// Naive lattice decoding: exact CVP on the infinite coset, then the
    /// region rule.
    pub fn nld(&self, y: &[Complex64], sent: &[i64]) -> Result<DecodeOutcome> {
        let target = self.coset_target(y)?;
        let (point, _) = self.enumerator()?.closest(&target)?;
        let coeffs = point.coeffs.iter().map(|u| 2 * u + 1).collect();
        Ok(DecodeOutcome::from_coeffs(self.code, coeffs, sent, DecoderId::Nld))
    }

    /// LLL-reduce, Babai nearest-plane, map back through the unimodular
    /// transform, then the region rule.
    pub fn lll_aided(&self, y: &[Complex64], sent: &[i64]) -> Result<DecodeOutcome> {
        let target = self.coset_target(y)?;
        let point = self.enumerator()?.babai(&target)?;
        let coeffs = point.coeffs.iter().map(|u| 2 * u + 1).collect();
        Ok(DecodeOutcome::from_coeffs(self.code, coeffs, sent, DecoderId::LllAided))
    }

    /// Minimum distance of the decoding coset's lattice, `2 · d(B)`.
    pub fn coset_minimum_distance(&self) -> Result<f64> {
        Ok(2.0 * self.enumerator()?.minimum_distance()?)
    }
}

/// Branch-and-bound ML over `‖Qᵀy - R c_rev‖²`, where `c_rev` is the
/// coefficient vector reversed. A branch is cut only when its partial
/// distance exceeds the incumbent by more than the tie tolerance, and
/// leaves within tolerance keep the earlier (lexicographically smaller)
/// incumbent.
struct BoundedMlSearch<'a> {
    r: &'a RealMatrix,
    qty: &'a [f64],
    max: i64,
    current: Vec<i64>,
    best: Vec<i64>,
    best_dist: f64,
}

impl BoundedMlSearch<'_> {
    /// Distance of the successive-rounding point, each coefficient clamped
    /// to the constellation.
    fn rounded_distance(&mut self) -> f64 {
        let n = self.current.len();
        let mut dist = 0.0;
        for level in 0..n {
            let (fixed, diag) = self.row_terms(level);
            let odd = 2.0 * ((fixed / diag - 1.0) / 2.0).round() + 1.0;
            let c = (odd as i64).clamp(-self.max, self.max);
            self.current[level] = c;
            let e = fixed - diag * c as f64;
            dist += e * e;
        }
        dist
    }

    /// Target and diagonal of the row fixed by coefficient `level`, with
    /// coefficients `0..level` already chosen.
    fn row_terms(&self, level: usize) -> (f64, f64) {
        // Coefficient `level` is reversed index `row`; row `row` of R touches
        // reversed indices row..n, i.e. coefficients 0..=level.
        let n = self.current.len();
        let row = n - 1 - level;
        let mut fixed = self.qty[row];
        for k in 0..level {
            fixed -= self.r[(row, n - 1 - k)] * self.current[k] as f64;
        }
        (fixed, self.r[(row, row)])
    }

    fn walk(&mut self, level: usize, partial: f64) {
        let n = self.current.len();
        if level == n {
            if self.best.is_empty() || partial < self.best_dist - TIE_TOL * self.best_dist {
                self.best_dist = partial;
                self.best.clone_from(&self.current);
            }
            return;
        }
        let (fixed, diag) = self.row_terms(level);
        let mut c = -self.max;
        while c <= self.max {
            let e = fixed - diag * c as f64;
            let d = partial + e * e;
            if d <= self.best_dist + TIE_TOL * self.best_dist {
                self.current[level] = c;
                self.walk(level + 1, d);
            }
            c += 2;
        }
    }
}

struct MlSearch<'a> {
    columns: &'a [Vec<f64>],
    max: i64,
    current: Vec<i64>,
    best: Vec<i64>,
    best_dist: f64,
}

impl MlSearch<'_> {
    /// Depth-first walk in lexicographic order; `residual` is `y` minus the
    /// contribution of the coordinates fixed so far.
    fn walk(&mut self, level: usize, residual: &[f64]) {
        if level == self.columns.len() {
            let d: f64 = residual.iter().map(|x| x * x).sum();
            if d < self.best_dist {
                self.best_dist = d;
                self.best.clone_from(&self.current);
            }
            return;
        }
        let col = &self.columns[level];
        let mut next = vec![0.0; residual.len()];
        let mut c = -self.max;
        while c <= self.max {
            let cf = c as f64;
            for ((n, r), b) in next.iter_mut().zip(residual).zip(col) {
                *n = r - cf * b;
            }
            self.current[level] = c;
            self.walk(level + 1, &next);
            c += 2;
        }
    }
}

pub fn ml_decode(code: &SpaceTimeCode, chan: &ChannelRealization, y: &[Complex64], sent: &[i64]) -> Result<DecodeOutcome> {
    DecodingContext::new(code, chan)?.ml(y, sent)
}

pub fn naive_lattice_decode(
    code: &SpaceTimeCode,
    chan: &ChannelRealization,
    y: &[Complex64],
    sent: &[i64],
) -> Result<DecodeOutcome> {
    DecodingContext::new(code, chan)?.nld(y, sent)
}

pub fn lll_aided_decode(
    code: &SpaceTimeCode,
    chan: &ChannelRealization,
    y: &[Complex64],
    sent: &[i64],
) -> Result<DecodeOutcome> {
    DecodingContext::new(code, chan)?.lll_aided(y, sent)
}
