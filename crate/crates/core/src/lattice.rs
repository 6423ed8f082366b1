//! Lattice bases, LLL reduction, and exact Schnorr–Euchner enumeration for
//! the shortest and closest vector problems.
//!
//! Complex lattices are always realified before reduction or enumeration:
//! a complex column `c` contributes the two real columns `c` and `i c`, with
//! coordinates interleaved as `(re, im)`. Coefficient vectors of complex
//! lattices are therefore Gaussian integers written as interleaved pairs.

use crate::error::{Error, Result};
use crate::linalg::{qr_decompose, qr_decompose_real, ComplexMatrix, RealMatrix};

/// Default cap on visited enumeration nodes.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// Default Lovász parameter.
pub const DEFAULT_DELTA: f64 = 0.75;

/// Cap on the number of points `count_points_in_ball` will report.
pub const MAX_BALL_COUNT: u64 = 10_000_000;

/// Relative slack used when comparing squared distances for ties and for
/// points on the boundary of a ball.
pub(crate) const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Real(RealMatrix),
    Complex(ComplexMatrix),
}

/// A full-rank lattice generator; columns are the basis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeBasis {
    generator: Generator,
}

impl LatticeBasis {
    pub fn real(generator: RealMatrix) -> Result<Self> {
        qr_decompose_real(&generator)?;
        Ok(Self { generator: Generator::Real(generator) })
    }

    pub fn complex(generator: ComplexMatrix) -> Result<Self> {
        qr_decompose(&generator)?;
        Ok(Self { generator: Generator::Complex(generator) })
    }

    /// `Z^n`.
    pub fn integer(n: usize) -> Self {
        Self { generator: Generator::Real(RealMatrix::identity(n)) }
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn is_real(&self) -> bool {
        matches!(self.generator, Generator::Real(_))
    }

    /// Number of basis vectors (complex rank for complex lattices).
    pub fn rank(&self) -> usize {
        match &self.generator {
            Generator::Real(m) => m.cols(),
            Generator::Complex(m) => m.cols(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.generator {
            Generator::Real(m) => m.rows(),
            Generator::Complex(m) => m.rows(),
        }
    }

    /// The real generator, realifying complex bases.
    pub fn real_generator(&self) -> RealMatrix {
        match &self.generator {
            Generator::Real(m) => m.clone(),
            Generator::Complex(m) => m.to_real(),
        }
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        match &self.generator {
            Generator::Real(m) => Self::real(m.scale(s)),
            Generator::Complex(m) => Self::complex(m.scale(s.into())),
        }
    }
}

/// A lattice vector with its integer coefficients in the (realified) basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub coeffs: Vec<i64>,
    pub embedding: Vec<f64>,
}

impl LatticePoint {
    pub fn norm(&self) -> f64 {
        self.embedding.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Square integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        Self { n, data }
    }

    fn from_columns(cols: &[Vec<i64>]) -> Self {
        let n = cols.len();
        let mut data = vec![0; n * n];
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                data[r * n + c] = *v;
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.n + c]
    }

    pub fn mul_vec(&self, z: &[i64]) -> Vec<i64> {
        assert_eq!(z.len(), self.n);
        (0..self.n)
            .map(|r| self.data[r * self.n..(r + 1) * self.n].iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Exact determinant by fraction-free Gaussian elimination.
    pub fn determinant(&self) -> i128 {
        let n = self.n;
        let mut a: Vec<i128> = self.data.iter().map(|&v| v as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if a[k * n + k] == 0 {
                match (k + 1..n).find(|&r| a[r * n + k] != 0) {
                    Some(r) => {
                        for c in 0..n {
                            a.swap(k * n + c, r * n + c);
                        }
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
                }
            }
            prev = a[k * n + k];
        }
        sign * a[n * n - 1]
    }
}

/// Output of [`lll_reduce`]: `reduced = basis * transform`.
#[derive(Debug, Clone)]
pub struct LllReduction {
    pub reduced: LatticeBasis,
    pub transform: IntMatrix,
}

/// Realification of a complex basis; real bases are returned unchanged.
pub fn realify(basis: &LatticeBasis) -> LatticeBasis {
    LatticeBasis { generator: Generator::Real(basis.real_generator()) }
}

/// `det(L* L)^{1/2}` computed from the QR diagonal.
pub fn volume(basis: &LatticeBasis) -> f64 {
    match &basis.generator {
        Generator::Real(m) => {
            let (_, r) = qr_decompose_real(m).expect("validated basis");
            (0..r.cols()).map(|i| r[(i, i)]).product()
        }
        Generator::Complex(m) => {
            let (_, r) = qr_decompose(m).expect("validated basis");
            (0..r.cols()).map(|i| r[(i, i)].re).product()
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram–Schmidt coefficients `mu` (strictly lower part) and squared norms of
/// the orthogonalized vectors.
fn gram_schmidt(b: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = b.len();
    let mut mu = vec![vec![0.0; n]; n];
    let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let mut v = b[i].clone();
        for j in 0..i {
            mu[i][j] = dot(&b[i], &bstar[j]) / norms[j];
            for (vk, bk) in v.iter_mut().zip(&bstar[j]) {
                *vk -= mu[i][j] * bk;
            }
        }
        norms[i] = dot(&v, &v);
        bstar.push(v);
    }
    (mu, norms)
}

/// LLL reduction with Lovász parameter `delta`.
///
/// Complex bases are realified first. The returned transform is unimodular
/// and maps the (realified) input basis onto the reduced one.
pub fn lll_reduce(basis: &LatticeBasis, delta: f64) -> Result<LllReduction> {
    if !(delta > 0.25 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("LLL delta {delta} outside (0.25, 1)")));
    }
    let gen = basis.real_generator();
    let n = gen.cols();
    let mut b = gen.columns();
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    let (mut mu, mut norms) = gram_schmidt(&b);

    let mut k = 1;
    while k < n {
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if mu[k][j].abs() > 0.5 {
                let qi = q as i64;
                let (bj, uj) = (b[j].clone(), u[j].clone());
                for (x, y) in b[k].iter_mut().zip(&bj) {
                    *x -= q * y;
                }
                for (x, y) in u[k].iter_mut().zip(&uj) {
                    *x -= qi * y;
                }
                for l in 0..j {
                    mu[k][l] -= q * mu[j][l];
                }
                mu[k][j] -= q;
            }
        }
        let m = mu[k][k - 1];
        if norms[k] < (delta - m * m) * norms[k - 1] {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            for j in 0..k - 1 {
                let t = mu[k][j];
                mu[k][j] = mu[k - 1][j];
                mu[k - 1][j] = t;
            }
            let big = norms[k] + m * m * norms[k - 1];
            if big <= 0.0 {
                return Err(Error::Singular);
            }
            mu[k][k - 1] = m * norms[k - 1] / big;
            norms[k] = norms[k - 1] * norms[k] / big;
            norms[k - 1] = big;
            for i in k + 1..n {
                let t = mu[i][k];
                mu[i][k] = mu[i][k - 1] - m * t;
                mu[i][k - 1] = t + mu[k][k - 1] * mu[i][k];
            }
            k = (k - 1).max(1);
        } else {
            k += 1;
        }
    }

    Ok(LllReduction {
        reduced: LatticeBasis::real(RealMatrix::from_columns(&b)?)?,
        transform: IntMatrix::from_columns(&u),
    })
}

/// True when `basis` is size-reduced and satisfies the Lovász condition for
/// `delta`, up to a small floating-point slack.
pub fn is_lll_reduced(basis: &LatticeBasis, delta: f64) -> bool {
    let b = basis.real_generator().columns();
    let (mu, norms) = gram_schmidt(&b);
    let n = b.len();
    for i in 1..n {
        if (0..i).any(|j| mu[i][j].abs() > 0.5 + 1e-9) {
            return false;
        }
        if norms[i] < (delta - mu[i][i - 1].powi(2)) * norms[i - 1] * (1.0 - 1e-9) {
            return false;
        }
    }
    true
}

/// Precomputed enumeration data: an LLL-reduced basis in triangular form.
///
/// Building one of these is the expensive part of a CVP/SVP query; decoders
/// that solve several targets against the same lattice can reuse it.
#[derive(Debug, Clone)]
pub struct Enumerator {
    /// Original real generator (ambient x rank).
    generator: RealMatrix,
    /// Unimodular map from reduced coordinates to original coefficients.
    transform: IntMatrix,
    /// Orthonormal columns of the reduced basis.
    q: RealMatrix,
    /// Upper triangular factor, stored row-major as nested vectors.
    r: Vec<Vec<f64>>,
    budget: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Closest,
    Shortest,
}

struct Search<'a> {
    r: &'a [Vec<f64>],
    target: Vec<f64>,
    transform: &'a IntMatrix,
    mode: Mode,
    x: Vec<i64>,
    best_dist: f64,
    best: Option<(Vec<i64>, Vec<i64>)>,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    fn accept(&mut self, dist: f64) {
        if self.mode == Mode::Shortest && self.x.iter().all(|&v| v == 0) {
            return;
        }
        let slack = TIE_TOL * self.best_dist.max(f64::MIN_POSITIVE);
        if dist < self.best_dist - slack {
            let coeffs = self.transform.mul_vec(&self.x);
            self.best_dist = dist;
            self.best = Some((self.x.clone(), coeffs));
        } else if dist <= self.best_dist + slack {
            let coeffs = self.transform.mul_vec(&self.x);
            let better = match &self.best {
                Some((_, current)) => coeffs < *current,
                None => true,
            };
            if better {
                self.best_dist = self.best_dist.min(dist);
                self.best = Some((self.x.clone(), coeffs));
            }
        }
    }

    fn descend(&mut self, level: usize, partial: f64) -> Result<()> {
        let n = self.r.len();
        let row = &self.r[level];
        let mut c = self.target[level];
        for j in level + 1..n {
            c -= row[j] * self.x[j] as f64;
        }
        let diag = row[level];
        c /= diag;
        let start = c.round();
        let step = if c >= start { 1.0 } else { -1.0 };
        let mut offset = 0.0f64;
        loop {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::Budget { budget: self.budget });
            }
            let xk = start + offset;
            let d = partial + (diag * (xk - c)).powi(2);
            let limit = self.best_dist + TIE_TOL * self.best_dist.max(f64::MIN_POSITIVE);
            if d > limit {
                break;
            }
            self.x[level] = xk as i64;
            if level == 0 {
                self.accept(d);
            } else {
                self.descend(level - 1, d)?;
            }
            offset = if offset * step > 0.0 { -offset } else { -offset + step };
        }
        self.x[level] = 0;
        Ok(())
    }
}

impl Enumerator {
    pub fn new(basis: &LatticeBasis) -> Result<Self> {
        Self::with_budget(basis, DEFAULT_NODE_BUDGET)
    }

    pub fn with_budget(basis: &LatticeBasis, budget: u64) -> Result<Self> {
        let generator = basis.real_generator();
        let lll = lll_reduce(basis, DEFAULT_DELTA)?;
        let (q, r) = qr_decompose_real(&lll.reduced.real_generator())?;
        let n = r.cols();
        let r = (0..n).map(|i| (0..n).map(|j| r[(i, j)]).collect()).collect();
        Ok(Self { generator, transform: lll.transform, q, r, budget })
    }

    pub fn rank(&self) -> usize {
        self.r.len()
    }

    fn project(&self, target: &[f64]) -> Result<Vec<f64>> {
        if target.len() != self.generator.rows() {
            return Err(Error::Dimension(format!(
                "target of length {} in ambient dimension {}",
                target.len(),
                self.generator.rows()
            )));
        }
        Ok(self.q.transpose().mul_vec(target).expect("shape checked"))
    }

    /// Babai point in reduced coordinates for a projected target.
    fn babai_reduced(&self, y: &[f64]) -> Vec<i64> {
        let n = self.rank();
        let mut x = vec![0i64; n];
        for k in (0..n).rev() {
            let mut c = y[k];
            for j in k + 1..n {
                c -= self.r[k][j] * x[j] as f64;
            }
            x[k] = (c / self.r[k][k]).round() as i64;
        }
        x
    }

    fn triangular_dist2(&self, y: &[f64], x: &[i64]) -> f64 {
        let n = self.rank();
        (0..n)
            .map(|i| {
                let v: f64 = (i..n).map(|j| self.r[i][j] * x[j] as f64).sum();
                (y[i] - v).powi(2)
            })
            .sum()
    }

    fn point(&self, coeffs: Vec<i64>) -> LatticePoint {
        let embedding = self.generator.mul_int_vec(&coeffs);
        LatticePoint { coeffs, embedding }
    }

    /// Exact closest lattice point; ties go to the lexicographically smallest
    /// coefficient vector.
    pub fn closest(&self, target: &[f64]) -> Result<(LatticePoint, f64)> {
        let y = self.project(target)?;
        let babai = self.babai_reduced(&y);
        let radius = self.triangular_dist2(&y, &babai);
        let mut search = Search {
            r: &self.r,
            target: y,
            transform: &self.transform,
            mode: Mode::Closest,
            x: vec![0; self.rank()],
            best_dist: radius,
            best: Some((babai.clone(), self.transform.mul_vec(&babai))),
            nodes: 0,
            budget: self.budget,
        };
        search.descend(self.rank() - 1, 0.0)?;
        let (_, coeffs) = search.best.expect("Babai point seeds the search");
        let point = self.point(coeffs);
        let dist = point.embedding.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        Ok((point, dist))
    }

    /// Babai nearest-plane point on the LLL-reduced basis, returned in the
    /// coefficients of the original basis.
    pub fn babai(&self, target: &[f64]) -> Result<LatticePoint> {
        let y = self.project(target)?;
        let x = self.babai_reduced(&y);
        Ok(self.point(self.transform.mul_vec(&x)))
    }

    /// A shortest nonzero lattice vector.
    pub fn shortest(&self) -> Result<(LatticePoint, f64)> {
        let n = self.rank();
        let radius = (0..n)
            .map(|j| (0..=j).map(|i| self.r[i][j].powi(2)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let mut search = Search {
            r: &self.r,
            target: vec![0.0; n],
            transform: &self.transform,
            mode: Mode::Shortest,
            x: vec![0; n],
            best_dist: radius,
            best: None,
            nodes: 0,
            budget: self.budget,
        };
        search.descend(n - 1, 0.0)?;
        let (_, coeffs) = search.best.expect("a basis vector lies within the initial radius");
        let point = self.point(coeffs);
        let dist = point.norm();
        Ok((point, dist))
    }

    /// Minimum distance only, skipping the embedding.
    pub fn minimum_distance(&self) -> Result<f64> {
        self.shortest().map(|(_, d)| d)
    }

    /// Number of lattice points of norm at most `radius`, origin included.
    pub fn count_in_ball(&self, radius: f64) -> Result<u64> {
        let n = self.rank();
        let limit = radius * radius * (1.0 + TIE_TOL);
        let mut x = vec![0i64; n];
        let mut count = 0u64;
        let mut nodes = 0u64;
        self.count_level(n - 1, 0.0, limit, &mut x, &mut count, &mut nodes)?;
        Ok(count)
    }

    fn count_level(
        &self,
        level: usize,
        partial: f64,
        limit: f64,
        x: &mut [i64],
        count: &mut u64,
        nodes: &mut u64,
    ) -> Result<()> {
        let n = self.rank();
        let mut c = 0.0;
        for j in level + 1..n {
            c -= self.r[level][j] * x[j] as f64;
        }
        let diag = self.r[level][level];
        c /= diag;
        let half_width = ((limit - partial).max(0.0)).sqrt() / diag;
        let lo = (c - half_width).ceil() as i64;
        let hi = (c + half_width).floor() as i64;
        for xk in lo..=hi {
            *nodes += 1;
            if *nodes > self.budget {
                return Err(Error::Budget { budget: self.budget });
            }
            let d = partial + (diag * (xk as f64 - c)).powi(2);
            if d > limit {
                continue;
            }
            x[level] = xk;
            if level == 0 {
                *count += 1;
                if *count > MAX_BALL_COUNT {
                    return Err(Error::Budget { budget: MAX_BALL_COUNT });
                }
            } else {
                self.count_level(level - 1, d, limit, x, count, nodes)?;
            }
        }
        x[level] = 0;
        Ok(())
    }
}

/// Exact shortest nonzero vector and the lattice minimum distance.
pub fn shortest_vector(basis: &LatticeBasis) -> Result<(LatticePoint, f64)> {
    Enumerator::new(basis)?.shortest()
}

/// Exact closest lattice point to `target` (real ambient coordinates).
pub fn closest_vector(basis: &LatticeBasis, target: &[f64]) -> Result<(LatticePoint, f64)> {
    Enumerator::new(basis)?.closest(target)
}

/// Babai nearest-plane point computed directly in the given basis.
///
/// Only meaningful as an approximation when `basis` is LLL-reduced.
pub fn babai_nearest_plane(basis: &LatticeBasis, target: &[f64]) -> Result<LatticePoint> {
    let gen = basis.real_generator();
    if target.len() != gen.rows() {
        return Err(Error::Dimension("target length".into()));
    }
    let (q, r) = qr_decompose_real(&gen)?;
    let y = q.transpose().mul_vec(target)?;
    let n = gen.cols();
    let mut x = vec![0i64; n];
    for k in (0..n).rev() {
        let mut c = y[k];
        for j in k + 1..n {
            c -= r[(k, j)] * x[j] as f64;
        }
        x[k] = (c / r[(k, k)]).round() as i64;
    }
    let embedding = gen.mul_int_vec(&x);
    Ok(LatticePoint { coeffs: x, embedding })
}

/// Exact count of lattice points with norm at most `radius`.
pub fn count_points_in_ball(basis: &LatticeBasis, radius: f64) -> Result<u64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {radius}")));
    }
    Enumerator::new(basis)?.count_in_ball(radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sample_gaussian_matrix, stream};
    use num_complex::Complex64;
    use rand::Rng;

    fn real_basis(rows: &[Vec<f64>]) -> LatticeBasis {
        LatticeBasis::real(RealMatrix::from_rows(rows).unwrap()).unwrap()
    }

    fn gaussian_real_basis(n: usize, rng: &mut impl Rng) -> LatticeBasis {
        let m = RealMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        LatticeBasis::real(m).unwrap()
    }

    #[test]
    fn realify_scalar_and_rotation() {
        let one = LatticeBasis::complex(ComplexMatrix::identity(1)).unwrap();
        assert_eq!(realify(&one).real_generator(), RealMatrix::identity(2));

        let i = LatticeBasis::complex(ComplexMatrix::diag(&[Complex64::new(0.0, 1.0)])).unwrap();
        let r = realify(&i);
        assert_eq!(r.real_generator(), RealMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap());
        assert!((volume(&r) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn realified_volume_is_squared_determinant() {
        let mut rng = stream(21, 0);
        for _ in 0..20 {
            let g = sample_gaussian_matrix(2, 2, &mut rng);
            let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
            let basis = LatticeBasis::complex(g).unwrap();
            assert!((volume(&basis) - det.norm()).abs() <= 1e-10 * det.norm());
            let real = realify(&basis);
            assert!((volume(&real) - det.norm_sqr()).abs() <= 1e-10 * det.norm_sqr());
        }
    }

    #[test]
    fn volume_simple_cases() {
        assert_eq!(volume(&LatticeBasis::integer(5)), 1.0);
        assert!((volume(&real_basis(&[vec![2.0, 0.0], vec![0.0, 3.0]])) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_basis_rejected() {
        let m = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(LatticeBasis::real(m).is_err());
    }

    #[test]
    fn lll_identity_is_fixed() {
        let red = lll_reduce(&LatticeBasis::integer(4), DEFAULT_DELTA).unwrap();
        assert_eq!(red.reduced.real_generator(), RealMatrix::identity(4));
        assert_eq!(red.transform, IntMatrix::identity(4));
    }

    #[test]
    fn lll_skewed_basis_meets_guarantee() {
        let b = real_basis(&[vec![1.0, 1000.0], vec![0.0, 1.0]]);
        let red = lll_reduce(&b, DEFAULT_DELTA).unwrap();
        let first = red.reduced.real_generator().column(0);
        let norm = dot(&first, &first).sqrt();
        let bound = 2f64.powf(0.25) * volume(&b).sqrt();
        assert!(norm <= bound + 1e-12);
        assert!(is_lll_reduced(&red.reduced, DEFAULT_DELTA));
    }

    #[test]
    fn lll_rejects_bad_delta() {
        assert!(lll_reduce(&LatticeBasis::integer(2), 0.2).is_err());
        assert!(lll_reduce(&LatticeBasis::integer(2), 1.0).is_err());
    }

    #[test]
    fn lll_random_six_dimensional() {
        let mut rng = stream(22, 0);
        for _ in 0..50 {
            let b = gaussian_real_basis(6, &mut rng);
            let red = lll_reduce(&b, DEFAULT_DELTA).unwrap();
            assert!(is_lll_reduced(&red.reduced, DEFAULT_DELTA));
            assert_eq!(red.transform.determinant().abs(), 1);
            let v0 = volume(&b);
            assert!((volume(&red.reduced) - v0).abs() <= 1e-9 * v0);
            // reduced = basis * transform
            let g = b.real_generator();
            for c in 0..6 {
                let col: Vec<i64> = (0..6).map(|r| red.transform.get(r, c)).collect();
                let expect = g.mul_int_vec(&col);
                let got = red.reduced.real_generator().column(c);
                for (a, e) in got.iter().zip(&expect) {
                    assert!((a - e).abs() < 1e-9 * (1.0 + e.abs()));
                }
            }
        }
    }

    #[test]
    fn lll_accepts_complex_input() {
        let mut rng = stream(23, 0);
        let g = sample_gaussian_matrix(3, 2, &mut rng);
        let b = LatticeBasis::complex(g).unwrap();
        let red = lll_reduce(&b, 0.99).unwrap();
        assert_eq!(red.reduced.rank(), 4);
        assert_eq!(red.reduced.ambient_dim(), 6);
        assert!(is_lll_reduced(&red.reduced, 0.99));
    }

    #[test]
    fn integer_lattice_minimum_and_closest() {
        let z2 = LatticeBasis::integer(2);
        let (_, d) = shortest_vector(&z2).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        let (p, d) = closest_vector(&z2, &[0.4, -0.3]).unwrap();
        assert_eq!(p.coeffs, vec![0, 0]);
        assert!((d - 0.5).abs() < 1e-15);
        let (p, d) = closest_vector(&z2, &[3.0, -2.0]).unwrap();
        assert_eq!(p.coeffs, vec![3, -2]);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn hexagonal_minimum() {
        let hex = real_basis(&[vec![1.0, 0.5], vec![0.0, 3f64.sqrt() / 2.0]]);
        let (p, d) = shortest_vector(&hex).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        // Brute force over [-3, 3]^2.
        let g = hex.real_generator();
        let mut best = f64::INFINITY;
        for a in -3i64..=3 {
            for b in -3i64..=3 {
                if (a, b) != (0, 0) {
                    let v = g.mul_int_vec(&[a, b]);
                    best = best.min(dot(&v, &v).sqrt());
                }
            }
        }
        assert!((d - best).abs() < 1e-12);
        assert!((p.norm() - d).abs() < 1e-15);
    }

    #[test]
    fn cvp_ties_break_lexicographically() {
        let z2 = LatticeBasis::integer(2);
        let (p, _) = closest_vector(&z2, &[0.5, 0.5]).unwrap();
        assert_eq!(p.coeffs, vec![0, 0]);
        let (p, _) = closest_vector(&z2, &[-0.5, 0.25]).unwrap();
        assert_eq!(p.coeffs, vec![-1, 0]);
    }

    #[test]
    fn babai_scalar_and_rounding() {
        let z2 = LatticeBasis::integer(2);
        assert_eq!(babai_nearest_plane(&z2, &[0.4, -0.3]).unwrap().coeffs, vec![0, 0]);
        let two = real_basis(&[vec![2.0]]);
        let p = babai_nearest_plane(&two, &[3.2]).unwrap();
        assert_eq!(p.coeffs, vec![2]);
        assert_eq!(p.embedding, vec![4.0]);
    }

    #[test]
    fn ball_counts_on_z2() {
        let z2 = LatticeBasis::integer(2);
        assert_eq!(count_points_in_ball(&z2, 1.0).unwrap(), 5);
        assert_eq!(count_points_in_ball(&z2, 1.5).unwrap(), 9);
        // Exhaustive count for a few more radii.
        for r in [0.5, 2.0, 2.3, 3.7, 5.0] {
            let m = r as i64 + 1;
            let mut brute = 0;
            for a in -m..=m {
                for b in -m..=m {
                    if ((a * a + b * b) as f64) <= r * r * (1.0 + 1e-12) {
                        brute += 1;
                    }
                }
            }
            assert_eq!(count_points_in_ball(&z2, r).unwrap(), brute, "radius {r}");
        }
    }

    #[test]
    fn ball_count_approaches_area() {
        let z2 = LatticeBasis::integer(2);
        for r in [30.0, 45.5, 60.0] {
            let n = count_points_in_ball(&z2, r).unwrap() as f64;
            let ratio = n / (std::f64::consts::PI * r * r);
            assert!((ratio - 1.0).abs() <= 0.05, "ratio {ratio}");
        }
    }

    #[test]
    fn budget_errors_are_explicit() {
        let e = Enumerator::with_budget(&LatticeBasis::integer(4), 10).unwrap();
        assert_eq!(e.count_in_ball(5.0), Err(Error::Budget { budget: 10 }));
        assert_eq!(count_points_in_ball(&LatticeBasis::integer(2), 1e5), Err(Error::Budget {
            budget: MAX_BALL_COUNT
        }));
    }

    #[test]
    fn svp_equals_nonzero_cvp_at_origin() {
        let mut rng = stream(24, 0);
        for _ in 0..50 {
            let b = gaussian_real_basis(4, &mut rng);
            let e = Enumerator::new(&b).unwrap();
            let (_, d) = e.shortest().unwrap();
            // Closest point to the origin excluding zero equals the closest
            // point to any short lattice vector's negation shifted by it.
            let count_inside = e.count_in_ball(d * (1.0 - 1e-6)).unwrap();
            assert_eq!(count_inside, 1, "only the origin is strictly shorter");
            let (p, dz) = e.closest(&vec![0.0; 4]).unwrap();
            assert_eq!(p.coeffs, vec![0; 4]);
            assert_eq!(dz, 0.0);
        }
    }

    #[test]
    fn integer_determinant() {
        assert_eq!(IntMatrix::identity(3).determinant(), 1);
        let m = IntMatrix::from_columns(&[vec![2, 1], vec![1, 1]]);
        assert_eq!(m.determinant(), 1);
        let m = IntMatrix::from_columns(&[vec![0, 1], vec![1, 0]]);
        assert_eq!(m.determinant(), -1);
        let m = IntMatrix::from_columns(&[vec![2, 4], vec![1, 2]]);
        assert_eq!(m.determinant(), 0);
    }
}
