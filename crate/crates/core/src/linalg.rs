//! Complex matrices: a compressed-row sparse type for assembled operators and
//! dense helpers (Hermitian exponentials, Krylov propagation) on top of
//! nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type DenseMatrix = DMatrix<C64>;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Square complex matrix in compressed-row form with sorted columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        SparseMatrix {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self::from_triplets(values.len(), values.iter().enumerate().map(|(i, v)| (i, i, *v)))
    }

    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside {dim}x{dim}");
            rows[r].push((c, v));
        }
        let mut out = SparseMatrix::zeros(dim);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|(c, _)| *c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *out.vals.last_mut().expect("entry") += v;
                } else {
                    out.cols.push(c);
                    out.vals.push(v);
                    last = Some(c);
                }
            }
            out.row_ptr[r + 1] = out.cols.len();
        }
        out.prune()
    }

    fn prune(self) -> Self {
        let mut out = SparseMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != C64::new(0.0, 0.0) {
                    out.cols.push(self.cols[k]);
                    out.vals.push(self.vals[k]);
                }
            }
            out.row_ptr[r + 1] = out.cols.len();
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let slice = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match slice.binary_search(&c) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out.prune()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, C64::new(-1.0, 0.0))
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: C64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self::from_triplets(
            self.dim,
            self.triplets().chain(other.triplets().map(|(r, c, v)| (r, c, v * s))),
        )
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut acc = vec![C64::new(0.0, 0.0); n];
        let mut mark = vec![usize::MAX; n];
        let mut touched = Vec::new();
        let mut out = SparseMatrix::zeros(n);
        for r in 0..n {
            touched.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = C64::new(0.0, 0.0);
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != C64::new(0.0, 0.0) {
                    out.cols.push(c);
                    out.vals.push(acc[c]);
                }
            }
            out.row_ptr[r + 1] = out.cols.len();
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    /// `[self, other] = self other - other self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().fold(0.0, |acc, v| acc + v.norm_sqr()).sqrt()
    }

    /// `||A - A^dagger||_F / max(1, ||A||_F)`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).frobenius_norm() / self.frobenius_norm().max(1.0)
    }

    /// Largest absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut cols = vec![0.0; self.dim];
        for (k, c) in self.cols.iter().enumerate() {
            cols[*c] += self.vals[k].norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    /// `self * x` for a dense `x` with `dim` rows.
    pub fn mul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(x.nrows(), self.dim);
        let mut y = DenseMatrix::zeros(self.dim, x.ncols());
        for (src, dst) in x.as_slice().chunks(self.dim).zip(y.as_mut_slice().chunks_mut(self.dim)) {
            self.apply_into(src, dst);
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.vals.is_empty()
    }
}

/// Eigendecomposition of a Hermitian matrix `H = A + iB`, computed through
/// the real symmetric embedding `M = [[A, -B], [B, A]]` (every eigenvalue of
/// `H` appears twice in `M`).
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    dim: usize,
    values: Vec<f64>,
    embedded_values: Vec<f64>,
    embedded_vectors: DMatrix<f64>,
}

impl HermitianEigen {
    /// The input is symmetrised as `(H + H^dagger)/2` first.
    pub fn new(h: &DenseMatrix) -> Self {
        let n = h.nrows();
        let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                let z = (h[(r, c)] + h[(c, r)].conj()) * 0.5;
                m[(r, c)] = z.re;
                m[(r + n, c + n)] = z.re;
                m[(r + n, c)] = z.im;
                m[(r, c + n)] = -z.im;
            }
        }
        let eig = SymmetricEigen::new(m);
        let embedded_values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let mut sorted = embedded_values.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        HermitianEigen {
            dim: n,
            values: sorted.into_iter().step_by(2).collect(),
            embedded_values,
            embedded_vectors: eig.eigenvectors,
        }
    }

    /// Eigenvalues in increasing order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    /// Unit eigenvector for the `k`-th smallest eigenvalue.
    pub fn vector(&self, k: usize) -> Vec<C64> {
        let n = self.dim;
        let mut order: Vec<usize> = (0..2 * n).collect();
        order.sort_by(|a, b| self.embedded_values[*a].total_cmp(&self.embedded_values[*b]));
        let col = self.embedded_vectors.column(order[2 * k]);
        let v: Vec<C64> = (0..n).map(|r| C64::new(col[r], col[r + n])).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|z| z / norm).collect()
    }

    /// [`Self::propagator`] when its unitarity defect is below `1e-11`.
    pub fn checked_propagator(&self, tau: f64) -> Option<DenseMatrix> {
        let u = self.propagator(tau);
        (unitarity_defect(&u) <= 1e-11).then_some(u)
    }

    /// `exp(-i tau H)`, polished to unitarity.
    ///
    /// With `C = cos(tau M)` and `S = sin(tau M)` the result is
    /// `(C_11 + S_21) + i (C_21 - S_11)` in terms of the `n x n` blocks.
    pub fn propagator(&self, tau: f64) -> DenseMatrix {
        let n = self.dim;
        let w = &self.embedded_vectors;
        let top = w.rows(0, n).transpose();
        let mut wc = w.clone();
        let mut ws = w.clone();
        for (j, lam) in self.embedded_values.iter().enumerate() {
            let (s, c) = (lam * tau).sin_cos();
            wc.column_mut(j).scale_mut(c);
            ws.column_mut(j).scale_mut(s);
        }
        let cmat = wc * &top;
        let smat = ws * &top;
        let u = DenseMatrix::from_fn(n, n, |r, c| {
            C64::new(cmat[(r, c)] + smat[(r + n, c)], cmat[(r + n, c)] - smat[(r, c)])
        });
        polish_unitary(&u)
    }
}

/// One Newton-Schulz step `U (3 - U^dagger U) / 2` towards the nearest unitary.
pub fn polish_unitary(u: &DenseMatrix) -> DenseMatrix {
    let n = u.nrows();
    let gram = u.adjoint() * u;
    let corr = DenseMatrix::identity(n, n) * C64::new(1.5, 0.0) - gram * C64::new(0.5, 0.0);
    u * corr
}

/// `exp(-i tau H)` for a Hermitian `H`.
pub fn hermitian_propagator(h: &DenseMatrix, tau: f64) -> DenseMatrix {
    HermitianEigen::new(h).propagator(tau)
}

/// `||U^dagger U - I||_F`.
pub fn unitarity_defect(u: &DenseMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DenseMatrix::identity(n, n)).norm()
}

pub fn dense_hermiticity_defect(a: &DenseMatrix) -> f64 {
    (a - a.adjoint()).norm() / a.norm().max(1.0)
}

pub fn dense_apply(a: &DenseMatrix, x: &[C64]) -> Vec<C64> {
    let v = a * DVector::from_column_slice(x);
    v.iter().copied().collect()
}

/// `exp(-i tau K) X` by Taylor series, split into substeps with
/// `|tau| ||K||_1 <= 1/2` and summed until terms drop below `1e-17`.
pub fn expm_apply(k: &SparseMatrix, tau: f64, x: &DenseMatrix) -> DenseMatrix {
    let theta = tau.abs() * k.norm1();
    if theta == 0.0 {
        return x.clone();
    }
    let substeps = (2.0 * theta).ceil().max(1.0) as usize;
    let h = tau / substeps as f64;
    let mut out = x.clone();
    for _ in 0..substeps {
        let mut term = out.clone();
        let scale = out.norm();
        for j in 1..60 {
            term = k.mul_dense(&term) * (-I * (h / j as f64));
            out += &term;
            if term.norm() <= 1e-17 * scale {
                break;
            }
        }
    }
    out
}

/// [`expm_apply`] on a single vector.
pub fn expm_apply_vec(k: &SparseMatrix, tau: f64, x: &[C64]) -> Vec<C64> {
    let m = expm_apply(k, tau, &DenseMatrix::from_column_slice(x.len(), 1, x));
    m.as_slice().to_vec()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(-i tau H) psi` for a Hermitian sparse `H` by Lanczos with full
/// reorthogonalisation; steps are split until the Krylov residual drops
/// below `1e-14 ||psi||`.
pub fn krylov_propagate(h: &SparseMatrix, tau: f64, psi: &[C64]) -> Vec<C64> {
    const MAX_DIM: usize = 40;
    let beta0 = norm(psi);
    if beta0 == 0.0 || tau == 0.0 || h.is_zero() {
        return psi.to_vec();
    }
    let mut basis: Vec<Vec<C64>> = vec![psi.iter().map(|x| x / beta0).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); psi.len()];
    loop {
        let j = basis.len() - 1;
        h.apply_into(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        for v in &basis {
            let c = dot(v, &w);
            w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
        }
        let b = norm(&w);
        let k = alpha.len();
        let (coeffs, last) = tridiagonal_exp(&alpha, &beta, tau);
        let breakdown = b <= 1e-14 * alpha.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        if breakdown || b * last < 1e-14 {
            let mut out = vec![C64::new(0.0, 0.0); psi.len()];
            for (v, c) in basis.iter().zip(&coeffs) {
                out.iter_mut().zip(v).for_each(|(o, vi)| *o += c * vi * beta0);
            }
            return out;
        }
        if k == MAX_DIM {
            let half = krylov_propagate(h, tau / 2.0, psi);
            return krylov_propagate(h, tau / 2.0, &half);
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

/// `exp(-i tau T) e_1` for the Lanczos matrix; also returns `|last entry|`.
fn tridiagonal_exp(alpha: &[f64], beta: &[f64], tau: f64) -> (Vec<C64>, f64) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let coeffs: Vec<C64> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let v = eig.eigenvectors[(i, j)] * eig.eigenvectors[(0, j)];
                    (-I * (eig.eigenvalues[j] * tau)).exp() * v
                })
                .sum()
        })
        .collect();
    let last = coeffs[k - 1].norm();
    (coeffs, last)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> SparseMatrix {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, c(next(), 0.0)));
            for d in 1..3 {
                let j = (i + d) % n;
                let v = c(next(), next());
                trip.push((i, j, v));
                trip.push((j, i, v.conj()));
            }
        }
        SparseMatrix::from_triplets(n, trip)
    }

    #[test]
    fn sparse_products_match_dense() {
        let a = random_hermitian(12, 1);
        let b = random_hermitian(12, 2);
        let sparse = a.matmul(&b).to_dense();
        let dense = a.to_dense() * b.to_dense();
        assert!((sparse - dense).norm() < 1e-13);
        assert!((a.adjoint().to_dense() - a.to_dense().adjoint()).norm() == 0.0);
        assert!(a.hermiticity_defect() < 1e-16);
    }

    #[test]
    fn duplicates_sum_and_zeros_vanish() {
        let m = SparseMatrix::from_triplets(3, [(0, 1, c(1.0, 0.0)), (0, 1, c(-1.0, 0.0)), (2, 2, c(2.0, 0.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(2, 2), c(2.0, 0.0));
        assert_eq!(m.get(0, 1), c(0.0, 0.0));
    }

    #[test]
    fn propagator_is_unitary_and_composes() {
        let h = random_hermitian(16, 3).to_dense();
        let eig = HermitianEigen::new(&h);
        let u = eig.propagator(0.7);
        assert!(unitarity_defect(&u) < 1e-13);
        let u2 = eig.propagator(0.35);
        assert!((&u2 * &u2 - &u).norm() < 1e-12);
        for k in [0, 7] {
            let v = eig.vector(k);
            let hv = dense_apply(&h, &v);
            let r: f64 = hv.iter().zip(&v).map(|(a, b)| (a - b * eig.values()[k]).norm_sqr()).sum::<f64>().sqrt();
            assert!(r < 1e-12);
        }
    }

    #[test]
    fn taylor_matches_eigen_exponential() {
        let h = random_hermitian(24, 5);
        let x = DenseMatrix::identity(24, 24);
        for tau in [1e-3, 0.3, 4.0] {
            let want = hermitian_propagator(&h.to_dense(), tau);
            let got = expm_apply(&h, tau, &x);
            assert!((&want - &got).norm() < 1e-12, "tau {tau}");
            assert!(unitarity_defect(&got) < 1e-12);
        }
    }

    #[test]
    fn krylov_matches_dense_exponential() {
        let h = random_hermitian(40, 4).scale(c(20.0, 0.0));
        let psi: Vec<C64> = (0..40).map(|i| c((i as f64 * 0.3).sin(), (i as f64 * 0.7).cos())).collect();
        for tau in [1e-3, 0.05, 1.0] {
            let want = dense_apply(&hermitian_propagator(&h.to_dense(), tau), &psi);
            let got = krylov_propagate(&h, tau, &psi);
            let err: f64 = want.iter().zip(&got).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            assert!(err < 1e-11, "tau {tau}: {err}");
        }
    }
}
