//! Dense complex Hermitian spectral primitives.
//!
//! Everything the synchronization pipelines need from linear algebra lives
//! here: a Hermitian matrix type, leading/top-d eigensolvers, and the
//! polar-style projection onto the unitary group. The eigensolver is a block
//! power iteration accelerated by Rayleigh–Ritz extraction over the subspace
//! `span{X, HX - X(X*HX), X_prev}`, which converges to the *algebraically*
//! largest eigenvalues (no shift tricks needed) and tolerates near-tied
//! spectra. All routines are pure functions: no shared mutable state, safe to
//! call from multiple threads.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Fixed seed for the eigensolver's deterministic start block. Identical
/// inputs must yield bit-identical eigenvectors across runs.
const START_BLOCK_SEED: u64 = 0x5eed_b10c_0000_0001;

/// Dense complex matrix, row-major. Used for small blocks (representation
/// matrices, eigenvector stacks) and as backing storage for
/// [`HermitianMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let orow = other.row(k).to_vec();
                for (j, &b) in orow.iter().enumerate() {
                    out[(i, j)] += a * b;
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn add_assign(&mut self, other: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Real part, entrywise.
    pub fn real(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.re).collect()
    }

    /// Trace of `self * other.adjoint()`, computed without forming the product.
    pub fn dot_adjoint(&self, other: &ComplexMatrix) -> Complex64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense Hermitian matrix. Construction enforces conjugate symmetry (within
/// 1e-12, then symmetrized exactly) and a real diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<Complex64>,
}

/// Tolerance accepted for Hermitian symmetry at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    /// Build from an upper-triangle generator; the lower triangle is the
    /// conjugate, the diagonal keeps only its real part.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut h = Self::zeros(n);
        for i in 0..n {
            let d = f(i, i);
            h.data[i * n + i] = Complex64::new(d.re, 0.0);
            for j in (i + 1)..n {
                let v = f(i, j);
                h.data[i * n + j] = v;
                h.data[j * n + i] = v.conj();
            }
        }
        h
    }

    /// Validate an arbitrary entry table as Hermitian and symmetrize exactly.
    pub fn from_entries(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        let scale = entries
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        for i in 0..n {
            let d = entries[i * n + i];
            if d.im.abs() > HERMITIAN_TOL * scale {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry ({i},{i}) has imaginary part {:.3e}",
                    d.im
                )));
            }
            for j in (i + 1)..n {
                let a = entries[i * n + j];
                let b = entries[j * n + i];
                if (a - b.conj()).norm() > HERMITIAN_TOL * scale {
                    return Err(Error::InvalidMatrix(format!(
                        "entries ({i},{j}) and ({j},{i}) are not conjugate: {a} vs {b}"
                    )));
                }
            }
        }
        let mut h = Self::zeros(n);
        for i in 0..n {
            h.data[i * n + i] = Complex64::new(entries[i * n + i].re, 0.0);
            for j in (i + 1)..n {
                let v = 0.5 * (entries[i * n + j] + entries[j * n + i].conj());
                h.data[i * n + j] = v;
                h.data[j * n + i] = v.conj();
            }
        }
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    /// Set entry (i, j) and its conjugate mirror. Diagonal values keep only
    /// their real part.
    pub fn set_pair(&mut self, i: usize, j: usize, v: Complex64) {
        if i == j {
            self.data[i * self.n + i] = Complex64::new(v.re, 0.0);
        } else {
            self.data[i * self.n + j] = v;
            self.data[j * self.n + i] = v.conj();
        }
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            *yi = acc;
        }
        y
    }

    /// `self + c * I`, used for spectrum shifts.
    pub fn add_scaled_identity(&self, c: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += Complex64::new(c, 0.0);
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// Rank-one `v v*` (no scaling), handy for tests and fixtures.
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_upper(v.len(), |i, j| v[i] * v[j].conj())
    }
}

/// Eigenpair of a Hermitian matrix; `vector` is scaled to Euclidean norm
/// `sqrt(n)` with the largest-magnitude entry rotated to be real positive.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<Complex64>,
}

/// Top-d eigenbasis: `values` descending, `vectors[c]` the c-th column,
/// columns orthonormal and individually phase-fixed.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
}

/// Default relative residual tolerance (scaled by the Frobenius norm).
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

/// Default iteration budget for the eigensolver.
pub fn default_max_iter(n: usize) -> usize {
    (10.0 * n as f64 * (n as f64).ln()) as usize + 1000
}

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Rotate the global phase so the largest-magnitude entry (smallest index on
/// ties) is real positive.
pub fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0;
    let mut best_mag = 0.0;
    for (i, x) in v.iter().enumerate() {
        let m = x.norm();
        if m > best_mag + 1e-15 {
            best = i;
            best_mag = m;
        }
    }
    if best_mag > 0.0 {
        let phase = v[best] / best_mag;
        let rot = phase.conj();
        for x in v.iter_mut() {
            *x *= rot;
        }
    }
}

/// Modified Gram-Schmidt of `v` against `basis`, twice for stability.
/// Returns false if `v` is numerically in the span (dropped).
fn orthonormalize_against(v: &mut Vec<Complex64>, basis: &[Vec<Complex64>]) -> bool {
    let initial = norm(v);
    if initial == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(v, -c, b);
        }
    }
    let n = norm(v);
    // Relative test: drop only if the projection removed (nearly) all of the
    // vector, otherwise small residual blocks would never enter the basis.
    if n <= 1e-8 * initial || n < 1e-250 {
        return false;
    }
    let inv = 1.0 / n;
    for x in v.iter_mut() {
        *x *= inv;
    }
    true
}

/// Deterministic quasi-random start block: ChaCha-seeded Gaussian-ish entries,
/// orthonormalized.
fn start_block(n: usize, d: usize) -> Vec<Vec<Complex64>> {
    use rand::Rng as _;
    let mut rng = crate::rng::seeded(START_BLOCK_SEED ^ ((n as u64) << 20) ^ d as u64);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        if orthonormalize_against(&mut v, &cols) {
            cols.push(v);
        }
    }
    cols
}

// ---------------------------------------------------------------------------
// Small dense Hermitian eigensolver (cyclic Jacobi), used for the
// Rayleigh-Ritz projected problems and for d = n requests.
// ---------------------------------------------------------------------------

/// Eigendecomposition of a small Hermitian matrix by cyclic complex Jacobi
/// sweeps. Returns eigenvalues descending with matching columns of `V`.
fn jacobi_hermitian(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut a = a.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.fro_norm().max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Rotation G = [[c, s], [-conj(s), c]] with s = sin(theta) *
                // phase(apq); zeroes the (p,q) entry of G* A G.
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sigma = c * t;
                let phase = apq / mag;
                let s = sigma * phase;

                // Columns: A <- A G.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s.conj() * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
                // Rows: A <- G* A.
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c * apj - s * aqj;
                    a[(q, j)] = s.conj() * apj + c * aqj;
                }
                // Accumulate V <- V G.
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s.conj() * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let vecs = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    (values, vecs)
}

// ---------------------------------------------------------------------------
// Block eigensolver
// ---------------------------------------------------------------------------

struct BlockState {
    /// Orthonormal iterate columns.
    x: Vec<Vec<Complex64>>,
    /// Ritz values matching `x`.
    theta: Vec<f64>,
}

/// Rayleigh-Ritz accelerated block power iteration for the top `d` eigenpairs
/// of a Hermitian matrix. Residual target is absolute.
fn block_eig(h: &HermitianMatrix, d: usize, tol_abs: f64, max_iter: usize) -> Result<BlockState> {
    let n = h.dim();
    assert!(d >= 1 && d <= n);
    if d == n {
        // Whole spectrum requested: solve densely.
        let dense = ComplexMatrix::from_fn(n, n, |i, j| h.get(i, j));
        let (values, v) = jacobi_hermitian(&dense);
        let x = (0..n)
            .map(|c| (0..n).map(|i| v[(i, c)]).collect())
            .collect();
        return Ok(BlockState { x, theta: values });
    }

    // Small buffer improves convergence of the d-th pair on clustered spectra.
    let buf = ((d + 2).min(n) - d).min(3);
    let b = d + buf;
    let mut x = start_block(n, b);
    let mut hx: Vec<Vec<Complex64>> = x.iter().map(|c| h.matvec(c)).collect();
    let mut prev: Vec<Vec<Complex64>> = Vec::new();
    let mut last_residual = f64::INFINITY;

    let rotate = |cols: &[Vec<Complex64>], w: &ComplexMatrix, take: usize| -> Vec<Vec<Complex64>> {
        (0..take)
            .map(|c| {
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for (k, col) in cols.iter().enumerate() {
                    axpy(&mut out, w[(k, c)], col);
                }
                out
            })
            .collect()
    };

    for iteration in 1..=max_iter {
        // Periodic drift control: the iterate stays orthonormal through the
        // Ritz rotations, but floating-point error accumulates slowly.
        if iteration % 32 == 0 {
            let mut fresh: Vec<Vec<Complex64>> = Vec::with_capacity(b);
            for mut c in std::mem::take(&mut x) {
                if orthonormalize_against(&mut c, &fresh) {
                    fresh.push(c);
                }
            }
            let mut refill = 0usize;
            while fresh.len() < b {
                let mut v = start_block(n, b + refill + 1).pop().expect("nonempty");
                refill += 1;
                if orthonormalize_against(&mut v, &fresh) {
                    fresh.push(v);
                }
            }
            x = fresh;
            hx = x.iter().map(|c| h.matvec(c)).collect();
        }

        // Ritz within span(x).
        let mut gram = ComplexMatrix::zeros(b, b);
        for i in 0..b {
            for j in 0..b {
                gram[(i, j)] = dot(&x[i], &hx[j]);
            }
        }
        let (theta, w) = jacobi_hermitian(&gram);
        let xr = rotate(&x, &w, b);
        let hxr = rotate(&hx, &w, b);

        // Residual blocks for the d tracked pairs.
        let mut resids: Vec<Vec<Complex64>> = Vec::with_capacity(d);
        let mut worst = 0.0f64;
        for c in 0..d {
            let mut r = hxr[c].clone();
            axpy(&mut r, Complex64::new(-theta[c], 0.0), &xr[c]);
            worst = worst.max(norm(&r));
            resids.push(r);
        }
        last_residual = worst;
        if worst <= tol_abs {
            return Ok(BlockState {
                x: xr.into_iter().take(d).collect(),
                theta: theta.into_iter().take(d).collect(),
            });
        }

        // Locally optimal search space: current Ritz block, residuals, and
        // the previous block's contribution. H images are tracked alongside
        // so only newly appended columns cost a matvec.
        let mut basis = xr.clone();
        let mut hbasis = hxr.clone();
        for mut r in resids {
            if orthonormalize_against(&mut r, &basis) && basis.len() < n {
                hbasis.push(h.matvec(&r));
                basis.push(r);
            }
        }
        for p in &prev {
            let mut p = p.clone();
            if orthonormalize_against(&mut p, &basis) && basis.len() < n {
                hbasis.push(h.matvec(&p));
                basis.push(p);
            }
        }
        let m = basis.len();
        let mut t = ComplexMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                t[(i, j)] = dot(&basis[i], &hbasis[j]);
            }
        }
        let (_tvals, tw) = jacobi_hermitian(&t);
        let take = b.min(m);
        let xnew = rotate(&basis, &tw, take);
        let hxnew = rotate(&hbasis, &tw, take);

        // Remember the part of the step that points away from the old block.
        prev = Vec::new();
        for c in 0..take {
            let mut delta = xnew[c].clone();
            for old in &xr {
                let coeff = dot(old, &delta);
                axpy(&mut delta, -coeff, old);
            }
            if prev.len() < d && norm(&delta) > 1e-12 {
                prev.push(delta);
            }
        }
        x = xnew;
        hx = hxnew;
        if x.len() < b {
            // Basis collapsed (exactly invariant subspace); refill next round.
            let mut refill = 0usize;
            while x.len() < b {
                let mut v = start_block(n, b + refill + 1).pop().expect("nonempty");
                refill += 1;
                if orthonormalize_against(&mut v, &x) {
                    hx.push(h.matvec(&v));
                    x.push(v);
                }
            }
        }
    }

    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: last_residual,
        target: tol_abs,
        channel: None,
    })
}

/// Leading eigenpair (algebraically largest eigenvalue) of a Hermitian matrix.
///
/// The returned vector has norm `sqrt(n)` and its largest-magnitude entry is
/// rotated to be real positive, so the output is deterministic. `tol` is
/// relative to the Frobenius norm.
pub fn leading_eigenpair(h: &HermitianMatrix, tol: f64, max_iter: usize) -> Result<EigenPair> {
    assert!(tol > 0.0, "tolerance must be positive");
    let fro = h.fro_norm();
    if fro == 0.0 {
        return Err(Error::ZeroMatrix { channel: None });
    }
    let st = block_eig(h, 1, tol * fro, max_iter)?;
    let mut v = st.x.into_iter().next().expect("one column");
    fix_phase(&mut v);
    let s = (h.dim() as f64).sqrt();
    for x in v.iter_mut() {
        *x *= s;
    }
    Ok(EigenPair {
        value: st.theta[0],
        vector: v,
    })
}

/// Top-`d` eigenvectors of a Hermitian matrix, orthonormal columns spanning
/// the dominant invariant subspace, each column phase-fixed.
pub fn top_d_eigenvectors(
    h: &HermitianMatrix,
    d: usize,
    tol: f64,
    max_iter: usize,
) -> Result<EigenBasis> {
    assert!(tol > 0.0, "tolerance must be positive");
    if d < 1 || d > h.dim() {
        return Err(Error::InvalidParameter {
            name: "d",
            message: format!("d = {d} outside 1..={}", h.dim()),
        });
    }
    let fro = h.fro_norm();
    if fro == 0.0 {
        return Err(Error::ZeroMatrix { channel: None });
    }
    let st = block_eig(h, d, tol * fro, max_iter)?;
    let mut vectors = st.x;
    for v in &mut vectors {
        fix_phase(v);
    }
    Ok(EigenBasis {
        values: st.theta,
        vectors,
    })
}

// ---------------------------------------------------------------------------
// SVD / unitary projection
// ---------------------------------------------------------------------------

/// One-sided Jacobi SVD of a square complex matrix: `m = phi * diag(sigma) * psi^*`.
/// `phi`, `psi` unitary, `sigma` unsorted nonnegative.
fn jacobi_svd(m: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    let n = m.rows();
    assert_eq!(n, m.cols());
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut hpp = 0.0;
                let mut hqq = 0.0;
                let mut hpq = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    hpp += aip.norm_sqr();
                    hqq += aiq.norm_sqr();
                    hpq += aip.conj() * aiq;
                }
                let mag = hpq.norm();
                if mag <= 1e-15 * (hpp * hqq).sqrt().max(1e-300) {
                    continue;
                }
                rotated = true;
                let tau = (hqq - hpp) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sigma = c * t;
                let phase = hpq / mag;
                let s = sigma * phase;
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s.conj() * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s.conj() * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma = vec![0.0f64; n];
    let mut phi = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            s += a[(i, j)].norm_sqr();
        }
        let s = s.sqrt();
        sigma[j] = s;
        if s > 0.0 {
            for i in 0..n {
                phi[(i, j)] = a[(i, j)] / s;
            }
        }
    }
    (phi, sigma, v)
}

/// Threshold below which the nearest-unitary projection is ambiguous.
pub const RANK_TOL: f64 = 1e-10;

/// Closest unitary matrix to `m` in Frobenius norm: `phi * psi^*` from the
/// SVD `m = phi * diag(sigma) * psi^*`.
pub fn unitary_projection(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    assert_eq!(m.rows(), m.cols(), "unitary projection expects a square matrix");
    let (phi, sigma, psi) = jacobi_svd(m);
    let sigma_min = sigma.iter().copied().fold(f64::INFINITY, f64::min);
    if !(sigma_min > RANK_TOL) {
        return Err(Error::RankDeficient {
            sigma_min,
            block: None,
        });
    }
    Ok(phi.mul(&psi.adjoint()))
}

/// Singular values of a square complex matrix (unsorted).
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    jacobi_svd(m).1
}

/// Full SVD of a square complex matrix: `m = phi * diag(sigma) * psi^*` with
/// unsorted nonnegative `sigma`. Real inputs yield real factors.
pub fn svd(m: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    jacobi_svd(m)
}
