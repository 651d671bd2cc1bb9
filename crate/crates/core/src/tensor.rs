//! Dense complex linear algebra over tensor-product Hilbert spaces `(C^d)^{⊗n}`.
//!
//! Multi-indices follow the convention that particle 1 is the slowest-varying
//! digit: the row of `|i_1 … i_n⟩` is `Σ_k i_k d^{n-k}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, KineticError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Default cap on the number of rows `d^n` of any dense operator.
pub const DEFAULT_MAX_ROWS: usize = 4096;

/// Max-norm tolerance for Hermiticity and unitarity checks.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) fn pow(d: usize, n: usize) -> usize {
    d.pow(n as u32)
}

/// A square operator on `H_n = (C^d)^{⊗n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOp {
    n: usize,
    d: usize,
    data: CMatrix,
}

impl DensityOp {
    pub fn new(n: usize, d: usize, data: CMatrix) -> Result<Self> {
        if d < 2 {
            return dim_err(format!("local dimension must be >= 2, got {d}"));
        }
        let rows = pow(d, n);
        if data.nrows() != rows || data.ncols() != rows {
            return dim_err(format!(
                "matrix is {}x{}, expected {rows}x{rows} for n={n}, d={d}",
                data.nrows(),
                data.ncols()
            ));
        }
        Ok(Self { n, d, data })
    }

    pub(crate) fn from_parts(n: usize, d: usize, data: CMatrix) -> Self {
        debug_assert_eq!(data.nrows(), pow(d, n));
        Self { n, d, data }
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        let rows = pow(d, n);
        Self::from_parts(n, d, CMatrix::zeros(rows, rows))
    }

    pub fn identity(n: usize, d: usize) -> Self {
        let rows = pow(d, n);
        Self::from_parts(n, d, CMatrix::identity(rows, rows))
    }

    pub fn from_diagonal(d: usize, n: usize, diag: &[f64]) -> Result<Self> {
        let rows = pow(d, n);
        if diag.len() != rows {
            return dim_err(format!("diagonal has {} entries, expected {rows}", diag.len()));
        }
        let v = DVector::from_iterator(rows, diag.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self::from_parts(n, d, CMatrix::from_diagonal(&v)))
    }

    /// Rank-one projector `|ψ⟩⟨ψ|` on a single particle.
    pub fn projector(psi: &[C64]) -> Result<Self> {
        let d = psi.len();
        let v = DVector::from_column_slice(psi);
        Self::new(1, d, &v * v.adjoint())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.n, self.d, self.data.adjoint())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_parts(self.n, self.d, self.data.scale(c))
    }

    pub fn scale_c(&self, c: C64) -> Self {
        Self::from_parts(self.n, self.d, &self.data * c)
    }

    /// Entrywise max-norm.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-norm of `A − A†`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.data[(r, c)] - self.data[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn check_same_space(&self, other: &DensityOp) -> Result<()> {
        if self.n != other.n || self.d != other.d {
            return dim_err(format!(
                "operators live on different spaces: (n={}, d={}) vs (n={}, d={})",
                self.n, self.d, other.n, other.d
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &DensityOp) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(Self::from_parts(self.n, self.d, &self.data + &other.data))
    }

    pub fn sub(&self, other: &DensityOp) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(Self::from_parts(self.n, self.d, &self.data - &other.data))
    }

    /// Distance `‖self − other‖₁`.
    pub fn trace_distance(&self, other: &DensityOp) -> Result<f64> {
        Ok(trace_norm(&self.sub(other)?))
    }

    /// Flat row-major snapshot used by report writers.
    pub fn snapshot(&self) -> MatrixSnapshot {
        let rows = self.dim();
        let mut entries = Vec::with_capacity(rows * rows);
        for r in 0..rows {
            for c in 0..rows {
                let z = self.data[(r, c)];
                entries.push((z.re, z.im));
            }
        }
        MatrixSnapshot { n: self.n, d: self.d, entries }
    }

    pub fn from_snapshot(s: &MatrixSnapshot) -> Result<Self> {
        let rows = pow(s.d, s.n);
        if s.entries.len() != rows * rows {
            return dim_err(format!(
                "snapshot has {} entries, expected {}",
                s.entries.len(),
                rows * rows
            ));
        }
        let data = CMatrix::from_fn(rows, rows, |r, c| {
            let (re, im) = s.entries[r * rows + c];
            C64::new(re, im)
        });
        Self::new(s.n, s.d, data)
    }
}

/// Serialized matrix: header `{n, d}` plus `(re, im)` pairs in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSnapshot {
    pub n: usize,
    pub d: usize,
    pub entries: Vec<(f64, f64)>,
}

/// Tensor product `a ⊗ b` on `H_{m+n}`.
pub fn kron(a: &DensityOp, b: &DensityOp) -> Result<DensityOp> {
    if a.d != b.d {
        return dim_err(format!("kron of local dimensions {} and {}", a.d, b.d));
    }
    Ok(DensityOp::from_parts(a.n + b.n, a.d, a.data.kronecker(&b.data)))
}

/// `f ⊗ f ⊗ … ⊗ f` (`count` factors).
pub fn kron_power(f: &DensityOp, count: usize) -> DensityOp {
    let mut acc = DensityOp::identity(0, f.d);
    for _ in 0..count {
        acc = DensityOp::from_parts(acc.n + f.n, f.d, acc.data.kronecker(&f.data));
    }
    acc
}

/// Trace over particles `s+1, …, n`, keeping the first `s`.
pub fn partial_trace(f: &DensityOp, keep: usize) -> Result<DensityOp> {
    if keep > f.n {
        return dim_err(format!("cannot keep {keep} of {} particles", f.n));
    }
    Ok(DensityOp::from_parts(keep, f.d, partial_trace_matrix(&f.data, f.d, f.n, keep)))
}

pub(crate) fn partial_trace_matrix(m: &CMatrix, d: usize, n: usize, keep: usize) -> CMatrix {
    let outer = pow(d, keep);
    let inner = pow(d, n - keep);
    CMatrix::from_fn(outer, outer, |r, c| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..inner {
            acc += m[(r * inner + k, c * inner + k)];
        }
        acc
    })
}

/// Sum of singular values.
pub fn trace_norm(f: &DensityOp) -> f64 {
    trace_norm_matrix(&f.data)
}

pub(crate) fn trace_norm_matrix(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut defect = 0.0f64;
    let n = m.nrows();
    for r in 0..n {
        for c in r..n {
            defect = defect.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    if defect <= 1e-14 * scale {
        let herm = (m + m.adjoint()).scale(0.5);
        herm.symmetric_eigenvalues().iter().map(|x| x.abs()).sum()
    } else {
        m.clone().svd(false, false).singular_values.iter().sum()
    }
}

/// Spectral decomposition of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Columns are the matching orthonormal eigenvectors.
    pub vectors: CMatrix,
}

impl Eigen {
    /// `U f(Λ) U†` for a scalar function of the spectrum.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= w);
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn hermitian_eig(h: &DensityOp, require_hermitian: bool) -> Result<Eigen> {
    if require_hermitian {
        let scale = h.max_abs().max(1.0);
        let defect = h.hermitian_defect();
        if defect > HERMITIAN_TOL * scale {
            return Err(KineticError::Symmetry(format!(
                "operator is not Hermitian (max |A - A^dag| = {defect:e})"
            )));
        }
    }
    Ok(hermitian_eig_matrix(&h.data))
}

pub(crate) fn hermitian_eig_matrix(m: &CMatrix) -> Eigen {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Eigen { values, vectors }
}

fn digits(mut idx: usize, d: usize, n: usize, out: &mut [usize]) {
    for k in (0..n).rev() {
        out[k] = idx % d;
        idx /= d;
    }
}

fn undigits(ds: &[usize], d: usize) -> usize {
    ds.iter().fold(0, |acc, &x| acc * d + x)
}

fn validate_perm(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return dim_err(format!("permutation has length {}, expected {n}", perm.len()));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return dim_err(format!("{perm:?} is not a permutation of 0..{n}"));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Relabels particles: slot `k` of the result holds particle `perm[k]` of the
/// input (0-based). With `perm = [1, 0]`, `a ⊗ b` becomes `b ⊗ a`.
pub fn permute_particles(f: &DensityOp, perm: &[usize]) -> Result<DensityOp> {
    validate_perm(perm, f.n)?;
    let (n, d) = (f.n, f.d);
    let rows = f.dim();
    let mut src_of = vec![0usize; rows];
    let mut out_digits = vec![0usize; n];
    let mut in_digits = vec![0usize; n];
    for (r, slot) in src_of.iter_mut().enumerate() {
        digits(r, d, n, &mut out_digits);
        for k in 0..n {
            in_digits[perm[k]] = out_digits[k];
        }
        *slot = undigits(&in_digits, d);
    }
    let data = CMatrix::from_fn(rows, rows, |r, c| f.data[(src_of[r], src_of[c])]);
    Ok(DensityOp::from_parts(n, d, data))
}

pub fn inverse_perm(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

/// Embeds an operator acting on the particles at `positions` (in that order)
/// into `H_{n_total}`, acting as the identity elsewhere.
pub(crate) fn embed(op: &CMatrix, positions: &[usize], n_total: usize, d: usize) -> CMatrix {
    let m = positions.len();
    let rows = pow(d, n_total);
    if m == n_total && positions.iter().enumerate().all(|(k, &p)| k == p) {
        return op.clone();
    }
    let rest: Vec<usize> = (0..n_total).filter(|p| !positions.contains(p)).collect();
    let sub = pow(d, m);
    let mut strides = vec![0usize; n_total];
    for (p, s) in strides.iter_mut().enumerate() {
        *s = pow(d, n_total - 1 - p);
    }
    let offset = |idx: usize, which: &[usize]| -> usize {
        let mut acc = 0;
        let mut rem = idx;
        for &p in which.iter().rev() {
            acc += (rem % d) * strides[p];
            rem /= d;
        }
        acc
    };
    let sub_offsets: Vec<usize> = (0..sub).map(|a| offset(a, positions)).collect();
    let mut out = CMatrix::zeros(rows, rows);
    for r in 0..pow(d, rest.len()) {
        let base = offset(r, &rest);
        for a in 0..sub {
            let ra = base + sub_offsets[a];
            for b in 0..sub {
                let v = op[(a, b)];
                if v != C64::new(0.0, 0.0) {
                    out[(ra, base + sub_offsets[b])] = v;
                }
            }
        }
    }
    out
}

/// `−i[A, B]`.
pub(crate) fn minus_i_commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let comm = a * b - b * a;
    comm * C64::new(0.0, -1.0)
}

/// `−i[diag(v), B]` for a real diagonal `v`.
pub(crate) fn minus_i_commutator_diag(v: &[f64], b: &CMatrix) -> CMatrix {
    let n = b.nrows();
    CMatrix::from_fn(n, n, |r, c| b[(r, c)] * C64::new(0.0, -(v[r] - v[c])))
}

/// Linear map on operators over `H_n`.
#[derive(Debug, Clone)]
pub struct SuperOp {
    n: usize,
    d: usize,
    repr: SuperRepr,
}

#[derive(Debug, Clone)]
pub enum SuperRepr {
    /// `X ↦ Σ c_k L_k X R_k`.
    Factored(Vec<FactorTerm>),
    /// Acts on column-major `vec(X)`.
    Dense(CMatrix),
}

#[derive(Debug, Clone)]
pub struct FactorTerm {
    pub coeff: C64,
    pub left: CMatrix,
    pub right: CMatrix,
}

impl SuperOp {
    pub fn factored(n: usize, d: usize, terms: Vec<FactorTerm>) -> Self {
        Self { n, d, repr: SuperRepr::Factored(terms) }
    }

    pub fn dense(n: usize, d: usize, m: CMatrix) -> Result<Self> {
        let rows = pow(d, 2 * n);
        if m.nrows() != rows || m.ncols() != rows {
            return dim_err(format!("dense superoperator must be {rows}x{rows}"));
        }
        Ok(Self { n, d, repr: SuperRepr::Dense(m) })
    }

    /// Conjugation `X ↦ U X U†`.
    pub fn conjugation(n: usize, d: usize, u: CMatrix) -> Self {
        let right = u.adjoint();
        Self::factored(n, d, vec![FactorTerm { coeff: C64::new(1.0, 0.0), left: u, right }])
    }

    pub fn repr(&self) -> &SuperRepr {
        &self.repr
    }

    pub fn apply(&self, f: &DensityOp) -> Result<DensityOp> {
        if f.n != self.n || f.d != self.d {
            return dim_err("superoperator and operand live on different spaces");
        }
        let data = match &self.repr {
            SuperRepr::Factored(terms) => {
                let rows = f.dim();
                let mut acc = CMatrix::zeros(rows, rows);
                for t in terms {
                    acc += (&t.left * &f.data * &t.right) * t.coeff;
                }
                acc
            }
            SuperRepr::Dense(m) => {
                let rows = f.dim();
                let v = DVector::from_column_slice(f.data.as_slice());
                let w = m * v;
                CMatrix::from_column_slice(rows, rows, w.as_slice())
            }
        };
        Ok(DensityOp::from_parts(self.n, self.d, data))
    }

    /// Dense form using `vec(L X R) = (Rᵀ ⊗ L) vec(X)`.
    pub fn to_dense(&self) -> CMatrix {
        match &self.repr {
            SuperRepr::Dense(m) => m.clone(),
            SuperRepr::Factored(terms) => {
                let rows = pow(self.d, 2 * self.n);
                let mut acc = CMatrix::zeros(rows, rows);
                for t in terms {
                    acc += t.right.transpose().kronecker(&t.left) * t.coeff;
                }
                acc
            }
        }
    }
}
