//! Lattice Hamiltonians `H_n = Σ K(i) + ε Σ_{i<j} Φ(i,j)` and their groups.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, KineticError, Result};
use crate::tensor::{
    embed, hermitian_eig_matrix, minus_i_commutator, minus_i_commutator_diag, pow, CMatrix,
    DensityOp, Eigen, C64, DEFAULT_MAX_ROWS, HERMITIAN_TOL,
};

/// One-particle kinetic operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Kinetic {
    /// `K = −½Δ` with periodic boundary.
    #[default]
    Laplacian,
    /// `K = 0`.
    Zero,
    /// Explicit real symmetric `d × d` matrix.
    Custom(Vec<Vec<f64>>),
}

impl Kinetic {
    pub fn matrix(&self, d: usize) -> Result<CMatrix> {
        match self {
            Kinetic::Laplacian => {
                let mut k = CMatrix::zeros(d, d);
                for q in 0..d {
                    k[(q, q)] += C64::new(1.0, 0.0);
                    k[(q, (q + 1) % d)] -= C64::new(0.5, 0.0);
                    k[((q + 1) % d, q)] -= C64::new(0.5, 0.0);
                }
                Ok(k)
            }
            Kinetic::Zero => Ok(CMatrix::zeros(d, d)),
            Kinetic::Custom(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return dim_err(format!("custom kinetic matrix must be {d}x{d}"));
                }
                let k = CMatrix::from_fn(d, d, |r, c| C64::new(rows[r][c], 0.0));
                for r in 0..d {
                    for c in 0..d {
                        if (rows[r][c] - rows[c][r]).abs() > HERMITIAN_TOL {
                            return Err(KineticError::Symmetry(
                                "custom kinetic matrix is not symmetric".into(),
                            ));
                        }
                    }
                }
                Ok(k)
            }
        }
    }
}

/// Model parameters: lattice size, kinetic rule, pair potential by torus distance, and ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub d: usize,
    #[serde(default)]
    pub kinetic: Kinetic,
    /// `φ(r)` for `r = 0..=d/2`.
    pub phi: Vec<f64>,
    pub epsilon: f64,
}

impl ModelSpec {
    pub fn new(d: usize, kinetic: Kinetic, phi: Vec<f64>, epsilon: f64) -> Result<Self> {
        let spec = Self { d, kinetic, phi, epsilon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(KineticError::Config(format!("d must be >= 2, got {}", self.d)));
        }
        if self.phi.len() != self.d / 2 + 1 {
            return Err(KineticError::Config(format!(
                "phi needs {} entries (distances 0..={}), got {}",
                self.d / 2 + 1,
                self.d / 2,
                self.phi.len()
            )));
        }
        if self.phi.iter().any(|x| !x.is_finite()) {
            return Err(KineticError::Config("phi entries must be finite".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(KineticError::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        self.kinetic.matrix(self.d)?;
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    pub fn is_free(&self) -> bool {
        self.phi.iter().all(|&x| x == 0.0)
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        let r = a.abs_diff(b);
        r.min(self.d - r)
    }

    /// Diagonal of `Φ(i,j)` on `H_n` (0-based particles).
    pub fn pair_diag(&self, n: usize, i: usize, j: usize) -> Vec<f64> {
        let d = self.d;
        let (si, sj) = (pow(d, n - 1 - i), pow(d, n - 1 - j));
        (0..pow(d, n))
            .map(|idx| self.phi[self.distance((idx / si) % d, (idx / sj) % d)])
            .collect()
    }

    /// Diagonal of `Σ_{i<j} Φ(i,j)` on `H_n`.
    pub fn interaction_diag(&self, n: usize) -> Vec<f64> {
        let mut acc = vec![0.0; pow(self.d, n)];
        for i in 0..n {
            for j in i + 1..n {
                for (a, b) in acc.iter_mut().zip(self.pair_diag(n, i, j)) {
                    *a += b;
                }
            }
        }
        acc
    }

    /// `‖Φ‖` on `H_2`, the largest `|φ|`.
    pub fn phi_norm(&self) -> f64 {
        self.phi.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// `H_n` with its spectral decomposition.
#[derive(Debug, Clone)]
pub struct HamiltonianOp {
    pub n: usize,
    pub d: usize,
    /// Whether the potential vanishes, in which case groups are built as tensor powers.
    free: bool,
    k1: Eigen,
    matrix: CMatrix,
    eig: Eigen,
}

impl HamiltonianOp {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigen(&self) -> &Eigen {
        &self.eig
    }

    /// `e^{−itH_n}`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        if t == 0.0 {
            let rows = pow(self.d, self.n);
            return CMatrix::identity(rows, rows);
        }
        if self.free {
            let u1 = self.k1.apply_fn(|l| C64::from_polar(1.0, -t * l));
            kron_power_matrix(&u1, self.n)
        } else {
            self.eig.apply_fn(|l| C64::from_polar(1.0, -t * l))
        }
    }

    /// `𝒢_n(−t)f = e^{−itH} f e^{itH}`.
    pub fn evolve(&self, t: f64, f: &DensityOp) -> Result<DensityOp> {
        self.check(f)?;
        if t == 0.0 {
            return Ok(f.clone());
        }
        let u = self.propagator(t);
        Ok(DensityOp::from_parts(f.n(), f.d(), &u * f.matrix() * u.adjoint()))
    }

    /// `−𝒩_n f = −i[H_n, f]`.
    pub fn liouvillian(&self, f: &DensityOp) -> Result<DensityOp> {
        self.check(f)?;
        Ok(DensityOp::from_parts(f.n(), f.d(), minus_i_commutator(&self.matrix, f.matrix())))
    }

    fn check(&self, f: &DensityOp) -> Result<()> {
        if f.n() != self.n || f.d() != self.d {
            return dim_err(format!(
                "operand on (n={}, d={}) but Hamiltonian on (n={}, d={})",
                f.n(),
                f.d(),
                self.n,
                self.d
            ));
        }
        Ok(())
    }
}

pub(crate) fn kron_power_matrix(m: &CMatrix, count: usize) -> CMatrix {
    let mut acc = CMatrix::identity(1, 1);
    for _ in 0..count {
        acc = acc.kronecker(m);
    }
    acc
}

type CacheKey = (usize, u64);

/// A model with a shared, lazily filled Hamiltonian cache keyed by `(n, ε)`.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    max_rows: usize,
    k: CMatrix,
    k_eig: Eigen,
    cache: Arc<Mutex<HashMap<CacheKey, Arc<HamiltonianOp>>>>,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        Self::with_cap(spec, DEFAULT_MAX_ROWS)
    }

    pub fn with_cap(spec: ModelSpec, max_rows: usize) -> Result<Self> {
        spec.validate()?;
        let k = spec.kinetic.matrix(spec.d)?;
        let k_eig = hermitian_eig_matrix(&k);
        Ok(Self { spec, max_rows, k, k_eig, cache: Arc::new(Mutex::new(HashMap::new())) })
    }

    /// Same lattice and potential at a different ε; the cache is shared.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let spec = self.spec.with_epsilon(epsilon);
        spec.validate()?;
        Ok(Self { spec, ..self.clone() })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn epsilon(&self) -> f64 {
        self.spec.epsilon
    }

    pub fn max_rows(&self) -> usize {
        self.max_rows
    }

    pub fn kinetic(&self) -> &CMatrix {
        &self.k
    }

    pub fn check_capacity(&self, n: usize) -> Result<()> {
        let rows = (self.spec.d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if rows > self.max_rows as u128 {
            return Err(KineticError::Capacity(format!(
                "d^n = {}^{} exceeds the cap of {} rows",
                self.spec.d, n, self.max_rows
            )));
        }
        Ok(())
    }

    pub fn hamiltonian(&self, n: usize) -> Result<Arc<HamiltonianOp>> {
        if n == 0 {
            return dim_err("Hamiltonian needs n >= 1");
        }
        self.check_capacity(n)?;
        let key = (n, self.spec.epsilon.to_bits());
        if let Some(h) = self.cache.lock().get(&key) {
            return Ok(Arc::clone(h));
        }
        let h = Arc::new(self.build_hamiltonian(n));
        Ok(Arc::clone(self.cache.lock().entry(key).or_insert(h)))
    }

    fn build_hamiltonian(&self, n: usize) -> HamiltonianOp {
        let d = self.spec.d;
        let rows = pow(d, n);
        let mut m = CMatrix::zeros(rows, rows);
        for i in 0..n {
            m += embed(&self.k, &[i], n, d);
        }
        let free = self.spec.is_free();
        if !free {
            for (idx, v) in self.spec.interaction_diag(n).into_iter().enumerate() {
                m[(idx, idx)] += C64::new(self.spec.epsilon * v, 0.0);
            }
        }
        let eig = if free && n > 1 {
            // spectrum unused: groups are tensor powers of the one-particle group
            Eigen { values: Vec::new(), vectors: CMatrix::zeros(0, 0) }
        } else {
            hermitian_eig_matrix(&m)
        };
        HamiltonianOp { n, d, free, k1: self.k_eig.clone(), matrix: m, eig }
    }

    /// `e^{−itK}`.
    pub fn free_propagator_1(&self, t: f64) -> CMatrix {
        self.k_eig.apply_fn(|l| C64::from_polar(1.0, -t * l))
    }

    /// `(e^{−itK})^{⊗n}`.
    pub fn free_propagator(&self, n: usize, t: f64) -> CMatrix {
        kron_power_matrix(&self.free_propagator_1(t), n)
    }

    /// `e^{−itH_n}`.
    pub fn propagator(&self, n: usize, t: f64) -> Result<CMatrix> {
        Ok(self.hamiltonian(n)?.propagator(t))
    }

    /// `W = e^{−itH_n}(e^{itK})^{⊗n}`, so that `Ĝ_n(t)f = W f W†`.
    pub fn scattering_unitary(&self, n: usize, t: f64) -> Result<CMatrix> {
        if self.spec.is_free() {
            return Ok(CMatrix::identity(pow(self.spec.d, n), pow(self.spec.d, n)));
        }
        Ok(self.propagator(n, t)? * self.free_propagator(n, -t))
    }

    /// `𝒢_n(−t)f`.
    pub fn evolve(&self, t: f64, f: &DensityOp) -> Result<DensityOp> {
        self.check_operand(f)?;
        self.hamiltonian(f.n())?.evolve(t, f)
    }

    /// `∏_i 𝒢_1(−t, i) f`.
    pub fn evolve_free(&self, t: f64, f: &DensityOp) -> Result<DensityOp> {
        self.check_operand(f)?;
        let u = self.free_propagator(f.n(), t);
        Ok(DensityOp::from_parts(f.n(), f.d(), &u * f.matrix() * u.adjoint()))
    }

    /// `−i[H_n, f]`.
    pub fn liouvillian(&self, f: &DensityOp) -> Result<DensityOp> {
        self.check_operand(f)?;
        self.hamiltonian(f.n())?.liouvillian(f)
    }

    /// `−𝒩_int(i,j) f = −i[Φ(i,j), f]` for 0-based `i < j`; carries no ε.
    pub fn interaction_liouvillian(&self, i: usize, j: usize, f: &DensityOp) -> Result<DensityOp> {
        self.check_operand(f)?;
        if !(i < j && j < f.n()) {
            return dim_err(format!("pair ({i}, {j}) invalid for n = {}", f.n()));
        }
        let diag = self.spec.pair_diag(f.n(), i, j);
        Ok(DensityOp::from_parts(f.n(), f.d(), minus_i_commutator_diag(&diag, f.matrix())))
    }

    /// `Ĝ_n(t)f = 𝒢_n(−t) ∏𝒢_1(t,i) f`.
    pub fn scattering_op(&self, t: f64, f: &DensityOp) -> Result<DensityOp> {
        self.check_operand(f)?;
        if t == 0.0 || self.spec.is_free() {
            return Ok(f.clone());
        }
        let w = self.scattering_unitary(f.n(), t)?;
        Ok(DensityOp::from_parts(f.n(), f.d(), &w * f.matrix() * w.adjoint()))
    }

    pub(crate) fn check_operand(&self, f: &DensityOp) -> Result<()> {
        if f.d() != self.spec.d {
            return dim_err(format!("operand has d={}, model has d={}", f.d(), self.spec.d));
        }
        if f.n() == 0 {
            return dim_err("operand must have n >= 1");
        }
        self.check_capacity(f.n())
    }
}

/// `H_n` for a model spec; fails with a capacity error above the default cap.
pub fn build_hamiltonian(spec: &ModelSpec, n: usize) -> Result<Arc<HamiltonianOp>> {
    Model::new(spec.clone())?.hamiltonian(n)
}
