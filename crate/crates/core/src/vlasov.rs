//! The Vlasov limit equation, its iteration series, and the Hartree reduction.

use crate::cumulant::CorrelationFamily;
use crate::error::{dim_err, KineticError, Result};
use crate::exec::Exec;
use crate::gqke::mean_field_trace;
use crate::lattice::Model;
use crate::quadrature::mapped;
use crate::tensor::{
    hermitian_eig_matrix, kron, kron_power, minus_i_commutator_diag, partial_trace_matrix, pow,
    trace_norm, CMatrix, DensityOp, C64,
};

/// `(2‖Φ‖ ‖f‖₁)^{-1}`, infinite for a vanishing potential.
pub fn t0_bound(model: &Model, f1_0: &DensityOp) -> f64 {
    let phi = model.spec().phi_norm();
    let norm = trace_norm(f1_0);
    if phi == 0.0 || norm == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (2.0 * phi * norm)
    }
}

/// `−i[K, f] + Tr_2(−i[Φ(1,2), f ⊗ f])`.
pub fn vlasov_rhs(model: &Model, f1: &DensityOp) -> Result<DensityOp> {
    vlasov_rhs_at(model, f1, 0.0, None)
}

/// Right-hand side at time `t`; with `corr` the product `f ⊗ f` is first multiplied by
/// the freely propagated `g_2(t)`.
pub fn vlasov_rhs_at(
    model: &Model,
    f1: &DensityOp,
    t: f64,
    corr: Option<&CorrelationFamily>,
) -> Result<DensityOp> {
    if f1.n() != 1 || f1.d() != model.d() {
        return dim_err("Vlasov state must be a one-particle operator");
    }
    let k = model.kinetic();
    let stream = (k * f1.matrix() - f1.matrix() * k) * C64::new(0.0, -1.0);
    let mut pair = kron(f1, f1)?;
    if let Some(c) = corr {
        if !c.is_identity() {
            let g = c.free_conjugated(model, 2, t)?;
            pair = DensityOp::from_parts(2, f1.d(), g * pair.matrix());
        }
    }
    let mf = mean_field_trace(model, &pair)?;
    Ok(DensityOp::from_parts(1, f1.d(), stream + mf.matrix()))
}

#[derive(Debug, Clone)]
pub struct VlasovState {
    pub t: f64,
    pub f1: DensityOp,
}

/// Fixed-step RK4 trajectory from `0` to `t_end`, including both endpoints.
pub fn integrate_vlasov(
    model: &Model,
    f1_0: &DensityOp,
    t_end: f64,
    dt: f64,
    corr: Option<&CorrelationFamily>,
) -> Result<Vec<VlasovState>> {
    if !(dt > 0.0) || !t_end.is_finite() || t_end < 0.0 {
        return Err(KineticError::Config(format!("need dt > 0 and t_end >= 0, got {dt}, {t_end}")));
    }
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut f = f1_0.clone();
    out.push(VlasovState { t: 0.0, f1: f.clone() });
    for step in 0..steps {
        let t = step as f64 * h;
        let rhs = |t: f64, x: &DensityOp| vlasov_rhs_at(model, x, t, corr);
        let k1 = rhs(t, &f)?;
        let k2 = rhs(t + 0.5 * h, &f.add(&k1.scale(0.5 * h))?)?;
        let k3 = rhs(t + 0.5 * h, &f.add(&k2.scale(0.5 * h))?)?;
        let k4 = rhs(t + h, &f.add(&k3.scale(h))?)?;
        let incr = k1.add(&k2.scale(2.0))?.add(&k3.scale(2.0))?.add(&k4)?.scale(h / 6.0);
        f = f.add(&incr)?;
        out.push(VlasovState { t: (step + 1) as f64 * h, f1: f.clone() });
    }
    Ok(out)
}

/// Propagators used between interaction insertions in a Duhamel chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    /// `∏_j 𝒢_1(−τ, j)`.
    Free,
    /// `𝒢_m(−τ)` of the interacting model.
    Interacting,
}

fn flow_unitary(model: &Model, flow: Flow, m: usize, tau: f64) -> Result<CMatrix> {
    match flow {
        Flow::Free => Ok(model.free_propagator(m, tau)),
        Flow::Interacting => model.propagator(m, tau),
    }
}

fn conj(u: &CMatrix, x: &CMatrix) -> CMatrix {
    u * x * u.adjoint()
}

/// `Tr_{m} Σ_{i<m} (−𝒩_int(i, m)) x` on `H_m`, leaving `H_{m−1}`.
fn insert_and_trace(model: &Model, x: &CMatrix, m: usize) -> CMatrix {
    let d = model.d();
    let mut diag = vec![0.0; pow(d, m)];
    for i in 0..m - 1 {
        for (a, b) in diag.iter_mut().zip(model.spec().pair_diag(m, i, m - 1)) {
            *a += b;
        }
    }
    partial_trace_matrix(&minus_i_commutator_diag(&diag, x), d, m, m - 1)
}

/// The traced `n`-fold chain
/// `∫_{0<t_n<…<t_1<t} Tr_{s+1..s+n} P_s(−t+t_1) Σ(−𝒩_int(i_1,s+1)) P_{s+1}(−t_1+t_2) … P_{s+n}(−t_n) f`
/// by nested Gauss–Legendre with `nodes` points per level.
pub fn duhamel_chain(
    model: &Model,
    s: usize,
    n: usize,
    t: f64,
    f: &DensityOp,
    flow: Flow,
    nodes: usize,
    exec: Exec,
) -> Result<DensityOp> {
    if f.n() != s + n || f.d() != model.d() {
        return dim_err(format!("chain operand must live on H_{}", s + n));
    }
    if s == 0 {
        return dim_err("chain needs s >= 1");
    }
    if nodes == 0 {
        return Err(KineticError::Config("quadrature needs at least one node".into()));
    }
    model.check_capacity(s + n)?;
    let d = model.d();
    if n == 0 {
        let u = flow_unitary(model, flow, s, t)?;
        return Ok(DensityOp::from_parts(s, d, conj(&u, f.matrix())));
    }
    // y(level k, time τ): operator on H_{s+k-1} after the k-th insertion and trace
    fn level(
        model: &Model,
        s: usize,
        n: usize,
        k: usize,
        tau: f64,
        f: &CMatrix,
        flow: Flow,
        nodes: usize,
        exec: Exec,
    ) -> Result<CMatrix> {
        let m = s + k;
        let inner = if k == n {
            conj(&flow_unitary(model, flow, m, tau)?, f)
        } else {
            let pts = mapped(nodes, 0.0, tau);
            let vals = exec.map(&pts, |&(tk, w)| -> Result<CMatrix> {
                let y = level(model, s, n, k + 1, tk, f, flow, nodes, Exec::Sequential)?;
                Ok(conj(&flow_unitary(model, flow, m, tau - tk)?, &y) * C64::new(w, 0.0))
            });
            let rows = pow(model.d(), m);
            let mut acc = CMatrix::zeros(rows, rows);
            for v in vals {
                acc += v?;
            }
            acc
        };
        Ok(insert_and_trace(model, &inner, m))
    }
    let pts = mapped(nodes, 0.0, t);
    let vals = exec.map(&pts, |&(t1, w)| -> Result<CMatrix> {
        let y = level(model, s, n, 1, t1, f.matrix(), flow, nodes, exec)?;
        Ok(conj(&flow_unitary(model, flow, s, t - t1)?, &y) * C64::new(w, 0.0))
    });
    let rows = pow(d, s);
    let mut acc = CMatrix::zeros(rows, rows);
    for v in vals {
        acc += v?;
    }
    Ok(DensityOp::from_parts(s, d, acc))
}

/// Truncated iteration series of the limit equation with its per-order norms.
#[derive(Debug, Clone)]
pub struct DuhamelValue {
    pub value: DensityOp,
    pub terms: Vec<DensityOp>,
    pub term_norms: Vec<f64>,
    /// `(t/t_0)^n ‖f_1^0‖₁`, the geometric majorant of each order.
    pub bounds: Vec<f64>,
}

/// `Σ_{n≤N}` of the `n`-fold free-flow chains applied to `g_{1+n} ∏ f_1^0`.
pub fn duhamel_series(
    model: &Model,
    f1_0: &DensityOp,
    t: f64,
    max_order: usize,
    nodes: usize,
    corr: Option<&CorrelationFamily>,
    exec: Exec,
) -> Result<DuhamelValue> {
    if f1_0.n() != 1 || f1_0.d() != model.d() {
        return dim_err("initial state must be a one-particle operator");
    }
    if max_order > 3 {
        return Err(KineticError::Capacity(format!("order {max_order} exceeds cap 3")));
    }
    if nodes < 8 {
        return Err(KineticError::Config(format!("need at least 8 quadrature nodes, got {nodes}")));
    }
    let t0 = t0_bound(model, f1_0);
    let norm0 = trace_norm(f1_0);
    let mut value = DensityOp::zeros(1, f1_0.d());
    let mut terms = Vec::new();
    let mut term_norms = Vec::new();
    let mut bounds = Vec::new();
    for n in 0..=max_order {
        let mut f = kron_power(f1_0, 1 + n);
        if let Some(c) = corr {
            if !c.is_identity() {
                f = DensityOp::from_parts(1 + n, f.d(), c.operator(1 + n, f.d())? * f.matrix());
            }
        }
        let term = if n > 0 && model.spec().is_free() {
            DensityOp::zeros(1, f1_0.d())
        } else {
            duhamel_chain(model, 1, n, t, &f, Flow::Free, nodes, exec)?
        };
        term_norms.push(trace_norm(&term));
        bounds.push(if t0.is_finite() { (t / t0).powi(n as i32) * norm0 } else { 0.0 });
        value = value.add(&term)?;
        terms.push(term);
    }
    Ok(DuhamelValue { value, terms, term_norms, bounds })
}

/// Largest eigenvalue of a Hermitian operator.
pub fn purity(f: &DensityOp) -> f64 {
    *hermitian_eig_matrix(f.matrix()).values.last().unwrap_or(&0.0)
}

pub fn min_eigenvalue(f: &DensityOp) -> f64 {
    *hermitian_eig_matrix(f.matrix()).values.first().unwrap_or(&0.0)
}

/// Mean-field energy `Tr(K f) + ½ Tr(Φ f ⊗ f)`.
pub fn vlasov_energy(model: &Model, f1: &DensityOp) -> f64 {
    let k = (model.kinetic() * f1.matrix()).trace().re;
    let d = model.d();
    let mut pot = 0.0;
    for q in 0..d {
        for r in 0..d {
            pot += model.spec().phi[model.spec().distance(q, r)] * f1.matrix()[(q, q)].re * f1.matrix()[(r, r)].re;
        }
    }
    k + 0.5 * pot
}

#[derive(Debug, Clone)]
pub struct WaveFunction {
    pub t: f64,
    pub psi: Vec<C64>,
}

fn hartree_rhs(model: &Model, psi: &[C64]) -> Vec<C64> {
    let d = model.d();
    let k = model.kinetic();
    let dens: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    (0..d)
        .map(|q| {
            let kin: C64 = (0..d).map(|r| k[(q, r)] * psi[r]).sum();
            let v: f64 = (0..d).map(|r| model.spec().phi[model.spec().distance(q, r)] * dens[r]).sum();
            (kin + psi[q] * v) * C64::new(0.0, -1.0)
        })
        .collect()
}

/// `⟨ψ|K|ψ⟩ + ½ Σ φ(q−q′)|ψ(q)|²|ψ(q′)|²`.
pub fn hartree_energy(model: &Model, psi: &[C64]) -> f64 {
    let d = model.d();
    let k = model.kinetic();
    let mut e = 0.0;
    for q in 0..d {
        for r in 0..d {
            e += (psi[q].conj() * k[(q, r)] * psi[r]).re;
            e += 0.5 * model.spec().phi[model.spec().distance(q, r)] * psi[q].norm_sqr() * psi[r].norm_sqr();
        }
    }
    e
}

/// RK4 trajectory of `i∂_tψ = Kψ + (φ ⋆ |ψ|²)ψ`.
pub fn hartree_evolve(model: &Model, psi_0: &[C64], t_end: f64, dt: f64) -> Result<Vec<WaveFunction>> {
    if psi_0.len() != model.d() {
        return dim_err(format!("wave function needs {} entries", model.d()));
    }
    let norm = psi_0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(KineticError::Normalization(format!("‖ψ‖ = {norm}, expected 1")));
    }
    if !(dt > 0.0) || !t_end.is_finite() || t_end < 0.0 {
        return Err(KineticError::Config(format!("need dt > 0 and t_end >= 0, got {dt}, {t_end}")));
    }
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let axpy = |x: &[C64], a: f64, y: &[C64]| -> Vec<C64> {
        x.iter().zip(y).map(|(u, v)| u + v * a).collect()
    };
    let mut psi = psi_0.to_vec();
    let mut out = vec![WaveFunction { t: 0.0, psi: psi.clone() }];
    for step in 0..steps {
        let k1 = hartree_rhs(model, &psi);
        let k2 = hartree_rhs(model, &axpy(&psi, 0.5 * h, &k1));
        let k3 = hartree_rhs(model, &axpy(&psi, 0.5 * h, &k2));
        let k4 = hartree_rhs(model, &axpy(&psi, h, &k3));
        for q in 0..psi.len() {
            psi[q] += (k1[q] + k2[q] * 2.0 + k3[q] * 2.0 + k4[q]) * (h / 6.0);
        }
        out.push(WaveFunction { t: (step + 1) as f64 * h, psi: psi.clone() });
    }
    Ok(out)
}
