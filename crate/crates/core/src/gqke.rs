//! Solution series, collision integral and state functionals of the generalized
//! quantum kinetic equation.

use serde::Serialize;

use crate::combinatorics::factorial;
use crate::cumulant::{CorrelationFamily, CumulantEngine, CumulantKind, GenOptions};
use crate::error::{dim_err, KineticError, Result};
use crate::exec::Exec;
use crate::lattice::Model;
use crate::tensor::{
    embed, kron_power, minus_i_commutator_diag, partial_trace, partial_trace_matrix, trace_norm,
    CMatrix, DensityOp,
};

/// Highest series order accepted.
pub const MAX_SERIES_ORDER: usize = 3;
/// Largest total particle count `s + n` in any functional.
pub const MAX_SECTOR: usize = 5;

/// Convergence region an operator norm is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormRole {
    /// Initial data of the solution series.
    Initial,
    /// State entering the collision integral.
    State,
    /// State entering the `s`-particle functional.
    Functional(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub role: NormRole,
    pub threshold: f64,
    pub norm: f64,
    pub pass: bool,
}

pub fn threshold(role: NormRole) -> f64 {
    match role {
        NormRole::Initial => (-10f64).exp() / (1.0 + (-9f64).exp()),
        NormRole::State => (-8f64).exp(),
        NormRole::Functional(s) => (-(3.0 * s as f64 + 2.0)).exp(),
    }
}

pub fn convergence_report(f: &DensityOp, role: NormRole) -> ConvergenceReport {
    let norm = trace_norm(f);
    let threshold = threshold(role);
    ConvergenceReport { role, threshold, norm, pass: norm < threshold }
}

/// A truncated series value with its per-order diagnostics.
#[derive(Debug, Clone)]
pub struct SeriesValue {
    pub value: DensityOp,
    /// Individual terms `n = 0..=N`.
    pub terms: Vec<DensityOp>,
    /// `‖term_n‖₁` for `n = 0..=N`.
    pub term_norms: Vec<f64>,
    pub convergence: ConvergenceReport,
}

impl SeriesValue {
    /// Norm of the highest retained term.
    pub fn tail(&self) -> f64 {
        *self.term_norms.last().unwrap_or(&0.0)
    }

    /// Rows `(n, ‖term_n‖₁, cumulative Σ‖term_k‖₁, threshold pass)`.
    pub fn diagnostics(&self) -> Vec<(usize, f64, f64, bool)> {
        let mut cum = 0.0;
        self.term_norms
            .iter()
            .enumerate()
            .map(|(n, &x)| {
                cum += x;
                (n, x, cum, self.convergence.pass)
            })
            .collect()
    }
}

/// Evaluation settings shared by the series and functionals.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeriesOptions<'a> {
    pub corr: Option<&'a CorrelationFamily>,
    pub exec: Exec,
    pub gen: GenTweaks,
}

/// Reading choices forwarded to the generated evolution operators.
#[derive(Debug, Clone, Copy, Default)]
pub struct GenTweaks {
    pub reading: crate::combinatorics::DissectionReading,
    pub order: crate::cumulant::LevelOrder,
}

fn check_one_particle(model: &Model, f: &DensityOp) -> Result<()> {
    if f.n() != 1 || f.d() != model.d() {
        return dim_err(format!("expected a one-particle operator with d={}", model.d()));
    }
    Ok(())
}

fn check_order(n: usize) -> Result<()> {
    if n > MAX_SERIES_ORDER {
        return Err(KineticError::Capacity(format!(
            "series order {n} exceeds cap {MAX_SERIES_ORDER}"
        )));
    }
    Ok(())
}

fn apply_g(corr: Option<&CorrelationFamily>, f: DensityOp) -> Result<DensityOp> {
    match corr {
        Some(c) if !c.is_identity() => {
            let g = c.operator(f.n(), f.d())?;
            Ok(DensityOp::from_parts(f.n(), f.d(), g * f.matrix()))
        }
        _ => Ok(f),
    }
}

/// `Σ_{n≤N} 1/n! Tr_{s+1..s+n} 𝔄_{1+n}(t, {Y}, …)[g_{s+n} ∏ F_1^0]`.
///
/// At `s = 1` this is the solution series of the kinetic equation; for `s ≥ 2` it is
/// the marginal of the underlying hierarchy, used as an independent reference for the
/// functionals.
pub fn group_series(
    model: &Model,
    s: usize,
    f1_0: &DensityOp,
    t: f64,
    max_order: usize,
    opts: &SeriesOptions,
) -> Result<SeriesValue> {
    check_one_particle(model, f1_0)?;
    check_order(max_order)?;
    if s + max_order > MAX_SECTOR {
        return Err(KineticError::Capacity(format!("s + N = {} exceeds {MAX_SECTOR}", s + max_order)));
    }
    let d = model.d();
    let orders: Vec<usize> = (0..=max_order).collect();
    let terms = opts.exec.map(&orders, |&n| -> Result<DensityOp> {
        let f = apply_g(opts.corr, kron_power(f1_0, s + n))?;
        let engine = CumulantEngine::new(model, t, s + n, None, opts.exec)?;
        let elements: Vec<Vec<usize>> =
            std::iter::once((0..s).collect()).chain((s..s + n).map(|p| vec![p])).collect();
        let x = engine.cumulant(CumulantKind::Group, &elements, f.matrix())?;
        let traced = partial_trace_matrix(&x, d, s + n, s);
        Ok(DensityOp::from_parts(s, d, traced).scale(1.0 / factorial(n)))
    });
    collect(terms, s, d, convergence_report(f1_0, NormRole::Initial))
}

fn collect(
    terms: Vec<Result<DensityOp>>,
    s: usize,
    d: usize,
    convergence: ConvergenceReport,
) -> Result<SeriesValue> {
    let mut value = DensityOp::zeros(s, d);
    let mut term_norms = Vec::with_capacity(terms.len());
    let mut kept = Vec::with_capacity(terms.len());
    for t in terms {
        let t = t?;
        term_norms.push(trace_norm(&t));
        value = value.add(&t)?;
        kept.push(t);
    }
    Ok(SeriesValue { value, terms: kept, term_norms, convergence })
}

/// `F_1(t) = Σ_{n≤N} 1/n! Tr_{2..1+n} 𝔄_{1+n}(t, 1, …, n+1) g_{1+n} ∏ F_1^0(i)`.
pub fn solution_series(
    model: &Model,
    f1_0: &DensityOp,
    t: f64,
    max_order: usize,
    opts: &SeriesOptions,
) -> Result<SeriesValue> {
    group_series(model, 1, f1_0, t, max_order, opts)
}

fn functional(
    model: &Model,
    s: usize,
    f1: &DensityOp,
    t: f64,
    max_order: usize,
    opts: &SeriesOptions,
    theta: bool,
) -> Result<SeriesValue> {
    check_one_particle(model, f1)?;
    check_order(max_order)?;
    if s < 1 {
        return dim_err("functional needs s >= 1");
    }
    if s + max_order > MAX_SECTOR {
        return Err(KineticError::Capacity(format!("s + N = {} exceeds {MAX_SECTOR}", s + max_order)));
    }
    let d = model.d();
    let gen = GenOptions {
        corr: opts.corr,
        theta,
        reading: opts.gen.reading,
        order: opts.gen.order,
        exec: opts.exec,
    };
    let orders: Vec<usize> = (0..=max_order).collect();
    let terms = opts.exec.map(&orders, |&n| -> Result<DensityOp> {
        let f = kron_power(f1, s + n);
        let engine = CumulantEngine::new(model, t, s + n, opts.corr, opts.exec)?;
        let x = engine.generated(s, &f, &gen)?;
        Ok(partial_trace(&x, s)?.scale(1.0 / factorial(n)))
    });
    collect(terms, s, d, convergence_report(f1, NormRole::Functional(s)))
}

/// `F_s(t, Y | F_1) = Σ_{n≤N} 1/n! Tr_{s+1..s+n} 𝔙_{1+n}(t, {Y}, X∖Y) ∏ F_1(i)`.
pub fn marginal_functional(
    model: &Model,
    s: usize,
    f1: &DensityOp,
    t: f64,
    max_order: usize,
    opts: &SeriesOptions,
) -> Result<SeriesValue> {
    if s < 2 {
        return dim_err("marginal functional needs s >= 2");
    }
    functional(model, s, f1, t, max_order, opts, false)
}

/// `G_s(t, Y | F_1) = Σ_{n≤N} 1/n! Tr 𝔙_{1+n}(t, θ({Y}), X∖Y) ∏ F_1(i)`.
pub fn correlation_functional(
    model: &Model,
    s: usize,
    f1: &DensityOp,
    t: f64,
    max_order: usize,
    opts: &SeriesOptions,
) -> Result<SeriesValue> {
    if s < 2 {
        return dim_err("correlation functional needs s >= 2");
    }
    functional(model, s, f1, t, max_order, opts, true)
}

/// `Tr_2(−𝒩_int(1,2)) f_2`, without the ε prefactor.
pub fn mean_field_trace(model: &Model, f2: &DensityOp) -> Result<DensityOp> {
    if f2.n() != 2 || f2.d() != model.d() {
        return dim_err("expected a two-particle operator");
    }
    let diag = model.spec().pair_diag(2, 0, 1);
    let c = minus_i_commutator_diag(&diag, f2.matrix());
    Ok(DensityOp::from_parts(1, f2.d(), partial_trace_matrix(&c, f2.d(), 2, 1)))
}

/// `ε Tr_2(−𝒩_int(1,2)) Σ_{n≤N} 1/n! Tr_{3..n+2} 𝔙_{1+n}(t, {1,2}, …) ∏ F_1(t,i)`.
pub fn collision_integral(
    model: &Model,
    f1: &DensityOp,
    t: f64,
    max_order: usize,
    opts: &SeriesOptions,
) -> Result<SeriesValue> {
    if max_order > 2 {
        return Err(KineticError::Capacity("collision integral order is capped at 2".into()));
    }
    let f2 = marginal_functional(model, 2, f1, t, max_order, opts)?;
    let eps = model.epsilon();
    let terms: Vec<Result<DensityOp>> =
        f2.terms.iter().map(|x| Ok(mean_field_trace(model, x)?.scale(eps))).collect();
    collect(terms, 1, model.d(), convergence_report(f1, NormRole::State))
}

/// `−𝒩(1)F_1 + collision integral`, the right-hand side of the kinetic equation.
pub fn kinetic_rhs(
    model: &Model,
    f1: &DensityOp,
    t: f64,
    max_order: usize,
    opts: &SeriesOptions,
) -> Result<DensityOp> {
    let stream = model.liouvillian(f1)?;
    stream.add(&collision_integral(model, f1, t, max_order, opts)?.value)
}

/// Embeds a two-particle operator on positions `(i, j)` of `H_n`.
pub fn embed_pair(op: &CMatrix, i: usize, j: usize, n: usize, d: usize) -> CMatrix {
    embed(op, &[i, j], n, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Kinetic, ModelSpec};
    use crate::states::random_state;
    use crate::tensor::kron;

    fn model(phi: Vec<f64>, eps: f64) -> Model {
        Model::new(ModelSpec::new(2, Kinetic::Laplacian, phi, eps).unwrap()).unwrap()
    }

    fn dist(a: &DensityOp, b: &DensityOp) -> f64 {
        trace_norm(&a.sub(b).unwrap())
    }

    #[test]
    fn thresholds() {
        let f = DensityOp::identity(1, 2).scale(0.5 * (-9f64).exp());
        assert!(convergence_report(&f, NormRole::State).pass);
        assert!(!convergence_report(&DensityOp::identity(1, 2).scale(0.5), NormRole::Initial).pass);
        assert!((threshold(NormRole::Functional(2)) - (-8f64).exp()).abs() < 1e-18);
    }

    #[test]
    fn series_trivial_cases() {
        let f0 = random_state(1, 2, 1, 1e-3);
        let free = model(vec![0.0, 0.0], 1.0);
        let opts = SeriesOptions::default();
        let sv = solution_series(&free, &f0, 0.9, 3, &opts).unwrap();
        assert!(dist(&sv.value, &free.evolve(0.9, &f0).unwrap()) < 1e-14);
        assert!(sv.term_norms[1..].iter().all(|&x| x < 1e-15));
        let m = model(vec![1.0, 0.4], 1.0);
        let sv0 = solution_series(&m, &f0, 0.0, 3, &opts).unwrap();
        assert!(dist(&sv0.value, &f0) < 1e-15);
        assert!(!sv0.convergence.pass);
    }

    #[test]
    fn functional_trivial_cases() {
        let f1 = random_state(1, 2, 2, 1e-4);
        let opts = SeriesOptions::default();
        let free = model(vec![0.0, 0.0], 1.0);
        let f2 = marginal_functional(&free, 2, &f1, 0.7, 2, &opts).unwrap();
        assert!(dist(&f2.value, &kron(&f1, &f1).unwrap()) < 1e-15);
        let g2 = correlation_functional(&free, 2, &f1, 0.7, 2, &opts).unwrap();
        assert!(trace_norm(&g2.value) < 1e-15);
        let m = model(vec![1.0, 0.4], 1.0);
        let f2 = marginal_functional(&m, 2, &f1, 0.0, 0, &opts).unwrap();
        assert!(dist(&f2.value, &kron(&f1, &f1).unwrap()) < 1e-15);
    }

    #[test]
    fn collision_integral_traceless_and_hermitian() {
        let m = model(vec![1.0, 0.4], 1.0);
        let f1 = random_state(1, 2, 3, 1e-4);
        let ci = collision_integral(&m, &f1, 0.8, 2, &SeriesOptions::default()).unwrap();
        assert!(ci.value.trace().norm() < 1e-18);
        assert!(ci.value.is_hermitian(1e-18));
        let free = model(vec![0.0, 0.0], 1.0);
        let ci = collision_integral(&free, &f1, 0.8, 2, &SeriesOptions::default()).unwrap();
        assert!(ci.value.max_abs() == 0.0);
    }

    #[test]
    fn cluster_decomposition_at_s2() {
        // F_2 − G_2 = F_1 ⊗ F_1 at matched orders
        let m = model(vec![1.0, -0.6], 1.0);
        let f1 = random_state(1, 2, 4, 0.3);
        let opts = SeriesOptions::default();
        for n in 0..=2 {
            let f2 = marginal_functional(&m, 2, &f1, 0.9, n, &opts).unwrap();
            let g2 = correlation_functional(&m, 2, &f1, 0.9, n, &opts).unwrap();
            let lhs = f2.value.sub(&g2.value).unwrap();
            assert!(dist(&lhs, &kron(&f1, &f1).unwrap()) < 1e-12, "order {n}");
        }
    }
}
