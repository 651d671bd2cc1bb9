//! Mean-field experiments: Duhamel identities, limit sweeps and rate fits.

use std::fmt::Write as _;

use serde::Serialize;

use crate::combinatorics::{bell, factorial};
use crate::cumulant::{group_cumulant, CorrelationFamily};
use crate::error::{KineticError, Result};
use crate::exec::Exec;
use crate::gqke::{
    collision_integral, correlation_functional, group_series, marginal_functional, solution_series,
    SeriesOptions,
};
use crate::lattice::Model;
use crate::quadrature::mapped;
use crate::tensor::{kron, partial_trace, pow, trace_norm, CMatrix, DensityOp, C64};
use crate::vlasov::{duhamel_chain, duhamel_series, t0_bound, Flow};

/// One row of a sweep: `epsilon,t,metric,value,tail_floor,order`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub t: f64,
    pub metric: String,
    pub value: f64,
    pub tail_floor: f64,
    pub order: usize,
}

pub const CSV_HEADER: &str = "epsilon,t,metric,value,tail_floor,order";

pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{},{:e},{:e},{}", r.epsilon, r.t, r.metric, r.value, r.tail_floor, r.order);
    }
    out
}

/// ε values (strictly decreasing), times and truncation orders for a sweep.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub epsilons: Vec<f64>,
    pub times: Vec<f64>,
    pub orders: Vec<usize>,
    pub nodes: usize,
    pub corr: Option<CorrelationFamily>,
    /// Allow times at or beyond `t_0`.
    pub force: bool,
    pub exec: Exec,
}

impl SweepPlan {
    pub fn validate(&self, model: &Model, f1_0: &DensityOp) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(KineticError::Config("sweep needs a nonempty epsilon list".into()));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(KineticError::Config("epsilon values must be positive".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(KineticError::Config("epsilon list must be strictly decreasing".into()));
        }
        if self.times.is_empty() || self.times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return Err(KineticError::Config("sweep needs nonnegative finite times".into()));
        }
        if self.orders.is_empty() || self.orders.iter().any(|&n| n > 3) {
            return Err(KineticError::Config("truncation orders must be a nonempty subset of 0..=3".into()));
        }
        let t0 = t0_bound(model, f1_0);
        if !self.force {
            if let Some(&t) = self.times.iter().find(|&&t| t >= t0) {
                return Err(KineticError::Config(format!("t = {t} is not below t_0 = {t0}")));
            }
        }
        Ok(())
    }
}

/// Least-squares fit of `log value` against `log ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fits records above `10 × tail_floor`; needs three distinct ε.
pub fn fit_rate(records: &[&SweepRecord]) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.value > 10.0 * r.tail_floor && r.value > 0.0 && r.epsilon > 0.0)
        .map(|r| (r.epsilon.ln(), r.value.ln()))
        .collect();
    let mut eps: Vec<f64> = usable.iter().map(|p| p.0).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    if eps.len() < 3 {
        return Err(KineticError::InsufficientData(format!(
            "{} usable records with {} distinct epsilon values",
            usable.len(),
            eps.len()
        )));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(RateFit { slope, intercept: my - slope * mx, points: usable.len() })
}

/// Verdict for one metric at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub metric: String,
    pub t: f64,
    pub order: usize,
    /// All values vanish.
    pub exact: bool,
    /// Strictly decreasing in ε wherever above `10 × tail_floor`.
    pub monotone: bool,
    pub fit: Option<RateFit>,
    pub pass: bool,
}

pub const MIN_SLOPE: f64 = 0.9;
pub const ZERO_TOL: f64 = 1e-12;

/// Monotonicity and slope verdicts per (metric, order, t); tail rows are skipped.
pub fn summarize(records: &[SweepRecord]) -> Vec<MetricSummary> {
    let mut keys: Vec<(String, usize, u64)> = Vec::new();
    for r in records {
        let k = (r.metric.clone(), r.order, r.t.to_bits());
        if !r.metric.ends_with("_tail") && !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(metric, order, tb)| {
            let t = f64::from_bits(tb);
            let mut rows: Vec<&SweepRecord> = records
                .iter()
                .filter(|r| r.metric == metric && r.order == order && r.t.to_bits() == tb)
                .collect();
            rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
            let exact = rows.iter().all(|r| r.value.abs() <= ZERO_TOL);
            let above: Vec<&&SweepRecord> = rows.iter().filter(|r| r.value > 10.0 * r.tail_floor).collect();
            let monotone = above.windows(2).all(|w| w[1].value < w[0].value);
            let fit = fit_rate(&rows).ok();
            let pass = exact || (monotone && fit.is_some_and(|f| f.slope >= MIN_SLOPE));
            MetricSummary { metric, t, order, exact, monotone, fit, pass }
        })
        .collect()
}

fn roundoff_floor(eps: f64, order: usize, s: usize, norm0: f64) -> f64 {
    64.0 * f64::EPSILON * bell(order + s) as f64 * norm0.max(1.0).powi((order + s) as i32) * eps.powi(-(order as i32))
}

struct Point {
    eps: f64,
    t: f64,
    order: usize,
}

fn points(plan: &SweepPlan) -> Vec<Point> {
    let mut out = Vec::new();
    for &order in &plan.orders {
        for &eps in &plan.epsilons {
            for &t in &plan.times {
                out.push(Point { eps, t, order });
            }
        }
    }
    out
}

fn finish(mut rows: Vec<SweepRecord>) -> Vec<SweepRecord> {
    rows.sort_by(|a, b| {
        a.metric
            .cmp(&b.metric)
            .then(a.order.cmp(&b.order))
            .then(b.epsilon.total_cmp(&a.epsilon))
            .then(a.t.total_cmp(&b.t))
    });
    rows
}

/// Limit state `f_1(t)` by the iteration series at full and halved quadrature.
fn limit_state(
    model: &Model,
    f1_0: &DensityOp,
    t: f64,
    plan: &SweepPlan,
    order: usize,
) -> Result<(DensityOp, f64)> {
    let corr = plan.corr.as_ref();
    let fine = duhamel_series(model, f1_0, t, order, plan.nodes, corr, Exec::Sequential)?;
    let coarse_nodes = (plan.nodes / 2).max(8);
    let coarse = duhamel_series(model, f1_0, t, order, coarse_nodes, corr, Exec::Sequential)?;
    Ok((fine.value.clone(), trace_norm(&fine.value.sub(&coarse.value)?)))
}

fn record(eps: f64, t: f64, metric: &str, value: f64, floor: f64, order: usize) -> SweepRecord {
    SweepRecord { epsilon: eps, t, metric: metric.to_string(), value, tail_floor: floor, order }
}

/// `D(ε, t) = ‖ε F_1(t) − f_1(t)‖₁` with `F_1^0 = f_1^0/ε` at matched truncation.
pub fn theorem1_sweep(model: &Model, f1_0: &DensityOp, plan: &SweepPlan) -> Result<Vec<SweepRecord>> {
    plan.validate(model, f1_0)?;
    let name = if plan.corr.is_some() { "modified_vlasov_distance" } else { "mean_field_distance" };
    let norm0 = trace_norm(f1_0);
    let rows = plan.exec.map(&points(plan), |p| -> Result<Vec<SweepRecord>> {
        let m = model.with_epsilon(p.eps)?;
        let opts = SeriesOptions { corr: plan.corr.as_ref(), exec: Exec::Sequential, ..Default::default() };
        let series = solution_series(&m, &f1_0.scale(1.0 / p.eps), p.t, p.order, &opts)?;
        let (limit, quad) = limit_state(&m, f1_0, p.t, plan, p.order)?;
        let value = trace_norm(&series.value.scale(p.eps).sub(&limit)?);
        let floor = quad + roundoff_floor(p.eps, p.order, 1, norm0);
        Ok(vec![
            record(p.eps, p.t, name, value, floor, p.order),
            record(p.eps, p.t, &format!("{name}_tail"), p.eps * series.tail(), floor, p.order),
        ])
    });
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(finish(out))
}

/// Chaos metrics `‖ε²F_2 − f_1 ⊗ f_1‖₁` and `‖ε²G_2‖₁` at matched truncation.
pub fn theorem2_sweep(model: &Model, f1_0: &DensityOp, plan: &SweepPlan) -> Result<Vec<SweepRecord>> {
    plan.validate(model, f1_0)?;
    let norm0 = trace_norm(f1_0);
    let rows = plan.exec.map(&points(plan), |p| -> Result<Vec<SweepRecord>> {
        let m = model.with_epsilon(p.eps)?;
        let opts = SeriesOptions { exec: Exec::Sequential, ..Default::default() };
        let f1 = solution_series(&m, &f1_0.scale(1.0 / p.eps), p.t, p.order, &opts)?.value;
        let f2 = marginal_functional(&m, 2, &f1, p.t, p.order, &opts)?;
        let g2 = correlation_functional(&m, 2, &f1, p.t, p.order, &opts)?;
        let (limit, quad) = limit_state(&m, f1_0, p.t, plan, p.order)?;
        let prod = kron(&limit, &limit)?;
        let e2 = p.eps * p.eps;
        let chaos = trace_norm(&f2.value.scale(e2).sub(&prod)?);
        let corr = trace_norm(&g2.value.scale(e2));
        let floor = 2.0 * quad * trace_norm(&limit) + roundoff_floor(p.eps, p.order, 2, norm0);
        Ok(vec![
            record(p.eps, p.t, "chaos_distance", chaos, floor, p.order),
            record(p.eps, p.t, "chaos_distance_tail", e2 * f2.tail(), floor, p.order),
            record(p.eps, p.t, "correlation_norm", corr, floor, p.order),
            record(p.eps, p.t, "correlation_norm_tail", e2 * g2.tail(), floor, p.order),
        ])
    });
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(finish(out))
}

/// `‖ε²F_2(corr) − g_2(t)(f_1 ⊗ f_1)‖₁` with `g_2(t)` the freely propagated correlation.
pub fn correlation_propagation_sweep(
    model: &Model,
    f1_0: &DensityOp,
    plan: &SweepPlan,
) -> Result<Vec<SweepRecord>> {
    plan.validate(model, f1_0)?;
    let corr = plan
        .corr
        .as_ref()
        .ok_or_else(|| KineticError::Config("correlation sweep needs a correlation family".into()))?;
    let norm0 = trace_norm(f1_0);
    let rows = plan.exec.map(&points(plan), |p| -> Result<Vec<SweepRecord>> {
        let m = model.with_epsilon(p.eps)?;
        let opts = SeriesOptions { corr: Some(corr), exec: Exec::Sequential, ..Default::default() };
        let f1 = solution_series(&m, &f1_0.scale(1.0 / p.eps), p.t, p.order, &opts)?.value;
        let f2 = marginal_functional(&m, 2, &f1, p.t, p.order, &opts)?;
        let (limit, quad) = limit_state(&m, f1_0, p.t, plan, p.order)?;
        let g = corr.free_conjugated(&m, 2, p.t)?;
        let target = DensityOp::from_parts(2, m.d(), g * kron(&limit, &limit)?.matrix());
        let e2 = p.eps * p.eps;
        let value = trace_norm(&f2.value.scale(e2).sub(&target)?);
        let gnorm = corr.norm(2, m.d())?.max(1.0);
        let floor = 2.0 * gnorm * quad * trace_norm(&limit) + roundoff_floor(p.eps, p.order, 2, norm0) * gnorm;
        Ok(vec![
            record(p.eps, p.t, "correlation_propagation", value, floor, p.order),
            record(p.eps, p.t, "correlation_propagation_tail", e2 * f2.tail(), floor, p.order),
        ])
    });
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(finish(out))
}

/// Group Duhamel measurements at one ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Row {
    pub epsilon: f64,
    /// `‖𝒢_s(−t)f − ∏𝒢_1(−t)f‖₁`.
    pub distance: f64,
    /// `ε t s(s−1) ‖Φ‖ ‖f‖₁`.
    pub bound: f64,
    /// Duhamel identity residual in trace norm.
    pub duhamel_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub rows: Vec<Lemma1Row>,
    pub bound_holds: bool,
    /// Distances strictly decrease along the ε list.
    pub decreasing: bool,
    /// Largest consecutive distance ratio rescaled to a halving of ε (≈ 0.5 for a linear law).
    pub worst_halving_ratio: f64,
    pub max_residual: f64,
}

/// `ε ∫_0^t ∏𝒢_1(−t+τ)(−Σ_{i<j}𝒩_int(i,j)) 𝒢_s(−τ) f dτ` by Gauss–Legendre.
pub fn group_duhamel_integral(model: &Model, t: f64, f: &DensityOp, nodes: usize) -> Result<DensityOp> {
    let s = f.n();
    let d = f.d();
    let diag = model.spec().interaction_diag(s);
    let mut acc = CMatrix::zeros(pow(d, s), pow(d, s));
    for (tau, w) in mapped(nodes, 0.0, t) {
        let inner = model.evolve(tau, f)?;
        let ins = crate::tensor::minus_i_commutator_diag(&diag, inner.matrix());
        let u = model.free_propagator(s, t - tau);
        acc += (&u * ins * u.adjoint()) * C64::new(w, 0.0);
    }
    Ok(DensityOp::from_parts(s, d, acc).scale(model.epsilon()))
}

pub fn lemma1_check(
    model: &Model,
    t: f64,
    f: &DensityOp,
    epsilons: &[f64],
    nodes: usize,
) -> Result<Lemma1Report> {
    let s = f.n();
    if s > 3 {
        return Err(KineticError::Capacity("group Duhamel check supports s <= 3".into()));
    }
    let mut rows = Vec::new();
    for &eps in epsilons {
        let m = model.with_epsilon(eps)?;
        let diff = m.evolve(t, f)?.sub(&m.evolve_free(t, f)?)?;
        let distance = trace_norm(&diff);
        let bound = eps * t.abs() * (s * (s.saturating_sub(1))) as f64 * m.spec().phi_norm() * trace_norm(f);
        let integral = group_duhamel_integral(&m, t, f, nodes)?;
        let duhamel_residual = trace_norm(&diff.sub(&integral)?);
        rows.push(Lemma1Row { epsilon: eps, distance, bound, duhamel_residual });
    }
    let bound_holds = rows.iter().all(|r| r.distance <= r.bound * (1.0 + 1e-12) + 1e-15);
    let worst_halving_ratio = rows
        .windows(2)
        .filter(|w| w[0].distance > 0.0)
        .map(|w| 0.5 * (w[1].distance / w[0].distance) * (w[0].epsilon / w[1].epsilon))
        .fold(0.0, f64::max);
    let decreasing = rows.windows(2).all(|w| w[1].distance < w[0].distance);
    let max_residual = rows.iter().map(|r| r.duhamel_residual).fold(0.0, f64::max);
    Ok(Lemma1Report { rows, bound_holds, decreasing, worst_halving_ratio, max_residual })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Row {
    pub epsilon: f64,
    /// `‖ε^{-n}(1/n!) Tr 𝔄_{1+n} f − free chain‖₁`.
    pub limit_residual: f64,
    /// `‖(1/n!) Tr 𝔄_{1+n} f − ε^n · interacting chain‖₁` (exact identity for `n ≤ 1`).
    pub duhamel_residual: f64,
    /// `‖(1/n!) Tr 𝔄_{1+n} f‖₁`.
    pub cumulant_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Report {
    pub s: usize,
    pub n: usize,
    pub rows: Vec<Lemma2Row>,
    /// Log-log slope of `limit_residual` against ε.
    pub slope: Option<f64>,
}

/// Compares traced cumulants with the free-flow and interacting Duhamel chains.
pub fn lemma2_check(
    model: &Model,
    s: usize,
    t: f64,
    f: &DensityOp,
    epsilons: &[f64],
    nodes: usize,
) -> Result<Lemma2Report> {
    let n = f.n().checked_sub(s).ok_or_else(|| KineticError::Dimension("s exceeds particle count".into()))?;
    if f.n() > 4 || n > 2 {
        return Err(KineticError::Capacity("cumulant Duhamel check supports s + n <= 4, n <= 2".into()));
    }
    let mut rows = Vec::new();
    for &eps in epsilons {
        let m = model.with_epsilon(eps)?;
        let cum = partial_trace(&group_cumulant(&m, t, s, f)?, s)?.scale(1.0 / factorial(n));
        let free = duhamel_chain(&m, s, n, t, f, Flow::Free, nodes, Exec::Sequential)?;
        let inter = duhamel_chain(&m, s, n, t, f, Flow::Interacting, nodes, Exec::Sequential)?;
        let scale = eps.powi(n as i32);
        rows.push(Lemma2Row {
            epsilon: eps,
            limit_residual: trace_norm(&cum.scale(1.0 / scale).sub(&free)?),
            duhamel_residual: trace_norm(&cum.sub(&inter.scale(scale))?),
            cumulant_norm: trace_norm(&cum),
        });
    }
    let recs: Vec<SweepRecord> = rows
        .iter()
        .map(|r| record(r.epsilon, t, "lemma2", r.limit_residual, 0.0, n))
        .collect();
    let refs: Vec<&SweepRecord> = recs.iter().collect();
    let slope = fit_rate(&refs).ok().map(|f| f.slope);
    Ok(Lemma2Report { s, n, rows, slope })
}

/// Residual of the kinetic equation along the truncated solution series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub order: usize,
    /// `‖d/dt F_1 − (−𝒩F_1 + collision integral)‖₁ / ‖collision integral‖₁`.
    pub relative_residual: f64,
    pub collision_norm: f64,
}

/// Five-point central difference of the solution series against the kinetic equation.
///
/// The state is carried in the interaction picture `𝒢_1(t)F_1(t) − F_1^0`, which has
/// the same residual in trace norm and keeps the free streaming out of the stencil.
/// The solution series runs one order above the collision integral so both sides
/// carry the same powers of `F_1^0`.
pub fn gqke_consistency(
    model: &Model,
    f1_0: &DensityOp,
    t: f64,
    order: usize,
    h: f64,
    opts: &SeriesOptions,
) -> Result<ConsistencyRow> {
    let m_series = (order + 1).min(3);
    let connected = |tau: f64| -> Result<DensityOp> {
        let sv = solution_series(model, f1_0, tau, m_series, opts)?;
        let mut acc = DensityOp::zeros(1, f1_0.d());
        for term in &sv.terms[1..] {
            acc = acc.add(&model.evolve(-tau, term)?)?;
        }
        Ok(acc)
    };
    let stencil = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
    let mut deriv = DensityOp::zeros(1, f1_0.d());
    for (k, w) in stencil {
        deriv = deriv.add(&connected(t + k * h)?.scale(w / h))?;
    }
    let f1 = solution_series(model, f1_0, t, m_series, opts)?.value;
    let ci = collision_integral(model, &f1, t, order, opts)?.value;
    let target = model.evolve(-t, &ci)?;
    let collision_norm = trace_norm(&ci);
    let residual = trace_norm(&deriv.sub(&target)?);
    let relative_residual = if collision_norm > 0.0 { residual / collision_norm } else { residual };
    Ok(ConsistencyRow { order, relative_residual, collision_norm })
}

/// `‖F_s(t | F_1(t)) − F_s^{hierarchy}(t)‖₁` with both sides built from `F_1^0`.
pub fn functional_consistency(
    model: &Model,
    s: usize,
    f1_0: &DensityOp,
    t: f64,
    order: usize,
    opts: &SeriesOptions,
) -> Result<f64> {
    let f1 = solution_series(model, f1_0, t, 3, opts)?.value;
    let fun = marginal_functional(model, s, &f1, t, order, opts)?.value;
    let reference = group_series(model, s, f1_0, t, (5 - s).min(3), opts)?.value;
    Ok(trace_norm(&fun.sub(&reference)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Kinetic, ModelSpec};
    use crate::states::random_state;

    fn rec(eps: f64, value: f64) -> SweepRecord {
        record(eps, 0.1, "m", value, 0.0, 1)
    }

    #[test]
    fn fit_rate_cases() {
        let lin: Vec<SweepRecord> = [0.3, 0.1, 0.03].iter().map(|&e| rec(e, 2.0 * e)).collect();
        let f = fit_rate(&lin.iter().collect::<Vec<_>>()).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        let flat: Vec<SweepRecord> = [0.3, 0.1, 0.03].iter().map(|&e| rec(e, 0.5)).collect();
        assert!(fit_rate(&flat.iter().collect::<Vec<_>>()).unwrap().slope.abs() < 1e-12);
        let two: Vec<SweepRecord> = [0.3, 0.1].iter().map(|&e| rec(e, e)).collect();
        assert!(matches!(
            fit_rate(&two.iter().collect::<Vec<_>>()),
            Err(KineticError::InsufficientData(_))
        ));
        let mut floored = lin.clone();
        floored[2].tail_floor = 1.0;
        assert!(fit_rate(&floored.iter().collect::<Vec<_>>()).is_err());
    }

    #[test]
    fn csv_format() {
        let csv = records_to_csv(&[rec(0.1, 0.25)]);
        assert_eq!(csv, "epsilon,t,metric,value,tail_floor,order\n0.1,0.1,m,2.5e-1,0e0,1\n");
    }

    #[test]
    fn plan_validation() {
        let m = Model::new(ModelSpec::new(2, Kinetic::Laplacian, vec![1.0, 0.0], 1.0).unwrap()).unwrap();
        let f = random_state(1, 2, 1, 0.5);
        let mut plan = SweepPlan {
            epsilons: vec![0.3, 0.1],
            times: vec![0.4],
            orders: vec![1],
            nodes: 16,
            corr: None,
            force: false,
            exec: Exec::Sequential,
        };
        assert!(plan.validate(&m, &f).is_ok());
        plan.times = vec![1.5];
        assert!(plan.validate(&m, &f).is_err());
        plan.force = true;
        assert!(plan.validate(&m, &f).is_ok());
        plan.epsilons = vec![0.1, 0.3];
        assert!(plan.validate(&m, &f).is_err());
    }

    #[test]
    fn lemma1_free_is_zero() {
        let m = Model::new(ModelSpec::new(2, Kinetic::Laplacian, vec![0.0, 0.0], 1.0).unwrap()).unwrap();
        let f = random_state(2, 2, 2, 1.0);
        let r = lemma1_check(&m, 0.7, &f, &[0.5, 0.1], 32).unwrap();
        assert!(r.rows.iter().all(|x| x.distance < 1e-14 && x.duhamel_residual < 1e-14));
    }
}
