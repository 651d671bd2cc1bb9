//! Cumulants of evolution groups, scattering cumulants and generated evolution operators.
//!
//! Operands live on `H_N`; the cluster `Y` always occupies positions `0..s` and the
//! remaining particles follow in order. Superoperators are applied as sums of
//! conjugations by block-diagonal unitaries and never materialized.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    cumulant_coefficient, enumerate_compositions, enumerate_dissections, set_partitions,
    DissectionReading, MAX_ORDER,
};
use crate::error::{dim_err, KineticError, Result};
use crate::exec::Exec;
use crate::lattice::{kron_power_matrix, Model};
use crate::tensor::{embed, pow, CMatrix, DensityOp, C64};

/// Initial correlation operators `g_k` on `H_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationFamily {
    /// `g_k = I` for every `k`.
    Identity,
    /// `g_k = ∏_{i<j} c(i,j)` with `c(i,j)` diagonal, entry `c[dist(q_i, q_j)]`.
    PairProduct { d: usize, c: Vec<f64> },
    /// Explicit operators; sizes not listed are an error, except `g_1 = I`.
    Explicit { d: usize, ops: BTreeMap<usize, CMatrix> },
}

impl CorrelationFamily {
    pub fn pair_product(d: usize, c: Vec<f64>) -> Result<Self> {
        if c.len() != d / 2 + 1 {
            return Err(KineticError::Config(format!(
                "pair correlation needs {} entries, got {}",
                d / 2 + 1,
                c.len()
            )));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(KineticError::Config("pair correlation entries must be finite".into()));
        }
        Ok(Self::PairProduct { d, c })
    }

    pub fn explicit(d: usize, ops: BTreeMap<usize, CMatrix>) -> Result<Self> {
        for (&k, m) in &ops {
            let rows = pow(d, k);
            if m.nrows() != rows || m.ncols() != rows {
                return dim_err(format!("g_{k} must be {rows}x{rows}"));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(KineticError::Config(format!("g_{k} has non-finite entries")));
            }
        }
        Ok(Self::Explicit { d, ops })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity)
    }

    /// `g_k` as a `d^k × d^k` matrix.
    pub fn operator(&self, k: usize, d: usize) -> Result<CMatrix> {
        let rows = pow(d, k);
        match self {
            Self::Identity => Ok(CMatrix::identity(rows, rows)),
            Self::PairProduct { d: dd, c } => {
                if *dd != d {
                    return dim_err(format!("correlation family has d={dd}, model has d={d}"));
                }
                let mut diag = vec![1.0; rows];
                for (idx, v) in diag.iter_mut().enumerate() {
                    let digits: Vec<usize> = (0..k).map(|p| (idx / pow(d, k - 1 - p)) % d).collect();
                    for i in 0..k {
                        for j in i + 1..k {
                            let r = digits[i].abs_diff(digits[j]);
                            *v *= c[r.min(d - r)];
                        }
                    }
                }
                let v = nalgebra::DVector::from_iterator(rows, diag.into_iter().map(|x| C64::new(x, 0.0)));
                Ok(CMatrix::from_diagonal(&v))
            }
            Self::Explicit { d: dd, ops } => {
                if *dd != d {
                    return dim_err(format!("correlation family has d={dd}, model has d={d}"));
                }
                match ops.get(&k) {
                    Some(m) => Ok(m.clone()),
                    None if k == 1 => Ok(CMatrix::identity(rows, rows)),
                    None => Err(KineticError::Config(format!("correlation operator g_{k} is not defined"))),
                }
            }
        }
    }

    /// Operator norm of `g_k`.
    pub fn norm(&self, k: usize, d: usize) -> Result<f64> {
        let g = self.operator(k, d)?;
        Ok(g.svd(false, false).singular_values.iter().fold(0.0, |m: f64, &x| m.max(x)))
    }

    /// `(e^{−itK})^{⊗k} g_k (e^{itK})^{⊗k}`, the freely propagated correlation.
    pub fn free_conjugated(&self, model: &Model, k: usize, t: f64) -> Result<CMatrix> {
        let g = self.operator(k, model.d())?;
        let u = model.free_propagator(k, t);
        Ok(&u * g * u.adjoint())
    }
}

/// Which cumulant a partition sum is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CumulantKind {
    /// Blocks evolve with `𝒢(−t)`.
    Group,
    /// Blocks evolve with `Ĝ(t)`.
    Scattering,
    /// Group cumulant applied after free backward flow and left multiplication by `g`.
    Correlated,
}

/// Order in which the dissection levels of a composition act.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelOrder {
    /// Level `j = 1` acts first, the leading cumulant last.
    #[default]
    FirstLevelInnermost,
    /// Level `j = k` acts first, the leading cumulant last.
    LastLevelInnermost,
}

/// Options for [`generated_evolution`].
#[derive(Debug, Clone, Copy, Default)]
pub struct GenOptions<'a> {
    /// `Some` selects the correlated operators built from `𝔄̆`.
    pub corr: Option<&'a CorrelationFamily>,
    /// Declusterize the leading cumulant (correlation functionals).
    pub theta: bool,
    pub reading: DissectionReading,
    pub order: LevelOrder,
    pub exec: Exec,
}

/// Precomputed block unitaries for a fixed model, time and particle count.
pub struct CumulantEngine<'a> {
    model: &'a Model,
    n_total: usize,
    exec: Exec,
    corr: Option<&'a CorrelationFamily>,
    free: bool,
    /// `e^{−itH_m}` for `m = 0..=n_total`.
    group_u: Vec<CMatrix>,
    /// `e^{−itH_m}(e^{itK})^{⊗m}`.
    scat_w: Vec<CMatrix>,
    /// `e^{itK}`.
    back1: CMatrix,
}

impl<'a> CumulantEngine<'a> {
    pub fn new(
        model: &'a Model,
        t: f64,
        n_total: usize,
        corr: Option<&'a CorrelationFamily>,
        exec: Exec,
    ) -> Result<Self> {
        model.check_capacity(n_total)?;
        let d = model.d();
        let mut group_u = vec![CMatrix::identity(1, 1)];
        let mut scat_w = vec![CMatrix::identity(1, 1)];
        let back1 = model.free_propagator_1(-t);
        for m in 1..=n_total {
            let u = model.propagator(m, t)?;
            let w = if m == 1 || model.spec().is_free() {
                CMatrix::identity(pow(d, m), pow(d, m))
            } else {
                &u * kron_power_matrix(&back1, m)
            };
            group_u.push(u);
            scat_w.push(w);
        }
        Ok(Self { model, n_total, exec, corr, free: model.spec().is_free(), group_u, scat_w, back1 })
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    fn check(&self, f: &DensityOp) -> Result<()> {
        if f.n() != self.n_total || f.d() != self.model.d() {
            return dim_err(format!(
                "operand on (n={}, d={}), engine on (n={}, d={})",
                f.n(),
                f.d(),
                self.n_total,
                self.model.d()
            ));
        }
        Ok(())
    }

    /// Partition sum over `elements`, each a list of particle positions
    /// (a cluster is one element with several positions).
    pub fn cumulant(&self, kind: CumulantKind, elements: &[Vec<usize>], f: &CMatrix) -> Result<CMatrix> {
        let d = self.model.d();
        let n = self.n_total;
        let labels: Vec<usize> = elements.iter().flatten().copied().collect();
        if labels.iter().any(|&p| p >= n) {
            return dim_err(format!("particle label out of range for n = {n}"));
        }
        if elements.len() > MAX_ORDER + 1 {
            return Err(KineticError::Capacity(format!(
                "cumulant order {} exceeds cap {}",
                elements.len() - 1,
                MAX_ORDER
            )));
        }
        let rows = f.nrows();
        // free groups factorize, so every connected part vanishes
        if self.free && elements.len() > 1 {
            return Ok(CMatrix::zeros(rows, rows));
        }
        let pre;
        let (operand, units) = match kind {
            CumulantKind::Group => (f, &self.group_u),
            CumulantKind::Scattering => (f, &self.scat_w),
            CumulantKind::Correlated => {
                let corr = self
                    .corr
                    .ok_or_else(|| KineticError::Config("correlated cumulant needs g".into()))?;
                let k = labels.len();
                let b = embed(&kron_power_matrix(&self.back1, k), &labels, n, d);
                let mut x = &b * f * b.adjoint();
                if !corr.is_identity() {
                    x = embed(&corr.operator(k, d)?, &labels, n, d) * x;
                }
                pre = x;
                (&pre, &self.group_u)
            }
        };
        let partitions = set_partitions(elements.len());
        let terms = self.exec.map(&partitions, |p| {
            let mut positions = Vec::with_capacity(labels.len());
            let mut op = CMatrix::identity(1, 1);
            for block in &p.blocks {
                let block_labels: Vec<usize> =
                    block.iter().flat_map(|&e| elements[e].iter().copied()).collect();
                op = op.kronecker(&units[block_labels.len()]);
                positions.extend(block_labels);
            }
            let u = embed(&op, &positions, n, d);
            (&u * operand * u.adjoint()) * C64::new(cumulant_coefficient(p) as f64, 0.0)
        });
        let mut acc = CMatrix::zeros(rows, rows);
        for t in terms {
            acc += t;
        }
        Ok(acc)
    }

    fn block_kind(&self, correlated: bool) -> CumulantKind {
        if correlated {
            CumulantKind::Correlated
        } else {
            CumulantKind::Scattering
        }
    }

    /// `𝔙_{1+n}` (or `𝔊_{1+n}`) with cluster `0..s` applied to `f` on `H_{s+n}`.
    pub fn generated(&self, s: usize, f: &DensityOp, opts: &GenOptions) -> Result<DensityOp> {
        self.check(f)?;
        if s == 0 || s > self.n_total {
            return dim_err(format!("cluster size {s} invalid for n = {}", self.n_total));
        }
        let n = self.n_total - s;
        let correlated = opts.corr.is_some();
        let kind = self.block_kind(correlated);
        let comps = enumerate_compositions(n)?;
        let terms: Vec<Result<CMatrix>> = self.exec.map(&comps, |comp| {
            let mut sums = Vec::with_capacity(comp.k());
            let mut sigma = 0usize;
            for &part in &comp.parts {
                let hi = s + n - sigma;
                sigma += part;
                let lo = s + n - sigma;
                sums.push(((lo..hi).collect::<Vec<usize>>(), lo));
            }
            if opts.order == LevelOrder::LastLevelInnermost {
                sums.reverse();
            }
            let mut x = f.matrix().clone();
            for (z, range) in &sums {
                x = self.level(kind, z, *range, &x, opts.reading)?;
                if x.iter().all(|v| *v == C64::new(0.0, 0.0)) {
                    return Ok(x);
                }
            }
            let m = comp.remainder(n);
            let elements: Vec<Vec<usize>> = if opts.theta {
                (0..s + m).map(|p| vec![p]).collect()
            } else {
                std::iter::once((0..s).collect()).chain((s..s + m).map(|p| vec![p])).collect()
            };
            let lead = self.cumulant(kind, &elements, &x)?;
            Ok(lead * C64::new(comp.sign as f64 * comp.factor, 0.0))
        });
        let rows = f.dim();
        let mut acc = CMatrix::zeros(rows, rows);
        for t in terms {
            acc += t?;
        }
        Ok(DensityOp::from_parts(f.n(), f.d(), acc))
    }

    /// One dissection level: `Σ_D 1/|D|! Σ_{i distinct} ∏_X 1/|X|! 𝔄̂_{1+|X|}(i_X, X)`.
    fn level(
        &self,
        kind: CumulantKind,
        z: &[usize],
        range: usize,
        x: &CMatrix,
        reading: DissectionReading,
    ) -> Result<CMatrix> {
        let ds = enumerate_dissections(z, range, range, reading)?;
        let terms: Vec<Result<CMatrix>> = self.exec.map(&ds, |dis| {
            let mut y = x.clone();
            for (block, &i) in dis.blocks.iter().zip(&dis.attach) {
                let elements: Vec<Vec<usize>> =
                    std::iter::once(vec![i]).chain(block.iter().map(|&p| vec![p])).collect();
                y = self.cumulant(kind, &elements, &y)?;
            }
            Ok(y * C64::new(dis.weight, 0.0))
        });
        let mut acc = CMatrix::zeros(x.nrows(), x.ncols());
        for t in terms {
            acc += t?;
        }
        Ok(acc)
    }
}

fn standard_elements(s: usize, n: usize) -> Vec<Vec<usize>> {
    std::iter::once((0..s).collect()).chain((s..s + n).map(|p| vec![p])).collect()
}

fn run_cumulant(
    model: &Model,
    t: f64,
    s: usize,
    f: &DensityOp,
    kind: CumulantKind,
    corr: Option<&CorrelationFamily>,
) -> Result<DensityOp> {
    model.check_operand(f)?;
    if s == 0 || s > f.n() {
        return dim_err(format!("cluster size {s} invalid for n = {}", f.n()));
    }
    let engine = CumulantEngine::new(model, t, f.n(), corr, Exec::default())?;
    let out = engine.cumulant(kind, &standard_elements(s, f.n() - s), f.matrix())?;
    Ok(DensityOp::from_parts(f.n(), f.d(), out))
}

/// `𝔄_{1+n}(t, {Y}, s+1, …, s+n) f` with `|Y| = s` and `n = f.n() − s`.
pub fn group_cumulant(model: &Model, t: f64, s: usize, f: &DensityOp) -> Result<DensityOp> {
    run_cumulant(model, t, s, f, CumulantKind::Group, None)
}

/// `𝔄̂_{1+n}(t, {Y}, s+1, …, s+n) f`.
pub fn scattering_cumulant(model: &Model, t: f64, s: usize, f: &DensityOp) -> Result<DensityOp> {
    run_cumulant(model, t, s, f, CumulantKind::Scattering, None)
}

/// `𝔄̆_{1+n}(t, {Y}, s+1, …, s+n) f`.
pub fn correlated_scattering_cumulant(
    model: &Model,
    t: f64,
    s: usize,
    corr: &CorrelationFamily,
    f: &DensityOp,
) -> Result<DensityOp> {
    run_cumulant(model, t, s, f, CumulantKind::Correlated, Some(corr))
}

/// `𝔙_{1+n}(t, {Y}, X∖Y) f` (or its correlated/declusterized forms) with `|Y| = s`.
pub fn generated_evolution(
    model: &Model,
    t: f64,
    s: usize,
    f: &DensityOp,
    opts: &GenOptions,
) -> Result<DensityOp> {
    model.check_operand(f)?;
    let engine = CumulantEngine::new(model, t, f.n(), opts.corr, opts.exec)?;
    engine.generated(s, f, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Kinetic, ModelSpec};
    use crate::states::{random_hermitian, random_state};
    use crate::tensor::{kron, trace_norm};

    fn model(phi: Vec<f64>, eps: f64) -> Model {
        Model::new(ModelSpec::new(2, Kinetic::Laplacian, phi, eps).unwrap()).unwrap()
    }

    fn diff(a: &DensityOp, b: &DensityOp) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    fn conj(u: &CMatrix, f: &DensityOp) -> DensityOp {
        DensityOp::from_parts(f.n(), f.d(), u * f.matrix() * u.adjoint())
    }

    #[test]
    fn group_cumulant_low_orders() {
        let m = model(vec![1.0, 0.3], 1.0);
        let t = 0.8;
        let f2 = random_hermitian(2, 2, 1);
        assert!(diff(&group_cumulant(&m, t, 2, &f2).unwrap(), &m.evolve(t, &f2).unwrap()) < 1e-13);

        let f3 = random_hermitian(3, 2, 2);
        let got = group_cumulant(&m, t, 2, &f3).unwrap();
        let split = m.propagator(2, t).unwrap().kronecker(&m.propagator(1, t).unwrap());
        let want = m.evolve(t, &f3).unwrap().sub(&conj(&split, &f3)).unwrap();
        assert!(diff(&got, &want) < 1e-12);

        assert!(group_cumulant(&m, 0.0, 1, &f3).unwrap().max_abs() < 1e-14);
        let free = model(vec![0.0, 0.0], 1.0);
        assert!(group_cumulant(&free, t, 2, &f3).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn scattering_cumulant_low_orders() {
        let m = model(vec![1.0, 0.3], 0.7);
        let t = 1.1;
        let f3 = random_hermitian(3, 2, 3);
        let got = scattering_cumulant(&m, t, 2, &f3).unwrap();
        let want = m.scattering_op(t, &f3).unwrap().sub(&{
            let w = m.scattering_unitary(2, t).unwrap().kronecker(&CMatrix::identity(2, 2));
            conj(&w, &f3)
        });
        assert!(diff(&got, &want.unwrap()) < 1e-12);
        assert!(scattering_cumulant(&m, 0.0, 2, &f3).unwrap().max_abs() < 1e-14);
        let free = model(vec![0.0, 0.0], 1.0);
        let f2 = random_hermitian(2, 2, 4);
        assert_eq!(scattering_cumulant(&free, t, 2, &f2).unwrap(), f2);
        assert!(scattering_cumulant(&free, t, 1, &f3).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn correlated_cumulant_with_identity_is_scattering() {
        let m = model(vec![1.0, -0.4], 0.6);
        let f3 = random_hermitian(3, 2, 5);
        let a = correlated_scattering_cumulant(&m, 0.9, 1, &CorrelationFamily::Identity, &f3).unwrap();
        let b = scattering_cumulant(&m, 0.9, 1, &f3).unwrap();
        assert!(diff(&a, &b) < 1e-12);
    }

    #[test]
    fn correlated_cumulant_direct_composition() {
        let m = model(vec![1.0, 0.2], 0.5);
        let t = 0.7;
        let g = CorrelationFamily::pair_product(2, vec![1.3, 0.8]).unwrap();
        let f2 = random_hermitian(2, 2, 6);
        let got = correlated_scattering_cumulant(&m, t, 2, &g, &f2).unwrap();
        let back = m.free_propagator(2, -t);
        let inner = conj(&back, &f2);
        let gm = g.operator(2, 2).unwrap();
        assert!((gm[(0, 0)].re - 1.3).abs() < 1e-15 && (gm[(1, 1)].re - 0.8).abs() < 1e-15);
        let tilted = DensityOp::from_parts(2, 2, &gm * inner.matrix());
        let want = m.evolve(t, &tilted).unwrap();
        assert!(diff(&got, &want) < 1e-12);
        let missing = CorrelationFamily::explicit(2, BTreeMap::new()).unwrap();
        assert!(matches!(
            correlated_scattering_cumulant(&m, t, 2, &missing, &f2),
            Err(KineticError::Config(_))
        ));
    }

    #[test]
    fn cumulant_inversion_reconstructs_group() {
        // Σ_P ∏_blocks 𝔄_{|block|} rebuilds 𝒢_{s+n}(−t): check through the two-element
        // relation 𝒢_{s+1} = 𝔄_2 + 𝒢_s𝒢_1 on random input.
        let m = model(vec![0.9, 0.4], 0.8);
        let f = random_hermitian(3, 2, 7);
        let a2 = group_cumulant(&m, 0.6, 2, &f).unwrap();
        let split = m.propagator(2, 0.6).unwrap().kronecker(&m.propagator(1, 0.6).unwrap());
        let rebuilt = a2.add(&conj(&split, &f)).unwrap();
        assert!(diff(&rebuilt, &m.evolve(0.6, &f).unwrap()) < 1e-12);
    }

    #[test]
    fn generated_low_order_identities() {
        let m = model(vec![1.0, 0.3], 0.9);
        let t = 0.75;
        let opts = GenOptions::default();
        let f2 = random_hermitian(2, 2, 8);
        let v1 = generated_evolution(&m, t, 2, &f2, &opts).unwrap();
        assert!(diff(&v1, &scattering_cumulant(&m, t, 2, &f2).unwrap()) < 1e-13);

        // 𝔙_2 = 𝔄̂_2(Y, s+1) − 𝔄̂_1(Y) Σ_i 𝔄̂_2(i, s+1)
        let f3 = random_hermitian(3, 2, 9);
        let v2 = generated_evolution(&m, t, 2, &f3, &opts).unwrap();
        let engine = CumulantEngine::new(&m, t, 3, None, Exec::Sequential).unwrap();
        let k = CumulantKind::Scattering;
        let mut inner = CMatrix::zeros(8, 8);
        for i in 0..2 {
            inner += engine.cumulant(k, &[vec![i], vec![2]], f3.matrix()).unwrap();
        }
        let outer = engine.cumulant(k, &[vec![0, 1]], &inner).unwrap();
        let want = engine.cumulant(k, &[vec![0, 1], vec![2]], f3.matrix()).unwrap() - outer;
        assert!((v2.matrix() - want).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-13);

        // θ-on, s = 2, n = 0: Ĝ_2 − I
        let th = GenOptions { theta: true, ..Default::default() };
        let c1 = generated_evolution(&m, t, 2, &f2, &th).unwrap();
        let want = m.scattering_op(t, &f2).unwrap().sub(&f2).unwrap();
        assert!(diff(&c1, &want) < 1e-13);
    }

    #[test]
    fn generated_free_limits() {
        let free = model(vec![0.0, 0.0], 1.0);
        let f2 = random_hermitian(2, 2, 10);
        let opts = GenOptions::default();
        assert!(diff(&generated_evolution(&free, 1.3, 2, &f2, &opts).unwrap(), &f2) < 1e-12);
        for n in 1..=2 {
            let f = random_hermitian(2 + n, 2, 11 + n as u64);
            assert!(generated_evolution(&free, 1.3, 2, &f, &opts).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn correlated_generated_with_identity_matches_plain() {
        let m = model(vec![1.0, 0.5], 0.4);
        let f = random_hermitian(4, 2, 12);
        let id = CorrelationFamily::Identity;
        for theta in [false, true] {
            let plain = GenOptions { theta, ..Default::default() };
            let corr = GenOptions { theta, corr: Some(&id), ..Default::default() };
            let a = generated_evolution(&m, 0.6, 2, &f, &plain).unwrap();
            let b = generated_evolution(&m, 0.6, 2, &f, &corr).unwrap();
            assert!(diff(&a, &b) < 1e-10);
        }
    }

    #[test]
    fn generated_preserves_hermiticity() {
        let m = model(vec![1.0, 0.5], 0.4);
        let a = random_state(1, 2, 13, 1.0);
        let f = kron(&kron(&kron(&a, &a).unwrap(), &a).unwrap(), &a).unwrap();
        let v = generated_evolution(&m, 0.6, 2, &f, &GenOptions::default()).unwrap();
        assert!(v.is_hermitian(1e-12));
        let th = GenOptions { theta: true, ..Default::default() };
        assert!(generated_evolution(&m, 0.6, 2, &f, &th).unwrap().is_hermitian(1e-12));
        assert!(trace_norm(&v).is_finite());
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let m = model(vec![1.0, 0.5], 0.4);
        let f = random_hermitian(4, 2, 14);
        let seq = GenOptions { exec: Exec::Sequential, ..Default::default() };
        let par = GenOptions { exec: Exec::Parallel, ..Default::default() };
        let a = generated_evolution(&m, 0.6, 1, &f, &seq).unwrap();
        let b = generated_evolution(&m, 0.6, 1, &f, &par).unwrap();
        assert_eq!(a, b);
    }
}
