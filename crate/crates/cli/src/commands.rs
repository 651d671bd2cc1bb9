//! `verify`, `sweep` and `evolve`.

use std::fmt::Write as _;
use std::path::Path;

use qkinetic_core::cumulant::{generated_evolution, CorrelationFamily, CumulantEngine, CumulantKind, GenOptions};
use qkinetic_core::combinatorics::set_partitions;
use qkinetic_core::gqke::{solution_series, threshold, NormRole, SeriesOptions};
use qkinetic_core::lab::{
    correlation_propagation_sweep, gqke_consistency, lemma1_check, lemma2_check, records_to_csv, summarize,
    theorem1_sweep, theorem2_sweep, MetricSummary, SweepPlan, SweepRecord,
};
use qkinetic_core::lattice::{Model, ModelSpec};
use qkinetic_core::states::random_hermitian;
use qkinetic_core::tensor::{kron, partial_trace, trace_norm, CMatrix, DensityOp};
use qkinetic_core::vlasov::{
    duhamel_series, hartree_evolve, integrate_vlasov, purity, t0_bound, vlasov_energy,
};
use qkinetic_core::{Exec, KineticError, Result};

use crate::config::{RunConfig, SweepKind};

/// Outcome of a command: the exit code and the files to write.
pub struct Outcome {
    pub pass: bool,
    pub files: Vec<(&'static str, String)>,
    pub report: String,
}

/// One verified invariant.
struct Check {
    module: &'static str,
    invariant: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn at_most(module: &'static str, invariant: &'static str, value: f64, tolerance: f64) -> Self {
        Self { module, invariant, value, tolerance, pass: value <= tolerance }
    }
}

fn rel(a: &DensityOp, b: &DensityOp) -> Result<f64> {
    let scale = trace_norm(b).max(f64::MIN_POSITIVE);
    Ok(trace_norm(&a.sub(b)?) / scale)
}

fn slope_or_zero(errs: &[f64], ratio: f64) -> (f64, bool) {
    if errs.iter().all(|&e| e <= 1e-12) {
        return (0.0, true);
    }
    let s = (errs[0] / errs[errs.len() - 1]).ln() / ratio.ln();
    (s, (s - 1.0).abs() <= 0.1)
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let model = cfg.model()?;
    let f0 = cfg.initial_state()?;
    let d = model.d();
    let t = cfg.experiment.verify_t;
    let mut checks = Vec::new();

    let unit = f0.scale(1.0 / trace_norm(&f0));
    let pair = kron(&unit, &unit)?;
    checks.push(Check::at_most(
        "tensor-core",
        "partial trace of product",
        rel(&partial_trace(&pair, 1)?, &unit)?,
        1e-12,
    ));
    checks.push(Check::at_most(
        "tensor-core",
        "trace norm of product",
        (trace_norm(&pair) - 1.0).abs(),
        1e-12,
    ));

    checks.push(Check::at_most(
        "lattice-model",
        "evolution isometry",
        (trace_norm(&model.evolve(t, &pair)?) - 1.0).abs(),
        1e-12,
    ));
    let group = rel(&model.evolve(0.5 * t, &model.evolve(0.5 * t, &pair)?)?, &model.evolve(t, &pair)?)?;
    checks.push(Check::at_most("lattice-model", "group law", group, 1e-12));
    let gen = model.liouvillian(&pair)?;
    let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&h| -> Result<f64> {
            let fd = model.evolve(h, &pair)?.sub(&pair)?.scale(1.0 / h);
            Ok(trace_norm(&fd.sub(&gen)?))
        })
        .collect::<Result<_>>()?;
    let (slope, ok) = slope_or_zero(&errs, 4.0);
    checks.push(Check {
        module: "lattice-model",
        invariant: "generator difference slope",
        value: slope,
        tolerance: 0.1,
        pass: ok,
    });

    let f3 = random_hermitian(3, d, 1);
    let engine = CumulantEngine::new(&model, t, 3, None, Exec::Parallel)?;
    let elements: Vec<Vec<usize>> = vec![vec![0], vec![1], vec![2]];
    let mut rebuilt = CMatrix::zeros(f3.dim(), f3.dim());
    for p in set_partitions(3) {
        let mut x = f3.matrix().clone();
        for block in &p.blocks {
            let els: Vec<Vec<usize>> = block.iter().map(|&e| elements[e].clone()).collect();
            x = engine.cumulant(CumulantKind::Group, &els, &x)?;
        }
        rebuilt += x;
    }
    let inv = (rebuilt - model.evolve(t, &f3)?.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    checks.push(Check::at_most("cumulant-engine", "cumulant inversion", inv, 1e-10));
    let f2 = random_hermitian(2, d, 2);
    let th = GenOptions { theta: true, ..Default::default() };
    let want = model.scattering_op(t, &f2)?.sub(&f2)?;
    let got = generated_evolution(&model, t, 2, &f2, &th)?;
    checks.push(Check::at_most("cumulant-engine", "declusterized first order", got.sub(&want)?.max_abs(), 1e-10));

    let epsilons = [0.4, 0.2, 0.1, 0.05];
    let l1 = lemma1_check(&model, t, &pair, &epsilons, 32)?;
    let all_zero = l1.rows.iter().all(|r| r.distance <= 1e-12);
    checks.push(Check::at_most("meanfield-lab", "group Duhamel residual", l1.max_residual, 1e-8));
    checks.push(Check {
        module: "meanfield-lab",
        invariant: "group distance bound",
        value: l1.rows.iter().map(|r| r.distance / r.bound.max(f64::MIN_POSITIVE)).fold(0.0, f64::max),
        tolerance: 1.0,
        pass: l1.bound_holds,
    });
    checks.push(Check {
        module: "meanfield-lab",
        invariant: "group distance halving ratio",
        value: l1.worst_halving_ratio,
        tolerance: 0.6,
        pass: all_zero || (l1.decreasing && l1.worst_halving_ratio <= 0.6),
    });
    let triple = kron(&pair, &unit)?;
    let dcum = lemma2_check(&model, 2, t, &triple, &[1.0, 0.3, 0.1], 32)?;
    let res = dcum.rows.iter().map(|r| r.duhamel_residual).fold(0.0, f64::max);
    checks.push(Check::at_most("meanfield-lab", "cumulant Duhamel residual", res, 1e-8));
    let l2 = lemma2_check(&model, 2, t, &triple, &[1e-1, 1e-2, 1e-3], 32)?;
    let l2_zero = l2.rows.iter().all(|r| r.limit_residual <= 1e-12);
    checks.push(Check {
        module: "meanfield-lab",
        invariant: "cumulant limit slope",
        value: l2.slope.unwrap_or(0.0),
        tolerance: 0.9,
        pass: l2_zero || l2.slope.is_some_and(|s| s >= 0.9),
    });

    let small = unit.scale(0.9 * threshold(NormRole::Initial));
    let opts = SeriesOptions { corr: None, exec: Exec::Parallel, ..Default::default() };
    let c1 = gqke_consistency(&model, &small, t, 1, 1e-4, &opts)?;
    let c2 = gqke_consistency(&model, &small, t, 2, 1e-4, &opts)?;
    checks.push(Check::at_most("gqke-solver", "kinetic equation residual N=1", c1.relative_residual, 1e-3));
    checks.push(Check::at_most("gqke-solver", "kinetic equation residual N=2", c2.relative_residual, 1e-3));
    checks.push(Check {
        module: "gqke-solver",
        invariant: "residual decreases with N",
        value: c2.relative_residual - c1.relative_residual,
        tolerance: 0.0,
        pass: c2.relative_residual < c1.relative_residual || c1.relative_residual <= 1e-12,
    });

    let mut report = format!("config_hash {}\n", cfg.hash());
    let _ = writeln!(report, "{:<16} {:<32} {:>12} {:>10}  result", "module", "invariant", "value", "tolerance");
    for c in &checks {
        let _ = writeln!(
            report,
            "{:<16} {:<32} {:>12.4e} {:>10.1e}  {}",
            c.module,
            c.invariant,
            c.value,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let pass = checks.iter().all(|c| c.pass);
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
    if !failed.is_empty() {
        let _ = writeln!(report, "failures:");
        for c in failed {
            let _ = writeln!(report, "  {} / {}: {:e} vs {:e}", c.module, c.invariant, c.value, c.tolerance);
        }
    }
    Ok(Outcome { pass, files: vec![("summary.txt", report.clone())], report })
}

fn sweep_plan(cfg: &RunConfig, model: &Model, f0: &DensityOp, force: bool, corr: Option<CorrelationFamily>) -> Result<SweepPlan> {
    let times = cfg.times(t0_bound(model, f0))?;
    let plan = SweepPlan {
        epsilons: cfg.experiment.epsilons.clone(),
        times,
        orders: cfg.experiment.orders.clone(),
        nodes: cfg.experiment.nodes,
        corr,
        force,
        exec: Exec::Parallel,
    };
    plan.validate(model, f0)?;
    Ok(plan)
}

fn summary_line(s: &MetricSummary) -> String {
    let fit = match &s.fit {
        Some(f) => format!("slope {:.4} intercept {:.4} points {}", f.slope, f.intercept, f.points),
        None => "slope n/a".to_string(),
    };
    let verdict = if s.exact {
        "exact"
    } else if s.pass {
        "PASS"
    } else {
        "FAIL"
    };
    format!("{} order {} t {} {fit} monotone {} {verdict}", s.metric, s.order, s.t, s.monotone)
}

pub fn sweep(cfg: &RunConfig, force: bool) -> Result<Outcome> {
    let model = cfg.model()?;
    let f0 = cfg.initial_state()?;
    let corr = cfg.correlation()?;
    let mut records: Vec<SweepRecord> = Vec::new();
    if cfg.experiment.sweeps.is_empty() {
        return Err(KineticError::Config("experiment.sweeps is empty".into()));
    }
    for kind in &cfg.experiment.sweeps {
        match kind {
            SweepKind::Theorem1 => {
                let plan = sweep_plan(cfg, &model, &f0, force, corr.clone())?;
                records.extend(theorem1_sweep(&model, &f0, &plan)?);
            }
            SweepKind::Theorem2 => {
                let plan = sweep_plan(cfg, &model, &f0, force, None)?;
                records.extend(theorem2_sweep(&model, &f0, &plan)?);
            }
            SweepKind::Correlation => {
                let g = corr
                    .clone()
                    .ok_or_else(|| KineticError::Config("correlation sweep needs a [correlation] section".into()))?;
                let plan = sweep_plan(cfg, &model, &f0, force, Some(g))?;
                records.extend(correlation_propagation_sweep(&model, &f0, &plan)?);
            }
        }
    }
    let sums = summarize(&records);
    let mut report = format!("config_hash {}\nt0 {}\n", cfg.hash(), t0_bound(&model, &f0));
    for s in &sums {
        let _ = writeln!(report, "{}", summary_line(s));
    }
    let pass = sums.iter().all(|s| s.pass);
    let _ = writeln!(report, "overall {}", if pass { "PASS" } else { "FAIL" });
    Ok(Outcome {
        pass,
        files: vec![("records.csv", records_to_csv(&records)), ("summary.txt", report.clone())],
        report,
    })
}

const TRAJECTORY_HEADER: &str =
    "t,trace,purity,energy,duhamel_distance,kinetic_distance,free_distance,hartree_distance,config_hash";

pub fn evolve(cfg: &RunConfig) -> Result<Outcome> {
    let model = cfg.model()?;
    let f0 = cfg.initial_state()?;
    let corr = cfg.correlation()?;
    let exp = &cfg.experiment;
    if exp.record_every == 0 {
        return Err(KineticError::Config("record_every must be >= 1".into()));
    }
    let order = exp.orders.iter().copied().max().unwrap_or(2).min(3);
    let traj = integrate_vlasov(&model, &f0, exp.t_end, exp.dt, corr.as_ref())?;
    let plain = corr.as_ref().is_none_or(|g| g.is_identity());
    let hartree = match (cfg.pure_vector()?, plain) {
        (Some(psi), true) => {
            let a = f0.trace().re;
            let spec = model.spec();
            let scaled = ModelSpec::new(spec.d, spec.kinetic.clone(), spec.phi.iter().map(|p| p * a).collect(), spec.epsilon)?;
            Some((a, hartree_evolve(&Model::new(scaled)?, &psi, exp.t_end, exp.dt)?))
        }
        _ => None,
    };
    let eps = model.epsilon();
    let sopts = SeriesOptions { corr: corr.as_ref(), exec: Exec::Parallel, ..Default::default() };
    let hash = cfg.hash();
    let last = traj.len() - 1;
    let picks: Vec<usize> = (0..=last).filter(|&k| k % exp.record_every == 0 || k == last).collect();
    let rows = Exec::Parallel.map(&picks, |&k| -> Result<String> {
        let st = &traj[k];
        let f = &st.f1;
        let duhamel = duhamel_series(&model, &f0, st.t, order, exp.nodes.max(8), corr.as_ref(), Exec::Sequential)?;
        let series = solution_series(&model, &f0.scale(1.0 / eps), st.t, order, &sopts)?;
        let free = model.evolve_free(st.t, &f0)?;
        let h = match &hartree {
            Some((a, ws)) => {
                let p = DensityOp::projector(&ws[k].psi)?.scale(*a);
                format!("{:e}", trace_norm(&f.sub(&p)?))
            }
            None => String::new(),
        };
        Ok(format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{},{}",
            st.t,
            f.trace().re,
            purity(f),
            vlasov_energy(&model, f),
            trace_norm(&duhamel.value.sub(f)?),
            trace_norm(&series.value.scale(eps).sub(f)?),
            trace_norm(&free.sub(f)?),
            h,
            hash
        ))
    });
    let mut csv = String::from(TRAJECTORY_HEADER);
    csv.push('\n');
    for r in rows {
        csv.push_str(&r?);
        csv.push('\n');
    }
    let report = format!(
        "config_hash {hash}\nsteps {last}\nrows {}\nt0 {}\n",
        picks.len(),
        t0_bound(&model, &f0)
    );
    Ok(Outcome { pass: true, files: vec![("trajectory.csv", csv), ("summary.txt", report.clone())], report })
}

pub fn write_outputs(dir: &Path, files: &[(&'static str, String)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}
