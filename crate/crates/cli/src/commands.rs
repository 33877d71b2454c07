use std::path::Path;

use anyhow::{bail, Context, Result};
use coarse_ricci::concentration::{self, obs_diam, Strategy};
use coarse_ricci::curvature::{contraction_check, curvature_report};
use coarse_ricci::dynamics::{convergence_trace, invariant_measure_from, lifted_rate_check, uniqueness_check};
use coarse_ricci::gh::{self, map_convergence_check, stability_experiment};
use coarse_ricci::io::{self, curvature_csv, read_space, FamilyConfig, GhConfig, LevyConfig, SpaceFile};
use coarse_ricci::lifting::{
    build_lifted_space, lift_kernel, lifted_curvature_report, lifted_invariant_check,
    lifted_reversibility_check, reversibility_check, verify_lift_theorem,
};
use coarse_ricci::measure::{DiscreteMeasure, RandomWalkKernel};
use coarse_ricci::{curvature, dynamics, lifting, space, transport};
use serde_json::{json, Value};

use crate::{Command, Common, Format};

/// A finished command: its report and, for verification commands, what failed.
pub struct Outcome {
    pub report: Value,
    pub csv: Option<String>,
    pub format: Format,
    pub failure: Option<String>,
}

impl Outcome {
    pub fn write(&self, out: Option<&Path>) -> Result<()> {
        let text = match self.format {
            Format::Json => io::to_json(&self.report)?,
            Format::Csv => match &self.csv {
                Some(csv) => csv.clone(),
                None => bail!("this command has no CSV output; use --format json"),
            },
        };
        match out {
            Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn tolerances() -> Value {
    json!({
        "ingest": space::INGEST_TOL,
        "internal": space::INTERNAL_TOL,
        "dual_feasibility": transport::DUAL_FEASIBILITY_TOL,
        "contraction": curvature::CONTRACTION_TOL,
        "envelope": dynamics::ENVELOPE_TOL,
        "lifted_triangle": lifting::LIFTED_TRIANGLE_TOL,
        "invariance": lifting::INVARIANCE_TOL,
        "detailed_balance": lifting::BALANCE_TOL,
        "map": gh::MAP_TOL,
        "witness_lipschitz": concentration::WITNESS_TOL,
        "pullback": concentration::PULLBACK_TOL,
    })
}

fn check_common(c: &Common) -> Result<()> {
    transport::check_exponent(c.p)?;
    if c.grid == 0 {
        bail!("--grid must be at least 1");
    }
    if !(c.tol > 0.0 && c.tol.is_finite()) {
        bail!("--tol must be positive");
    }
    Ok(())
}

struct Builder<'a> {
    command: &'static str,
    common: &'a Common,
    extra: Value,
}

impl Builder<'_> {
    fn finish(self, result: Value, csv: Option<String>, failure: Option<String>) -> Outcome {
        let mut config = serde_json::to_value(self.common).expect("plain config");
        if let (Value::Object(c), Value::Object(e)) = (&mut config, self.extra) {
            c.extend(e);
        }
        let report = json!({
            "tool": "crl",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": config,
            "tolerances": tolerances(),
            "result": result,
            "failure": failure,
        });
        Outcome { report, csv, format: self.common.format, failure }
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn run(command: &Command) -> Result<Outcome> {
    let common = command.common();
    check_common(common)?;
    match command {
        Command::Validate { input, common } => validate(input, common),
        Command::Curvature { input, samples, common } => curvature_cmd(input, *samples, common),
        Command::Lift { input, verify, export, common } => lift(input, *verify, export.as_deref(), common),
        Command::Invariant { input, starts, max_iter, common } => invariant(input, *starts, *max_iter, common),
        Command::Dynamics { input, steps, start, max_iter, common } => {
            dynamics_cmd(input, *steps, start.as_deref(), *max_iter, common)
        }
        Command::Gh { config, common } => gh_cmd(config, common),
        Command::Obsdiam { input, kappa, strategy, budget, common } => {
            obsdiam(input, *kappa, strategy, *budget, common)
        }
        Command::Levy { config, budget, common } => levy(config, *budget, common),
    }
}

fn validate(input: &Path, common: &Common) -> Result<Outcome> {
    let loaded = read_space(input)?;
    let s = &loaded.space;
    let result = json!({
        "valid": true,
        "points": s.len(),
        "diameter": s.diameter(),
        "min_separation": if s.len() > 1 { s.min_separation() } else { 0.0 },
        "has_kernel": loaded.kernel.is_some(),
        "has_measure": loaded.measure.is_some(),
    });
    let b = Builder { command: "validate", common, extra: json!({ "input": path_str(input) }) };
    Ok(b.finish(result, None, None))
}

fn curvature_cmd(input: &Path, samples: usize, common: &Common) -> Result<Outcome> {
    let loaded = read_space(input)?;
    let kernel = loaded.require_kernel()?;
    let report = curvature_report(kernel, common.p)?;
    let csv = curvature_csv(&report, &loaded.space);
    let mut result = json!({ "curvature": report });
    let mut failure = None;
    if samples > 0 {
        let c = contraction_check(kernel, common.p, report.kappa_inf, samples, common.seed)?;
        if let Err(e) = c.ensure() {
            failure = Some(e.to_string());
        }
        result["contraction"] = serde_json::to_value(&c)?;
    }
    let b = Builder { command: "curvature", common, extra: json!({ "input": path_str(input), "samples": samples }) };
    Ok(b.finish(result, Some(csv), failure))
}

fn lift(input: &Path, verify: bool, export: Option<&Path>, common: &Common) -> Result<Outcome> {
    let loaded = read_space(input)?;
    let kernel = loaded.require_kernel()?;
    let base = curvature_report(kernel, common.p)?;
    let lifted = build_lifted_space(kernel, common.p, common.grid)?;
    let lk = lift_kernel(&lifted);
    let lifted_report = lifted_curvature_report(&lifted, &lk, common.p)?;
    let verification = verify_lift_theorem(&base, &lifted_report, common.tol)?;
    if let Some(path) = export {
        let file = SpaceFile::from_lifted(&lifted, Some(&lk), None);
        std::fs::write(path, io::to_json(&file)?).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let failure = (verify && !verification.holds).then(|| {
        format!(
            "lifted inf {} vs base inf {} (tol {}), witnesses {:?} / {:?}",
            verification.lifted_inf,
            verification.base_inf,
            verification.tol,
            verification.base_witness,
            verification.lifted_witness
        )
    });
    let result = json!({
        "lifted_points": lifted.len(),
        "grid_points": u64::try_from(lifting::grid_point_count(kernel.len(), common.grid)).ok(),
        "base_inf": base.kappa_inf,
        "lifted_inf": lifted_report.kappa_inf,
        "lifted_sup": lifted_report.kappa_sup,
        "verification": verification,
        "labels": lifted.space().labels(),
    });
    let b = Builder {
        command: "lift",
        common,
        extra: json!({ "input": path_str(input), "verify": verify, "export": export.map(path_str) }),
    };
    Ok(b.finish(result, None, failure))
}

fn invariant(input: &Path, starts: usize, max_iter: usize, common: &Common) -> Result<Outcome> {
    let loaded = read_space(input)?;
    let kernel = loaded.require_kernel()?;
    let p = common.p;
    let kappa_inf = curvature_report(kernel, p)?.kappa_inf;
    if kappa_inf <= 0.0 {
        log::warn!("kappa_inf = {kappa_inf} <= 0; convergence is not guaranteed");
    }
    let start = DiscreteMeasure::uniform(loaded.space.clone());
    let found = invariant_measure_from(kernel, &start, p, common.tol, max_iter)?;
    let mut failures = Vec::new();
    let mut result = json!({
        "kappa_inf": kappa_inf,
        "measure": found.measure.weights(),
        "iterations": found.iterations,
        "residual": found.residual,
    });
    if starts > 1 {
        let u = uniqueness_check(kernel, p, common.tol, max_iter, starts, common.seed)?;
        if kappa_inf > 0.0 && !u.unique() {
            failures.push(format!("invariant measures differ by {} in W_p", u.max_pairwise));
        }
        result["uniqueness"] = json!({ "starts": u.starts, "max_pairwise": u.max_pairwise, "unique": u.unique() });
    }
    // the lifted checks need an exactly invariant input
    let nu = invariant_measure_from(kernel, &found.measure, p, common.tol.min(1e-12), max_iter)
        .map(|s| s.measure)
        .unwrap_or(found.measure);
    let lifted = build_lifted_space(kernel, p, common.grid)?;
    let lk = lift_kernel(&lifted);
    match lifted_invariant_check(&lifted, &lk, &nu) {
        Ok(inv) => {
            if !inv.holds {
                failures.push(format!("lifted invariance residual {}", inv.lifted_residual));
            }
            let base_rev = reversibility_check(kernel, &nu)?;
            let lifted_nu = lifted.pushforward_along_walk(&nu)?;
            let lifted_rev = lifted_reversibility_check(&lk, &lifted_nu)?;
            if base_rev.reversible && !lifted_rev.reversible {
                failures.push(format!("lifted detailed balance defect {}", lifted_rev.max_defect));
            }
            result["lifted"] = json!({
                "points": lifted.len(),
                "invariance": inv,
                "base_reversibility": base_rev,
                "lifted_reversibility": lifted_rev,
            });
        }
        Err(coarse_ricci::error::Error::NotInvariantInput(r)) => {
            log::warn!("measure residual {r} too large for the lifted invariance check; skipped");
            result["lifted"] = Value::Null;
        }
        Err(e) => return Err(e.into()),
    }
    let failure = (!failures.is_empty()).then(|| failures.join("; "));
    let b = Builder {
        command: "invariant",
        common,
        extra: json!({ "input": path_str(input), "starts": starts, "max_iter": max_iter }),
    };
    Ok(b.finish(result, None, failure))
}

fn dynamics_cmd(input: &Path, steps: usize, start: Option<&str>, max_iter: usize, common: &Common) -> Result<Outcome> {
    let loaded = read_space(input)?;
    let kernel = loaded.require_kernel()?;
    let p = common.p;
    let kappa_inf = curvature_report(kernel, p)?.kappa_inf;
    let x0 = match start {
        None => 0,
        Some(label) => loaded
            .space
            .index_of(label)
            .ok_or_else(|| coarse_ricci::error::Error::UnknownLabel(label.to_string()))?,
    };
    let nu = invariant_measure_from(kernel, &DiscreteMeasure::uniform(loaded.space.clone()), p, common.tol, max_iter)?.measure;
    let mu0 = DiscreteMeasure::dirac(loaded.space.clone(), x0);
    let trace = convergence_trace(kernel, &mu0, &nu, p, kappa_inf, steps)?;
    let mut failures = Vec::new();
    if let Some(t) = trace.first_violation() {
        failures.push(format!("trace exceeds its envelope at t = {t}"));
    }
    let lifted = if kappa_inf > 0.0 {
        let l = lifted_rate_check(kernel, &nu, p, kappa_inf, steps)?;
        if let Some(t) = l.first_violation() {
            failures.push(format!("lifted trace exceeds its envelope at t = {t}"));
        }
        Some(l)
    } else {
        log::warn!("kappa_inf = {kappa_inf} <= 0; lifted rate check skipped");
        None
    };
    let mut csv = String::from("t,value,bound,lifted_value,lifted_bound\n");
    for (i, s) in trace.steps.iter().enumerate() {
        let (lv, lb) = match &lifted {
            Some(l) => (format!("{:.16e}", l.steps[i].value), format!("{:.16e}", l.steps[i].bound)),
            None => (String::new(), String::new()),
        };
        csv.push_str(&format!("{},{:.16e},{:.16e},{lv},{lb}\n", s.t, s.value, s.bound));
    }
    let result = json!({
        "kappa_inf": kappa_inf,
        "invariant_measure": nu.weights(),
        "trace": trace,
        "lifted_trace": lifted,
    });
    let failure = (!failures.is_empty()).then(|| failures.join("; "));
    let b = Builder {
        command: "dynamics",
        common,
        extra: json!({ "input": path_str(input), "steps": steps, "start": loaded.space.label(x0) }),
    };
    Ok(b.finish(result, Some(csv), failure))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn gh_cmd(config_path: &Path, common: &Common) -> Result<Outcome> {
    let config: GhConfig = read_json(config_path)?;
    let family = config.family.build()?;
    let candidate = match &config.candidate {
        Some(rows) => Some(RandomWalkKernel::new(family.target.clone(), rows.clone())?),
        None => None,
    };
    let convergence =
        map_convergence_check(&family, candidate.as_ref(), common.p, common.tol, config.probes.as_deref())?;
    let quasi: Vec<Value> = family
        .members
        .iter()
        .map(|m| {
            gh::quasi_inverse(&m.map).map(|q| {
                json!({
                    "epsilon": m.map.epsilon(),
                    "minimal_epsilon": m.map.minimal_epsilon(),
                    "epsilon_prime": q.epsilon_prime,
                    "target_round_trip": q.target_round_trip,
                    "source_round_trip": q.source_round_trip,
                })
            })
        })
        .collect::<coarse_ricci::error::Result<_>>()?;
    let mut result = json!({
        "params": family.params,
        "target_points": family.target.len(),
        "approximation": quasi,
        "convergence": convergence,
    });
    let mut failure = None;
    // drifting walks are a negative example: report, do not assert
    if !matches!(config.family, FamilyConfig::Escaping { .. }) {
        let stability = stability_experiment(&family, common.p, config.kappa0, common.tol, config.diameter_bound)?;
        if !stability.holds {
            failure = Some(format!(
                "limit inf {} below kappa0 {} - tol {} (Cauchy check {})",
                stability.limit_inf,
                stability.kappa0,
                stability.tol,
                if stability.convergence.converges { "passed" } else { "failed" }
            ));
        }
        result["stability"] = serde_json::to_value(&stability)?;
    }
    let b = Builder { command: "gh", common, extra: json!({ "input": path_str(config_path) }) };
    Ok(b.finish(result, None, failure))
}

fn obsdiam(input: &Path, kappa: Option<f64>, strategy: &str, budget: usize, common: &Common) -> Result<Outcome> {
    let loaded = read_space(input)?;
    let strategy: Strategy = strategy.parse()?;
    let mu = loaded.measure_or_uniform();
    let space = &loaded.space;
    let (result, csv, estimates) = match kappa {
        Some(k) => {
            let e = obs_diam(space, &mu, k, strategy, budget, common.seed)?;
            let csv = format!("kappa,value\n{:.16e},{:.16e}\n", e.kappa, e.value);
            (json!({ "estimate": e }), csv, vec![e])
        }
        None => {
            let s = concentration::obs_diam_scalar_with(space, &mu, strategy, budget, common.seed)?;
            let mut csv = String::from("kappa,value\n");
            for e in &s.estimates {
                csv.push_str(&format!("{:.16e},{:.16e}\n", e.kappa, e.value));
            }
            let est = s.estimates.clone();
            (json!({ "scalar": s }), csv, est)
        }
    };
    let bad: Vec<f64> = estimates.iter().filter(|e| !e.verify(space, mu.weights())).map(|e| e.kappa).collect();
    let failure = (!bad.is_empty()).then(|| format!("witnesses failed verification at kappa {bad:?}"));
    let b = Builder {
        command: "obsdiam",
        common,
        extra: json!({ "input": path_str(input), "kappa": kappa, "strategy": strategy, "budget": budget }),
    };
    Ok(b.finish(result, Some(csv), failure))
}

fn levy(config_path: &Path, budget: usize, common: &Common) -> Result<Outcome> {
    let config: LevyConfig = read_json(config_path)?;
    let family = config.family.build()?;
    if common.p != 1.0 {
        log::warn!("the Levy experiment always lifts with p = 1");
    }
    let report = concentration::levy_experiment(&family, common.grid, config.kappa0, budget, common.seed)?;
    let failure = (!report.holds).then(|| {
        let bad: Vec<usize> = report
            .members
            .iter()
            .enumerate()
            .filter(|(_, m)| !(m.scaling_holds && m.pullback_holds))
            .map(|(i, _)| i)
            .collect();
        format!("scaling or pullback check failed for members {bad:?}")
    });
    let b = Builder { command: "levy", common, extra: json!({ "input": path_str(config_path), "budget": budget }) };
    Ok(b.finish(serde_json::to_value(&report)?, None, failure))
}
