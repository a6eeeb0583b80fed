//! The four subcommands. Each returns its report and writes its artifacts.

use std::path::PathBuf;

use cqed_core::decoherence::{conditional_hamiltonian, evolve_master, DecoherenceSpec, DensityMatrix, NO_JUMP_CONDITION};
use cqed_core::dynamics::{basis_vector, evolve, linspace, Propagator};
use cqed_core::elimination::{
    eliminate, fredkin_three_level_params, free_detunings, iswap_three_level_params, iswap_two_level_params,
    not_gate_params, solve_resonance, EffectiveSystem, Param, Partition,
};
use cqed_core::gates::{
    check_engine, closed_form_time, interaction_time, peak_fidelity, Engine, GateResult, InputOutcome, InputSystem,
};
use cqed_core::hamiltonian::build_seed_hamiltonian;
use cqed_core::{CMatrix, C64};
use cqed_core::ode::Tolerances;
use cqed_core::{Field, LinkageModel, OperatorMatrix};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{LoadedConfig, SweepParameter};
use crate::error::{CliError, Result};
use crate::output::{num, Sink, Table};
use crate::scenario::{encoding_for, Units};

/// Command-line overrides of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub engine: Option<Engine>,
    pub rtol: Option<f64>,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` or 0 uses every core.
    pub workers: Option<usize>,
}

/// Peak search window, in closed-form interaction times.
const PEAK_WINDOW: f64 = 1.25;
const PEAK_SAMPLES: usize = 250;

struct Resolved<'a> {
    cfg: &'a LoadedConfig,
    opts: &'a Options,
    model: LinkageModel,
    spec: DecoherenceSpec,
    engine: Engine,
    tol: Tolerances,
}

impl<'a> Resolved<'a> {
    fn new(cfg: &'a LoadedConfig, opts: &'a Options) -> Result<Self> {
        let model = cfg.model(None)?;
        let spec = cfg.decoherence(&model, None, None)?;
        let engine = opts.engine.unwrap_or_else(|| cfg.engine());
        check_engine(engine, &spec, cfg.config.decoherence.count_jumps)?;
        let rtol = opts.rtol.unwrap_or(cfg.config.time.rtol);
        if !(rtol > 0.0 && rtol < 1.0) {
            return Err(CliError::Validation(format!("rtol = {rtol} must lie in (0, 1)")));
        }
        Ok(Self {
            cfg,
            opts,
            model,
            spec,
            engine,
            tol: Tolerances::with_rtol(rtol),
        })
    }

    fn sink(&self) -> Sink {
        Sink {
            dir: self
                .opts
                .out_dir
                .clone()
                .or_else(|| self.cfg.config.output.dir.clone())
                .unwrap_or_else(|| PathBuf::from(".")),
            stem: self.cfg.stem(&self.model),
        }
    }

    fn units(&self) -> Units {
        self.cfg.units()
    }

    /// Configured interaction time, else the engine's own.
    fn t_int(&self, model: &LinkageModel) -> Result<f64> {
        match self.cfg.config.time.t_int {
            Some(t) if t.is_finite() && t >= 0.0 => Ok(t),
            Some(t) => Err(CliError::Validation(format!("t_int = {t} must be finite and nonnegative"))),
            None => Ok(interaction_time(model, self.engine)?),
        }
    }

    fn sidecar(&self, command: &str, extra: Value) -> Value {
        let mut v = json!({
            "command": command,
            "cqed_version": env!("CARGO_PKG_VERSION"),
            "config": self.cfg.path,
            "engine": engine_name(self.engine),
            "rtol": self.tol.rtol,
            "model": model_json(&self.model),
            "decoherence": spec_json(&self.spec),
            "units": units_json(self.units()),
        });
        if !self.spec.is_zero() && self.engine != Engine::Master {
            v["no_jump_condition"] = json!(NO_JUMP_CONDITION);
        }
        if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
            m.extend(e);
        }
        v
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.opts.workers.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Validation(format!("worker pool: {e}")))
    }
}

fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Full => "full",
        Engine::Effective => "effective",
        Engine::Master => "master",
    }
}

fn model_json(m: &LinkageModel) -> Value {
    let couplings: Vec<Value> = m
        .couplings
        .iter()
        .map(|c| {
            let (kind, index) = match c.field {
                Field::Mode(j) => ("mode", j),
                Field::Drive(k) => ("drive", k),
            };
            json!({
                "from": c.from.label().to_string(),
                "to": c.to.label().to_string(),
                kind: index,
                "direction": format!("{:?}", c.direction).to_lowercase(),
                "strength": c.strength,
            })
        })
        .collect();
    json!({
        "name": m.name,
        "levels": m.levels.iter().map(|l| l.label()).collect::<String>(),
        "n_modes": m.n_modes,
        "pattern": m.pattern.to_string(),
        "seed": m.seed.to_string(),
        "detunings": m.detunings,
        "couplings": couplings,
        "decaying_levels": m.decaying_levels.iter().map(|l| l.label()).collect::<String>(),
        "fock_cutoff": m.fock_cutoff,
    })
}

fn spec_json(s: &DecoherenceSpec) -> Value {
    json!({
        "kappa": s.kappa,
        "gamma": s.gamma.iter().map(|(l, g)| json!({ "level": l.label().to_string(), "rate": g })).collect::<Vec<_>>(),
    })
}

fn units_json(u: Units) -> Value {
    match u {
        Units::Dimensionless => json!({ "system": "dimensionless" }),
        Units::Si { g_over_2pi_hz } => json!({ "system": "si", "g_over_2pi_hz": g_over_2pi_hz }),
    }
}

fn matrix_json(m: &CMatrix) -> Value {
    let part = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
    };
    json!({ "re": part(|c| c.re), "im": part(|c| c.im) })
}

fn operator_json(h: &OperatorMatrix) -> Value {
    json!({
        "basis": h.basis.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "matrix": matrix_json(&h.matrix),
    })
}

fn param_json(p: Param) -> Value {
    json!({ "exact": p.exact, "approx": p.approx })
}

/// Named exact and leading-order parameters of the built-in structures.
fn named_params(model: &LinkageModel) -> Result<Option<Value>> {
    let v = match (model.pattern.to_string().as_str(), model.n_modes) {
        ("10001", 4) => {
            let p = iswap_two_level_params(model)?;
            json!({ "g_eff": param_json(p.g_eff), "Delta_eff": param_json(p.delta_eff) })
        }
        ("11001", 4) | ("1001001", 6) => {
            let p = if model.n_modes == 4 {
                iswap_three_level_params(model)?
            } else {
                fredkin_three_level_params(model)?
            };
            json!({
                "g_eff^(1)": param_json(p.g1),
                "g_eff^(2)": param_json(p.g2),
                "Delta_eff^(1)": param_json(p.delta1),
                "Delta_eff^(2)": param_json(p.delta2),
            })
        }
        ("1001", 2) if model.couplings.len() == 3 => {
            let d = &model.detunings;
            let p = not_gate_params(model.coupling(0), model.coupling(1), 2.0 * model.coupling(2), d[0], d[1], d[2])?;
            json!({
                "g_eff": param_json(p.g_eff),
                "Delta_eff": {
                    "exact": p.delta_eff_exact,
                    "approx_over_delta2": p.delta_eff_over_delta2,
                    "approx_over_delta1": p.delta_eff_over_delta1,
                },
            })
        }
        _ => return Ok(None),
    };
    Ok(Some(v))
}

fn effective_json(eff: &EffectiveSystem) -> Value {
    let named = |v: &[(String, f64)]| -> Value { v.iter().map(|(n, x)| (n.clone(), json!(x))).collect() };
    json!({
        "h_eff": operator_json(&eff.h_eff),
        "g_eff": named(&eff.g_eff),
        "Delta_eff": named(&eff.delta_eff),
        "validity_ratio": eff.validity_ratio,
        "asymmetry": eff.asymmetry,
    })
}

/// `eliminate`: the seed Hamiltonian, its reduction and the resonance
/// conditions.
pub fn eliminate_report(cfg: &LoadedConfig, opts: &Options) -> Result<Value> {
    let r = Resolved::new(cfg, opts)?;
    let model = &r.model;
    let h = build_seed_hamiltonian(model, false)?;
    let part = Partition::from_pattern(model, &h.basis)?;
    let eff = eliminate(&h, &part)?;
    let resonances: Vec<Value> = free_detunings(model)
        .into_iter()
        .map(|k| {
            Ok(json!({
                "detuning": format!("Delta{}", k + 1),
                "index": k,
                "value": solve_resonance(model, k)?,
            }))
        })
        .collect::<Result<_>>()?;
    let state_names = |idx: &[usize]| -> Vec<String> { idx.iter().map(|&i| h.basis[i].to_string()).collect() };
    let report = json!({
        "hamiltonian": operator_json(&h),
        "partition": { "retained": state_names(&part.p), "eliminated": state_names(&part.q) },
        "effective": effective_json(&eff),
        "parameters": named_params(model)?,
        "resonances": resonances,
    });
    let out = r.sidecar("eliminate", report);
    if opts.out_dir.is_some() || cfg.config.output.dir.is_some() {
        r.sink().write_json("-eliminate", &out)?;
    }
    Ok(out)
}

fn time_columns(units: Units) -> Vec<String> {
    let mut h = vec!["gt".to_string()];
    if units.g_rad_per_s().is_some() {
        h.push("t_ms".into());
    }
    h
}

fn time_cells(units: Units, gt: f64) -> Vec<String> {
    let mut v = vec![num(gt)];
    if let Some(ms) = units.ms(gt) {
        v.push(num(ms));
    }
    v
}

/// `run`: the seed trajectory up to `t_end` (default `1.25 t_int`).
pub fn run(cfg: &LoadedConfig, opts: &Options) -> Result<Vec<PathBuf>> {
    let r = Resolved::new(cfg, opts)?;
    let model = &r.model;
    let units = r.units();
    let tc = &cfg.config.time;
    let t_int = match r.t_int(model) {
        Ok(t) => Some(t),
        Err(e) if tc.t_end.is_none() => return Err(e),
        Err(e) => {
            log::warn!("no interaction time: {e}");
            None
        }
    };
    let t_end = tc.t_end.or(t_int.map(|t| PEAK_WINDOW * t)).unwrap_or(0.0);
    if !(t_end.is_finite() && t_end > 0.0) || tc.samples < 2 {
        return Err(CliError::Validation(
            "run needs t_end > 0 (or a nonzero t_int) and at least two samples".into(),
        ));
    }
    let times = linspace(t_end, tc.samples);
    let mut table;
    let mut final_pops = serde_json::Map::new();
    let mut norm_range = (f64::INFINITY, f64::NEG_INFINITY);
    match r.engine {
        Engine::Master => {
            let h = build_seed_hamiltonian(model, true)?;
            let psi0 = basis_vector(&h.basis, &model.seed)?;
            let rho0 = DensityMatrix::pure(h.basis.clone(), &psi0)?;
            let traj = evolve_master(&h, &rho0, &r.spec, &times, r.tol)?;
            let names: Vec<String> = h.basis.iter().map(ToString::to_string).collect();
            let mut header = time_columns(units);
            header.extend(names.iter().map(|s| format!("pop({s})")));
            header.push("trace".into());
            table = Table::new(header);
            let pops = traj.populations();
            for (k, &t) in times.iter().enumerate() {
                let mut row = time_cells(units, t);
                row.extend(pops.row(k).iter().map(|&p| num(p)));
                let tr = traj.states[k].trace();
                norm_range = (norm_range.0.min(tr), norm_range.1.max(tr));
                row.push(num(tr));
                table.push(row);
            }
            for (i, s) in names.iter().enumerate() {
                final_pops.insert(s.clone(), json!(pops[(times.len() - 1, i)]));
            }
        }
        engine => {
            let mut h = build_seed_hamiltonian(model, false)?;
            if engine == Engine::Effective {
                h = eliminate(&h, &Partition::from_pattern(model, &h.basis)?)?.h_eff;
            }
            let h = conditional_hamiltonian(&h, &r.spec)?;
            let psi0 = basis_vector(&h.basis, &model.seed)?;
            let traj = evolve(&h, &psi0, &times, Propagator::Spectral)?;
            let names: Vec<String> = h.basis.iter().map(ToString::to_string).collect();
            let mut header = time_columns(units);
            for s in &names {
                header.extend([format!("re({s})"), format!("im({s})"), format!("pop({s})")]);
            }
            header.push("norm".into());
            table = Table::new(header);
            let norms = traj.norms_sq();
            for (k, &t) in times.iter().enumerate() {
                let mut row = time_cells(units, t);
                for c in traj.amplitudes.row(k).iter() {
                    row.extend([num(c.re), num(c.im), num(c.norm_sqr())]);
                }
                let n = norms[k].sqrt();
                norm_range = (norm_range.0.min(n), norm_range.1.max(n));
                row.push(num(n));
                table.push(row);
            }
            for (i, s) in names.iter().enumerate() {
                final_pops.insert(s.clone(), json!(traj.amplitudes[(times.len() - 1, i)].norm_sqr()));
            }
        }
    }
    let sidecar = r.sidecar(
        "run",
        json!({
            "t_int": t_int,
            "t_int_ms": t_int.and_then(|t| units.ms(t)),
            "closed_form_time": closed_form_time(model).ok(),
            "t_end": t_end,
            "samples": tc.samples,
            "final_populations": final_pops,
            "min_norm_or_trace": norm_range.0,
            "max_norm_or_trace": norm_range.1,
        }),
    );
    let sink = r.sink();
    let csv = sink.write_csv("-trajectory", &table, &sidecar)?;
    Ok(vec![csv, sink.path("-trajectory", "json")])
}

/// `sweep`: gate fidelity at `t_int` and its peak within `1.25` closed-form
/// times, per input and averaged, over one parameter.
pub fn sweep(cfg: &LoadedConfig, opts: &Options) -> Result<Vec<PathBuf>> {
    let r = Resolved::new(cfg, opts)?;
    let sc = cfg
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Validation(format!("{}: sweep needs a [sweep] table", cfg.path)))?;
    let values = sc.values()?;
    let (encoding, target) = encoding_for(&r.model)
        .ok_or_else(|| CliError::Validation(format!("model {} has no logical encoding to sweep", r.model.name)))?;
    let jobs: Vec<(usize, usize)> = (0..values.len()).flat_map(|v| (0..encoding.len()).map(move |k| (v, k))).collect();
    let point = |value: f64| -> Result<(LinkageModel, DecoherenceSpec)> {
        match sc.parameter {
            SweepParameter::Delta => {
                let m = cfg.model(Some(value))?;
                let s = cfg.decoherence(&m, None, None)?;
                Ok((m, s))
            }
            SweepParameter::Kappa => Ok((r.model.clone(), cfg.decoherence(&r.model, Some(value), None)?)),
            SweepParameter::Gamma => Ok((r.model.clone(), cfg.decoherence(&r.model, None, Some(value))?)),
        }
    };
    let points: Vec<(LinkageModel, DecoherenceSpec, f64, f64)> = r.pool()?.install(|| {
        values
            .par_iter()
            .map(|&v| {
                let (m, s) = point(v)?;
                let t_int = r.t_int(&m)?;
                let t_peak = PEAK_WINDOW * closed_form_time(&m)?;
                Ok((m, s, t_int, t_peak))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<(InputOutcome, f64, InputOutcome)> = r.pool()?.install(|| {
        jobs.par_iter()
            .map(|&(v, k)| {
                let (m, s, t_int, t_peak) = &points[v];
                let sys = InputSystem::new(m, &encoding, &target, s, r.engine, k)?.with_tolerances(r.tol);
                let at = sys.outcome(*t_int)?;
                let (tp, peak) = peak_fidelity(&sys, *t_peak, PEAK_SAMPLES)?;
                if at.fidelity > peak.fidelity && t_int <= t_peak {
                    return Ok((at.clone(), *t_int, at));
                }
                Ok((at, tp, peak))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let units = r.units();
    let name = format!("{:?}", sc.parameter).to_lowercase();
    let mut header = vec![name.clone(), "input".into()];
    header.extend(time_columns(units).into_iter().map(|c| format!("t_int_{c}")));
    header.extend(
        ["fidelity", "conditional_fidelity", "success_probability", "peak_gt", "peak_fidelity", "peak_conditional_fidelity"]
            .map(String::from),
    );
    let mut table = Table::new(header);
    for (v, &value) in values.iter().enumerate() {
        let t_int = points[v].2;
        let chunk = &rows[v * encoding.len()..(v + 1) * encoding.len()];
        let mut push = |label: String, cells: [f64; 6]| {
            let mut row = vec![num(value), label];
            row.extend(time_cells(units, t_int));
            row.extend(cells.iter().map(|&x| num(x)));
            table.push(row);
        };
        let mut mean = [0.0; 6];
        for (k, (at, tp, peak)) in chunk.iter().enumerate() {
            let cells = [
                at.fidelity,
                at.conditional_fidelity,
                at.success_probability,
                *tp,
                peak.fidelity,
                peak.conditional_fidelity,
            ];
            for (m, c) in mean.iter_mut().zip(cells) {
                *m += c / chunk.len() as f64;
            }
            push(encoding.label(k), cells);
        }
        push("mean".into(), mean);
    }
    let sidecar = r.sidecar(
        "sweep",
        json!({
            "sweep": {
                "parameter": name,
                "values": values,
                "relative_to": cfg.config.decoherence.relative_to,
            },
            "peak_window_closed_form_times": PEAK_WINDOW,
            "peak_samples": PEAK_SAMPLES,
            "t_int": points.iter().map(|p| p.2).collect::<Vec<_>>(),
        }),
    );
    let sink = r.sink();
    let csv = sink.write_csv("-sweep", &table, &sidecar)?;
    Ok(vec![csv, sink.path("-sweep", "json")])
}

/// Runs every logical input in parallel at `t_int`.
pub fn truth_table_result(cfg: &LoadedConfig, opts: &Options) -> Result<GateResult> {
    let r = Resolved::new(cfg, opts)?;
    gate_result(&r)
}

fn gate_result(r: &Resolved<'_>) -> Result<GateResult> {
    let (encoding, target) = encoding_for(&r.model)
        .ok_or_else(|| CliError::Validation(format!("model {} has no logical encoding", r.model.name)))?;
    let t_int = r.t_int(&r.model)?;
    let rows = r.pool()?.install(|| {
        (0..encoding.len())
            .into_par_iter()
            .map(|k| {
                InputSystem::new(&r.model, &encoding, &target, &r.spec, r.engine, k)?
                    .with_tolerances(r.tol)
                    .outcome(t_int)
            })
            .collect::<cqed_core::Result<Vec<_>>>()
    })?;
    Ok(GateResult::from_outcomes(&encoding, &target, t_int, r.engine, rows)?)
}

/// `truth-table`: logical output probabilities per input at `t_int`.
pub fn truth_table(cfg: &LoadedConfig, opts: &Options) -> Result<Vec<PathBuf>> {
    let r = Resolved::new(cfg, opts)?;
    let g = gate_result(&r)?;
    let mut header = vec!["input".to_string()];
    header.extend(g.labels.iter().map(|l| format!("p({l})")));
    header.extend(["fidelity", "conditional_fidelity", "success_probability", "phase"].map(String::from));
    let mut table = Table::new(header);
    for (i, label) in g.labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(g.truth_table.row(i).iter().map(|&p| num(p)));
        row.extend([
            num(g.fidelities[i]),
            num(g.conditional_fidelities[i]),
            num(g.success_probabilities[i]),
            g.phases[i].map_or_else(String::new, num),
        ]);
        table.push(row);
    }
    let dominant: Vec<Value> = g
        .dominant()
        .iter()
        .enumerate()
        .map(|(i, &(j, p))| json!({ "input": g.labels[i], "output": g.labels[j], "probability": p }))
        .collect();
    let units = r.units();
    let sidecar = r.sidecar(
        "truth-table",
        json!({
            "t_int": g.t_int,
            "t_int_ms": units.ms(g.t_int),
            "mean_fidelity": g.mean_fidelity(),
            "dominant": dominant,
            "fidelities": g.fidelities,
            "conditional_fidelities": g.conditional_fidelities,
        }),
    );
    let sink = r.sink();
    let csv = sink.write_csv("-truth-table", &table, &sidecar)?;
    Ok(vec![csv, sink.path("-truth-table", "json")])
}
