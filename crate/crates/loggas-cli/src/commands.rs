use crate::output::{csv, emit, envelope, json_bytes, num, CliError, Result, EXIT_BAND};
use crate::{
    Command, Context, EdgeArgs, EquilibriumArgs, FillingArgs, Format, GapsArgs, LogLevel, LoopArgs, ModelKind, PipelineArgs, ReferenceArgs,
    SampleArgs, TransportArgs, XiArgs,
};
use loggas::equilibrium::{gaussian_measure, guess_cuts, MeasureFile};
use loggas::functions::{Plateau, Poly, RealFunction, Truncated};
use loggas::master_operator::XiContext;
use loggas::sampler::tridiagonal::cached_gaussian_reference;
use loggas::sampler::{
    particle_counts, sample_gaussian_tridiagonal, sample_loggas, sample_product_t1, LogGasModel, SampleBatch, SamplerOptions,
};
use loggas::statistics::{bulk_gaps_with, edge_rescale, filling_counts, loop_residual, per_cut, transported_reference_gaps};
use loggas::transport::{build_schedule, flow_first_order, monotone_transport_to_cut};
use loggas::{solve_equilibrium, EquilibriumMeasure, Potential, SolveOptions};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;
use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

pub fn run(ctx: &Context, command: Command) -> Result<u8> {
    match command {
        Command::Equilibrium(a) => equilibrium(a),
        Command::XiInvert(a) => xi_invert(a),
        Command::Transport(a) => transport(a),
        Command::Sample(a) => sample(ctx, a),
        Command::Gaps(a) => gaps(ctx, a),
        Command::Edge(a) => edge(ctx, a),
        Command::Filling(a) => filling(a),
        Command::Loopcheck(a) => loopcheck(ctx, a),
        Command::Pipeline(a) => pipeline(ctx, a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::validation("io", format!("{}: {e}", path.display())))
}

/// A measure file, or the `result.measure` of an equilibrium artifact.
fn read_measure(path: &Path) -> Result<EquilibriumMeasure> {
    let mut v: serde_json::Value = serde_json::from_str(&read_text(path)?)?;
    if let Some(m) = v.get_mut("result").and_then(|r| r.get_mut("measure")) {
        v = m.take();
    }
    let file: MeasureFile = serde_json::from_value(v)?;
    Ok(EquilibriumMeasure::from_file(file)?)
}

fn read_batch(path: &Path) -> Result<SampleBatch> {
    if !path.exists() {
        return Err(CliError::validation("io", format!("{}: no such file", path.display())));
    }
    Ok(SampleBatch::read(path)?)
}

fn parse_cut(s: &str) -> Result<(f64, f64)> {
    let bad = || CliError::validation("argument", format!("cut {s:?} is not of the form lo:hi"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_poly(s: &str) -> Result<Poly> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| CliError::validation("argument", format!("bad coefficient list {s:?}"))))
        .collect::<Result<Vec<_>>>()
        .map(Poly)
}

fn equilibrium(mut a: EquilibriumArgs) -> Result<u8> {
    let p = Potential::from_json(&read_text(&a.potential)?)?;
    let mut opts = SolveOptions::default();
    opts.cheb_degree = *a.cheb_degree.get_or_insert(opts.cheb_degree);
    opts.quad_nodes = *a.quad_nodes.get_or_insert(opts.quad_nodes);
    opts.contour_nodes = *a.contour_nodes.get_or_insert(opts.contour_nodes);
    let init = match &a.init {
        Some(v) => v.iter().map(|s| parse_cut(s)).collect::<Result<Vec<_>>>()?,
        None => guess_cuts(&p, a.cuts)?,
    };
    a.init = Some(init.iter().map(|(lo, hi)| format!("{lo:?}:{hi:?}")).collect());
    let mut mu = solve_equilibrium(&p, a.eps.as_deref(), a.cuts, &init, &opts)?;
    if a.t != 0.0 {
        mu = mu.with_t(a.t)?;
    }
    let result = json!({
        "edges": mu.edges(),
        "eps": mu.eps,
        "characterization": mu.verify_characterization(),
        "measure": mu.to_file(),
    });
    let out = a.out.clone();
    emit(out.as_deref(), &json_bytes(&envelope(&Command::Equilibrium(a), &result)?)?)?;
    Ok(0)
}

fn b_delta_points(mu: &EquilibriumMeasure, per_cut: usize) -> Vec<f64> {
    let g = &mu.geometry;
    let m = per_cut.max(2) - 1;
    g.enlargements
        .iter()
        .flat_map(|&(lo, hi)| {
            let (a, b) = (lo + g.delta, hi - g.delta);
            (0..=m).map(move |k| a + (b - a) * k as f64 / m as f64)
        })
        .collect()
}

fn xi_invert(a: XiArgs) -> Result<u8> {
    let mu = read_measure(&a.measure)?;
    let ctx = XiContext::new(&mu, a.t)?;
    let k = Poly(a.k.clone());
    let sol = ctx.invert_xi(&k)?;
    let xs = b_delta_points(&mu, a.points);
    let back = ctx.apply_xi(&sol, &xs)?;
    let mut rows = Vec::with_capacity(xs.len());
    let mut worst: f64 = 0.0;
    for (&x, xf) in xs.iter().zip(&back) {
        let h = mu.geometry.enlargement_of(x).expect("grid lies in B");
        let r = xf - k.value(x) - sol.kappa[h];
        worst = worst.max(r.abs());
        rows.push((h, x, sol.try_value(x)?, sol.try_deriv(x)?, r));
    }
    let bytes = match a.format {
        Format::Csv => csv(
            &["cut", "x", "f", "df", "residual"],
            rows.iter().map(|&(h, x, f, d, r)| vec![h.to_string(), num(x), num(f), num(d), num(r)]),
        ),
        Format::Json => {
            let result = json!({
                "kappa": sol.kappa,
                "max_residual": worst,
                "rows": rows.iter().map(|&(h, x, f, d, r)| json!({"cut": h, "x": x, "f": f, "df": d, "residual": r})).collect::<Vec<_>>(),
            });
            json_bytes(&envelope(&Command::XiInvert(a.clone()), &result)?)?
        }
    };
    emit(a.out.as_deref(), &bytes)?;
    Ok(0)
}

fn transport(a: TransportArgs) -> Result<u8> {
    let mu = read_measure(&a.measure)?;
    if let Some(b) = &a.batch {
        return flow(&a, &mu, &read_batch(b)?);
    }
    let g = gaussian_measure(mu.beta())?;
    let cuts: Vec<usize> = match a.cut {
        Some(h) => vec![h],
        None => (0..mu.cut_count()).collect(),
    };
    let m = a.points.max(2) - 1;
    let xs: Vec<f64> = (0..=m).map(|j| -2.0 + 4.0 * j as f64 / m as f64).collect();
    let mut maps = Vec::new();
    for &h in &cuts {
        let map = monotone_transport_to_cut(&g, &mu, h)?;
        let rows: Vec<(f64, f64, f64)> = xs.iter().map(|&x| (x, map.eval(x), map.deriv(x))).collect();
        maps.push((h, map.left_slope(), map.right_slope(), map.is_increasing(), rows));
    }
    let bytes = match a.format {
        Format::Csv => csv(
            &["cut", "x", "phi", "dphi"],
            maps.iter().flat_map(|(h, _, _, _, rows)| rows.iter().map(move |&(x, p, d)| vec![h.to_string(), num(x), num(p), num(d)])),
        ),
        Format::Json => {
            let result: Vec<_> = maps
                .iter()
                .map(|(h, l, r, inc, rows)| {
                    json!({
                        "cut": h, "left_slope": l, "right_slope": r, "increasing": inc,
                        "rows": rows.iter().map(|&(x, p, d)| json!([x, p, d])).collect::<Vec<_>>(),
                    })
                })
                .collect();
            json_bytes(&envelope(&Command::Transport(a.clone()), &json!({ "maps": result }))?)?
        }
    };
    emit(a.out.as_deref(), &bytes)?;
    Ok(0)
}

fn flow(a: &TransportArgs, mu: &EquilibriumMeasure, batch: &SampleBatch) -> Result<u8> {
    let schedule = build_schedule(mu, a.steps, a.degree)?;
    let x1 =
        batch.configs.par_iter().map(|c| flow_first_order(&schedule, c, mu).map_err(CliError::from)).collect::<Result<Vec<Vec<f64>>>>()?;
    let n = batch.n() as f64;
    let mut kept = 0;
    for (c, x) in batch.configs.iter().zip(&x1) {
        let moved: Vec<f64> = c.iter().zip(x).map(|(l, d)| l + d / n).collect();
        let mut start = 0;
        let mut ok = true;
        for part in per_cut(c, &mu.geometry)? {
            ok &= moved[start..start + part.len()].windows(2).all(|w| w[0] < w[1]);
            start += part.len();
        }
        kept += ok as usize;
    }
    let max_abs = x1.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let bytes = match a.format {
        Format::Csv => csv(
            &["sample", "i", "lambda", "x1"],
            batch.configs.iter().zip(&x1).enumerate().flat_map(|(s, (c, x))| {
                c.iter().zip(x).enumerate().map(move |(i, (l, d))| vec![s.to_string(), i.to_string(), num(*l), num(*d)])
            }),
        ),
        Format::Json => {
            let result = json!({
                "order_preserved": kept as f64 / batch.len().max(1) as f64,
                "max_abs_x1": max_abs,
                "x1": x1,
            });
            json_bytes(&envelope(&Command::Transport(a.clone()), &result)?)?
        }
    };
    emit(a.out.as_deref(), &bytes)?;
    Ok(0)
}

fn sample(ctx: &Context, mut a: SampleArgs) -> Result<u8> {
    let opts =
        SamplerOptions { chains: a.chains, jump_probability: a.jump_probability, ..SamplerOptions::new(a.samples, a.sweeps, a.seed) };
    let measure = || -> Result<EquilibriumMeasure> {
        let p = a.measure.as_ref().ok_or_else(|| CliError::validation("argument", "--measure is required for this model"))?;
        read_measure(p)
    };
    let mut batch = match a.model {
        ModelKind::Free => sample_loggas(&LogGasModel::unconstrained(&measure()?, a.n)?, &opts)?,
        ModelKind::Fixed => sample_loggas(&LogGasModel::constrained(&measure()?, a.n, a.t)?, &opts)?,
        ModelKind::ProductT1 => sample_product_t1(&measure()?, a.n, &opts)?,
        ModelKind::GaussianTridiagonal => {
            let beta = match (a.beta, &a.measure) {
                (Some(b), _) => b,
                (None, Some(_)) => measure()?.beta(),
                (None, None) => 2.0,
            };
            a.beta = Some(beta);
            sample_gaussian_tridiagonal(beta, a.n, a.samples, a.seed)?
        }
    };
    for w in &batch.diagnostics.warnings {
        ctx.log(LogLevel::Warn, json!({ "warning": w }));
    }
    let command = Command::Sample(a.clone());
    batch.provenance = Some(serde_json::to_value(&command)?);
    batch.write(&a.out)?;
    if let Some(p) = &a.csv {
        loggas::io::atomic_write(p, batch.to_csv().as_bytes())?;
    }
    let result = json!({
        "out": a.out,
        "n": batch.n(),
        "n_samples": batch.len(),
        "descriptor": batch.descriptor,
        "diagnostics": batch.diagnostics,
    });
    emit(None, &json_bytes(&envelope(&command, &result)?)?)?;
    Ok(0)
}

/// Per-cut particle counts of a batch: the fixed ones, or the nearest
/// split of N by the measure's fractions.
fn cut_counts(batch: &SampleBatch, mu: &EquilibriumMeasure) -> Result<Vec<usize>> {
    match &batch.descriptor.counts {
        Some(c) => Ok(c.clone()),
        None => Ok(particle_counts(batch.n(), &mu.eps)?),
    }
}

fn reference_batch(r: &ReferenceArgs, beta: f64, n: usize) -> Result<(SampleBatch, serde_json::Value)> {
    match &r.reference {
        Some(p) => {
            let b = read_batch(p)?;
            let info =
                json!({"file": p, "kind": b.descriptor.kind, "beta": b.descriptor.beta, "n": b.n(), "samples": b.len(), "seed": b.seed});
            Ok((b, info))
        }
        None => {
            let b = cached_gaussian_reference(beta, n, r.reference_samples, r.reference_seed)?;
            let info =
                json!({"kind": "gaussian_tridiagonal", "beta": beta, "n": n, "samples": r.reference_samples, "seed": r.reference_seed});
            Ok((b, info))
        }
    }
}

fn status(ctx: &Context, pass: bool) -> u8 {
    if ctx.assert && !pass {
        EXIT_BAND
    } else {
        0
    }
}

fn gaps(ctx: &Context, mut a: GapsArgs) -> Result<u8> {
    let batch = read_batch(&a.batch)?;
    let mu = read_measure(&a.measure)?;
    let counts = cut_counts(&batch, &mu)?;
    let nh = *counts.get(a.h).ok_or_else(|| CliError::validation("argument", format!("no cut {}", a.h)))?;
    let before: usize = counts[..a.h].iter().sum();
    let i = *a.i.get_or_insert(before + nh / 2);
    let n = batch.n();
    let mut rep = bulk_gaps_with(&batch, &mu, a.h, i, a.m, a.window)?;
    let j = i.checked_sub(before).filter(|&j| j > 0).ok_or_else(|| CliError::validation("argument", "index lies before the cut"))?;
    let (reference, info) = reference_batch(&a.reference, mu.beta(), nh)?;
    let scale = (i..i + a.m).map(|k| Ok(n as f64 * mu.density(mu.classical_location(k, n)?))).collect::<Result<Vec<f64>>>()?;
    let map = monotone_transport_to_cut(&gaussian_measure(mu.beta())?, &mu, a.h)?;
    let refgaps = transported_reference_gaps(&reference, &map, j, &scale)?;
    let pass = rep.compare(&refgaps)?.pass;
    let bytes = match a.format {
        Format::Csv => csv(
            &["sample", "k", "gap"],
            rep.gaps.iter().enumerate().map(|(idx, g)| vec![(idx / a.m).to_string(), (i + idx % a.m).to_string(), num(*g)]),
        ),
        Format::Json => json_bytes(&envelope(&Command::Gaps(a.clone()), &json!({ "report": rep, "reference": info }))?)?,
    };
    emit(a.out.as_deref(), &bytes)?;
    Ok(status(ctx, pass))
}

fn edge(ctx: &Context, a: EdgeArgs) -> Result<u8> {
    let batch = read_batch(&a.batch)?;
    let mu = read_measure(&a.measure)?;
    let counts = cut_counts(&batch, &mu)?;
    let nh = *counts.get(a.h).ok_or_else(|| CliError::validation("argument", format!("no cut {}", a.h)))?;
    let mut rep = edge_rescale(&batch, &mu, a.h, a.m)?;
    let (reference, info) = reference_batch(&a.reference, mu.beta(), nh)?;
    let map = monotone_transport_to_cut(&gaussian_measure(mu.beta())?, &mu, a.h)?;
    let pass = rep.compare(&reference, &map, batch.n())?.pass;
    let bytes = match a.format {
        Format::Csv => csv(
            &["sample", "k", "value"],
            rep.values.iter().enumerate().map(|(idx, v)| vec![(idx / a.m).to_string(), (1 + idx % a.m).to_string(), num(*v)]),
        ),
        Format::Json => json_bytes(&envelope(&Command::Edge(a.clone()), &json!({ "report": rep, "reference": info }))?)?,
    };
    emit(a.out.as_deref(), &bytes)?;
    Ok(status(ctx, pass))
}

fn filling(a: FillingArgs) -> Result<u8> {
    let batch = read_batch(&a.batch)?;
    let mu = read_measure(&a.measure)?;
    let rep = filling_counts(&batch, &mu)?;
    let bytes = match a.format {
        Format::Csv => {
            let mut header: Vec<String> = (0..mu.cut_count()).map(|h| format!("deviation_{h}")).collect();
            header.push("probability".into());
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            csv(&header, rep.pmf.iter().map(|(d, p)| d.iter().map(i64::to_string).chain(std::iter::once(num(*p))).collect()))
        }
        Format::Json => json_bytes(&envelope(&Command::Filling(a.clone()), &rep)?)?,
    };
    emit(a.out.as_deref(), &bytes)?;
    Ok(0)
}

fn loopcheck(ctx: &Context, a: LoopArgs) -> Result<u8> {
    let batch = read_batch(&a.batch)?;
    let mu = read_measure(&a.measure)?;
    let base = Poly(a.f.clone());
    let f = Truncated { f: &base, window: Plateau::new(&mu.geometry) };
    let ks = a.k.iter().map(|s| parse_poly(s)).collect::<Result<Vec<_>>>()?;
    let kref: Vec<&dyn RealFunction> = ks.iter().map(|k| k as &dyn RealFunction).collect();
    let r = loop_residual(&batch, &mu, &f, a.order, &kref)?;
    let z = r.z();
    let pass = z.abs() <= a.z_max;
    let bytes = match a.format {
        Format::Csv => csv(
            &["order", "residual", "se", "z", "n_samples"],
            [vec![r.order.to_string(), num(r.residual), num(r.se), num(z), r.n_samples.to_string()]],
        ),
        Format::Json => json_bytes(&envelope(&Command::Loopcheck(a.clone()), &json!({ "residual": r, "z": z, "pass": pass }))?)?,
    };
    emit(a.out.as_deref(), &bytes)?;
    Ok(status(ctx, pass))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Pipeline {
    steps: Vec<Step>,
}

/// One node: a subcommand given either as CLI arguments or as the resolved
/// `config` object embedded in an artifact.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Step {
    name: String,
    command: String,
    #[serde(default)]
    needs: Vec<String>,
    args: Option<Vec<String>>,
    config: Option<serde_json::Value>,
}

#[derive(clap::Parser)]
#[command(name = "loggas", no_binary_name = false)]
struct StepCli {
    #[command(subcommand)]
    command: Command,
}

fn step_command(s: &Step) -> Result<Command> {
    let cmd = match (&s.args, &s.config) {
        (Some(args), None) => {
            use clap::Parser;
            let argv = ["loggas".to_string(), s.command.clone()].into_iter().chain(args.iter().cloned());
            StepCli::try_parse_from(argv).map_err(|e| CliError::validation("usage", format!("step {}: {e}", s.name)))?.command
        }
        (None, Some(config)) => serde_json::from_value(json!({ "command": s.command, "config": config }))
            .map_err(|e| CliError::validation("json", format!("step {}: {e}", s.name)))?,
        _ => return Err(CliError::validation("argument", format!("step {} needs exactly one of args and config", s.name))),
    };
    if matches!(cmd, Command::Pipeline(_)) {
        return Err(CliError::validation("argument", format!("step {} nests a pipeline", s.name)));
    }
    Ok(cmd)
}

/// Steps in dependency order; among ready steps the earliest in the file goes first.
fn schedule(steps: &[Step]) -> Result<Vec<usize>> {
    let index: BTreeMap<&str, usize> = steps.iter().enumerate().map(|(i, s)| (s.name.as_str(), i)).collect();
    if index.len() != steps.len() {
        return Err(CliError::validation("argument", "step names must be unique"));
    }
    let mut indegree = vec![0; steps.len()];
    let mut children = vec![Vec::new(); steps.len()];
    for (i, s) in steps.iter().enumerate() {
        for d in &s.needs {
            let &j =
                index.get(d.as_str()).ok_or_else(|| CliError::validation("argument", format!("step {} needs unknown step {d}", s.name)))?;
            indegree[i] += 1;
            children[j].push(i);
        }
    }
    let mut ready: VecDeque<usize> = (0..steps.len()).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(steps.len());
    while let Some(i) = ready.pop_front() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push_back(c);
            }
        }
        ready.make_contiguous().sort_unstable();
    }
    if order.len() != steps.len() {
        return Err(CliError::validation("argument", "pipeline steps form a cycle"));
    }
    Ok(order)
}

fn pipeline(ctx: &Context, a: PipelineArgs) -> Result<u8> {
    let p: Pipeline = serde_json::from_str(&read_text(&a.file)?)?;
    let commands = p.steps.iter().map(step_command).collect::<Result<Vec<_>>>()?;
    let order = schedule(&p.steps)?;
    let mut worst = 0;
    for i in order {
        ctx.log(LogLevel::Info, json!({ "step": p.steps[i].name, "command": p.steps[i].command }));
        let code = run(ctx, commands[i].clone()).map_err(|mut e| {
            e.message = format!("step {}: {}", p.steps[i].name, e.message);
            e
        })?;
        worst = worst.max(code);
    }
    Ok(worst)
}
