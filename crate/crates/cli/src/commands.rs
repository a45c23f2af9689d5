use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use log::info;
use serde_json::json;

use nashflow::checker::{check_subflow_decomposition, verify_nash};
use nashflow::decomposition::{decompose, Decomposition};
use nashflow::engine::{construct_nash_flow, EngineError, NashFlowProfile};
use nashflow::export::{decomposition_rows, profile_rows, ExportRow};
use nashflow::generate::{generate_random_instance, GeneratorParams};
use nashflow::io::{
    instance_from_json, instance_to_json, profile_from_json, profile_to_json,
    thin_flow_problem_from_json, thin_flow_to_json,
};
use nashflow::super_sink::build_extended_graph;
use nashflow::thin_flow::{check_thin_flow, solve_thin_flow};
use nashflow::{validate_instance, ValidatedInstance};

use crate::{Command, EngineArgs, Format, ProfileInput};

/// Exit 1 for `Verification`, exit 2 for `Input`.
pub enum Failure {
    Verification(String),
    Input(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
}

fn write_output(out: Option<&PathBuf>, content: &[u8]) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, content).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout()
            .write_all(content)
            .context("writing stdout")?,
    }
    Ok(())
}

fn load_instance(path: &Path) -> Result<ValidatedInstance> {
    let raw =
        instance_from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(validate_instance(raw).map_err(|e| anyhow!("invalid instance {}:\n{e}", path.display()))?)
}

fn engine_failure(e: EngineError) -> Failure {
    match e {
        EngineError::InvalidHorizon(_) | EngineError::InvalidPhaseCap => Failure::Input(e.into()),
        EngineError::CertificationFailed(cert) => Failure::Verification(cert.to_string()),
        other => Failure::Verification(format!("construction failed: {other}")),
    }
}

fn solve(inst: &ValidatedInstance, engine: &EngineArgs) -> Result<NashFlowProfile> {
    let ext = build_extended_graph(inst);
    let p = construct_nash_flow(&ext, &engine.phi_max, engine.phase_cap).map_err(engine_failure)?;
    info!(
        "certified {} phases up to particle {}",
        p.phases.len(),
        p.horizon
    );
    Ok(p)
}

fn load_profile(input: &ProfileInput, engine: &EngineArgs) -> Result<NashFlowProfile> {
    match (&input.profile, &input.instance) {
        (Some(path), _) => Ok(profile_from_json(&read(path)?)
            .with_context(|| format!("parsing {}", path.display()))?),
        (None, Some(path)) => solve(&load_instance(path)?, engine),
        (None, None) => unreachable!("clap requires one input"),
    }
}

fn certified_decomposition(p: &NashFlowProfile) -> Result<Decomposition> {
    let dec =
        decompose(p).map_err(|e| Failure::Verification(format!("decomposition failed: {e}")))?;
    let rep = check_subflow_decomposition(p, &dec);
    if !rep.is_pass() {
        return Err(Failure::Verification(format!(
            "subflow decomposition:\n{rep}"
        )));
    }
    Ok(dec)
}

fn decomposition_json(p: &NashFlowProfile, dec: &Decomposition) -> serde_json::Value {
    let base = p.instance.base();
    let phases: Vec<_> = p
        .phases
        .iter()
        .zip(&dec.phases)
        .map(|(ph, split)| {
            let sinks: Vec<_> = base
                .sinks
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    let arcs: Vec<_> = base
                        .arcs
                        .iter()
                        .zip(&split.arc_flows[j])
                        .filter(|(_, x)| !x.is_zero())
                        .map(|(a, x)| json!({"arc": a.name, "value": x}))
                        .collect();
                    let sources: Vec<_> = base
                        .sources
                        .iter()
                        .zip(&split.source_flows[j])
                        .map(|(src, g)| json!({"node": base.node_name(src.node), "value": g}))
                        .collect();
                    json!({"sink": base.node_name(s.node), "arc_flows": arcs, "source_flows": sources})
                })
                .collect();
            json!({"start": ph.start, "end": ph.end, "sinks": sinks})
        })
        .collect();
    json!({"horizon": p.horizon, "phases": phases})
}

fn render_rows(rows: &[ExportRow], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_vec_pretty(rows).context("serializing rows")?;
            s.push(b'\n');
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).context("writing csv row")?;
            }
            Ok(w.into_inner().map_err(|e| anyhow!("flushing csv: {e}"))?)
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { instance } => {
            let inst = load_instance(&instance)?;
            println!(
                "valid: {} nodes, {} arcs, {} sources, {} sinks",
                inst.node_count(),
                inst.arcs.len(),
                inst.sources.len(),
                inst.sinks.len()
            );
        }
        Command::ThinFlow { instance, out } => {
            let p = thin_flow_problem_from_json(&read(&instance)?)
                .with_context(|| format!("parsing {}", instance.display()))?;
            p.validate()
                .with_context(|| format!("invalid problem {}", instance.display()))?;
            let tf = solve_thin_flow(&p)
                .map_err(|e| Failure::Verification(format!("no thin flow: {e}")))?;
            let rep = check_thin_flow(&p, &tf);
            if !rep.is_pass() {
                return Err(Failure::Verification(rep.to_string()));
            }
            write_output(
                out.as_ref(),
                format!("{}\n", thin_flow_to_json(&p, &tf)).as_bytes(),
            )?;
        }
        Command::Solve {
            instance,
            engine,
            out,
        } => {
            let p = solve(&load_instance(&instance)?, &engine)?;
            write_output(
                out.as_ref(),
                format!("{}\n", profile_to_json(&p)).as_bytes(),
            )?;
        }
        Command::Check { input, engine } => {
            let p = load_profile(&input, &engine)?;
            let cert = verify_nash(&p);
            if !cert.is_pass() {
                return Err(Failure::Verification(cert.to_string()));
            }
            certified_decomposition(&p)?;
            println!(
                "PASS: {} phases certified on particles [0, {}]",
                p.phases.len(),
                cert.window
            );
        }
        Command::Decompose { input, engine, out } => {
            let p = load_profile(&input, &engine)?;
            let dec = certified_decomposition(&p)?;
            let mut s = serde_json::to_string_pretty(&decomposition_json(&p, &dec))
                .context("serializing")?;
            s.push('\n');
            write_output(out.as_ref(), s.as_bytes())?;
        }
        Command::Export {
            input,
            engine,
            format,
            keep_super_sink,
            subflows,
            out,
        } => {
            let p = load_profile(&input, &engine)?;
            let mut rows = profile_rows(&p, keep_super_sink);
            if subflows {
                rows.extend(decomposition_rows(&p, &certified_decomposition(&p)?));
            }
            write_output(out.as_ref(), &render_rows(&rows, format)?)?;
        }
        Command::Generate {
            seed,
            nodes,
            sources,
            sinks,
            extra_arcs,
            back_arcs,
            out,
        } => {
            let params = GeneratorParams {
                nodes,
                max_sources: sources,
                max_sinks: sinks,
                extra_arcs,
                back_arcs,
            };
            let inst = generate_random_instance(seed, &params).map_err(anyhow::Error::from)?;
            write_output(
                out.as_ref(),
                format!("{}\n", instance_to_json(&inst)).as_bytes(),
            )?;
        }
    }
    Ok(())
}
