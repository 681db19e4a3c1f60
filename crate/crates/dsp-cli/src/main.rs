//! Command-line front end for the exact conjugacy-class product solver:
//! decide solvability, construct and verify explicit solution tuples,
//! enumerate roots and apply middle convolution, all over JSON files.
//!
//! Reports go to stdout (or `--out`) as JSON with stable key order; progress
//! and traces go to stderr. Exit codes: 0 success or criterion holds,
//! 2 criterion fails (or a tuple fails verification), 3 proven unsolvable,
//! 4 input error, 5 enumeration budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use mpa::arith::UnitScalar;
use mpa::construct::{
    build_rigid_rep, jordan_normalize, reduction_path, reduction_path_seeded, rep_to_tuple,
    MatrixTuple,
};
use mpa::criterion::{decide, root_catalog, Status, DEFAULT_BUDGET};
use mpa::instance::{build_instance, Instance, InstanceInput};
use mpa::quiver::{Quiver, Vertex};
use mpa::rep::{middle_convolution, Rep};
use mpa::verify::full_report;
use serde_json::json;

const EXIT_OK: u8 = 0;
const EXIT_CRITERION_FAILS: u8 = 2;
const EXIT_NO_SOLUTION: u8 = 3;
const EXIT_INPUT: u8 = 4;
const EXIT_BUDGET: u8 = 5;

#[derive(Parser)]
#[command(
    name = "dsp",
    version,
    about = "Decide and construct irreducible solutions of A_1 ... A_k = 1 \
             with each A_i in a prescribed conjugacy class"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Cap on the number of dimension vectors the root enumeration may visit.
    #[arg(
        long,
        global = true,
        default_value_t = DEFAULT_BUDGET,
        value_parser = clap::value_parser!(u64).range(1..)
    )]
    budget: u64,
    /// Seed for the randomized reduction order; omitted means the
    /// deterministic least-index order.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the JSON report to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Suppress the human-readable summary on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether an instance admits an irreducible solution.
    Decide {
        /// Instance file: {"n": ..., "classes": [...]}.
        instance: PathBuf,
    },
    /// Build an explicit solution in the rigid case and verify it.
    Construct {
        instance: PathBuf,
        /// Conjugate the tuple so the first matrix is in Jordan form.
        #[arg(long)]
        jordan_normalize: bool,
    },
    /// Verify a solution tuple against an instance.
    Verify {
        instance: PathBuf,
        /// Tuple file: a bare tuple or a construct report containing one.
        tuple: PathBuf,
    },
    /// Enumerate the positive roots below alpha and flag the q-null ones.
    Roots {
        instance: PathBuf,
    },
    /// Apply middle convolution to a representation at one vertex.
    Convolve {
        /// Representation file: bare or a convolve report containing one.
        rep: PathBuf,
        /// Vertex label, e.g. "0" or "[1,1]".
        #[arg(long, value_name = "LABEL")]
        vertex: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors are input errors; keep 2 free for failed checks.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_for(&e))
        }
    }
}

fn exit_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<mpa::Error>() {
        Some(mpa::Error::BudgetExceeded { .. }) => EXIT_BUDGET,
        _ => EXIT_INPUT,
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Decide { instance } => cmd_decide(cli, instance),
        Command::Construct {
            instance,
            jordan_normalize,
        } => cmd_construct(cli, instance, *jordan_normalize),
        Command::Verify { instance, tuple } => cmd_verify(cli, instance, tuple),
        Command::Roots { instance } => cmd_roots(cli, instance),
        Command::Convolve { rep, vertex } => cmd_convolve(cli, rep, vertex),
    }
}

fn cmd_decide(cli: &Cli, path: &Path) -> anyhow::Result<u8> {
    let inst = load_instance(path)?;
    let verdict = decide(&inst, cli.budget)?;
    let report = json!({
        "command": "decide",
        "seed": cli.seed,
        "budget": cli.budget,
        "instance": instance_json(&inst),
        "verdict": verdict.to_json(&inst.quiver),
    });
    emit(cli, &report)?;
    note(
        cli,
        &format!(
            "status: {} (p(alpha) = {}, q^alpha = {})",
            verdict.status.as_str(),
            verdict.p_alpha,
            verdict.q_alpha
        ),
    );
    Ok(status_exit(verdict.status))
}

fn cmd_construct(cli: &Cli, path: &Path, normalize: bool) -> anyhow::Result<u8> {
    let inst = load_instance(path)?;
    let verdict = decide(&inst, cli.budget)?;
    if verdict.status != Status::ExistsRigid {
        let message = match verdict.status {
            Status::NoSolutionDet => "no solution exists: q^alpha != 1",
            Status::CriterionFails => "the existence test fails here; nothing to construct",
            Status::ExistsNonrigid => {
                "solutions exist but the dimension vector is an imaginary root: they form \
                 positive-dimensional families that the convolution steps cannot reduce to \
                 a point, so no finite construction is available"
            }
            Status::ExistsRigid => unreachable!(),
        };
        let report = json!({
            "command": "construct",
            "seed": cli.seed,
            "budget": cli.budget,
            "jordan_normalized": normalize,
            "instance": instance_json(&inst),
            "verdict": verdict.to_json(&inst.quiver),
            "refused": message,
        });
        emit(cli, &report)?;
        note(cli, &format!("construct refused: {message}"));
        return Ok(match verdict.status {
            Status::NoSolutionDet => EXIT_NO_SOLUTION,
            Status::CriterionFails => EXIT_CRITERION_FAILS,
            _ => EXIT_INPUT,
        });
    }

    let taken = match cli.seed {
        None => reduction_path(&inst, cli.budget)?,
        Some(s) => reduction_path_seeded(&inst, cli.budget, s)?,
    };
    let rep = build_rigid_rep(&inst, &taken)?;
    let tuple = rep_to_tuple(&inst, &rep)?;
    let (tuple, base_change) = if normalize {
        let (t, s) = jordan_normalize(&inst, &tuple)?;
        (t, Some(s))
    } else {
        (tuple, None)
    };
    let verification = full_report(&inst, &tuple, Some(&rep))?;
    anyhow::ensure!(
        verification.ok,
        "internal error: the constructed tuple failed verification"
    );

    let trace: Vec<String> = taken
        .trace_text(&inst.quiver)
        .lines()
        .map(str::to_string)
        .collect();
    let report = json!({
        "command": "construct",
        "seed": cli.seed,
        "budget": cli.budget,
        "jordan_normalized": normalize,
        "instance": instance_json(&inst),
        "verdict": verdict.to_json(&inst.quiver),
        "trace": trace,
        "tuple": &tuple,
        "base_change": &base_change,
        "rep": &rep,
        "verification": &verification,
    });
    emit(cli, &report)?;
    for line in &trace {
        note(cli, line);
    }
    note(
        cli,
        &format!(
            "constructed {} matrices of size {} over conductor {}; verified: ok",
            tuple.matrices.len(),
            tuple.n,
            tuple.conductor
        ),
    );
    Ok(EXIT_OK)
}

fn cmd_verify(cli: &Cli, inst_path: &Path, tuple_path: &Path) -> anyhow::Result<u8> {
    let inst = load_instance(inst_path)?;
    let tuple: MatrixTuple = read_embedded(tuple_path, "tuple", "a matrix tuple")?;
    let report = full_report(&inst, &tuple, None)?;
    let ok = report.ok;
    let out = json!({
        "command": "verify",
        "seed": cli.seed,
        "budget": cli.budget,
        "instance": instance_json(&inst),
        "report": &report,
    });
    emit(cli, &out)?;
    note(
        cli,
        &format!(
            "product: {}; classes: {}; irreducible: {} (algebra dimension {}); overall: {}",
            report.product_ok,
            report.classes.iter().all(|c| c.membership.in_class),
            report.irreducible,
            report.algebra_dim,
            if ok { "ok" } else { "FAILED" }
        ),
    );
    Ok(if ok { EXIT_OK } else { EXIT_CRITERION_FAILS })
}

fn cmd_roots(cli: &Cli, path: &Path) -> anyhow::Result<u8> {
    let inst = load_instance(path)?;
    let catalog = root_catalog(&inst.quiver, &inst.alpha, &inst.qparam, cli.budget)?;
    let total = catalog.roots.len();
    let null = catalog.q_null_roots().count();
    let report = json!({
        "command": "roots",
        "seed": cli.seed,
        "budget": cli.budget,
        "instance": instance_json(&inst),
        "catalog": catalog.to_json(&inst.quiver),
    });
    emit(cli, &report)?;
    note(
        cli,
        &format!("{total} positive roots at or below alpha, {null} of them q-null"),
    );
    Ok(EXIT_OK)
}

fn cmd_convolve(cli: &Cli, rep_path: &Path, label: &str) -> anyhow::Result<u8> {
    let x: Rep = read_embedded(rep_path, "rep", "a representation")?;
    let v = find_vertex(x.quiver(), label)?;
    let relations = x.check_relations();
    if !relations.ok {
        let failing: Vec<&str> = relations
            .vertices
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.vertex.as_str())
            .collect();
        bail!(
            "input representation violates its defining relations \
             (noninvertible factors at {:?}, failing vertices {:?})",
            relations.noninvertible,
            failing
        );
    }
    let conv = middle_convolution(&x, v)?;
    let quiver = x.quiver();
    let report = json!({
        "command": "convolve",
        "seed": cli.seed,
        "budget": cli.budget,
        "vertex": quiver.label(v),
        "dims_before": quiver.dims_to_json(&conv.dims_before),
        "q_before": labeled_q(quiver, &conv.q_before),
        "dims_after": quiver.dims_to_json(conv.rep.dims()),
        "q_after": labeled_q(quiver, conv.rep.qparam()),
        "rep": &conv.rep,
    });
    emit(cli, &report)?;
    note(
        cli,
        &format!(
            "convolution at {}: dims {:?} -> {:?}",
            quiver.label(v),
            conv.dims_before.0,
            conv.rep.dims().0
        ),
    );
    Ok(EXIT_OK)
}

fn status_exit(status: Status) -> u8 {
    match status {
        Status::ExistsRigid | Status::ExistsNonrigid => EXIT_OK,
        Status::CriterionFails => EXIT_CRITERION_FAILS,
        Status::NoSolutionDet => EXIT_NO_SOLUTION,
    }
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    let input: InstanceInput = read_json(path, "an instance")?;
    Ok(build_instance(&input)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> anyhow::Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("{} does not parse as {what}", path.display()))
}

/// Accepts either the bare object or a report embedding it under `key`, so
/// the output of one run can feed the next without extraction.
fn read_embedded<T: serde::de::DeserializeOwned>(
    path: &Path,
    key: &str,
    what: &str,
) -> anyhow::Result<T> {
    let value: serde_json::Value = read_json(path, what)?;
    let inner = match value.get(key) {
        Some(embedded) => embedded.clone(),
        None => value,
    };
    serde_json::from_value(inner)
        .with_context(|| format!("{} does not parse as {what}", path.display()))
}

/// Derived data echoed in every report: the normalization chosen for the
/// annihilating rows, the quiver, alpha and q, all auditable downstream.
fn instance_json(inst: &Instance) -> serde_json::Value {
    json!({
        "n": inst.n,
        "classes": &inst.classes,
        "w": &inst.w,
        "xi": &inst.xi,
        "conductor": inst.conductor,
        "quiver": &inst.quiver,
        "alpha": inst.quiver.dims_to_json(&inst.alpha),
        "q": inst.qparam_json(),
    })
}

fn labeled_q(quiver: &Quiver, q: &[UnitScalar]) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = q
        .iter()
        .enumerate()
        .map(|(v, s)| {
            (
                quiver.label(v).to_string(),
                serde_json::to_value(s).expect("unit scalar serializes"),
            )
        })
        .collect();
    serde_json::Value::Object(map)
}

fn find_vertex(quiver: &Quiver, label: &str) -> anyhow::Result<Vertex> {
    quiver
        .labels()
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| {
            anyhow::anyhow!(
                "no vertex is labeled {label:?}; available labels: {:?}",
                quiver.labels()
            )
        })
}

fn emit(cli: &Cli, report: &serde_json::Value) -> anyhow::Result<()> {
    let text = format!("{report:#}\n");
    match &cli.out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn note(cli: &Cli, line: &str) {
    if !cli.quiet {
        eprintln!("{line}");
    }
}
