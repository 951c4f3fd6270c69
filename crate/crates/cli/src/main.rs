//! `fcontact`: verify, deform and lift metric f-structures from JSON configs.
//!
//! Every command writes JSON lines to standard output. Exit status is 0 when
//! every check passed, 1 when a verification failed and 2 on a configuration
//! error, which is described on standard error.

mod config;
mod output;
mod pipeline;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fcontact::catalog::{self, CatalogParams};
use fcontact::definition::MapDef;
use fcontact::expr::Params;
use fcontact::rotation_search::{solve_rotation, SolveOptions, TargetVector};
use fcontact::verify::Level;
use fcontact::Error;
use serde_json::{json, Value};

use config::{
    load_catalog, load_structure_file, read_document, CatalogSource, ConfigError, DeckStep, Document, Loaded, Sampling,
    Step, Tolerances, VerifyStep,
};
use output::emit;
use pipeline::{execute, load_pipeline, plan, Overrides, Parts, Plan};

#[derive(Parser)]
#[command(
    name = "fcontact",
    version,
    about = "Construct, deform and verify metric f-contact structures"
)]
struct Cli {
    /// Number of sample points.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Seed for sample points and solver restarts.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Axiom residual tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Cross-check automatic derivatives against finite differences.
    #[arg(long, global = true)]
    fd_check: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SourceArgs {
    /// Structure definition (JSON).
    #[arg(conflicts_with = "catalog")]
    file: Option<PathBuf>,
    /// Use a catalog entry instead of a file.
    #[arg(long)]
    catalog: Option<String>,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    s: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a structure up to a level.
    Verify {
        #[command(flatten)]
        source: SourceArgs,
        /// none, metric-f, f-contact, f-k-contact or s.
        #[arg(long, default_value = "s", value_parser = parse_level)]
        level: Level,
    },
    /// Apply rotate/antirotate/type2 steps from a JSON array, then verify.
    Deform {
        #[command(flatten)]
        source: SourceArgs,
        /// JSON array of steps.
        #[arg(long)]
        steps: PathBuf,
    },
    /// Lift to the product with a line and verify the result.
    Lift {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Restrict to the leaf {last coordinate = 0} and verify the result.
    Slice {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Check that (p, t) ↦ (φ(p), t + t0) preserves the lifted structure.
    CheckDeck {
        #[command(flatten)]
        source: SourceArgs,
        /// Name of a catalog automorphism.
        #[arg(long, conflicts_with = "map", required_unless_present = "map")]
        automorphism: Option<String>,
        /// Map definition (JSON, with `map` and optional `inverse`).
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        t0: f64,
    },
    /// Find an orthogonal A with h(A) = target.
    SearchRotation {
        #[arg(long)]
        s: usize,
        /// Comma-separated entries summing to zero.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        target: Vec<f64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Built-in example structures.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
    /// Run a pipeline document.
    Run { pipeline: PathBuf },
}

#[derive(Subcommand)]
enum CatalogCommand {
    List,
    Show {
        name: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        s: usize,
    },
}

fn parse_level(s: &str) -> Result<Level, String> {
    Level::parse(s).ok_or_else(|| format!("unknown level `{s}`"))
}

enum Failure {
    Config(ConfigError),
    Io(io::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn load_source(args: &SourceArgs) -> Result<Loaded, ConfigError> {
    match (&args.file, &args.catalog) {
        (Some(path), None) => load_structure_file(path),
        (None, Some(name)) => load_catalog(&CatalogSource {
            name: name.clone(),
            n: args.n,
            s: args.s,
        }),
        _ => Err(ConfigError::new("give a structure file or --catalog NAME")),
    }
}

fn command_line() -> Document<()> {
    Document {
        file: "command line".into(),
        text: String::new(),
        root: Value::Null,
        value: (),
        hidden: String::new(),
    }
}

fn verify_step() -> Step {
    Step::Verify(VerifyStep {
        level: Level::S,
        fd_check: false,
    })
}

fn build<T>(
    loaded: Loaded,
    doc: &Document<T>,
    steps: &[Step],
    steps_path: &str,
    ov: &Overrides,
) -> Result<Plan, ConfigError> {
    let parts = Parts {
        steps,
        steps_path,
        sampling: Sampling::default(),
        tol: Tolerances::default(),
        params: &Params::new(),
    };
    plan(loaded, doc, parts, ov)
}

fn run(cli: Cli, out: &mut impl Write) -> Result<bool, Failure> {
    let ov = Overrides {
        samples: cli.samples,
        seed: cli.seed,
        tol: cli.tol,
        fd_check: cli.fd_check,
    };
    let plan = match cli.command {
        Command::Verify { source, level } => {
            let steps = [Step::Verify(VerifyStep { level, fd_check: false })];
            build(load_source(&source)?, &command_line(), &steps, "", &ov)?
        }
        Command::Deform { source, steps } => {
            let doc: Document<Vec<Step>> = read_document(&steps)?;
            if let Some((i, s)) = doc
                .value
                .iter()
                .enumerate()
                .find(|(_, s)| !matches!(s, Step::Rotate(_) | Step::Antirotate(_) | Step::Type2(_)))
            {
                return Err(ConfigError::new(format!(
                    "{}: [{i}]: `{}` is not a deformation; use `run` for general pipelines",
                    doc.file,
                    s.name()
                ))
                .into());
            }
            let mut all = doc.value.clone();
            all.push(verify_step());
            build(load_source(&source)?, &doc, &all, "", &ov)?
        }
        Command::Lift { source } => build(
            load_source(&source)?,
            &command_line(),
            &[Step::Lift, verify_step()],
            "",
            &ov,
        )?,
        Command::Slice { source } => build(
            load_source(&source)?,
            &command_line(),
            &[Step::Slice, verify_step()],
            "",
            &ov,
        )?,
        Command::CheckDeck {
            source,
            automorphism,
            map,
            t0,
        } => {
            let loaded = load_source(&source)?;
            match map {
                Some(path) => {
                    let file: Document<MapDef> = read_document(&path)?;
                    // wrap the map as step 0 so expression errors point into its file
                    let root = json!([{ "check-deck": { "map": file.root, "t0": t0 } }]);
                    let doc = Document {
                        file: file.file,
                        text: file.text,
                        root,
                        value: (),
                        hidden: "[0].check-deck.map.".into(),
                    };
                    let step = Step::CheckDeck(DeckStep {
                        automorphism: None,
                        map: Some(file.value),
                        t0,
                    });
                    build(loaded, &doc, &[step], "", &ov)?
                }
                None => {
                    let step = Step::CheckDeck(DeckStep {
                        automorphism,
                        map: None,
                        t0,
                    });
                    build(loaded, &command_line(), &[step], "", &ov)?
                }
            }
        }
        Command::SearchRotation {
            s,
            target,
            restarts,
            max_iterations,
        } => return search_rotation(s, target, restarts, max_iterations, &ov, out),
        Command::Catalog { command } => return catalog_command(command, out),
        Command::Run { pipeline } => load_pipeline(&pipeline, &ov)?,
    };
    Ok(execute(&plan, out)?)
}

fn search_rotation(
    s: usize,
    target: Vec<f64>,
    restarts: Option<usize>,
    max_iterations: Option<usize>,
    ov: &Overrides,
    out: &mut impl Write,
) -> Result<bool, Failure> {
    if target.len() != s {
        return Err(ConfigError::new(format!("--target has {} entries but --s is {s}", target.len())).into());
    }
    let u = TargetVector::new(target).map_err(|e| ConfigError::new(e.to_string()))?;
    let defaults = SolveOptions::default();
    let opts = SolveOptions {
        seed: ov.seed.unwrap_or(defaults.seed),
        restarts: restarts.unwrap_or(defaults.restarts),
        max_iterations: max_iterations.unwrap_or(defaults.max_iterations),
        ..defaults
    };
    match solve_rotation(&u, &opts) {
        Ok(sol) => {
            let mut rec = serde_json::to_value(&sol).map_err(io::Error::other)?;
            rec["converged"] = json!(true);
            emit(out, &rec)?;
            Ok(true)
        }
        Err(e @ (Error::Precondition(_) | Error::NoConvergence { .. })) => {
            emit(out, &json!({ "converged": false, "error": e.to_string() }))?;
            Ok(false)
        }
        Err(e) => Err(ConfigError::new(e.to_string()).into()),
    }
}

fn catalog_command(command: CatalogCommand, out: &mut impl Write) -> Result<bool, Failure> {
    match command {
        CatalogCommand::List => {
            for info in catalog::list() {
                emit(out, &info)?;
            }
        }
        CatalogCommand::Show { name, n, s } => {
            let e = catalog::get(&name, CatalogParams::new(n, s)).map_err(|e| ConfigError::new(e.to_string()))?;
            let automorphisms: Vec<Value> = e
                .automorphisms
                .iter()
                .map(|a| json!({ "name": a.name, "definition": a.def }))
                .collect();
            emit(
                out,
                &json!({
                    "name": e.name,
                    "params": e.params,
                    "level": e.level,
                    "coords": e.structure.chart().coord_names(),
                    "definition": e.definition,
                    "automorphisms": automorphisms,
                    "horizontal": e.horizontal,
                }),
            )?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
