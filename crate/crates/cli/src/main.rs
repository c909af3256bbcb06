use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use viewlens::report::{self, InputDigest, Report, Timing};
use viewlens::syntax::{self, ParseError};
use viewlens::{Options, ViewSpec};

use viewlens_cli::generate;

#[derive(Debug, Parser)]
#[command(name = "viewlens", version, about = "Invertibility, rewriting and update translation for relational views")]
struct Cli {
    /// Maximum number of chase steps per chase run.
    #[arg(long, global = true, env = "VIEWLENS_BUDGET")]
    budget: Option<usize>,
    /// Number of fresh constants used by bounded searches.
    #[arg(long, global = true)]
    domain_bound: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for `generate`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Record elapsed wall-clock time in the report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether every database symbol is determined by the view.
    CheckInvertibility { spec: PathBuf },
    /// Synthesize a rewriting of every database symbol over the view.
    Rewrite {
        spec: PathBuf,
        #[arg(long)]
        max_atoms: Option<usize>,
    },
    /// Check that the second view complements the first; with --facts and
    /// --update also check that the update keeps the complement constant.
    CheckComplement {
        spec: PathBuf,
        complement: PathBuf,
        #[arg(long, requires = "update")]
        facts: Option<PathBuf>,
        #[arg(long, requires = "facts")]
        update: Option<PathBuf>,
    },
    /// Translate a view update at a database instance.
    Translate {
        spec: PathBuf,
        #[arg(long)]
        facts: PathBuf,
        #[arg(long)]
        update: PathBuf,
    },
    /// Decide translatability at one instance (--facts) or at every view
    /// state (--everywhere, the default).
    CheckUpdate {
        spec: PathBuf,
        #[arg(long)]
        update: PathBuf,
        #[arg(long, conflicts_with = "facts")]
        everywhere: bool,
        #[arg(long)]
        facts: Option<PathBuf>,
    },
    /// Decide whether the constraints of the specification imply a goal.
    Implies {
        spec: PathBuf,
        #[arg(long)]
        goal: PathBuf,
    },
    /// Brute-force the specification over a small domain.
    Oracle {
        spec: PathBuf,
        #[arg(long)]
        domain: Option<usize>,
    },
    /// Print a random weakly acyclic specification.
    Generate,
    /// Print a specification in canonical form.
    Fmt { spec: PathBuf },
}

struct Input {
    path: String,
    text: String,
    digest: InputDigest,
}

fn read(role: &str, path: &Path) -> Result<Input> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let digest = InputDigest::new(role, &path.display().to_string(), &bytes);
    let text = String::from_utf8(bytes).map_err(|_| anyhow!("{} is not valid UTF-8", path.display()))?;
    Ok(Input {
        path: path.display().to_string(),
        text,
        digest,
    })
}

fn parsed<T>(input: &Input, r: Result<T, ParseError>) -> Result<T> {
    r.map_err(|e| anyhow!("{}", e.in_file(&input.path)))
}

fn load_spec(role: &str, path: &Path) -> Result<(ViewSpec, Input)> {
    let input = read(role, path)?;
    let spec = parsed(&input, syntax::parse_spec(&input.text))?;
    Ok((spec, input))
}

fn options(cli: &Cli) -> Options {
    let mut o = Options::default();
    if let Some(b) = cli.budget {
        o = o.with_budget(b);
    }
    if let Some(k) = cli.domain_bound {
        o = o.with_domain_bound(k);
    }
    o
}

fn run(cli: &Cli) -> Result<Option<Report>> {
    let mut opts = options(cli);
    let report = match &cli.command {
        Command::CheckInvertibility { spec } => {
            let (spec, input) = load_spec("spec", spec)?;
            report::check_invertibility(&spec, &opts).with_inputs(vec![input.digest])
        }
        Command::Rewrite { spec, max_atoms } => {
            if let Some(n) = max_atoms {
                opts = opts.with_max_atoms(*n);
            }
            let (spec, input) = load_spec("spec", spec)?;
            report::rewrite(&spec, &opts).with_inputs(vec![input.digest])
        }
        Command::CheckComplement {
            spec,
            complement,
            facts,
            update,
        } => {
            let (f, fi) = load_spec("spec", spec)?;
            let (g, gi) = load_spec("complement", complement)?;
            let mut inputs = vec![fi.digest, gi.digest];
            let extra = match (facts, update) {
                (Some(facts), Some(update)) => {
                    let di = read("facts", facts)?;
                    let db = parsed(&di, syntax::parse_facts(&di.text, f.db_schema()))?;
                    let ui = read("update", update)?;
                    let u = parsed(&ui, syntax::parse_update(&ui.text, f.view_schema()))?;
                    inputs.push(di.digest);
                    inputs.push(ui.digest);
                    Some((u, db))
                }
                _ => None,
            };
            report::check_complement(&f, &g, extra.as_ref().map(|(u, db)| (u, db)), &opts)?.with_inputs(inputs)
        }
        Command::Translate { spec, facts, update } => {
            let (spec, si) = load_spec("spec", spec)?;
            let di = read("facts", facts)?;
            let db = parsed(&di, syntax::parse_facts(&di.text, spec.db_schema()))?;
            let ui = read("update", update)?;
            let u = parsed(&ui, syntax::parse_update(&ui.text, spec.view_schema()))?;
            report::translate_at("translate", &spec, &u, &db, &opts)?.with_inputs(vec![si.digest, di.digest, ui.digest])
        }
        Command::CheckUpdate {
            spec,
            update,
            facts,
            ..
        } => {
            let (spec, si) = load_spec("spec", spec)?;
            let ui = read("update", update)?;
            let u = parsed(&ui, syntax::parse_update(&ui.text, spec.view_schema()))?;
            match facts {
                Some(facts) => {
                    let di = read("facts", facts)?;
                    let db = parsed(&di, syntax::parse_facts(&di.text, spec.db_schema()))?;
                    report::translate_at("check-update", &spec, &u, &db, &opts)?
                        .with_inputs(vec![si.digest, ui.digest, di.digest])
                }
                None => report::translatable_everywhere(&spec, &u, &opts)?.with_inputs(vec![si.digest, ui.digest]),
            }
        }
        Command::Implies { spec, goal } => {
            let (spec, si) = load_spec("spec", spec)?;
            let gi = read("goal", goal)?;
            let g = parsed(&gi, syntax::parse_goal(&gi.text, &spec.schema()))?;
            report::implication(&spec, &g, &opts).with_inputs(vec![si.digest, gi.digest])
        }
        Command::Oracle { spec, domain } => {
            let k = domain.unwrap_or(opts.domain_bound);
            if k == 0 {
                return Err(anyhow!("--domain must be at least 1"));
            }
            let (spec, si) = load_spec("spec", spec)?;
            report::oracle(&spec, k, &opts).with_inputs(vec![si.digest])
        }
        Command::Generate => {
            print!("{}", generate::spec_text(cli.seed.unwrap_or(0)));
            return Ok(None);
        }
        Command::Fmt { spec } => {
            let (spec, _) = load_spec("spec", spec)?;
            print!("{}", syntax::print_spec(&spec));
            return Ok(None);
        }
    };
    Ok(Some(report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(mut report)) => {
            if cli.timing {
                report.timing = Some(Timing {
                    elapsed_ms: start.elapsed().as_millis() as u64,
                });
            }
            match cli.format {
                Format::Json => print!("{}", report.to_json()),
                Format::Text => print!("{}", report.to_text()),
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
