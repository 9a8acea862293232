//! Operator entry point: validate / impute / inject / evaluate / gen.
//!
//! Exit codes: 0 success, 1 domain violation (schema invalid, ineligible
//! target, protocol error), 2 usage or I/O problems.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

#[derive(Parser)]
#[command(
    name = "dimpute",
    version,
    about = "Repair missing values in data-warehouse dimension tables using hierarchy and cross-dimension relationships"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by the commands that run imputation.
#[derive(Args, Debug, Clone, Default)]
struct RunFlags {
    /// Repair strategy: intra, inter or intra-inter-intra
    #[arg(long)]
    strategy: Option<String>,

    /// Donor policy: first or majority
    #[arg(long)]
    policy: Option<String>,

    /// Similarity threshold for attribute-name matching, in [0, 1]
    #[arg(long)]
    threshold: Option<f64>,

    /// Extra token treated as null on load (repeatable); empty fields are
    /// always null
    #[arg(long = "null-token")]
    null_tokens: Vec<String>,

    /// Number of times the strategy sequence is repeated
    #[arg(long)]
    passes: Option<usize>,

    /// Compare cell values case-insensitively during matching and scoring
    #[arg(long)]
    case_insensitive: bool,

    /// JSON file with attribute alias pairs that override name similarity
    #[arg(long)]
    aliases: Option<PathBuf>,

    /// JSON file with default values for the flags above; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a schema config and its tables against the structural rules
    Validate {
        /// Schema config (JSON)
        schema: PathBuf,
    },

    /// Repair missing values; writes repaired tables, a fill log and a
    /// summary into the output directory
    Impute {
        schema: PathBuf,

        /// Output directory (created if absent); inputs are never modified
        #[arg(long)]
        out: PathBuf,

        #[command(flatten)]
        flags: RunFlags,
    },

    /// Null a fraction of one attribute's values and record the originals
    Inject {
        schema: PathBuf,

        /// Target as dimension.attribute
        #[arg(long)]
        attr: String,

        /// Missing rate in (0, 1]
        #[arg(long)]
        rate: f64,

        #[arg(long, default_value_t = 42)]
        seed: u64,

        #[arg(long)]
        out: PathBuf,

        /// Extra token treated as null on load (repeatable)
        #[arg(long = "null-token")]
        null_tokens: Vec<String>,
    },

    /// Run the injection/imputation benchmark over a grid of missing rates
    Evaluate {
        schema: PathBuf,

        /// Missing rates as percentages, comma separated
        #[arg(long, default_value = "1,5,10,20,30,40,50")]
        rates: String,

        #[arg(long, default_value_t = 20)]
        trials: usize,

        #[arg(long, default_value_t = 42)]
        seed: u64,

        #[arg(long)]
        out: PathBuf,

        /// Restrict injection to these dimension.attribute targets
        /// (repeatable); default is every eligible attribute
        #[arg(long = "attr")]
        attrs: Vec<String>,

        /// Worker threads for trials; 1 keeps runtime curves reproducible
        #[arg(long, default_value_t = 1)]
        jobs: usize,

        /// Also write a per-attribute breakdown CSV
        #[arg(long)]
        per_attribute: bool,

        #[command(flatten)]
        flags: RunFlags,
    },

    /// Generate a synthetic hierarchical dimension (schema + CSV)
    Gen {
        /// Number of levels including the identifier
        #[arg(long)]
        levels: usize,

        /// Comma-separated fanouts, one per non-identifier level; the first
        /// is rows per distinct level-1 value
        #[arg(long)]
        fanout: String,

        #[arg(long)]
        rows: usize,

        /// Comma-separated weak-attribute counts, one per level
        #[arg(long)]
        weak: Option<String>,

        /// Fraction of values mapping to two distinct parents; 0 = strict
        #[arg(long, default_value_t = 0.0)]
        non_strict: f64,

        #[arg(long, default_value_t = 42)]
        seed: u64,

        #[arg(long, default_value = "dim")]
        name: String,

        #[arg(long)]
        out: PathBuf,
    },
}

fn classify(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<dimpute::Error>() {
        Some(
            dimpute::Error::InvalidSchema(_)
            | dimpute::Error::IneligibleAttribute { .. }
            | dimpute::Error::RateOutOfRange { .. }
            | dimpute::Error::ProtocolViolation { .. }
            | dimpute::Error::StaleLink { .. }
            | dimpute::Error::IdentifierTarget { .. }
            | dimpute::Error::NotWeakAttribute { .. }
            | dimpute::Error::UnknownParameter { .. }
            | dimpute::Error::UnknownHierarchyAttribute { .. }
            | dimpute::Error::UnknownDimension { .. }
            | dimpute::Error::UnknownHierarchy { .. }
            | dimpute::Error::UnknownColumn { .. }
            | dimpute::Error::SyntheticSpec { .. },
        ) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate { schema } => commands::validate(&schema),
        Command::Impute { schema, out, flags } => commands::impute(&schema, &out, &flags),
        Command::Inject {
            schema,
            attr,
            rate,
            seed,
            out,
            null_tokens,
        } => commands::inject(&schema, &attr, rate, seed, &out, &null_tokens),
        Command::Evaluate {
            schema,
            rates,
            trials,
            seed,
            out,
            attrs,
            jobs,
            per_attribute,
            flags,
        } => commands::evaluate(
            &schema,
            &rates,
            trials,
            seed,
            &out,
            &attrs,
            jobs,
            per_attribute,
            &flags,
        ),
        Command::Gen {
            levels,
            fanout,
            rows,
            weak,
            non_strict,
            seed,
            name,
            out,
        } => commands::generate(
            levels,
            &fanout,
            rows,
            weak.as_deref(),
            non_strict,
            seed,
            &name,
            &out,
        ),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}
