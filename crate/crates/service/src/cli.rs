//! Command-line entry points: `serve`, `eval` and `bootstrap`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lpchat_core::ir::EquivalenceMode;
use lpchat_gateway::{prompts, BackendConfig, Gateway, GatewayError, Transcript};
use lpchat_pipeline::eval::{
    bootstrap_generate, evaluate, load_dataset, render_table, write_queue, BootstrapError, DatasetError, EvalError,
    EvalOptions, EvalReport,
};
use thiserror::Error;

use crate::config::{ConfigError, ServiceConfig};
use crate::store::StoreError;

#[derive(Debug, Parser)]
#[command(name = "lpchat", version, about = "Conversational optimization modeling service")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score formulation accuracy on one or more datasets.
    Eval(EvalArgs),
    /// Ask a backend for new problems modeled on seed samples.
    Bootstrap(BootstrapArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSON Lines dataset; repeat for several rows of the table.
    #[arg(long, required = true)]
    pub dataset: Vec<PathBuf>,
    /// `scripted:<fixtures.json>`, optionally prefixed with `<label>=`.
    #[arg(long)]
    pub backend: Vec<String>,
    /// TOML file holding a backend section; repeatable.
    #[arg(long)]
    pub backend_config: Vec<PathBuf>,
    #[arg(long, default_value = "strict")]
    pub mode: EquivalenceMode,
    #[arg(long, default_value_t = 1)]
    pub shots: usize,
    #[arg(long, default_value_t = 2)]
    pub max_retries: usize,
    /// Where to write the JSON report; the table goes next to it as `.txt`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Record every backend exchange to this JSON Lines file.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[arg(long)]
    pub seeds: PathBuf,
    #[arg(long)]
    pub n: usize,
    /// Label queue; candidates are appended.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub backend_config: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Backend(#[from] GatewayError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Bootstrap(#[from] BootstrapError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// A named backend for one table column.
pub struct NamedBackend {
    pub label: String,
    pub gateway: Gateway,
}

/// Parses `[label=]scripted:<path>`. The label defaults to the file stem.
pub fn parse_backend_spec(spec: &str) -> Result<NamedBackend, CliError> {
    let (label, rest) = match spec.split_once('=') {
        Some((l, r)) if !l.contains(':') => (Some(l.to_string()), r),
        _ => (None, spec),
    };
    let path = rest
        .strip_prefix("scripted:")
        .ok_or_else(|| CliError::Usage(format!("unsupported backend {spec:?}; use scripted:<path> or --backend-config")))?;
    let path = PathBuf::from(path);
    let label = label.unwrap_or_else(|| stem(&path));
    let gateway = Gateway::from_config(&BackendConfig::scripted(&path))?;
    Ok(NamedBackend { label, gateway })
}

/// Reads a backend from TOML, either bare or under `[backend]`.
pub fn load_backend_config(path: &Path) -> Result<NamedBackend, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    #[derive(serde::Deserialize)]
    struct Wrapped {
        backend: BackendConfig,
    }
    let mut cfg = match toml::from_str::<Wrapped>(&text) {
        Ok(w) => w.backend,
        Err(_) => toml::from_str::<BackendConfig>(&text).map_err(|e| CliError::Config(e.into()))?,
    };
    if let (Some(f), Some(dir)) = (&cfg.fixtures, path.parent()) {
        if f.is_relative() {
            cfg.fixtures = Some(dir.join(f));
        }
    }
    let label = cfg.model.clone().unwrap_or_else(|| stem(path));
    Ok(NamedBackend {
        label,
        gateway: Gateway::from_config(&cfg)?,
    })
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "backend".into())
}

fn backends(specs: &[String], configs: &[PathBuf]) -> Result<Vec<NamedBackend>, CliError> {
    let mut out = Vec::new();
    for s in specs {
        out.push(parse_backend_spec(s)?);
    }
    for c in configs {
        out.push(load_backend_config(c)?);
    }
    if out.is_empty() {
        return Err(CliError::Usage("give at least one --backend or --backend-config".into()));
    }
    Ok(out)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs every dataset against every backend; returns the reports and the
/// rendered table. With `--report`, both are also written to disk.
pub fn run_eval(args: &EvalArgs) -> Result<(Vec<EvalReport>, String), CliError> {
    if !(1..=3).contains(&args.shots) {
        return Err(CliError::Usage("--shots must be 1, 2 or 3".into()));
    }
    let mut named = backends(&args.backend, &args.backend_config)?;
    if let Some(t) = &args.transcript {
        let transcript = Transcript::file_backed(t).map_err(|source| CliError::Io {
            path: t.clone(),
            source,
        })?;
        for b in &mut named {
            b.gateway = b.gateway.with_transcript(transcript.clone());
        }
    }
    let template = prompts::formulation(args.shots);
    let opts = EvalOptions {
        mode: args.mode,
        max_retries: args.max_retries,
    };
    let mut reports = Vec::new();
    for path in &args.dataset {
        let samples = load_dataset(path)?;
        for b in &named {
            let mut r = evaluate(&stem(path), &samples, &b.gateway, &template, &opts)?;
            r.backend = b.label.clone();
            reports.push(r);
        }
    }
    let table = render_table(&reports);
    if let Some(p) = &args.report {
        write(p, &(serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n"))?;
        write(&p.with_extension("txt"), &table)?;
    }
    Ok((reports, table))
}

/// Returns the number of candidates written and how many passed validation.
pub fn run_bootstrap(args: &BootstrapArgs) -> Result<(usize, usize), CliError> {
    let seeds = load_dataset(&args.seeds)?;
    let specs: Vec<String> = args.backend.iter().cloned().collect();
    let configs: Vec<PathBuf> = args.backend_config.iter().cloned().collect();
    let named = backends(&specs, &configs)?;
    let b = named.into_iter().next().expect("at least one backend");
    let cands = bootstrap_generate(&seeds, &prompts::bootstrap(), args.n, &b.gateway)?;
    write_queue(&args.out, &cands)?;
    Ok((cands.len(), cands.iter().filter(|c| c.valid).count()))
}

pub fn load_service_config(path: &Path) -> Result<ServiceConfig, CliError> {
    Ok(ServiceConfig::load(path)?)
}
