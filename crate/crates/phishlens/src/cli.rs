//! Command-line interface: `scan` one email or `evaluate` a corpus.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use phishlens_core::eval::table_row;
use phishlens_core::pipeline::{interpret, prepare, PrepareOptions, DEFAULT_DUMMY_ADDRESS};
use phishlens_core::prompt::PromptVariant;
use phishlens_core::tokens::DEFAULT_TOKEN_LIMIT;
use phishlens_core::{
    build_function_schema, verdict_to_json, DetectionVerdict, HeaderDenylist, PromptStyle,
    RawEmail, SimplifyOptions, TokenBudget, TokenizerRegistry,
};

use crate::config::{
    ConfigError, ConfigFile, ProviderProfile, RetryPolicy, DEFAULT_OUT_DIR, DEFAULT_PROFILE,
    DEFAULT_WORKERS,
};
use crate::dataset::load_dataset;
use crate::evaluate::{evaluate_corpus, EvalOptions, RecordCache};
use crate::gateway::Gateway;
use crate::report::{read_records, write_artifacts, RECORDS_FILE};

pub const EXIT_LEGITIMATE: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_PHISHING: u8 = 2;

/// Description of every config-file key, shown by `--help`.
pub const CONFIG_KEY_DOCS: &[(&str, &str)] = &[
    ("profile", "provider profile name (--profile)"),
    ("prompt", "\"normal\" or \"simple\" (--prompt)"),
    ("token_limit", "token budget for the serialized email (--token-limit)"),
    ("out", "output directory for evaluate artifacts (--out)"),
    ("workers", "evaluation worker threads (--workers)"),
    ("dummy_to", "address that replaces recipient addresses (--dummy-to)"),
    ("tokenizer", "tokenizer id used for budgets, overriding the profile's [default: approx4]"),
    ("keep_attributes", "HTML attributes kept when pruning [default: src, href, alt, title, name, id, class]"),
    ("elision_marker", "line inserted where plain-text lines were removed [default: [...]]"),
    ("retry", "object with the retry policy for transient provider errors"),
    ("retry.max_attempts", "attempts per request including the first [default: 3]"),
    ("retry.initial_backoff_ms", "delay before the first retry, doubled after each failure [default: 1000]"),
    ("failure_rate_ceiling", "fraction of failed samples above which evaluate exits 1 [default: 1.0]"),
    ("header_denylist", "extra header-name glob patterns to strip, added to X-*, DKIM-Signature, ARC-*"),
    ("profiles", "list of provider profiles; a name matching a built-in profile replaces it"),
    ("profiles[].name", "profile name used with --profile"),
    ("profiles[].provider", "\"openai\" (chat completions with tool calling) or \"mock\" (offline keyword rules)"),
    ("profiles[].endpoint", "chat-completions URL"),
    ("profiles[].model_id", "model name sent to the provider"),
    ("profiles[].supports_structured_output", "declare the verdict function as a tool; otherwise the prompt spells out the JSON keys"),
    ("profiles[].tokenizer", "tokenizer id for budgets [default: approx4]"),
    ("profiles[].price_per_1k_input", "USD per 1,000 input tokens"),
    ("profiles[].price_per_1k_output", "USD per 1,000 output tokens"),
    ("profiles[].max_in_flight", "maximum concurrent requests for the profile"),
    ("profiles[].timeout_secs", "per-request timeout in seconds"),
    ("profiles[].credential_env", "environment variable holding the API key"),
    ("profiles[].mock_rules", "keyword table for mock profiles"),
    ("profiles[].mock_rules.keywords", "body keywords that make the mock answer phishing [default: verify, urgent, suspended, click]"),
    ("profiles[].mock_rules.phishing_score", "score reported for phishing [default: 8]"),
    ("profiles[].mock_rules.legitimate_score", "score reported for legitimate mail [default: 1]"),
];

fn long_help() -> String {
    let mut text = String::from(
        "Settings come from, in order of precedence: command-line flags, the --config file, built-in defaults.\n\n\
         Built-in profiles: mock (offline), gpt-4, gpt-3.5-turbo (API key in OPENAI_API_KEY).\n\n\
         Exit codes for scan: 0 legitimate, 2 phishing, 1 error.\n\n\
         CONFIG FILE KEYS (JSON object):\n",
    );
    for (key, doc) in CONFIG_KEY_DOCS {
        text.push_str(&format!("  {key}\n      {doc}\n"));
    }
    text
}

#[derive(Debug, Parser)]
#[command(
    name = "phishlens",
    version,
    about = "Phishing-email analysis with LLM providers"
)]
#[command(after_long_help = long_help())]
pub struct Cli {
    #[command(flatten)]
    pub settings: Settings,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// JSON config file; keys are listed under CONFIG FILE KEYS
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Provider profile [default: mock]
    #[arg(long, global = true, value_name = "NAME")]
    pub profile: Option<String>,
    /// Prompt style [default: normal]
    #[arg(long, global = true, value_enum)]
    pub prompt: Option<PromptArg>,
    /// Token budget for the serialized email [default: 3000]
    #[arg(long, global = true, value_name = "N")]
    pub token_limit: Option<usize>,
    /// Output directory for evaluate artifacts [default: phishlens-out]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Evaluation worker threads [default: 4]
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Address that replaces recipient addresses [default: user@example.com]
    #[arg(long, global = true, value_name = "ADDRESS")]
    pub dummy_to: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PromptArg {
    Normal,
    Simple,
}

impl From<PromptArg> for PromptStyle {
    fn from(arg: PromptArg) -> Self {
        match arg {
            PromptArg::Normal => PromptStyle::Normal,
            PromptArg::Simple => PromptStyle::Simple,
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Analyse one .eml file and print the JSON verdict
    Scan {
        /// The .eml file
        path: PathBuf,
    },
    /// Evaluate a corpus laid out as ROOT/phishing/*.eml and ROOT/legitimate/*.eml
    Evaluate {
        /// Dataset root
        root: PathBuf,
    },
}

/// What one invocation works on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Email(PathBuf),
    Dataset(PathBuf),
}

/// Settings after merging flags, config file and defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub profile: ProviderProfile,
    pub style: PromptStyle,
    pub budget: TokenBudget,
    pub target: Target,
    pub out: PathBuf,
    pub workers: usize,
    pub dummy_to: String,
    pub retry: RetryPolicy,
    pub failure_rate_ceiling: f64,
    pub denylist: HeaderDenylist,
    pub simplify: SimplifyOptions,
}

impl RunConfig {
    pub fn resolve(settings: &Settings, target: Target) -> Result<Self, ConfigError> {
        let file = match &settings.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let profile_name = settings
            .profile
            .clone()
            .or(file.profile.clone())
            .unwrap_or(DEFAULT_PROFILE.into());
        let limit = settings
            .token_limit
            .or(file.token_limit)
            .unwrap_or(DEFAULT_TOKEN_LIMIT);
        let workers = settings.workers.or(file.workers).unwrap_or(DEFAULT_WORKERS);
        if workers == 0 {
            return Err(ConfigError::ZeroWorkers);
        }
        let mut profile = file.find_profile(&profile_name)?;
        if let Some(tokenizer) = &file.tokenizer {
            profile.tokenizer = tokenizer.clone();
        }
        let mut simplify = SimplifyOptions::default();
        if let Some(keep) = &file.keep_attributes {
            simplify.keep_attributes = keep.clone();
        }
        if let Some(marker) = &file.elision_marker {
            simplify.elision_marker = marker.clone();
        }
        Ok(Self {
            profile,
            style: settings
                .prompt
                .map(PromptStyle::from)
                .or(file.prompt)
                .unwrap_or_default(),
            budget: TokenBudget::new(limit).ok_or(ConfigError::ZeroTokenLimit)?,
            target,
            out: settings
                .out
                .clone()
                .or(file.out.clone())
                .unwrap_or(DEFAULT_OUT_DIR.into()),
            workers,
            dummy_to: settings
                .dummy_to
                .clone()
                .or(file.dummy_to.clone())
                .unwrap_or(DEFAULT_DUMMY_ADDRESS.into()),
            retry: file.retry.unwrap_or_default(),
            failure_rate_ceiling: file.failure_rate_ceiling.unwrap_or(1.0),
            denylist: HeaderDenylist::with_extra(file.header_denylist.clone().unwrap_or_default()),
            simplify,
        })
    }

    pub fn variant(&self) -> PromptVariant {
        PromptVariant::new(self.style, self.profile.supports_structured_output)
    }

    pub fn prepare_options(&self) -> PrepareOptions {
        PrepareOptions {
            denylist: self.denylist.clone(),
            dummy_address: self.dummy_to.clone(),
            budget: self.budget,
            simplify: self.simplify.clone(),
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let target = match &cli.command {
        Command::Scan { path } => Target::Email(path.clone()),
        Command::Evaluate { root } => Target::Dataset(root.clone()),
    };
    let result = RunConfig::resolve(&cli.settings, target)
        .map_err(|e| e.to_string())
        .and_then(|config| match &config.target {
            Target::Email(path) => scan(path, &config, stdout),
            Target::Dataset(root) => evaluate(root, &config, stdout, stderr),
        });
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(stderr, "error: {message}");
            EXIT_ERROR
        }
    }
}

fn tokenizer_registry() -> TokenizerRegistry {
    TokenizerRegistry::default()
}

/// Runs the pipeline on one email and prints its verdict.
pub fn scan_verdict(path: &Path, config: &RunConfig) -> Result<DetectionVerdict, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let raw = RawEmail::new(bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    let registry = tokenizer_registry();
    let tokenizer = registry
        .get(&config.profile.tokenizer)
        .map_err(|e| e.to_string())?;
    let variant = config.variant();
    let prepared =
        prepare(&raw, variant, tokenizer, &config.prepare_options()).map_err(|e| e.to_string())?;
    let gateway =
        Gateway::from_profile(config.profile.clone(), config.retry).map_err(|e| e.to_string())?;
    let schema = build_function_schema(variant);
    let response = gateway
        .submit(&prepared.prompt, &schema)
        .map_err(|e| e.to_string())?;
    let (verdict, _) = interpret(&response, &schema, variant).map_err(|e| e.to_string())?;
    Ok(verdict)
}

fn scan(path: &Path, config: &RunConfig, stdout: &mut dyn Write) -> Result<u8, String> {
    let verdict = scan_verdict(path, config)?;
    writeln!(stdout, "{}", verdict_to_json(&verdict)).map_err(|e| e.to_string())?;
    Ok(if verdict.is_phishing {
        EXIT_PHISHING
    } else {
        EXIT_LEGITIMATE
    })
}

fn evaluate(
    root: &Path,
    config: &RunConfig,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<u8, String> {
    let dataset = load_dataset(root).map_err(|e| e.to_string())?;
    let registry = tokenizer_registry();
    let tokenizer = registry
        .get(&config.profile.tokenizer)
        .map_err(|e| e.to_string())?;
    let gateway =
        Gateway::from_profile(config.profile.clone(), config.retry).map_err(|e| e.to_string())?;
    let records_path = config.out.join(RECORDS_FILE);
    let cache = RecordCache::from_records(read_records(&records_path).map_err(|e| e.to_string())?);
    let options = EvalOptions {
        variant: config.variant(),
        prepare: config.prepare_options(),
        workers: config.workers,
    };
    let run = evaluate_corpus(&dataset.samples, &gateway, tokenizer, &options, &cache);
    write_artifacts(&config.out, &run, config.profile.pricing())
        .map_err(|e| format!("cannot write artifacts to {}: {e}", config.out.display()))?;

    let _ = writeln!(
        stderr,
        "{} samples, {} skipped, {} errors, {} cached; cost ${:.4}; artifacts in {}",
        run.records.len(),
        dataset.skipped.len(),
        run.summary.errors,
        run.cache_hits,
        run.cost.total_cost,
        config.out.display()
    );
    writeln!(stdout, "{}", table_row(&run.summary.matrix)).map_err(|e| e.to_string())?;
    if run.failure_rate() > config.failure_rate_ceiling {
        let _ = writeln!(
            stderr,
            "error: failure rate {:.3} exceeds the ceiling {:.3}",
            run.failure_rate(),
            config.failure_rate_ceiling
        );
        return Ok(EXIT_ERROR);
    }
    Ok(0)
}

/// Keys a config file may contain; used to check the help text.
pub fn documented_keys() -> Vec<&'static str> {
    CONFIG_KEY_DOCS.iter().map(|(k, _)| *k).collect()
}
