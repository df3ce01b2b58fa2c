//! Command-line front end: argument and config-file handling, the four
//! commands, and atomic file output.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::complexity::{analyze, diversity, ubiquity};
use crate::error::{Error, Result};
use crate::ingest::{
    build_tensor, parse_classifications, parse_deals_in_range, Attribution, FilterParams,
    InvestmentTensor, Taxonomy,
};
use crate::numeric::fmt6;
use crate::specialization::{specialize, SpecializationMatrix, Variant, VariantSpec};
use crate::strategy::{bloc_experiment_with_flows, find_ssset_with, BlocRule, RelatednessOptions};
use crate::synth::{generate, SynthParams};

#[derive(Debug, Parser)]
#[command(name = "geoecon", version, about = "Geoeconomic complexity indices from venture deals")]
pub struct Cli {
    /// Flat key=value file; flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write rva.csv, matrix.csv and indices.json.
    Indices(PipelineArgs),
    /// Write heatmap.csv and scatter.csv.
    Figures(PipelineArgs),
    /// Write ssset.csv, and bloc.json when --bloc is given.
    Simulate(SimulateArgs),
    /// Write synthetic deals.csv and classifications.csv.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Default, Clone)]
pub struct PipelineArgs {
    #[arg(long, value_name = "PATH")]
    pub deals: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub classifications: Option<PathBuf>,
    /// Defaults to the bundled 18-domain taxonomy.
    #[arg(long, value_name = "PATH")]
    pub taxonomy: Option<PathBuf>,
    /// Analysis year; defaults to the latest year in the data.
    #[arg(long)]
    pub year: Option<i32>,
    #[arg(long, value_name = "plain|rounded|windowed")]
    pub variant: Option<String>,
    /// Years pooled by the windowed variant [default: 2].
    #[arg(long)]
    pub window: Option<usize>,
    /// Rounding quantum in USD for the rounded variant [default: 1e8].
    #[arg(long)]
    pub quantum: Option<f64>,
    /// Classification probability threshold [default: 0.5].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Firms kept per country and year [default: 3000].
    #[arg(long = "top-n")]
    pub top_n: Option<usize>,
    /// Minimum yearly raise in USD [default: 1e6].
    #[arg(long = "min-raise")]
    pub min_raise: Option<f64>,
    /// Minimum classified firms per country and year [default: 500].
    #[arg(long = "min-firms")]
    pub min_firms: Option<usize>,
    /// Divide a two-domain firm's funding evenly instead of counting it twice.
    #[arg(long = "split-attribution")]
    pub split_attribution: bool,
    #[arg(long = "min-year")]
    pub min_year: Option<i32>,
    #[arg(long = "max-year")]
    pub max_year: Option<i32>,
    /// Output directory [default: .].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Comma-separated bloc members.
    #[arg(long, value_name = "LIST")]
    pub bloc: Option<String>,
    #[arg(long, value_name = "any|k:N")]
    pub rule: Option<String>,
    /// Leave the focal country out of relatedness counts.
    #[arg(long = "exclude-focal")]
    pub exclude_focal: bool,
}

#[derive(Debug, Args, Default, Clone)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub countries: Option<usize>,
    #[arg(long)]
    pub domains: Option<usize>,
    #[arg(long = "firms-per-country")]
    pub firms_per_country: Option<usize>,
    #[arg(long)]
    pub nestedness: Option<f64>,
    #[arg(long)]
    pub year: Option<i32>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

const CONFIG_KEYS: [&str; 25] = [
    "deals",
    "classifications",
    "taxonomy",
    "year",
    "variant",
    "window",
    "quantum",
    "threshold",
    "top-n",
    "min-raise",
    "min-firms",
    "split-attribution",
    "min-year",
    "max-year",
    "out",
    "bloc",
    "rule",
    "exclude-focal",
    "seed",
    "countries",
    "domains",
    "firms-per-country",
    "nestedness",
    "synth-year",
    "log",
];

/// Parsed `key=value` configuration. Blank lines and `#` comments are
/// ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::parse(n as u64 + 1, "config", format!("expected key=value, found `{line}`"))
            })?;
            let k = k.trim();
            if !CONFIG_KEYS.contains(&k) {
                return Err(Error::parse(
                    n as u64 + 1,
                    "config",
                    format!("unknown config key `{k}`"),
                ));
            }
            values.insert(k.to_owned(), v.trim().to_owned());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Error::InvalidParameter(format!("config key `{key}` has invalid value `{v}`"))
            }),
        }
    }

    fn flag(&self, key: &str) -> Result<bool> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }
}

/// Command-line value when present, otherwise the config value.
fn pick<T: std::str::FromStr>(cli: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>> {
    match cli {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

/// Fully resolved settings for the data-driven commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub deals: PathBuf,
    pub classifications: PathBuf,
    pub taxonomy: Option<PathBuf>,
    pub year: Option<i32>,
    pub variant: VariantSpec,
    pub filters: FilterParams,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn resolve(args: &PipelineArgs, cfg: &ConfigFile) -> Result<Self> {
        let deals: PathBuf = pick(args.deals.clone(), cfg, "deals")?
            .ok_or_else(|| Error::InvalidParameter("--deals is required".into()))?;
        let classifications: PathBuf = pick(args.classifications.clone(), cfg, "classifications")?
            .ok_or_else(|| Error::InvalidParameter("--classifications is required".into()))?;
        let variant: Variant = pick(args.variant.clone(), cfg, "variant")?
            .map(|s: String| s.parse())
            .transpose()?
            .unwrap_or_default();
        // Explicit flags that do not fit the variant are errors; config
        // values for the other variant are ignored so a config file can
        // carry settings for both.
        let conflict = match variant {
            Variant::Plain => (args.window.is_some() || args.quantum.is_some())
                .then_some("--window and --quantum need --variant windowed or rounded"),
            Variant::Rounded => args
                .window
                .is_some()
                .then_some("--window does not apply to the rounded variant"),
            Variant::Windowed => args
                .quantum
                .is_some()
                .then_some("--quantum does not apply to the windowed variant"),
        };
        if let Some(msg) = conflict {
            return Err(Error::InvalidParameter(msg.into()));
        }
        let variant = match variant {
            Variant::Plain => VariantSpec::Plain,
            Variant::Rounded => VariantSpec::Rounded {
                quantum: pick(args.quantum, cfg, "quantum")?.unwrap_or(1e8),
            },
            Variant::Windowed => VariantSpec::Windowed {
                window: pick(args.window, cfg, "window")?.unwrap_or(2),
            },
        };
        let defaults = FilterParams::default();
        let split = args.split_attribution || cfg.flag("split-attribution")?;
        let min_year = pick(args.min_year, cfg, "min-year")?.unwrap_or(*defaults.years.start());
        let max_year = pick(args.max_year, cfg, "max-year")?.unwrap_or(*defaults.years.end());
        let filters = FilterParams {
            top_n_firms: pick(args.top_n, cfg, "top-n")?.unwrap_or(defaults.top_n_firms),
            min_raise_usd: pick(args.min_raise, cfg, "min-raise")?.unwrap_or(defaults.min_raise_usd),
            min_classified_firms: pick(args.min_firms, cfg, "min-firms")?
                .unwrap_or(defaults.min_classified_firms),
            probability_threshold: pick(args.threshold, cfg, "threshold")?
                .unwrap_or(defaults.probability_threshold),
            attribution: if split {
                Attribution::Split
            } else {
                Attribution::Full
            },
            years: min_year..=max_year,
        };
        filters.validate()?;
        Ok(Self {
            deals,
            classifications,
            taxonomy: pick(args.taxonomy.clone(), cfg, "taxonomy")?,
            year: pick(args.year, cfg, "year")?,
            variant,
            filters,
            out: pick(args.out.clone(), cfg, "out")?.unwrap_or_else(|| PathBuf::from(".")),
        })
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Reads the three inputs and builds the filtered investment tensor.
pub fn load_tensor(config: &RunConfig) -> Result<(Taxonomy, InvestmentTensor)> {
    let taxonomy = match &config.taxonomy {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })?;
            Taxonomy::from_json(&text)?
        }
        None => Taxonomy::default_emerging(),
    };
    let deals = parse_deals_in_range(open(&config.deals)?, &config.filters.years)
        .map_err(|e| with_path(e, &config.deals))?;
    let assignments = parse_classifications(open(&config.classifications)?)
        .map_err(|e| with_path(e, &config.classifications))?;
    let tensor = build_tensor(&deals, &assignments, &taxonomy, &config.filters)?;
    log::info!(
        "tensor: {} countries, {} domains, years {:?}",
        tensor.countries().len(),
        tensor.domains().len(),
        tensor.years()
    );
    Ok((taxonomy, tensor))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse {
            line,
            field,
            message,
        } => Error::Parse {
            line,
            field,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

fn analysis_year(config: &RunConfig, tensor: &InvestmentTensor) -> Result<i32> {
    match config.year {
        Some(y) => Ok(y),
        None => tensor
            .years()
            .last()
            .copied()
            .ok_or_else(|| Error::Insufficient("no deals survived filtering".into())),
    }
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let io = |source| Error::Io {
        path: dir.join(name),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(target)
}

pub fn cmd_indices(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let (taxonomy, tensor) = load_tensor(config)?;
    let year = analysis_year(config, &tensor)?;
    let (rva, m) = specialize(&tensor, year, &config.variant)?;
    let report = analyze(&m)?;
    Ok(vec![
        write_atomic(&config.out, "rva.csv", &rva.to_csv())?,
        write_atomic(&config.out, "matrix.csv", &m.to_csv())?,
        write_atomic(&config.out, "indices.json", &report.to_indices_json(&taxonomy.ids()))?,
    ])
}

fn order_by(counts: &[usize], labels: &[String]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then_with(|| labels[a].cmp(&labels[b])));
    idx
}

/// M with rows by diversity and columns by ubiquity, both descending, equal
/// counts ordered by label.
pub fn heatmap_csv(m: &SpecializationMatrix) -> String {
    let rows = order_by(&diversity(m), m.countries());
    let cols = order_by(&ubiquity(m), m.domains());
    m.submatrix(&rows, &cols).to_csv()
}

/// Per country: diversity and the mean ubiquity of its specializations.
pub fn scatter_csv(m: &SpecializationMatrix) -> String {
    let div = diversity(m);
    let ubi = ubiquity(m);
    let mut out = String::from("country,diversity,mean_ubiquity\n");
    for i in order_by(&div, m.countries()) {
        let mean = if div[i] == 0 {
            String::new()
        } else {
            let total: usize = (0..m.n_domains()).filter(|&j| m.get(i, j)).map(|j| ubi[j]).sum();
            fmt6(total as f64 / div[i] as f64)
        };
        out.push_str(&format!("{},{},{mean}\n", m.countries()[i], div[i]));
    }
    out
}

pub fn cmd_figures(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let (_, tensor) = load_tensor(config)?;
    let year = analysis_year(config, &tensor)?;
    let (_, m) = specialize(&tensor, year, &config.variant)?;
    Ok(vec![
        write_atomic(&config.out, "heatmap.csv", &heatmap_csv(&m))?,
        write_atomic(&config.out, "scatter.csv", &scatter_csv(&m))?,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlocConfig {
    pub members: Vec<String>,
    pub rule: BlocRule,
}

pub fn cmd_simulate(
    config: &RunConfig,
    bloc: Option<&BlocConfig>,
    options: RelatednessOptions,
) -> Result<Vec<PathBuf>> {
    let (_, tensor) = load_tensor(config)?;
    let year = analysis_year(config, &tensor)?;
    let slice = config.variant.slice(&tensor, year)?;
    let (_, m) = specialize(&tensor, year, &config.variant)?;
    let ssset = find_ssset_with(&m, options)?;
    let mut written = vec![write_atomic(&config.out, "ssset.csv", &ssset.to_csv())?];
    if let Some(b) = bloc {
        let outcome = bloc_experiment_with_flows(&m, Some(&slice), &b.members, b.rule)?;
        written.push(write_atomic(&config.out, "bloc.json", &outcome.to_json())?);
    }
    Ok(written)
}

pub fn cmd_synth(params: &SynthParams, out: &Path) -> Result<Vec<PathBuf>> {
    let data = generate(params)?;
    Ok(vec![
        write_atomic(out, "deals.csv", &data.deals_csv)?,
        write_atomic(out, "classifications.csv", &data.classifications_csv)?,
    ])
}

fn resolve_synth(args: &SynthArgs, cfg: &ConfigFile) -> Result<(SynthParams, PathBuf)> {
    let d = SynthParams::default();
    let seed = pick(args.seed, cfg, "seed")?
        .ok_or_else(|| Error::InvalidParameter("--seed is required".into()))?;
    let params = SynthParams {
        seed,
        countries: pick(args.countries, cfg, "countries")?.unwrap_or(d.countries),
        domains: pick(args.domains, cfg, "domains")?.unwrap_or(d.domains),
        firms_per_country: pick(args.firms_per_country, cfg, "firms-per-country")?
            .unwrap_or(d.firms_per_country),
        nestedness: pick(args.nestedness, cfg, "nestedness")?.unwrap_or(d.nestedness),
        year: pick(args.year, cfg, "synth-year")?.unwrap_or(d.year),
    };
    let out = pick(args.out.clone(), cfg, "out")?.unwrap_or_else(|| PathBuf::from("."));
    Ok((params, out))
}

fn resolve_bloc(args: &SimulateArgs, cfg: &ConfigFile) -> Result<Option<BlocConfig>> {
    let rule: Option<String> = pick(args.rule.clone(), cfg, "rule")?;
    let Some(list) = pick::<String>(args.bloc.clone(), cfg, "bloc")? else {
        if rule.is_some() {
            return Err(Error::InvalidParameter("--rule needs --bloc".into()));
        }
        return Ok(None);
    };
    let members: Vec<String> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect();
    let rule = match rule {
        Some(r) => r.parse()?,
        None => BlocRule::AnyMember,
    };
    Ok(Some(BlocConfig { members, rule }))
}

/// Runs a parsed command line and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match &cli.command {
        Command::Indices(a) => cmd_indices(&RunConfig::resolve(a, &cfg)?),
        Command::Figures(a) => cmd_figures(&RunConfig::resolve(a, &cfg)?),
        Command::Simulate(a) => {
            let config = RunConfig::resolve(&a.pipeline, &cfg)?;
            let bloc = resolve_bloc(a, &cfg)?;
            let options = RelatednessOptions {
                exclude_focal: a.exclude_focal || cfg.flag("exclude-focal")?,
            };
            cmd_simulate(&config, bloc.as_ref(), options)
        }
        Command::Synth(a) => {
            let (params, out) = resolve_synth(a, &cfg)?;
            cmd_synth(&params, &out)
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("GEOECON_LOG", "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                log::info!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let cfg = ConfigFile::parse("# comment\n\ndeals = a.csv\ntop-n=10\n").unwrap();
        assert_eq!(cfg.get::<String>("deals").unwrap().as_deref(), Some("a.csv"));
        assert_eq!(cfg.get::<usize>("top-n").unwrap(), Some(10));
        assert!(ConfigFile::parse("colour=blue\n").is_err());
        assert!(ConfigFile::parse("deals\n").is_err());
    }

    #[test]
    fn command_line_beats_config() {
        let cfg = ConfigFile::parse("deals=a.csv\nclassifications=b.csv\ntop-n=10\n").unwrap();
        let args = PipelineArgs {
            top_n: Some(20),
            ..Default::default()
        };
        let rc = RunConfig::resolve(&args, &cfg).unwrap();
        assert_eq!(rc.filters.top_n_firms, 20);
        assert_eq!(rc.deals, PathBuf::from("a.csv"));
    }

    #[test]
    fn variant_parameters_checked() {
        let cfg = ConfigFile::parse("deals=a\nclassifications=b\n").unwrap();
        let args = PipelineArgs {
            window: Some(3),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&args, &cfg).is_err());
        let args = PipelineArgs {
            variant: Some("rounded".into()),
            ..Default::default()
        };
        assert_eq!(
            RunConfig::resolve(&args, &cfg).unwrap().variant,
            VariantSpec::Rounded { quantum: 1e8 }
        );
    }

    #[test]
    fn figure_ordering_all_ties_is_lexicographic() {
        let m = SpecializationMatrix::new(
            vec!["b".into(), "a".into()],
            vec!["y".into(), "x".into()],
            vec![vec![1, 1], vec![1, 1]],
        )
        .unwrap();
        assert_eq!(heatmap_csv(&m), "country,x,y\na,1,1\nb,1,1\n");
    }

    #[test]
    fn scatter_mean_ubiquity() {
        let m = SpecializationMatrix::from_cells(vec![
            vec![1, 1, 0],
            vec![1, 1, 0],
            vec![0, 1, 1],
            vec![0, 1, 0],
        ])
        .unwrap();
        let text = scatter_csv(&m);
        assert!(text.contains("c0,2,3.000000\n"));
    }
}
