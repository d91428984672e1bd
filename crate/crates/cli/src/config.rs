//! Experiment configuration: a TOML file with sections, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sparsequbo::learn::LearnConfig;
use sparsequbo::samplers::{NebmConfig, SaConfig};
use sparsequbo::strategies::ReverseScheduleConfig;
use sparsequbo::QuboMode;

use crate::MissingInput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Sa,
    Nebm,
    Brute,
    Random,
    ReverseSa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum QuboFileFormat {
    Coo,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// IDX image file or a P5 PGM.
    pub dataset: Option<PathBuf>,
    /// Image index inside an IDX file.
    pub image: usize,
    pub edge: usize,
    /// Directory of ready-made QUBO files, used instead of dataset + dictionary.
    pub qubo_dir: Option<PathBuf>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            dataset: None,
            image: 0,
            edge: 7,
            qubo_dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DictionarySection {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuboSection {
    /// Sparsity penalty; when absent it is read from `learn.json` next to
    /// the dictionary.
    pub lambda: Option<f64>,
    pub mode: QuboMode,
    pub format: QuboFileFormat,
}

impl Default for QuboSection {
    fn default() -> Self {
        Self {
            lambda: None,
            mode: QuboMode::Full,
            format: QuboFileFormat::Coo,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub kind: SamplerKind,
    pub reads: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self {
            kind: SamplerKind::Sa,
            reads: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub iterations: usize,
    pub batch: usize,
    pub s_values: Vec<f64>,
    pub elitist: bool,
    /// Patch indices to process; all when absent.
    pub patches: Option<Vec<usize>>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            iterations: 100,
            batch: 1000,
            s_values: vec![0.44, 0.5, 0.55, 0.6],
            elitist: false,
            patches: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Largest problem for which the exact ground state is computed.
    pub brute_force_max: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self { brute_force_max: 24 }
    }
}

/// Everything a subcommand needs. Library parameter tables (`learn`, `sa`,
/// `nebm`, `reverse`) use the library field names; missing fields keep
/// their library defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub data: DataSection,
    pub dictionary: DictionarySection,
    pub qubo: QuboSection,
    pub sampler: SamplerSection,
    pub protocol: ProtocolSection,
    pub report: ReportSection,
    pub learn: LearnConfig,
    pub sa: SaConfig,
    pub nebm: NebmConfig,
    pub reverse: ReverseScheduleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: None,
            workers: None,
            data: DataSection::default(),
            dictionary: DictionarySection::default(),
            qubo: QuboSection::default(),
            sampler: SamplerSection::default(),
            protocol: ProtocolSection::default(),
            report: ReportSection::default(),
            learn: LearnConfig::default(),
            sa: SaConfig::default(),
            nebm: NebmConfig::default(),
            reverse: ReverseScheduleConfig::default(),
        }
    }
}

/// Flags shared by every subcommand. Each overrides its file counterpart.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerKind>,
    /// Patch subset, e.g. `0,2,5-7`.
    #[arg(long, value_parser = parse_index_list)]
    pub patches: Option<IndexList>,
    /// Anneal fractions for qemc, e.g. `0.44,0.5`.
    #[arg(long, value_delimiter = ',')]
    pub s_values: Option<Vec<f64>>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Worker threads for patch-level parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Reads per sampler call.
    #[arg(long)]
    pub reads: Option<usize>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexList(pub Vec<usize>);

pub fn parse_index_list(text: &str) -> std::result::Result<IndexList, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("`{s}` is not an index"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("no indices given".into());
    }
    Ok(IndexList(out))
}

fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(MissingInput(path.to_path_buf()).into());
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl ExperimentConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let mut cfg: Self = match &args.config {
            Some(path) => read_toml(path)?,
            None => Self::default(),
        };
        if let Some(v) = args.seed {
            cfg.seed = v;
        }
        if let Some(v) = &args.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = args.sampler {
            cfg.sampler.kind = v;
        }
        if let Some(v) = &args.patches {
            cfg.protocol.patches = Some(v.0.clone());
        }
        if let Some(v) = &args.s_values {
            cfg.protocol.s_values = v.clone();
        }
        if let Some(v) = args.iterations {
            cfg.protocol.iterations = v;
        }
        if let Some(v) = args.batch {
            cfg.protocol.batch = v;
        }
        if let Some(v) = args.workers {
            cfg.workers = Some(v);
        }
        if let Some(v) = args.reads {
            cfg.sampler.reads = v;
        }
        if let Some(v) = &args.dataset {
            cfg.data.dataset = Some(v.clone());
        }
        if let Some(v) = &args.dictionary {
            cfg.dictionary.path = Some(v.clone());
        }
        if let Some(v) = args.lambda {
            cfg.qubo.lambda = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.workers == Some(0) {
            bail!("workers must be positive");
        }
        if self.sampler.reads == 0 {
            bail!("sampler.reads must be positive");
        }
        if self.data.edge == 0 {
            bail!("data.edge must be positive");
        }
        if self.protocol.s_values.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
            bail!("every s value must lie in (0, 1)");
        }
        if let Some(l) = self.qubo.lambda {
            if !(l.is_finite() && l >= 0.0) {
                bail!("lambda must be finite and non-negative");
            }
        }
        self.learn.validate()?;
        self.sa.validate()?;
        self.nebm.validate()?;
        self.reverse.validate()?;
        Ok(())
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .context("no output directory: pass --out or set `out` in the config")
    }

    /// The config as JSON, recorded in run manifests.
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config is serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_lists() {
        assert_eq!(parse_index_list("0,2,5-7").unwrap().0, vec![0, 2, 5, 6, 7]);
        assert_eq!(parse_index_list(" 3 ").unwrap().0, vec![3]);
        assert!(parse_index_list("4-2").is_err());
        assert!(parse_index_list("x").is_err());
        assert!(parse_index_list("").is_err());
    }

    #[test]
    fn partial_tables_keep_defaults() {
        let cfg: ExperimentConfig = toml::from_str(
            r#"
            seed = 9
            [sampler]
            kind = "reverse-sa"
            [nebm]
            t_max = 10.0
            [learn]
            p = 16
            mode = "full"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.sampler.kind, SamplerKind::ReverseSa);
        assert_eq!(cfg.sampler.reads, 100);
        assert_eq!(cfg.nebm.t_max, 10.0);
        assert_eq!(cfg.nebm.total_steps, NebmConfig::default().total_steps);
        assert_eq!(cfg.learn.p, 16);
        assert_eq!(cfg.learn.mode, QuboMode::Full);
        assert_eq!(cfg.learn.epochs, LearnConfig::default().epochs);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("[sampler]\nkindd = \"sa\"").is_err());
    }

    #[test]
    fn flags_override_file() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("exp.toml");
        std::fs::write(&path, "seed = 1\n[protocol]\niterations = 5\nbatch = 7\n").unwrap();
        let args = CommonArgs {
            config: Some(path),
            seed: Some(2),
            iterations: Some(9),
            ..CommonArgs::default()
        };
        let cfg = ExperimentConfig::resolve(&args).unwrap();
        assert_eq!((cfg.seed, cfg.protocol.iterations, cfg.protocol.batch), (2, 9, 7));
    }
}
