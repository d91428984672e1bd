//! Loading datasets, dictionaries and QUBO sources named by the config.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sparsequbo::coding::{patch_image, Dictionary, Image, ImagePatch};
use sparsequbo::io::{load_idx, read_pgm};
use sparsequbo::learn::LearnTrace;
use sparsequbo::qubo::load_qubo;
use sparsequbo::samplers::{BruteForce, Nebm, RandomSampler, Sampler, SimulatedAnnealing};
use sparsequbo::strategies::{ReverseAnnealing, ReverseScheduleConfig};
use sparsequbo::{build_qubo, QuboProblem};

use crate::config::{ExperimentConfig, SamplerKind};
use crate::MissingInput;

pub fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(MissingInput(path.to_path_buf()).into())
    }
}

/// The configured image: a PGM if the file starts with `P5`, otherwise an
/// IDX tensor indexed by `data.image`.
pub fn load_image(cfg: &ExperimentConfig) -> Result<Image> {
    let path = cfg
        .data
        .dataset
        .as_deref()
        .context("no dataset: pass --dataset or set data.dataset")?;
    require(path)?;
    let head = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if head.starts_with(b"P5") {
        return read_pgm(path).with_context(|| format!("loading {}", path.display()));
    }
    let tensor = load_idx(path).with_context(|| format!("loading {}", path.display()))?;
    tensor
        .image(cfg.data.image)
        .with_context(|| format!("image {} of {}", cfg.data.image, path.display()))
}

pub fn load_patches(cfg: &ExperimentConfig) -> Result<Vec<ImagePatch>> {
    Ok(patch_image(&load_image(cfg)?, cfg.data.edge)?)
}

pub fn load_dictionary(cfg: &ExperimentConfig) -> Result<Dictionary> {
    let path = cfg
        .dictionary
        .path
        .as_deref()
        .context("no dictionary: pass --dictionary or set dictionary.path")?;
    require(path)?;
    Dictionary::load(path).with_context(|| format!("loading {}", path.display()))
}

/// Written by `learn-dict` next to the dictionary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnSummary {
    pub lambda: f64,
    pub trace: LearnTrace,
}

pub const LEARN_SUMMARY: &str = "learn.json";

pub fn resolve_lambda(cfg: &ExperimentConfig) -> Result<f64> {
    if let Some(l) = cfg.qubo.lambda {
        return Ok(l);
    }
    let sibling = cfg
        .dictionary
        .path
        .as_deref()
        .and_then(Path::parent)
        .map(|dir| dir.join(LEARN_SUMMARY));
    match sibling {
        Some(path) if path.exists() => {
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let summary: LearnSummary =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            Ok(summary.lambda)
        }
        _ => bail!("no lambda: pass --lambda, set qubo.lambda, or keep {LEARN_SUMMARY} beside the dictionary"),
    }
}

/// Trailing decimal digits of a file stem, e.g. `qubo_12.coo` -> 12.
fn trailing_index(path: &Path) -> Option<usize> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .rev()
        .take_while(char::is_ascii_digit)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

/// QUBO files in `dir` ordered by the index at the end of their names.
pub fn load_qubo_dir(dir: &Path) -> Result<Vec<(usize, QuboProblem)>> {
    require(dir)?;
    let mut found: Vec<(usize, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if !path.is_file() || path.file_name().is_some_and(|n| n == "manifest.json") {
            continue;
        }
        if let Some(k) = trailing_index(&path) {
            found.push((k, path));
        }
    }
    found.sort();
    if found.is_empty() {
        bail!("no indexed QUBO files in {}", dir.display());
    }
    if let Some(w) = found.windows(2).find(|w| w[0].0 == w[1].0) {
        bail!("two QUBO files share index {}: {}", w[0].0, w[1].1.display());
    }
    found
        .into_iter()
        .map(|(k, path)| {
            let q = load_qubo(&path).with_context(|| format!("loading {}", path.display()))?;
            Ok((k, q))
        })
        .collect()
}

/// One work item: a patch index and its QUBO.
pub struct Item {
    pub index: usize,
    pub problem: QuboProblem,
}

/// QUBOs from `data.qubo_dir` when set, otherwise built from the dataset and
/// dictionary. Restricted to `protocol.patches` when given.
pub fn load_items(cfg: &ExperimentConfig) -> Result<Vec<Item>> {
    let items: Vec<Item> = match &cfg.data.qubo_dir {
        Some(dir) => load_qubo_dir(dir)?
            .into_iter()
            .map(|(index, problem)| Item { index, problem })
            .collect(),
        None => {
            let patches = load_patches(cfg)?;
            let dict = load_dictionary(cfg)?;
            let lambda = resolve_lambda(cfg)?;
            patches
                .iter()
                .enumerate()
                .map(|(index, patch)| {
                    let problem = build_qubo(patch, &dict, lambda, cfg.qubo.mode)
                        .with_context(|| format!("building QUBO for patch {index}"))?;
                    Ok(Item { index, problem })
                })
                .collect::<Result<_>>()?
        }
    };
    select(items, cfg.protocol.patches.as_deref())
}

fn select(items: Vec<Item>, wanted: Option<&[usize]>) -> Result<Vec<Item>> {
    let Some(wanted) = wanted else {
        return Ok(items);
    };
    for k in wanted {
        if !items.iter().any(|it| it.index == *k) {
            bail!("patch {k} does not exist ({} available)", items.len());
        }
    }
    Ok(items.into_iter().filter(|it| wanted.contains(&it.index)).collect())
}

pub fn make_sampler(cfg: &ExperimentConfig, kind: SamplerKind) -> Box<dyn Sampler> {
    match kind {
        SamplerKind::Sa => Box::new(SimulatedAnnealing::new(cfg.sa)),
        SamplerKind::Nebm => Box::new(Nebm::new(cfg.nebm)),
        SamplerKind::Brute => Box::new(BruteForce),
        SamplerKind::Random => Box::new(RandomSampler),
        SamplerKind::ReverseSa => Box::new(ReverseAnnealing::new(cfg.reverse)),
    }
}

pub fn reverse_at(cfg: &ExperimentConfig, s: f64) -> ReverseAnnealing {
    ReverseAnnealing::new(ReverseScheduleConfig { s, ..cfg.reverse })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_indices() {
        assert_eq!(trailing_index(Path::new("a/qubo_12.coo")), Some(12));
        assert_eq!(trailing_index(Path::new("7.json")), Some(7));
        assert_eq!(trailing_index(Path::new("readme.txt")), None);
    }
}
