use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sparsequbo::coding::{metrics, reconstruct_patch, sparsity_label, unpatch, CodeMetrics, ImagePatch};
use sparsequbo::io::{encode_pgm, persist_run, Artifact, Manifest, RunInfo};
use sparsequbo::learn::train;
use sparsequbo::qubo::{to_coo_string, to_json_string};
use sparsequbo::report::{to_csv, to_display, ReportRow};
use sparsequbo::samplers::{brute_force, GroundStates, MAX_BRUTE_FORCE_VARS};
use sparsequbo::seed::{derive_seed, rng_from};
use sparsequbo::strategies::{iterated_warm_start, qemc_chain, QemcConfig, WarmStartConfig};
use sparsequbo::{build_qubo, BinaryState, ChainTrace, SampleSet, SamplerRequest, ENERGY_TOL};

use crate::config::{ExperimentConfig, QuboFileFormat, SamplerKind};
use crate::inputs::{self, Item, LearnSummary, LEARN_SUMMARY};
use crate::MissingInput;

/// Named files persisted together under one manifest.
struct Bundle(Vec<(String, Vec<u8>)>);

impl Artifact for Bundle {
    fn files(&self) -> Vec<(String, Vec<u8>)> {
        self.0.clone()
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_string_pretty(value).expect("serializable").into_bytes()
}

/// Persist and re-read every checksum; a mismatch is an error.
fn persist_checked(artifact: &dyn Artifact, dir: &Path, run: &RunInfo) -> Result<Manifest> {
    let manifest = persist_run(artifact, dir, run).with_context(|| format!("writing {}", dir.display()))?;
    let stale = manifest.verify(dir)?;
    if !stale.is_empty() {
        bail!("checksum mismatch after writing {}: {stale:?}", dir.display());
    }
    Ok(manifest)
}

fn run_info(cfg: &ExperimentConfig, command: &str) -> RunInfo {
    RunInfo::new(command, cfg.seed, cfg.to_value())
}

fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .context("starting worker pool")
}

/// Apply `work` to every item on the worker pool, keeping item order.
fn for_each_item<T, F>(cfg: &ExperimentConfig, items: &[Item], work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Item) -> Result<T> + Sync,
{
    pool(cfg)?.install(|| {
        items
            .par_iter()
            .map(|item| work(item).with_context(|| format!("patch {}", item.index)))
            .collect()
    })
}

fn patch_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("patch_{index:02}"))
}

fn ground_states(cfg: &ExperimentConfig, item: &Item) -> Result<Option<GroundStates>> {
    let n = item.problem.n();
    if n > cfg.report.brute_force_max.min(MAX_BRUTE_FORCE_VARS) {
        return Ok(None);
    }
    Ok(Some(brute_force(&item.problem)?))
}

/// Reverse annealing needs a start; other samplers ignore it.
fn request<'a>(cfg: &ExperimentConfig, item: &'a Item, kind: SamplerKind, seed: u64) -> SamplerRequest<'a> {
    let req = SamplerRequest::new(&item.problem, cfg.sampler.reads, seed);
    if kind == SamplerKind::ReverseSa {
        req.with_initial_state(BinaryState::random(item.problem.n(), &mut rng_from(seed, &[u64::MAX])))
    } else {
        req
    }
}

/// Report row for a chain: `min_energy_count` counts batches whose minimum
/// reached the chain's best energy.
fn chain_row(index: usize, trace: &ChainTrace, ground: Option<&GroundStates>) -> ReportRow {
    let hits = trace
        .steps
        .iter()
        .filter(|s| (s.batch_min_energy - trace.best_energy).abs() <= ENERGY_TOL)
        .count();
    let optimum = ground
        .and_then(|g| g.states.first())
        .or(trace.best_state.as_ref())
        .map(sparsity_label)
        .unwrap_or_default();
    ReportRow {
        qubo_index: index,
        ground_state_energy: ground.map(|g| g.energy),
        method_min_energy: trace.best_energy,
        min_energy_count: hits,
        optimal_sparsity: optimum,
    }
}

/// Full-precision CSV and JSON per named report under one manifest; the
/// rounded table goes to stdout.
fn write_reports(
    cfg: &ExperimentConfig,
    out: &Path,
    command: &str,
    reports: &[(String, Vec<ReportRow>)],
) -> Result<()> {
    let mut files = Vec::new();
    for (name, rows) in reports {
        files.push((format!("{name}.csv"), to_csv(rows).into_bytes()));
        files.push((format!("{name}.json"), json_bytes(rows)));
    }
    persist_checked(&Bundle(files), out, &run_info(cfg, command))?;
    for (name, rows) in reports {
        if reports.len() > 1 {
            println!("# {name}");
        }
        print!("{}", to_display(rows));
    }
    Ok(())
}

pub fn learn_dict(cfg: &ExperimentConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    let patches = inputs::load_patches(cfg)?;
    let solver = inputs::make_sampler(cfg, cfg.sampler.kind);
    let learn = sparsequbo::learn::LearnConfig {
        seed: cfg.seed,
        ..cfg.learn
    };
    let outcome = pool(cfg)?.install(|| train(&patches, &learn, solver.as_ref()))?;
    let summary = LearnSummary {
        lambda: outcome.lambda,
        trace: outcome.trace,
    };
    let bundle = Bundle(vec![
        ("dictionary.json".into(), outcome.dictionary.to_json().into_bytes()),
        (LEARN_SUMMARY.into(), json_bytes(&summary)),
        ("trace.csv".into(), summary.trace.to_csv().into_bytes()),
    ]);
    let manifest = persist_checked(&bundle, out, &run_info(cfg, "learn-dict"))?;
    let last = summary.trace.epochs.last().context("training ran no epochs")?;
    println!(
        "{} patches, {} epochs (converged: {}), error {:.4}, sparsity {:.4}, lambda {:.6}",
        patches.len(),
        summary.trace.epochs.len(),
        summary.trace.converged,
        last.mean_error,
        last.mean_sparsity,
        summary.lambda
    );
    println!("dictionary sha256 {}", manifest.checksums["dictionary.json"]);
    Ok(())
}

pub fn build_qubo_files(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.data.qubo_dir.is_some() {
        bail!("build-qubo builds from a dataset and dictionary; unset data.qubo_dir");
    }
    let out = cfg.out_dir()?;
    let items = inputs::load_items(cfg)?;
    let files = items
        .iter()
        .map(|item| match cfg.qubo.format {
            QuboFileFormat::Coo => (format!("qubo_{:02}.coo", item.index), to_coo_string(&item.problem)),
            QuboFileFormat::Json => (format!("qubo_{:02}.json", item.index), to_json_string(&item.problem)),
        })
        .map(|(name, text)| (name, text.into_bytes()))
        .collect();
    persist_checked(&Bundle(files), out, &run_info(cfg, "build-qubo"))?;
    println!("wrote {} QUBOs to {}", items.len(), out.display());
    Ok(())
}

pub fn solve(cfg: &ExperimentConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    let items = inputs::load_items(cfg)?;
    let kind = cfg.sampler.kind;
    let sampler = inputs::make_sampler(cfg, kind);
    let rows = for_each_item(cfg, &items, |item| {
        let seed = derive_seed(cfg.seed, &[item.index as u64]);
        let set = sampler.sample(&request(cfg, item, kind, seed))?;
        let mut run = run_info(cfg, "solve");
        run.seeds.insert("patch".into(), seed);
        persist_checked(&set, &patch_dir(out, item.index), &run)?;
        let ground = ground_states(cfg, item)?;
        Ok(ReportRow::new(item.index, &set, ground.as_ref()))
    })?;
    write_reports(cfg, out, "solve", &[("report".into(), rows)])
}

pub fn warm_start(cfg: &ExperimentConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    let items = inputs::load_items(cfg)?;
    let sampler = inputs::make_sampler(cfg, cfg.sampler.kind);
    let rows = for_each_item(cfg, &items, |item| {
        let config = WarmStartConfig {
            iterations: cfg.protocol.iterations,
            reads: cfg.sampler.reads,
            seed: derive_seed(cfg.seed, &[item.index as u64]),
        };
        let trace = iterated_warm_start(&item.problem, sampler.as_ref(), &config)
            .map_err(|e| anyhow::anyhow!("{e} (after {} steps)", e.partial.steps.len()))?;
        let mut run = run_info(cfg, "warm-start");
        run.seeds.insert("patch".into(), config.seed);
        persist_checked(&trace, &patch_dir(out, item.index), &run)?;
        let ground = ground_states(cfg, item)?;
        Ok(chain_row(item.index, &trace, ground.as_ref()))
    })?;
    write_reports(cfg, out, "warm-start", &[("report".into(), rows)])
}

fn s_label(s: f64) -> String {
    format!("s_{s}")
}

pub fn qemc(cfg: &ExperimentConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    let items = inputs::load_items(cfg)?;
    if cfg.protocol.s_values.is_empty() {
        bail!("qemc needs at least one s value");
    }
    // The cold start needs no initial state.
    let cold_kind = match cfg.sampler.kind {
        SamplerKind::ReverseSa => SamplerKind::Sa,
        other => other,
    };
    let cold = inputs::make_sampler(cfg, cold_kind);
    let per_item = for_each_item(cfg, &items, |item| {
        let ground = ground_states(cfg, item)?;
        let mut rows = Vec::new();
        for (k, &s) in cfg.protocol.s_values.iter().enumerate() {
            let config = QemcConfig {
                iterations: cfg.protocol.iterations,
                batch: cfg.protocol.batch,
                seed: derive_seed(cfg.seed, &[item.index as u64, k as u64]),
                elitist: cfg.protocol.elitist,
            };
            let reverse = inputs::reverse_at(cfg, s);
            let trace = qemc_chain(&item.problem, cold.as_ref(), &reverse, &config, Some(s))
                .map_err(|e| anyhow::anyhow!("s={s}: {e}"))?;
            let mut run = run_info(cfg, "qemc");
            run.seeds.insert("chain".into(), config.seed);
            persist_checked(&trace, &patch_dir(out, item.index).join(s_label(s)), &run)?;
            rows.push(chain_row(item.index, &trace, ground.as_ref()));
        }
        Ok(rows)
    })?;
    let reports: Vec<(String, Vec<ReportRow>)> = cfg
        .protocol
        .s_values
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            (
                format!("report_{}", s_label(s)),
                per_item.iter().map(|r| r[k].clone()).collect(),
            )
        })
        .collect();
    write_reports(cfg, out, "qemc", &reports)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchMetrics {
    pub patch: usize,
    pub energy: f64,
    #[serde(flatten)]
    pub code: CodeMetrics,
}

/// Best state stored in a `solve`, `warm-start` or `qemc` patch directory.
fn stored_code(dir: &Path) -> Result<BinaryState> {
    let samples = dir.join("samples.json");
    let trace = dir.join("trace.json");
    if samples.exists() {
        let text = std::fs::read_to_string(&samples)?;
        let set: SampleSet = serde_json::from_str(&text).with_context(|| format!("parsing {}", samples.display()))?;
        return Ok(set.lowest().state.clone());
    }
    if trace.exists() {
        let text = std::fs::read_to_string(&trace)?;
        let trace: ChainTrace = serde_json::from_str(&text).with_context(|| format!("parsing {}", trace.display()))?;
        return trace.best_state.context("trace holds no state");
    }
    Err(MissingInput(samples).into())
}

pub fn reconstruct(cfg: &ExperimentConfig, from: Option<&Path>) -> Result<()> {
    if cfg.data.qubo_dir.is_some() {
        bail!("reconstruct needs the dataset and dictionary; unset data.qubo_dir");
    }
    let out = cfg.out_dir()?;
    let items = inputs::load_items(cfg)?;
    let all_patches = inputs::load_patches(cfg)?;
    let dict = inputs::load_dictionary(cfg)?;
    let lambda = inputs::resolve_lambda(cfg)?;
    if let Some(dir) = from {
        inputs::require(dir)?;
    }
    let kind = cfg.sampler.kind;
    let sampler = inputs::make_sampler(cfg, kind);
    let codes = for_each_item(cfg, &items, |item| {
        let code = match from {
            Some(dir) => stored_code(&patch_dir(dir, item.index))?,
            None => {
                let seed = derive_seed(cfg.seed, &[item.index as u64]);
                sampler.sample(&request(cfg, item, kind, seed))?.lowest().state.clone()
            }
        };
        if code.len() != dict.p() {
            bail!("code has {} bits, dictionary has {} atoms", code.len(), dict.p());
        }
        Ok((item.index, code))
    })?;

    let mut recon: Vec<ImagePatch> = Vec::with_capacity(all_patches.len());
    let mut rows = Vec::new();
    for (index, patch) in all_patches.iter().enumerate() {
        // Patches outside the selection stay black.
        let code = codes
            .iter()
            .find(|(k, _)| *k == index)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(|| BinaryState::zeros(dict.p()));
        recon.push(reconstruct_patch(patch, &dict, &code)?);
        if codes.iter().any(|(k, _)| *k == index) {
            let problem = build_qubo(patch, &dict, lambda, cfg.qubo.mode)?;
            rows.push(PatchMetrics {
                patch: index,
                energy: problem.energy(&code)?,
                code: metrics(patch, &dict, &code, lambda)?,
            });
        }
    }
    let original = unpatch(&all_patches)?;
    let image = unpatch(&recon)?;
    let mut csv = String::from("patch,energy,recon_error,sparsity,objective\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{:?},{:?},{},{:?}\n",
            r.patch, r.energy, r.code.recon_error, r.code.sparsity, r.code.objective
        ));
    }
    let bundle = Bundle(vec![
        ("original.pgm".into(), encode_pgm(&original)),
        ("reconstruction.pgm".into(), encode_pgm(&image)),
        ("metrics.json".into(), json_bytes(&rows)),
        ("metrics.csv".into(), csv.into_bytes()),
    ]);
    persist_checked(&bundle, out, &run_info(cfg, "reconstruct"))?;
    let total: f64 = rows.iter().map(|r| r.code.recon_error).sum();
    println!(
        "reconstructed {} patches, total error {total:.4}, wrote {}",
        rows.len(),
        out.join("reconstruction.pgm").display()
    );
    Ok(())
}

/// Verify run directories and print their reports; two reconstruction runs
/// also get a per-patch comparison.
pub fn report(dirs: &[PathBuf]) -> Result<()> {
    let mut metric_runs = Vec::new();
    for dir in dirs {
        inputs::require(dir)?;
        let manifest = Manifest::load(dir)?;
        let stale = manifest.verify(dir)?;
        if !stale.is_empty() {
            bail!("{}: files changed since the run: {stale:?}", dir.display());
        }
        println!(
            "# {} ({} {}, seed {})",
            dir.display(),
            manifest.run.command,
            manifest.version,
            manifest.run.seeds["master"]
        );
        for name in manifest
            .checksums
            .keys()
            .filter(|n| n.starts_with("report") && n.ends_with(".json"))
        {
            let rows: Vec<ReportRow> = serde_json::from_str(&std::fs::read_to_string(dir.join(name))?)?;
            println!("## {name}");
            print!("{}", to_display(&rows));
        }
        if manifest.checksums.contains_key("metrics.json") {
            let rows: Vec<PatchMetrics> = serde_json::from_str(&std::fs::read_to_string(dir.join("metrics.json"))?)?;
            let total: f64 = rows.iter().map(|r| r.code.recon_error).sum();
            println!("{} patches, total reconstruction error {total:.4}", rows.len());
            metric_runs.push(rows);
        }
    }
    if let [a, b] = metric_runs.as_slice() {
        println!("patch,recon_error_a,recon_error_b,difference");
        for ra in a {
            if let Some(rb) = b.iter().find(|r| r.patch == ra.patch) {
                println!(
                    "{},{:.4},{:.4},{:.4}",
                    ra.patch,
                    ra.code.recon_error,
                    rb.code.recon_error,
                    rb.code.recon_error - ra.code.recon_error
                );
            }
        }
    }
    Ok(())
}
