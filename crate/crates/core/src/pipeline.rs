//! Corpus to dataset: filter by complexity, obfuscate with all strategies,
//! verify, and write the records that are equivalent under every strategy.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datasetio::{emit_dataset, DatasetError, DatasetManifest};
use crate::frontend::SourceUnit;
use crate::metrics::{filter_corpus, Aggregate};
use crate::rewrite::{obfuscate_all_with, ObfuscationRecord, RewriteOptions};
use crate::scopes::RenamePolicy;
use crate::strategies::StrategyTag;
use crate::verify::{verify_corpus, CorpusSummary, Limits, Runner, Status};

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub seed: u64,
    pub policy: RenamePolicy,
    pub limits: Limits,
    pub cc_threshold: u32,
    pub aggregate: Aggregate,
    pub workers: usize,
    /// Variants to produce; a dataset needs all four.
    pub strategies: Vec<StrategyTag>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            policy: RenamePolicy::default(),
            limits: Limits::default(),
            cc_threshold: 1,
            aggregate: Aggregate::Max,
            workers: std::thread::available_parallelism().map_or(4, |n| n.get()),
            strategies: StrategyTag::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub task_id: String,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    /// Every record that was obfuscated, verdicts filled in.
    pub records: Vec<ObfuscationRecord>,
    pub summary: CorpusSummary,
    /// Units dropped by the complexity filter are not listed.
    pub skipped: Vec<Skipped>,
    /// Present when a dataset was written.
    pub manifest: Option<DatasetManifest>,
}

impl PipelineOutput {
    pub fn verified(&self) -> Vec<&ObfuscationRecord> {
        self.records.iter().filter(|r| fully_equivalent(r)).collect()
    }
}

pub fn fully_equivalent(r: &ObfuscationRecord) -> bool {
    !r.is_partial() && r.verdicts.len() == r.variants.len() && r.verdicts.values().all(|v| v.status == Status::Equivalent)
}

/// Filter, obfuscate and verify without writing anything.
pub fn obfuscate_and_verify(units: &[SourceUnit], cfg: &PipelineConfig, runner: &Runner) -> PipelineOutput {
    let kept = filter_corpus(units, cfg.cc_threshold.max(1), cfg.aggregate);
    let mut records = Vec::with_capacity(kept.len());
    let mut skipped = Vec::new();
    for u in &kept {
        match obfuscate_all_with(u, cfg.seed, cfg.policy, &RewriteOptions::default()) {
            Ok(mut r) => {
                r.variants.retain(|t, _| cfg.strategies.contains(t));
                r.errors.retain(|t, _| cfg.strategies.contains(t));
                records.push(r)
            }
            Err(e) => skipped.push(Skipped {
                task_id: u.task_id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let summary = verify_corpus(&mut records, cfg.limits, runner, cfg.workers);
    for r in &records {
        if !fully_equivalent(r) {
            let mut why: Vec<String> = r.errors.iter().map(|(t, e)| format!("{t}: {e}")).collect();
            why.extend(
                r.verdicts
                    .iter()
                    .filter(|(_, v)| v.status != Status::Equivalent)
                    .map(|(t, v)| format!("{t}: {:?}", v.status)),
            );
            skipped.push(Skipped {
                task_id: r.task_id.clone(),
                reason: why.join("; "),
            });
        }
    }
    PipelineOutput {
        records,
        summary,
        skipped,
        manifest: None,
    }
}

/// Full run ending in a dataset file at `out` plus its manifest.
pub fn build_dataset(
    units: &[SourceUnit],
    cfg: &PipelineConfig,
    runner: &Runner,
    out: &Path,
) -> Result<PipelineOutput, DatasetError> {
    let mut result = obfuscate_and_verify(units, cfg, runner);
    let verified: Vec<ObfuscationRecord> = result.verified().into_iter().cloned().collect();
    result.manifest = Some(emit_dataset(&verified, out, cfg.seed)?);
    Ok(result)
}
