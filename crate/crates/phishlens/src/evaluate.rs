//! Running the pipeline over a labeled corpus.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use phishlens_core::eval::{
    estimate_cost, histogram_scores, summarize, CostReport, EvalSummary, SampleOutcome,
    SampleRecord, ScoreHistogram,
};
use phishlens_core::pipeline::{interpret, prepare, PrepareOptions};
use phishlens_core::prompt::PromptVariant;
use phishlens_core::{build_function_schema, RawEmail, Tokenizer};

use crate::dataset::{content_hash, LabeledSample};
use crate::gateway::Gateway;

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub variant: PromptVariant,
    pub prepare: PrepareOptions,
    pub workers: usize,
}

type CacheKey = (String, String, PromptVariant);

/// Successful records from an earlier run, keyed by content hash, profile
/// and prompt variant.
#[derive(Debug, Clone, Default)]
pub struct RecordCache {
    entries: HashMap<CacheKey, SampleRecord>,
}

impl RecordCache {
    pub fn from_records(records: impl IntoIterator<Item = SampleRecord>) -> Self {
        let entries = records
            .into_iter()
            .filter(|r| !r.is_error())
            .map(|r| ((r.content_hash.clone(), r.profile.clone(), r.variant), r))
            .collect();
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn get(&self, hash: &str, profile: &str, variant: PromptVariant) -> Option<&SampleRecord> {
        self.entries
            .get(&(hash.to_string(), profile.to_string(), variant))
    }
}

#[derive(Debug, Clone)]
pub struct EvalRun {
    /// One record per sample, in sample order.
    pub records: Vec<SampleRecord>,
    pub summary: EvalSummary,
    pub histogram: ScoreHistogram,
    pub cost: CostReport,
    pub cache_hits: usize,
}

impl EvalRun {
    pub fn failure_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.summary.errors as f64 / self.records.len() as f64
    }
}

/// Evaluates every sample with a pool of `options.workers` threads.
/// Failures are kept as error records and left out of the matrix.
pub fn evaluate_corpus(
    samples: &[LabeledSample],
    gateway: &Gateway,
    tokenizer: &dyn Tokenizer,
    options: &EvalOptions,
    cache: &RecordCache,
) -> EvalRun {
    let workers = options.workers.clamp(1, samples.len().max(1));
    let next = AtomicUsize::new(0);
    let (sender, receiver) = mpsc::channel();
    let mut slots: Vec<Option<SampleRecord>> = vec![None; samples.len()];
    let mut cache_hits = 0;
    thread::scope(|scope| {
        for _ in 0..workers {
            let sender = sender.clone();
            let next = &next;
            scope.spawn(move || loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                let Some(sample) = samples.get(index) else {
                    break;
                };
                let result = evaluate_sample(sample, gateway, tokenizer, options, cache);
                if sender.send((index, result)).is_err() {
                    break;
                }
            });
        }
        drop(sender);
        for (index, (record, cached)) in receiver {
            cache_hits += usize::from(cached);
            slots[index] = Some(record);
        }
    });
    let records: Vec<SampleRecord> = slots
        .into_iter()
        .map(|r| r.expect("every sample evaluated"))
        .collect();
    let profile = gateway.profile();
    EvalRun {
        summary: summarize(&profile.name, options.variant, &records),
        histogram: histogram_scores(&records),
        cost: estimate_cost(&records, &profile.pricing()),
        records,
        cache_hits,
    }
}

fn query(
    raw: &RawEmail,
    gateway: &Gateway,
    tokenizer: &dyn Tokenizer,
    options: &EvalOptions,
) -> Result<SampleOutcome, (&'static str, String)> {
    let prepared = prepare(raw, options.variant, tokenizer, &options.prepare)
        .map_err(|e| (e.stage(), e.to_string()))?;
    let schema = build_function_schema(options.variant);
    let response = gateway
        .submit(&prepared.prompt, &schema)
        .map_err(|e| ("submit", e.to_string()))?;
    let (verdict, source) =
        interpret(&response, &schema, options.variant).map_err(|e| (e.stage(), e.to_string()))?;
    Ok(SampleOutcome::Verdict {
        verdict,
        source,
        input_tokens: response.input_tokens,
        output_tokens: response.output_tokens,
        latency: response.latency,
        attempt_latencies: response.attempt_latencies,
    })
}

/// Runs one sample; the flag reports a cache hit.
pub fn evaluate_sample(
    sample: &LabeledSample,
    gateway: &Gateway,
    tokenizer: &dyn Tokenizer,
    options: &EvalOptions,
    cache: &RecordCache,
) -> (SampleRecord, bool) {
    let profile = &gateway.profile().name;
    let mut record = SampleRecord {
        path: sample.path.display().to_string(),
        label: sample.label,
        content_hash: String::new(),
        profile: profile.clone(),
        variant: options.variant,
        outcome: SampleOutcome::Error {
            stage: String::new(),
            message: String::new(),
        },
    };
    let fail = |stage: &str, message: String| SampleOutcome::Error {
        stage: stage.into(),
        message,
    };

    let raw = match sample.read() {
        Ok(raw) => raw,
        Err(e) => {
            record.outcome = fail("read", e.to_string());
            return (record, false);
        }
    };
    record.content_hash = content_hash(&raw);
    if let Some(hit) = cache.get(&record.content_hash, profile, options.variant) {
        record.outcome = hit.outcome.clone();
        return (record, true);
    }

    record.outcome = query(&raw, gateway, tokenizer, options)
        .unwrap_or_else(|(stage, message)| fail(stage, message));
    if let SampleOutcome::Error { stage, message } = &record.outcome {
        log::warn!("{}: {stage} failed: {message}", record.path);
    }
    (record, false)
}
