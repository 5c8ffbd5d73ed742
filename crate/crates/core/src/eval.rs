//! Detection-quality metrics, score distributions, cost and latency.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::time::Duration;

use serde::{Deserialize, Serialize};

use crate::prompt::PromptVariant;
use crate::response::VerdictSource;
use crate::verdict::{DetectionVerdict, MAX_SCORE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Phishing,
    Legitimate,
}

impl Label {
    pub fn is_phishing(self) -> bool {
        self == Label::Phishing
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Phishing => "phishing",
            Label::Legitimate => "legitimate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Tp,
    Fp,
    Tn,
    Fn,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::Tp, Outcome::Fp, Outcome::Tn, Outcome::Fn];

    pub fn classify(label: Label, predicted_phishing: bool) -> Self {
        match (label.is_phishing(), predicted_phishing) {
            (true, true) => Outcome::Tp,
            (false, true) => Outcome::Fp,
            (false, false) => Outcome::Tn,
            (true, false) => Outcome::Fn,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Tp => "TP",
            Outcome::Fp => "FP",
            Outcome::Tn => "TN",
            Outcome::Fn => "FN",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Tp => self.tp += 1,
            Outcome::Fp => self.fp += 1,
            Outcome::Tn => self.tn += 1,
            Outcome::Fn => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Ratios in `[0, 1]`; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
}

fn ratio(numerator: u64, denominator: u64) -> Option<f64> {
    (denominator != 0).then(|| numerator as f64 / denominator as f64)
}

pub fn compute_metrics(m: &ConfusionMatrix) -> EvalMetrics {
    EvalMetrics {
        precision: ratio(m.tp, m.tp + m.fp),
        recall: ratio(m.tp, m.tp + m.fn_),
        accuracy: ratio(m.tp + m.tn, m.total()),
    }
}

/// `99.70%` style, or `undefined`.
pub fn format_percent(value: Option<f64>) -> String {
    match value {
        Some(v) => alloc::format!("{:.2}%", v * 100.0),
        None => String::from("undefined"),
    }
}

/// `TP FP TN FN precision recall accuracy`.
pub fn table_row(m: &ConfusionMatrix) -> String {
    let metrics = compute_metrics(m);
    alloc::format!(
        "{} {} {} {} {} {} {}",
        m.tp,
        m.fp,
        m.tn,
        m.fn_,
        format_percent(metrics.precision),
        format_percent(metrics.recall),
        format_percent(metrics.accuracy)
    )
}

/// What happened to one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SampleOutcome {
    Verdict {
        verdict: DetectionVerdict,
        source: VerdictSource,
        input_tokens: u64,
        output_tokens: u64,
        latency: Duration,
        attempt_latencies: Vec<Duration>,
    },
    Error {
        stage: String,
        message: String,
    },
}

/// One evaluated sample, as persisted in `records.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub path: String,
    pub label: Label,
    /// Hex SHA-256 of the raw message.
    pub content_hash: String,
    pub profile: String,
    pub variant: PromptVariant,
    #[serde(flatten)]
    pub outcome: SampleOutcome,
}

impl SampleRecord {
    pub fn verdict(&self) -> Option<&DetectionVerdict> {
        match &self.outcome {
            SampleOutcome::Verdict { verdict, .. } => Some(verdict),
            SampleOutcome::Error { .. } => None,
        }
    }

    pub fn classified(&self) -> Option<Outcome> {
        self.verdict()
            .map(|v| Outcome::classify(self.label, v.is_phishing))
    }

    pub fn is_error(&self) -> bool {
        matches!(self.outcome, SampleOutcome::Error { .. })
    }

    pub fn tokens(&self) -> (u64, u64) {
        match &self.outcome {
            SampleOutcome::Verdict {
                input_tokens,
                output_tokens,
                ..
            } => (*input_tokens, *output_tokens),
            SampleOutcome::Error { .. } => (0, 0),
        }
    }
}

/// Confusion matrix over successful samples; errors are left out.
pub fn tally(records: &[SampleRecord]) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::default();
    for outcome in records.iter().filter_map(SampleRecord::classified) {
        m.record(outcome);
    }
    m
}

/// A verdict whose score points the other way: phishing below 5 or
/// legitimate above 5.
pub fn score_disagrees(verdict: &DetectionVerdict) -> bool {
    match verdict.phishing_score {
        Some(score) if verdict.is_phishing => score < 5,
        Some(score) => score > 5,
        None => false,
    }
}

pub fn count_disagreements(records: &[SampleRecord]) -> u64 {
    records
        .iter()
        .filter_map(SampleRecord::verdict)
        .filter(|v| score_disagrees(v))
        .count() as u64
}

/// Per-score counts split by outcome class.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    /// `counts[score][outcome]`, outcomes ordered TP, FP, TN, FN.
    pub counts: [[u64; 4]; 11],
    /// Verdicts without a score.
    pub unscored: u64,
    /// Scores outside 0..=10.
    pub out_of_range: u64,
}

impl ScoreHistogram {
    pub fn get(&self, score: usize, outcome: Outcome) -> u64 {
        self.counts[score][outcome.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// `score,TP,FP,TN,FN` with one row per score.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("score,TP,FP,TN,FN\n");
        for (score, row) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{score},{},{},{},{}", row[0], row[1], row[2], row[3]);
        }
        out
    }
}

pub fn histogram_scores(records: &[SampleRecord]) -> ScoreHistogram {
    let mut hist = ScoreHistogram::default();
    for record in records {
        let (Some(verdict), Some(outcome)) = (record.verdict(), record.classified()) else {
            continue;
        };
        match verdict.phishing_score {
            Some(score) if (0..=MAX_SCORE).contains(&score) => {
                hist.counts[score as usize][outcome.index()] += 1;
            }
            Some(_) => hist.out_of_range += 1,
            None => hist.unscored += 1,
        }
    }
    hist
}

/// USD per 1,000 tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Pricing {
    pub price_per_1k_input: f64,
    pub price_per_1k_output: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub total_input_tokens: u64,
    pub total_output_tokens: u64,
    /// USD.
    pub total_cost: f64,
}

pub fn cost_of(input_tokens: u64, output_tokens: u64, pricing: &Pricing) -> CostReport {
    let total_cost = (input_tokens as f64 * pricing.price_per_1k_input
        + output_tokens as f64 * pricing.price_per_1k_output)
        / 1000.0;
    CostReport {
        total_input_tokens: input_tokens,
        total_output_tokens: output_tokens,
        total_cost,
    }
}

pub fn estimate_cost(records: &[SampleRecord], pricing: &Pricing) -> CostReport {
    let (input, output) = records
        .iter()
        .map(SampleRecord::tokens)
        .fold((0, 0), |(i, o), (ri, ro)| (i + ri, o + ro));
    cost_of(input, output, pricing)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: u64,
    pub mean: Duration,
    pub p50: Duration,
    pub p95: Duration,
}

fn nearest_rank(sorted: &[Duration], percentile: u64) -> Duration {
    let n = sorted.len() as u64;
    let rank = (percentile * n).div_ceil(100).max(1);
    sorted[(rank - 1) as usize]
}

/// Mean and nearest-rank percentiles; `None` for no samples.
pub fn latency_stats(samples: &[Duration]) -> Option<LatencyStats> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort();
    let total: u128 = sorted.iter().map(Duration::as_nanos).sum();
    let mean_nanos = total / sorted.len() as u128;
    Some(LatencyStats {
        count: sorted.len() as u64,
        mean: Duration::new(
            (mean_nanos / 1_000_000_000) as u64,
            (mean_nanos % 1_000_000_000) as u32,
        ),
        p50: nearest_rank(&sorted, 50),
        p95: nearest_rank(&sorted, 95),
    })
}

/// End-to-end latency per sample and latency of every individual attempt.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub end_to_end: Option<LatencyStats>,
    pub per_attempt: Option<LatencyStats>,
}

pub fn latency_report(records: &[SampleRecord]) -> LatencyReport {
    let mut end_to_end = Vec::new();
    let mut attempts = Vec::new();
    for record in records {
        if let SampleOutcome::Verdict {
            latency,
            attempt_latencies,
            ..
        } = &record.outcome
        {
            end_to_end.push(*latency);
            attempts.extend_from_slice(attempt_latencies);
        }
    }
    LatencyReport {
        end_to_end: latency_stats(&end_to_end),
        per_attempt: latency_stats(&attempts),
    }
}

/// Everything written to `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub profile: String,
    pub variant: PromptVariant,
    pub matrix: ConfusionMatrix,
    pub metrics: EvalMetrics,
    pub evaluated: u64,
    pub errors: u64,
    pub score_disagreements: u64,
    pub latency: LatencyReport,
}

pub fn summarize(profile: &str, variant: PromptVariant, records: &[SampleRecord]) -> EvalSummary {
    let matrix = tally(records);
    EvalSummary {
        profile: String::from(profile),
        variant,
        metrics: compute_metrics(&matrix),
        evaluated: matrix.total(),
        errors: records.iter().filter(|r| r.is_error()).count() as u64,
        score_disagreements: count_disagreements(records),
        latency: latency_report(records),
        matrix,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(label: Label, verdict: DetectionVerdict, tokens: (u64, u64)) -> SampleRecord {
        SampleRecord {
            path: String::from("x.eml"),
            label,
            content_hash: String::new(),
            profile: String::from("mock"),
            variant: PromptVariant::Normal,
            outcome: SampleOutcome::Verdict {
                verdict,
                source: VerdictSource::Structured,
                input_tokens: tokens.0,
                output_tokens: tokens.1,
                latency: Duration::from_millis(tokens.0),
                attempt_latencies: alloc::vec![Duration::from_millis(tokens.0)],
            },
        }
    }

    fn error(label: Label) -> SampleRecord {
        SampleRecord {
            path: String::from("e.eml"),
            label,
            content_hash: String::new(),
            profile: String::from("mock"),
            variant: PromptVariant::Normal,
            outcome: SampleOutcome::Error {
                stage: String::from("submit"),
                message: String::from("down"),
            },
        }
    }

    #[test]
    fn table_rows() {
        let m = compute_metrics(&ConfusionMatrix::new(1007, 3, 997, 3));
        assert!((m.precision.unwrap() - 0.9970).abs() < 0.00005);
        assert!((m.recall.unwrap() - 0.9970).abs() < 0.00005);
        assert!((m.accuracy.unwrap() - 0.9970).abs() < 0.00005);
        let m = compute_metrics(&ConfusionMatrix::new(697, 6, 994, 313));
        assert!((m.recall.unwrap() - 0.6901).abs() < 0.00005);
        assert!((m.accuracy.unwrap() - 0.8413).abs() < 0.00005);
    }

    #[test]
    fn degenerate_denominators() {
        let m = compute_metrics(&ConfusionMatrix::new(0, 0, 10, 0));
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, None);
        assert_eq!(m.accuracy, Some(1.0));
        assert_eq!(compute_metrics(&ConfusionMatrix::default()).accuracy, None);
    }

    #[test]
    fn row_format() {
        assert_eq!(
            table_row(&ConfusionMatrix::new(5, 0, 5, 0)),
            "5 0 5 0 100.00% 100.00% 100.00%"
        );
        assert_eq!(
            table_row(&ConfusionMatrix::new(0, 0, 1, 0)),
            "0 0 1 0 undefined undefined 100.00%"
        );
    }

    #[test]
    fn matrix_serializes_fn_key() {
        let json = serde_json::to_string(&ConfusionMatrix::new(1, 2, 3, 4)).unwrap();
        assert_eq!(json, r#"{"tp":1,"fp":2,"tn":3,"fn":4}"#);
    }

    #[test]
    fn errors_excluded_from_matrix() {
        let records = [
            record(Label::Phishing, DetectionVerdict::bare(true), (1, 1)),
            error(Label::Phishing),
            record(Label::Legitimate, DetectionVerdict::bare(true), (1, 1)),
        ];
        assert_eq!(tally(&records), ConfusionMatrix::new(1, 1, 0, 0));
        assert_eq!(summarize("mock", PromptVariant::Normal, &records).errors, 1);
    }

    #[test]
    fn histogram_bins() {
        assert_eq!(histogram_scores(&[]).total(), 0);
        let records = [
            record(
                Label::Legitimate,
                DetectionVerdict::bare(false).with_score(0),
                (0, 0),
            ),
            record(Label::Phishing, DetectionVerdict::bare(true), (0, 0)),
        ];
        let hist = histogram_scores(&records);
        assert_eq!(hist.get(0, Outcome::Tn), 1);
        assert_eq!(hist.total(), 1);
        assert_eq!(hist.unscored, 1);
        assert!(hist.to_csv().starts_with("score,TP,FP,TN,FN\n0,0,0,1,0\n"));
    }

    #[test]
    fn cost_cases() {
        let gpt4 = Pricing {
            price_per_1k_input: 0.03,
            price_per_1k_output: 0.06,
        };
        assert!((cost_of(1000, 500, &gpt4).total_cost - 0.06).abs() < 1e-12);
        let gpt35 = Pricing {
            price_per_1k_input: 0.002,
            price_per_1k_output: 0.002,
        };
        assert!((cost_of(1000, 1000, &gpt35).total_cost - 0.004).abs() < 1e-12);
        assert_eq!(cost_of(0, 0, &gpt4).total_cost, 0.0);
    }

    #[test]
    fn latency_percentiles() {
        let samples: Vec<Duration> = (1..=20).map(Duration::from_secs).collect();
        let stats = latency_stats(&samples).unwrap();
        assert_eq!(stats.p50, Duration::from_secs(10));
        assert_eq!(stats.p95, Duration::from_secs(19));
        assert_eq!(stats.mean, Duration::from_millis(10_500));
        assert_eq!(latency_stats(&[]), None);
    }

    #[test]
    fn disagreement() {
        assert!(score_disagrees(&DetectionVerdict::bare(true).with_score(0)));
        assert!(!score_disagrees(
            &DetectionVerdict::bare(true).with_score(5)
        ));
        assert!(score_disagrees(
            &DetectionVerdict::bare(false).with_score(9)
        ));
        assert!(!score_disagrees(&DetectionVerdict::bare(false)));
    }

    fn arb_record() -> impl Strategy<Value = SampleRecord> {
        (
            any::<bool>(),
            any::<bool>(),
            proptest::option::of(0i64..=10),
            0u64..100_000,
            0u64..100_000,
            any::<bool>(),
        )
            .prop_map(|(phish, predicted, score, i, o, failed)| {
                let label = if phish {
                    Label::Phishing
                } else {
                    Label::Legitimate
                };
                if failed {
                    return error(label);
                }
                let mut v = DetectionVerdict::bare(predicted);
                v.phishing_score = score;
                record(label, v, (i, o))
            })
    }

    proptest! {
        #[test]
        fn matrix_consistency(records in proptest::collection::vec(arb_record(), 0..200)) {
            let m = tally(&records);
            let ok = records.iter().filter(|r| !r.is_error());
            let phishing = ok.clone().filter(|r| r.label == Label::Phishing).count() as u64;
            let legit = ok.count() as u64 - phishing;
            prop_assert_eq!(m.tp + m.fn_, phishing);
            prop_assert_eq!(m.tn + m.fp, legit);
            let hist = histogram_scores(&records);
            let scored = records.iter().filter_map(SampleRecord::verdict).filter(|v| v.phishing_score.is_some()).count() as u64;
            prop_assert_eq!(hist.total(), scored);
        }

        #[test]
        fn cost_is_linear(i in 0u64..1 << 40, o in 0u64..1 << 40, pi in 0.0f64..1.0, po in 0.0f64..1.0) {
            let p = Pricing { price_per_1k_input: pi, price_per_1k_output: po };
            prop_assert_eq!(cost_of(2 * i, 2 * o, &p).total_cost, 2.0 * cost_of(i, o, &p).total_cost);
        }

        #[test]
        fn p50_not_above_p95(ms in proptest::collection::vec(0u64..1_000_000, 1..100)) {
            let samples: Vec<Duration> = ms.into_iter().map(Duration::from_millis).collect();
            let stats = latency_stats(&samples).unwrap();
            prop_assert!(stats.p50 <= stats.p95);
        }
    }
}
