use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use phishlens_core::prompt::PromptVariant;
use phishlens_core::{build_function_schema, MockRules};
use serde_json::Value;

use super::{AttemptError, Completion, CompletionRequest, Provider};

/// Injected failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailureMode {
    #[default]
    None,
    /// The first `n` calls fail transiently.
    TransientFirst(usize),
    AlwaysTransient,
    Refuse(u16),
    Auth,
}

/// Offline provider answering from [`MockRules`], with probes for tests:
/// call count, peak concurrency and the captured request bodies.
#[derive(Default)]
pub struct MockProvider {
    rules: MockRules,
    delay: Duration,
    failures: FailureMode,
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    peak_in_flight: AtomicUsize,
    captured: Mutex<Vec<Value>>,
}

impl MockProvider {
    pub fn new(rules: MockRules) -> Self {
        Self {
            rules,
            ..Self::default()
        }
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_failures(mut self, failures: FailureMode) -> Self {
        self.failures = failures;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Highest number of simultaneous calls observed.
    pub fn max_in_flight(&self) -> usize {
        self.peak_in_flight.load(Ordering::SeqCst)
    }

    pub fn captured(&self) -> Vec<Value> {
        self.captured
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    fn answer(&self, request: &CompletionRequest<'_>) -> Result<Completion, AttemptError> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        match self.failures {
            FailureMode::TransientFirst(n) if call < n => {
                return Err(AttemptError::Transient("injected failure".into()))
            }
            FailureMode::AlwaysTransient => {
                return Err(AttemptError::Transient("injected failure".into()))
            }
            FailureMode::Refuse(status) => {
                return Err(AttemptError::Refused {
                    status,
                    message: "injected refusal".into(),
                })
            }
            FailureMode::Auth => return Err(AttemptError::Auth("injected auth failure".into())),
            _ => {}
        }
        let variant = PromptVariant::new(request.prompt.variant.style(), request.schema.is_some());
        let schema = build_function_schema(variant);
        let resp = self.rules.respond(&request.prompt.text, variant, &schema);
        Ok(Completion {
            output: resp.output,
            input_tokens: resp.input_tokens,
            output_tokens: resp.output_tokens,
        })
    }
}

impl Provider for MockProvider {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, AttemptError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak_in_flight.fetch_max(now, Ordering::SeqCst);
        self.captured
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(request.body.clone());
        if !self.delay.is_zero() {
            thread::sleep(self.delay);
        }
        let result = self.answer(request);
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        result
    }
}
