//! Submission of rendered prompts to a provider, with a per-profile
//! in-flight cap and retries.

mod limiter;
mod mock;
mod openai;

use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use phishlens_core::{ModelOutput, RawModelResponse, RenderedPrompt, ResponseSchema};
use serde_json::{json, Value};

pub use limiter::Limiter;
pub use mock::{FailureMode, MockProvider};
pub use openai::OpenAiProvider;

use crate::config::{ProviderKind, ProviderProfile, RetryPolicy};

/// One request as handed to a provider.
pub struct CompletionRequest<'a> {
    pub prompt: &'a RenderedPrompt,
    /// Declared as a tool only when the profile supports structured output.
    pub schema: Option<&'a ResponseSchema>,
    /// The HTTP body for chat-completion style APIs.
    pub body: Value,
}

/// A provider's reply before timing is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub output: ModelOutput,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

/// Failure of a single attempt.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AttemptError {
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("provider refused the request (HTTP {status}): {message}")]
    Refused { status: u16, message: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("transport error after {attempts} attempts: {last}")]
    TransportError { attempts: u32, last: String },
    #[error("authentication error: {0}")]
    AuthError(String),
    #[error("provider refusal (HTTP {status}): {message}")]
    ProviderRefusal { status: u16, message: String },
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
}

pub trait Provider: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, AttemptError>;
}

/// Chat-completion request body. Sampling parameters are left at the
/// provider defaults, so none are sent.
pub fn build_request_body(model_id: &str, prompt: &str, schema: Option<&ResponseSchema>) -> Value {
    let mut body = json!({
        "model": model_id,
        "messages": [{"role": "user", "content": prompt}],
    });
    if let Some(schema) = schema {
        body["tools"] = json!([{
            "type": "function",
            "function": {
                "name": schema.function_name,
                "description": schema.description,
                "parameters": schema.parameters_json(),
            }
        }]);
        body["tool_choice"] =
            json!({"type": "function", "function": {"name": schema.function_name}});
    }
    body
}

/// Sends prompts for one profile.
pub struct Gateway {
    profile: ProviderProfile,
    provider: Arc<dyn Provider>,
    limiter: Limiter,
    retry: RetryPolicy,
}

impl Gateway {
    pub fn new(profile: ProviderProfile, provider: Arc<dyn Provider>, retry: RetryPolicy) -> Self {
        let limiter = Limiter::new(profile.max_in_flight);
        Self {
            profile,
            provider,
            limiter,
            retry,
        }
    }

    /// Builds the provider the profile names. Live providers need their
    /// credential variable set.
    pub fn from_profile(
        profile: ProviderProfile,
        retry: RetryPolicy,
    ) -> Result<Self, GatewayError> {
        let provider: Arc<dyn Provider> = match profile.provider {
            ProviderKind::Mock => Arc::new(MockProvider::new(
                profile.mock_rules.clone().unwrap_or_default(),
            )),
            ProviderKind::Openai => Arc::new(OpenAiProvider::from_profile(&profile)?),
        };
        Ok(Self::new(profile, provider, retry))
    }

    pub fn profile(&self) -> &ProviderProfile {
        &self.profile
    }

    /// Sends one prompt, retrying transient failures with exponential
    /// backoff. Blocks while `max_in_flight` requests are outstanding.
    pub fn submit(
        &self,
        prompt: &RenderedPrompt,
        schema: &ResponseSchema,
    ) -> Result<RawModelResponse, GatewayError> {
        let schema = self.profile.supports_structured_output.then_some(schema);
        let request = CompletionRequest {
            prompt,
            schema,
            body: build_request_body(&self.profile.model_id, &prompt.text, schema),
        };
        let started = Instant::now();
        let mut attempt_latencies = Vec::new();
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let attempt_started = Instant::now();
            let result = {
                let _permit = self.limiter.acquire();
                self.provider.complete(&request)
            };
            attempt_latencies.push(attempt_started.elapsed());
            match result {
                Ok(completion) => {
                    return Ok(RawModelResponse {
                        output: completion.output,
                        input_tokens: completion.input_tokens,
                        output_tokens: completion.output_tokens,
                        latency: started.elapsed(),
                        attempt_latencies,
                    })
                }
                Err(AttemptError::Transient(message)) => {
                    log::warn!(
                        "{}: attempt {attempt}/{max_attempts} failed: {message}",
                        self.profile.name
                    );
                    if attempt >= max_attempts {
                        return Err(GatewayError::TransportError {
                            attempts: attempt,
                            last: message,
                        });
                    }
                    sleep(self.retry.backoff(attempt));
                }
                Err(AttemptError::Auth(message)) => return Err(GatewayError::AuthError(message)),
                Err(AttemptError::Refused { status, message }) => {
                    return Err(GatewayError::ProviderRefusal { status, message })
                }
                Err(AttemptError::Malformed(message)) => {
                    return Err(GatewayError::MalformedResponse(message))
                }
            }
        }
    }
}

fn sleep(duration: Duration) {
    if !duration.is_zero() {
        thread::sleep(duration);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use phishlens_core::prompt::PromptVariant;
    use phishlens_core::tokens::Approx4;
    use phishlens_core::{build_function_schema, render_prompt, BodyKind, SimplifiedEmail};

    fn prompt(variant: PromptVariant, body: &str) -> RenderedPrompt {
        let email = SimplifiedEmail {
            header_block: "Subject: t".into(),
            body_text: body.into(),
            body_kind: BodyKind::Plain,
            reduction_log: Vec::new(),
        };
        render_prompt(&email, variant, &Approx4)
    }

    fn no_wait() -> RetryPolicy {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff_ms: 0,
        }
    }

    #[test]
    fn body_has_tool_and_no_sampling_parameters() {
        let schema = build_function_schema(PromptVariant::Normal);
        let body = build_request_body("gpt-4", "hello", Some(&schema));
        assert_eq!(
            body["tools"][0]["function"]["name"],
            "print_phishing_result"
        );
        assert_eq!(
            body["tool_choice"]["function"]["name"],
            "print_phishing_result"
        );
        let keys: Vec<&String> = body.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 4);
        for key in [
            "temperature",
            "top_p",
            "max_tokens",
            "seed",
            "presence_penalty",
            "frequency_penalty",
        ] {
            assert!(body.get(key).is_none());
        }
        assert!(build_request_body("m", "p", None).get("tools").is_none());
    }

    #[test]
    fn transient_failures_are_retried() {
        let mock = Arc::new(MockProvider::default().with_failures(FailureMode::TransientFirst(2)));
        let gateway = Gateway::new(ProviderProfile::mock(), mock.clone(), no_wait());
        let schema = build_function_schema(PromptVariant::Normal);
        let resp = gateway
            .submit(&prompt(PromptVariant::Normal, "hi"), &schema)
            .unwrap();
        assert_eq!(resp.attempt_latencies.len(), 3);
        assert_eq!(mock.calls(), 3);
    }

    #[test]
    fn retries_exhausted() {
        let mock = Arc::new(MockProvider::default().with_failures(FailureMode::AlwaysTransient));
        let gateway = Gateway::new(ProviderProfile::mock(), mock.clone(), no_wait());
        let schema = build_function_schema(PromptVariant::Normal);
        let err = gateway
            .submit(&prompt(PromptVariant::Normal, "hi"), &schema)
            .unwrap_err();
        assert!(matches!(
            err,
            GatewayError::TransportError { attempts: 3, .. }
        ));
        assert_eq!(mock.calls(), 3);
    }

    #[test]
    fn refusals_are_not_retried() {
        let mock = Arc::new(MockProvider::default().with_failures(FailureMode::Refuse(400)));
        let gateway = Gateway::new(ProviderProfile::mock(), mock.clone(), no_wait());
        let schema = build_function_schema(PromptVariant::Normal);
        let err = gateway
            .submit(&prompt(PromptVariant::Normal, "hi"), &schema)
            .unwrap_err();
        assert!(matches!(
            err,
            GatewayError::ProviderRefusal { status: 400, .. }
        ));
        assert_eq!(mock.calls(), 1);
    }

    #[test]
    fn unstructured_profile_gets_no_tools() {
        let mock = Arc::new(MockProvider::default());
        let mut profile = ProviderProfile::mock();
        profile.supports_structured_output = false;
        let gateway = Gateway::new(profile, mock.clone(), no_wait());
        let schema = build_function_schema(PromptVariant::EmbeddedSchema);
        let resp = gateway
            .submit(&prompt(PromptVariant::EmbeddedSchema, "click now"), &schema)
            .unwrap();
        assert!(matches!(resp.output, ModelOutput::Text(_)));
        assert!(mock.captured()[0].get("tools").is_none());
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        let mut profile = ProviderProfile::mock();
        profile.provider = ProviderKind::Openai;
        profile.endpoint = "http://127.0.0.1:9/v1/chat/completions".into();
        profile.credential_env = None;
        let gateway = Gateway::from_profile(profile, no_wait()).unwrap();
        let schema = build_function_schema(PromptVariant::Normal);
        let err = gateway
            .submit(&prompt(PromptVariant::Normal, "hi"), &schema)
            .unwrap_err();
        assert!(
            matches!(err, GatewayError::TransportError { attempts: 3, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn in_flight_cap_holds() {
        let mock = Arc::new(MockProvider::default().with_delay(Duration::from_millis(5)));
        let mut profile = ProviderProfile::mock();
        profile.max_in_flight = 3;
        let gateway = Gateway::new(profile, mock.clone(), no_wait());
        let schema = build_function_schema(PromptVariant::Normal);
        let p = prompt(PromptVariant::Normal, "hi");
        thread::scope(|s| {
            for _ in 0..12 {
                s.spawn(|| gateway.submit(&p, &schema).unwrap());
            }
        });
        assert_eq!(mock.calls(), 12);
        assert!(mock.max_in_flight() <= 3);
        assert!(mock.max_in_flight() >= 2);
    }
}
