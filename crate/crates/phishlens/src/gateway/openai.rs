use std::env;

use phishlens_core::ModelOutput;
use serde_json::Value;
use ureq::Agent;

use super::{AttemptError, Completion, CompletionRequest, GatewayError, Provider};
use crate::config::ProviderProfile;

/// Chat-completions endpoint with tool calling.
pub struct OpenAiProvider {
    agent: Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl OpenAiProvider {
    /// Reads the API key from the profile's credential variable.
    pub fn from_profile(profile: &ProviderProfile) -> Result<Self, GatewayError> {
        let api_key = match &profile.credential_env {
            Some(var) => Some(env::var(var).map_err(|_| {
                GatewayError::AuthError(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let config = Agent::config_builder()
            .timeout_global(Some(profile.timeout()))
            .http_status_as_error(false)
            .build();
        Ok(Self {
            agent: Agent::new_with_config(config),
            endpoint: profile.endpoint.clone(),
            api_key,
        })
    }
}

impl Provider for OpenAiProvider {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, AttemptError> {
        let mut call = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(&request.body)
            .map_err(|e| AttemptError::Transient(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| AttemptError::Transient(e.to_string()))?;
        match status {
            200..=299 => parse_completion(&text),
            401 | 403 => Err(AttemptError::Auth(format!(
                "HTTP {status}: {}",
                snippet(&text)
            ))),
            408 | 409 | 429 | 500..=599 => Err(AttemptError::Transient(format!(
                "HTTP {status}: {}",
                snippet(&text)
            ))),
            _ => Err(AttemptError::Refused {
                status,
                message: snippet(&text),
            }),
        }
    }
}

fn snippet(text: &str) -> String {
    text.chars().take(300).collect()
}

/// Reads the first choice: tool-call arguments when present, else the
/// message text.
pub fn parse_completion(body: &str) -> Result<Completion, AttemptError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| AttemptError::Malformed(e.to_string()))?;
    let message = &value["choices"][0]["message"];
    if message.is_null() {
        return Err(AttemptError::Malformed("no choices in response".into()));
    }
    let arguments = message["tool_calls"][0]["function"]["arguments"].as_str();
    let output = match arguments {
        Some(args) => match serde_json::from_str::<Value>(args) {
            Ok(parsed) => ModelOutput::Structured(parsed),
            Err(_) => ModelOutput::Text(args.to_string()),
        },
        None => ModelOutput::Text(message["content"].as_str().unwrap_or_default().to_string()),
    };
    let usage = &value["usage"];
    Ok(Completion {
        output,
        input_tokens: usage["prompt_tokens"].as_u64().unwrap_or(0),
        output_tokens: usage["completion_tokens"].as_u64().unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn tool_call_arguments() {
        let body = json!({
            "choices": [{"message": {"role": "assistant", "content": null, "tool_calls": [{
                "type": "function",
                "function": {"name": "print_phishing_result", "arguments": "{\"is_phishing\": true, \"phishing_score\": 9}"}
            }]}}],
            "usage": {"prompt_tokens": 1200, "completion_tokens": 80}
        });
        let c = parse_completion(&body.to_string()).unwrap();
        assert_eq!(
            c.output,
            ModelOutput::Structured(json!({"is_phishing": true, "phishing_score": 9}))
        );
        assert_eq!((c.input_tokens, c.output_tokens), (1200, 80));
    }

    #[test]
    fn plain_content() {
        let body = json!({"choices": [{"message": {"content": "This is a phishing email."}}]});
        let c = parse_completion(&body.to_string()).unwrap();
        assert_eq!(
            c.output,
            ModelOutput::Text("This is a phishing email.".into())
        );
        assert_eq!(c.input_tokens, 0);
    }

    #[test]
    fn missing_choices() {
        assert!(matches!(
            parse_completion("{}"),
            Err(AttemptError::Malformed(_))
        ));
        assert!(matches!(
            parse_completion("not json"),
            Err(AttemptError::Malformed(_))
        ));
    }

    #[test]
    fn missing_credential() {
        let mut profile = ProviderProfile::mock();
        profile.credential_env = Some("PHISHLENS_TEST_UNSET_VARIABLE".into());
        assert!(matches!(
            OpenAiProvider::from_profile(&profile),
            Err(GatewayError::AuthError(_))
        ));
    }
}
