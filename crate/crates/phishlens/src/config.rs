//! Provider profiles and the JSON configuration file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use phishlens_core::eval::Pricing;
use phishlens_core::{MockRules, PromptStyle, TokenizerId};
use serde::{Deserialize, Serialize};

pub const DEFAULT_PROFILE: &str = "mock";
pub const DEFAULT_WORKERS: usize = 4;
pub const DEFAULT_OUT_DIR: &str = "phishlens-out";
pub const OPENAI_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const OPENAI_CREDENTIAL_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    /// Offline keyword rules.
    Mock,
    /// Chat-completions API with tool calling.
    Openai,
}

/// Model identity, pricing and endpoint settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderProfile {
    pub name: String,
    pub provider: ProviderKind,
    #[serde(default)]
    pub endpoint: String,
    #[serde(default)]
    pub model_id: String,
    pub supports_structured_output: bool,
    #[serde(default)]
    pub tokenizer: TokenizerId,
    /// USD per 1,000 input tokens.
    pub price_per_1k_input: f64,
    /// USD per 1,000 output tokens.
    pub price_per_1k_output: f64,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    /// Environment variable holding the API key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credential_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_rules: Option<MockRules>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config file {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("profile `{0}`: {1}")]
    InvalidProfile(String, &'static str),
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("token limit must be positive")]
    ZeroTokenLimit,
    #[error("worker count must be positive")]
    ZeroWorkers,
}

impl ProviderProfile {
    pub fn pricing(&self) -> Pricing {
        Pricing {
            price_per_1k_input: self.price_per_1k_input,
            price_per_1k_output: self.price_per_1k_output,
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |why| Err(ConfigError::InvalidProfile(self.name.clone(), why));
        if !(self.price_per_1k_input >= 0.0 && self.price_per_1k_output >= 0.0) {
            return bad("prices must be non-negative");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        if self.provider == ProviderKind::Openai
            && (self.endpoint.is_empty() || self.model_id.is_empty())
        {
            return bad("endpoint and model_id are required");
        }
        Ok(())
    }

    pub fn mock() -> Self {
        Self {
            name: "mock".into(),
            provider: ProviderKind::Mock,
            endpoint: String::new(),
            model_id: "mock".into(),
            supports_structured_output: true,
            tokenizer: TokenizerId::default(),
            price_per_1k_input: 0.0,
            price_per_1k_output: 0.0,
            max_in_flight: 8,
            timeout_secs: 1,
            credential_env: None,
            mock_rules: Some(MockRules::default()),
        }
    }

    fn openai(name: &str, price_in: f64, price_out: f64) -> Self {
        Self {
            name: name.into(),
            provider: ProviderKind::Openai,
            endpoint: OPENAI_ENDPOINT.into(),
            model_id: name.into(),
            supports_structured_output: true,
            tokenizer: TokenizerId::default(),
            price_per_1k_input: price_in,
            price_per_1k_output: price_out,
            max_in_flight: 4,
            timeout_secs: 120,
            credential_env: Some(OPENAI_CREDENTIAL_ENV.into()),
            mock_rules: None,
        }
    }

    /// `mock`, `gpt-4` and `gpt-3.5-turbo`.
    pub fn builtin() -> Vec<Self> {
        vec![
            Self::mock(),
            Self::openai("gpt-4", 0.03, 0.06),
            Self::openai("gpt-3.5-turbo", 0.002, 0.002),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    /// Attempts per request, the first one included.
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub initial_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            initial_backoff_ms: 1000,
        }
    }
}

impl RetryPolicy {
    /// Delay after failed attempt number `attempt` (1-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64
            .checked_shl(attempt.saturating_sub(1))
            .unwrap_or(u64::MAX);
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(factor))
    }
}

/// Contents of the file passed with `--config`. Every setting is optional;
/// command-line flags take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<PromptStyle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_limit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dummy_to: Option<String>,
    /// Overrides the profile's tokenizer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokenizer: Option<TokenizerId>,
    /// HTML attributes kept when pruning; replaces the default list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep_attributes: Option<Vec<String>>,
    /// Line that stands in for text removed from a plain body.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elision_marker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry: Option<RetryPolicy>,
    /// Fraction of samples allowed to fail before `evaluate` exits 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_rate_ceiling: Option<f64>,
    /// Extra header-name patterns removed from every email.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header_denylist: Option<Vec<String>>,
    /// Added to the built-in profiles; a profile with a built-in name
    /// replaces it.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub profiles: Vec<ProviderProfile>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.into(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.into(),
            source,
        })
    }

    /// Built-in profiles merged with the file's own.
    pub fn all_profiles(&self) -> Vec<ProviderProfile> {
        let mut profiles = ProviderProfile::builtin();
        for profile in &self.profiles {
            match profiles.iter_mut().find(|p| p.name == profile.name) {
                Some(existing) => *existing = profile.clone(),
                None => profiles.push(profile.clone()),
            }
        }
        profiles
    }

    pub fn find_profile(&self, name: &str) -> Result<ProviderProfile, ConfigError> {
        let profile = self
            .all_profiles()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| ConfigError::UnknownProfile(name.into()))?;
        profile.validate()?;
        Ok(profile)
    }

    /// A file with every key set, used for documentation.
    pub fn example() -> Self {
        let mut custom = ProviderProfile::openai("my-model", 0.01, 0.03);
        custom.endpoint = "https://llm.example.com/v1/chat/completions".into();
        custom.model_id = "my-model-2024".into();
        custom.credential_env = Some("MY_LLM_API_KEY".into());
        let mut mock = ProviderProfile::mock();
        mock.name = "strict-mock".into();
        Self {
            profile: Some("mock".into()),
            prompt: Some(PromptStyle::Normal),
            token_limit: Some(3000),
            out: Some(DEFAULT_OUT_DIR.into()),
            workers: Some(DEFAULT_WORKERS),
            dummy_to: Some(phishlens_core::pipeline::DEFAULT_DUMMY_ADDRESS.into()),
            tokenizer: Some(TokenizerId::default()),
            keep_attributes: Some(
                phishlens_core::simplify::DEFAULT_KEEP_ATTRIBUTES
                    .iter()
                    .map(|a| a.to_string())
                    .collect(),
            ),
            elision_marker: Some(phishlens_core::simplify::DEFAULT_ELISION_MARKER.into()),
            retry: Some(RetryPolicy::default()),
            failure_rate_ceiling: Some(1.0),
            header_denylist: Some(vec!["List-*".into()]),
            profiles: vec![custom, mock],
        }
    }
}

/// Every key path accepted in a config file, nested keys as `a.b` and
/// array elements as `a[].b`.
pub fn config_keys() -> Vec<String> {
    let value = serde_json::to_value(ConfigFile::example()).expect("config serializes");
    let mut keys = Vec::new();
    collect_keys(&value, "", &mut keys);
    keys.sort();
    keys.dedup();
    keys
}

fn collect_keys(value: &serde_json::Value, prefix: &str, out: &mut Vec<String>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                out.push(path.clone());
                collect_keys(v, &path, out);
            }
        }
        serde_json::Value::Array(items) if items.iter().any(|i| i.is_object()) => {
            let path = format!("{prefix}[]");
            for item in items {
                collect_keys(item, &path, out);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_prices() {
        let gpt4 = ConfigFile::default().find_profile("gpt-4").unwrap();
        assert_eq!(
            (gpt4.price_per_1k_input, gpt4.price_per_1k_output),
            (0.03, 0.06)
        );
        let gpt35 = ConfigFile::default().find_profile("gpt-3.5-turbo").unwrap();
        assert_eq!(
            (gpt35.price_per_1k_input, gpt35.price_per_1k_output),
            (0.002, 0.002)
        );
        assert_eq!(gpt4.credential_env.as_deref(), Some("OPENAI_API_KEY"));
    }

    #[test]
    fn file_profiles_override_builtins() {
        let file: ConfigFile = serde_json::from_str(
            r#"{"profiles": [{"name": "mock", "provider": "mock", "supports_structured_output": false,
                "price_per_1k_input": 0, "price_per_1k_output": 0, "max_in_flight": 2, "timeout_secs": 1}]}"#,
        )
        .unwrap();
        let mock = file.find_profile("mock").unwrap();
        assert!(!mock.supports_structured_output);
        assert_eq!(mock.max_in_flight, 2);
        assert!(matches!(
            file.find_profile("nope"),
            Err(ConfigError::UnknownProfile(_))
        ));
    }

    #[test]
    fn invalid_profiles_rejected() {
        let mut p = ProviderProfile::mock();
        p.max_in_flight = 0;
        assert!(p.validate().is_err());
        let mut p = ProviderProfile::mock();
        p.price_per_1k_output = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"temperature": 0.2}"#).is_err());
    }

    #[test]
    fn example_round_trips_and_lists_keys() {
        let example = ConfigFile::example();
        let text = serde_json::to_string(&example).unwrap();
        assert_eq!(serde_json::from_str::<ConfigFile>(&text).unwrap(), example);
        let keys = config_keys();
        for key in [
            "retry.initial_backoff_ms",
            "profiles[].price_per_1k_input",
            "profiles[].mock_rules.keywords",
        ] {
            assert!(keys.iter().any(|k| k == key), "{key}");
        }
    }

    #[test]
    fn backoff_doubles() {
        let r = RetryPolicy::default();
        assert_eq!(r.backoff(1), Duration::from_secs(1));
        assert_eq!(r.backoff(2), Duration::from_secs(2));
        assert_eq!(r.backoff(3), Duration::from_secs(4));
    }
}
