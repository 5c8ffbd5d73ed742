//! Token counting under named tokenizers.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

/// Name of the built-in byte-length approximation.
pub const APPROX4: &str = "approx4";

/// Default token limit for the serialized email.
pub const DEFAULT_TOKEN_LIMIT: usize = 3000;

/// Counts tokens in text. Implementations must be deterministic.
pub trait Tokenizer: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

/// `ceil(utf8_len / 4)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Approx4;

impl Tokenizer for Approx4 {
    fn count(&self, text: &str) -> usize {
        text.len().div_ceil(4)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenizerId(String);

impl TokenizerId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Default for TokenizerId {
    fn default() -> Self {
        Self(APPROX4.to_owned())
    }
}

impl core::fmt::Display for TokenizerId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown tokenizer `{0}`")]
pub struct UnknownTokenizer(pub TokenizerId);

/// Upper bound on the tokens of the serialized email.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct TokenBudget(usize);

impl TokenBudget {
    /// Returns `None` for a zero limit.
    pub fn new(limit: usize) -> Option<Self> {
        (limit >= 1).then_some(Self(limit))
    }

    pub fn limit(self) -> usize {
        self.0
    }

    pub fn admits(self, tokenizer: &dyn Tokenizer, text: &str) -> bool {
        tokenizer.count(text) <= self.0
    }
}

impl Default for TokenBudget {
    fn default() -> Self {
        Self(DEFAULT_TOKEN_LIMIT)
    }
}

impl TryFrom<usize> for TokenBudget {
    type Error = &'static str;

    fn try_from(limit: usize) -> Result<Self, Self::Error> {
        Self::new(limit).ok_or("token limit must be at least 1")
    }
}

impl From<TokenBudget> for usize {
    fn from(budget: TokenBudget) -> usize {
        budget.0
    }
}

/// Tokenizers by name. `approx4` is always registered.
pub struct TokenizerRegistry {
    schemes: BTreeMap<TokenizerId, Box<dyn Tokenizer>>,
}

impl Default for TokenizerRegistry {
    fn default() -> Self {
        let mut schemes: BTreeMap<TokenizerId, Box<dyn Tokenizer>> = BTreeMap::new();
        schemes.insert(TokenizerId::new(APPROX4), Box::new(Approx4));
        Self { schemes }
    }
}

impl core::fmt::Debug for TokenizerRegistry {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_set().entries(self.schemes.keys()).finish()
    }
}

impl TokenizerRegistry {
    pub fn register(&mut self, id: TokenizerId, tokenizer: Box<dyn Tokenizer>) {
        self.schemes.insert(id, tokenizer);
    }

    pub fn get(&self, id: &TokenizerId) -> Result<&dyn Tokenizer, UnknownTokenizer> {
        self.schemes
            .get(id)
            .map(|t| t.as_ref())
            .ok_or_else(|| UnknownTokenizer(id.clone()))
    }

    pub fn count_tokens(&self, text: &str, id: &TokenizerId) -> Result<usize, UnknownTokenizer> {
        Ok(self.get(id)?.count(text))
    }

    pub fn within_budget(
        &self,
        text: &str,
        id: &TokenizerId,
        budget: TokenBudget,
    ) -> Result<bool, UnknownTokenizer> {
        Ok(self.count_tokens(text, id)? <= budget.limit())
    }
}
