//! JSON-over-HTTP provider client.
//!
//! `POST {base}/generate` with `{prompt, inpaint_mask, batch_size, seed}`;
//! the reply is `{candidates: [CandidateScene, ...]}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{parse_candidates, GenerationRequest, GoalProvider, ProviderError};
use crate::mask::BinaryMask;
use crate::scene::CandidateScene;

/// Overrides the endpoint of an `http:` provider when set.
pub const ENDPOINT_ENV: &str = "ARRANGE_PROVIDER_URL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub prompt: String,
    pub inpaint_mask: BinaryMask,
    pub batch_size: usize,
    pub seed: Option<u64>,
}

impl From<&GenerationRequest> for WireRequest {
    fn from(r: &GenerationRequest) -> Self {
        Self {
            prompt: r.prompt.text.clone(),
            inpaint_mask: r.inpaint.mask.clone(),
            batch_size: r.batch_size,
            seed: r.seed,
        }
    }
}

pub struct HttpProvider {
    base: String,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self::with_timeout(base_url, Duration::from_secs(120))
    }

    pub fn with_timeout(base_url: impl Into<String>, timeout: Duration) -> Self {
        let base = base_url.into().trim_end_matches('/').to_string();
        Self {
            base,
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    pub fn endpoint(&self) -> String {
        format!("{}/generate", self.base)
    }
}

impl GoalProvider for HttpProvider {
    fn describe(&self) -> String {
        format!("http:{}", self.base)
    }

    fn request_batch(&self, request: &GenerationRequest) -> Result<Vec<CandidateScene>, ProviderError> {
        let body = serde_json::to_value(WireRequest::from(request)).expect("request serializes");
        let resp = match self.agent.post(&self.endpoint()).send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                let detail = r.into_string().unwrap_or_default();
                return Err(ProviderError::Unavailable(format!("HTTP {code}: {}", detail.trim())));
            }
            Err(e) => return Err(ProviderError::Unavailable(e.to_string())),
        };
        let doc: serde_json::Value = resp.into_json().map_err(|e| ProviderError::MalformedCandidate {
            source_tag: self.describe(),
            reason: e.to_string(),
        })?;
        parse_candidates(doc, &self.describe())
    }
}
