//! Goal-image providers and the resample-until-valid loop.
//!
//! A provider stands in for the text-to-image model plus the perception
//! stack run on its output: it answers a [`GenerationRequest`] with
//! object-level [`CandidateScene`]s.

mod fixture;
mod http;
mod scripted;
mod stub;
pub mod synthetic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompting::{InpaintMask, Prompt};
use crate::scene::{CandidateScene, SceneDescription};

pub use fixture::{FixtureProvider, FIXTURE_SUFFIX};
pub use http::{HttpProvider, WireRequest, ENDPOINT_ENV};
pub use scripted::ScriptedProvider;
pub use stub::StubServer;
pub use synthetic::{SyntheticProvider, Template};

pub const DEFAULT_BATCH_SIZE: usize = 4;
pub const DEFAULT_MAX_BATCHES: usize = 5;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("malformed candidate from {source_tag}: {reason}")]
    MalformedCandidate { source_tag: String, reason: String },
    #[error("fixture directory {dir} has no candidates left")]
    FixtureExhausted { dir: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("unknown synthetic template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{template}` cannot fit the scene: {reason}")]
    TemplateDoesNotFit { template: String, reason: String },
    #[error("no candidate with {expected} movable objects after {batches} batch(es); counts seen {counts:?}")]
    NoValidCandidate {
        expected: usize,
        batches: usize,
        counts: Vec<Vec<usize>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: Prompt,
    pub inpaint: InpaintMask,
    pub batch_size: usize,
    pub seed: Option<u64>,
}

impl GenerationRequest {
    pub fn new(prompt: Prompt, inpaint: InpaintMask) -> Self {
        Self {
            prompt,
            inpaint,
            batch_size: DEFAULT_BATCH_SIZE,
            seed: None,
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.batch_size == 0 {
            return Err(ProviderError::InvalidRequest("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Samples from `p(goal image | prompt, inpaint mask)`.
///
/// Implementations must be deterministic given the request when they claim
/// to be (fixture, synthetic) and must return candidates in request order.
pub trait GoalProvider: Send + Sync {
    /// Short provenance label, e.g. `fixture:dir` or `synthetic:office`.
    fn describe(&self) -> String;

    fn request_batch(&self, request: &GenerationRequest) -> Result<Vec<CandidateScene>, ProviderError>;
}

impl<P: GoalProvider + ?Sized> GoalProvider for Box<P> {
    fn describe(&self) -> String {
        (**self).describe()
    }

    fn request_batch(&self, request: &GenerationRequest) -> Result<Vec<CandidateScene>, ProviderError> {
        (**self).request_batch(request)
    }
}

/// Validates and forwards one batch request.
pub fn request_batch(provider: &dyn GoalProvider, request: &GenerationRequest) -> Result<Vec<CandidateScene>, ProviderError> {
    request.validate()?;
    provider.request_batch(request)
}

/// Everything `sample_until_valid` saw, for the audit trail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleOutcome {
    pub accepted: Vec<CandidateScene>,
    pub batches: usize,
    /// movable-object count of every candidate, batch by batch
    pub counts: Vec<Vec<usize>>,
}

/// Seed used for the `k`-th batch: consecutive batches must not repeat.
pub fn batch_seed(seed: Option<u64>, batch: usize) -> Option<u64> {
    seed.map(|s| s.wrapping_add(batch as u64))
}

/// Requests batches until one holds a candidate with the scene's movable
/// object count, returning every matching candidate from that batch and
/// the ones before it.
pub fn sample_until_valid(
    provider: &dyn GoalProvider,
    scene: &SceneDescription,
    request: &GenerationRequest,
    max_batches: usize,
) -> Result<SampleOutcome, ProviderError> {
    if max_batches == 0 {
        return Err(ProviderError::InvalidRequest("max_batches must be at least 1".into()));
    }
    let expected = scene.movable_count();
    let mut accepted = Vec::new();
    let mut counts = Vec::new();
    for k in 0..max_batches {
        let req = GenerationRequest {
            seed: batch_seed(request.seed, k),
            ..request.clone()
        };
        let batch = request_batch(provider, &req)?;
        counts.push(batch.iter().map(CandidateScene::movable_count).collect());
        accepted.extend(batch.into_iter().filter(|c| c.movable_count() == expected));
        if !accepted.is_empty() {
            return Ok(SampleOutcome {
                accepted,
                batches: k + 1,
                counts,
            });
        }
    }
    Err(ProviderError::NoValidCandidate {
        expected,
        batches: max_batches,
        counts,
    })
}

/// Parses a `{candidates: [...]}` document or a bare candidate list.
pub(crate) fn parse_candidates(doc: serde_json::Value, tag: &str) -> Result<Vec<CandidateScene>, ProviderError> {
    let list = match doc {
        serde_json::Value::Object(mut m) => m.remove("candidates").ok_or_else(|| ProviderError::MalformedCandidate {
            source_tag: tag.to_string(),
            reason: "missing `candidates`".into(),
        })?,
        other => other,
    };
    let serde_json::Value::Array(items) = list else {
        return Err(ProviderError::MalformedCandidate {
            source_tag: tag.to_string(),
            reason: "`candidates` is not a list".into(),
        });
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let mut c = CandidateScene::from_value(v).map_err(|e| ProviderError::MalformedCandidate {
                source_tag: format!("{tag}#{i}"),
                reason: e.to_string(),
            })?;
            if c.source_tag.is_empty() {
                c.source_tag = format!("{tag}#{i}");
            }
            Ok(c)
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::mask::BinaryMask;
    use crate::prompting::{InpaintMask, Prompt};
    use crate::scene::{CameraModel, CandidateScene, ObjectInstance, SceneDescription};

    use super::GenerationRequest;

    pub fn object(id: &str, x: u32, movable: bool) -> ObjectInstance {
        ObjectInstance {
            id: id.into(),
            caption: format!("a {id}"),
            class_noun: "block".into(),
            movable,
            mask: BinaryMask::from_fn(64, 16, |px, py| (x..x + 3).contains(&px) && (4..7).contains(&py)),
            feature: vec![1.0, 0.0],
        }
    }

    pub fn candidate(movable: usize) -> CandidateScene {
        let objects = (0..movable).map(|i| object(&format!("g{i}"), 4 * i as u32, true)).collect();
        CandidateScene::new(format!("n{movable}"), 64, 16, objects).unwrap()
    }

    pub fn scene(movable: usize) -> SceneDescription {
        let objects = (0..movable).map(|i| object(&format!("o{i}"), 4 * i as u32, true)).collect();
        let camera = CameraModel { fx: 500.0, fy: 500.0, cx: 32.0, cy: 8.0, table_depth: 0.5 };
        SceneDescription::new(64, 16, camera, BinaryMask::empty(64, 16), objects).unwrap()
    }

    pub fn request() -> GenerationRequest {
        GenerationRequest::new(
            Prompt {
                text: "A block".into(),
                noun_list: vec!["block".into()],
            },
            InpaintMask {
                mask: BinaryMask::empty(64, 16),
            },
        )
    }
}
