//! A provider that replays pre-built batches; handy for tests and demos.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{GenerationRequest, GoalProvider, ProviderError};
use crate::scene::CandidateScene;

pub struct ScriptedProvider {
    batches: Mutex<Vec<Vec<CandidateScene>>>,
    repeat: Option<Vec<CandidateScene>>,
    calls: AtomicUsize,
}

impl ScriptedProvider {
    /// Returns `batches` in order, one per call, then reports unavailability.
    pub fn new(mut batches: Vec<Vec<CandidateScene>>) -> Self {
        batches.reverse();
        Self {
            batches: Mutex::new(batches),
            repeat: None,
            calls: AtomicUsize::new(0),
        }
    }

    /// Returns the same batch forever.
    pub fn repeating(batch: Vec<CandidateScene>) -> Self {
        Self {
            batches: Mutex::new(Vec::new()),
            repeat: Some(batch),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl GoalProvider for ScriptedProvider {
    fn describe(&self) -> String {
        "scripted".into()
    }

    fn request_batch(&self, _request: &GenerationRequest) -> Result<Vec<CandidateScene>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(b) = &self.repeat {
            return Ok(b.clone());
        }
        self.batches
            .lock()
            .expect("script lock")
            .pop()
            .ok_or_else(|| ProviderError::Unavailable("script exhausted".into()))
    }
}
