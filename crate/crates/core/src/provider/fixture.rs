//! Serves `*.candidate.json` files from a directory in filename order.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{parse_candidates, GenerationRequest, GoalProvider, ProviderError};
use crate::scene::CandidateScene;

pub const FIXTURE_SUFFIX: &str = ".candidate.json";

/// Each call consumes the next `batch_size` files; a short final batch is
/// returned as-is and a call with nothing left fails with
/// [`ProviderError::FixtureExhausted`].
pub struct FixtureProvider {
    dir: PathBuf,
    files: Vec<PathBuf>,
    cursor: Mutex<usize>,
}

impl FixtureProvider {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let dir = dir.as_ref().to_path_buf();
        let entries = std::fs::read_dir(&dir).map_err(|e| ProviderError::Unavailable(format!("{}: {e}", dir.display())))?;
        let mut files = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| ProviderError::Unavailable(e.to_string()))?.path();
            let is_candidate = path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(FIXTURE_SUFFIX));
            if is_candidate && path.is_file() {
                files.push(path);
            }
        }
        files.sort();
        Ok(Self {
            dir,
            files,
            cursor: Mutex::new(0),
        })
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    fn load(&self, path: &Path) -> Result<CandidateScene, ProviderError> {
        let tag = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let text = std::fs::read_to_string(path).map_err(|e| ProviderError::Unavailable(format!("{}: {e}", path.display())))?;
        let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| ProviderError::MalformedCandidate {
            source_tag: tag.clone(),
            reason: e.to_string(),
        })?;
        let mut c = parse_candidates(serde_json::Value::Array(vec![doc]), &tag)?.remove(0);
        // provenance is the file, whatever the document claims
        c.source_tag = format!("fixture:{tag}");
        Ok(c)
    }
}

impl GoalProvider for FixtureProvider {
    fn describe(&self) -> String {
        format!("fixture:{}", self.dir.display())
    }

    fn request_batch(&self, request: &GenerationRequest) -> Result<Vec<CandidateScene>, ProviderError> {
        let mut cursor = self.cursor.lock().expect("fixture cursor");
        if *cursor >= self.files.len() {
            return Err(ProviderError::FixtureExhausted {
                dir: self.dir.display().to_string(),
            });
        }
        let end = (*cursor + request.batch_size).min(self.files.len());
        let batch = self.files[*cursor..end].iter().map(|p| self.load(p)).collect::<Result<Vec<_>, _>>()?;
        *cursor = end;
        Ok(batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::testutil::{candidate, request};

    fn write(dir: &Path, name: &str, c: &CandidateScene) {
        std::fs::write(dir.join(name), serde_json::to_string(c).unwrap()).unwrap();
    }

    #[test]
    fn serves_files_in_name_order_then_exhausts() {
        let tmp = tempfile::tempdir().unwrap();
        for (name, n) in [("b.candidate.json", 2), ("a.candidate.json", 1), ("d.candidate.json", 4), ("c.candidate.json", 3)] {
            write(tmp.path(), name, &candidate(n));
        }
        std::fs::write(tmp.path().join("notes.json"), "{}").unwrap();
        let p = FixtureProvider::open(tmp.path()).unwrap();
        assert_eq!(p.len(), 4);
        let batch = p.request_batch(&request()).unwrap();
        let counts: Vec<_> = batch.iter().map(|c| c.movable_count()).collect();
        assert_eq!(counts, vec![1, 2, 3, 4]);
        assert_eq!(batch[0].source_tag, "fixture:a.candidate.json");
        assert!(matches!(p.request_batch(&request()), Err(ProviderError::FixtureExhausted { .. })));
    }

    #[test]
    fn short_final_batch() {
        let tmp = tempfile::tempdir().unwrap();
        for i in 0..3 {
            write(tmp.path(), &format!("{i}.candidate.json"), &candidate(1));
        }
        let p = FixtureProvider::open(tmp.path()).unwrap();
        let req = request().with_batch_size(2);
        assert_eq!(p.request_batch(&req).unwrap().len(), 2);
        assert_eq!(p.request_batch(&req).unwrap().len(), 1);
    }

    #[test]
    fn malformed_file_is_reported() {
        let tmp = tempfile::tempdir().unwrap();
        std::fs::write(tmp.path().join("x.candidate.json"), "{\"image_width\": 4}").unwrap();
        let p = FixtureProvider::open(tmp.path()).unwrap();
        assert!(matches!(p.request_batch(&request()), Err(ProviderError::MalformedCandidate { .. })));
    }

    #[test]
    fn missing_directory_is_unavailable() {
        assert!(matches!(FixtureProvider::open("/nonexistent/dir"), Err(ProviderError::Unavailable(_))));
    }
}
