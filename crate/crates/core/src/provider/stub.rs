//! Minimal in-process server speaking the provider wire protocol, backed by
//! any other provider. Used by tests and the `serve-stub` CLI command.

use std::sync::Arc;
use std::thread::JoinHandle;

use tiny_http::{Header, Method, Response, Server};

use super::http::WireRequest;
use super::{GenerationRequest, GoalProvider, ProviderError};
use crate::prompting::{InpaintMask, Prompt};

pub struct StubServer {
    server: Arc<Server>,
    url: String,
    worker: Option<JoinHandle<()>>,
}

fn json_response(status: u16, body: String) -> Response<std::io::Cursor<Vec<u8>>> {
    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
    Response::from_string(body).with_status_code(status).with_header(header)
}

fn error_body(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn handle(provider: &dyn GoalProvider, body: &str) -> (u16, String) {
    let wire: WireRequest = match serde_json::from_str(body) {
        Ok(w) => w,
        Err(e) => return (400, error_body(&e.to_string())),
    };
    let request = GenerationRequest {
        prompt: Prompt {
            text: wire.prompt,
            noun_list: Vec::new(),
        },
        inpaint: InpaintMask { mask: wire.inpaint_mask },
        batch_size: wire.batch_size,
        seed: wire.seed,
    };
    if let Err(e) = request.validate() {
        return (400, error_body(&e.to_string()));
    }
    match provider.request_batch(&request) {
        Ok(candidates) => (200, serde_json::json!({ "candidates": candidates }).to_string()),
        Err(e @ ProviderError::InvalidRequest(_)) => (400, error_body(&e.to_string())),
        Err(e) => (503, error_body(&e.to_string())),
    }
}

impl StubServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and serves until dropped.
    pub fn spawn(provider: Arc<dyn GoalProvider>, addr: &str) -> Result<Self, ProviderError> {
        let server = Arc::new(Server::http(addr).map_err(|e| ProviderError::Unavailable(e.to_string()))?);
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| ProviderError::Unavailable("stub server has no IP address".into()))?;
        let host = addr.rsplit_once(':').map_or("127.0.0.1", |(h, _)| h);
        let url = format!("http://{host}:{port}");
        let srv = Arc::clone(&server);
        let worker = std::thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                let (status, body) = if req.method() != &Method::Post || req.url() != "/generate" {
                    (404, error_body("only POST /generate is served"))
                } else {
                    let mut text = String::new();
                    match req.as_reader().read_to_string(&mut text) {
                        Ok(_) => handle(provider.as_ref(), &text),
                        Err(e) => (400, error_body(&e.to_string())),
                    }
                };
                // a client that hung up is not our problem
                let _ = req.respond(json_response(status, body));
            }
        });
        Ok(Self {
            server,
            url,
            worker: Some(worker),
        })
    }

    /// Base URL, e.g. `http://127.0.0.1:40123`.
    pub fn url(&self) -> &str {
        &self.url
    }

    /// Blocks until the server is stopped from elsewhere (never, for the CLI).
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::testutil::{candidate, request};
    use crate::provider::{HttpProvider, ScriptedProvider};

    #[test]
    fn round_trip_through_the_wire_format() {
        let backing = Arc::new(ScriptedProvider::repeating(vec![candidate(2), candidate(3)]));
        let server = StubServer::spawn(backing, "127.0.0.1:0").unwrap();
        let client = HttpProvider::new(server.url());
        let got = client.request_batch(&request()).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0], candidate(2));
        assert_eq!(got[1].movable_count(), 3);
    }

    #[test]
    fn backend_failure_maps_to_unavailable() {
        let backing = Arc::new(ScriptedProvider::new(Vec::new()));
        let server = StubServer::spawn(backing, "127.0.0.1:0").unwrap();
        let err = HttpProvider::new(server.url()).request_batch(&request()).unwrap_err();
        assert!(matches!(err, ProviderError::Unavailable(ref m) if m.contains("503")), "{err}");
    }

    #[test]
    fn unreachable_endpoint_is_unavailable() {
        let url = {
            let s = StubServer::spawn(Arc::new(ScriptedProvider::new(Vec::new())), "127.0.0.1:0").unwrap();
            s.url().to_string()
        };
        let err = HttpProvider::new(url).request_batch(&request()).unwrap_err();
        assert!(matches!(err, ProviderError::Unavailable(_)));
    }

    #[test]
    fn bad_body_is_400() {
        let (code, _) = handle(&ScriptedProvider::new(Vec::new()), "{not json");
        assert_eq!(code, 400);
    }
}
