//! OpenAI-compatible HTTP backend (chat completions, image generation,
//! moderation and embeddings).

use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{estimate_units, Backend, ChatRequest, Completion, ImageRequest, ProviderError, Result};
use crate::corpus::{CorpusError, Embedder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub base_url: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub chat_model: String,
    pub image_model: String,
    pub embedding_model: String,
    pub embedding_dim: usize,
    pub chat_timeout_secs: u64,
    pub image_timeout_secs: u64,
    pub moderation: bool,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            api_key: None,
            chat_model: "gpt-4o".into(),
            image_model: "dall-e-3".into(),
            embedding_model: "text-embedding-3-small".into(),
            embedding_dim: 1536,
            chat_timeout_secs: 60,
            image_timeout_secs: 120,
            moderation: true,
        }
    }
}

impl HttpConfig {
    /// Overrides fields from `FIELDWORK_API_BASE`, `FIELDWORK_API_KEY`,
    /// `FIELDWORK_CHAT_MODEL`, `FIELDWORK_IMAGE_MODEL` and
    /// `FIELDWORK_EMBEDDING_MODEL`.
    pub fn apply_env(mut self) -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        if let Some(v) = var("FIELDWORK_API_BASE") {
            self.base_url = v;
        }
        if let Some(v) = var("FIELDWORK_API_KEY") {
            self.api_key = Some(v);
        }
        if let Some(v) = var("FIELDWORK_CHAT_MODEL") {
            self.chat_model = v;
        }
        if let Some(v) = var("FIELDWORK_IMAGE_MODEL") {
            self.image_model = v;
        }
        if let Some(v) = var("FIELDWORK_EMBEDDING_MODEL") {
            self.embedding_model = v;
        }
        self
    }
}

/// Blocking client; call it from a plain thread or `spawn_blocking`, never
/// directly on an async executor.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| ProviderError::Unavailable(format!("building HTTP client: {e}")))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn post(&self, path: &str, body: &Value, timeout: Duration) -> Result<Value> {
        let url = format!("{}/{}", self.config.base_url.trim_end_matches('/'), path);
        let mut rb = self.client.post(&url).timeout(timeout).json(body);
        if let Some(key) = &self.config.api_key {
            rb = rb.bearer_auth(key);
        }
        let resp = rb.send().map_err(|e| classify(e, timeout))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| classify(e, timeout))?;
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(ProviderError::Unavailable(format!("{url} returned {status}")));
        }
        if !status.is_success() {
            return Err(ProviderError::InvalidRequest(format!("{url} returned {status}: {}", truncate(&text, 200))));
        }
        serde_json::from_str(&text).map_err(|e| ProviderError::MalformedResponse(format!("{url}: {e}")))
    }
}

fn classify(e: reqwest::Error, timeout: Duration) -> ProviderError {
    if e.is_timeout() {
        ProviderError::Timeout(timeout)
    } else {
        ProviderError::Unavailable(e.to_string())
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn malformed(what: &str) -> ProviderError {
    ProviderError::MalformedResponse(format!("missing {what}"))
}

impl Backend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn chat(&self, req: &ChatRequest) -> Result<Completion> {
        let mut body = json!({
            "model": self.config.chat_model,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.user},
            ],
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
        });
        if let Some(seed) = req.seed {
            body["seed"] = json!(seed);
        }
        let v = self.post("chat/completions", &body, Duration::from_secs(self.config.chat_timeout_secs))?;
        let text = v["choices"][0]["message"]["content"].as_str().ok_or_else(|| malformed("choices[0].message.content"))?;
        let units = v["usage"]["total_tokens"]
            .as_u64()
            .unwrap_or_else(|| estimate_units(&[&req.system, &req.user, text]));
        Ok(Completion { text: text.to_string(), units })
    }

    fn image(&self, req: &ImageRequest) -> Result<Vec<u8>> {
        let body = json!({
            "model": self.config.image_model,
            "prompt": req.prompt,
            "n": 1,
            "size": "1024x1024",
            "response_format": "b64_json",
        });
        let v = self.post("images/generations", &body, Duration::from_secs(self.config.image_timeout_secs))?;
        let b64 = v["data"][0]["b64_json"].as_str().ok_or_else(|| malformed("data[0].b64_json"))?;
        let raw = base64::engine::general_purpose::STANDARD
            .decode(b64)
            .map_err(|e| ProviderError::MalformedResponse(format!("image payload: {e}")))?;
        // downsample to the requested canvas with nearest-neighbour so pixels stay crisp
        let img = image::load_from_memory(&raw).map_err(|e| ProviderError::MalformedResponse(format!("image decode: {e}")))?;
        let small = img.resize_exact(req.width, req.height, image::imageops::FilterType::Nearest);
        let mut out = std::io::Cursor::new(Vec::new());
        small
            .write_to(&mut out, image::ImageFormat::Png)
            .map_err(|e| ProviderError::MalformedResponse(format!("image encode: {e}")))?;
        Ok(out.into_inner())
    }

    fn moderation(&self, text: &str) -> Result<Option<Vec<String>>> {
        if !self.config.moderation {
            return Ok(None);
        }
        let v = self.post("moderations", &json!({ "input": text }), Duration::from_secs(self.config.chat_timeout_secs))?;
        let cats = v["results"][0]["categories"].as_object().ok_or_else(|| malformed("results[0].categories"))?;
        let mut flagged: Vec<String> = cats.iter().filter(|(_, f)| f.as_bool() == Some(true)).map(|(k, _)| k.clone()).collect();
        flagged.sort();
        Ok(Some(flagged))
    }
}

/// Remote embeddings through the same endpoint family.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    backend: HttpBackend,
}

impl HttpEmbedder {
    pub fn new(backend: HttpBackend) -> Self {
        Self { backend }
    }
}

impl Embedder for HttpEmbedder {
    fn name(&self) -> String {
        format!("remote:{}", self.backend.config.embedding_model)
    }

    fn dim(&self) -> usize {
        self.backend.config.embedding_dim
    }

    fn embed_raw(&self, text: &str) -> crate::corpus::Result<Vec<f64>> {
        let body = json!({ "model": self.backend.config.embedding_model, "input": text });
        let v = self
            .backend
            .post("embeddings", &body, Duration::from_secs(self.backend.config.chat_timeout_secs))
            .map_err(|e| CorpusError::ProviderUnavailable(e.to_string()))?;
        v["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| CorpusError::ProviderUnavailable("response missing data[0].embedding".into()))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| CorpusError::ProviderUnavailable("non-numeric embedding value".into())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::io::{Read, Write};
    use std::net::TcpListener;

    use super::*;

    /// One-shot HTTP server answering a single request with `body`.
    fn serve_once(status: &str, body: &'static str) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let status = status.to_string();
        std::thread::spawn(move || {
            if let Ok((mut s, _)) = listener.accept() {
                let mut buf = [0u8; 8192];
                let _ = s.read(&mut buf);
                let resp = format!(
                    "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = s.write_all(resp.as_bytes());
            }
        });
        format!("http://{addr}")
    }

    fn backend(base_url: String) -> HttpBackend {
        HttpBackend::new(HttpConfig { base_url, chat_timeout_secs: 1, ..Default::default() }).unwrap()
    }

    fn req() -> ChatRequest {
        ChatRequest { system: "s".into(), user: "u".into(), max_tokens: 5, temperature: 0.0, seed: Some(1), template: None }
    }

    #[test]
    fn parses_chat_completion() {
        let url = serve_once("200 OK", r#"{"choices":[{"message":{"content":"hello"}}],"usage":{"total_tokens":42}}"#);
        let out = backend(url).chat(&req()).unwrap();
        assert_eq!(out, Completion { text: "hello".into(), units: 42 });
    }

    #[test]
    fn server_error_is_unavailable() {
        let url = serve_once("503 Service Unavailable", "{}");
        assert!(matches!(backend(url).chat(&req()), Err(ProviderError::Unavailable(_))));
    }

    #[test]
    fn missing_content_is_malformed() {
        let url = serve_once("200 OK", r#"{"choices":[]}"#);
        assert!(matches!(backend(url).chat(&req()), Err(ProviderError::MalformedResponse(_))));
    }

    #[test]
    fn silent_server_times_out() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hold = std::thread::spawn(move || {
            let conn = listener.accept();
            std::thread::sleep(Duration::from_secs(3));
            drop(conn);
        });
        let err = backend(url).chat(&req()).unwrap_err();
        assert_eq!(err, ProviderError::Timeout(Duration::from_secs(1)));
        hold.join().unwrap();
    }

    #[test]
    fn refused_connection_is_unavailable() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        assert!(matches!(backend(format!("http://127.0.0.1:{port}")).chat(&req()), Err(ProviderError::Unavailable(_))));
    }

    #[test]
    fn moderation_collects_flagged_categories() {
        let url = serve_once("200 OK", r#"{"results":[{"categories":{"hate":true,"violence":false,"harassment":true}}]}"#);
        assert_eq!(backend(url).moderation("x").unwrap(), Some(vec!["harassment".into(), "hate".into()]));
    }
}
