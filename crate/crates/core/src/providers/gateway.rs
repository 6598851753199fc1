use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{
    moderate, Backend, ChatRequest, Completion, Denylist, FailurePolicy, GeneratedImage, ImageRequest, ModerationVerdict,
    PriceTable, Result, UsageKind, UsageLedger,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Extra attempts after the first one.
    pub retries: u32,
    /// Backoff before retry `n` is `base_backoff_ms * 2^n`.
    pub base_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { retries: 2, base_backoff_ms: 500 }
    }
}

impl RetryPolicy {
    pub fn no_backoff(retries: u32) -> Self {
        Self { retries, base_backoff_ms: 0 }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.base_backoff_ms.saturating_mul(1u64 << attempt.min(16)))
    }
}

/// Validating, retrying front of a [`Backend`]. Every successful call is
/// also priced into a gateway-wide usage ledger.
pub struct Gateway {
    backend: Arc<dyn Backend>,
    retry: RetryPolicy,
    prices: PriceTable,
    moderation_policy: FailurePolicy,
    ledger: Mutex<UsageLedger>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("backend", &self.backend.name()).field("retry", &self.retry).finish()
    }
}

impl Gateway {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        Self {
            backend,
            retry: RetryPolicy::default(),
            prices: PriceTable::default(),
            moderation_policy: FailurePolicy::default(),
            ledger: Mutex::new(UsageLedger::new()),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_prices(mut self, prices: PriceTable) -> Self {
        self.prices = prices;
        self
    }

    pub fn with_moderation_policy(mut self, policy: FailurePolicy) -> Self {
        self.moderation_policy = policy;
        self
    }

    pub fn backend(&self) -> &dyn Backend {
        self.backend.as_ref()
    }

    pub fn prices(&self) -> &PriceTable {
        &self.prices
    }

    pub fn usage(&self) -> UsageLedger {
        self.ledger.lock().expect("ledger lock poisoned").clone()
    }

    fn with_retries<T>(&self, mut call: impl FnMut() -> Result<T>) -> Result<T> {
        let mut attempt = 0;
        loop {
            match call() {
                Err(e) if e.is_transient() && attempt < self.retry.retries => {
                    let wait = self.retry.backoff(attempt);
                    tracing::debug!(%e, attempt, ?wait, "retrying provider call");
                    if !wait.is_zero() {
                        std::thread::sleep(wait);
                    }
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn record(&self, kind: UsageKind, units: u64) {
        let cost = units as f64 * self.prices.unit_price(kind);
        let mut ledger = self.ledger.lock().expect("ledger lock poisoned");
        // price table values are validated non-negative, so this cannot fail
        let _ = ledger.push_cost("runtime", kind, units, cost);
    }

    pub fn chat_complete(&self, req: &ChatRequest) -> Result<Completion> {
        req.validate()?;
        let out = self.with_retries(|| self.backend.chat(req))?;
        if out.text.trim().is_empty() {
            return Err(super::ProviderError::MalformedResponse("empty completion".into()));
        }
        self.record(UsageKind::Text, out.units);
        Ok(out)
    }

    pub fn generate_image(&self, req: &ImageRequest) -> Result<GeneratedImage> {
        req.validate()?;
        let png = self.with_retries(|| self.backend.image(req))?;
        self.record(UsageKind::Image, 1);
        Ok(GeneratedImage::from_png(png, req.width, req.height))
    }

    pub fn moderate(&self, text: &str, denylist: &Denylist) -> ModerationVerdict {
        moderate(text, denylist, Some(self.backend.as_ref()), self.moderation_policy)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicU32, Ordering};

    use super::*;
    use crate::providers::{MockBackend, ProviderError};

    struct Flaky {
        calls: AtomicU32,
        fail_first: u32,
    }

    impl Backend for Flaky {
        fn name(&self) -> &str {
            "flaky"
        }
        fn chat(&self, _: &ChatRequest) -> Result<Completion> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                Err(ProviderError::Unavailable("connection refused".into()))
            } else {
                Ok(Completion { text: "ok".into(), units: 10 })
            }
        }
        fn image(&self, _: &ImageRequest) -> Result<Vec<u8>> {
            Err(ProviderError::Timeout(Duration::from_secs(120)))
        }
        fn moderation(&self, _: &str) -> Result<Option<Vec<String>>> {
            Ok(None)
        }
    }

    fn req() -> ChatRequest {
        ChatRequest { system: "s".into(), user: "u".into(), max_tokens: 5, temperature: 0.0, seed: None, template: None }
    }

    #[test]
    fn down_backend_fails_after_retry_budget() {
        let flaky = Arc::new(Flaky { calls: AtomicU32::new(0), fail_first: u32::MAX });
        let gw = Gateway::new(flaky.clone()).with_retry(RetryPolicy::no_backoff(2));
        assert!(matches!(gw.chat_complete(&req()), Err(ProviderError::Unavailable(_))));
        assert_eq!(flaky.calls.load(Ordering::SeqCst), 3);
        assert!(gw.usage().is_empty());
    }

    #[test]
    fn transient_failure_recovers_within_budget() {
        let flaky = Arc::new(Flaky { calls: AtomicU32::new(0), fail_first: 2 });
        let gw = Gateway::new(flaky).with_retry(RetryPolicy::no_backoff(2));
        assert_eq!(gw.chat_complete(&req()).unwrap().text, "ok");
        assert_eq!(gw.usage().entries().len(), 1);
    }

    #[test]
    fn image_timeout_surfaces() {
        let gw = Gateway::new(Arc::new(Flaky { calls: AtomicU32::new(0), fail_first: 0 })).with_retry(RetryPolicy::no_backoff(1));
        let err = gw.generate_image(&ImageRequest::canvas("pixel-art: x")).unwrap_err();
        assert_eq!(err, ProviderError::Timeout(Duration::from_secs(120)));
    }

    #[test]
    fn invalid_requests_rejected_before_backend() {
        let gw = Gateway::new(Arc::new(MockBackend::new()));
        assert_eq!(gw.generate_image(&ImageRequest::canvas("no prefix")), Err(ProviderError::InvalidImagePrompt));
        let mut bad = req();
        bad.system.clear();
        assert!(matches!(gw.chat_complete(&bad), Err(ProviderError::InvalidRequest(_))));
    }

    #[test]
    fn mock_images_are_canvas_sized_and_deterministic() {
        let gw = Gateway::new(Arc::new(MockBackend::new()));
        let a = gw.generate_image(&ImageRequest::canvas("pixel-art: beach")).unwrap();
        let b = gw.generate_image(&ImageRequest::canvas("pixel-art: beach")).unwrap();
        let c = gw.generate_image(&ImageRequest::canvas("pixel-art: canoe")).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.image.digest, c.image.digest);
        assert_eq!((a.image.width, a.image.height), (320, 240));
    }
}
