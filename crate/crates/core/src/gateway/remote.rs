//! Minimal JSON-over-HTTP client shared by the generator and designer
//! gateways: bounded in-flight requests, per-request timeout, retry loop.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

/// Counting semaphore bounding concurrent remote calls.
#[derive(Clone)]
pub struct Inflight {
    inner: Arc<(Mutex<usize>, Condvar)>,
    limit: usize,
}

impl Inflight {
    pub fn new(limit: usize) -> Self {
        Self { inner: Arc::new((Mutex::new(0), Condvar::new())), limit: limit.max(1) }
    }

    fn acquire(&self) -> InflightGuard {
        let (lock, cv) = &*self.inner;
        let mut count = lock.lock().unwrap();
        while *count >= self.limit {
            count = cv.wait(count).unwrap();
        }
        *count += 1;
        InflightGuard { inner: self.inner.clone() }
    }
}

pub struct InflightGuard {
    inner: Arc<(Mutex<usize>, Condvar)>,
}

impl Drop for InflightGuard {
    fn drop(&mut self) {
        let (lock, cv) = &*self.inner;
        *lock.lock().unwrap() -= 1;
        cv.notify_one();
    }
}

pub struct JsonClient {
    agent: ureq::Agent,
    retries: u32,
    inflight: Inflight,
}

/// Response body ceiling; covers base64 payloads of large upscaled atlases.
const BODY_LIMIT: u64 = 256 * 1024 * 1024;

impl JsonClient {
    pub fn new(timeout_s: u64, retries: u32, max_inflight: usize) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(timeout_s.max(1))))
            .build();
        Self {
            agent: config.new_agent(),
            retries,
            inflight: Inflight::new(max_inflight),
        }
    }

    /// POST a JSON body, retrying transport failures. Returns the parsed
    /// JSON response or the last error text.
    pub fn post_json(
        &self,
        url: &str,
        body: &serde_json::Value,
    ) -> std::result::Result<serde_json::Value, String> {
        let _guard = self.inflight.acquire();
        let mut last_err = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                log::warn!("retrying {url} (attempt {})", attempt + 1);
            }
            match self.agent.post(url).send_json(body) {
                Ok(mut resp) => {
                    match resp
                        .body_mut()
                        .with_config()
                        .limit(BODY_LIMIT)
                        .read_json::<serde_json::Value>()
                    {
                        Ok(v) => return Ok(v),
                        Err(e) => last_err = format!("invalid JSON response: {e}"),
                    }
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(last_err)
    }
}

/// Extract a required string field from a JSON response.
pub fn json_str<'a>(
    value: &'a serde_json::Value,
    field: &str,
) -> std::result::Result<&'a str, String> {
    value
        .get(field)
        .and_then(|v| v.as_str())
        .ok_or_else(|| format!("response missing `{field}` field"))
}
