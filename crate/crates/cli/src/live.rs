//! Live HTTP redirect resolver, used only behind `--allow-network`.
//!
//! Follows status-based redirects (3xx + Location) manually so every hop is
//! observed; any network failure, loop, or over-deep chain records the
//! unresolved marker. Tests use the fixture resolver instead.

use std::collections::BTreeSet;
use std::time::Duration;

use triage_core::urlintel::{Resolve, UNRESOLVED};

pub struct LiveResolver {
    agent: ureq::Agent,
}

impl LiveResolver {
    pub fn new() -> Self {
        let config = ureq::Agent::config_builder()
            .max_redirects(0)
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(10)))
            .build();
        LiveResolver {
            agent: config.into(),
        }
    }

    fn location_of(&self, url: &str) -> Result<Option<String>, ureq::Error> {
        let response = self.agent.get(url).call()?;
        let status = response.status().as_u16();
        if (300..400).contains(&status) {
            if let Some(loc) = response.headers().get("location") {
                let loc = loc.to_str().unwrap_or_default();
                if loc.is_empty() {
                    return Ok(None);
                }
                // resolve relative redirects against the current URL
                if loc.starts_with("http://") || loc.starts_with("https://") {
                    return Ok(Some(loc.to_string()));
                }
                let base = url.split('/').take(3).collect::<Vec<_>>().join("/");
                return Ok(Some(format!(
                    "{base}/{}",
                    loc.trim_start_matches('/')
                )));
            }
        }
        Ok(None)
    }
}

impl Default for LiveResolver {
    fn default() -> Self {
        Self::new()
    }
}

impl Resolve for LiveResolver {
    fn resolve_once(&mut self, url: &str, max_depth: usize) -> String {
        let mut current = url.to_string();
        let mut visited = BTreeSet::new();
        visited.insert(current.clone());
        for _ in 0..max_depth {
            match self.location_of(&current) {
                Ok(Some(next)) => {
                    if !visited.insert(next.clone()) {
                        return UNRESOLVED.to_string();
                    }
                    current = next;
                }
                Ok(None) => return current,
                Err(_) => return UNRESOLVED.to_string(),
            }
        }
        UNRESOLVED.to_string()
    }
}
