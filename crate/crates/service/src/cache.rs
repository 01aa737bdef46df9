//! A TTL cache keyed by canonical request strings.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

#[derive(Debug)]
pub struct TtlCache<V> {
    entries: Mutex<HashMap<String, (V, Instant)>>,
}

impl<V> Default for TtlCache<V> {
    fn default() -> Self {
        TtlCache {
            entries: Mutex::new(HashMap::new()),
        }
    }
}

impl<V: Clone> TtlCache<V> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Expired entries are misses and are evicted on lookup.
    pub fn get(&self, key: &str) -> Option<V> {
        let mut entries = self.entries.lock().expect("cache lock");
        match entries.get(key) {
            Some((v, expires)) if Instant::now() < *expires => Some(v.clone()),
            Some(_) => {
                entries.remove(key);
                None
            }
            None => None,
        }
    }

    /// Stores a value for `ttl`; a zero TTL stores nothing.
    pub fn put(&self, key: impl Into<String>, value: V, ttl: Duration) -> bool {
        if ttl.is_zero() {
            return false;
        }
        let expires = Instant::now() + ttl;
        self.entries
            .lock()
            .expect("cache lock")
            .insert(key.into(), (value, expires));
        true
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hit_within_ttl() {
        let c = TtlCache::new();
        assert!(c.put("k", 1, Duration::from_secs(60)));
        assert_eq!(c.get("k"), Some(1));
        assert_eq!(c.get("other"), None);
    }

    #[test]
    fn miss_after_expiry() {
        let c = TtlCache::new();
        c.put("k", 1, Duration::from_millis(20));
        std::thread::sleep(Duration::from_millis(40));
        assert_eq!(c.get("k"), None);
        assert!(c.is_empty());
    }

    #[test]
    fn zero_ttl_bypasses_storage() {
        let c = TtlCache::new();
        assert!(!c.put("k", 1, Duration::ZERO));
        assert_eq!(c.get("k"), None);
    }
}
