use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant, SystemTime};

use thiserror::Error;
use tokio::sync::Mutex;

use super::backend::{BackendError, WpsBackend};
use crate::wps::ProcessDescription;

/// Process descriptions fetched from the backend at one point in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub processes: Vec<ProcessDescription>,
    pub fetched_at: SystemTime,
}

impl Catalog {
    pub fn process(&self, identifier: &str) -> Option<&ProcessDescription> {
        self.processes.iter().find(|p| p.identifier == identifier)
    }
}

/// A catalog as served to one request.
#[derive(Debug, Clone)]
pub struct CatalogView {
    pub catalog: Arc<Catalog>,
    /// Set when a refresh failed and an older catalog is served instead.
    pub stale: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("backend unavailable and no catalog cached: {0}")]
pub struct BackendUnavailable(pub BackendError);

struct Snapshot {
    catalog: Arc<Catalog>,
    loaded: Instant,
}

/// TTL cache over GetCapabilities + DescribeProcess with single-flight refresh.
pub struct CatalogCache {
    ttl: Duration,
    current: RwLock<Option<Snapshot>>,
    refreshing: Mutex<()>,
}

impl CatalogCache {
    pub fn new(ttl: Duration) -> CatalogCache {
        CatalogCache {
            ttl,
            current: RwLock::new(None),
            refreshing: Mutex::new(()),
        }
    }

    fn snapshot(&self) -> Option<(Arc<Catalog>, bool)> {
        self.current
            .read()
            .expect("catalog lock")
            .as_ref()
            .map(|s| (s.catalog.clone(), s.loaded.elapsed() < self.ttl))
    }

    /// A fresh catalog if possible. While another request refreshes, callers
    /// holding an older catalog get that one instead of waiting.
    pub async fn get(&self, backend: &dyn WpsBackend) -> Result<CatalogView, BackendUnavailable> {
        let previous = match self.snapshot() {
            Some((catalog, true)) => return Ok(CatalogView { catalog, stale: false }),
            Some((catalog, false)) => Some(catalog),
            None => None,
        };
        let _guard = match (self.refreshing.try_lock(), &previous) {
            (Ok(guard), _) => guard,
            (Err(_), Some(catalog)) => {
                return Ok(CatalogView {
                    catalog: catalog.clone(),
                    stale: false,
                })
            }
            (Err(_), None) => self.refreshing.lock().await,
        };
        if let Some((catalog, true)) = self.snapshot() {
            return Ok(CatalogView { catalog, stale: false });
        }
        match refresh_catalog(backend).await {
            Ok(catalog) => {
                let catalog = Arc::new(catalog);
                *self.current.write().expect("catalog lock") = Some(Snapshot {
                    catalog: catalog.clone(),
                    loaded: Instant::now(),
                });
                Ok(CatalogView { catalog, stale: false })
            }
            Err(e) => match self.snapshot() {
                Some((catalog, _)) => {
                    tracing::warn!("catalog refresh failed, serving stale copy: {e}");
                    Ok(CatalogView { catalog, stale: true })
                }
                None => Err(BackendUnavailable(e)),
            },
        }
    }
}

/// GetCapabilities, then one DescribeProcess for every offered process.
pub async fn refresh_catalog(backend: &dyn WpsBackend) -> Result<Catalog, BackendError> {
    let caps = backend.capabilities().await?;
    let ids: Vec<String> = caps.processes.iter().map(|p| p.identifier.clone()).collect();
    let mut processes = backend.describe(&ids).await?;
    processes.sort_by_key(|p| ids.iter().position(|id| *id == p.identifier));
    Ok(Catalog {
        processes,
        fetched_at: SystemTime::now(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::topology_processes;
    use crate::wps::{ExecuteOutcome, ExecuteRequest, ProcessBrief, ServiceCapabilities};
    use async_trait::async_trait;
    use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

    #[derive(Default)]
    struct Scripted {
        down: AtomicBool,
        calls: AtomicUsize,
    }

    #[async_trait]
    impl WpsBackend for Scripted {
        async fn capabilities(&self) -> Result<ServiceCapabilities, BackendError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            tokio::time::sleep(Duration::from_millis(20)).await;
            if self.down.load(Ordering::SeqCst) {
                return Err(BackendError::Network("refused".into()));
            }
            Ok(ServiceCapabilities {
                title: "t".into(),
                provider: "p".into(),
                endpoint: "http://x/wps".into(),
                processes: topology_processes()
                    .into_iter()
                    .map(|p| ProcessBrief {
                        identifier: p.identifier,
                        title: p.title,
                    })
                    .collect(),
            })
        }

        async fn describe(&self, ids: &[String]) -> Result<Vec<ProcessDescription>, BackendError> {
            let mut all = topology_processes();
            all.retain(|p| ids.contains(&p.identifier));
            all.reverse();
            Ok(all)
        }

        async fn execute(&self, _: &ExecuteRequest) -> Result<ExecuteOutcome, BackendError> {
            unreachable!()
        }
    }

    #[tokio::test]
    async fn cold_cache_with_backend_down_is_unavailable() {
        let backend = Scripted::default();
        backend.down.store(true, Ordering::SeqCst);
        let cache = CatalogCache::new(Duration::from_secs(60));
        assert!(cache.get(&backend).await.is_err());
    }

    #[tokio::test]
    async fn warm_cache_serves_stale_copy() {
        let backend = Scripted::default();
        let cache = CatalogCache::new(Duration::from_millis(1));
        let first = cache.get(&backend).await.unwrap();
        assert_eq!(first.catalog.processes, topology_processes());
        backend.down.store(true, Ordering::SeqCst);
        tokio::time::sleep(Duration::from_millis(5)).await;
        let view = cache.get(&backend).await.unwrap();
        assert!(view.stale);
        assert_eq!(view.catalog.processes.len(), 3);
    }

    #[tokio::test]
    async fn concurrent_cold_requests_refresh_once() {
        let backend = Arc::new(Scripted::default());
        let cache = Arc::new(CatalogCache::new(Duration::from_secs(60)));
        let tasks: Vec<_> = (0..20)
            .map(|_| {
                let (b, c) = (backend.clone(), cache.clone());
                tokio::spawn(async move { c.get(b.as_ref()).await.unwrap().catalog.processes.len() })
            })
            .collect();
        for t in tasks {
            assert_eq!(t.await.unwrap(), 3);
        }
        assert_eq!(backend.calls.load(Ordering::SeqCst), 1);
    }
}
