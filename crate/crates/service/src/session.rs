use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use bpexplain_core::{BpConfig, BpResult, Mrf};

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);

/// A loaded model and its full-graph BP result. Both are immutable.
pub struct Session {
    pub id: String,
    pub mrf: Mrf,
    pub full: BpResult,
    /// Settings used for the full run, reused for subgraph evaluations.
    pub bp: BpConfig,
    /// Held while an explain request runs, so they execute one at a time.
    pub explain_lock: tokio::sync::Mutex<()>,
    last_used: Mutex<Instant>,
}

impl Session {
    fn touch(&self, now: Instant) {
        *self.last_used.lock().expect("session clock poisoned") = now;
    }

    fn idle_since(&self) -> Instant {
        *self.last_used.lock().expect("session clock poisoned")
    }
}

/// In-memory session table with idle eviction.
pub struct SessionStore {
    sessions: Mutex<HashMap<String, Arc<Session>>>,
    idle_timeout: Duration,
}

impl SessionStore {
    pub fn new(idle_timeout: Duration) -> Self {
        Self {
            sessions: Mutex::new(HashMap::new()),
            idle_timeout,
        }
    }

    pub fn insert(&self, mrf: Mrf, full: BpResult, bp: BpConfig) -> Arc<Session> {
        let session = Arc::new(Session {
            id: uuid::Uuid::new_v4().simple().to_string(),
            mrf,
            full,
            bp,
            explain_lock: tokio::sync::Mutex::new(()),
            last_used: Mutex::new(Instant::now()),
        });
        self.table().insert(session.id.clone(), session.clone());
        session
    }

    /// The live session with `id`, marking it used. Expired sessions are
    /// dropped here even if the sweeper has not run yet.
    pub fn get(&self, id: &str) -> Option<Arc<Session>> {
        let now = Instant::now();
        let mut table = self.table();
        let session = table.get(id)?.clone();
        if now.duration_since(session.idle_since()) > self.idle_timeout {
            table.remove(id);
            return None;
        }
        session.touch(now);
        Some(session)
    }

    /// Removes sessions idle for longer than the timeout as of `now`;
    /// returns how many were removed.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let mut table = self.table();
        let before = table.len();
        table.retain(|_, s| now.saturating_duration_since(s.idle_since()) <= self.idle_timeout);
        before - table.len()
    }

    pub fn len(&self) -> usize {
        self.table().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idle_timeout(&self) -> Duration {
        self.idle_timeout
    }

    fn table(&self) -> std::sync::MutexGuard<'_, HashMap<String, Arc<Session>>> {
        self.sessions.lock().expect("session table poisoned")
    }
}
