//! File formats, run manifests and subcommand drivers for the `rbf-lab` binary.

pub mod commands;
pub mod config;
pub mod io;
pub mod manifest;
pub mod svg;

use std::path::PathBuf;

pub use config::RunConfig;
pub use manifest::Manifest;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] rbf_advect::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

impl LabError {
    pub fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| LabError::Io { path, source }
    }

    /// 2 configuration, 3 divergence, 4 numerical failure, 1 file system.
    pub fn exit_code(&self) -> i32 {
        use rbf_advect::Error as E;
        match self {
            LabError::Config(_) | LabError::Json { .. } => 2,
            LabError::Core(E::Config(_) | E::TooLarge { .. } | E::ZeroVelocity { .. }) => 2,
            LabError::Core(E::Diverged { .. }) => 3,
            LabError::Core(_) => 4,
            LabError::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

/// Runs `f` over `items` on up to `jobs` threads; results keep the input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut out: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let slots = std::sync::Mutex::new(&mut out);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    out.into_iter().map(|r| r.unwrap()).collect()
}
