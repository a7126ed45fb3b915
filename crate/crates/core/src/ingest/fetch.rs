use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use super::manifest::{write_manifest, FetchStatus, ManifestEntry, KEY_PLACEHOLDER};
use crate::{Error, Result};

pub const API_KEY_ENV: &str = "STREETVIEW_API_KEY";

pub fn api_key_from_env() -> Result<String> {
    match std::env::var(API_KEY_ENV) {
        Ok(k) if !k.trim().is_empty() => Ok(k),
        _ => Err(Error::MissingApiKey),
    }
}

#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub api_key: String,
    pub max_concurrent: usize,
    /// Extra attempts after the first one.
    pub retries: u32,
    /// Delay before retry `k` is `backoff * 2^k`.
    pub backoff: Duration,
    pub timeout: Duration,
    /// When set, the manifest is rewritten here every `checkpoint_every`
    /// completions and at the end.
    pub manifest_path: Option<PathBuf>,
    pub checkpoint_every: usize,
}

impl FetchOptions {
    pub fn new(api_key: impl Into<String>) -> Self {
        Self {
            api_key: api_key.into(),
            max_concurrent: 8,
            retries: 3,
            backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(30),
            manifest_path: None,
            checkpoint_every: 100,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchSummary {
    /// Entries already fetched before this run.
    pub skipped: usize,
    pub fetched: usize,
    pub failed: usize,
    /// `(point_id, reason)`; reasons never contain the request URL.
    pub failures: Vec<(String, String)>,
}

fn save(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    write_manifest(std::io::BufWriter::new(file), entries)?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn attempt(agent: &ureq::Agent, url: &str) -> std::result::Result<Vec<u8>, (bool, String)> {
    match agent.get(url).call() {
        Ok(mut resp) => {
            let status = resp.status().as_u16();
            if status == 200 {
                resp.body_mut()
                    .read_to_vec()
                    .map_err(|_| (true, "truncated response body".to_string()))
            } else {
                let retry = status == 429 || status >= 500;
                Err((retry, format!("HTTP {status}")))
            }
        }
        Err(_) => Err((true, "transport error".into())),
    }
}

fn fetch_one(
    agent: &ureq::Agent,
    url: &str,
    target: &Path,
    opts: &FetchOptions,
) -> std::result::Result<(), String> {
    let mut last = String::new();
    for k in 0..=opts.retries {
        if k > 0 {
            std::thread::sleep(opts.backoff * 2u32.saturating_pow(k - 1));
        }
        match attempt(agent, url) {
            Ok(bytes) => {
                return fs::write(target, bytes).map_err(|e| format!("write failed: {}", e.kind()));
            }
            Err((retry, reason)) => {
                last = reason;
                if !retry {
                    break;
                }
            }
        }
    }
    Err(last)
}

/// Downloads every entry not yet `fetched` into `out_dir`, at most
/// `max_concurrent` requests at a time. Failures are recorded on the entry
/// and never abort the batch. Status updates happen on the calling thread
/// only.
pub fn fetch_images(
    entries: &mut [ManifestEntry],
    out_dir: &Path,
    opts: &FetchOptions,
) -> Result<FetchSummary> {
    if opts.api_key.trim().is_empty() {
        return Err(Error::MissingApiKey);
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let jobs: Vec<(usize, String, PathBuf)> = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.status != FetchStatus::Fetched)
        .map(|(i, e)| {
            (
                i,
                e.request_url.replace(KEY_PLACEHOLDER, &opts.api_key),
                out_dir.join(e.image_file_name()),
            )
        })
        .collect();
    let mut summary = FetchSummary {
        skipped: entries.len() - jobs.len(),
        ..Default::default()
    };

    let config = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(opts.timeout))
        .build();
    let agent: ureq::Agent = config.into();
    let next = AtomicUsize::new(0);
    let workers = opts.max_concurrent.max(1).min(jobs.len().max(1));
    let (tx, rx) = mpsc::channel::<(usize, std::result::Result<(), String>)>();

    let mut outcome: Result<()> = Ok(());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, next, agent) = (&jobs, &next, &agent);
            scope.spawn(move || loop {
                let j = next.fetch_add(1, Ordering::SeqCst);
                let Some((idx, url, target)) = jobs.get(j) else {
                    break;
                };
                if tx.send((*idx, fetch_one(agent, url, target, opts))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (done, (idx, result)) in rx.into_iter().enumerate() {
            match result {
                Ok(()) => {
                    entries[idx].status = FetchStatus::Fetched;
                    summary.fetched += 1;
                }
                Err(reason) => {
                    entries[idx].status = FetchStatus::Failed;
                    summary.failed += 1;
                    summary.failures.push((entries[idx].point_id.clone(), reason));
                }
            }
            if let Some(path) = &opts.manifest_path {
                if opts.checkpoint_every > 0 && (done + 1) % opts.checkpoint_every == 0 {
                    if let Err(e) = save(path, entries) {
                        outcome = Err(e);
                    }
                }
            }
        }
    });
    outcome?;
    if let Some(path) = &opts.manifest_path {
        save(path, entries)?;
    }
    summary.failures.sort();
    Ok(summary)
}
