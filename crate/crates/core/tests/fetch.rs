use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use streetcrime::geo::{GeoPoint, SamplePoint};
use streetcrime::ingest::{
    build_image_manifest, fetch_images, read_manifest, FetchOptions, FetchStatus, ManifestEntry,
};
use streetcrime::Error;

/// Minimal HTTP server: logs request targets, tracks peak concurrency and
/// answers 404 for any location listed in `failing`.
struct MockServer {
    base: String,
    log: Arc<Mutex<Vec<String>>>,
    peak: Arc<AtomicUsize>,
}

fn start(failing: HashSet<String>, delay: Duration) -> MockServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/streetview", listener.local_addr().unwrap());
    let log = Arc::new(Mutex::new(Vec::new()));
    let peak = Arc::new(AtomicUsize::new(0));
    let active = Arc::new(AtomicUsize::new(0));
    let failing = Arc::new(failing);
    {
        let (log, peak) = (log.clone(), peak.clone());
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let mut stream = stream.unwrap();
                let (log, peak, active, failing) =
                    (log.clone(), peak.clone(), active.clone(), failing.clone());
                std::thread::spawn(move || {
                    let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    let mut reader = BufReader::new(stream.try_clone().unwrap());
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    loop {
                        let mut h = String::new();
                        if reader.read_line(&mut h).unwrap() == 0 || h == "\r\n" {
                            break;
                        }
                    }
                    let target = line.split_whitespace().nth(1).unwrap_or("").to_string();
                    log.lock().unwrap().push(target.clone());
                    std::thread::sleep(delay);
                    let location = target
                        .split('&')
                        .find_map(|kv| kv.strip_prefix("location="))
                        .unwrap_or("")
                        .to_string();
                    let (status, body) = if failing.contains(&location) {
                        ("404 Not Found", "")
                    } else {
                        ("200 OK", "JPEGDATA")
                    };
                    active.fetch_sub(1, Ordering::SeqCst);
                    let _ = write!(
                        stream,
                        "HTTP/1.1 {status}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                        body.len()
                    );
                });
            }
        });
    }
    MockServer { base, log, peak }
}

fn points(n: usize) -> Vec<SamplePoint> {
    (0..n)
        .map(|i| SamplePoint {
            point_id: format!("p{i:04}"),
            location: GeoPoint::new(-73.9 + i as f64 * 1e-4, 40.7).unwrap(),
            source_polyline: "r".into(),
            chainage_m: 0.0,
            community_id: Some("c".into()),
        })
        .collect()
}

fn location_of(e: &ManifestEntry) -> String {
    format!("{},{}", e.location.lat(), e.location.lon())
}

fn opts(max_concurrent: usize) -> FetchOptions {
    FetchOptions {
        max_concurrent,
        retries: 1,
        backoff: Duration::from_millis(1),
        ..FetchOptions::new("secret-key")
    }
}

#[test]
fn all_success() {
    let server = start(HashSet::new(), Duration::from_millis(1));
    let mut m = build_image_manifest(&points(20), (600, 300), &server.base);
    let dir = tempfile::tempdir().unwrap();
    let s = fetch_images(&mut m, dir.path(), &opts(4)).unwrap();
    assert_eq!((s.fetched, s.failed, s.skipped), (20, 0, 0));
    assert!(m.iter().all(|e| e.status == FetchStatus::Fetched));
    let bytes = std::fs::read(dir.path().join(m[3].image_file_name())).unwrap();
    assert_eq!(bytes, b"JPEGDATA");
    let log = server.log.lock().unwrap();
    assert!(log.iter().all(|t| t.contains("key=secret-key") && t.contains("size=600x300")));
}

#[test]
fn partial_failures_then_resume_requests_only_unfinished() {
    let pts = points(100);
    let base_manifest = build_image_manifest(&pts, (600, 300), "http://unused");
    // 4 of 100 locations fail, mirroring a retrieval shortfall.
    let failing: HashSet<String> = base_manifest.iter().step_by(25).map(location_of).collect();
    let server = start(failing.clone(), Duration::from_millis(1));
    let mut m = build_image_manifest(&pts, (600, 300), &server.base);
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = dir.path().join("manifest.jsonl");
    let o = FetchOptions {
        manifest_path: Some(manifest_path.clone()),
        checkpoint_every: 10,
        ..opts(8)
    };
    let s = fetch_images(&mut m, &dir.path().join("img"), &o).unwrap();
    assert_eq!((s.fetched, s.failed), (96, 4));
    for (id, reason) in &s.failures {
        assert_eq!(reason, "HTTP 404");
        assert!(!reason.contains("secret-key"), "{id}");
    }
    let saved = read_manifest(BufReader::new(std::fs::File::open(&manifest_path).unwrap())).unwrap();
    assert_eq!(saved, m);

    // 404 is not retried: one request per point so far.
    let first_run = server.log.lock().unwrap().len();
    assert_eq!(first_run, 100);

    let mut resumed = saved;
    let s2 = fetch_images(&mut resumed, &dir.path().join("img"), &o).unwrap();
    assert_eq!((s2.skipped, s2.failed, s2.fetched), (96, 4, 0));
    let log = server.log.lock().unwrap();
    let rerequested: HashSet<String> = log[first_run..]
        .iter()
        .map(|t| t.split('&').find_map(|kv| kv.strip_prefix("location=")).unwrap().to_string())
        .collect();
    assert_eq!(rerequested, failing);
}

#[test]
fn concurrency_is_bounded() {
    let server = start(HashSet::new(), Duration::from_millis(25));
    let mut m = build_image_manifest(&points(40), (600, 300), &server.base);
    let dir = tempfile::tempdir().unwrap();
    fetch_images(&mut m, dir.path(), &opts(3)).unwrap();
    let peak = server.peak.load(Ordering::SeqCst);
    assert!(peak <= 3, "peak {peak}");
    assert!(peak >= 2, "workers did not overlap: {peak}");
}

#[test]
fn missing_key_fails_before_any_request() {
    let server = start(HashSet::new(), Duration::ZERO);
    let mut m = build_image_manifest(&points(3), (600, 300), &server.base);
    let dir = tempfile::tempdir().unwrap();
    let err = fetch_images(&mut m, dir.path(), &FetchOptions::new("  ")).unwrap_err();
    assert!(matches!(err, Error::MissingApiKey));
    std::thread::sleep(Duration::from_millis(20));
    assert!(server.log.lock().unwrap().is_empty());
}
