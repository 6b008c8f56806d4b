//! Fixed-size on-disk shards of encoded records and a sequential loader that
//! keeps at most the current shard plus one prefetched shard in memory.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{sync_channel, Receiver};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use crate::embed::EncodedSentence;
use crate::error::{Error, Result};
use crate::nn::checkpoint::sha256_hex;
use crate::train::sampling::class_histogram;

pub const DEFAULT_SHARD_SIZE: usize = 200_000;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    /// File name relative to the manifest's directory.
    pub file: String,
    pub count: usize,
    pub sha256: String,
}

/// Provenance recorded alongside the shards.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardMeta {
    pub num_classes: usize,
    pub vocab_hash: String,
    pub config_hash: String,
    pub split_seed: u64,
    #[serde(default)]
    pub undersampled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardManifest {
    pub shard_size: usize,
    pub total: usize,
    pub class_histogram: Vec<usize>,
    #[serde(flatten)]
    pub meta: ShardMeta,
    pub shards: Vec<ShardEntry>,
    #[serde(skip)]
    dir: PathBuf,
}

impl ShardManifest {
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn shard_path(&self, i: usize) -> PathBuf {
        self.dir.join(&self.shards[i].file)
    }

    pub fn counts(&self) -> Vec<usize> {
        self.shards.iter().map(|s| s.count).collect()
    }

    /// True when every class has the same number of records.
    pub fn is_balanced(&self) -> bool {
        self.class_histogram.windows(2).all(|w| w[0] == w[1])
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the serialized manifest.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: ShardManifest = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            line: source.line(),
            source,
        })?;
        if m.counts().iter().sum::<usize>() != m.total {
            return Err(Error::Data(format!("{}: shard counts do not sum to total", path.display())));
        }
        m.dir = path.parent().map(Path::to_owned).unwrap_or_default();
        Ok(m)
    }

    /// Opens a streaming loader over the shards in order.
    pub fn stream(&self) -> ShardStream {
        ShardStream::open(self, ShardTracker::default())
    }

    pub fn stream_tracked(&self, tracker: ShardTracker) -> ShardStream {
        ShardStream::open(self, tracker)
    }

    /// Every record, in order.
    pub fn load_all(&self) -> Result<Vec<EncodedSentence>> {
        let mut out = Vec::with_capacity(self.total);
        for shard in self.stream() {
            out.extend(shard?.records);
        }
        Ok(out)
    }
}

fn encode_shard(records: &[EncodedSentence]) -> Vec<u8> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("record serializes");
        buf.push(b'\n');
    }
    buf
}

/// Writes `records` as `shard-NNNNN.jsonl` files plus `manifest.json` into `out_dir`.
pub fn write_shards(
    records: &[EncodedSentence],
    shard_size: usize,
    out_dir: &Path,
    meta: ShardMeta,
) -> Result<ShardManifest> {
    if shard_size == 0 {
        return Err(Error::Config("shard size must be at least 1".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut shards = Vec::new();
    for (i, chunk) in records.chunks(shard_size).enumerate() {
        let file = format!("shard-{i:05}.jsonl");
        let path = out_dir.join(&file);
        let bytes = encode_shard(chunk);
        fs::File::create(&path)
            .and_then(|mut f| f.write_all(&bytes))
            .map_err(|e| Error::io(&path, e))?;
        shards.push(ShardEntry {
            file,
            count: chunk.len(),
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = ShardManifest {
        shard_size,
        total: records.len(),
        class_histogram: class_histogram(records.iter().map(|r| r.label), meta.num_classes),
        meta,
        shards,
        dir: out_dir.to_owned(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Reads and verifies one shard file.
pub fn read_shard(path: &Path, expected_hash: &str) -> Result<Vec<EncodedSentence>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let found = sha256_hex(&bytes);
    if found != expected_hash {
        return Err(Error::ShardHash {
            path: path.to_owned(),
            expected: expected_hash.to_owned(),
            found,
        });
    }
    bytes
        .split(|&b| b == b'\n')
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, line)| {
            serde_json::from_slice(line).map_err(|source| Error::Json {
                path: path.to_owned(),
                line: n + 1,
                source,
            })
        })
        .collect()
}

/// Counts shards currently alive in memory and the peak seen.
#[derive(Debug, Clone, Default)]
pub struct ShardTracker {
    inner: Arc<(AtomicUsize, AtomicUsize)>,
}

impl ShardTracker {
    pub fn live(&self) -> usize {
        self.inner.0.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.inner.1.load(Ordering::SeqCst)
    }

    fn acquire(&self) -> LiveShard {
        let now = self.inner.0.fetch_add(1, Ordering::SeqCst) + 1;
        self.inner.1.fetch_max(now, Ordering::SeqCst);
        LiveShard(self.clone())
    }
}

#[derive(Debug)]
struct LiveShard(ShardTracker);

impl Drop for LiveShard {
    fn drop(&mut self) {
        self.0.inner.0.fetch_sub(1, Ordering::SeqCst);
    }
}

/// One loaded shard. Dropping it releases its slot in the tracker.
#[derive(Debug)]
pub struct Shard {
    pub index: usize,
    pub records: Vec<EncodedSentence>,
    _live: LiveShard,
}

/// Sequential shard iterator backed by a prefetch thread.
///
/// The channel is a rendezvous, so the producer holds at most one loaded shard
/// while the consumer works on the current one.
pub struct ShardStream {
    rx: Option<Receiver<Result<Shard>>>,
    worker: Option<JoinHandle<()>>,
}

impl ShardStream {
    fn open(manifest: &ShardManifest, tracker: ShardTracker) -> Self {
        let jobs: Vec<(PathBuf, String)> = (0..manifest.shards.len())
            .map(|i| (manifest.shard_path(i), manifest.shards[i].sha256.clone()))
            .collect();
        let (tx, rx) = sync_channel(0);
        let worker = std::thread::spawn(move || {
            for (index, (path, hash)) in jobs.into_iter().enumerate() {
                let live = tracker.acquire();
                let item = read_shard(&path, &hash).map(|records| Shard {
                    index,
                    records,
                    _live: live,
                });
                let failed = item.is_err();
                if tx.send(item).is_err() || failed {
                    return;
                }
            }
        });
        ShardStream {
            rx: Some(rx),
            worker: Some(worker),
        }
    }
}

impl Iterator for ShardStream {
    type Item = Result<Shard>;

    fn next(&mut self) -> Option<Self::Item> {
        let item = self.rx.as_ref()?.recv().ok();
        if item.is_none() {
            self.rx = None;
        }
        item
    }
}

impl Drop for ShardStream {
    fn drop(&mut self) {
        self.rx = None;
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: usize) -> EncodedSentence {
        EncodedSentence {
            token_ids: vec![i as u32, 0],
            chars: vec![vec![1, 2], vec![]],
            true_length: 1,
            label: i % 2,
        }
    }

    #[test]
    fn round_trip_and_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let records: Vec<_> = (0..25).map(rec).collect();
        let meta = ShardMeta {
            num_classes: 2,
            ..ShardMeta::default()
        };
        let m = write_shards(&records, 10, dir.path(), meta).unwrap();
        assert_eq!(m.counts(), [10, 10, 5]);
        assert_eq!(m.class_histogram, [13, 12]);
        let loaded = ShardManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(loaded, m);
        assert_eq!(loaded.load_all().unwrap(), records);
    }

    #[test]
    fn corrupt_shard_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_shards(&[rec(1)], 10, dir.path(), ShardMeta::default()).unwrap();
        fs::write(m.shard_path(0), b"{}\n").unwrap();
        let err = m.load_all().unwrap_err();
        assert!(matches!(err, Error::ShardHash { ref path, .. } if path.ends_with("shard-00000.jsonl")));
    }

    #[test]
    fn zero_shard_size_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_shards(&[rec(0)], 0, dir.path(), ShardMeta::default()).is_err());
    }
}
