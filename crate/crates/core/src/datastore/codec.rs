//! `.exd` files: `EXD1`, version, length-prefixed env id, obs/act dims,
//! flags (bit 0 = labeled), episode count, then per episode its length and
//! its observations, actions and optional rewards as little-endian `f32`.
//! A CRC32 of everything before it closes the file.

use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use crate::datastore::{Episode, TransitionDataset};
use crate::error::{Error, Result};

pub const EXD_MAGIC: &[u8; 4] = b"EXD1";
pub const EXD_VERSION: u32 = 1;
const FLAG_LABELED: u32 = 1;

pub fn encode(dataset: &TransitionDataset) -> Vec<u8> {
    let floats = dataset
        .episodes()
        .iter()
        .map(|e| e.observations().len() + e.actions().len() + e.len())
        .sum::<usize>();
    let mut out = Vec::with_capacity(64 + dataset.env_id().len() + 4 * (floats + dataset.n_episodes()));
    let put_u32 = |out: &mut Vec<u8>, v: u32| out.extend_from_slice(&v.to_le_bytes());
    let put_f32s = |out: &mut Vec<u8>, vs: &[f64]| {
        for &v in vs {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    };
    out.extend_from_slice(EXD_MAGIC);
    put_u32(&mut out, EXD_VERSION);
    put_u32(&mut out, dataset.env_id().len() as u32);
    out.extend_from_slice(dataset.env_id().as_bytes());
    put_u32(&mut out, dataset.obs_dim() as u32);
    put_u32(&mut out, dataset.act_dim() as u32);
    put_u32(&mut out, if dataset.is_labeled() { FLAG_LABELED } else { 0 });
    put_u32(&mut out, dataset.n_episodes() as u32);
    for ep in dataset.episodes() {
        put_u32(&mut out, ep.len() as u32);
        put_f32s(&mut out, ep.observations());
        put_f32s(&mut out, ep.actions());
        if let Some(r) = ep.rewards() {
            put_f32s(&mut out, r);
        }
    }
    let crc = crc32fast::hash(&out);
    put_u32(&mut out, crc);
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    origin: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(self.origin, format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::format(self.origin, "size overflow"))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }
}

/// Parses a complete file image; `origin` only labels errors.
pub fn decode(bytes: &[u8], origin: &Path) -> Result<TransitionDataset> {
    let fmt = |reason: String| Error::format(origin, reason);
    if bytes.len() < 8 {
        return Err(fmt("file too short".into()));
    }
    if &bytes[..4] != EXD_MAGIC {
        return Err(fmt(format!("bad magic {:?}", &bytes[..4])));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored_crc = u32::from_le_bytes(tail.try_into().unwrap());
    let mut c = Cursor {
        bytes: body,
        pos: 4,
        origin,
    };
    let version = c.u32()?;
    if version != EXD_VERSION {
        return Err(fmt(format!("unsupported version {version}")));
    }
    if crc32fast::hash(body) != stored_crc {
        return Err(fmt("checksum mismatch".into()));
    }
    let id_len = c.u32()? as usize;
    let env_id = std::str::from_utf8(c.take(id_len)?)
        .map_err(|e| fmt(format!("env id not utf-8: {e}")))?
        .to_string();
    let obs_dim = c.u32()? as usize;
    let act_dim = c.u32()? as usize;
    let flags = c.u32()?;
    if flags & !FLAG_LABELED != 0 {
        return Err(fmt(format!("unknown flags {flags:#x}")));
    }
    let labeled = flags & FLAG_LABELED != 0;
    if obs_dim == 0 || act_dim == 0 {
        return Err(fmt("zero dimension".into()));
    }
    let n_episodes = c.u32()? as usize;
    let mut dataset = TransitionDataset::new(env_id, obs_dim, act_dim, labeled);
    for _ in 0..n_episodes {
        let len = c.u32()? as usize;
        let observations = c.f32s((len + 1) * obs_dim)?;
        let actions = c.f32s(len * act_dim)?;
        let rewards = if labeled { Some(c.f32s(len)?) } else { None };
        let ep = Episode::new(obs_dim, act_dim, observations, actions, rewards).map_err(|e| fmt(e.to_string()))?;
        dataset.push_episode(ep)?;
    }
    if c.pos != body.len() {
        return Err(fmt(format!("{} trailing bytes", body.len() - c.pos)));
    }
    Ok(dataset)
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {path:?}")))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(
        ".{name}.tmp.{}.{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn save(dataset: &TransitionDataset, path: &Path) -> Result<()> {
    write_atomic(path, &encode(dataset))
}

pub fn load(path: &Path) -> Result<TransitionDataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

/// Git-style blob hash (`"blob <len>\0"` prefix), SHA-256, hex.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
