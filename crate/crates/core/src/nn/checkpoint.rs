//! EXNN parameter files: magic, version, layer count, output head, then for
//! each layer its dims and row-major weights and biases, all little-endian.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Mlp, OutputHead};

pub const EXNN_MAGIC: &[u8; 4] = b"EXNN";
pub const EXNN_VERSION: u32 = 1;

pub fn write_mlp(net: &Mlp, out: &mut impl Write) -> std::io::Result<()> {
    out.write_all(EXNN_MAGIC)?;
    out.write_all(&EXNN_VERSION.to_le_bytes())?;
    out.write_all(&(net.n_layers() as u32).to_le_bytes())?;
    let head: u32 = match net.head() {
        OutputHead::Identity => 0,
        OutputHead::Tanh => 1,
    };
    out.write_all(&head.to_le_bytes())?;
    for l in 0..net.n_layers() {
        out.write_all(&(net.sizes()[l] as u32).to_le_bytes())?;
        out.write_all(&(net.sizes()[l + 1] as u32).to_le_bytes())?;
        for v in &net.params()[net.layer_range(l)] {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32(input: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Reads one network; `origin` only labels errors.
pub fn read_mlp(input: &mut impl Read, origin: &Path) -> Result<Mlp> {
    let fmt = |reason: String| Error::format(origin, reason);
    let io = |e: std::io::Error| fmt(format!("truncated: {e}"));
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(io)?;
    if &magic != EXNN_MAGIC {
        return Err(fmt(format!("bad magic {magic:?}")));
    }
    let version = read_u32(input).map_err(io)?;
    if version != EXNN_VERSION {
        return Err(fmt(format!("unsupported version {version}")));
    }
    let n_layers = read_u32(input).map_err(io)? as usize;
    if n_layers == 0 || n_layers > 64 {
        return Err(fmt(format!("implausible layer count {n_layers}")));
    }
    let head = match read_u32(input).map_err(io)? {
        0 => OutputHead::Identity,
        1 => OutputHead::Tanh,
        h => return Err(fmt(format!("unknown output head {h}"))),
    };
    let mut sizes = Vec::with_capacity(n_layers + 1);
    let mut params = Vec::new();
    for l in 0..n_layers {
        let fan_in = read_u32(input).map_err(io)? as usize;
        let fan_out = read_u32(input).map_err(io)? as usize;
        if l == 0 {
            sizes.push(fan_in);
        } else if sizes[l] != fan_in {
            return Err(fmt(format!("layer {l} input {fan_in} != previous output {}", sizes[l])));
        }
        sizes.push(fan_out);
        let count = fan_in
            .checked_mul(fan_out)
            .and_then(|w| w.checked_add(fan_out))
            .filter(|&c| c <= 1 << 28)
            .ok_or_else(|| fmt(format!("implausible layer {fan_in}x{fan_out}")))?;
        let mut buf = vec![0u8; count * 8];
        input.read_exact(&mut buf).map_err(io)?;
        params.extend(
            buf.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap())),
        );
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest).map_err(io)? != 0 {
        return Err(fmt("trailing bytes after last layer".into()));
    }
    Mlp::from_params(&sizes, head, params).map_err(|e| fmt(e.to_string()))
}

pub fn save_mlp(net: &Mlp, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + net.n_params() * 8);
    write_mlp(net, &mut bytes).map_err(|e| Error::io(path, e))?;
    crate::datastore::write_atomic(path, &bytes)
}

pub fn load_mlp(path: &Path) -> Result<Mlp> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_mlp(&mut bytes.as_slice(), path)
}
