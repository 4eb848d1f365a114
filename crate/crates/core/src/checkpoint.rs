//! Binary parameter checkpoints.
//!
//! Layout (all little-endian): 8-byte magic `DPNPARAM`, `u32` format version,
//! `u32` input dim, `u32` hidden dim, `u32` output dim, `u64` seed, then the
//! flat parameters as `f64` in flatten order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::policy::{param_count, PolicyNetwork, N_OUTPUTS};

pub const MAGIC: &[u8; 8] = b"DPNPARAM";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 * 4 + 8;
const MAX_DIM: u32 = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub seed: u64,
    pub network: PolicyNetwork,
}

pub fn encode(network: &PolicyNetwork, seed: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * network.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(network.input_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(network.hidden_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(N_OUTPUTS as u32).to_le_bytes());
    out.extend_from_slice(&seed.to_le_bytes());
    for p in network.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Data("checkpoint shorter than its header".into()));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Data("not a policy checkpoint (bad magic)".into()));
    }
    let version = u32_at(bytes, 8);
    if version != FORMAT_VERSION {
        return Err(Error::UnknownVersion {
            found: version.to_string(),
            expected: FORMAT_VERSION.to_string(),
        });
    }
    let input = u32_at(bytes, 12);
    let hidden = u32_at(bytes, 16);
    let outputs = u32_at(bytes, 20);
    if outputs as usize != N_OUTPUTS {
        return Err(Error::Data(format!(
            "checkpoint has {outputs} outputs, expected {N_OUTPUTS}"
        )));
    }
    if input == 0 || hidden == 0 || input > MAX_DIM || hidden > MAX_DIM {
        return Err(Error::Data(format!("implausible dimensions {input}x{hidden}")));
    }
    let seed = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let n = param_count(input as usize, hidden as usize);
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * n {
        return Err(Error::Data(format!(
            "checkpoint body holds {} bytes, expected {}",
            body.len(),
            8 * n
        )));
    }
    let theta = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let network = PolicyNetwork::from_flat(input as usize, hidden as usize, theta)?;
    Ok(Checkpoint { seed, network })
}

pub fn save(path: impl AsRef<Path>, network: &PolicyNetwork, seed: u64) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(network, seed))?;
    f.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}
