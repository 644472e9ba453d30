//! Fitted BPFA state on disk.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! b"BPFA\x01"                 5-byte magic and version
//! u64                         length L of the JSON header
//! L bytes                     header {k, dim, n_p, gamma_n, gamma_w, a, b_param, pi, history}
//! k * dim f64                 atoms, atom-major
//! n_p * k f64                 weights w, patch-major
//! n_p * k u8                  indicators z (0 or 1), patch-major
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::bpfa::{BpfaState, Dictionary, EpochStats};
use crate::error::{Error, Result};

const MAGIC: &[u8; 5] = b"BPFA\x01";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    k: usize,
    dim: usize,
    n_p: usize,
    gamma_n: f64,
    gamma_w: f64,
    a: f64,
    b_param: f64,
    pi: Vec<f64>,
    history: Vec<EpochStats>,
}

pub fn encode_checkpoint(state: &BpfaState) -> Result<Vec<u8>> {
    let header = Header {
        k: state.k(),
        dim: state.dictionary.dim(),
        n_p: state.n_p(),
        gamma_n: state.gamma_n,
        gamma_w: state.gamma_w,
        a: state.a,
        b_param: state.b_param,
        pi: state.pi.clone(),
        history: state.history.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(13 + json.len() + 8 * (state.dictionary.as_slice().len() + state.w.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in state.dictionary.as_slice().iter().chain(&state.w) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(state.z.iter().map(|&z| z as u8));
    Ok(out)
}

pub fn decode_checkpoint(path: &Path, bytes: &[u8]) -> Result<BpfaState> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: "BPFA\\x01",
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(MAGIC.len())]).into_owned(),
        });
    }
    let truncated = |expected: usize| Error::Truncated {
        path: path.to_path_buf(),
        expected,
        found: bytes.len(),
    };
    let mut pos = MAGIC.len();
    let len_bytes: [u8; 8] = bytes
        .get(pos..pos + 8)
        .ok_or_else(|| truncated(pos + 8))?
        .try_into()
        .unwrap();
    pos += 8;
    let json_len = u64::from_le_bytes(len_bytes) as usize;
    let json = bytes
        .get(pos..pos + json_len)
        .ok_or_else(|| truncated(pos + json_len))?;
    pos += json_len;
    let h: Header = serde_json::from_slice(json).map_err(|e| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;

    let n_atoms = h.k * h.dim;
    let n_codes = h.n_p * h.k;
    let total = pos + 8 * (n_atoms + n_codes) + n_codes;
    if bytes.len() < total {
        return Err(truncated(total));
    }
    let floats: Vec<f64> = bytes[pos..pos + 8 * (n_atoms + n_codes)]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    pos += 8 * (n_atoms + n_codes);
    let z = bytes[pos..pos + n_codes].iter().map(|&b| b != 0).collect();
    let (atoms, w) = floats.split_at(n_atoms);

    let mut state = BpfaState::from_parts(
        Dictionary::new(h.k, h.dim, atoms.to_vec())?,
        z,
        w.to_vec(),
        h.pi,
        h.gamma_n,
        h.gamma_w,
        h.a,
        h.b_param,
    )?;
    state.history = h.history;
    Ok(state)
}

pub fn write_checkpoint(state: &BpfaState, path: &Path) -> Result<()> {
    write_atomic(path, &encode_checkpoint(state)?)
}

pub fn read_checkpoint(path: &Path) -> Result<BpfaState> {
    decode_checkpoint(path, &std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpfa::{init_state, BpfaConfig};
    use crate::domain::RngSeed;

    #[test]
    fn round_trip_is_exact() {
        let config = BpfaConfig {
            k: 5,
            b: 3,
            ..BpfaConfig::default()
        };
        let mut st = init_state(&config, 7, RngSeed(4)).unwrap();
        st.z[3] = false;
        st.history.push(EpochStats {
            epoch: 1,
            batches: 1,
            masked_rss: 0.5,
            gamma_n: 2.0,
            mean_active: 4.5,
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.bpfa");
        write_checkpoint(&st, &path).unwrap();
        assert_eq!(read_checkpoint(&path).unwrap(), st);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let st = init_state(
            &BpfaConfig {
                k: 2,
                b: 2,
                ..BpfaConfig::default()
            },
            3,
            RngSeed(0),
        )
        .unwrap();
        let bytes = encode_checkpoint(&st).unwrap();
        let p = Path::new("x");
        assert!(matches!(
            decode_checkpoint(p, &bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(decode_checkpoint(p, b"BPFA\x02"), Err(Error::BadMagic { .. })));
        let mut bad = bytes.clone();
        bad[13] = b'!';
        assert!(matches!(decode_checkpoint(p, &bad), Err(Error::MalformedHeader { .. })));
    }
}
