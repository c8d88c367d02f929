//! `.cjsnap` snapshots.
//!
//! A snapshot is one line of JSON (the header, terminated by `\n`) followed by
//! `N` little-endian `f64` samples of `eta` and then `N` of the periodic part
//! of `psi`. Floats in the header are written in shortest round-trip form, so
//! reading a snapshot back gives the state bit for bit.

use std::fs;
use std::path::Path;

use capjet_core::dynamics::JetState;
use capjet_core::{GridSpec, RealField};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const EXTENSION: &str = "cjsnap";
const FORMAT: &str = "cjsnap";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub half_period: f64,
    pub points: usize,
    pub time: f64,
    pub radius: f64,
    pub kappa: f64,
    pub gravity: f64,
    pub slope: f64,
}

pub fn encode(state: &JetState) -> Vec<u8> {
    let grid = state.grid();
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        half_period: grid.half_period(),
        points: grid.len(),
        time: state.time(),
        radius: state.radius(),
        kappa: state.kappa(),
        gravity: state.gravity(),
        slope: state.slope(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for v in state.eta().values().iter().chain(state.psi().values()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<JetState, String> {
    let split = bytes.iter().position(|&b| b == b'\n').ok_or("missing header terminator")?;
    let header: Header = serde_json::from_slice(&bytes[..split]).map_err(|e| format!("header: {e}"))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(format!("unsupported format {} v{}", header.format, header.version));
    }
    let n = header.points;
    let body = &bytes[split + 1..];
    if body.len() != 16 * n {
        return Err(format!("expected {} payload bytes, found {}", 16 * n, body.len()));
    }
    let floats: Vec<f64> =
        body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let grid = GridSpec::new(header.half_period, n).map_err(|e| e.to_string())?;
    let eta = RealField::new(&grid, floats[..n].to_vec()).map_err(|e| e.to_string())?;
    let psi = RealField::new(&grid, floats[n..].to_vec()).map_err(|e| e.to_string())?;
    let state = JetState::new(eta, psi, header.radius, header.kappa).map_err(|e| e.to_string())?;
    Ok(state.with_time(header.time).with_gravity(header.gravity).with_slope(header.slope))
}

pub fn write(path: &Path, state: &JetState) -> Result<()> {
    fs::write(path, encode(state)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<JetState> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|reason| CliError::Snapshot { path: path.to_path_buf(), reason })
}

/// `snap_000120.cjsnap` for step index 120.
pub fn file_name(step: u64) -> String {
    format!("snap_{step:06}.{EXTENSION}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn state() -> JetState {
        let g = GridSpec::new(PI, 16).unwrap();
        let eta = RealField::from_fn(&g, |z| 1.0 + 0.1 * z.cos() + 1e-17 * z);
        let psi = RealField::from_fn(&g, |z| (2.0 * z).sin() / 3.0);
        JetState::new(eta, psi, 1.0, 0.7).unwrap().with_time(0.1 + 0.2).with_gravity(0.5).with_slope(1.0 / 7.0)
    }

    #[test]
    fn round_trip_is_exact() {
        let s = state();
        let back = decode(&encode(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn header_is_one_json_line() {
        let bytes = encode(&state());
        let split = bytes.iter().position(|&b| b == b'\n').unwrap();
        let v: serde_json::Value = serde_json::from_slice(&bytes[..split]).unwrap();
        assert_eq!(v["points"], 16);
        assert_eq!(bytes.len(), split + 1 + 16 * 16);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut bytes = encode(&state());
        bytes.pop();
        assert!(decode(&bytes).unwrap_err().contains("payload"));
        assert!(decode(b"{}").is_err());
    }
}
