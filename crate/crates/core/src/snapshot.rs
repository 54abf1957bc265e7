//! Binary state snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes | content                                   |
//! |-------|-------------------------------------------|
//! | 4     | magic `PEBM`                              |
//! | 4     | format version (`u32`, currently 1)       |
//! | 12    | `nx`, `ny`, `nz` (`u32` each)             |
//! | 8     | `t` (`f64`)                               |
//! | ...   | `v_x`, `v_y`, `T` as `[nz][ny][nx]` `f64`  |
//! | ...   | `rho` as `[ny][nx]` `f64`                 |
//! | 8     | FNV-1a 64 of everything after the magic   |

use std::path::Path;

use crate::error::SnapshotError;
use crate::fields::State;
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"PEBM";
pub const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 12 + 8;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn encode(grid: &Grid, state: &State) -> Vec<u8> {
    let n3 = grid.n_3d();
    let mut out = Vec::with_capacity(HEADER + 8 * (3 * n3 + grid.n_h()) + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for n in [grid.nx, grid.ny, grid.nz] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&state.t.to_le_bytes());
    for field in [&state.v[0], &state.v[1], &state.temp, &state.rho] {
        for x in field.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    let sum = fnv1a(&out[4..]);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

/// Decodes a snapshot, returning its `(nx, ny, nz)` alongside the state.
pub fn decode(bytes: &[u8]) -> Result<((usize, usize, usize), State), SnapshotError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    if bytes.len() < HEADER + 8 {
        return Err(SnapshotError::Checksum);
    }
    let version = u32_at(4);
    if version != VERSION {
        return Err(SnapshotError::Version(version));
    }
    let (nx, ny, nz) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
    let (nh, n3) = (nx * ny, nx * ny * nz);
    let body = HEADER + 8 * (3 * n3 + nh);
    if bytes.len() != body + 8 {
        return Err(SnapshotError::Checksum);
    }
    if fnv1a(&bytes[4..body]) != u64::from_le_bytes(bytes[body..].try_into().unwrap()) {
        return Err(SnapshotError::Checksum);
    }
    let read = |start: usize, len: usize| (0..len).map(|i| f64_at(start + 8 * i)).collect::<Vec<_>>();
    let state = State {
        v: [read(HEADER, n3), read(HEADER + 8 * n3, n3)],
        temp: read(HEADER + 16 * n3, n3),
        rho: read(HEADER + 24 * n3, nh),
        t: f64_at(20),
    };
    Ok(((nx, ny, nz), state))
}

pub fn save_snapshot(grid: &Grid, state: &State, path: &Path) -> Result<(), SnapshotError> {
    std::fs::write(path, encode(grid, state))?;
    Ok(())
}

/// Loads a snapshot written on the same grid.
pub fn load_snapshot(grid: &Grid, path: &Path) -> Result<State, SnapshotError> {
    let (dims, state) = decode(&std::fs::read(path)?)?;
    let expected = (grid.nx, grid.ny, grid.nz);
    if dims != expected {
        return Err(SnapshotError::ShapeMismatch { expected, found: dims });
    }
    Ok(state)
}
