//! Binary checkpoints.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0 | 8 | magic `LCDSPEC1` |
//! | 8 | 4 | format version (`u32`, currently 1) |
//! | 12 | 8 | `N` (`u64`) |
//! | 20 | 8 | `L` (`f64`) |
//! | 28 | 8 | `t` |
//! | 36 | 8 | `eta` |
//! | 44 | 8 | `nu` |
//! | 52 | 24 | `w0` (3 × `f64`) |
//! | 76 | 4 | CRC-32 of bytes 0..76 |
//! | 80 | 2·3·N³·16 | payload |
//! | end | 4 | CRC-32 of the payload |
//!
//! The payload holds the velocity spectrum then the director deviation
//! spectrum, each component-major, with modes in flat order (`m₃` fastest)
//! and every coefficient stored as `(re, im)`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lcd_spectra::{Grid, PhysicsParams, SpectralField, State};
use num_complex::Complex;

use crate::error::{io_err, HarnessError, Result};

pub const MAGIC: &[u8; 8] = b"LCDSPEC1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 76;

#[derive(Clone, Debug, PartialEq)]
pub struct Header {
    pub version: u32,
    pub n: u64,
    pub length: f64,
    pub t: f64,
    pub eta: f64,
    pub nu: f64,
    pub w0: [f64; 3],
}

fn encode_header(h: &Header) -> Vec<u8> {
    let mut b = Vec::with_capacity(HEADER_LEN + 4);
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&h.version.to_le_bytes());
    b.extend_from_slice(&h.n.to_le_bytes());
    for v in [h.length, h.t, h.eta, h.nu, h.w0[0], h.w0[1], h.w0[2]] {
        b.extend_from_slice(&v.to_le_bytes());
    }
    debug_assert_eq!(b.len(), HEADER_LEN);
    let crc = crc32fast::hash(&b);
    b.extend_from_slice(&crc.to_le_bytes());
    b
}

fn f64_at(b: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(b[off..off + 8].try_into().expect("8 bytes"))
}

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(b[off..off + 4].try_into().expect("4 bytes"))
}

/// Serializes `state` with the physical parameters it was run with.
pub fn encode(state: &State<f64>, params: &PhysicsParams<f64>) -> Vec<u8> {
    let grid = state.grid();
    let header = Header {
        version: VERSION,
        n: grid.n() as u64,
        length: grid.length(),
        t: state.t,
        eta: params.eta,
        nu: params.nu,
        w0: state.w0,
    };
    let mut out = encode_header(&header);
    let start = out.len();
    for field in [&state.u_hat, &state.d_hat] {
        for c in field.coeffs() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Parses a checkpoint, verifying both checksums.
pub fn decode(bytes: &[u8], path: &Path) -> Result<(Header, State<f64>)> {
    let fail = |reason: String| HarnessError::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN + 4 || &bytes[..8] != MAGIC {
        return Err(fail("not a checkpoint (bad magic)".into()));
    }
    if crc32fast::hash(&bytes[..HEADER_LEN]) != u32_at(bytes, HEADER_LEN) {
        return Err(fail("header CRC mismatch".into()));
    }
    let header = Header {
        version: u32_at(bytes, 8),
        n: u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")),
        length: f64_at(bytes, 20),
        t: f64_at(bytes, 28),
        eta: f64_at(bytes, 36),
        nu: f64_at(bytes, 44),
        w0: [f64_at(bytes, 52), f64_at(bytes, 60), f64_at(bytes, 68)],
    };
    if header.version != VERSION {
        return Err(fail(format!("unsupported version {}", header.version)));
    }
    let n = usize::try_from(header.n).map_err(|_| fail("grid size overflows".into()))?;
    let size = n
        .checked_pow(3)
        .and_then(|s| s.checked_mul(2 * 3 * 16))
        .ok_or_else(|| fail("grid size overflows".into()))?;
    let start = HEADER_LEN + 4;
    if bytes.len() != start + size + 4 {
        return Err(fail(format!(
            "payload length {} does not match N = {n}",
            bytes.len().saturating_sub(start + 4)
        )));
    }
    let payload = &bytes[start..start + size];
    if crc32fast::hash(payload) != u32_at(bytes, start + size) {
        return Err(fail("payload CRC mismatch".into()));
    }
    let grid = Arc::new(Grid::new(n, header.length).map_err(|e| fail(e.to_string()))?);
    let coeffs: Vec<Complex<f64>> = payload
        .chunks_exact(16)
        .map(|c| Complex::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    let half = coeffs.len() / 2;
    let mut coeffs = coeffs;
    let d = coeffs.split_off(half);
    let u = SpectralField::from_coeffs(&grid, 3, coeffs)?;
    let d = SpectralField::from_coeffs(&grid, 3, d)?;
    let state = State::new(u, d, header.w0, header.t).map_err(|e| fail(e.to_string()))?;
    Ok((header, state))
}

/// Writes atomically through a temporary sibling file.
pub fn save(path: &Path, state: &State<f64>, params: &PhysicsParams<f64>) -> Result<()> {
    let tmp: PathBuf = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(&encode(state, params)).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn load(path: &Path) -> Result<(Header, State<f64>)> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lcd_spectra::initdata::{make_director, make_velocity, InitConfig};

    fn state() -> (State<f64>, PhysicsParams<f64>) {
        let g = Arc::new(Grid::new(8, 12.5).unwrap());
        let cfg = InitConfig {
            seed: 9,
            u_amplitude: 0.3,
            u_shell: (0.0, 1.0),
            d_perturb_amplitude: 0.2,
            d_perturb_band: (0.0, 1.0),
            ..Default::default()
        };
        let u = make_velocity(&cfg, &g).unwrap();
        let d = make_director(&cfg, &g).unwrap();
        let s = State::new(u, d.d_hat, [0.0, 0.0, 1.0], 3.25).unwrap();
        (s, PhysicsParams::new(0.7, 1.1).unwrap())
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (s, p) = state();
        let bytes = encode(&s, &p);
        assert_eq!(bytes.len(), 80 + 2 * 3 * 512 * 16 + 4);
        assert_eq!(&bytes[..8], b"LCDSPEC1");
        let (h, back) = decode(&bytes, Path::new("mem")).unwrap();
        assert_eq!((h.n, h.length, h.t, h.eta, h.nu), (8, 12.5, 3.25, 0.7, 1.1));
        let bits = |f: &SpectralField<f64>| f.coeffs().iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(&back.u_hat), bits(&s.u_hat));
        assert_eq!(bits(&back.d_hat), bits(&s.d_hat));
        assert_eq!(back.t.to_bits(), s.t.to_bits());
    }

    #[test]
    fn payload_is_component_major_m3_fastest() {
        let (s, p) = state();
        let bytes = encode(&s, &p);
        let g = s.grid();
        // second velocity component, mode index (1, 2, 3)
        let idx = g.flat(1, 2, 3);
        let off = 80 + (g.size() + idx) * 16;
        let c = s.u_hat.coeffs()[g.size() + idx];
        assert_eq!(f64_at(&bytes, off), c.re);
        assert_eq!(f64_at(&bytes, off + 8), c.im);
        assert_eq!(g.flat(0, 0, 1), 1);
    }

    #[test]
    fn corruption_is_refused() {
        let (s, p) = state();
        let good = encode(&s, &p);
        let mut bad = good.clone();
        bad[30] ^= 1;
        let e = decode(&bad, Path::new("x")).unwrap_err().to_string();
        assert!(e.contains("header CRC"), "{e}");
        let mut bad = good.clone();
        bad[200] ^= 1;
        assert!(decode(&bad, Path::new("x")).unwrap_err().to_string().contains("payload CRC"));
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode(&bad, Path::new("x")).is_err());
        assert!(decode(&good[..good.len() - 10], Path::new("x")).is_err());
    }
}
