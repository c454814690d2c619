//! Binary IQ capture file format.
//!
//! Layout (all integers little-endian):
//! - bytes 0..8: magic `"STBCIQ1"` followed by one zero byte
//! - bytes 8..12: u32 antenna count
//! - bytes 12..20: u64 samples per antenna, `K`
//! - bytes 20..28: f64 sample-rate tag (informational only)
//! - bytes 28..: per antenna contiguous, `K` pairs of f32 (I then Q)
//!
//! Samples are stored as f32; all in-memory processing is f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;

pub const MAGIC: &[u8; 8] = b"STBCIQ1\0";
pub const HEADER_LEN: usize = 28;

/// An IQ capture loaded from or destined for disk.
#[derive(Debug, Clone, PartialEq)]
pub struct IqCapture {
    pub streams: Vec<Vec<Complex64>>,
    pub sample_rate: f64,
}

impl IqCapture {
    pub fn n_antennas(&self) -> usize {
        self.streams.len()
    }

    pub fn samples_per_antenna(&self) -> usize {
        self.streams.first().map_or(0, Vec::len)
    }
}

/// Serializes a capture with the exact byte layout above.
pub fn write_capture(path: &Path, capture: &IqCapture) -> Result<()> {
    let k = capture.samples_per_antenna();
    if capture.streams.iter().any(|s| s.len() != k) {
        bail!("all antenna streams must have equal length");
    }
    let file = File::create(path)
        .with_context(|| format!("cannot create capture file {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&(capture.n_antennas() as u32).to_le_bytes())?;
    w.write_all(&(k as u64).to_le_bytes())?;
    w.write_all(&capture.sample_rate.to_le_bytes())?;
    for stream in &capture.streams {
        for z in stream {
            w.write_all(&(z.re as f32).to_le_bytes())?;
            w.write_all(&(z.im as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a capture, validating magic, header, and payload size. Errors name
/// the byte offset at which the file stopped making sense.
pub fn read_capture(path: &Path) -> Result<IqCapture> {
    let file = File::open(path)
        .with_context(|| format!("cannot open capture file {}", path.display()))?;
    let mut r = BufReader::new(file);
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .with_context(|| format!("truncated header: file shorter than {HEADER_LEN} bytes"))?;
    if &header[..8] != MAGIC {
        bail!(
            "bad magic at byte offset 0: expected {:?}, found {:?}",
            MAGIC,
            &header[..8]
        );
    }
    let antennas = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let k = u64::from_le_bytes(header[12..20].try_into().unwrap()) as usize;
    let sample_rate = f64::from_le_bytes(header[20..28].try_into().unwrap());
    if antennas == 0 {
        bail!("antenna count is zero (byte offset 8)");
    }
    let mut streams = Vec::with_capacity(antennas);
    let mut buf = vec![0u8; k * 8];
    for a in 0..antennas {
        let payload_offset = HEADER_LEN + a * k * 8;
        r.read_exact(&mut buf).with_context(|| {
            format!(
                "truncated payload for antenna {a}: expected {} bytes starting at byte offset {payload_offset}",
                k * 8
            )
        })?;
        let stream = buf
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes(c[0..4].try_into().unwrap());
                let im = f32::from_le_bytes(c[4..8].try_into().unwrap());
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        streams.push(stream);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        bail!(
            "trailing data after byte offset {}",
            HEADER_LEN + antennas * k * 8
        );
    }
    Ok(IqCapture {
        streams,
        sample_rate,
    })
}
