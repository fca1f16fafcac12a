//! RKDS binary series files and their `example_id,ra` label CSVs.
//!
//! Layout: the magic bytes `RKDS`, then little-endian `u32` version, N, C, T,
//! then `N * C * T` little-endian `f32` values ordered
//! `[example][channel][timestep]`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::transform::TimeSeriesBatch;

pub const RKDS_MAGIC: &[u8; 4] = b"RKDS";
pub const RKDS_VERSION: u32 = 1;

pub fn write_rkds(batch: &TimeSeriesBatch, mut out: impl Write) -> Result<()> {
    let dims = [batch.n_examples(), batch.n_channels(), batch.n_timesteps()];
    out.write_all(RKDS_MAGIC)?;
    out.write_all(&RKDS_VERSION.to_le_bytes())?;
    for d in dims {
        let d = u32::try_from(d).map_err(|_| Error::param(format!("dimension {d} exceeds u32")))?;
        out.write_all(&d.to_le_bytes())?;
    }
    for v in batch.data() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(input: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_rkds(mut input: impl Read) -> Result<TimeSeriesBatch> {
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for RKDS header".into()))?;
    if &magic != RKDS_MAGIC {
        return Err(Error::Format("missing RKDS magic bytes".into()));
    }
    let version = read_u32(&mut input)?;
    if version != RKDS_VERSION {
        return Err(Error::Format(format!("unsupported RKDS version {version}")));
    }
    let n = read_u32(&mut input)? as usize;
    let c = read_u32(&mut input)? as usize;
    let t = read_u32(&mut input)? as usize;
    let count = n
        .checked_mul(c)
        .and_then(|v| v.checked_mul(t))
        .ok_or_else(|| Error::Format("RKDS dimensions overflow".into()))?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != count * 4 {
        return Err(Error::Format(format!(
            "RKDS payload has {} bytes, header promises {}",
            bytes.len(),
            count * 4
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    TimeSeriesBatch::new(data, n, c, t).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_rkds(batch: &TimeSeriesBatch, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_rkds(batch, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_rkds(path: impl AsRef<Path>) -> Result<TimeSeriesBatch> {
    read_rkds(BufReader::new(File::open(path)?))
}

pub fn write_labels(labels: &[f64], mut out: impl Write) -> Result<()> {
    writeln!(out, "example_id,ra")?;
    for (i, ra) in labels.iter().enumerate() {
        writeln!(out, "{i},{ra}")?;
    }
    Ok(())
}

/// Reads a label CSV whose ids run `0..N` in order.
pub fn read_labels(input: impl BufRead) -> Result<Vec<f64>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some("example_id,ra") {
        return Err(Error::Format("label CSV must start with `example_id,ra`".into()));
    }
    let mut labels = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, ra) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("label row {row}: expected two fields")))?;
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("label row {row}: bad example_id `{id}`")))?;
        if id != labels.len() {
            return Err(Error::Format(format!(
                "label row {row}: example_id {id} out of sequence"
            )));
        }
        let ra: f64 = ra
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("label row {row}: bad ra `{ra}`")))?;
        labels.push(ra);
    }
    Ok(labels)
}

pub fn save_labels(labels: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_labels(labels, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    read_labels(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let batch = TimeSeriesBatch::new(vec![1.0, -2.5], 1, 2, 1).unwrap();
        let mut out = Vec::new();
        write_rkds(&batch, &mut out).unwrap();
        assert_eq!(&out[..4], b"RKDS");
        assert_eq!(&out[4..20], &[1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&out[20..24], &1.0f32.to_le_bytes());
        assert_eq!(out.len(), 28);
    }

    #[test]
    fn empty_dataset_is_header_only() {
        let batch = TimeSeriesBatch::empty(20, 2000);
        let mut out = Vec::new();
        write_rkds(&batch, &mut out).unwrap();
        assert_eq!(out.len(), 20);
        let back = read_rkds(&out[..]).unwrap();
        assert_eq!(back.n_examples(), 0);
        assert_eq!(back.n_channels(), 20);
    }

    #[test]
    fn rejects_corrupt_files() {
        assert!(matches!(read_rkds(&b"RKD"[..]), Err(Error::Format(_))));
        assert!(matches!(read_rkds(&b"XXXX\x01\0\0\0"[..]), Err(Error::Format(_))));
        let batch = TimeSeriesBatch::new(vec![1.0; 6], 2, 3, 1).unwrap();
        let mut out = Vec::new();
        write_rkds(&batch, &mut out).unwrap();
        out.pop();
        assert!(matches!(read_rkds(&out[..]), Err(Error::Format(_))));
    }

    #[test]
    fn label_csv_checks() {
        assert!(read_labels(&b"id,ra\n0,1\n"[..]).is_err());
        assert!(read_labels(&b"example_id,ra\n1,0.5\n"[..]).is_err());
        assert!(read_labels(&b"example_id,ra\n0,abc\n"[..]).is_err());
        assert_eq!(read_labels(&b"example_id,ra\n"[..]).unwrap(), Vec::<f64>::new());
    }

    proptest! {
        #[test]
        fn rkds_and_labels_round_trip(
            dims in (0usize..4, 1usize..4, 1usize..6),
            seed in any::<u64>(),
        ) {
            let (n, c, t) = dims;
            let data: Vec<f32> = (0..n * c * t)
                .map(|i| f32::from_bits((seed as u32).wrapping_add((i as u32).wrapping_mul(2654435761)) & 0x7f7f_ffff))
                .collect();
            let batch = TimeSeriesBatch::new(data, n, c, t).unwrap();
            let mut out = Vec::new();
            write_rkds(&batch, &mut out).unwrap();
            prop_assert_eq!(read_rkds(&out[..]).unwrap(), batch);

            let labels: Vec<f64> = (0..n).map(|i| (seed as f64 + i as f64).sqrt() / 7.0).collect();
            let mut csv = Vec::new();
            write_labels(&labels, &mut csv).unwrap();
            prop_assert_eq!(read_labels(&csv[..]).unwrap(), labels);
        }
    }
}
