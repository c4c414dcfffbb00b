//! Field snapshot files.
//!
//! Binary layout (little-endian):
//!
//! | bytes | content                                  |
//! |-------|------------------------------------------|
//! | 4     | magic `FNSF`                             |
//! | 2     | format version (`1`)                     |
//! | 4     | modes per axis `N` (u32)                 |
//! | 8     | dealias fraction (f64)                   |
//! | 1     | divergence-free flag (0/1)               |
//! | 1     | norm convention id (0 L², 1 Ḣ^s, 2 H^s)  |
//! | 8     | norm order `s` (f64)                     |
//! | 48·N³ | per mode, row-major: `(re, im)` × 3      |
//!
//! The JSON export carries the same content with full `f64` precision.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::SnapshotError;
use crate::field::SpectralField;
use crate::grid::GridSpec;
use crate::spectral::NormConvention;

pub const MAGIC: &[u8; 4] = b"FNSF";
pub const VERSION: u16 = 1;
pub const JSON_SCHEMA: &str = "fracns.snapshot.v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: SpectralField,
    pub norm: NormConvention,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonSnapshot {
    schema: String,
    grid: GridSpec,
    divergence_free: bool,
    norm: NormConvention,
    coefficients: Vec<[[f64; 2]; 3]>,
}

pub fn write_binary<W: Write>(
    mut w: W,
    field: &SpectralField,
    norm: NormConvention,
) -> Result<(), SnapshotError> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.n() as u32).to_le_bytes())?;
    w.write_all(&g.dealias_fraction().to_le_bytes())?;
    w.write_all(&[field.is_divergence_free() as u8, norm.id()])?;
    w.write_all(&norm.order().to_le_bytes())?;
    let mut buf = Vec::with_capacity(48 * g.len());
    for i in 0..g.len() {
        for z in field.coeff(i) {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K], SnapshotError> {
    let mut b = [0u8; K];
    r.read_exact(&mut b)
        .map_err(|e| SnapshotError::Format(format!("truncated header: {e}")))?;
    Ok(b)
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Snapshot, SnapshotError> {
    if &take::<4, _>(&mut r)? != MAGIC {
        return Err(SnapshotError::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(SnapshotError::Format(format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(take(&mut r)?) as usize;
    let fraction = f64::from_le_bytes(take(&mut r)?);
    let [flag, norm_id] = take::<2, _>(&mut r)?;
    let order = f64::from_le_bytes(take(&mut r)?);
    let grid = GridSpec::with_dealias(n, fraction)?;
    let norm = NormConvention::from_id(norm_id, order)
        .ok_or_else(|| SnapshotError::Format(format!("unknown norm id {norm_id}")))?;
    let divergence_free = match flag {
        0 => false,
        1 => true,
        x => return Err(SnapshotError::Format(format!("bad divergence flag {x}"))),
    };

    let mut raw = vec![0u8; 48 * grid.len()];
    r.read_exact(&mut raw)
        .map_err(|e| SnapshotError::Format(format!("truncated coefficients: {e}")))?;
    let mut comps: [Vec<Complex64>; 3] = Default::default();
    for c in &mut comps {
        c.reserve_exact(grid.len());
    }
    for mode in raw.chunks_exact(48) {
        for (c, z) in comps.iter_mut().zip(mode.chunks_exact(16)) {
            let re = f64::from_le_bytes(z[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(z[8..].try_into().expect("8 bytes"));
            c.push(Complex64::new(re, im));
        }
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(SnapshotError::Format("trailing bytes after coefficients".into()));
    }
    let field = from_parts(grid, comps, divergence_free)?;
    Ok(Snapshot { field, norm })
}

fn from_parts(
    grid: GridSpec,
    comps: [Vec<Complex64>; 3],
    divergence_free: bool,
) -> Result<SpectralField, SnapshotError> {
    if comps.iter().any(|c| c[0] != Complex64::default()) {
        return Err(SnapshotError::Format("nonzero mean mode".into()));
    }
    Ok(SpectralField::from_components(grid, comps, divergence_free)?)
}

pub fn to_json(field: &SpectralField, norm: NormConvention) -> Result<String, SnapshotError> {
    let g = field.grid();
    let coefficients = (0..g.len())
        .map(|i| field.coeff(i).map(|z| [z.re, z.im]))
        .collect();
    let doc = JsonSnapshot {
        schema: JSON_SCHEMA.into(),
        grid: *g,
        divergence_free: field.is_divergence_free(),
        norm,
        coefficients,
    };
    Ok(serde_json::to_string(&doc)?)
}

pub fn from_json(text: &str) -> Result<Snapshot, SnapshotError> {
    let doc: JsonSnapshot = serde_json::from_str(text)?;
    if doc.schema != JSON_SCHEMA {
        return Err(SnapshotError::Format(format!("unknown schema {}", doc.schema)));
    }
    if doc.coefficients.len() != doc.grid.len() {
        return Err(SnapshotError::Format(format!(
            "{} coefficients for a grid of {}",
            doc.coefficients.len(),
            doc.grid.len()
        )));
    }
    let mut comps: [Vec<Complex64>; 3] = Default::default();
    for mode in &doc.coefficients {
        for (c, z) in comps.iter_mut().zip(mode) {
            c.push(Complex64::new(z[0], z[1]));
        }
    }
    let field = from_parts(doc.grid, comps, doc.divergence_free)?;
    Ok(Snapshot {
        field,
        norm: doc.norm,
    })
}

/// Loads a snapshot, choosing JSON for `.json` paths and binary otherwise.
pub fn load(path: &Path) -> Result<Snapshot, SnapshotError> {
    if path.extension().is_some_and(|e| e == "json") {
        from_json(&fs::read_to_string(path)?)
    } else {
        read_binary(std::io::BufReader::new(fs::File::open(path)?))
    }
}

pub fn save(path: &Path, field: &SpectralField, norm: NormConvention) -> Result<(), SnapshotError> {
    if path.extension().is_some_and(|e| e == "json") {
        fs::write(path, to_json(field, norm)?)?;
    } else {
        let mut buf = Vec::new();
        write_binary(&mut buf, field, norm)?;
        fs::write(path, buf)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpectralField {
        let g = GridSpec::new(8).unwrap();
        SpectralField::from_fn(g, |x| [x[1].sin() / 3.0, (x[2] + x[0]).cos() * 1e-7, 0.1])
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_binary(&mut buf, &sample(), NormConvention::Inhomogeneous(1.5)).unwrap();
        assert_eq!(&buf[..4], b"FNSF");
        assert_eq!(u32::from_le_bytes(buf[6..10].try_into().unwrap()), 8);
        assert_eq!(buf[19], 2);
        assert_eq!(buf.len(), 28 + 48 * 512);
    }

    #[test]
    fn rejects_corruption() {
        let mut buf = Vec::new();
        write_binary(&mut buf, &sample(), NormConvention::L2).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_binary(&bad[..]).is_err());
        assert!(read_binary(&buf[..buf.len() - 1]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_binary(&long[..]).is_err());
        assert!(from_json("{\"schema\":\"nope\"}").is_err());
    }
}
