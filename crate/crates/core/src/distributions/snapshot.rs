//! Binary snapshots of a [`DistributionGrid`] and per-time CSV summaries.
//!
//! Layout, all little-endian:
//! `b"RKGRID01"`, `u64` nx1, nx2, nx3, N_p, `f64` R_max, t,
//! `u64` envelope kind (0 none, 1 classical, 2 relativistic),
//! `f64` rate, amplitude, c, then the values momentum-major.

use std::io::{Read, Write};
use std::sync::Arc;

use super::{DecayEnvelope, DistributionGrid, EnvelopeKind, MomentumGrid, PhaseGrid, SpatialGrid};
use crate::csv::fmt_f64;
use crate::error::{Error, Result};
use crate::kinematics::LightSpeed;

const MAGIC: &[u8; 8] = b"RKGRID01";

pub fn write_snapshot<W: Write>(mut out: W, f: &DistributionGrid) -> Result<()> {
    let grid = f.grid();
    out.write_all(MAGIC)?;
    for d in grid.spatial.dims() {
        out.write_all(&(d as u64).to_le_bytes())?;
    }
    out.write_all(&(grid.momentum.n_p() as u64).to_le_bytes())?;
    out.write_all(&grid.momentum.r_max().to_le_bytes())?;
    out.write_all(&f.t().to_le_bytes())?;
    let (kind, rate, amplitude, c) = match f.envelope() {
        None => (0u64, 0.0, 0.0, 0.0),
        Some(env) => match env.kind {
            EnvelopeKind::Classical => (1, env.rate, env.amplitude, 0.0),
            EnvelopeKind::Relativistic(c) => (2, env.rate, env.amplitude, c.c()),
        },
    };
    out.write_all(&kind.to_le_bytes())?;
    for v in [rate, amplitude, c] {
        out.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(8 * f.values().len());
    for v in f.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::Snapshot(format!("truncated header: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn to_usize(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).ok().filter(|&n| n > 0 && n < (1 << 24)).ok_or_else(|| Error::Snapshot(format!("bad {what}: {v}")))
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<DistributionGrid> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(|_| Error::Snapshot("missing magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("not a snapshot file".into()));
    }
    let dims = [
        to_usize(read_u64(&mut input)?, "nx1")?,
        to_usize(read_u64(&mut input)?, "nx2")?,
        to_usize(read_u64(&mut input)?, "nx3")?,
    ];
    let n_p = to_usize(read_u64(&mut input)?, "N_p")?;
    let r_max = read_f64(&mut input)?;
    let t = read_f64(&mut input)?;
    let kind = read_u64(&mut input)?;
    let rate = read_f64(&mut input)?;
    let amplitude = read_f64(&mut input)?;
    let c = read_f64(&mut input)?;
    let envelope = match kind {
        0 => None,
        1 => Some(DecayEnvelope::classical(rate, amplitude)),
        2 => Some(DecayEnvelope::relativistic(rate, LightSpeed::new(c)?, amplitude)),
        k => return Err(Error::Snapshot(format!("unknown envelope kind {k}"))),
    };
    let grid = Arc::new(PhaseGrid::new(SpatialGrid::new(dims)?, MomentumGrid::new(r_max, n_p)?));
    let n = grid.len();
    let mut bytes = vec![0u8; 8 * n];
    input.read_exact(&mut bytes).map_err(|_| Error::Snapshot(format!("expected {n} values")))?;
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Snapshot(format!("{} trailing bytes", rest.len())));
    }
    let values = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    DistributionGrid::new(grid, values, t, envelope)
}

pub const SUMMARY_HEADER: &str = "t,norm_01,min,max,envelope_violation";

/// One CSV row matching [`SUMMARY_HEADER`]. `envelope_violation` is
/// `max(0, worst f/bound - 1)`, zero without an envelope.
pub fn summary_row(f: &DistributionGrid) -> String {
    let violation = f.envelope_check().map_or(0.0, |r| (r.worst_ratio - 1.0).max(0.0));
    format!(
        "{},{},{},{},{}",
        fmt_f64(f.t()),
        fmt_f64(f.norm_01()),
        fmt_f64(f.min()),
        fmt_f64(f.max()),
        fmt_f64(violation)
    )
}
