//! Little-endian binary encoding of networks and normalizers.
//!
//! A network is written as its layer count (u32), the layer sizes (u64 each),
//! then for every layer the weight matrix row-major (`in × out`, f64) followed
//! by the bias vector. A normalizer is its dimension (u64), eps and clip
//! (f64), count (u64), then the mean and M2 vectors.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use super::mlp::{Layer, MlpNet};
use super::normalizer::Normalizer;
use crate::error::{Error, Result};

pub(crate) fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64s<W: Write>(w: &mut W, vs: impl IntoIterator<Item = f64>) -> Result<()> {
    for v in vs {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

const MAX_WIDTH: u64 = 1 << 20;

pub fn write_net<W: Write>(w: &mut W, net: &MlpNet) -> Result<()> {
    write_u32(w, net.sizes().len() as u32)?;
    for &s in net.sizes() {
        write_u64(w, s as u64)?;
    }
    for l in net.layers() {
        write_f64s(w, l.w.iter().copied())?;
        write_f64s(w, l.b.iter().copied())?;
    }
    Ok(())
}

pub fn read_net<R: Read>(r: &mut R) -> Result<MlpNet> {
    let n = read_u32(r)? as usize;
    if !(2..=64).contains(&n) {
        return Err(Error::Checkpoint(format!("implausible layer count {n}")));
    }
    let mut sizes = Vec::with_capacity(n);
    for _ in 0..n {
        let s = read_u64(r)?;
        if s == 0 || s > MAX_WIDTH {
            return Err(Error::Checkpoint(format!("implausible layer width {s}")));
        }
        sizes.push(s as usize);
    }
    let mut layers = Vec::with_capacity(n - 1);
    for io in sizes.windows(2) {
        let w = read_f64s(r, io[0] * io[1])?;
        let b = read_f64s(r, io[1])?;
        layers.push(Layer {
            w: Array2::from_shape_vec((io[0], io[1]), w).expect("sized"),
            b: Array1::from_vec(b),
        });
    }
    MlpNet::from_layers(layers)
}

pub fn write_normalizer<W: Write>(w: &mut W, n: &Normalizer) -> Result<()> {
    write_u64(w, n.dim() as u64)?;
    write_f64s(w, [n.eps, n.clip])?;
    write_u64(w, n.count)?;
    write_f64s(w, n.mean.iter().copied())?;
    write_f64s(w, n.m2.iter().copied())?;
    Ok(())
}

pub fn read_normalizer<R: Read>(r: &mut R) -> Result<Normalizer> {
    let dim = read_u64(r)?;
    if dim > MAX_WIDTH {
        return Err(Error::Checkpoint(format!(
            "implausible normalizer width {dim}"
        )));
    }
    let dim = dim as usize;
    let ec = read_f64s(r, 2)?;
    let count = read_u64(r)?;
    let mean = read_f64s(r, dim)?;
    let m2 = read_f64s(r, dim)?;
    Ok(Normalizer {
        mean,
        m2,
        count,
        eps: ec[0],
        clip: ec[1],
    })
}
