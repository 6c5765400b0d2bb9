//! Binary file formats.
//!
//! `TNSR` (dense tensor): magic `TNSR`, version byte `1`, order `p` as u32
//! LE, `p` dims as u32 LE, then the entries as f64 LE in row-major order.
//!
//! `TNET` (tensor network): magic `TNET`, version byte `1`, `p`, dims as
//! above, then `R_ij` for `i < j` in lexicographic order as u32 LE, then
//! the `p` cores, each row-major f64 LE with mode `k` of core `k` dangling.

use std::fs;
use std::path::Path;

use crate::error::{Result, TnError};
use crate::network::{RankMatrix, TensorNetwork};
use crate::tensor::DenseTensor;

pub const TENSOR_MAGIC: &[u8; 4] = b"TNSR";
pub const NETWORK_MAGIC: &[u8; 4] = b"TNET";
pub const FORMAT_VERSION: u8 = 1;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn err(&self, message: impl Into<String>) -> TnError {
        TnError::Format {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or_else(|| self.err(format!("{what}: size overflow")))?;
        if end > self.bytes.len() {
            return Err(self.err(format!(
                "truncated {what}: expected {n} bytes, found {}",
                self.bytes.len() - self.pos
            )));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != magic {
            self.pos = 0;
            return Err(self.err(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.take(1, "version")?[0];
        if version != FORMAT_VERSION {
            self.pos -= 1;
            return Err(self.err(format!("unsupported version {version}, expected {FORMAT_VERSION}")));
        }
        Ok(())
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn dims(&mut self) -> Result<Vec<usize>> {
        let p = self.u32("order")?;
        // Each dim needs 4 bytes; reject absurd orders before allocating.
        if p > (self.bytes.len() - self.pos) / 4 {
            return Err(self.err(format!(
                "truncated dims: order {p} needs {} bytes, found {}",
                4 * p,
                self.bytes.len() - self.pos
            )));
        }
        (0..p).map(|m| self.u32(&format!("dim {m}"))).collect()
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| self.err(format!("{what}: size overflow")))?;
        let raw = self.take(bytes, what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.err(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn checked_product(dims: &[usize], r: &Reader) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| r.err(format!("dims {dims:?} overflow")))
}

fn push_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| TnError::Io(format!("value {v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn push_f64s(out: &mut Vec<u8>, data: &[f64]) {
    out.reserve(8 * data.len());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_tensor(t: &DenseTensor) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(9 + 4 * t.order() + 8 * t.len());
    out.extend_from_slice(TENSOR_MAGIC);
    out.push(FORMAT_VERSION);
    push_u32(&mut out, t.order())?;
    for &d in t.dims() {
        push_u32(&mut out, d)?;
    }
    push_f64s(&mut out, t.data());
    Ok(out)
}

pub fn decode_tensor(bytes: &[u8]) -> Result<DenseTensor> {
    let mut r = Reader::new(bytes);
    r.header(TENSOR_MAGIC)?;
    let dims = r.dims()?;
    let n = checked_product(&dims, &r)?;
    let data = r.f64s(n, "tensor payload")?;
    r.finish()?;
    DenseTensor::new(dims, data)
}

pub fn encode_network(net: &TensorNetwork) -> Result<Vec<u8>> {
    let p = net.node_count();
    let mut out = Vec::new();
    out.extend_from_slice(NETWORK_MAGIC);
    out.push(FORMAT_VERSION);
    push_u32(&mut out, p)?;
    for &d in net.dims() {
        push_u32(&mut out, d)?;
    }
    for (_, _, r) in net.ranks().edges(true) {
        push_u32(&mut out, r)?;
    }
    for core in net.cores() {
        push_f64s(&mut out, core.data());
    }
    Ok(out)
}

pub fn decode_network(bytes: &[u8]) -> Result<TensorNetwork> {
    let mut r = Reader::new(bytes);
    r.header(NETWORK_MAGIC)?;
    let dims = r.dims()?;
    let p = dims.len();
    if p == 0 {
        return Err(r.err("network with no nodes"));
    }
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            let at = r.pos;
            let rank = r.u32(&format!("rank ({i}, {j})"))?;
            if rank == 0 {
                return Err(TnError::Format {
                    offset: at,
                    message: format!("rank ({i}, {j}) is zero"),
                });
            }
            edges.push((i, j, rank));
        }
    }
    let ranks = RankMatrix::from_edges(p, &edges)?;
    let mut cores = Vec::with_capacity(p);
    for k in 0..p {
        let shape = ranks.core_dims(k, &dims);
        let n = checked_product(&shape, &r)?;
        let data = r.f64s(n, &format!("core {k}"))?;
        cores.push(DenseTensor::new(shape, data)?);
    }
    r.finish()?;
    TensorNetwork::new(ranks, dims, cores)
}

pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    fs::write(path, encode_tensor(t)?)?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    decode_tensor(&fs::read(path)?)
}

pub fn write_network(path: impl AsRef<Path>, net: &TensorNetwork) -> Result<()> {
    fs::write(path, encode_network(net)?)?;
    Ok(())
}

pub fn read_network(path: impl AsRef<Path>) -> Result<TensorNetwork> {
    decode_network(&fs::read(path)?)
}

/// Parses an index list: one observation per line, indices separated by
/// whitespace or commas. Blank lines and lines starting with `#` are skipped.
pub fn parse_indices(text: &str) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ix = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<usize>().map_err(|_| {
                    TnError::InvalidObservations(format!("line {}: bad index '{s}'", n + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(ix);
    }
    Ok(out)
}

pub fn format_indices(indices: &[Vec<usize>]) -> String {
    let mut s = String::new();
    for ix in indices {
        let parts: Vec<String> = ix.iter().map(|i| i.to_string()).collect();
        s.push_str(&parts.join(" "));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tensor_round_trip_and_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = DenseTensor::random_uniform(vec![3, 4, 5], 1.0, &mut rng).unwrap();
        assert_eq!(decode_tensor(&encode_tensor(&t).unwrap()).unwrap(), t);
        let s = DenseTensor::scalar(-2.5);
        let bytes = encode_tensor(&s).unwrap();
        assert_eq!(bytes.len(), 4 + 1 + 4 + 8);
        assert_eq!(decode_tensor(&bytes).unwrap(), s);
    }

    #[test]
    fn malformed_tensors() {
        let t = DenseTensor::zeros(vec![2, 2]).unwrap();
        let good = encode_tensor(&t).unwrap();
        let err = decode_tensor(&good[..good.len() - 3]).unwrap_err();
        match err {
            TnError::Format { offset, message } => {
                assert_eq!(offset, 17);
                assert!(message.contains("expected 32 bytes, found 29"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_tensor(&bad), Err(TnError::Format { offset: 0, .. })));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(decode_tensor(&bad), Err(TnError::Format { offset: 4, .. })));
        let mut long = good;
        long.push(0);
        assert!(decode_tensor(&long).is_err());
        assert!(decode_tensor(b"TN").is_err());
    }

    #[test]
    fn network_round_trip() {
        let ranks = RankMatrix::from_edges(4, &[(0, 1, 2), (1, 2, 3), (0, 3, 2)]).unwrap();
        let net = TensorNetwork::random(ranks, vec![3, 2, 4, 1], 5, 1.0).unwrap();
        let bytes = encode_network(&net).unwrap();
        assert_eq!(&bytes[..4], b"TNET");
        let back = decode_network(&bytes).unwrap();
        assert_eq!(back, net);
        assert!(decode_network(&bytes[..bytes.len() - 8]).is_err());
    }

    #[test]
    fn index_lists() {
        let ix = parse_indices("# header\n0 1 2\n3,4,5\n\n").unwrap();
        assert_eq!(ix, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert_eq!(parse_indices(&format_indices(&ix)).unwrap(), ix);
        assert!(parse_indices("1 x").is_err());
    }
}
