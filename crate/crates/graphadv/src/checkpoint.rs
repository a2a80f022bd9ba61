//! Binary container of named tensors.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic  b"GADVTNSR"
//! u32    version (1)
//! u32    tensor count
//! per tensor, in name order:
//!   u32 name length, name bytes (UTF-8)
//!   u32 rank, rank x u64 dims
//!   prod(dims) x f64
//! ```

use std::path::Path;

use graphadv_core::params::{ParamStore, Tensor};

use crate::error::{self, HarnessError, Result};

pub const MAGIC: &[u8; 8] = b"GADVTNSR";
pub const VERSION: u32 = 1;

pub fn encode(params: &ParamStore) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * params.num_scalars());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, t) in params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for x in t.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or("truncated checkpoint")?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn decode_inner(buf: &[u8]) -> std::result::Result<ParamStore, String> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err("not a tensor checkpoint (bad magic)".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let count = r.u32()?;
    let mut params = ParamStore::new();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?).map_err(|_| "tensor name is not UTF-8")?.to_string();
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<std::result::Result<Vec<_>, _>>()?;
        let size = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or("tensor size overflows")?;
        let bytes = r.take(size.checked_mul(8).ok_or("tensor size overflows")?)?;
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let t = Tensor::from_vec(&shape, data).map_err(|e| e.to_string())?;
        params.insert(&name, t).map_err(|e| e.to_string())?;
    }
    if r.pos != buf.len() {
        return Err(format!("{} trailing bytes", buf.len() - r.pos));
    }
    Ok(params)
}

pub fn decode(buf: &[u8], path: &Path) -> Result<ParamStore> {
    decode_inner(buf).map_err(|m| HarnessError::format(path, m))
}

pub fn save(path: &Path, params: &ParamStore) -> Result<()> {
    error::write(path, encode(params))
}

pub fn load(path: &Path) -> Result<ParamStore> {
    decode(&error::read_bytes(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use graphadv_core::gnn::{GnnConfig, GnnModel};
    use proptest::prelude::*;

    #[test]
    fn byte_layout() {
        let mut p = ParamStore::new();
        p.insert("w", Tensor::from_vec(&[1, 2], vec![1.0, -0.5]).unwrap()).unwrap();
        let b = encode(&p);
        assert_eq!(&b[..8], MAGIC);
        assert_eq!(&b[8..12], &[1, 0, 0, 0]);
        assert_eq!(&b[12..16], &[1, 0, 0, 0]);
        assert_eq!(&b[16..20], &[1, 0, 0, 0]);
        assert_eq!(b[20], b'w');
        assert_eq!(&b[21..25], &[2, 0, 0, 0]);
        assert_eq!(&b[25..33], &1u64.to_le_bytes());
        assert_eq!(&b[33..41], &2u64.to_le_bytes());
        assert_eq!(&b[41..49], &1.0f64.to_le_bytes());
        assert_eq!(&b[49..57], &(-0.5f64).to_le_bytes());
        assert_eq!(b.len(), 57);
    }

    #[test]
    fn model_parameters_round_trip_exactly() {
        let m = GnnModel::init(GnnConfig::s2v(3, 8, 3), 4).unwrap();
        let back = decode(&encode(&m.params), Path::new("m")).unwrap();
        assert_eq!(back, m.params);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let m = GnnModel::init(GnnConfig::s2v(1, 2, 2), 0).unwrap();
        let good = encode(&m.params);
        let p = Path::new("m");
        assert!(decode(&good[..good.len() - 1], p).is_err());
        let mut extra = good.clone();
        extra.push(0);
        assert!(decode(&extra, p).is_err());
        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(decode(&magic, p).is_err());
        let mut version = good;
        version[8] = 9;
        assert!(decode(&version, p).unwrap_err().to_string().contains("version 9"));
    }

    proptest! {
        #[test]
        fn arbitrary_stores_round_trip(values in proptest::collection::vec(proptest::num::f64::ANY, 1..40), split in 0usize..40) {
            let split = split % values.len();
            let mut p = ParamStore::new();
            p.insert("a.b", Tensor::from_vec(&[split], values[..split].to_vec()).unwrap()).unwrap();
            p.insert("z", Tensor::from_vec(&[values.len() - split, 1], values[split..].to_vec()).unwrap()).unwrap();
            let back = decode(&encode(&p), Path::new("p")).unwrap();
            for ((n1, t1), (n2, t2)) in p.iter().zip(back.iter()) {
                prop_assert_eq!(n1, n2);
                prop_assert_eq!(t1.shape(), t2.shape());
                let bits = |t: &Tensor| t.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                prop_assert_eq!(bits(t1), bits(t2));
            }
        }
    }
}
