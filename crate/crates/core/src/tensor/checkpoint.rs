//! Binary serialization of parameter tensors.
//!
//! Section layout, all integers little-endian:
//!
//! ```text
//! magic   b"VCKP"
//! version u32 (currently 1)
//! count   u32
//! entry*  name_len u32, name utf-8, rank u32, dims u32 × rank,
//!         payload f64 × product(dims) (row-major)
//! ```

use std::io::{self, Read, Write};

use super::{ParamSet, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"VCKP";
const VERSION: u32 = 1;

pub fn write_tensor_section<W: Write>(w: &mut W, params: &ParamSet) -> io::Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, tensor) in params.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(tensor.shape().len() as u32).to_le_bytes())?;
        for &d in tensor.shape() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &x in tensor.data() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_tensor_section<R: Read>(r: &mut R) -> io::Result<ParamSet> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad_data("not a parameter checkpoint (bad magic)"));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(bad_data(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let count = read_u32(r)? as usize;
    let mut params = ParamSet::new();
    for _ in 0..count {
        let name_len = read_u32(r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| bad_data("tensor name not utf-8"))?;
        let rank = read_u32(r)? as usize;
        if rank == 0 || rank > 2 {
            return Err(bad_data(format!("tensor {name} has rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(r)? as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = vec![0.0f64; numel];
        let mut buf = [0u8; 8];
        for x in data.iter_mut() {
            r.read_exact(&mut buf)?;
            *x = f64::from_le_bytes(buf);
        }
        let tensor = Tensor::new(shape, data).map_err(|e| bad_data(e.to_string()))?;
        params.insert(name, tensor);
    }
    Ok(params)
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn bad_data(msg: impl ToString) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}
