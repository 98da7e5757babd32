//! Binary container for tensors and factor sets, plus a JSON export.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "NLML"            4 bytes magic
//! version           u32 (currently 1)
//! kind              u32 (1 = tensor, 2 = factor set)
//! tensor block      u32 order, order x u64 dims, prod(dims) x f64 (mode-1 fastest)
//! factor set        tensor block (core), order x matrix block, order x spectrum block,
//!                   tensor block (w)
//! matrix block      u64 rows, u64 cols, rows*cols x f64 row-major
//! spectrum block    u32 mode, u64 len, len x f64
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::hosvd::{FactorSet, ModeSpectrum};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"NLML";
pub const FORMAT_VERSION: u32 = 1;
const KIND_TENSOR: u32 = 1;
const KIND_FACTORSET: u32 = 2;
// guards against absurd allocations from corrupt headers
const MAX_ELEMENTS: u64 = 1 << 32;

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn map_eof(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        fmt_err("truncated container")
    } else {
        Error::Io(e)
    }
}

fn write_header<W: Write>(w: &mut W, kind: u32) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    w.write_u32::<LittleEndian>(kind)?;
    Ok(())
}

fn read_header<R: Read>(r: &mut R, want: u32) -> Result<()> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(map_eof)?;
    if &magic != MAGIC {
        return Err(fmt_err("bad magic bytes"));
    }
    let version = r.read_u32::<LittleEndian>().map_err(map_eof)?;
    if version != FORMAT_VERSION {
        return Err(fmt_err(format!("unsupported format version {version}")));
    }
    let kind = r.read_u32::<LittleEndian>().map_err(map_eof)?;
    if kind != want {
        return Err(fmt_err(format!("container kind {kind}, expected {want}")));
    }
    Ok(())
}

fn write_values<W: Write, T: Scalar>(w: &mut W, xs: &[T]) -> Result<()> {
    for &x in xs {
        w.write_f64::<LittleEndian>(x.as_f64())?;
    }
    Ok(())
}

fn read_values<R: Read, T: Scalar>(r: &mut R, n: u64) -> Result<Vec<T>> {
    if n > MAX_ELEMENTS {
        return Err(fmt_err(format!("element count {n} too large")));
    }
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let v = r.read_f64::<LittleEndian>().map_err(map_eof)?;
        out.push(T::lit(v));
    }
    Ok(out)
}

fn write_tensor_block<W: Write, T: Scalar>(w: &mut W, t: &Tensor<T>) -> Result<()> {
    w.write_u32::<LittleEndian>(t.order() as u32)?;
    for &d in t.dims() {
        w.write_u64::<LittleEndian>(d as u64)?;
    }
    write_values(w, t.as_slice())
}

fn read_tensor_block<R: Read, T: Scalar>(r: &mut R) -> Result<Tensor<T>> {
    let order = r.read_u32::<LittleEndian>().map_err(map_eof)?;
    if order == 0 || order > 16 {
        return Err(fmt_err(format!("tensor order {order}")));
    }
    let mut dims = Vec::with_capacity(order as usize);
    let mut total: u64 = 1;
    for _ in 0..order {
        let d = r.read_u64::<LittleEndian>().map_err(map_eof)?;
        total = total.checked_mul(d).ok_or_else(|| fmt_err("dims overflow"))?;
        dims.push(d as usize);
    }
    let data = read_values(r, total)?;
    Tensor::from_vec(&dims, data).map_err(|e| fmt_err(e.to_string()))
}

fn write_matrix_block<W: Write, T: Scalar>(w: &mut W, m: &Matrix<T>) -> Result<()> {
    w.write_u64::<LittleEndian>(m.rows() as u64)?;
    w.write_u64::<LittleEndian>(m.cols() as u64)?;
    write_values(w, m.as_slice())
}

fn read_matrix_block<R: Read, T: Scalar>(r: &mut R) -> Result<Matrix<T>> {
    let rows = r.read_u64::<LittleEndian>().map_err(map_eof)?;
    let cols = r.read_u64::<LittleEndian>().map_err(map_eof)?;
    let n = rows.checked_mul(cols).ok_or_else(|| fmt_err("matrix size overflow"))?;
    let data = read_values(r, n)?;
    Matrix::from_vec(rows as usize, cols as usize, data)
}

pub fn write_tensor<W: Write, T: Scalar>(w: &mut W, t: &Tensor<T>) -> Result<()> {
    write_header(w, KIND_TENSOR)?;
    write_tensor_block(w, t)
}

pub fn read_tensor<R: Read, T: Scalar>(r: &mut R) -> Result<Tensor<T>> {
    read_header(r, KIND_TENSOR)?;
    read_tensor_block(r)
}

pub fn write_factorset<W: Write, T: Scalar>(w: &mut W, f: &FactorSet<T>) -> Result<()> {
    write_header(w, KIND_FACTORSET)?;
    w.write_u32::<LittleEndian>(f.order() as u32)?;
    write_tensor_block(w, &f.core)?;
    for a in &f.factors {
        write_matrix_block(w, a)?;
    }
    for s in &f.spectra {
        w.write_u32::<LittleEndian>(s.mode as u32)?;
        w.write_u64::<LittleEndian>(s.singular_values.len() as u64)?;
        write_values(w, &s.singular_values)?;
    }
    write_tensor_block(w, &f.w)
}

pub fn read_factorset<R: Read, T: Scalar>(r: &mut R) -> Result<FactorSet<T>> {
    read_header(r, KIND_FACTORSET)?;
    let order = r.read_u32::<LittleEndian>().map_err(map_eof)? as usize;
    if order == 0 || order > 16 {
        return Err(fmt_err(format!("factor set order {order}")));
    }
    let core = read_tensor_block(r)?;
    let factors = (0..order).map(|_| read_matrix_block(r)).collect::<Result<Vec<_>>>()?;
    let mut spectra = Vec::with_capacity(order);
    for _ in 0..order {
        let mode = r.read_u32::<LittleEndian>().map_err(map_eof)? as usize;
        let len = r.read_u64::<LittleEndian>().map_err(map_eof)?;
        spectra.push(ModeSpectrum { mode, singular_values: read_values(r, len)? });
    }
    let w = read_tensor_block(r)?;
    let f = FactorSet { core, factors, spectra, w };
    f.validate().map_err(|e| fmt_err(e.to_string()))?;
    Ok(f)
}

/// Structured-text view of a factor set, for debugging and external tools.
pub fn factorset_to_json<T: Scalar>(f: &FactorSet<T>) -> serde_json::Value {
    let as_f64 = |xs: &[T]| xs.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
    serde_json::json!({
        "format": "NLML",
        "version": FORMAT_VERSION,
        "kind": "factorset",
        "core": { "dims": f.core.dims(), "data": as_f64(f.core.as_slice()) },
        "factors": f.factors.iter().map(|a| serde_json::json!({
            "rows": a.rows(), "cols": a.cols(), "data": as_f64(a.as_slice())
        })).collect::<Vec<_>>(),
        "spectra": f.spectra.iter().map(|s| serde_json::json!({
            "mode": s.mode, "singular_values": as_f64(&s.singular_values)
        })).collect::<Vec<_>>(),
        "w": { "dims": f.w.dims(), "data": as_f64(f.w.as_slice()) },
    })
}

pub fn tensor_to_json<T: Scalar>(t: &Tensor<T>) -> serde_json::Value {
    serde_json::json!({
        "format": "NLML",
        "version": FORMAT_VERSION,
        "kind": "tensor",
        "dims": t.dims(),
        "data": t.as_slice().iter().map(|x| x.as_f64()).collect::<Vec<f64>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multilinear::hosvd;

    fn sample() -> Tensor<f64> {
        Tensor::from_fn(&[2, 3, 2, 2, 4], |idx| {
            idx.iter().enumerate().map(|(k, &i)| ((k + 2) * (i + 1)) as f64).sum::<f64>().cos()
        })
    }

    #[test]
    fn factorset_round_trip() {
        let f = hosvd(&sample(), &[2, 2, 2, 2, 4]).unwrap();
        let mut buf = Vec::new();
        write_factorset(&mut buf, &f).unwrap();
        assert_eq!(&buf[..4], b"NLML");
        let back: FactorSet<f64> = read_factorset(&mut buf.as_slice()).unwrap();
        assert_eq!(back, f);
        let json = factorset_to_json(&f);
        assert_eq!(json["core"]["dims"][4], 4);
    }

    #[test]
    fn corrupt_containers_are_format_errors() {
        let t = sample();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t).unwrap();
        let back: Tensor<f64> = read_tensor(&mut buf.as_slice()).unwrap();
        assert_eq!(back, t);

        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(read_tensor::<_, f64>(&mut &truncated[..]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_tensor::<_, f64>(&mut bad.as_slice()), Err(Error::Format(_))));
        // a tensor is not a factor set
        assert!(matches!(read_factorset::<_, f64>(&mut buf.as_slice()), Err(Error::Format(_))));
    }
}
