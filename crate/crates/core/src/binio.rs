//! Little-endian primitives for the binary checkpoint formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::vocab::Vocabulary;

pub(crate) fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_usize<R: Read>(r: &mut R, what: &str, limit: u64) -> Result<usize> {
    let v = read_u64(r)?;
    if v > limit {
        return Err(Error::format(format!("{what} {v} exceeds limit {limit}")));
    }
    Ok(v as usize)
}

pub(crate) fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    write_u64(w, s.len() as u64)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub(crate) fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = read_usize(r, "string length", 1 << 20)?;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::format("string is not valid UTF-8"))
}

pub(crate) fn write_magic<W: Write>(w: &mut W, magic: &[u8]) -> Result<()> {
    w.write_all(magic)?;
    Ok(())
}

pub(crate) fn expect_magic<R: Read>(r: &mut R, magic: &[u8]) -> Result<()> {
    let mut buf = vec![0u8; magic.len()];
    r.read_exact(&mut buf)?;
    if buf != magic {
        return Err(Error::format(format!(
            "bad magic header: expected {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

pub(crate) fn write_matrix<W: Write>(w: &mut W, m: &Matrix<f32>) -> Result<()> {
    let mut buf = Vec::with_capacity(m.as_slice().len() * 4);
    for x in m.as_slice() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub(crate) fn read_matrix<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<Matrix<f32>> {
    let mut bytes = vec![0u8; rows * cols * 4];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Matrix::from_vec(rows, cols, data))
}

pub(crate) fn write_vocab<W: Write>(w: &mut W, vocab: &Vocabulary) -> Result<()> {
    write_u64(w, vocab.len() as u64)?;
    write_u64(w, vocab.min_count())?;
    write_u64(w, vocab.total_tokens())?;
    for (word, count) in vocab.iter() {
        write_str(w, word)?;
        write_u64(w, count)?;
    }
    Ok(())
}

pub(crate) fn read_vocab<R: Read>(r: &mut R) -> Result<Vocabulary> {
    let len = read_usize(r, "vocabulary size", 1 << 32)?;
    let min_count = read_u64(r)?;
    let total = read_u64(r)?;
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        let w = read_str(r)?;
        let c = read_u64(r)?;
        words.push((w, c));
    }
    Vocabulary::from_counts(words, min_count, total)
}

/// Fails unless the reader is exhausted.
pub(crate) fn expect_eof<R: Read>(r: &mut R) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(Error::format("trailing bytes after checkpoint payload")),
    }
}
