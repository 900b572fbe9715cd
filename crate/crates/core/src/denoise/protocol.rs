//! Denoiser wire protocol, version 1.
//!
//! A parent process drives a denoiser child over the child's stdin/stdout.
//! All integers are little-endian.
//!
//! ```text
//! handshake   parent -> child   "TENDNZ01"
//!             child  -> parent  "TENDNZ01"
//! request     "REQ0" u32 n1 u32 n2 u32 n3 f64 sigma  f32 x n1*n2*n3
//! response    "RSP0" u32 n1 u32 n2 u32 n3            f32 x n1*n2*n3
//! ```
//!
//! Payload values follow the tensor storage order (mode-1 fastest). Only one
//! request is in flight at a time.
//!
//! Both sides of the protocol live here so that Rust adapters can reuse
//! [`serve`].

use std::io::{self, ErrorKind, Read, Write};

use crate::tensor::Dims;

pub const HANDSHAKE: &[u8; 8] = b"TENDNZ01";
pub const REQUEST_MAGIC: &[u8; 4] = b"REQ0";
pub const RESPONSE_MAGIC: &[u8; 4] = b"RSP0";

fn protocol_error(msg: impl Into<String>) -> io::Error {
    io::Error::new(ErrorKind::InvalidData, msg.into())
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_dims(r: &mut impl Read) -> io::Result<Dims> {
    let n1 = read_u32(r)? as usize;
    let n2 = read_u32(r)? as usize;
    let n3 = read_u32(r)? as usize;
    Dims::new(n1, n2, n3).map_err(|e| protocol_error(e.to_string()))
}

fn write_dims(w: &mut impl Write, dims: Dims) -> io::Result<()> {
    for n in [dims.n1, dims.n2, dims.n3] {
        let n = u32::try_from(n).map_err(|_| protocol_error("dimension exceeds u32"))?;
        w.write_all(&n.to_le_bytes())?;
    }
    Ok(())
}

fn read_payload(r: &mut impl Read, len: usize) -> io::Result<Vec<f32>> {
    let mut bytes = vec![0u8; len * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn write_payload(w: &mut impl Write, values: impl Iterator<Item = f32>) -> io::Result<()> {
    let mut bytes = Vec::new();
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)
}

/// A decoded request.
#[derive(Clone, Debug, PartialEq)]
pub struct Request {
    pub dims: Dims,
    pub sigma: f64,
    pub values: Vec<f32>,
}

pub fn write_request(w: &mut impl Write, dims: Dims, sigma: f64, values: &[f64]) -> io::Result<()> {
    w.write_all(REQUEST_MAGIC)?;
    write_dims(w, dims)?;
    w.write_all(&sigma.to_le_bytes())?;
    write_payload(w, values.iter().map(|&v| v as f32))?;
    w.flush()
}

/// Reads one request; `Ok(None)` on a clean end of stream before the magic.
pub fn read_request(r: &mut impl Read) -> io::Result<Option<Request>> {
    let mut magic = [0u8; 4];
    match r.read(&mut magic[..1])? {
        0 => return Ok(None),
        _ => r.read_exact(&mut magic[1..])?,
    }
    if &magic != REQUEST_MAGIC {
        return Err(protocol_error(format!("bad request magic {magic:?}")));
    }
    let dims = read_dims(r)?;
    let mut sb = [0u8; 8];
    r.read_exact(&mut sb)?;
    let sigma = f64::from_le_bytes(sb);
    let values = read_payload(r, dims.len())?;
    Ok(Some(Request { dims, sigma, values }))
}

pub fn write_response(w: &mut impl Write, dims: Dims, values: &[f32]) -> io::Result<()> {
    if values.len() != dims.len() {
        return Err(protocol_error("response payload does not match dims"));
    }
    w.write_all(RESPONSE_MAGIC)?;
    write_dims(w, dims)?;
    write_payload(w, values.iter().copied())?;
    w.flush()
}

/// Reads a response and checks that it echoes `expected` dims.
pub fn read_response(r: &mut impl Read, expected: Dims) -> io::Result<Vec<f32>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != RESPONSE_MAGIC {
        return Err(protocol_error(format!("bad response magic {magic:?}")));
    }
    let dims = read_dims(r)?;
    if dims != expected {
        return Err(protocol_error(format!(
            "response dims {dims} do not echo request dims {expected}"
        )));
    }
    read_payload(r, dims.len())
}

/// Child side: answers the handshake, then calls `handler` for every request
/// until the parent closes the stream.
pub fn serve<R, W, F>(mut input: R, mut output: W, mut handler: F) -> io::Result<()>
where
    R: Read,
    W: Write,
    F: FnMut(&Request) -> Vec<f32>,
{
    let mut hello = [0u8; 8];
    input.read_exact(&mut hello)?;
    if &hello != HANDSHAKE {
        return Err(protocol_error("bad handshake"));
    }
    output.write_all(HANDSHAKE)?;
    output.flush()?;
    while let Some(req) = read_request(&mut input)? {
        let out = handler(&req);
        write_response(&mut output, req.dims, &out)?;
    }
    Ok(())
}
