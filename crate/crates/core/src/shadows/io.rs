//! Line-delimited shadow files.
//!
//! Line 1 is a JSON header, then one JSON record per snapshot, then a
//! trailing `{"crc64": "<hex>"}` line holding the CRC-64/XZ of every byte
//! before it. Bitstrings and basis strings list qubit 0 first.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use crc::{Crc, CRC_64_XZ};
use serde::{Deserialize, Serialize};

use super::{
    CliffordSnapshot, InputDescription, PauliBasis, PauliSnapshot, ShadowKind, ShadowMeta, ShadowSet, Snapshots,
    Tableau,
};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    kind: ShadowKind,
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    seed: u64,
    input_state: Option<InputDescription>,
    target: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PauliLine {
    b: String,
    o: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CliffordLine {
    t: String,
    o: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Footer {
    crc64: String,
}

fn bitstring(bits: u64, n: usize) -> String {
    (0..n).map(|q| if (bits >> q) & 1 == 1 { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str, n: usize) -> Result<u64> {
    if s.chars().count() != n {
        return Err(Error::Integrity(format!("bitstring {s:?} does not have {n} characters")));
    }
    s.chars().enumerate().try_fold(0u64, |acc, (q, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | (1 << q)),
        other => Err(Error::Integrity(format!("bad outcome character {other:?}"))),
    })
}

fn integrity<E: std::fmt::Display>(what: &'static str) -> impl Fn(E) -> Error {
    move |e| Error::Integrity(format!("{what}: {e}"))
}

/// Serializes a shadow to the file format, checksum included.
pub fn shadow_to_bytes(shadow: &ShadowSet) -> Vec<u8> {
    let n = shadow.num_qubits();
    let header = Header {
        format_version: FORMAT_VERSION,
        kind: shadow.kind(),
        n,
        m: shadow.len(),
        seed: shadow.meta.seed,
        input_state: shadow.meta.input_state.clone(),
        target: shadow.meta.target.clone(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    match shadow.snapshots() {
        Snapshots::Pauli(snaps) => {
            for s in snaps {
                let line = PauliLine { b: s.bases.iter().map(|b| b.as_char()).collect(), o: bitstring(s.bits, n) };
                serde_json::to_writer(&mut out, &line).expect("record serializes");
                out.push(b'\n');
            }
        }
        Snapshots::Clifford(snaps) => {
            for s in snaps {
                let line = CliffordLine { t: B64.encode(s.tableau.to_bytes()), o: bitstring(s.bits, n) };
                serde_json::to_writer(&mut out, &line).expect("record serializes");
                out.push(b'\n');
            }
        }
    }
    let footer = Footer { crc64: format!("{:016x}", CRC64.checksum(&out)) };
    serde_json::to_writer(&mut out, &footer).expect("footer serializes");
    out.push(b'\n');
    out
}

/// Parses and verifies a shadow file image.
pub fn shadow_from_bytes(bytes: &[u8]) -> Result<ShadowSet> {
    let body = bytes.strip_suffix(b"\n").ok_or_else(|| Error::Integrity("file is truncated".into()))?;
    let split = body.iter().rposition(|&c| c == b'\n').ok_or_else(|| Error::Integrity("file is truncated".into()))?;
    let (payload, footer) = (&bytes[..=split], &body[split + 1..]);
    let footer: Footer =
        serde_json::from_slice(footer).map_err(|_| Error::Integrity("missing checksum line; file is truncated".into()))?;
    let expected = u64::from_str_radix(&footer.crc64, 16).map_err(integrity("malformed checksum"))?;
    if CRC64.checksum(payload) != expected {
        return Err(Error::Integrity("checksum mismatch".into()));
    }
    let text = std::str::from_utf8(payload).map_err(integrity("file is not UTF-8"))?;
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| Error::Integrity("missing header".into()))?;
    let version: serde_json::Value = serde_json::from_str(head).map_err(integrity("malformed header"))?;
    let v = version.get("format_version").and_then(|v| v.as_u64());
    if v != Some(u64::from(FORMAT_VERSION)) {
        return Err(Error::Integrity(format!("unsupported format version {v:?}, expected {FORMAT_VERSION}")));
    }
    let header: Header = serde_json::from_str(head).map_err(integrity("malformed header"))?;
    let n = header.n;
    if n == 0 || n > 64 {
        return Err(Error::Integrity(format!("header qubit count {n} is out of range")));
    }
    let records: Vec<&str> = lines.collect();
    if records.len() != header.m {
        return Err(Error::Integrity(format!("header declares {} snapshots, found {}", header.m, records.len())));
    }
    let snapshots = match header.kind {
        ShadowKind::Pauli => Snapshots::Pauli(
            records
                .iter()
                .map(|r| {
                    let l: PauliLine = serde_json::from_str(r).map_err(integrity("malformed Pauli record"))?;
                    let bases = l
                        .b
                        .chars()
                        .map(PauliBasis::from_char)
                        .collect::<Result<Vec<_>>>()
                        .map_err(integrity("bad basis"))?;
                    if bases.len() != n {
                        return Err(Error::Integrity(format!("basis string {:?} does not have {n} characters", l.b)));
                    }
                    Ok(PauliSnapshot { bases, bits: parse_bits(&l.o, n)? })
                })
                .collect::<Result<_>>()?,
        ),
        ShadowKind::Clifford => Snapshots::Clifford(
            records
                .iter()
                .map(|r| {
                    let l: CliffordLine = serde_json::from_str(r).map_err(integrity("malformed Clifford record"))?;
                    let raw = B64.decode(&l.t).map_err(integrity("bad tableau encoding"))?;
                    let tableau = Tableau::from_bytes(n, &raw).map_err(integrity("invalid tableau"))?;
                    Ok(CliffordSnapshot { tableau, bits: parse_bits(&l.o, n)? })
                })
                .collect::<Result<_>>()?,
        ),
    };
    let meta = ShadowMeta { input_state: header.input_state, target: header.target, seed: header.seed };
    ShadowSet::new(n, snapshots, meta).map_err(integrity("inconsistent shadow"))
}

pub fn write_shadow(shadow: &ShadowSet, path: &Path) -> Result<()> {
    fs::write(path, shadow_to_bytes(shadow))?;
    Ok(())
}

pub fn read_shadow(path: &Path) -> Result<ShadowSet> {
    shadow_from_bytes(&fs::read(path)?)
}

/// Reads a shadow file and checks it holds the expected kind.
pub fn read_shadow_expecting(path: &Path, kind: ShadowKind) -> Result<ShadowSet> {
    let s = read_shadow(path)?;
    if s.kind() != kind {
        return Err(Error::KindMismatch { expected: kind.to_string(), found: s.kind().to_string() });
    }
    Ok(s)
}
