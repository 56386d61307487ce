//! On-disk formats: `NSRS` snapshots, checksummed manifests, key=value
//! configs, atomic writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, Snapshot, SpaceTimeSlab, VectorField};

pub const MAGIC: &[u8; 4] = b"NSRS";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

pub const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Exact file size for an `n³` snapshot.
pub fn snapshot_len(n: usize) -> usize {
    HEADER_LEN + 4 * n * n * n * 8
}

pub fn encode_snapshot(snap: &Snapshot) -> Vec<u8> {
    let g = snap.grid();
    let mut out = Vec::with_capacity(snapshot_len(g.n()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&g.box_length().to_le_bytes());
    out.extend_from_slice(&snap.time().to_le_bytes());
    let v = snap.velocity();
    for f in [v.component(0), v.component(1), v.component(2), snap.pressure()] {
        for x in f.values() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("snapshot is {} bytes, shorter than its header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &bytes[..4])));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let n = u32_at(8) as usize;
    let expected = n
        .checked_pow(3)
        .and_then(|c| c.checked_mul(32))
        .and_then(|c| c.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(Error::Format(format!(
            "payload is {} bytes, n = {n} needs {}",
            bytes.len(),
            expected.map_or("more than usize".to_string(), |e| e.to_string())
        )));
    }
    let grid = Grid::new(n, f64_at(12)).map_err(|e| Error::Format(format!("bad grid header: {e}")))?;
    let time = f64_at(20);
    let m = n * n * n;
    let read = |slot: usize| -> Result<ScalarField> {
        let start = HEADER_LEN + slot * m * 8;
        let vals = bytes[start..start + m * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        ScalarField::new(grid, vals)
    };
    let v = VectorField::new([read(0)?, read(1)?, read(2)?])?;
    Snapshot::new(time, v, read(3)?)
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<u64> {
    let bytes = encode_snapshot(snap);
    write_atomic(path, &bytes)?;
    Ok(fnv1a(&bytes))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    decode_snapshot(&fs::read(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub time: f64,
    /// FNV-1a of the whole file, 16 hex digits.
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub box_length: f64,
    pub entries: Vec<ManifestEntry>,
}

pub fn checksum_hex(c: u64) -> String {
    format!("{c:016x}")
}

fn parse_checksum(s: &str) -> Result<u64> {
    u64::from_str_radix(s, 16).map_err(|_| Error::Format(format!("bad checksum `{s}`")))
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        if self.format != "NSRS" || self.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "manifest describes {} v{}, expected NSRS v{FORMAT_VERSION}",
                self.format, self.version
            )));
        }
        if self.entries.is_empty() {
            return Err(Error::Format("manifest lists no snapshots".into()));
        }
        if self.entries.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::Format("manifest times are not strictly increasing".into()));
        }
        for e in &self.entries {
            parse_checksum(&e.checksum)?;
        }
        Ok(())
    }
}

/// Writes every snapshot next to `manifest_path` as `<stem>_NNNNN.nsrs`, then
/// the manifest itself.
pub fn write_series(manifest_path: &Path, snapshots: &[Snapshot]) -> Result<Manifest> {
    let first = snapshots
        .first()
        .ok_or_else(|| Error::Format("nothing to write".into()))?;
    let dir = manifest_path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let stem = manifest_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "snap".into());
    let entries = snapshots
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let name = format!("{stem}_{i:05}.nsrs");
            let sum = write_snapshot(&dir.join(&name), s)?;
            Ok(ManifestEntry {
                path: name,
                time: s.time(),
                checksum: checksum_hex(sum),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        format: "NSRS".into(),
        version: FORMAT_VERSION,
        n: first.grid().n(),
        box_length: first.grid().box_length(),
        entries,
    };
    manifest.validate()?;
    write_atomic(manifest_path, &manifest_bytes(&manifest)?)?;
    Ok(manifest)
}

pub fn manifest_bytes(m: &Manifest) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(m)?;
    s.push(b'\n');
    Ok(s)
}

pub fn read_manifest(path: &Path) -> Result<(Manifest, u64)> {
    let bytes = fs::read(path)?;
    let m: Manifest = serde_json::from_slice(&bytes)?;
    m.validate()?;
    Ok((m, fnv1a(&bytes)))
}

fn entry_path(manifest_path: &Path, e: &ManifestEntry) -> PathBuf {
    manifest_path.parent().unwrap_or(Path::new(".")).join(&e.path)
}

/// Loads every listed snapshot, checking checksums, times and grids.
pub fn load_series(manifest_path: &Path) -> Result<(Manifest, u64, Vec<Snapshot>)> {
    let (m, digest) = read_manifest(manifest_path)?;
    let snaps = m
        .entries
        .iter()
        .map(|e| {
            let path = entry_path(manifest_path, e);
            let bytes = fs::read(&path)?;
            let expected = parse_checksum(&e.checksum)?;
            let found = fnv1a(&bytes);
            if found != expected {
                return Err(Error::Checksum { path, expected, found });
            }
            let s = decode_snapshot(&bytes)?;
            if s.time() != e.time || s.grid().n() != m.n || s.grid().box_length() != m.box_length {
                return Err(Error::Format(format!(
                    "{} disagrees with its manifest entry (time or grid)",
                    path.display()
                )));
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((m, digest, snaps))
}

pub fn load_slab(manifest_path: &Path) -> Result<(Manifest, u64, SpaceTimeSlab)> {
    let (m, d, snaps) = load_series(manifest_path)?;
    Ok((m, d, SpaceTimeSlab::new(snaps)?))
}

/// Plain-text `key = value` config with `#` comments. Keeps the raw text
/// for echoing into reports.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyValues {
    pub raw: String,
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config {
                    key: line.to_string(),
                    msg: format!("line {} is not `key = value`", no + 1),
                });
            };
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() {
                return Err(Error::Config { key: k, msg: format!("empty key on line {}", no + 1) });
            }
            if entries.insert(k.clone(), (no + 1, v)).is_some() {
                return Err(Error::Config { key: k, msg: "given twice".into() });
            }
        }
        Ok(KeyValues { raw: text.to_string(), entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config {
            key: path.display().to_string(),
            msg: format!("cannot read config: {e}"),
        })?;
        Self::parse(&text)
    }

    /// Errors on the first key not in `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::Config {
                key: k.clone(),
                msg: format!("unknown key (expected one of {})", allowed.join(", ")),
            }),
            None => Ok(()),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Config {
            key: key.to_string(),
            msg: "missing".into(),
        })
    }

    pub fn parse_as<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>().map_err(|_| Error::Config {
                    key: key.to_string(),
                    msg: format!("cannot parse `{v}`"),
                })
            })
            .transpose()
    }

    pub fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.require(key)?;
        Ok(self.parse_as(key)?.expect("present"))
    }

    /// Comma- or whitespace-separated list of numbers.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>().map_err(|_| Error::Config {
                            key: key.to_string(),
                            msg: format!("`{s}` is not a number"),
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    /// `;`-separated list of 3-vectors, e.g. `0,0,0; 1,0,0`.
    pub fn points(&self, key: &str) -> Result<Option<Vec<[f64; 3]>>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        v.split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|p| {
                let xs: Vec<f64> = p
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Config {
                        key: key.to_string(),
                        msg: format!("`{}` is not a point", p.trim()),
                    })?;
                <[f64; 3]>::try_from(xs).map_err(|_| Error::Config {
                    key: key.to_string(),
                    msg: format!("`{}` does not have three coordinates", p.trim()),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}
