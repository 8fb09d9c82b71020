//! `PFCK` checkpoints: model parameters plus optional optimizer state.
//!
//! ```text
//! "PFCK" u32 version | u32 c_max | u32 hidden | u64 seed | u32 epoch | u64 config_hash
//! f32 × |group| for each parameter group, in declaration order
//! u8 has_optimizer
//!   u64 step | f64 beta1 beta2 eps weight_decay | u8 has_clip f64 clip_norm
//!   f64 × |group| first moments, then f64 × |group| second moments, per group
//! ```
//! All integers and floats are little-endian.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::optim::{AdamWConfig, AdamWState};

pub const MAGIC: &[u8; 4] = b"PFCK";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub seed: u64,
    pub epoch: u32,
    pub config_hash: u64,
    pub optimizer: Option<AdamWState>,
}

/// Header fields, readable without decoding the parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub version: u32,
    pub c_max: usize,
    pub hidden: usize,
    pub seed: u64,
    pub epoch: u32,
    pub config_hash: u64,
}

const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 4 + 8;

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * p.param_count() + 1);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(p.c_max as u32).to_le_bytes());
        out.extend_from_slice(&(p.hidden as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.epoch.to_le_bytes());
        out.extend_from_slice(&self.config_hash.to_le_bytes());
        for g in p.groups() {
            for v in g {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        match &self.optimizer {
            None => out.push(0),
            Some(st) => {
                out.push(1);
                out.extend_from_slice(&st.step.to_le_bytes());
                let h = &st.hyper;
                for v in [h.beta1, h.beta2, h.eps, h.weight_decay] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                out.push(h.clip_norm.is_some() as u8);
                out.extend_from_slice(&h.clip_norm.unwrap_or(0.0).to_le_bytes());
                for (m, v) in st.m.iter().zip(&st.v) {
                    for x in m.iter().chain(v) {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = read_header(bytes)?;
        let mut r = Reader { bytes, pos: HEADER_LEN };
        let mut params = ModelParams::zeros(header.c_max, header.hidden);
        for g in params.groups_mut() {
            for v in g.iter_mut() {
                *v = f32::from_le_bytes(r.take()?);
            }
        }
        let optimizer = match r.take::<1>()?[0] {
            0 => None,
            1 => {
                let step = u64::from_le_bytes(r.take()?);
                let mut f = || r.take().map(f64::from_le_bytes);
                let (beta1, beta2, eps, weight_decay) = (f()?, f()?, f()?, f()?);
                let has_clip = r.take::<1>()?[0] != 0;
                let clip = f64::from_le_bytes(r.take()?);
                let hyper = AdamWConfig {
                    beta1,
                    beta2,
                    eps,
                    weight_decay,
                    clip_norm: has_clip.then_some(clip),
                };
                let sizes: Vec<usize> = params.groups().iter().map(|g| g.len()).collect();
                let mut st = AdamWState::with_sizes(&sizes, hyper);
                st.step = step;
                for g in 0..sizes.len() {
                    for x in st.m[g].iter_mut() {
                        *x = f64::from_le_bytes(r.take()?);
                    }
                    for x in st.v[g].iter_mut() {
                        *x = f64::from_le_bytes(r.take()?);
                    }
                }
                Some(st)
            }
            other => {
                return Err(Error::format(
                    r.pos as u64 - 1,
                    format!("optimizer flag must be 0 or 1, got {other}"),
                ))
            }
        };
        if r.pos != bytes.len() {
            return Err(Error::format(r.pos as u64, "trailing bytes after checkpoint"));
        }
        Ok(Self {
            params,
            seed: header.seed,
            epoch: header.epoch,
            config_hash: header.config_hash,
            optimizer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        super::atomic_write(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + N)
            .ok_or_else(|| Error::format(self.bytes.len() as u64, "checkpoint truncated"))?;
        self.pos += N;
        Ok(s.try_into().expect("length checked"))
    }
}

pub fn read_header(bytes: &[u8]) -> Result<CheckpointHeader> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::format(0, "bad magic, expected PFCK"));
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = u32::from_le_bytes(r.take()?);
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported checkpoint version {version}")));
    }
    let c_max = u32::from_le_bytes(r.take()?) as usize;
    let hidden = u32::from_le_bytes(r.take()?) as usize;
    if c_max == 0 || hidden == 0 || c_max > 4096 || hidden > 4096 {
        return Err(Error::format(8, format!("implausible layer sizes {c_max}/{hidden}")));
    }
    Ok(CheckpointHeader {
        version,
        c_max,
        hidden,
        seed: u64::from_le_bytes(r.take()?),
        epoch: u32::from_le_bytes(r.take()?),
        config_hash: u64::from_le_bytes(r.take()?),
    })
}
