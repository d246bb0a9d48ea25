//! Binary checkpoint layout (all integers little-endian):
//!
//! ```text
//! "GCMT" | version u32 | meta_len u32 | meta (JSON, meta_len bytes)
//! | n_tensors u32 | n_tensors x (name_len u32 | name | rank u32 | rank x dim u64 | f64 data)
//! | crc32 u32 over every preceding byte
//! ```
//!
//! Tensors appear as model parameters in canonical order, then `adam.m.<name>`
//! and `adam.v.<name>` for each parameter.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::trainer::{PhasePlan, Progress, TrainConfig, Trainer};
use crate::data::AugmentPolicy;
use crate::error::{Error, Result};
use crate::model::{Architecture, MultiTaskNet};
use crate::nn::{ParamSet, Rng, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"GCMT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub architecture: Architecture,
    pub train: TrainConfig,
    pub augment: AugmentPolicy,
    pub plan: PhasePlan,
    pub progress: Progress,
    pub seed: u64,
    pub config_hash: String,
    /// Identifies the normalization statistics the model was trained under.
    pub norm_stats: String,
    pub adam_t: u64,
    pub shuffle_rng: [u64; 4],
    pub augment_rng: [u64; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub params: ParamSet,
    pub adam_m: ParamSet,
    pub adam_v: ParamSet,
}

impl Trainer {
    pub fn checkpoint(&self, norm_stats: &str) -> Checkpoint {
        Checkpoint {
            meta: CheckpointMeta {
                architecture: self.net.architecture().clone(),
                train: self.cfg.clone(),
                augment: self.policy.clone(),
                plan: self.plan.clone(),
                progress: self.progress,
                seed: self.seed,
                config_hash: self.config_hash.clone(),
                norm_stats: norm_stats.to_string(),
                adam_t: self.adam.t,
                shuffle_rng: self.shuffle_rng.state(),
                augment_rng: self.augment_rng.state(),
            },
            params: self.net.params().clone(),
            adam_m: self.adam.m.clone(),
            adam_v: self.adam.v.clone(),
        }
    }

    /// Restores a trainer that continues exactly where the checkpoint left off.
    pub fn resume(ckpt: Checkpoint) -> Result<Self> {
        let m = ckpt.meta;
        let net = MultiTaskNet::from_params(m.architecture, ckpt.params)?;
        let rng = |s: [u64; 4]| {
            Rng::from_state(s).ok_or_else(|| Error::Checkpoint("all-zero generator state".into()))
        };
        let mut t = Trainer::with_plan(net, m.train, m.augment, m.plan, m.seed)?;
        t.net.params().check_same_layout(&ckpt.adam_m, "resume")?;
        t.net.params().check_same_layout(&ckpt.adam_v, "resume")?;
        t.adam = AdamState {
            m: ckpt.adam_m,
            v: ckpt.adam_v,
            t: m.adam_t,
            config: t.cfg.adam,
        };
        t.shuffle_rng = rng(m.shuffle_rng)?;
        t.augment_rng = rng(m.augment_rng)?;
        t.progress = m.progress;
        t.config_hash = m.config_hash;
        Ok(t)
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_tensor(out: &mut Vec<u8>, name: &str, t: &Tensor) {
    put_u32(out, name.len() as u32);
    out.extend_from_slice(name.as_bytes());
    put_u32(out, t.rank() as u32);
    for &d in t.shape() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn tensor(&mut self) -> Result<(String, Tensor)> {
        let len = self.u32()? as usize;
        let name = String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = self.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(self.u64()? as usize);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::Checkpoint(format!("tensor `{name}` shape overflows")))?;
        let bytes = self.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::Checkpoint("tensor too large".into()))?,
        )?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let t = Tensor::new(shape, data)
            .map_err(|e| Error::Checkpoint(format!("tensor `{name}`: {e}")))?;
        Ok((name, t))
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(&self.meta).map_err(|e| Error::Serde(e.to_string()))?;
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        put_u32(&mut out, CHECKPOINT_VERSION);
        put_u32(&mut out, meta.len() as u32);
        out.extend_from_slice(&meta);
        put_u32(&mut out, (self.params.len() * 3) as u32);
        for (name, t) in self.params.iter() {
            put_tensor(&mut out, name, t);
        }
        for (name, t) in self.adam_m.iter() {
            put_tensor(&mut out, &format!("adam.m.{name}"), t);
        }
        for (name, t) in self.adam_v.iter() {
            put_tensor(&mut out, &format!("adam.v.{name}"), t);
        }
        let crc = crc32fast::hash(&out);
        put_u32(&mut out, crc);
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        if buf.len() < 16 {
            return Err(Error::Checkpoint(format!("truncated: {} bytes", buf.len())));
        }
        if &buf[..4] != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic, not a checkpoint file".into()));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "format version {version}, expected {CHECKPOINT_VERSION}"
            )));
        }
        let (body, tail) = buf.split_at(buf.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        let actual = crc32fast::hash(body);
        if stored != actual {
            return Err(Error::Checkpoint(format!(
                "checksum mismatch (stored {stored:08x}, computed {actual:08x}); file is corrupt or truncated"
            )));
        }
        let mut r = Reader { buf: body, pos: 8 };
        let meta_len = r.u32()? as usize;
        let meta: CheckpointMeta = serde_json::from_slice(r.take(meta_len)?)
            .map_err(|e| Error::Checkpoint(format!("metadata: {e}")))?;
        let count = r.u32()? as usize;
        if count % 3 != 0 {
            return Err(Error::Checkpoint(format!(
                "{count} tensors is not a multiple of 3"
            )));
        }
        let n = count / 3;
        let mut sets = [ParamSet::new(), ParamSet::new(), ParamSet::new()];
        for (k, set) in sets.iter_mut().enumerate() {
            let prefix = ["", "adam.m.", "adam.v."][k];
            for _ in 0..n {
                let (name, t) = r.tensor()?;
                let bare = name
                    .strip_prefix(prefix)
                    .ok_or_else(|| Error::Checkpoint(format!("unexpected tensor `{name}`")))?;
                set.insert(bare, t)
                    .map_err(|e| Error::Checkpoint(e.to_string()))?;
            }
        }
        if r.pos != body.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes",
                body.len() - r.pos
            )));
        }
        let [params, adam_m, adam_v] = sets;
        Ok(Checkpoint {
            meta,
            params,
            adam_m,
            adam_v,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&buf)
    }

    /// The trained network stored in the checkpoint.
    pub fn network(&self) -> Result<MultiTaskNet> {
        MultiTaskNet::from_params(self.meta.architecture.clone(), self.params.clone())
    }
}
