//! Binary checkpoint format.
//!
//! ```text
//! "FMRL" | version: u32 | section count: u32 | sections…
//! section  = tag: [u8; 4] | payload length: u64 | payload
//! CONF     = training config as key=value text
//! RNGS     = master seed: u64 | updates done: u64
//! PRIM/HELP = role: u8 | input size: u32 | hidden size: u32 | n: u64
//!            | n × f32 parameters | lr, β1, β2, ε: f64 | adam steps: u64
//!            | n × f32 first moment | n × f32 second moment
//! ```
//!
//! All integers and floats are little-endian. Episode random streams are
//! derived from `(seed, update)`, so `RNGS` fully determines the random
//! state of a resumed run.

use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use crate::agent::PolicyNet;
use crate::env::Role;
use crate::error::CheckpointError;
use crate::nn::{Adam, AdamConfig, Network};
use crate::trainer::TrainConfig;

pub const MAGIC: &[u8; 4] = b"FMRL";
pub const FORMAT_VERSION: u32 = 1;

/// Parameters and optimizer state of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub policy: PolicyNet<f32>,
    pub adam: Adam<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub updates_done: u64,
    pub prime: AgentState,
    pub helper: Option<AgentState>,
}

fn corrupt(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Corrupt(msg.into())
}

fn put_section(out: &mut Vec<u8>, tag: &[u8; 4], payload: &[u8]) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
}

fn put_f32s(out: &mut Vec<u8>, values: impl Iterator<Item = f32>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn encode_agent(a: &AgentState) -> Vec<u8> {
    let net = &a.policy.net;
    let n = net.num_params();
    let mut out = Vec::with_capacity(64 + 12 * n);
    out.push(match a.policy.role {
        Role::Prime => 0,
        Role::Helper => 1,
    });
    out.extend_from_slice(&(net.input_size() as u32).to_le_bytes());
    out.extend_from_slice(&(net.hidden_size() as u32).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    put_f32s(&mut out, net.iter().copied());
    let c = a.adam.config;
    for v in [c.learning_rate, c.beta1, c.beta2, c.epsilon] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&a.adam.step_count.to_le_bytes());
    put_f32s(&mut out, a.adam.first_moment.iter().copied());
    put_f32s(&mut out, a.adam.second_moment.iter().copied());
    out
}

pub fn encode(ck: &Checkpoint) -> Vec<u8> {
    let mut sections: Vec<(&[u8; 4], Vec<u8>)> = vec![
        (b"CONF", ck.config.render().into_bytes()),
        (b"RNGS", {
            let mut p = ck.config.seed.to_le_bytes().to_vec();
            p.extend_from_slice(&ck.updates_done.to_le_bytes());
            p
        }),
        (b"PRIM", encode_agent(&ck.prime)),
    ];
    if let Some(h) = &ck.helper {
        sections.push((b"HELP", encode_agent(h)));
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(sections.len() as u32).to_le_bytes());
    for (tag, payload) in &sections {
        put_section(&mut out, tag, payload);
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| corrupt("unexpected end of data"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CheckpointError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, CheckpointError> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| corrupt("length overflow"))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect())
    }

    fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn decode_agent(payload: &[u8], expected: Role) -> Result<AgentState, CheckpointError> {
    let mut r = Reader { buf: payload, pos: 0 };
    let role = match r.u8()? {
        0 => Role::Prime,
        1 => Role::Helper,
        other => return Err(corrupt(format!("unknown role tag {other}"))),
    };
    if role != expected {
        return Err(corrupt("agent section has the wrong role"));
    }
    let input = r.u32()? as usize;
    let hidden = r.u32()? as usize;
    let n = r.u64()? as usize;
    let mut net = Network::<f32>::zeros(input, hidden);
    if net.num_params() != n || hidden == 0 {
        return Err(corrupt("parameter count does not match the network shape"));
    }
    let load = |net: &mut Network<f32>, values: Vec<f32>| {
        net.load_flat(&values).map_err(|e| corrupt(e.to_string()))
    };
    load(&mut net, r.f32s(n)?)?;
    let config = AdamConfig {
        learning_rate: r.f64()?,
        beta1: r.f64()?,
        beta2: r.f64()?,
        epsilon: r.f64()?,
    };
    let mut adam = Adam::new(config, &net);
    adam.step_count = r.u64()?;
    load(&mut adam.first_moment, r.f32s(n)?)?;
    load(&mut adam.second_moment, r.f32s(n)?)?;
    if !r.is_empty() {
        return Err(corrupt("trailing bytes in agent section"));
    }
    let policy = PolicyNet::new(role, net).map_err(|e| corrupt(e.to_string()))?;
    Ok(AgentState { policy, adam })
}

pub fn decode(buf: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4).map_err(|_| corrupt("missing magic"))? != MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let count = r.u32()?;
    let (mut config, mut rngs, mut prime, mut helper) = (None, None, None, None);
    for _ in 0..count {
        let tag = r.array::<4>()?;
        let len = usize::try_from(r.u64()?).map_err(|_| corrupt("section too large"))?;
        let payload = r.take(len)?;
        match &tag {
            b"CONF" => {
                let text = std::str::from_utf8(payload).map_err(|_| corrupt("config is not UTF-8"))?;
                config = Some(TrainConfig::parse(text).map_err(|e| corrupt(e.to_string()))?);
            }
            b"RNGS" => {
                let mut s = Reader { buf: payload, pos: 0 };
                rngs = Some((s.u64()?, s.u64()?));
            }
            b"PRIM" => prime = Some(decode_agent(payload, Role::Prime)?),
            b"HELP" => helper = Some(decode_agent(payload, Role::Helper)?),
            _ => {}
        }
    }
    if !r.is_empty() {
        return Err(corrupt("trailing bytes after the last section"));
    }
    let config = config.ok_or_else(|| corrupt("missing CONF section"))?;
    let (seed, updates_done) = rngs.ok_or_else(|| corrupt("missing RNGS section"))?;
    if seed != config.seed {
        return Err(corrupt("seed in RNGS disagrees with the config"));
    }
    Ok(Checkpoint {
        config,
        updates_done,
        prime: prime.ok_or_else(|| corrupt("missing PRIM section"))?,
        helper,
    })
}

/// Writes via a temporary file and rename, so a crash never leaves a
/// half-written checkpoint behind.
pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<(), CheckpointError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode(ck))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => CheckpointError::NotFound(path.to_path_buf()),
        _ => CheckpointError::Io(e),
    })?;
    decode(&bytes)
}
