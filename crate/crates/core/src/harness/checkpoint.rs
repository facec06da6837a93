//! Binary checkpoint of trained agents.
//!
//! Layout: 8-byte magic, format version (u32), agent count (u32), the online
//! actors, the target actors, the online and target critic (network codec),
//! then the observation and state normalizers. Optimizer state is not stored.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::config::NetConfig;
use crate::error::{Error, Result};
use crate::nn::codec::{
    read_net, read_normalizer, read_u32, write_net, write_normalizer, write_u32,
};
use crate::trainer::CtdeAgents;

pub const MAGIC: [u8; 8] = *b"RLYNCKPT";
pub const FORMAT_VERSION: u32 = 1;
const MAX_AGENTS: u32 = 4096;

pub fn write_checkpoint<W: Write>(w: &mut W, agents: &CtdeAgents) -> Result<()> {
    w.write_all(&MAGIC)?;
    write_u32(w, FORMAT_VERSION)?;
    write_u32(w, agents.n_agents() as u32)?;
    for net in agents.actors.iter().chain(&agents.actor_targets) {
        write_net(w, net)?;
    }
    write_net(w, &agents.critic)?;
    write_net(w, &agents.critic_target)?;
    write_normalizer(w, &agents.obs_norm)?;
    write_normalizer(w, &agents.state_norm)?;
    Ok(())
}

/// Reads agents back; optimizer state starts fresh from `net`'s settings.
pub fn read_checkpoint<R: Read>(r: &mut R, net: &NetConfig) -> Result<CtdeAgents> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let n = read_u32(r)?;
    if n == 0 || n > MAX_AGENTS {
        return Err(Error::Checkpoint(format!("implausible agent count {n}")));
    }
    let n = n as usize;
    let actors = (0..n).map(|_| read_net(r)).collect::<Result<Vec<_>>>()?;
    let actor_targets = (0..n).map(|_| read_net(r)).collect::<Result<Vec<_>>>()?;
    let critic = read_net(r)?;
    let critic_target = read_net(r)?;
    let obs_norm = read_normalizer(r)?;
    let state_norm = read_normalizer(r)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after checkpoint".into()));
    }
    let agents = CtdeAgents::from_nets(
        actors,
        actor_targets,
        critic,
        critic_target,
        obs_norm,
        state_norm,
        net,
    );
    check_shapes(&agents)?;
    Ok(agents)
}

fn check_shapes(a: &CtdeAgents) -> Result<()> {
    let od = a.obs_norm.dim();
    for (o, t) in a.actors.iter().zip(&a.actor_targets) {
        if o.sizes() != t.sizes() || o.input_dim() != od {
            return Err(Error::Checkpoint("actor shapes disagree".into()));
        }
    }
    if a.critic.sizes() != a.critic_target.sizes()
        || a.critic.input_dim() != a.state_norm.dim()
        || a.critic.output_dim() != 1
    {
        return Err(Error::Checkpoint("critic shapes disagree".into()));
    }
    Ok(())
}

pub fn save_checkpoint(agents: &CtdeAgents, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_checkpoint(&mut w, agents)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path, net: &NetConfig) -> Result<CtdeAgents> {
    let mut r = BufReader::new(fs::File::open(path)?);
    read_checkpoint(&mut r, net)
}
