//! Versioned binary checkpoints for trained networks and GAN runs.
//!
//! Layout (little-endian): magic `GSA1`, `u16` version, `u8` kind, payload,
//! then a CRC32 of everything before it. A network is its head byte, a `u32`
//! layer count and per layer `u32` input and output widths followed by the
//! raw `f64` weights (row-major) and biases.

use std::fs;
use std::path::Path;

use covshift_core::gan::{GanCheckpoint, GanConfig, GanRun};
use covshift_core::neural::{Head, Layer, MlpParams, OptimizerKind, TrainConfig};
use covshift_core::Matrix;

use crate::error::{Result, ShellError};

const MAGIC: &[u8; 4] = b"GSA1";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 7;

const KIND_MLP: u8 = 1;
const KIND_GAN: u8 = 2;

/// Anything that can be stored in a checkpoint file.
#[derive(Clone, Debug, PartialEq)]
pub enum Checkpoint {
    Mlp(MlpParams),
    Gan(GanRun),
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("dimension fits in u32");
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        for v in vs {
            self.f64(*v);
        }
    }
    fn widths(&mut self, ws: &[usize]) {
        self.u32(ws.len());
        for w in ws {
            self.u32(*w);
        }
    }

    fn mlp(&mut self, p: &MlpParams) {
        self.u8(head_code(p.head()));
        self.u32(p.layers().len());
        for layer in p.layers() {
            self.u32(layer.weights.rows());
            self.u32(layer.weights.cols());
            self.f64s(layer.weights.as_slice());
            self.f64s(&layer.bias);
        }
    }

    fn train(&mut self, t: &TrainConfig) {
        self.f64(t.learning_rate);
        self.u32(t.batch_size);
        self.u64(t.iterations as u64);
        match t.optimizer {
            OptimizerKind::Sgd => self.u8(0),
            OptimizerKind::Adam { beta1, beta2, eps } => {
                self.u8(1);
                self.f64s(&[beta1, beta2, eps]);
            }
        }
        self.f64(t.l2);
        self.u64(t.seed);
        match t.decay_at {
            None => self.u8(0),
            Some(f) => {
                self.u8(1);
                self.f64(f);
            }
        }
        self.u32(t.log_every);
    }

    fn gan(&mut self, run: &GanRun) {
        let c = run.config();
        self.u32(c.latent_dim);
        self.u32(c.data_dim);
        self.widths(&c.gen_hidden);
        self.widths(&c.disc_hidden);
        self.train(&c.train);
        self.u32(c.checkpoint_every);
        self.u32(c.disc_steps);
        self.u32(run.checkpoints().len());
        for ck in run.checkpoints() {
            self.u64(ck.step as u64);
            self.f64(ck.generator_loss);
            self.f64(ck.discriminator_loss);
            self.mlp(&ck.generator);
            self.mlp(&ck.discriminator);
        }
    }
}

fn head_code(h: Head) -> u8 {
    match h {
        Head::Linear => 0,
        Head::Sigmoid => 1,
        Head::Softmax => 2,
    }
}

pub fn encode(ck: &Checkpoint) -> Vec<u8> {
    let mut w = Writer::default();
    w.buf.extend_from_slice(MAGIC);
    w.buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    match ck {
        Checkpoint::Mlp(p) => {
            w.u8(KIND_MLP);
            w.mlp(p);
        }
        Checkpoint::Gan(run) => {
            w.u8(KIND_GAN);
            w.gan(run);
        }
    }
    let crc = crc32fast::hash(&w.buf);
    w.buf.extend_from_slice(&crc.to_le_bytes());
    w.buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

type Fmt<T> = std::result::Result<T, String>;

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Fmt<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or("truncated payload")?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Fmt<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Fmt<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self) -> Fmt<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Fmt<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Fmt<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or("size overflow")?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
    fn widths(&mut self) -> Fmt<Vec<usize>> {
        let n = self.u32()?;
        (0..n).map(|_| self.u32()).collect()
    }

    fn mlp(&mut self) -> Fmt<MlpParams> {
        let head = match self.u8()? {
            0 => Head::Linear,
            1 => Head::Sigmoid,
            2 => Head::Softmax,
            h => return Err(format!("unknown head code {h}")),
        };
        let count = self.u32()?;
        let mut layers = Vec::new();
        for _ in 0..count {
            let (rows, cols) = (self.u32()?, self.u32()?);
            let weights = self.f64s(rows.checked_mul(cols).ok_or("size overflow")?)?;
            let bias = self.f64s(cols)?;
            let weights = Matrix::from_vec(rows, cols, weights).map_err(|e| e.to_string())?;
            layers.push(Layer { weights, bias });
        }
        MlpParams::new(layers, head).map_err(|e| e.to_string())
    }

    fn train(&mut self) -> Fmt<TrainConfig> {
        let learning_rate = self.f64()?;
        let batch_size = self.u32()?;
        let iterations = self.u64()? as usize;
        let optimizer = match self.u8()? {
            0 => OptimizerKind::Sgd,
            1 => OptimizerKind::Adam { beta1: self.f64()?, beta2: self.f64()?, eps: self.f64()? },
            k => return Err(format!("unknown optimizer code {k}")),
        };
        let l2 = self.f64()?;
        let seed = self.u64()?;
        let decay_at = match self.u8()? {
            0 => None,
            1 => Some(self.f64()?),
            k => return Err(format!("bad decay flag {k}")),
        };
        Ok(TrainConfig { learning_rate, batch_size, iterations, optimizer, l2, seed, decay_at, log_every: self.u32()? })
    }

    fn gan(&mut self) -> Fmt<GanRun> {
        let config = GanConfig {
            latent_dim: self.u32()?,
            data_dim: self.u32()?,
            gen_hidden: self.widths()?,
            disc_hidden: self.widths()?,
            train: self.train()?,
            checkpoint_every: self.u32()?,
            disc_steps: self.u32()?,
        };
        let count = self.u32()?;
        let mut checkpoints = Vec::new();
        for _ in 0..count {
            checkpoints.push(GanCheckpoint {
                step: self.u64()? as usize,
                generator_loss: self.f64()?,
                discriminator_loss: self.f64()?,
                generator: self.mlp()?,
                discriminator: self.mlp()?,
            });
        }
        GanRun::new(config, checkpoints).map_err(|e| e.to_string())
    }
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    let fail = |msg: String| ShellError::Format { path: path.to_path_buf(), msg };
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(fail("not a checkpoint file (bad magic)".into()));
    }
    if bytes.len() < HEADER_LEN + 4 {
        return Err(fail("truncated header".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(fail(format!(
            "unsupported checkpoint version {version}; this build reads version {FORMAT_VERSION}"
        )));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(fail("checksum mismatch (file truncated or corrupted)".into()));
    }
    let mut r = Reader { buf: body, pos: HEADER_LEN };
    let ck = match body[6] {
        KIND_MLP => r.mlp().map(Checkpoint::Mlp),
        KIND_GAN => r.gan().map(Checkpoint::Gan),
        k => Err(format!("unknown checkpoint kind {k}")),
    }
    .map_err(fail)?;
    if r.pos != body.len() {
        return Err(fail(format!("{} trailing bytes", body.len() - r.pos)));
    }
    Ok(ck)
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| ShellError::io(parent, e))?;
    }
    fs::write(path, encode(ck)).map_err(|e| ShellError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| ShellError::io(path, e))?;
    decode(&bytes, path)
}

pub fn load_mlp(path: &Path) -> Result<MlpParams> {
    match load_checkpoint(path)? {
        Checkpoint::Mlp(p) => Ok(p),
        Checkpoint::Gan(_) => {
            Err(ShellError::Validation(format!("{} holds a GAN run, expected a single network", path.display())))
        }
    }
}

pub fn load_gan(path: &Path) -> Result<GanRun> {
    match load_checkpoint(path)? {
        Checkpoint::Gan(r) => Ok(r),
        Checkpoint::Mlp(_) => {
            Err(ShellError::Validation(format!("{} holds a single network, expected a GAN run", path.display())))
        }
    }
}

/// True if the file starts with the checkpoint magic.
pub fn is_checkpoint(path: &Path) -> bool {
    fs::read(path).map(|b| b.starts_with(MAGIC)).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use covshift_core::neural::MlpTemplate;
    use covshift_core::numkit::Rng;

    fn sample_run() -> GanRun {
        let mut rng = Rng::new(4);
        let mut cfg = GanConfig::new(3, 2);
        cfg.gen_hidden = vec![4];
        cfg.disc_hidden = vec![5, 3];
        let ck = |step, rng: &mut Rng| GanCheckpoint {
            step,
            generator: cfg.generator_template().init(rng).unwrap(),
            discriminator: cfg.discriminator_template().init(rng).unwrap(),
            generator_loss: 0.7,
            discriminator_loss: 1.3,
        };
        let cks = vec![ck(1000, &mut rng), ck(2000, &mut rng)];
        GanRun::new(cfg, cks).unwrap()
    }

    #[test]
    fn mlp_round_trip() {
        let p = MlpTemplate::mlp(3, &[4], 2, Head::Softmax).init(&mut Rng::new(1)).unwrap();
        let ck = Checkpoint::Mlp(p);
        assert_eq!(decode(&encode(&ck), Path::new("m")).unwrap(), ck);
    }

    #[test]
    fn gan_round_trip() {
        let ck = Checkpoint::Gan(sample_run());
        assert_eq!(decode(&encode(&ck), Path::new("g")).unwrap(), ck);
    }

    #[test]
    fn every_truncation_is_rejected() {
        let bytes = encode(&Checkpoint::Gan(sample_run()));
        for cut in 0..bytes.len() {
            assert!(decode(&bytes[..cut], Path::new("t")).is_err(), "cut at {cut}");
        }
    }

    #[test]
    fn version_bump_is_rejected() {
        let mut bytes = encode(&Checkpoint::Mlp(MlpTemplate::logistic(2).zeros().unwrap()));
        bytes[4] = 2;
        let err = decode(&bytes, Path::new("v")).unwrap_err().to_string();
        assert!(err.contains("version 2"), "{err}");
    }

    #[test]
    fn flipped_bit_is_rejected() {
        let mut bytes = encode(&Checkpoint::Mlp(MlpTemplate::logistic(2).zeros().unwrap()));
        bytes[12] ^= 1;
        assert!(decode(&bytes, Path::new("c")).is_err());
        assert!(decode(b"nope", Path::new("c")).is_err());
    }
}
