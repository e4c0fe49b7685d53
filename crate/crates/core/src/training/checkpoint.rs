//! Little-endian checkpoint files: magic `FRCK`, version, counters, network
//! shape, label names, input-stream position, then named f32 tensors.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::adam::AdamState;
use crate::augmentation::Scenario;
use crate::error::{Error, Result};
use crate::network::{NetworkConfig, Parameters, Tensor, PARAM_NAMES};
use crate::records::LabelMap;
use crate::rng::RngState;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FRCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Where the shuffled training input stream stood when the checkpoint was
/// taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamState {
    pub capacity: u64,
    /// Next sequence number the cyclic example source will yield.
    pub next_seq: u64,
    pub shuffle: RngState,
    pub augment: RngState,
    pub dropout: RngState,
    /// Sequence numbers held by the shuffle buffer.
    pub buffer: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: NetworkConfig,
    pub labels: LabelMap,
    pub scenario: Scenario,
    pub params: Parameters<f32>,
    pub adam: AdamState<f32>,
    pub iteration: u64,
    pub learning_rate: f64,
    pub stream: Option<StreamState>,
}

struct Out(Vec<u8>);

impl Out {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len32(&mut self, n: usize) -> Result<()> {
        let v = u32::try_from(n).map_err(|_| Error::invalid(format!("length {n} does not fit the checkpoint format")))?;
        self.u32(v);
        Ok(())
    }
    fn str(&mut self, s: &str) -> Result<()> {
        self.len32(s.len())?;
        self.0.extend_from_slice(s.as_bytes());
        Ok(())
    }
    fn rng(&mut self, s: &RngState) {
        self.u64(s.seed);
        self.u64(s.stream);
        self.u64(s.word_pos as u64);
        self.u64((s.word_pos >> 64) as u64);
    }
    fn tensor(&mut self, name: &str, t: &Tensor<f32>) -> Result<()> {
        self.str(name)?;
        self.len32(t.rank())?;
        for d in t.shape() {
            self.len32(*d)?;
        }
        self.0.reserve(t.len() * 4);
        for v in t.data() {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
        Ok(())
    }
}

struct In<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> In<'a> {
    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Format {
            path: None,
            offset: self.pos as u64,
            message: message.into(),
        }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.fail(format!("truncated: need {n} bytes, {} left", self.buf.len() - self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }
    fn str(&mut self) -> Result<String> {
        let n = self.usize()?;
        let at = self.pos;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Format {
            path: None,
            offset: at as u64,
            message: "name is not UTF-8".into(),
        })
    }
    fn rng(&mut self) -> Result<RngState> {
        Ok(RngState {
            seed: self.u64()?,
            stream: self.u64()?,
            word_pos: u128::from(self.u64()?) | (u128::from(self.u64()?) << 64),
        })
    }
    fn tensor(&mut self) -> Result<(String, usize, Tensor<f32>)> {
        let at = self.pos;
        let name = self.str()?;
        let rank = self.usize()?;
        if rank > 8 {
            return Err(self.fail(format!("{name}: implausible rank {rank}")));
        }
        let shape = (0..rank).map(|_| self.usize()).collect::<Result<Vec<_>>>()?;
        let len = shape.iter().try_fold(1usize, |a, d| a.checked_mul(*d));
        let bytes = len
            .and_then(|l| l.checked_mul(4))
            .ok_or_else(|| self.fail(format!("{name}: shape {shape:?} overflows")))?;
        let payload = self.take(bytes)?;
        let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Ok((name, at, Tensor::from_vec(shape, data)?))
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut o = Out(Vec::new());
        o.0.extend_from_slice(CHECKPOINT_MAGIC);
        o.u32(CHECKPOINT_VERSION);
        o.u64(self.iteration);
        o.u64(self.adam.step());
        o.u64(self.learning_rate.to_bits());
        o.u32(self.scenario.code());

        let n = &self.net;
        for v in [n.input_height, n.input_width, n.input_depth, n.kernel] {
            o.len32(v)?;
        }
        for v in n.conv_maps.iter().chain(&n.fc_sizes) {
            o.len32(*v)?;
        }
        o.len32(n.num_classes)?;
        o.u32(u32::from(n.lrn));

        o.len32(self.labels.classes().len())?;
        for c in self.labels.classes() {
            o.str(c)?;
        }

        match &self.stream {
            None => o.u32(0),
            Some(s) => {
                o.u32(1);
                o.u64(s.capacity);
                o.u64(s.next_seq);
                o.rng(&s.shuffle);
                o.rng(&s.augment);
                o.rng(&s.dropout);
                o.u64(s.buffer.len() as u64);
                for seq in &s.buffer {
                    o.u64(*seq);
                }
            }
        }

        o.len32(PARAM_NAMES.len() * 3)?;
        for (name, t) in self.params.named() {
            o.tensor(name, t)?;
        }
        for (prefix, moments) in [("adam_m", self.adam.first_moments()), ("adam_v", self.adam.second_moments())] {
            for (name, t) in PARAM_NAMES.iter().zip(moments) {
                o.tensor(&format!("{prefix}/{name}"), t)?;
            }
        }
        Ok(o.0)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = In { buf, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            r.pos = 0;
            return Err(r.fail("not a checkpoint (bad magic)"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            r.pos -= 4;
            return Err(r.fail(format!("unsupported checkpoint version {version}")));
        }
        let iteration = r.u64()?;
        let adam_step = r.u64()?;
        let learning_rate = f64::from_bits(r.u64()?);
        let code = r.u32()?;
        let scenario = Scenario::from_code(code).ok_or_else(|| r.fail(format!("unknown scenario code {code}")))?;

        let net_at = r.pos;
        let mut dims = [0usize; 12];
        for d in dims.iter_mut() {
            *d = r.usize()?;
        }
        let net = NetworkConfig {
            input_height: dims[0],
            input_width: dims[1],
            input_depth: dims[2],
            kernel: dims[3],
            conv_maps: [dims[4], dims[5], dims[6], dims[7]],
            fc_sizes: [dims[8], dims[9]],
            num_classes: dims[10],
            lrn: dims[11] != 0,
        };
        net.validate().map_err(|e| Error::Format {
            path: None,
            offset: net_at as u64,
            message: e.to_string(),
        })?;

        let count = r.usize()?;
        let labels_at = r.pos;
        let names = (0..count).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let labels = LabelMap::new(names).map_err(|e| Error::Format {
            path: None,
            offset: labels_at as u64,
            message: e.to_string(),
        })?;

        let stream = match r.u32()? {
            0 => None,
            1 => {
                let capacity = r.u64()?;
                let next_seq = r.u64()?;
                let shuffle = r.rng()?;
                let augment = r.rng()?;
                let dropout = r.rng()?;
                let len = r.u64()?;
                if len > capacity || len > (r.buf.len() - r.pos) as u64 / 8 {
                    return Err(r.fail(format!("shuffle buffer of {len} entries does not fit")));
                }
                let buffer = (0..len).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
                Some(StreamState {
                    capacity,
                    next_seq,
                    shuffle,
                    augment,
                    dropout,
                    buffer,
                })
            }
            other => {
                r.pos -= 4;
                return Err(r.fail(format!("bad stream flag {other}")));
            }
        };

        let tensor_count = r.usize()?;
        let mut tensors = HashMap::new();
        for _ in 0..tensor_count {
            let (name, at, t) = r.tensor()?;
            if tensors.insert(name.clone(), (at, t)).is_some() {
                return Err(Error::Format {
                    path: None,
                    offset: at as u64,
                    message: format!("duplicate tensor {name}"),
                });
            }
        }
        if r.pos != buf.len() {
            return Err(r.fail("trailing bytes after the last tensor"));
        }
        let end = r.pos as u64;
        let mut grab = |name: String| {
            tensors.remove(&name).map(|(_, t)| t).ok_or_else(|| Error::Format {
                path: None,
                offset: end,
                message: format!("missing tensor {name}"),
            })
        };
        let params = PARAM_NAMES.iter().map(|n| grab(n.to_string())).collect::<Result<Vec<_>>>()?;
        let m = PARAM_NAMES.iter().map(|n| grab(format!("adam_m/{n}"))).collect::<Result<Vec<_>>>()?;
        let v = PARAM_NAMES.iter().map(|n| grab(format!("adam_v/{n}"))).collect::<Result<Vec<_>>>()?;
        if let Some(name) = tensors.keys().next() {
            return Err(Error::Format {
                path: None,
                offset: tensors[name].0 as u64,
                message: format!("unexpected tensor {name}"),
            });
        }
        let params = Parameters::from_tensors(&net, params)?;
        let adam = AdamState::from_parts(m, v, adam_step)?;
        if adam.first_moments().iter().zip(params.tensors()).any(|(a, b)| a.shape() != b.shape()) {
            return Err(Error::Contract("adam state does not match the parameters".into()));
        }

        Ok(Self {
            net,
            labels,
            scenario,
            params,
            adam,
            iteration,
            learning_rate,
            stream,
        })
    }

    /// Write atomically: a temporary sibling file is renamed over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let file_name = path
            .file_name()
            .ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
        let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
            fs::rename(&tmp, path)
        };
        write().map_err(|e| {
            let _ = fs::remove_file(&tmp);
            Error::io(path, e)
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| e.with_path(path))
    }
}
