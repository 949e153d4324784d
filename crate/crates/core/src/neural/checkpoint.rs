//! Binary model checkpoints.
//!
//! Layout: 8-byte magic, `u32` format version, `u32` header length, JSON
//! header, then every parameter tensor in [`Transformer::named_parameters`]
//! order as `u32 rows, u32 cols` followed by `rows * cols` little-endian
//! `f32` values. All integers are little-endian.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::train::EpochRecord;
use super::{Transformer, TransformerConfig};
use crate::seqcodec::Vocabulary;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"CHNMCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config: TransformerConfig,
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
    pub src_fingerprint: String,
    pub tgt_fingerprint: String,
    /// Model variant string, if the model belongs to an experiment.
    pub variant: Option<String>,
    pub lexicon_fingerprint: Option<String>,
    pub seed: u64,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub tensor_names: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub model: Transformer<f32>,
}

impl Checkpoint {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: Transformer<f32>,
        src_vocab: Vocabulary,
        tgt_vocab: Vocabulary,
        variant: Option<String>,
        lexicon_fingerprint: Option<String>,
        seed: u64,
        best_epoch: usize,
        history: Vec<EpochRecord>,
    ) -> Checkpoint {
        assert_eq!(model.src_vocab, src_vocab.len(), "source vocabulary size");
        assert_eq!(model.tgt_vocab, tgt_vocab.len(), "target vocabulary size");
        let header = CheckpointHeader {
            config: model.config.clone(),
            src_fingerprint: src_vocab.fingerprint(),
            tgt_fingerprint: tgt_vocab.fingerprint(),
            src_vocab,
            tgt_vocab,
            variant,
            lexicon_fingerprint,
            seed,
            best_epoch,
            history,
            tensor_names: model
                .named_parameters()
                .into_iter()
                .map(|(n, _)| n)
                .collect(),
        };
        Checkpoint { header, model }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let mut out = Vec::with_capacity(16 + header.len() + 4 * self.model.parameter_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for (_, p) in self.model.named_parameters() {
            out.extend_from_slice(&(p.nrows() as u32).to_le_bytes());
            out.extend_from_slice(&(p.ncols() as u32).to_le_bytes());
            for v in p.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    /// Parses a checkpoint and checks that the stored vocabularies still
    /// hash to the recorded fingerprints.
    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let len = r.u32()? as usize;
        let header: CheckpointHeader = serde_json::from_slice(r.take(len)?)?;
        for (which, vocab, expected) in [
            ("source", &header.src_vocab, &header.src_fingerprint),
            ("target", &header.tgt_vocab, &header.tgt_fingerprint),
        ] {
            let found = vocab.fingerprint();
            if &found != expected {
                return Err(Error::Fingerprint {
                    which,
                    expected: expected.clone(),
                    found,
                });
            }
        }
        let mut model: Transformer<f32> = Transformer::new(
            header.config.clone(),
            header.src_vocab.len(),
            header.tgt_vocab.len(),
            0,
        );
        let names: Vec<String> = model
            .named_parameters()
            .into_iter()
            .map(|(n, _)| n)
            .collect();
        if names != header.tensor_names {
            return Err(Error::Checkpoint(
                "tensor layout does not match configuration".into(),
            ));
        }
        for (name, p) in names.iter().zip(model.parameters_mut()) {
            let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
            if (rows, cols) != p.dim() {
                return Err(Error::Checkpoint(format!(
                    "{name}: stored shape {rows}x{cols}, expected {:?}",
                    p.dim()
                )));
            }
            let raw = r.take(rows * cols * 4)?;
            let values = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            *p = Array2::from_shape_vec((rows, cols), values).expect("shape checked");
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        Ok(Checkpoint { header, model })
    }

    /// Writes to a sibling temporary file and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&bytes)
    }

    /// Fails unless the checkpoint was trained with exactly these
    /// vocabularies.
    pub fn verify_vocabularies(&self, src: &Vocabulary, tgt: &Vocabulary) -> Result<()> {
        for (which, expected, vocab) in [
            ("source", &self.header.src_fingerprint, src),
            ("target", &self.header.tgt_fingerprint, tgt),
        ] {
            let found = vocab.fingerprint();
            if &found != expected {
                return Err(Error::Fingerprint {
                    which,
                    expected: expected.clone(),
                    found,
                });
            }
        }
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
