//! Versioned JSON checkpoints for the recurrent tagger.
//!
//! Values are stored as `f64`, which represents every `f32` exactly, so a
//! save/load round trip reproduces parameters bit for bit in either precision.

use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};
use crate::model::encoder::{BiRnnEncoder, Rnn};
use crate::model::tagger::{Head, TaggerParams};
use crate::model::vocab::Vocab;
use crate::scalar::Scalar;
use crate::scheme::TagScheme;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RnnRepr {
    w_in: Matrix,
    w_rec: Matrix,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointRepr {
    version: u32,
    scalar: String,
    types: Vec<String>,
    vocab: Vocab,
    embedding: Matrix,
    forward: RnnRepr,
    backward: RnnRepr,
    head_weight: Matrix,
    head_bias: Vec<f64>,
}

fn mat<T: Scalar>(a: &Array2<T>) -> Matrix {
    Matrix {
        rows: a.nrows(),
        cols: a.ncols(),
        data: a.iter().map(|v| v.as_f64()).collect(),
    }
}

fn unmat<T: Scalar>(m: Matrix, what: &str) -> Result<Array2<T>> {
    Array2::from_shape_vec((m.rows, m.cols), m.data.into_iter().map(T::of).collect())
        .map_err(|e| Error::Checkpoint(format!("{what}: {e}")))
}

fn vec1<T: Scalar>(a: &Array1<T>) -> Vec<f64> {
    a.iter().map(|v| v.as_f64()).collect()
}

fn unvec<T: Scalar>(v: Vec<f64>) -> Array1<T> {
    v.into_iter().map(T::of).collect()
}

fn rnn<T: Scalar>(r: &Rnn<T>) -> RnnRepr {
    RnnRepr {
        w_in: mat(&r.w_in),
        w_rec: mat(&r.w_rec),
        bias: vec1(&r.bias),
    }
}

fn unrnn<T: Scalar>(r: RnnRepr, what: &str) -> Result<Rnn<T>> {
    let out = Rnn {
        w_in: unmat(r.w_in, what)?,
        w_rec: unmat(r.w_rec, what)?,
        bias: unvec(r.bias),
    };
    let h = out.w_rec.nrows();
    if out.w_rec.ncols() != h || out.w_in.ncols() != h || out.bias.len() != h {
        return Err(Error::Checkpoint(format!("{what}: inconsistent recurrent shapes")));
    }
    Ok(out)
}

pub fn checkpoint_to_string<T: Scalar>(p: &TaggerParams<T>) -> Result<String> {
    let repr = CheckpointRepr {
        version: CHECKPOINT_VERSION,
        scalar: T::NAME.to_owned(),
        types: p.scheme.types().to_vec(),
        vocab: (*p.encoder.vocab).clone(),
        embedding: mat(&p.encoder.embedding),
        forward: rnn(&p.encoder.forward),
        backward: rnn(&p.encoder.backward),
        head_weight: mat(&p.head.weight),
        head_bias: vec1(&p.head.bias),
    };
    Ok(serde_json::to_string(&repr)?)
}

pub fn checkpoint_from_str<T: Scalar>(text: &str) -> Result<TaggerParams<T>> {
    let repr: CheckpointRepr = serde_json::from_str(text)?;
    if repr.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
            repr.version
        )));
    }
    if repr.scalar != T::NAME {
        log::info!("converting {} checkpoint to {}", repr.scalar, T::NAME);
    }
    let scheme = Arc::new(TagScheme::new(repr.types)?);
    let vocab = Arc::new(repr.vocab);
    let embedding: Array2<T> = unmat(repr.embedding, "embedding")?;
    let forward = unrnn(repr.forward, "forward")?;
    let backward = unrnn(repr.backward, "backward")?;
    let head = Head {
        weight: unmat(repr.head_weight, "head")?,
        bias: unvec(repr.head_bias),
    };
    let e = embedding.ncols();
    let h = forward.hidden();
    if embedding.nrows() != vocab.len()
        || forward.w_in.nrows() != e
        || backward.w_in.nrows() != e
        || backward.hidden() != h
        || head.weight.nrows() != 2 * h
        || head.weight.ncols() != scheme.label_count()
        || head.bias.len() != scheme.label_count()
    {
        return Err(Error::Checkpoint("parameter shapes do not agree".into()));
    }
    Ok(TaggerParams {
        encoder: BiRnnEncoder {
            vocab,
            embedding,
            forward,
            backward,
        },
        head,
        scheme,
    })
}

pub fn save_checkpoint<T: Scalar>(p: &TaggerParams<T>, path: &Path) -> Result<()> {
    write_atomic(path, checkpoint_to_string(p)?.as_bytes())
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<TaggerParams<T>> {
    checkpoint_from_str(&read_to_string(path)?)
}
