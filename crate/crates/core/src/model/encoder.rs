//! Contextual token encoders.
//!
//! [`Encoder`] is the seam for swapping the desk-scale recurrent encoder for a
//! pretrained transformer. Implementations map a token sequence to one
//! `output_dim` vector per token and back-propagate gradients with respect to
//! those vectors into their own parameters.

use std::sync::Arc;

use ndarray::linalg::general_mat_mul;
use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::model::vocab::Vocab;
use crate::scalar::Scalar;

/// Accumulated gradients, flattened in the same order as the encoder's
/// parameters.
pub trait Gradient<T: Scalar>: Send {
    fn clear(&mut self);
    fn slices(&self) -> Vec<&[T]>;
}

pub trait Encoder<T: Scalar>: Clone + Send + Sync {
    type Cache;
    type Grad: Gradient<T>;

    fn output_dim(&self) -> usize;

    /// Encodes one non-empty sentence to a `len x output_dim` matrix.
    fn encode(&self, tokens: &[String]) -> (Array2<T>, Self::Cache);

    /// Adds the parameter gradient implied by `d_out` (same shape as the
    /// encoding) into `grad`.
    fn backward(&self, cache: &Self::Cache, d_out: ArrayView2<'_, T>, grad: &mut Self::Grad);

    fn zero_grad(&self) -> Self::Grad;

    fn params(&self) -> Vec<&[T]>;

    fn params_mut(&mut self) -> Vec<&mut [T]>;
}

pub(crate) fn uniform<T: Scalar>(rows: usize, cols: usize, bound: f64, rng: &mut impl Rng) -> Array2<T> {
    Array2::from_shape_simple_fn((rows, cols), || T::of(rng.gen_range(-bound..=bound)))
}

pub(crate) fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Elman recurrence `h_t = tanh(x_t W_in + h_{t-1} W_rec + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rnn<T> {
    pub w_in: Array2<T>,
    pub w_rec: Array2<T>,
    pub bias: Array1<T>,
}

#[derive(Clone, Debug)]
pub struct RnnGrad<T> {
    pub w_in: Array2<T>,
    pub w_rec: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Rnn<T> {
    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        Rnn {
            w_in: uniform(input, hidden, xavier_bound(input, hidden), rng),
            w_rec: uniform(hidden, hidden, xavier_bound(hidden, hidden), rng),
            bias: Array1::zeros(hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_rec.nrows()
    }

    fn zero_grad(&self) -> RnnGrad<T> {
        RnnGrad {
            w_in: Array2::zeros(self.w_in.raw_dim()),
            w_rec: Array2::zeros(self.w_rec.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }

    /// Hidden states for `x` in the order its rows are given.
    fn run(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        let len = x.nrows();
        let mut out = x.dot(&self.w_in);
        out += &self.bias;
        for t in 0..len {
            if t > 0 {
                let (done, mut rest) = out.view_mut().split_at(Axis(0), t);
                let mut row = rest.row_mut(0);
                row += &done.row(t - 1).dot(&self.w_rec);
            }
            out.row_mut(t).mapv_inplace(|v| v.tanh());
        }
        out
    }

    /// Returns the gradient with respect to `x`.
    fn backprop(
        &self,
        x: ArrayView2<'_, T>,
        hs: ArrayView2<'_, T>,
        d_h: ArrayView2<'_, T>,
        g: &mut RnnGrad<T>,
    ) -> Array2<T> {
        let (len, hidden) = hs.dim();
        let mut da = Array2::<T>::zeros((len, hidden));
        let mut carry = Array1::<T>::zeros(hidden);
        for t in (0..len).rev() {
            let mut d = da.row_mut(t);
            Zip::from(&mut d)
                .and(d_h.row(t))
                .and(&carry)
                .and(hs.row(t))
                .for_each(|d, &dh, &c, &h| *d = (dh + c) * (T::one() - h * h));
            carry = self.w_rec.dot(&d);
        }
        general_mat_mul(T::one(), &x.t(), &da, T::one(), &mut g.w_in);
        if len > 1 {
            general_mat_mul(
                T::one(),
                &hs.slice(s![..len - 1, ..]).t(),
                &da.slice(s![1.., ..]),
                T::one(),
                &mut g.w_rec,
            );
        }
        g.bias += &da.sum_axis(Axis(0));
        da.dot(&self.w_in.t())
    }
}

/// Token embeddings followed by one bidirectional Elman layer; the output is
/// the concatenation `[forward; backward]` of both directions' states.
#[derive(Clone, Debug, PartialEq)]
pub struct BiRnnEncoder<T> {
    pub vocab: Arc<Vocab>,
    pub embedding: Array2<T>,
    pub forward: Rnn<T>,
    pub backward: Rnn<T>,
}

pub struct BiRnnCache<T> {
    ids: Vec<usize>,
    x: Array2<T>,
    h_fwd: Array2<T>,
    /// In processing (reversed) order.
    h_bwd: Array2<T>,
}

#[derive(Clone, Debug)]
pub struct BiRnnGrad<T> {
    pub embedding: Array2<T>,
    pub forward: RnnGrad<T>,
    pub backward: RnnGrad<T>,
}

impl<T: Scalar> Gradient<T> for BiRnnGrad<T> {
    fn clear(&mut self) {
        self.embedding.fill(T::zero());
        for g in [&mut self.forward, &mut self.backward] {
            g.w_in.fill(T::zero());
            g.w_rec.fill(T::zero());
            g.bias.fill(T::zero());
        }
    }

    fn slices(&self) -> Vec<&[T]> {
        let mut v = vec![self.embedding.as_slice().expect("standard layout")];
        for g in [&self.forward, &self.backward] {
            v.push(g.w_in.as_slice().expect("standard layout"));
            v.push(g.w_rec.as_slice().expect("standard layout"));
            v.push(g.bias.as_slice().expect("standard layout"));
        }
        v
    }
}

impl<T: Scalar> BiRnnEncoder<T> {
    pub fn init(vocab: Arc<Vocab>, embedding_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let mut embedding = uniform(vocab.len(), embedding_dim, 0.5, rng);
        embedding.row_mut(crate::model::vocab::PAD).fill(T::zero());
        BiRnnEncoder {
            forward: Rnn::init(embedding_dim, hidden_dim, rng),
            backward: Rnn::init(embedding_dim, hidden_dim, rng),
            vocab,
            embedding,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.forward.hidden()
    }
}

impl<T: Scalar> Encoder<T> for BiRnnEncoder<T> {
    type Cache = BiRnnCache<T>;
    type Grad = BiRnnGrad<T>;

    fn output_dim(&self) -> usize {
        2 * self.hidden_dim()
    }

    fn encode(&self, tokens: &[String]) -> (Array2<T>, BiRnnCache<T>) {
        let ids = self.vocab.ids(tokens);
        let x = self.embedding.select(Axis(0), &ids);
        let h_fwd = self.forward.run(x.view());
        let h_bwd = self.backward.run(x.slice(s![..;-1, ..]));
        let out = concatenate(Axis(1), &[h_fwd.view(), h_bwd.slice(s![..;-1, ..])])
            .expect("matching row counts");
        (out, BiRnnCache { ids, x, h_fwd, h_bwd })
    }

    fn backward(&self, cache: &BiRnnCache<T>, d_out: ArrayView2<'_, T>, grad: &mut BiRnnGrad<T>) {
        let h = self.hidden_dim();
        let dx_f = self.forward.backprop(
            cache.x.view(),
            cache.h_fwd.view(),
            d_out.slice(s![.., ..h]),
            &mut grad.forward,
        );
        let dx_b = self.backward.backprop(
            cache.x.slice(s![..;-1, ..]),
            cache.h_bwd.view(),
            d_out.slice(s![..;-1, h..]),
            &mut grad.backward,
        );
        let len = cache.ids.len();
        for (t, &id) in cache.ids.iter().enumerate() {
            let mut row = grad.embedding.row_mut(id);
            row += &dx_f.row(t);
            row += &dx_b.row(len - 1 - t);
        }
    }

    fn zero_grad(&self) -> BiRnnGrad<T> {
        BiRnnGrad {
            embedding: Array2::zeros(self.embedding.raw_dim()),
            forward: self.forward.zero_grad(),
            backward: self.backward.zero_grad(),
        }
    }

    fn params(&self) -> Vec<&[T]> {
        let mut v = vec![self.embedding.as_slice().expect("standard layout")];
        for r in [&self.forward, &self.backward] {
            v.push(r.w_in.as_slice().expect("standard layout"));
            v.push(r.w_rec.as_slice().expect("standard layout"));
            v.push(r.bias.as_slice().expect("standard layout"));
        }
        v
    }

    fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut v = vec![self.embedding.as_slice_mut().expect("standard layout")];
        for r in [&mut self.forward, &mut self.backward] {
            v.push(r.w_in.as_slice_mut().expect("standard layout"));
            v.push(r.w_rec.as_slice_mut().expect("standard layout"));
            v.push(r.bias.as_slice_mut().expect("standard layout"));
        }
        v
    }
}
