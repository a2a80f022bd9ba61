//! Named real tensors.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Rng;

/// Dense row-major tensor. Matrices are `[rows, cols]`; a weight applied to
/// an input `x` is stored as `[out, in]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let want: usize = shape.iter().product();
        if want != data.len() {
            return Err(Error::ShapeMismatch { name: "<tensor>".to_string(), expected: shape.to_vec(), found: vec![data.len()] });
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    /// Glorot-uniform initialization for a `[out, in]` matrix or a vector.
    pub fn glorot(shape: &[usize], rng: &mut Rng) -> Self {
        let (fan_out, fan_in) = match shape {
            [o, i] => (*o, *i),
            [o] => (*o, 1),
            _ => (1, shape.iter().product()),
        };
        let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-limit..limit)).collect();
        Tensor { shape: shape.to_vec(), data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[1..].iter().product()
        } else {
            1
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    /// `out = W x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        let c = self.cols();
        debug_assert_eq!(x.len(), c);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(c)) {
            *o = dot(row, x);
        }
    }

    /// `out += W x`.
    pub fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        let c = self.cols();
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(c)) {
            *o += dot(row, x);
        }
    }

    /// `out += W^T y`.
    pub fn matvec_t_acc(&self, y: &[f64], out: &mut [f64]) {
        let c = self.cols();
        for (&yi, row) in y.iter().zip(self.data.chunks_exact(c)) {
            if yi != 0.0 {
                axpy(yi, row, out);
            }
        }
    }

    /// `W += scale * y x^T`.
    pub fn add_outer(&mut self, scale: f64, y: &[f64], x: &[f64]) {
        let c = self.cols();
        for (&yi, row) in y.iter().zip(self.data.chunks_exact_mut(c)) {
            let s = scale * yi;
            if s != 0.0 {
                axpy(s, x, row);
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// A set of uniquely named tensors with fixed shapes, iterated in name order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    tensors: BTreeMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, t: Tensor) -> Result<()> {
        if self.tensors.contains_key(name) {
            return Err(Error::DuplicateParam(name.to_string()));
        }
        self.tensors.insert(name.to_string(), t);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors.get(name).ok_or_else(|| Error::MissingParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.tensors.get_mut(name).ok_or_else(|| Error::MissingParam(name.to_string()))
    }

    /// Fetches `name` and checks its shape.
    pub fn expect(&self, name: &str, shape: &[usize]) -> Result<&Tensor> {
        let t = self.get(name)?;
        if t.shape() != shape {
            return Err(Error::ShapeMismatch { name: name.to_string(), expected: shape.to_vec(), found: t.shape().to_vec() });
        }
        Ok(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// Same names and shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        ParamStore { tensors: self.tensors.iter().map(|(k, t)| (k.clone(), Tensor::zeros(t.shape()))).collect() }
    }

    /// `self += scale * other`; both stores must share names and shapes.
    pub fn add_scaled(&mut self, scale: f64, other: &ParamStore) -> Result<()> {
        for (name, t) in self.tensors.iter_mut() {
            let o = other.expect(name, t.shape())?;
            axpy(scale, o.data(), t.data_mut());
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors.values_mut() {
            t.data_mut().iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors.values().flat_map(|t| t.data()).fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Merges another store whose names must not collide with ours.
    pub fn extend(&mut self, other: ParamStore) -> Result<()> {
        for (k, v) in other.tensors {
            self.insert(&k, v)?;
        }
        Ok(())
    }

    /// Tensors whose name starts with `prefix`.
    pub fn subset(&self, prefix: &str) -> ParamStore {
        ParamStore { tensors: self.tensors.iter().filter(|(k, _)| k.starts_with(prefix)).map(|(k, v)| (k.clone(), v.clone())).collect() }
    }
}
