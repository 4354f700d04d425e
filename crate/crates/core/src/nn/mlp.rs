use crate::error::{Error, Result};
use crate::nn::matrix::{gemm, Matrix};
use crate::rng::Rng;

/// Nonlinearity applied after the last layer. Hidden layers are always ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputHead {
    Identity,
    /// Bounded output in (-1, 1), used for actions.
    Tanh,
}

/// Feed-forward network with all parameters in one flat buffer.
///
/// Layer `l` stores an `in x out` row-major weight matrix followed by its
/// `out` biases, so `y = relu(x W + b)` on a row batch `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    head: OutputHead,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

/// Activations saved by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of every layer; `inputs[0]` is the batch itself.
    inputs: Vec<Matrix>,
    output: Matrix,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

fn layer_offsets(sizes: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut acc = 0;
    offsets.push(0);
    for w in sizes.windows(2) {
        acc += w[0] * w[1] + w[1];
        offsets.push(acc);
    }
    offsets
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::InvalidLayerSizes(sizes.to_vec()));
    }
    Ok(())
}

/// Orthogonal `rows x cols` matrix scaled by `gain` (row-major).
///
/// Columns are orthonormal when `rows >= cols`, rows otherwise.
pub fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut Rng) -> Vec<f64> {
    let (tall, short) = (rows.max(cols), rows.min(cols));
    // `short` vectors of length `tall`, orthonormalised by modified Gram-Schmidt.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..tall).map(|_| rng.normal()).collect();
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-10 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    let mut out = vec![0.0; rows * cols];
    for (j, q) in basis.iter().enumerate() {
        for (i, &val) in q.iter().enumerate() {
            if rows >= cols {
                out[i * cols + j] = gain * val;
            } else {
                out[j * cols + i] = gain * val;
            }
        }
    }
    out
}

impl Mlp {
    /// Orthogonal weights (gain sqrt(2) on hidden layers, 1 on the output
    /// layer) and zero biases.
    pub fn new(sizes: &[usize], head: OutputHead, rng: &mut Rng) -> Result<Self> {
        check_sizes(sizes)?;
        let offsets = layer_offsets(sizes);
        let mut params = vec![0.0; *offsets.last().unwrap()];
        let n_layers = sizes.len() - 1;
        for l in 0..n_layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let gain = if l + 1 == n_layers { 1.0 } else { 2f64.sqrt() };
            let w = orthogonal(fan_in, fan_out, gain, rng);
            params[offsets[l]..offsets[l] + fan_in * fan_out].copy_from_slice(&w);
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            head,
            params,
            offsets,
        })
    }

    /// Builds a network from an explicit flat parameter vector.
    pub fn from_params(sizes: &[usize], head: OutputHead, params: Vec<f64>) -> Result<Self> {
        check_sizes(sizes)?;
        let offsets = layer_offsets(sizes);
        let expected = *offsets.last().unwrap();
        if params.len() != expected {
            return Err(Error::shape("Mlp::from_params", expected, params.len()));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            head,
            params,
            offsets,
        })
    }

    pub fn zeros(sizes: &[usize], head: OutputHead) -> Result<Self> {
        check_sizes(sizes)?;
        let n = *layer_offsets(sizes).last().unwrap();
        Self::from_params(sizes, head, vec![0.0; n])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn head(&self) -> OutputHead {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Weights of layer `l`, row-major `in x out`.
    pub fn weights(&self, l: usize) -> &[f64] {
        let start = self.offsets[l];
        &self.params[start..start + self.sizes[l] * self.sizes[l + 1]]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let start = self.offsets[l];
        let len = self.sizes[l] * self.sizes[l + 1];
        &mut self.params[start..start + len]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        let start = self.offsets[l] + self.sizes[l] * self.sizes[l + 1];
        &self.params[start..self.offsets[l + 1]]
    }

    pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
        let start = self.offsets[l] + self.sizes[l] * self.sizes[l + 1];
        let end = self.offsets[l + 1];
        &mut self.params[start..end]
    }

    /// Range of layer `l`'s parameters inside [`Mlp::params`].
    pub fn layer_range(&self, l: usize) -> std::ops::Range<usize> {
        self.offsets[l]..self.offsets[l + 1]
    }

    pub fn forward(&self, batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if batch.cols() != self.input_dim() {
            return Err(Error::shape(
                "Mlp::forward input width",
                self.input_dim(),
                batch.cols(),
            ));
        }
        let n = batch.rows();
        let mut inputs = Vec::with_capacity(self.n_layers());
        let mut x = batch.clone();
        for l in 0..self.n_layers() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let mut y = Matrix::zeros(n, fan_out);
            let bias = self.bias(l);
            for r in 0..n {
                y.row_mut(r).copy_from_slice(bias);
            }
            gemm(
                n,
                fan_in,
                fan_out,
                x.as_slice(),
                fan_in as isize,
                1,
                self.weights(l),
                fan_out as isize,
                1,
                y.as_mut_slice(),
                1.0,
            );
            if l + 1 < self.n_layers() {
                y.map_inplace(|v| v.max(0.0));
            } else if self.head == OutputHead::Tanh {
                y.map_inplace(f64::tanh);
            }
            inputs.push(std::mem::replace(&mut x, y));
        }
        let cache = ForwardCache {
            inputs,
            output: x.clone(),
        };
        Ok((x, cache))
    }

    /// Forward pass without keeping activations.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        self.forward(batch).map(|(y, _)| y)
    }

    /// Gradients of `sum(upstream ⊙ output)` with respect to the parameters
    /// (flat, same layout as [`Mlp::params`]) and to the input batch.
    pub fn backward(&self, cache: &ForwardCache, upstream: &Matrix) -> Result<(Vec<f64>, Matrix)> {
        if cache.inputs.len() != self.n_layers() {
            return Err(Error::shape(
                "Mlp::backward cache layers",
                self.n_layers(),
                cache.inputs.len(),
            ));
        }
        for (l, a) in cache.inputs.iter().enumerate() {
            if a.cols() != self.sizes[l] {
                return Err(Error::shape("Mlp::backward cache width", self.sizes[l], a.cols()));
            }
        }
        let n = cache.inputs[0].rows();
        if upstream.rows() != n || upstream.cols() != self.output_dim() {
            return Err(Error::shape(
                "Mlp::backward upstream",
                format!("{}x{}", n, self.output_dim()),
                format!("{}x{}", upstream.rows(), upstream.cols()),
            ));
        }

        let mut grads = vec![0.0; self.params.len()];
        let mut g = upstream.clone();
        if self.head == OutputHead::Tanh {
            for (gv, yv) in g.as_mut_slice().iter_mut().zip(cache.output.as_slice()) {
                *gv *= 1.0 - yv * yv;
            }
        }
        for l in (0..self.n_layers()).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let a = &cache.inputs[l];
            let start = self.offsets[l];
            let (gw, gb) = grads[start..self.offsets[l + 1]].split_at_mut(fan_in * fan_out);
            // dW = aᵀ g
            gemm(
                fan_in,
                n,
                fan_out,
                a.as_slice(),
                1,
                fan_in as isize,
                g.as_slice(),
                fan_out as isize,
                1,
                gw,
                0.0,
            );
            for r in 0..n {
                for (b, v) in gb.iter_mut().zip(g.row(r)) {
                    *b += v;
                }
            }
            // dx = g Wᵀ
            let mut gx = Matrix::zeros(n, fan_in);
            gemm(
                n,
                fan_out,
                fan_in,
                g.as_slice(),
                fan_out as isize,
                1,
                self.weights(l),
                1,
                fan_out as isize,
                gx.as_mut_slice(),
                0.0,
            );
            if l > 0 {
                for (gv, av) in gx.as_mut_slice().iter_mut().zip(a.as_slice()) {
                    if *av <= 0.0 {
                        *gv = 0.0;
                    }
                }
            }
            g = gx;
        }
        Ok((grads, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        let mut rng = Rng::new(0);
        assert!(Mlp::new(&[], OutputHead::Identity, &mut rng).is_err());
        assert!(Mlp::new(&[3], OutputHead::Identity, &mut rng).is_err());
        assert!(Mlp::new(&[3, 0, 1], OutputHead::Identity, &mut rng).is_err());
    }

    #[test]
    fn shapes_chain() {
        let mut rng = Rng::new(0);
        let net = Mlp::new(&[4, 1024, 1024, 6], OutputHead::Identity, &mut rng).unwrap();
        assert_eq!(net.weights(0).len(), 4 * 1024);
        assert_eq!(net.weights(1).len(), 1024 * 1024);
        assert_eq!(net.weights(2).len(), 1024 * 6);
        assert_eq!(net.bias(2).len(), 6);
        let out = net.predict(&Matrix::zeros(3, 4)).unwrap();
        assert_eq!((out.rows(), out.cols()), (3, 6));
    }

    #[test]
    fn minimal_net_is_linear_with_zero_bias() {
        let mut rng = Rng::new(5);
        let net = Mlp::new(&[1, 1], OutputHead::Identity, &mut rng).unwrap();
        assert_eq!(net.bias(0), &[0.0]);
        // orthogonal 1x1 is +-1
        assert!((net.weights(0)[0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn init_is_deterministic() {
        let a = Mlp::new(&[3, 8, 2], OutputHead::Tanh, &mut Rng::new(11)).unwrap();
        let b = Mlp::new(&[3, 8, 2], OutputHead::Tanh, &mut Rng::new(11)).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn orthogonal_columns() {
        let mut rng = Rng::new(2);
        let (rows, cols) = (6, 4);
        let w = orthogonal(rows, cols, 1.0, &mut rng);
        for i in 0..cols {
            for j in 0..cols {
                let dot: f64 = (0..rows).map(|r| w[r * cols + i] * w[r * cols + j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_net_gives_zero_output() {
        let net = Mlp::zeros(&[3, 5, 2], OutputHead::Identity).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 3.0]]).unwrap();
        assert_eq!(net.predict(&x).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn affine_single_layer() {
        let net = Mlp::from_params(&[1, 1], OutputHead::Identity, vec![2.0, 1.0]).unwrap();
        let y = net.predict(&Matrix::from_rows(&[vec![3.0]]).unwrap()).unwrap();
        assert_eq!(y.as_slice(), &[7.0]);
    }

    #[test]
    fn input_width_mismatch() {
        let net = Mlp::zeros(&[3, 2], OutputHead::Identity).unwrap();
        assert!(matches!(net.forward(&Matrix::zeros(1, 2)), Err(Error::Shape { .. })));
    }

    #[test]
    fn linear_backward() {
        let net = Mlp::from_params(&[1, 1], OutputHead::Identity, vec![0.7, -0.2]).unwrap();
        let x = Matrix::from_rows(&[vec![3.0]]).unwrap();
        let (_, cache) = net.forward(&x).unwrap();
        let (g, gx) = net
            .backward(&cache, &Matrix::from_rows(&[vec![1.0]]).unwrap())
            .unwrap();
        assert_eq!(g, vec![3.0, 1.0]);
        assert_eq!(gx.as_slice(), &[0.7]);
    }

    #[test]
    fn zero_upstream_zero_grads() {
        let mut rng = Rng::new(9);
        let net = Mlp::new(&[3, 7, 7, 2], OutputHead::Tanh, &mut rng).unwrap();
        let x = Matrix::from_rows(&[vec![0.1, 0.2, -0.3], vec![1.0, 0.0, 2.0]]).unwrap();
        let (_, cache) = net.forward(&x).unwrap();
        let (g, gx) = net.backward(&cache, &Matrix::zeros(2, 2)).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
        assert!(gx.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_rejects_mismatched_upstream() {
        let net = Mlp::zeros(&[2, 3, 1], OutputHead::Identity).unwrap();
        let (_, cache) = net.forward(&Matrix::zeros(4, 2)).unwrap();
        assert!(net.backward(&cache, &Matrix::zeros(3, 1)).is_err());
        let other = Mlp::zeros(&[2, 1], OutputHead::Identity).unwrap();
        assert!(other.backward(&cache, &Matrix::zeros(4, 1)).is_err());
    }
}
