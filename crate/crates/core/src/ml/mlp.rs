//! Fully connected ReLU networks with a scalar affine output.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Layer `l` maps `widths[l]` inputs to `widths[l+1]` outputs with a row-major
/// `widths[l+1] × widths[l]` weight matrix. Hidden layers use ReLU; the last is affine.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    widths: Vec<usize>,
    pub(crate) weights: Vec<Vec<T>>,
    pub(crate) biases: Vec<Vec<T>>,
}

/// Parameter-shaped gradient buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros_like(m: &Mlp<T>) -> Self {
        Self {
            weights: m.weights.iter().map(|w| vec![T::zero(); w.len()]).collect(),
            biases: m.biases.iter().map(|b| vec![T::zero(); b.len()]).collect(),
        }
    }
}

impl<T: Scalar> Mlp<T> {
    /// He-uniform weights, `U(−√(6/fan_in), √(6/fan_in))`, and zero biases.
    pub fn he_uniform<R: Rng>(widths: &[usize], rng: &mut R) -> Result<Self> {
        check_widths(widths)?;
        let mut weights = Vec::with_capacity(widths.len() - 1);
        let mut biases = Vec::with_capacity(widths.len() - 1);
        for l in 0..widths.len() - 1 {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| T::lit(rng.gen_range(-bound..bound)))
                    .collect(),
            );
            biases.push(vec![T::zero(); fan_out]);
        }
        Ok(Self {
            widths: widths.to_vec(),
            weights,
            biases,
        })
    }

    /// Assembles a network from raw parameters, validating that shapes chain.
    pub fn from_parts(widths: Vec<usize>, weights: Vec<Vec<T>>, biases: Vec<Vec<T>>) -> Result<Self> {
        check_widths(&widths)?;
        let layers = widths.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::ShapeMismatch(format!(
                "{layers} layers need {layers} weight and bias arrays, got {} and {}",
                weights.len(),
                biases.len()
            )));
        }
        for l in 0..layers {
            if weights[l].len() != widths[l] * widths[l + 1] {
                return Err(Error::ShapeMismatch(format!(
                    "layer {l} weights have {} entries, expected {}x{}",
                    weights[l].len(),
                    widths[l + 1],
                    widths[l]
                )));
            }
            if biases[l].len() != widths[l + 1] {
                return Err(Error::ShapeMismatch(format!(
                    "layer {l} biases have {} entries, expected {}",
                    biases[l].len(),
                    widths[l + 1]
                )));
            }
        }
        if weights.iter().chain(&biases).flatten().any(|v| !v.is_finite()) {
            return Err(Error::Schema("network parameters must be finite".into()));
        }
        Ok(Self {
            widths,
            weights,
            biases,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn weights(&self) -> &[Vec<T>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<T>] {
        &self.biases
    }

    pub fn forward(&self, x: &[T]) -> Result<T> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "input of length {} for a network expecting {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut acts = Vec::new();
        Ok(self.forward_into(x, &mut acts))
    }

    /// Forward pass storing every layer's post-activation output in `acts`.
    fn forward_into(&self, x: &[T], acts: &mut Vec<Vec<T>>) -> T {
        let layers = self.weights.len();
        acts.resize(layers, Vec::new());
        for l in 0..layers {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (done, rest) = acts.split_at_mut(l);
            let input: &[T] = if l == 0 { x } else { &done[l - 1] };
            let out = &mut rest[0];
            out.clear();
            let w = &self.weights[l];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut s = self.biases[l][o];
                for (a, b) in row.iter().zip(input) {
                    s += *a * *b;
                }
                if l + 1 < layers && s < T::zero() {
                    s = T::zero();
                }
                out.push(s);
            }
        }
        acts[layers - 1][0]
    }

    /// Mean squared error over `idx` and its gradient with respect to every parameter.
    pub fn mse_gradients(&self, xs: &[Vec<T>], ys: &[T], idx: &[usize]) -> (T, Gradients<T>) {
        let mut grads = Gradients::zeros_like(self);
        let layers = self.weights.len();
        let mut acts = Vec::new();
        let mut delta: Vec<T> = Vec::new();
        let mut next: Vec<T> = Vec::new();
        let n = T::from_count(idx.len());
        let mut loss = T::zero();
        for &i in idx {
            let x = &xs[i];
            let f = self.forward_into(x, &mut acts);
            let e = f - ys[i];
            loss += e * e;
            delta.clear();
            delta.push(T::lit(2.0) * e / n);
            for l in (0..layers).rev() {
                let n_in = self.widths[l];
                let input: &[T] = if l == 0 { x } else { &acts[l - 1] };
                let gw = &mut grads.weights[l];
                for (o, &d) in delta.iter().enumerate() {
                    grads.biases[l][o] += d;
                    if d == T::zero() {
                        continue;
                    }
                    let row = &mut gw[o * n_in..(o + 1) * n_in];
                    for (g, &a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if l == 0 {
                    break;
                }
                next.clear();
                next.resize(n_in, T::zero());
                let w = &self.weights[l];
                for (o, &d) in delta.iter().enumerate() {
                    if d == T::zero() {
                        continue;
                    }
                    for (nx, &wv) in next.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *nx += d * wv;
                    }
                }
                for (nx, &a) in next.iter_mut().zip(&acts[l - 1]) {
                    if a <= T::zero() {
                        *nx = T::zero();
                    }
                }
                std::mem::swap(&mut delta, &mut next);
            }
        }
        (loss / n, grads)
    }

    /// Mean squared error over a whole dataset.
    pub fn mse(&self, xs: &[Vec<T>], ys: &[T]) -> T {
        let mut acts = Vec::new();
        let s = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| {
                let e = self.forward_into(x, &mut acts) - y;
                e * e
            })
            .sum::<T>();
        s / T::from_count(xs.len().max(1))
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weights.iter_mut().chain(self.biases.iter_mut()).flatten()
    }
}

impl<T: Scalar> Gradients<T> {
    pub(crate) fn values(&self) -> impl Iterator<Item = &T> {
        self.weights.iter().chain(self.biases.iter()).flatten()
    }
}

fn check_widths(widths: &[usize]) -> Result<()> {
    if widths.len() < 2 || widths.contains(&0) {
        return Err(Error::ShapeMismatch(format!("invalid layer widths {widths:?}")));
    }
    if widths[widths.len() - 1] != 1 {
        return Err(Error::ShapeMismatch("networks have a single output".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_return_bias() {
        let m = Mlp::from_parts(vec![3, 1], vec![vec![0.0; 3]], vec![vec![0.7]]).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), 0.7);
    }

    #[test]
    fn relu_gate() {
        let m = Mlp::from_parts(vec![1, 1, 1], vec![vec![1.0], vec![1.0]], vec![vec![0.0], vec![0.25]]).unwrap();
        assert_eq!(m.forward(&[-1.0]).unwrap(), 0.25);
        assert_eq!(m.forward(&[2.0]).unwrap(), 2.25);
        assert!(m.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn shape_validation() {
        assert!(Mlp::from_parts(vec![2, 1], vec![vec![0.0; 3]], vec![vec![0.0]]).is_err());
        assert!(Mlp::from_parts(vec![2, 3, 1], vec![vec![0.0; 6]], vec![vec![0.0; 3]]).is_err());
        assert!(Mlp::<f64>::from_parts(vec![2, 2], vec![vec![0.0; 4]], vec![vec![0.0; 2]]).is_err());
    }

    /// Straight matrix arithmetic, written independently of the layer loop above.
    fn oracle_forward(m: &Mlp<f64>, x: &[f64]) -> f64 {
        let mut h = x.to_vec();
        let n = m.widths().len() - 1;
        for l in 0..n {
            let rows = m.widths()[l + 1];
            let cols = m.widths()[l];
            let mut z = m.biases()[l].clone();
            for r in 0..rows {
                for c in 0..cols {
                    z[r] += m.weights()[l][r * cols + c] * h[c];
                }
            }
            if l < n - 1 {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            h = z;
        }
        h[0]
    }

    #[test]
    fn forward_matches_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = Mlp::<f64>::he_uniform(&[10, 15, 15, 1], &mut rng).unwrap();
        m.params_mut().for_each(|p| *p += rng.gen_range(-0.1..0.1));
        for _ in 0..20 {
            let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let a = m.forward(&x).unwrap();
            let b = oracle_forward(&m, &x);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut m = Mlp::<f64>::he_uniform(&[4, 6, 5, 1], &mut rng).unwrap();
        m.params_mut().for_each(|p| *p += rng.gen_range(-0.2..0.2));
        let xs: Vec<Vec<f64>> = (0..8).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let idx: Vec<usize> = (0..8).collect();
        let (_, g) = m.mse_gradients(&xs, &ys, &idx);
        let analytic: Vec<f64> = g.values().copied().collect();
        let h = 1e-5;
        let n = analytic.len();
        for k in 0..n {
            let mut plus = m.clone();
            *plus.params_mut().nth(k).unwrap() += h;
            let mut minus = m.clone();
            *minus.params_mut().nth(k).unwrap() -= h;
            let fd = (plus.mse(&xs, &ys) - minus.mse(&xs, &ys)) / (2.0 * h);
            let scale = fd.abs().max(analytic[k].abs()).max(1e-6);
            assert!((fd - analytic[k]).abs() / scale < 1e-5, "param {k}: fd {fd} vs {}", analytic[k]);
        }
    }
}
