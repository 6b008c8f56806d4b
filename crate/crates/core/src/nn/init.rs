use rand::Rng;

use crate::nn::real::{cast, Real};
use crate::nn::tensor::Tensor;

/// Uniform Glorot initialization: U(−a, a) with a = √(6 / (fan_in + fan_out)).
pub fn glorot_uniform<F: Real, R: Rng + ?Sized>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Tensor<F> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| cast(rng.random_range(-limit..=limit)))
        .collect();
    Tensor::from_vec(shape, data).expect("shape/product agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn glorot_respects_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t: Tensor<f64> = glorot_uniform(&[30, 20], 30, 20, &mut rng);
        let limit = (6.0f64 / 50.0).sqrt();
        assert!(t.as_slice().iter().all(|v| v.abs() <= limit));
        let mean = t.as_slice().iter().sum::<f64>() / t.len() as f64;
        assert!(mean.abs() < 0.05);
    }
}
