use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Token-level policy: scores sequences and samples new ones.
pub trait TokenPolicy {
    fn vocab_size(&self) -> usize;
    fn logprobs(&self, tokens: &[usize]) -> Vec<f64>;
    fn sample(&self, rng: &mut ChaCha8Rng, len: usize) -> Vec<usize>;
}

/// Context-free softmax policy over a small vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    pub logits: Vec<f64>,
}

impl TabularPolicy {
    pub fn uniform(vocab: usize) -> Self {
        Self { logits: vec![0.0; vocab] }
    }

    pub fn log_softmax(&self) -> Vec<f64> {
        let m = self.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + self.logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
        self.logits.iter().map(|l| (l - lse).min(0.0)).collect()
    }

    /// Backpropagates per-token gradients of some loss with respect to the
    /// tokens' log-probabilities into the logits and takes one descent step.
    pub fn apply_logprob_grad(&mut self, tokens: &[Vec<usize>], grads: &[Vec<f64>], lr: f64) {
        let probs: Vec<f64> = self.log_softmax().iter().map(|l| l.exp()).collect();
        let mut dlogits = vec![0.0; self.logits.len()];
        for (seq, g) in tokens.iter().zip(grads) {
            for (&tok, &gk) in seq.iter().zip(g) {
                for (j, d) in dlogits.iter_mut().enumerate() {
                    let ind = if j == tok { 1.0 } else { 0.0 };
                    *d += gk * (ind - probs[j]);
                }
            }
        }
        for (l, d) in self.logits.iter_mut().zip(dlogits) {
            *l -= lr * d;
        }
    }
}

impl TokenPolicy for TabularPolicy {
    fn vocab_size(&self) -> usize {
        self.logits.len()
    }

    fn logprobs(&self, tokens: &[usize]) -> Vec<f64> {
        let ls = self.log_softmax();
        tokens.iter().map(|&t| ls[t]).collect()
    }

    fn sample(&self, rng: &mut ChaCha8Rng, len: usize) -> Vec<usize> {
        let probs: Vec<f64> = self.log_softmax().iter().map(|l| l.exp()).collect();
        (0..len)
            .map(|_| {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return i;
                    }
                }
                probs.len() - 1
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn sampling_is_reproducible() {
        let p = TabularPolicy { logits: vec![0.3, -1.0, 2.0] };
        let a = p.sample(&mut ChaCha8Rng::seed_from_u64(5), 20);
        let b = p.sample(&mut ChaCha8Rng::seed_from_u64(5), 20);
        assert_eq!(a, b);
        assert_eq!(p.logprobs(&a), p.logprobs(&b));
    }

    #[test]
    fn log_softmax_normalizes() {
        let p = TabularPolicy { logits: vec![0.3, -1.0, 2.0, 5.0] };
        let s: f64 = p.log_softmax().iter().map(|l| l.exp()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
