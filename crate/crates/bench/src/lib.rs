//! Inputs shared by the benchmarks.

use wavenet_core::{Matrix, Rng, TokenSeq, CLS_ID};

/// `batch` sequences of `len` tokens: `[CLS]` then uniform word ids in `2..vocab`.
pub fn token_batch(batch: usize, len: usize, vocab: usize, rng: &mut Rng) -> Vec<TokenSeq> {
    (0..batch)
        .map(|_| {
            let mut ids = vec![CLS_ID];
            ids.extend((1..len).map(|_| 2 + rng.below(vocab - 2)));
            TokenSeq::new(ids)
        })
        .collect()
}

pub fn random_symmetric(d: usize, rng: &mut Rng) -> Matrix {
    let a = Matrix::randn(d, d, rng).expect("nonzero size");
    a.add(&a.transpose()).expect("square")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_shape() {
        let b = token_batch(3, 5, 10, &mut Rng::new(0));
        assert_eq!(b.len(), 3);
        assert!(b.iter().all(|s| s.ids.len() == 5 && s.ids[0] == CLS_ID && s.ids[1..].iter().all(|&i| (2..10).contains(&i))));
    }

    #[test]
    fn symmetric() {
        let m = random_symmetric(4, &mut Rng::new(1));
        assert_eq!(m, m.transpose());
    }
}
