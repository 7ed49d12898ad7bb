//! Deterministic seeded sample generation.
//!
//! Certification is sample-based, so every certificate records the seed that
//! produced its samples. The mixtures lean on the shapes that break things:
//! sparse vectors, sign patterns, small integers, and rearrangement-extremal
//! profiles.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::matrix::Matrix;
use crate::space::{LatticeVector, MeasureSpace};

pub struct SampleGen {
    rng: ChaCha8Rng,
    seed: u64,
    space: Arc<MeasureSpace>,
}

impl SampleGen {
    pub fn new(space: &Arc<MeasureSpace>, seed: u64) -> Self {
        SampleGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            space: Arc::clone(space),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn bool(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// Mixed-style vector: dense, sparse, small-integer, spike, or sorted
    /// (rearrangement-extremal) profiles, signed.
    pub fn vector(&mut self) -> LatticeVector {
        let n = self.space.len();
        let style = self.index(5);
        let mut values: Vec<f64> = match style {
            0 => (0..n).map(|_| self.uniform(-3.0, 3.0)).collect(),
            1 => (0..n)
                .map(|_| {
                    if self.bool(0.5) {
                        0.0
                    } else {
                        self.uniform(-3.0, 3.0)
                    }
                })
                .collect(),
            2 => (0..n).map(|_| self.rng.gen_range(-2i32..=2) as f64).collect(),
            3 => {
                let mut v = vec![0.0; n];
                v[self.index(n)] = self.uniform(-4.0, 4.0);
                v
            }
            _ => {
                let mut v: Vec<f64> = (0..n).map(|_| self.uniform(0.0, 3.0)).collect();
                v.sort_by(|a, b| b.partial_cmp(a).unwrap());
                if self.bool(0.5) {
                    for x in v.iter_mut() {
                        if self.bool(0.3) {
                            *x = -*x;
                        }
                    }
                }
                v
            }
        };
        if values.iter().all(|&v| v == 0.0) {
            values[0] = 1.0;
        }
        LatticeVector::new(&self.space, values).expect("generated on own space")
    }

    pub fn nonnegative(&mut self) -> LatticeVector {
        self.vector().abs()
    }

    pub fn nonzero(&mut self) -> LatticeVector {
        loop {
            let v = self.vector();
            if !v.is_zero(1e-12) {
                return v;
            }
        }
    }

    /// A comparable pair u <= v.
    pub fn ordered_pair(&mut self) -> (LatticeVector, LatticeVector) {
        let a = self.vector();
        let b = self.vector();
        (a.meet(&b).unwrap(), a.join(&b).unwrap())
    }

    /// Nonnegative matrix, entries in [0, hi).
    pub fn nonnegative_matrix(&mut self, hi: f64) -> Matrix {
        let n = self.space.len();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, self.uniform(0.0, hi));
            }
        }
        m
    }

    /// Substochastic transfer matrix for the (L1(mu), LInf) couple: T >= 0,
    /// row sums <= 1, weighted column sums <= the column's own mass. With
    /// `signed`, entries get random sign flips, which leaves both endpoint
    /// operator norms unchanged.
    pub fn substochastic(&mut self, signed: bool) -> Matrix {
        let n = self.space.len();
        let mut m = self.nonnegative_matrix(1.0);
        for i in 0..n {
            let row_sum: f64 = m.row(i).iter().sum();
            if row_sum > 1.0 {
                for j in 0..n {
                    m.set(i, j, m.get(i, j) / row_sum);
                }
            }
        }
        for j in 0..n {
            let col: f64 = (0..n).map(|i| self.space.weight(i) * m.get(i, j)).sum();
            let cap = self.space.weight(j);
            if col > cap {
                for i in 0..n {
                    m.set(i, j, m.get(i, j) * cap / col);
                }
            }
        }
        if signed {
            for i in 0..n {
                for j in 0..n {
                    if self.bool(0.5) {
                        m.set(i, j, -m.get(i, j));
                    }
                }
            }
        }
        m
    }

    /// Diagonal of +-1 entries: an isometry of every norm built on |f_i|.
    pub fn sign_flip(&mut self) -> Matrix {
        let n = self.space.len();
        let diag: Vec<f64> = (0..n).map(|_| if self.bool(0.5) { -1.0 } else { 1.0 }).collect();
        Matrix::diagonal(&diag)
    }

    /// Signed permutation; an isometry of the (L1, LInf) couple only when
    /// the permuted atoms carry equal masses, so the permutation part is
    /// only emitted on uniform spaces.
    pub fn signed_permutation(&mut self) -> Matrix {
        let n = self.space.len();
        let uniform = self
            .space
            .weights()
            .windows(2)
            .all(|w| (w[0] - w[1]).abs() < 1e-15);
        if !uniform {
            return self.sign_flip();
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.index(i + 1);
            perm.swap(i, j);
        }
        let mut m = Matrix::zeros(n, n);
        for (i, &p) in perm.iter().enumerate() {
            m.set(i, p, if self.bool(0.5) { -1.0 } else { 1.0 });
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinism_per_seed() {
        let s = MeasureSpace::new(vec![1.0, 2.0, 0.5]).unwrap();
        let mut a = SampleGen::new(&s, 7);
        let mut b = SampleGen::new(&s, 7);
        for _ in 0..50 {
            assert_eq!(a.vector().values(), b.vector().values());
        }
    }

    #[test]
    fn substochastic_bounds() {
        let s = MeasureSpace::new(vec![1.0, 3.0, 0.25, 1.5]).unwrap();
        let mut g = SampleGen::new(&s, 3);
        for _ in 0..100 {
            let m = g.substochastic(false);
            for i in 0..4 {
                assert!(m.row(i).iter().sum::<f64>() <= 1.0 + 1e-12);
            }
            for j in 0..4 {
                let col: f64 = (0..4).map(|i| s.weight(i) * m.get(i, j)).sum();
                assert!(col <= s.weight(j) + 1e-12);
            }
        }
    }

    #[test]
    fn ordered_pairs_are_ordered() {
        let s = MeasureSpace::uniform(5);
        let mut g = SampleGen::new(&s, 11);
        for _ in 0..50 {
            let (u, v) = g.ordered_pair();
            assert!(u.le(&v, 0.0));
        }
    }
}
