use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

const WORD_BITS: usize = 64;

/// Square boolean matrix stored as packed rows of `u64` words.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(WORD_BITS).max(1);
        BitMatrix {
            n,
            words,
            data: vec![0; n * words],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = BitMatrix::new(n);
        for i in 0..n {
            for j in 0..n {
                if f(i, j) {
                    m.set(i, j);
                }
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.words + j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize) {
        self.data[i * self.words + j / WORD_BITS] |= 1 << (j % WORD_BITS);
    }

    pub fn clear_all(&mut self) {
        self.data.fill(0);
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.words..(i + 1) * self.words]
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `self ⊆ other`, elementwise.
    pub fn is_subset_of(&self, other: &BitMatrix) -> bool {
        self.n == other.n && self.data.iter().zip(&other.data).all(|(a, b)| a & !b == 0)
    }

    /// In-place transitive closure (Warshall's algorithm, one word-parallel
    /// row OR per reachable pivot). Does not add reflexive pairs.
    pub fn transitive_closure(&mut self) {
        let w = self.words;
        let mut pivot = vec![0u64; w];
        for k in 0..self.n {
            let (kw, kb) = (k / WORD_BITS, 1u64 << (k % WORD_BITS));
            pivot.copy_from_slice(&self.data[k * w..(k + 1) * w]);
            for row in self.data.chunks_exact_mut(w) {
                if row[kw] & kb != 0 {
                    for (a, b) in row.iter_mut().zip(&pivot) {
                        *a |= *b;
                    }
                }
            }
        }
    }

    pub fn closure(&self) -> BitMatrix {
        let mut c = self.clone();
        c.transitive_closure();
        c
    }

    /// First `(i, j)` with `self[i][j] && other[i][j]`, scanning row-major.
    pub fn first_common(&self, other: &BitMatrix) -> Option<(usize, usize)> {
        debug_assert_eq!(self.n, other.n);
        for i in 0..self.n {
            for (wi, (a, b)) in self.row(i).iter().zip(other.row(i)).enumerate() {
                let both = a & b;
                if both != 0 {
                    return Some((i, wi * WORD_BITS + both.trailing_zeros() as usize));
                }
            }
        }
        None
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            for j in 0..self.n {
                f.write_str(if self.get(i, j) { "1" } else { "." })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
