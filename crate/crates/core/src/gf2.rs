//! Bit-packed linear algebra over GF(2).

/// Number of `u64` words needed for `bits` bits.
#[inline]
pub fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

#[inline]
pub fn get_bit(words: &[u64], i: usize) -> bool {
    (words[i >> 6] >> (i & 63)) & 1 == 1
}

#[inline]
pub fn set_bit(words: &mut [u64], i: usize, v: bool) {
    let mask = 1u64 << (i & 63);
    if v {
        words[i >> 6] |= mask;
    } else {
        words[i >> 6] &= !mask;
    }
}

#[inline]
pub fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

/// Dense row-major bit matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols).max(1);
        Self { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn from_rows<I, R>(cols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[bool]>,
    {
        let rows: Vec<R> = rows.into_iter().collect();
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            for (c, &b) in row.as_ref().iter().enumerate() {
                m.set(r, c, b);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        get_bit(self.row(r), c)
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let s = self.stride;
        set_bit(&mut self.data[r * s..(r + 1) * s], c, v);
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        let s = self.stride;
        &mut self.data[r * s..(r + 1) * s]
    }

    /// Rank by in-place Gaussian elimination; consumes the matrix.
    pub fn into_rank(mut self) -> usize {
        let mut rank = 0;
        let s = self.stride;
        for col in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let w = col >> 6;
            let mask = 1u64 << (col & 63);
            let Some(pivot) = (rank..self.rows).find(|&r| self.data[r * s + w] & mask != 0) else {
                continue;
            };
            if pivot != rank {
                for k in 0..s {
                    self.data.swap(pivot * s + k, rank * s + k);
                }
            }
            let (head, tail) = self.data.split_at_mut((rank + 1) * s);
            let prow = &head[rank * s..];
            for r in 0..self.rows - rank - 1 {
                let row = &mut tail[r * s..(r + 1) * s];
                if row[w] & mask != 0 {
                    // bits below `w` are already eliminated in the pivot row
                    for k in w..s {
                        row[k] ^= prow[k];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn rank(&self) -> usize {
        self.clone().into_rank()
    }
}

/// Incrementally maintained row space, each stored vector keyed by its
/// lowest set bit.
#[derive(Clone, Debug)]
pub struct XorBasis {
    words: usize,
    by_pivot: Vec<Option<usize>>,
    vectors: Vec<u64>,
    scratch: Vec<u64>,
}

impl XorBasis {
    pub fn new(bits: usize) -> Self {
        let words = words_for(bits).max(1);
        Self {
            words,
            by_pivot: vec![None; words * 64],
            vectors: Vec::new(),
            scratch: vec![0; words],
        }
    }

    pub fn rank(&self) -> usize {
        self.vectors.len() / self.words
    }

    pub fn clear(&mut self) {
        self.by_pivot.iter_mut().for_each(|p| *p = None);
        self.vectors.clear();
    }

    /// Insert a vector; returns `true` if it was independent of the basis.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        let w = self.words;
        self.scratch.copy_from_slice(&v[..w]);
        let mut word = 0;
        while word < w {
            let x = self.scratch[word];
            if x == 0 {
                word += 1;
                continue;
            }
            let bit = word * 64 + x.trailing_zeros() as usize;
            match self.by_pivot[bit] {
                Some(idx) => {
                    let b = &self.vectors[idx * w..(idx + 1) * w];
                    for k in word..w {
                        self.scratch[k] ^= b[k];
                    }
                }
                None => {
                    self.by_pivot[bit] = Some(self.rank());
                    self.vectors.extend_from_slice(&self.scratch);
                    return true;
                }
            }
        }
        false
    }

    /// Whether `v` lies in the span.
    pub fn contains(&mut self, v: &[u64]) -> bool {
        let w = self.words;
        self.scratch.copy_from_slice(&v[..w]);
        let mut word = 0;
        while word < w {
            let x = self.scratch[word];
            if x == 0 {
                word += 1;
                continue;
            }
            let bit = word * 64 + x.trailing_zeros() as usize;
            match self.by_pivot[bit] {
                Some(idx) => {
                    let b = &self.vectors[idx * w..(idx + 1) * w];
                    for k in word..w {
                        self.scratch[k] ^= b[k];
                    }
                }
                None => return false,
            }
        }
        true
    }
}

/// Basis of the null space `{x : M x = 0}` of a bit matrix, as packed vectors
/// of length `m.cols()`.
pub fn null_space(m: &BitMatrix) -> Vec<Vec<u64>> {
    let cols = m.cols();
    let rows = m.rows();
    let mut a = m.clone();
    let s = words_for(cols).max(1);
    let mut pivot_cols = Vec::new();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| a.get(r, col)) else {
            continue;
        };
        if p != rank {
            for k in 0..s {
                a.data.swap(p * s + k, rank * s + k);
            }
        }
        let prow = a.row(rank).to_vec();
        for r in 0..rows {
            if r != rank && a.get(r, col) {
                xor_into(a.row_mut(r), &prow);
            }
        }
        pivot_cols.push(col);
        rank += 1;
    }
    let is_pivot: Vec<bool> = {
        let mut v = vec![false; cols];
        pivot_cols.iter().for_each(|&c| v[c] = true);
        v
    };
    (0..cols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut x = vec![0u64; s];
            set_bit(&mut x, free, true);
            for (r, &pc) in pivot_cols.iter().enumerate() {
                if a.get(r, free) {
                    set_bit(&mut x, pc, true);
                }
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_rank(rows: &[Vec<bool>], cols: usize) -> usize {
        // rank = log2 of the span size, enumerated
        let vecs: Vec<u128> = rows
            .iter()
            .map(|r| r.iter().enumerate().fold(0u128, |a, (i, &b)| a | ((b as u128) << i)))
            .collect();
        let _ = cols;
        let mut span = std::collections::HashSet::new();
        for mask in 0u32..(1 << vecs.len()) {
            let mut acc = 0u128;
            for (i, v) in vecs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    acc ^= v;
                }
            }
            span.insert(acc);
        }
        span.len().trailing_zeros() as usize
    }

    proptest! {
        #[test]
        fn rank_matches_span_enumeration(
            rows in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 70), 0..10)
        ) {
            let m = BitMatrix::from_rows(70, &rows);
            let r = m.rank();
            prop_assert_eq!(r, brute_rank(&rows, 70));
            let mut basis = XorBasis::new(70);
            for row in 0..m.rows() {
                basis.insert(m.row(row));
            }
            prop_assert_eq!(basis.rank(), r);
        }

        #[test]
        fn null_space_vectors_annihilate(
            rows in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 12), 1..8)
        ) {
            let m = BitMatrix::from_rows(12, &rows);
            let ns = null_space(&m);
            prop_assert_eq!(ns.len() + m.rank(), 12);
            for x in &ns {
                for r in 0..m.rows() {
                    let dot = m.row(r).iter().zip(x).map(|(a, b)| (a & b).count_ones()).sum::<u32>();
                    prop_assert_eq!(dot % 2, 0);
                }
            }
        }
    }

    #[test]
    fn identity_has_full_rank() {
        let mut m = BitMatrix::zeros(130, 130);
        for i in 0..130 {
            m.set(i, i, true);
        }
        assert_eq!(m.rank(), 130);
        assert_eq!(BitMatrix::zeros(5, 3).rank(), 0);
    }
}
