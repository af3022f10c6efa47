//! Word-packed bit vectors and GF(2) linear algebra.

use serde::{Deserialize, Serialize};

/// Fixed-length bit vector packed into `u64` words.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl std::fmt::Debug for Bits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: String = (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect();
        write!(f, "Bits({s})")
    }
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_indices(len: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut b = Bits::zeros(len);
        for i in idx {
            b.flip(i);
        }
        b
    }

    pub fn from_bools(v: &[bool]) -> Self {
        Bits::from_indices(v.len(), v.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i))
    }

    pub fn unit(len: usize, i: usize) -> Self {
        Bits::from_indices(len, [i])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let m = 1u64 << (i & 63);
        if v {
            self.words[i >> 6] |= m;
        } else {
            self.words[i >> 6] &= !m;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &Bits) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        let mut r = self.clone();
        r.xor_assign(other);
        r
    }

    pub fn and(&self, other: &Bits) -> Bits {
        debug_assert_eq!(self.len, other.len);
        Bits {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
            len: self.len,
        }
    }

    pub fn or(&self, other: &Bits) -> Bits {
        debug_assert_eq!(self.len, other.len);
        Bits {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
            len: self.len,
        }
    }

    /// Popcount of `self & other`.
    #[inline]
    pub fn and_count(&self, other: &Bits) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    /// Inner product over GF(2).
    #[inline]
    pub fn dot(&self, other: &Bits) -> bool {
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() & 1 == 1
    }

    #[inline]
    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        for (k, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(k * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + t)
                }
            })
        })
    }

    /// Append one bit at the end.
    pub fn push(&mut self, v: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, v);
    }

    /// Grow (zero-filled) or truncate to `len`.
    pub fn resize(&mut self, len: usize) {
        self.words.resize(len.div_ceil(64), 0);
        if len % 64 != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << (len % 64)) - 1;
        }
        self.len = len;
    }

    /// Remove bit `i`, shifting higher bits down.
    pub fn remove(&mut self, i: usize) {
        let mut out = Bits::zeros(self.len - 1);
        for j in self.ones() {
            if j < i {
                out.set(j, true);
            } else if j > i {
                out.set(j - 1, true);
            }
        }
        *self = out;
    }

    /// Concatenate two bit vectors.
    pub fn concat(&self, other: &Bits) -> Bits {
        let mut r = self.clone();
        r.resize(self.len + other.len);
        for j in other.ones() {
            r.set(self.len + j, true);
        }
        r
    }

    /// Bits `[start, start + len)` as a new vector.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        Bits::from_indices(
            len,
            self.ones().filter(|&j| j >= start && j < start + len).map(|j| j - start),
        )
    }
}

/// Incrementally built span of vectors with combination tracking.
///
/// Rows are kept in echelon form (each new row is reduced against the earlier
/// ones), and every row remembers which independent inputs produced it.
#[derive(Clone, Debug)]
pub struct Span {
    len: usize,
    rows: Vec<Bits>,
    pivots: Vec<usize>,
    combos: Vec<Bits>,
    capacity: usize,
}

impl Span {
    /// `capacity` bounds the number of independent vectors (width of combos).
    pub fn new(len: usize, capacity: usize) -> Self {
        Span {
            len,
            rows: Vec::new(),
            pivots: Vec::new(),
            combos: Vec::new(),
            capacity,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduce `v`, returning the residual and the combination of inputs used.
    pub fn reduce(&self, v: &Bits) -> (Bits, Bits) {
        let mut r = v.clone();
        let mut c = Bits::zeros(self.capacity);
        for ((row, &p), combo) in self.rows.iter().zip(&self.pivots).zip(&self.combos) {
            if r.get(p) {
                r.xor_assign(row);
                c.xor_assign(combo);
            }
        }
        (r, c)
    }

    /// Inserts `v`; returns its input index if it was independent.
    pub fn insert(&mut self, v: &Bits) -> Option<usize> {
        assert_eq!(v.len(), self.len);
        let (r, mut c) = self.reduce(v);
        let p = r.first_one()?;
        let idx = self.rows.len();
        assert!(idx < self.capacity, "span capacity exceeded");
        c.flip(idx);
        self.rows.push(r);
        self.pivots.push(p);
        self.combos.push(c);
        Some(idx)
    }

    /// Combination of independent inputs equal to `v`, if `v` is in the span.
    pub fn express(&self, v: &Bits) -> Option<Bits> {
        let (r, c) = self.reduce(v);
        if r.is_zero() {
            Some(c)
        } else {
            None
        }
    }

    pub fn contains(&self, v: &Bits) -> bool {
        self.reduce(v).0.is_zero()
    }
}

/// Rank of a set of vectors.
pub fn rank(rows: &[Bits]) -> usize {
    let Some(first) = rows.first() else { return 0 };
    let mut s = Span::new(first.len(), rows.len());
    rows.iter().filter(|r| s.insert(r).is_some()).count()
}

/// Basis of `{h : r·h = 0 for every row r}` for vectors of length `n`.
pub fn nullspace(rows: &[Bits], n: usize) -> Vec<Bits> {
    // Fully reduced row echelon form.
    let mut m: Vec<Bits> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(k) = (r..m.len()).find(|&k| m[k].get(col)) else {
            continue;
        };
        m.swap(r, k);
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row.get(col) {
                row.xor_assign(&pivot_row);
            }
        }
        pivots.push(col);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let is_pivot: Vec<bool> = {
        let mut v = vec![false; n];
        for &p in &pivots {
            v[p] = true;
        }
        v
    };
    let mut out = Vec::new();
    for free in (0..n).filter(|&c| !is_pivot[c]) {
        let mut h = Bits::unit(n, free);
        for (i, &p) in pivots.iter().enumerate() {
            if m[i].get(free) {
                h.set(p, true);
            }
        }
        out.push(h);
    }
    out
}
