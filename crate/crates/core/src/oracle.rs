//! Exact solvers used to verify the stochastic search at small lengths.

use crate::error::{Error, Result};
use crate::sequence::{self, autocorrelation, BinarySequence};
use crate::skew::{SkewHalf, SkewState};

pub const EXHAUSTIVE_MAX_LEN: usize = 24;
pub const SKEW_EXHAUSTIVE_MAX_LEN: usize = 41;
pub const BRANCH_BOUND_MAX_LEN: usize = 40;

/// Global minimum energy over all `2^{L-1}` sequences with `s_1 = +1`,
/// visited in Gray-code order so each step is a single O(L) flip.
pub fn oracle_exhaustive(len: usize) -> Result<(i64, BinarySequence)> {
    if len < 2 {
        return Err(Error::InvalidLength(len));
    }
    if len > EXHAUSTIVE_MAX_LEN {
        return Err(Error::EnumerationBound {
            length: len,
            bound: EXHAUSTIVE_MAX_LEN,
        });
    }
    let mut signs = vec![1i8; len];
    let mut corr = autocorrelation(&BinarySequence::from_signs_unchecked(signs.clone()))
        .correlations()
        .to_vec();
    let mut energy: i64 = corr.iter().map(|&c| (c as i64).pow(2)).sum();
    let mut best = (energy, signs.clone());
    for step in 1u64..1 << (len - 1) {
        let pos = 1 + step.trailing_zeros() as usize;
        energy += sequence::apply_single_flip(&mut signs, &mut corr, pos);
        if energy < best.0 {
            best = (energy, signs.clone());
        }
    }
    Ok((best.0, BinarySequence::from_signs_unchecked(best.1)))
}

/// Minimum energy over skew-symmetric sequences of odd length `L`.
pub fn oracle_skew_exhaustive(len: usize) -> Result<(i64, BinarySequence)> {
    if len < 3 || len.is_multiple_of(2) {
        return Err(Error::InvalidLength(len));
    }
    if len > SKEW_EXHAUSTIVE_MAX_LEN {
        return Err(Error::EnumerationBound {
            length: len,
            bound: SKEW_EXHAUSTIVE_MAX_LEN,
        });
    }
    let half_len = len.div_ceil(2);
    let mut state = SkewState::new(SkewHalf::new(vec![1; half_len])?);
    let mut best = (state.energy(), state.to_sequence());
    for step in 1u64..1 << (half_len - 1) {
        // 1-based half index of the flipped position
        let j = 2 + step.trailing_zeros() as usize;
        state.apply_flip(j)?;
        if state.energy() < best.0 {
            best = (state.energy(), state.to_sequence());
        }
    }
    Ok(best)
}

/// Exact minimum by outside-in branch and bound.
///
/// Positions are fixed in the order `0, L-1, 1, L-2, ...`. For each lag the
/// products whose both ends are fixed form a partial sum `F_k`; the `U_k`
/// remaining products can lower `|C_k|` by at most `U_k`, and `C_k` has the
/// parity of `L - k`, so `|C_k| >= max(|F_k| - U_k, (L-k) mod 2)`.
pub fn oracle_branch_bound(len: usize) -> Result<(i64, BinarySequence)> {
    if len < 2 {
        return Err(Error::InvalidLength(len));
    }
    if len > BRANCH_BOUND_MAX_LEN {
        return Err(Error::EnumerationBound {
            length: len,
            bound: BRANCH_BOUND_MAX_LEN,
        });
    }
    let order: Vec<usize> = (0..len)
        .map(|d| if d % 2 == 0 { d / 2 } else { len - 1 - d / 2 })
        .collect();
    let mut search = BranchBound {
        len,
        signs: vec![0; len],
        partial: vec![0; len],
        fixed_terms: vec![0; len],
        assigned: Vec::with_capacity(len),
        best: i64::MAX,
        best_signs: Vec::new(),
        nodes: 0,
    };
    search.assign(&order, 0);
    Ok((
        search.best,
        BinarySequence::from_signs_unchecked(search.best_signs),
    ))
}

struct BranchBound {
    len: usize,
    signs: Vec<i8>,
    /// `F_k`, indexed by lag.
    partial: Vec<i32>,
    /// Products fixed so far per lag.
    fixed_terms: Vec<i32>,
    assigned: Vec<usize>,
    best: i64,
    best_signs: Vec<i8>,
    nodes: u64,
}

impl BranchBound {
    fn bound(&self) -> i64 {
        let n = self.len;
        (1..n)
            .map(|k| {
                let free = (n - k) as i32 - self.fixed_terms[k];
                let lb = (self.partial[k].abs() - free).max(((n - k) % 2) as i32) as i64;
                lb * lb
            })
            .sum()
    }

    fn place(&mut self, pos: usize, sign: i8, undo: bool) {
        let dir = if undo { -1 } else { 1 };
        for &q in &self.assigned {
            let k = pos.abs_diff(q);
            self.partial[k] += dir * (sign * self.signs[q]) as i32;
            self.fixed_terms[k] += dir;
        }
    }

    fn assign(&mut self, order: &[usize], depth: usize) {
        let pos = order[depth];
        let choices: &[i8] = if depth == 0 { &[1] } else { &[1, -1] };
        for &sign in choices {
            self.nodes += 1;
            self.place(pos, sign, false);
            self.signs[pos] = sign;
            self.assigned.push(pos);
            let bound = self.bound();
            if bound < self.best {
                if depth + 1 == self.len {
                    self.best = bound;
                    self.best_signs = self.signs.clone();
                } else {
                    self.assign(order, depth + 1);
                }
            }
            self.assigned.pop();
            self.signs[pos] = 0;
            self.place(pos, sign, true);
        }
    }
}
