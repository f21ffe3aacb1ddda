//! Problem instance and the transition structure of the collecting chain.
//!
//! State `i` means `i` distinct stickers are pasted. One purchase either
//! repeats a sticker already owned (probability `i/n`) or adds a new one
//! (probability `(n-i)/n`). State `n` is absorbing.

use serde::Serialize;

use crate::error::{Error, Result};

/// An album of `n` distinct stickers sold one at a time at `price_cents`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AlbumSpec {
    n: usize,
    price_cents: u64,
}

impl AlbumSpec {
    pub fn new(n: usize, price_cents: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance(
                "album must have at least one sticker".into(),
            ));
        }
        Ok(Self { n, price_cents })
    }

    /// Album of `n` stickers with no price attached.
    pub fn unpriced(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn price_cents(&self) -> u64 {
        self.price_cents
    }

    fn check_state(&self, state: CollectorState) -> Result<usize> {
        if state.0 > self.n {
            Err(Error::InvalidState {
                state: state.0,
                n: self.n,
            })
        } else {
            Ok(state.0)
        }
    }
}

/// Number of distinct stickers already pasted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CollectorState(pub usize);

impl CollectorState {
    pub fn collected(&self) -> usize {
        self.0
    }
}

/// Dense row-stochastic `(n+1) x (n+1)` transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of rows (and columns), `n + 1`.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.dim() + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        let dim = self.dim();
        &self.entries[from * dim..(from + 1) * dim]
    }

    /// Nonzero entries as `(row, col, value)`, row-major.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let dim = self.dim();
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(move |(idx, &v)| (idx / dim, idx % dim, v))
    }
}

/// Probability of staying in state `i` (drawing a duplicate).
#[inline]
pub(crate) fn stay_probability(n: usize, i: usize) -> f64 {
    i as f64 / n as f64
}

/// Probability of moving from `i` to `i + 1` (drawing a new sticker).
#[inline]
pub(crate) fn advance_probability(n: usize, i: usize) -> f64 {
    (n - i) as f64 / n as f64
}

fn entry(n: usize, from: usize, to: usize) -> f64 {
    if from == n {
        if to == n {
            1.0
        } else {
            0.0
        }
    } else if to == from {
        stay_probability(n, from)
    } else if to == from + 1 {
        advance_probability(n, from)
    } else {
        0.0
    }
}

pub fn build_transition_matrix(spec: &AlbumSpec) -> TransitionMatrix {
    let n = spec.n();
    let dim = n + 1;
    let mut entries = vec![0.0; dim * dim];
    for from in 0..dim {
        entries[from * dim + from] = entry(n, from, from);
        if from < n {
            entries[from * dim + from + 1] = entry(n, from, from + 1);
        }
    }
    TransitionMatrix { n, entries }
}

/// One-step transition probability `P(X_{t+1} = to | X_t = from)`.
pub fn transition_probability(
    spec: &AlbumSpec,
    from: CollectorState,
    to: CollectorState,
) -> Result<f64> {
    let from = spec.check_state(from)?;
    let to = spec.check_state(to)?;
    Ok(entry(spec.n(), from, to))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> AlbumSpec {
        AlbumSpec::unpriced(n).unwrap()
    }

    #[test]
    fn rejects_empty_album() {
        assert!(matches!(
            AlbumSpec::new(0, 20),
            Err(Error::InvalidInstance(_))
        ));
    }

    #[test]
    fn single_sticker_matrix() {
        let m = build_transition_matrix(&spec(1));
        assert_eq!(m.row(0), &[0.0, 1.0]);
        assert_eq!(m.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn two_sticker_matrix() {
        let m = build_transition_matrix(&spec(2));
        assert_eq!(m.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(m.row(1), &[0.0, 0.5, 0.5]);
        assert_eq!(m.row(2), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn world_cup_album_last_rows() {
        let m = build_transition_matrix(&spec(649));
        assert_eq!(m.dim(), 650);
        let penultimate = m.row(648);
        assert!(penultimate[..648].iter().all(|&v| v == 0.0));
        assert_eq!(penultimate[648], 648.0 / 649.0);
        assert_eq!(penultimate[649], 1.0 / 649.0);
        let last = m.row(649);
        assert!(last[..649].iter().all(|&v| v == 0.0));
        assert_eq!(last[649], 1.0);
    }

    #[test]
    fn transition_probability_examples() {
        let s = spec(649);
        let p = transition_probability(&s, CollectorState(648), CollectorState(649)).unwrap();
        assert_eq!(p, 1.0 / 649.0);

        let s = spec(5);
        assert_eq!(
            transition_probability(&s, CollectorState(2), CollectorState(2)).unwrap(),
            2.0 / 5.0
        );
        assert_eq!(
            transition_probability(&s, CollectorState(3), CollectorState(2)).unwrap(),
            0.0
        );
    }

    #[test]
    fn out_of_range_state() {
        let s = spec(5);
        assert_eq!(
            transition_probability(&s, CollectorState(6), CollectorState(2)),
            Err(Error::InvalidState { state: 6, n: 5 })
        );
        assert!(transition_probability(&s, CollectorState(0), CollectorState(7)).is_err());
    }

    #[test]
    fn rows_are_stochastic_and_upper_triangular() {
        for n in 1..=2000 {
            let m = build_transition_matrix(&spec(n));
            for i in 0..=n {
                let row = m.row(i);
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-12, "n={n} row {i} sums to {sum}");
                assert!(row[..i].iter().all(|&v| v == 0.0));
                let nonzero = row.iter().filter(|&&v| v != 0.0).count();
                let expected = if i == 0 || i == n { 1 } else { 2 };
                assert_eq!(nonzero, expected, "n={n} row {i}");
            }
        }
    }

    #[test]
    fn pointwise_agrees_with_matrix() {
        for n in 1..=50 {
            let s = spec(n);
            let m = build_transition_matrix(&s);
            for i in 0..=n {
                for j in 0..=n {
                    let p =
                        transition_probability(&s, CollectorState(i), CollectorState(j)).unwrap();
                    assert_eq!(p.to_bits(), m.get(i, j).to_bits());
                }
            }
        }
    }

    #[test]
    fn triplets_list_nonzeros_in_order() {
        let m = build_transition_matrix(&spec(2));
        let t: Vec<_> = m.triplets().collect();
        assert_eq!(t, vec![(0, 1, 1.0), (1, 1, 0.5), (1, 2, 0.5), (2, 2, 1.0)]);
    }
}
