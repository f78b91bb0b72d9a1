//! Dense hour × bus tables.

use crate::num::Real;

/// Values indexed by (window hour, bus index), hour-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BusSeries<T> {
    hours: usize,
    buses: usize,
    values: Vec<T>,
}

impl<T: Real> BusSeries<T> {
    pub fn zeros(hours: usize, buses: usize) -> Self {
        Self {
            hours,
            buses,
            values: vec![T::zero(); hours * buses],
        }
    }

    pub fn from_fn(hours: usize, buses: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(hours * buses);
        for t in 0..hours {
            for j in 0..buses {
                values.push(f(t, j));
            }
        }
        Self {
            hours,
            buses,
            values,
        }
    }

    /// Builds from rows (one per hour). Panics on ragged input.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let hours = rows.len();
        let buses = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == buses), "ragged rows");
        Self {
            hours,
            buses,
            values: rows.into_iter().flatten().collect(),
        }
    }

    pub fn hours(&self) -> usize {
        self.hours
    }

    pub fn buses(&self) -> usize {
        self.buses
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.hours == other.hours && self.buses == other.buses
    }

    #[inline]
    pub fn get(&self, t: usize, j: usize) -> T {
        self.values[t * self.buses + j]
    }

    #[inline]
    pub fn set(&mut self, t: usize, j: usize, v: T) {
        self.values[t * self.buses + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, t: usize, j: usize, v: T) {
        self.values[t * self.buses + j] += v;
    }

    pub fn row(&self, t: usize) -> &[T] {
        &self.values[t * self.buses..(t + 1) * self.buses]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            hours: self.hours,
            buses: self.buses,
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Entrywise combination; panics when shapes differ.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert!(self.same_shape(other), "shape mismatch");
        Self {
            hours: self.hours,
            buses: self.buses,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Sum over buses at hour `t`.
    pub fn hour_total(&self, t: usize) -> T {
        self.row(t).iter().copied().sum()
    }

    /// Hours `range` as a new table.
    pub fn slice_hours(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            hours: range.len(),
            buses: self.buses,
            values: self.values[range.start * self.buses..range.end * self.buses].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_hour_major() {
        let s = BusSeries::from_fn(2, 3, |t, j| (t * 10 + j) as f64);
        assert_eq!(s.get(1, 2), 12.0);
        assert_eq!(s.row(1), &[10.0, 11.0, 12.0]);
        assert_eq!(s.hour_total(0), 3.0);
        assert_eq!(s.slice_hours(1..2).values(), &[10.0, 11.0, 12.0]);
        assert_eq!(s.map(|v| -v).max_abs(), 12.0);
    }
}
