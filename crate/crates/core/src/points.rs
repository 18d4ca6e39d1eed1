//! Point sets and axis-aligned box domains.

use rand::Rng;

use crate::error::{Error, Result};

/// A flat, row-major set of points in R^d.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be at least 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        assert!(dim > 0, "point dimension must be at least 1");
        PointSet {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut set = PointSet::empty(dim.max(1));
        for r in rows {
            set.push(r.as_ref())?;
        }
        Ok(set)
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "point has dimension {}, expected {}",
                x.len(),
                self.dim
            )));
        }
        self.coords.extend_from_slice(x);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Index of the first point equal to `x` coordinate-for-coordinate.
    pub fn position(&self, x: &[f64]) -> Option<usize> {
        self.iter().position(|p| p == x)
    }
}

/// Axis-aligned box `[lower, upper]` with `lower < upper` componentwise.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::invalid(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "box axis {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(BoxDomain { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        BoxDomain {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    /// Number of lattice points per axis used for a requested total `count`:
    /// the largest `n` with `n^d <= count` (at least 1).
    pub fn lattice_side(&self, count: usize) -> usize {
        let d = self.dim() as u32;
        let mut n = (count.max(1) as f64).powf(1.0 / d as f64).round() as usize;
        while n > 1 && n.checked_pow(d).is_none_or(|v| v > count) {
            n -= 1;
        }
        while (n + 1).checked_pow(d).is_some_and(|v| v <= count) {
            n += 1;
        }
        n.max(1)
    }

    /// Tensor lattice with endpoints included; the first axis varies slowest.
    pub fn lattice(&self, count: usize) -> PointSet {
        let d = self.dim();
        let n = self.lattice_side(count);
        let axis: Vec<Vec<f64>> = (0..d)
            .map(|k| {
                let (lo, hi) = (self.lower[k], self.upper[k]);
                if n == 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..n)
                        .map(|i| {
                            if i == n - 1 {
                                hi
                            } else {
                                lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
                            }
                        })
                        .collect()
                }
            })
            .collect();
        let total = n.pow(d as u32);
        let mut coords = Vec::with_capacity(total * d);
        for mut idx in 0..total {
            let start = coords.len();
            coords.resize(start + d, 0.0);
            for k in (0..d).rev() {
                coords[start + k] = axis[k][idx % n];
                idx /= n;
            }
        }
        PointSet { dim: d, coords }
    }

    /// First `count` points of the Halton sequence (skipping the origin), mapped into the box.
    pub fn halton(&self, count: usize) -> PointSet {
        const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
        let d = self.dim();
        assert!(d <= PRIMES.len(), "halton sequence supports up to 16 dimensions");
        let mut coords = Vec::with_capacity(count * d);
        for i in 1..=count as u64 {
            for k in 0..d {
                let u = radical_inverse(i, PRIMES[k]);
                coords.push(self.lower[k] + (self.upper[k] - self.lower[k]) * u);
            }
        }
        PointSet { dim: d, coords }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> PointSet {
        let d = self.dim();
        let mut coords = Vec::with_capacity(count * d);
        for _ in 0..count {
            for k in 0..d {
                coords.push(rng.random_range(self.lower[k]..=self.upper[k]));
            }
        }
        PointSet { dim: d, coords }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_shapes() {
        let b = BoxDomain::unit(2);
        let g = b.lattice(10_000);
        assert_eq!(g.len(), 10_000);
        assert_eq!(g.point(0), &[0.0, 0.0]);
        assert_eq!(g.point(1), &[0.0, 1.0 / 99.0]);
        assert_eq!(g.point(9_999), &[1.0, 1.0]);
        // 10 is not a square: falls back to 3x3
        assert_eq!(b.lattice(10).len(), 9);
        let one = BoxDomain::new(vec![-1.0], vec![3.0]).unwrap();
        assert_eq!(one.lattice(5).coords(), &[-1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(one.lattice(1).coords(), &[1.0]);
    }

    #[test]
    fn halton_in_box() {
        let b = BoxDomain::new(vec![0.0, -2.0], vec![1.0, 2.0]).unwrap();
        let h = b.halton(100);
        assert_eq!(h.len(), 100);
        assert!(h.iter().all(|p| b.contains(p)));
        assert_eq!(h.point(0), &[0.5, -2.0 + 4.0 / 3.0]);
    }

    #[test]
    fn rejects_bad_boxes() {
        assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![1.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(BoxDomain::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(PointSet::new(2, vec![1.0, 2.0, 3.0]).is_err());
    }
}
