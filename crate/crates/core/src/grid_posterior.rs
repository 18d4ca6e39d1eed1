//! Posterior mean and variance maintained incrementally on a fixed point set.
//!
//! For each tracked point `p` the whitened kernel column `v_p = L^{-1} k_t(p)` is
//! extended by one entry per observation, which keeps `sigma_t^2(p) = 1 - |v_p|^2`
//! and `mu_t(p) = v_p^T L^{-1} y` current in `O(t)` per point and step. The
//! whitened column of a tracked point is also exactly the next Cholesky row when
//! that point is observed.

use crate::error::Result;
use crate::exec::Exec;
use crate::kernels::KernelSpec;
use crate::points::PointSet;
use crate::posterior::{clamp_variance, dot};

/// Number of response vectors a tracker can carry (e.g. noisy and noiseless).
pub const MAX_RESPONSES: usize = 2;

#[derive(Clone, Debug)]
struct Track {
    whitened: Vec<f64>,
    reduction: f64,
    means: [f64; MAX_RESPONSES],
}

#[derive(Clone, Debug)]
pub struct GridPosterior<'a> {
    spec: KernelSpec,
    points: &'a PointSet,
    tracks: Vec<Track>,
    responses: usize,
    observed: usize,
    exec: Exec,
}

impl<'a> GridPosterior<'a> {
    pub fn new(spec: KernelSpec, points: &'a PointSet, responses: usize, exec: Exec) -> Self {
        assert!(
            (1..=MAX_RESPONSES).contains(&responses),
            "between 1 and {MAX_RESPONSES} response vectors"
        );
        let tracks = vec![
            Track {
                whitened: Vec::new(),
                reduction: 0.0,
                means: [0.0; MAX_RESPONSES],
            };
            points.len()
        ];
        GridPosterior {
            spec,
            points,
            tracks,
            responses,
            observed: 0,
            exec,
        }
    }

    pub fn points(&self) -> &'a PointSet {
        self.points
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn observed(&self) -> usize {
        self.observed
    }

    /// `L^{-1} k_t(p_i)`.
    pub fn whitened(&self, i: usize) -> &[f64] {
        &self.tracks[i].whitened
    }

    pub fn mean(&self, i: usize, response: usize) -> f64 {
        self.tracks[i].means[response]
    }

    pub fn var(&self, i: usize) -> Result<f64> {
        clamp_variance(1.0 - self.tracks[i].reduction)
    }

    /// Folds in one observation at `x`, given its whitened row `L^{-1} k_t(x)`
    /// (before the update), the new Cholesky diagonal and the new entry of
    /// `L^{-1} y` for every response.
    pub fn observe(&mut self, x: &[f64], row: &[f64], diag: f64, whitened_y: &[f64]) {
        assert_eq!(row.len(), self.observed, "row length must equal observations so far");
        assert_eq!(whitened_y.len(), self.responses);
        let spec = &self.spec;
        let points = self.points;
        let responses = self.responses;
        let inv_diag = 1.0 / diag;
        self.exec.for_each_mut(&mut self.tracks, |i, track| {
            let kx = spec.eval_unchecked(points.point(i), x);
            let v = (kx - dot(row, &track.whitened)) * inv_diag;
            track.whitened.push(v);
            track.reduction += v * v;
            for (m, w) in track.means[..responses].iter_mut().zip(whitened_y) {
                *m += v * w;
            }
        });
        self.observed += 1;
    }
}
