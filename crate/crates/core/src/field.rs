//! Node-centred scalar samples on a uniform box grid.

/// Samples at nodes `(i*hx, j*hy, k*hz)`, stored x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3 {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub data: Vec<f64>,
    /// Seconds.
    pub time: f64,
}

impl Field3 {
    /// Zero field spanning `lengths` with `dims` nodes per axis.
    pub fn zeros(dims: [usize; 3], lengths: [f64; 3], time: f64) -> Self {
        assert!(dims.iter().all(|&n| n >= 2), "a field needs at least two nodes per axis");
        let spacing = [0, 1, 2].map(|k| lengths[k] / (dims[k] - 1) as f64);
        Self { dims, spacing, data: vec![0.0; dims[0] * dims[1] * dims[2]], time }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.index(i, j, k)]
    }

    pub fn lengths(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.spacing[k] * (self.dims[k] - 1) as f64)
    }

    /// Coordinate of node `i` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.dims[axis] {
            self.lengths()[axis]
        } else {
            i as f64 * self.spacing[axis]
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Trilinear interpolation, clamped to the box.
    pub fn sample(&self, p: [f64; 3]) -> f64 {
        let mut lo = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let u = (p[a] / self.spacing[a]).clamp(0.0, (self.dims[a] - 1) as f64);
            let i = (u.floor() as usize).min(self.dims[a] - 2);
            lo[a] = i;
            frac[a] = u - i as f64;
        }
        let mut acc = 0.0;
        for dk in 0..2 {
            let wk = if dk == 0 { 1.0 - frac[2] } else { frac[2] };
            for dj in 0..2 {
                let wj = if dj == 0 { 1.0 - frac[1] } else { frac[1] };
                for di in 0..2 {
                    let wi = if di == 0 { 1.0 - frac[0] } else { frac[0] };
                    let w = wi * wj * wk;
                    if w != 0.0 {
                        acc += w * self.get(lo[0] + di, lo[1] + dj, lo[2] + dk);
                    }
                }
            }
        }
        acc
    }

    /// Trilinear resampling onto another node grid over the same box.
    pub fn resample(&self, dims: [usize; 3]) -> Field3 {
        let mut out = Field3::zeros(dims, self.lengths(), self.time);
        for k in 0..dims[2] {
            let z = out.coord(2, k);
            for j in 0..dims[1] {
                let y = out.coord(1, j);
                for i in 0..dims[0] {
                    let x = out.coord(0, i);
                    let idx = out.index(i, j, k);
                    out.data[idx] = self.sample([x, y, z]);
                }
            }
        }
        out
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_x_fastest() {
        let f = Field3::zeros([3, 4, 5], [1.0, 1.0, 1.0], 0.0);
        assert_eq!(f.index(1, 0, 0), 1);
        assert_eq!(f.index(0, 1, 0), 3);
        assert_eq!(f.index(0, 0, 1), 12);
        assert_eq!(f.lengths(), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn trilinear_reproduces_linear_functions() {
        let mut f = Field3::zeros([5, 4, 3], [1.0, 2.0, 0.5], 0.0);
        for k in 0..3 {
            for j in 0..4 {
                for i in 0..5 {
                    let idx = f.index(i, j, k);
                    f.data[idx] = 1.0 + f.coord(0, i) - 2.0 * f.coord(1, j) + 3.0 * f.coord(2, k);
                }
            }
        }
        let p = [0.37, 1.21, 0.33];
        assert!((f.sample(p) - (1.0 + 0.37 - 2.42 + 0.99)).abs() < 1e-14);
        let g = f.resample([9, 7, 5]);
        assert!((g.get(8, 6, 4) - (1.0 + 1.0 - 4.0 + 1.5)).abs() < 1e-14);
    }
}
