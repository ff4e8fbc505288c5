//! Three-dimensional complex FFT assembled from rustfft line transforms.
//!
//! Lines are independent, so results do not depend on the rayon thread count.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

pub(crate) struct Fft3<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Fft3<T> {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized in-place transform of an `n³` block.
    pub(crate) fn process(&self, data: &mut [Complex<T>], dir: Direction) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        let plan = match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        let scratch_len = plan.get_inplace_scratch_len();
        let zero = Complex::new(T::zero(), T::zero());

        // axis 3: contiguous rows
        data.par_chunks_mut(n).for_each_init(
            || vec![zero; scratch_len],
            |scratch, row| plan.process_with_scratch(row, scratch),
        );

        // axis 2: columns inside each i1-plane
        data.par_chunks_mut(n * n).for_each_init(
            || (vec![zero; n], vec![zero; scratch_len]),
            |(line, scratch), plane| {
                for i3 in 0..n {
                    for i2 in 0..n {
                        line[i2] = plane[i2 * n + i3];
                    }
                    plan.process_with_scratch(line, scratch);
                    for i2 in 0..n {
                        plane[i2 * n + i3] = line[i2];
                    }
                }
            },
        );

        // axis 1: transpose so that i1 runs fastest, transform, transpose back
        let mut t = vec![zero; n * n * n];
        {
            let src: &[Complex<T>] = data;
            t.par_chunks_mut(n * n).enumerate().for_each(|(i2, block)| {
                for i3 in 0..n {
                    for i1 in 0..n {
                        block[i3 * n + i1] = src[(i1 * n + i2) * n + i3];
                    }
                }
            });
        }
        t.par_chunks_mut(n).for_each_init(
            || vec![zero; scratch_len],
            |scratch, row| plan.process_with_scratch(row, scratch),
        );
        data.par_chunks_mut(n * n).enumerate().for_each(|(i1, plane)| {
            for i2 in 0..n {
                for i3 in 0..n {
                    plane[i2 * n + i3] = t[(i2 * n + i3) * n + i1];
                }
            }
        });
    }
}
