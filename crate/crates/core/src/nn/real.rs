use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, NumAssign};

/// Floating point element type for tensors.
///
/// Training runs use `f32`; gradient checks use `f64`.
pub trait Real:
    Float + NumAssign + Sum + Copy + Default + Debug + Display + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;

    /// `c[m×n] += a[m×k] · b[k×n]` over strided row/column layouts.
    #[allow(clippy::too_many_arguments)]
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], a_strides: Strides, b: &[Self], b_strides: Strides, c: &mut [Self]);
}

/// Row and column strides of a matrix view, in elements.
pub type Strides = (isize, isize);


impl Real for f32 {
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], sa: Strides, b: &[Self], sb: Strides, c: &mut [Self]) {
        check_views(m, k, n, a.len(), sa, b.len(), sb, c.len());
        // SAFETY: `check_views` confirms every strided index stays inside its slice.
        unsafe {
            matrixmultiply::sgemm(
                m, k, n, 1.0, a.as_ptr(), sa.0, sa.1, b.as_ptr(), sb.0, sb.1, 1.0,
                c.as_mut_ptr(), n as isize, 1,
            );
        }
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], sa: Strides, b: &[Self], sb: Strides, c: &mut [Self]) {
        check_views(m, k, n, a.len(), sa, b.len(), sb, c.len());
        // SAFETY: `check_views` confirms every strided index stays inside its slice.
        unsafe {
            matrixmultiply::dgemm(
                m, k, n, 1.0, a.as_ptr(), sa.0, sa.1, b.as_ptr(), sb.0, sb.1, 1.0,
                c.as_mut_ptr(), n as isize, 1,
            );
        }
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

#[allow(clippy::too_many_arguments)]
fn check_views(m: usize, k: usize, n: usize, a: usize, sa: Strides, b: usize, sb: Strides, c: usize) {
    let extent = |rows: usize, cols: usize, (rs, cs): Strides| {
        if rows == 0 || cols == 0 {
            0
        } else {
            (rows - 1) * rs as usize + (cols - 1) * cs as usize + 1
        }
    };
    assert!(sa.0 >= 0 && sa.1 >= 0 && sb.0 >= 0 && sb.1 >= 0);
    assert!(extent(m, k, sa) <= a && extent(k, n, sb) <= b && m * n <= c);
}
