//! Bounds-checked front end for `matrixmultiply::dgemm`.
//!
//! Matrices are addressed as strided windows into flat `f64` buffers so that
//! transposes and sub-blocks never need to be copied.

/// A strided rectangular window into a flat buffer.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Strided {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl Strided {
    /// Sub-block of a row-major matrix with leading dimension `ld`.
    pub fn block(ld: usize, row: usize, col: usize, rows: usize, cols: usize) -> Self {
        Strided {
            offset: row * ld + col,
            rows,
            cols,
            row_stride: ld,
            col_stride: 1,
        }
    }

    /// A whole row-major `rows x cols` matrix.
    pub fn full(rows: usize, cols: usize) -> Self {
        Self::block(cols, 0, 0, rows, cols)
    }

    pub fn t(self) -> Self {
        Strided {
            offset: self.offset,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }

    fn fits(&self, len: usize) -> bool {
        if self.rows == 0 || self.cols == 0 {
            return self.offset <= len;
        }
        let last = self.offset + (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride;
        last < len
    }
}

/// `c <- alpha * a * b + beta * c` over strided windows.
///
/// Panics if the shapes disagree or a window reaches past its buffer; callers
/// validate user-facing shapes before getting here.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    alpha: f64,
    a: &[f64],
    av: Strided,
    b: &[f64],
    bv: Strided,
    beta: f64,
    c: &mut [f64],
    cv: Strided,
) {
    assert_eq!(av.cols, bv.rows, "gemm inner dimension");
    assert_eq!(cv.rows, av.rows, "gemm output rows");
    assert_eq!(cv.cols, bv.cols, "gemm output cols");
    assert!(av.fits(a.len()) && bv.fits(b.len()) && cv.fits(c.len()), "gemm window out of bounds");
    let (m, k, n) = (av.rows, av.cols, bv.cols);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for i in 0..m {
            for j in 0..n {
                let idx = cv.offset + i * cv.row_stride + j * cv.col_stride;
                c[idx] = if beta == 0.0 { 0.0 } else { beta * c[idx] };
            }
        }
        return;
    }
    // SAFETY: every window was checked to lie inside its buffer above, and `c`
    // is a unique borrow so it cannot alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr().add(av.offset),
            av.row_stride as isize,
            av.col_stride as isize,
            b.as_ptr().add(bv.offset),
            bv.row_stride as isize,
            bv.col_stride as isize,
            beta,
            c.as_mut_ptr().add(cv.offset),
            cv.row_stride as isize,
            cv.col_stride as isize,
        );
    }
}
