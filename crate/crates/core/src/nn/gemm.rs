//! Thin checked wrapper over `matrixmultiply::dgemm`.

/// Strided view descriptor: element `(i, j)` lives at `offset + i * rs + j * cs`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Layout {
    pub offset: usize,
    pub rs: usize,
    pub cs: usize,
}

impl Layout {
    pub fn new(offset: usize, rs: usize, cs: usize) -> Self {
        Layout { offset, rs, cs }
    }

    fn last_index(&self, rows: usize, cols: usize) -> usize {
        self.offset + (rows - 1) * self.rs + (cols - 1) * self.cs
    }
}

/// `C[m x n] = A[m x k] * B[k x n] + beta * C`.
///
/// Panics if any view reaches outside its slice.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    la: Layout,
    b: &[f64],
    lb: Layout,
    beta: f64,
    c: &mut [f64],
    lc: Layout,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(lc.last_index(m, n) < c.len(), "gemm: C view out of bounds");
    if k == 0 {
        for i in 0..m {
            for j in 0..n {
                c[lc.offset + i * lc.rs + j * lc.cs] *= beta;
            }
        }
        return;
    }
    assert!(la.last_index(m, k) < a.len(), "gemm: A view out of bounds");
    assert!(lb.last_index(k, n) < b.len(), "gemm: B view out of bounds");
    // SAFETY: every element touched through the three views was bounds-checked
    // above, and `c` is uniquely borrowed so it cannot alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr().add(la.offset),
            la.rs as isize,
            la.cs as isize,
            b.as_ptr().add(lb.offset),
            lb.rs as isize,
            lb.cs as isize,
            beta,
            c.as_mut_ptr().add(lc.offset),
            lc.rs as isize,
            lc.cs as isize,
        );
    }
}
