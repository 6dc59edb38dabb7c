use std::cell::{Cell, RefCell};

use crate::error::{check_dim, Result};
use crate::krylov::{
    augmented_pcg_from, Augmentation, BlockFactor, DirectAugmentation, FactorBlock,
    LinearOperator, OrthoMode, PcgOptions, ReducedOperator,
};
use crate::linalg::{norm2, DenseMatrix, Instrumentation, SparseSpdMatrix};

use super::solve::REDUCED_TOL_FLOOR;
use crate::precond::Preconditioner;

struct InnerBasis {
    basis: DenseMatrix,
    images: DenseMatrix,
    factor: BlockFactor,
}

/// Augmentation over all of `Y` whose reduced solves `YᵀAY μ = YᵀAz` run augmented
/// CG on the implicit reduced operator. Each inner run is augmented with the
/// directions of all earlier runs, so their Gram blocks extend one block-diagonal
/// factor.
pub struct InnerAugmentation<'a> {
    y: &'a DenseMatrix,
    a: &'a SparseSpdMatrix,
    op: ReducedOperator<'a>,
    inner: RefCell<InnerBasis>,
    tol: f64,
    mode: OrthoMode,
    iterations: Cell<usize>,
}

impl<'a> InnerAugmentation<'a> {
    /// `basis`/`images` are reduced-space directions with `images = YᵀAY·basis`,
    /// factored block-diagonally by `factor`.
    pub fn new(
        a: &'a SparseSpdMatrix,
        y: &'a DenseMatrix,
        basis: DenseMatrix,
        images: DenseMatrix,
        factor: BlockFactor,
        tol: f64,
        mode: OrthoMode,
    ) -> Result<Self> {
        check_dim(y.cols(), basis.rows())?;
        check_dim(basis.cols(), factor.order())?;
        Ok(Self {
            y,
            a,
            op: ReducedOperator::new(a, y)?,
            inner: RefCell::new(InnerBasis { basis, images, factor }),
            tol,
            mode,
            iterations: Cell::new(0),
        })
    }

    /// Total inner iterations so far.
    pub fn iterations(&self) -> usize {
        self.iterations.get()
    }

    pub fn inner_dim(&self) -> usize {
        self.inner.borrow().basis.cols()
    }
}

impl Augmentation for InnerAugmentation<'_> {
    fn dim(&self) -> usize {
        self.y.cols()
    }

    fn expand(&self, coeffs: &[f64]) -> Vec<f64> {
        self.y.matvec(coeffs)
    }

    fn project(&self, z: &[f64], sink: &Instrumentation) -> Result<Vec<f64>> {
        let az = self.a.spmv(z, sink)?;
        let f = self.y.t_matvec(&az);
        let tol = self.tol.max(REDUCED_TOL_FLOOR * norm2(&f));
        let mut st = self.inner.borrow_mut();
        let m = self.y.cols();
        let (x0, r0) = if st.basis.cols() > 0 {
            let c0 = st.factor.solve(&st.basis.t_matvec(&f));
            let x0 = st.basis.matvec(&c0);
            let ac = st.images.matvec(&c0);
            (x0, f.iter().zip(&ac).map(|(u, v)| u - v).collect())
        } else {
            (vec![0.0; m], f)
        };
        let aug = if st.basis.cols() > 0 {
            Some(DirectAugmentation::from_parts(
                st.basis.clone(),
                st.images.clone(),
                st.factor.clone(),
            )?)
        } else {
            None
        };
        let opts = PcgOptions {
            tol,
            mode: self.mode,
            max_iter: Some(m.saturating_sub(st.basis.cols())),
            relative: false,
            allow_partial: true,
        };
        let ident = Preconditioner::identity(self.op.dim());
        let res = augmented_pcg_from(
            &self.op,
            x0,
            r0,
            aug.as_ref().map(|a| a as &dyn Augmentation),
            &ident,
            &opts,
            sink,
            None,
        )?;
        if res.k > 0 {
            st.basis.hcat(&res.v.columns)?;
            st.images.hcat(&res.images)?;
            st.factor.push(FactorBlock::Diagonal(res.gamma.clone()));
        }
        self.iterations.set(self.iterations.get() + res.k);
        Ok(res.x)
    }
}
