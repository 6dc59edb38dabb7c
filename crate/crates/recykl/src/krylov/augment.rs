use crate::error::{check_dim, Result};
use crate::linalg::{dense_cholesky, DenseLowerTriangular, DenseMatrix, Instrumentation};

use super::operator::LinearOperator;

/// Access to an augmenting basis `Y` and to solves with its Galerkin matrix `YᵀAY`.
pub trait Augmentation {
    /// Number of augmenting vectors.
    fn dim(&self) -> usize;
    /// `Y c`
    fn expand(&self, coeffs: &[f64]) -> Vec<f64>;
    /// Solves `YᵀAY μ = YᵀA z` for `μ`.
    fn project(&self, z: &[f64], sink: &Instrumentation) -> Result<Vec<f64>>;
}

/// One diagonal block of a block-diagonal Cholesky factor.
#[derive(Debug, Clone)]
pub enum FactorBlock {
    /// Dense block with `G = L Lᵀ`.
    Cholesky(DenseLowerTriangular),
    /// Diagonal block holding the Gram diagonal itself (factor `√Γ`).
    Diagonal(Vec<f64>),
}

impl FactorBlock {
    pub fn order(&self) -> usize {
        match self {
            FactorBlock::Cholesky(l) => l.order(),
            FactorBlock::Diagonal(d) => d.len(),
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match self {
            FactorBlock::Cholesky(l) => l.solve(rhs),
            FactorBlock::Diagonal(d) => rhs.iter().zip(d).map(|(r, g)| r / g).collect(),
        }
    }
}

/// Block-diagonal factor `diag(R̂, √Γ̂, √T̆⁽⁰⁾, …)` of a block-diagonal Gram matrix.
#[derive(Debug, Clone, Default)]
pub struct BlockFactor {
    blocks: Vec<FactorBlock>,
    order: usize,
}

impl BlockFactor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, block: FactorBlock) {
        if block.order() > 0 {
            self.order += block.order();
            self.blocks.push(block);
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn blocks(&self) -> &[FactorBlock] {
        &self.blocks
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rhs.len(), self.order);
        let mut out = Vec::with_capacity(self.order);
        let mut off = 0;
        for b in &self.blocks {
            let k = b.order();
            out.extend(b.solve(&rhs[off..off + k]));
            off += k;
        }
        out
    }
}

/// Augmentation with stored images `A Y` and a direct factor of `YᵀAY`.
#[derive(Debug, Clone)]
pub struct DirectAugmentation {
    basis: DenseMatrix,
    images: DenseMatrix,
    factor: BlockFactor,
}

impl DirectAugmentation {
    pub fn from_parts(basis: DenseMatrix, images: DenseMatrix, factor: BlockFactor) -> Result<Self> {
        check_dim(basis.rows(), images.rows())?;
        check_dim(basis.cols(), images.cols())?;
        check_dim(basis.cols(), factor.order())?;
        Ok(Self { basis, images, factor })
    }

    /// Applies `op` to every column, assembles `YᵀAY` and factors it.
    pub fn assemble(op: &dyn LinearOperator, basis: DenseMatrix, sink: &Instrumentation) -> Result<Self> {
        check_dim(op.dim(), basis.rows())?;
        let mut images = DenseMatrix::zeros(basis.rows(), 0);
        for j in 0..basis.cols() {
            images.push_col(&op.apply(basis.col(j), sink)?)?;
        }
        sink.record_reduced_assembly();
        let mut g = basis.t_matmul(&images);
        g.symmetrize();
        let mut factor = BlockFactor::new();
        factor.push(FactorBlock::Cholesky(dense_cholesky(&g)?));
        Ok(Self { basis, images, factor })
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    pub fn images(&self) -> &DenseMatrix {
        &self.images
    }

    pub fn factor(&self) -> &BlockFactor {
        &self.factor
    }

    /// Galerkin coefficients `(YᵀAY)⁻¹ Yᵀ r`.
    pub fn galerkin(&self, r: &[f64]) -> Vec<f64> {
        self.factor.solve(&self.basis.t_matvec(r))
    }

    /// `A Y c` from the stored images.
    pub fn image(&self, coeffs: &[f64]) -> Vec<f64> {
        self.images.matvec(coeffs)
    }
}

impl Augmentation for DirectAugmentation {
    fn dim(&self) -> usize {
        self.basis.cols()
    }

    fn expand(&self, coeffs: &[f64]) -> Vec<f64> {
        self.basis.matvec(coeffs)
    }

    fn project(&self, z: &[f64], _sink: &Instrumentation) -> Result<Vec<f64>> {
        check_dim(self.basis.rows(), z.len())?;
        Ok(self.factor.solve(&self.images.t_matvec(z)))
    }
}
