use std::cell::RefCell;

use crate::error::{check_dim, Result};
use crate::linalg::{DenseMatrix, Instrumentation, SparseSpdMatrix};

/// A symmetric linear operator.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], sink: &Instrumentation) -> Result<Vec<f64>>;
}

impl LinearOperator for SparseSpdMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], sink: &Instrumentation) -> Result<Vec<f64>> {
        self.spmv(x, sink)
    }
}

/// The reduced operator `p ↦ Yᵀ(A(Y p))`, applied without forming `YᵀAY`.
///
/// Optionally logs the full-space images `A(Y p)` of every application.
pub struct ReducedOperator<'a> {
    a: &'a SparseSpdMatrix,
    y: &'a DenseMatrix,
    log: RefCell<Option<Vec<Vec<f64>>>>,
}

impl<'a> ReducedOperator<'a> {
    pub fn new(a: &'a SparseSpdMatrix, y: &'a DenseMatrix) -> Result<Self> {
        check_dim(a.n(), y.rows())?;
        Ok(Self { a, y, log: RefCell::new(None) })
    }

    pub fn basis(&self) -> &DenseMatrix {
        self.y
    }

    pub fn matrix(&self) -> &SparseSpdMatrix {
        self.a
    }

    pub fn start_log(&self) {
        *self.log.borrow_mut() = Some(Vec::new());
    }

    /// Stops logging and returns the recorded full-space images.
    pub fn take_log(&self) -> Vec<Vec<f64>> {
        self.log.borrow_mut().take().unwrap_or_default()
    }
}

impl LinearOperator for ReducedOperator<'_> {
    fn dim(&self) -> usize {
        self.y.cols()
    }

    fn apply(&self, x: &[f64], sink: &Instrumentation) -> Result<Vec<f64>> {
        check_dim(self.y.cols(), x.len())?;
        let full = self.y.matvec(x);
        let img = self.a.spmv(&full, sink)?;
        let out = self.y.t_matvec(&img);
        if let Some(log) = self.log.borrow_mut().as_mut() {
            log.push(img);
        }
        Ok(out)
    }
}
