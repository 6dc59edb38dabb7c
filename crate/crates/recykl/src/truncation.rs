//! Compression of the accumulated vectors `Z` into an augmenting basis `Y`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{
    dense_cholesky, generalized_symmetric_evd, DenseBasis, DenseLowerTriangular, DenseMatrix,
    Instrumentation, SparseSpdMatrix,
};
use crate::pod::{energy_truncation_dim, pod_modes_from_factor, pod_modes_from_gram};
use crate::weights::WeightKind;

/// Orthonormality slack below which the A-metric POD basis is kept as is.
const ORTHO_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    PodAprevPrev,
    PodAprevRbf,
    PodCtCPrev,
    PodCtCRbf,
    Deflation(usize),
    None,
}

impl Strategy {
    pub fn weight_kind(&self) -> Option<WeightKind> {
        match self {
            Strategy::PodAprevPrev | Strategy::PodCtCPrev => Some(WeightKind::Prev),
            Strategy::PodAprevRbf | Strategy::PodCtCRbf => Some(WeightKind::Rbf),
            _ => None,
        }
    }

    pub fn uses_output_metric(&self) -> bool {
        matches!(self, Strategy::PodCtCPrev | Strategy::PodCtCRbf)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::PodAprevPrev => f.write_str("pod-a-prev"),
            Strategy::PodAprevRbf => f.write_str("pod-a-rbf"),
            Strategy::PodCtCPrev => f.write_str("pod-ctc-prev"),
            Strategy::PodCtCRbf => f.write_str("pod-ctc-rbf"),
            Strategy::Deflation(m) => write!(f, "deflate:{m}"),
            Strategy::None => f.write_str("none"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pod-a-prev" => Strategy::PodAprevPrev,
            "pod-a-rbf" => Strategy::PodAprevRbf,
            "pod-ctc-prev" => Strategy::PodCtCPrev,
            "pod-ctc-rbf" => Strategy::PodCtCRbf,
            "none" => Strategy::None,
            _ => {
                let m = s
                    .strip_prefix("deflate:")
                    .and_then(|m| m.parse::<usize>().ok())
                    .filter(|&m| m >= 1)
                    .ok_or_else(|| Error::Config(format!("unknown truncation strategy `{s}`")))?;
                Strategy::Deflation(m)
            }
        })
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

/// Truncation and basis-management parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationConfig {
    pub strategy: Strategy,
    /// Energy criterion for the retained basis.
    pub nu_y: f64,
    /// Energy criterion for the stage-1 width.
    pub nu_w: f64,
    /// Storage threshold; `None` means unbounded.
    pub storage_cap: Option<usize>,
    /// Stage-1 admission threshold ϱ.
    pub stage1_threshold: f64,
    /// φ: orthogonalize stage 3 against the whole augmenting basis.
    pub full_orth: bool,
    /// Upper bound on the retained dimension; defaults to half the storage cap.
    pub max_retained: Option<usize>,
    /// Upper bound on the stage-1 width after truncation.
    pub max_stage1: Option<usize>,
    /// Re-express weight history across truncations instead of resetting it.
    pub keep_history: bool,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::PodAprevRbf,
            nu_y: 1.0,
            nu_w: 1.0,
            storage_cap: Some(50),
            stage1_threshold: 1.0,
            full_orth: false,
            max_retained: None,
            max_stage1: None,
            keep_history: false,
        }
    }
}

impl TruncationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.nu_w && self.nu_w <= self.nu_y && self.nu_y <= 1.0) {
            return Err(Error::Config(format!(
                "energy criteria must satisfy 0 <= nu_w <= nu_y <= 1 (got {}, {})",
                self.nu_w, self.nu_y
            )));
        }
        if self.storage_cap == Some(0) {
            return Err(Error::Config("storage cap must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.stage1_threshold) {
            return Err(Error::Config(format!(
                "stage-1 threshold {} outside [0, 1]",
                self.stage1_threshold
            )));
        }
        if let (Strategy::Deflation(m), Some(cap)) = (self.strategy, self.storage_cap) {
            if m > cap {
                return Err(Error::Config(format!("deflation keeps {m} > storage cap {cap}")));
            }
        }
        Ok(())
    }

    /// Effective bound on the retained dimension.
    pub fn retained_cap(&self) -> usize {
        match (self.max_retained, self.storage_cap) {
            (Some(m), Some(c)) => m.min(c),
            (Some(m), None) => m,
            (None, Some(c)) => (c / 2).max(1),
            (None, None) => usize::MAX,
        }
    }
}

/// Metric in which POD compression is performed.
#[derive(Debug, Clone, Copy)]
pub enum CompressionMetric<'a> {
    /// Energy norm of the just-solved matrix.
    AMetric,
    /// `CᵀC` given by its factor `C`.
    Output(&'a DenseMatrix),
}

#[derive(Debug, Clone)]
pub struct TruncationOutcome {
    pub y_new: DenseBasis,
    pub stage1_width: usize,
    /// `z × y` coefficients with `Y_new = Z · map`.
    pub truncation_map: DenseMatrix,
    pub pod_spectrum: Option<Vec<f64>>,
    /// Harmonic Ritz values in ascending order (deflation only).
    pub ritz_values: Option<Vec<f64>>,
    /// Whether the Cholesky re-orthogonalization step was applied.
    pub enforced: bool,
}

/// `A Z` column by column.
pub fn images(a: &SparseSpdMatrix, z: &DenseMatrix, sink: &Instrumentation) -> Result<DenseMatrix> {
    check_dim(a.n(), z.rows())?;
    let mut out = DenseMatrix::zeros(z.rows(), 0);
    for j in 0..z.cols() {
        out.push_col(&a.spmv(z.col(j), sink)?)?;
    }
    Ok(out)
}

fn gram_of(z: &DenseMatrix, az: &DenseMatrix) -> DenseMatrix {
    let mut g = z.t_matmul(az);
    g.symmetrize();
    g
}

/// Cholesky re-orthogonalization of coefficients: returns `map L⁻ᵀ` where
/// `mapᵀ G map = L Lᵀ`.
fn enforce_on_map(map: &DenseMatrix, gram: &DenseMatrix) -> Result<(DenseMatrix, DenseLowerTriangular)> {
    let mut g = map.t_matmul(&gram.matmul(map));
    g.symmetrize();
    let l = dense_cholesky(&g)?;
    Ok((l.right_solve_transpose(map), l))
}

fn orthonormality_error(map: &DenseMatrix, gram: &DenseMatrix) -> f64 {
    let g = map.t_matmul(&gram.matmul(map));
    g.sub(&DenseMatrix::identity(g.rows())).max_abs()
}

/// POD compression of `Z` with weights `eta`. `az` holds `A Z` for the matrix of
/// the just-solved system.
pub fn pod_compress_with_images(
    z: &DenseBasis,
    az: &DenseMatrix,
    eta: &[f64],
    metric: CompressionMetric<'_>,
    cfg: &TruncationConfig,
) -> Result<TruncationOutcome> {
    check_dim(z.m(), eta.len())?;
    check_dim(z.m(), az.cols())?;
    if z.m() == 0 {
        return Err(Error::EmptyBasis);
    }
    let gram = gram_of(&z.columns, az);
    let modes = match metric {
        CompressionMetric::AMetric => pod_modes_from_gram(&gram, eta)?,
        CompressionMetric::Output(c) => {
            check_dim(c.cols(), z.n())?;
            pod_modes_from_factor(&c.matmul(&z.columns), eta)?
        }
    };
    let sigma_sq = modes.sigma_sq();
    let y = energy_truncation_dim(&sigma_sq, cfg.nu_y)?.min(cfg.retained_cap());
    let w = energy_truncation_dim(&sigma_sq, cfg.nu_w)?
        .min(y)
        .min(cfg.max_stage1.unwrap_or(usize::MAX));
    let mut map = modes.coefficients.leading_cols(y);
    let mut enforced = false;
    let needs_enforce = match metric {
        CompressionMetric::AMetric => orthonormality_error(&map, &gram) > ORTHO_SLACK,
        CompressionMetric::Output(_) => true,
    };
    if needs_enforce {
        map = enforce_on_map(&map, &gram)?.0;
        enforced = true;
    }
    Ok(TruncationOutcome {
        y_new: DenseBasis::new(z.columns.matmul(&map)),
        stage1_width: w,
        truncation_map: map,
        pod_spectrum: Some(modes.singular_values),
        ritz_values: None,
        enforced,
    })
}

/// POD compression computing `A Z` with `a_prev`.
pub fn pod_compress(
    z: &DenseBasis,
    a_prev: &SparseSpdMatrix,
    eta: &[f64],
    metric: CompressionMetric<'_>,
    cfg: &TruncationConfig,
    sink: &Instrumentation,
) -> Result<TruncationOutcome> {
    let az = images(a_prev, &z.columns, sink)?;
    pod_compress_with_images(z, &az, eta, metric, cfg)
}

/// Harmonic-Ritz deflation keeping the `m` smallest harmonic Ritz values.
pub fn deflation_compress_with_images(
    z: &DenseBasis,
    az: &DenseMatrix,
    m: usize,
    max_stage1: Option<usize>,
) -> Result<TruncationOutcome> {
    check_dim(z.m(), az.cols())?;
    if z.m() == 0 || m == 0 {
        return Err(Error::EmptyBasis);
    }
    let gram = gram_of(&z.columns, az);
    let k = az.gram();
    let evd = generalized_symmetric_evd(&k, &gram)?;
    // values are descending; keep the m smallest, ascending, ties by index.
    let s = z.m();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&i, &j| evd.values[i].total_cmp(&evd.values[j]).then(i.cmp(&j)));
    order.truncate(m.min(s));
    let ritz: Vec<f64> = order.iter().map(|&i| evd.values[i]).collect();
    let g = evd.vectors.select_cols(&order);
    let (map, _) = enforce_on_map(&g, &gram)?;
    let y = map.cols();
    Ok(TruncationOutcome {
        y_new: DenseBasis::new(z.columns.matmul(&map)),
        stage1_width: y.min(max_stage1.unwrap_or(usize::MAX)),
        truncation_map: map,
        pod_spectrum: None,
        ritz_values: Some(ritz),
        enforced: true,
    })
}

/// Harmonic-Ritz deflation over `range(Z)` for the matrix `a_prev`.
pub fn deflation_compress(
    z: &DenseBasis,
    a_prev: &SparseSpdMatrix,
    m: usize,
    sink: &Instrumentation,
) -> Result<TruncationOutcome> {
    let az = images(a_prev, &z.columns, sink)?;
    deflation_compress_with_images(z, &az, m, None)
}

/// `YᵀAY = L Lᵀ`, `Y ← Y L⁻ᵀ`.
pub fn enforce_a_orthogonality(
    y: &DenseBasis,
    a: &SparseSpdMatrix,
    sink: &Instrumentation,
) -> Result<(DenseBasis, DenseLowerTriangular)> {
    let ay = images(a, &y.columns, sink)?;
    let l = dense_cholesky(&gram_of(&y.columns, &ay))?;
    Ok((DenseBasis::new(l.right_solve_transpose(&y.columns)), l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_strings_roundtrip() {
        for s in ["pod-a-prev", "pod-a-rbf", "pod-ctc-prev", "pod-ctc-rbf", "deflate:25", "none"] {
            assert_eq!(s.parse::<Strategy>().unwrap().to_string(), s);
        }
        assert!("deflate:0".parse::<Strategy>().is_err());
        assert!("pod".parse::<Strategy>().is_err());
    }

    #[test]
    fn diagonal_deflation() {
        let sink = Instrumentation::new();
        let a = SparseSpdMatrix::from_diag(&[1.0, 2.0, 3.0]).unwrap();
        let z = DenseBasis::new(DenseMatrix::identity(3));
        let out = deflation_compress(&z, &a, 2, &sink).unwrap();
        let ritz = out.ritz_values.unwrap();
        assert!((ritz[0] - 1.0).abs() < 1e-14 && (ritz[1] - 2.0).abs() < 1e-14);
        for j in 0..2 {
            assert!(out.y_new.col(j)[2].abs() < 1e-14);
        }
    }

    #[test]
    fn enforce_scaled_block() {
        let sink = Instrumentation::new();
        let a = SparseSpdMatrix::from_diag(&[4.0, 1.0]).unwrap();
        let y = DenseBasis::new(DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 2.0]]));
        let (yo, l) = enforce_a_orthogonality(&y, &a, &sink).unwrap();
        assert!((l.get(0, 0) - 2.0).abs() < 1e-15 && (l.get(1, 1) - 2.0).abs() < 1e-15);
        assert!((yo.col(0)[0] - 0.5).abs() < 1e-15 && (yo.col(1)[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_column_pod() {
        let sink = Instrumentation::new();
        let a = SparseSpdMatrix::from_diag(&[4.0, 1.0]).unwrap();
        let z = DenseBasis::new(DenseMatrix::from_rows(&[&[3.0], &[0.0]]));
        let out =
            pod_compress(&z, &a, &[1.0], CompressionMetric::AMetric, &TruncationConfig::default(), &sink)
                .unwrap();
        assert_eq!((out.y_new.m(), out.stage1_width), (1, 1));
        assert!((out.y_new.col(0)[0].abs() - 0.5).abs() < 1e-15);
    }
}
