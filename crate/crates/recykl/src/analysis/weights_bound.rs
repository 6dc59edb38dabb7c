use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Result;
use crate::linalg::{dense_cholesky, norm2, spectral_norm, sub, thin_svd, DenseMatrix};
use crate::problems::Xorshift64Star;

use super::{dense_projector, BoundCheckReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightsVariant {
    /// Ideal weights in the current energy metric.
    AMetric,
    /// Ideal weights in the output metric `CᵀC`.
    OutputMetric,
}

/// Two consecutive systems sharing the snapshot basis `Z`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsInstance {
    pub seed: u64,
    pub z: DenseMatrix,
    pub a_prev: DenseMatrix,
    pub a_cur: DenseMatrix,
    pub c: DenseMatrix,
    pub x_prev: Vec<f64>,
    pub xbar_prev: Vec<f64>,
    pub x_cur: Vec<f64>,
    pub xbar_cur: Vec<f64>,
}

fn random_matrix(rng: &mut Xorshift64Star, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

/// Random instance; `perturb = 0` gives the equality case (`A_j = A_{j−1}`, equal
/// centred solutions, `CᵀC = A_j`).
pub fn weights_instance(seed: u64, n: usize, s: usize, perturb: f64) -> WeightsInstance {
    let mut rng = Xorshift64Star::new(seed);
    let g = random_matrix(&mut rng, n, n);
    let mut a_prev = g.t_matmul(&g).scaled(1.0 / n as f64).add(&DenseMatrix::identity(n));
    a_prev.symmetrize();
    let a_cur = if perturb == 0.0 {
        a_prev.clone()
    } else {
        let e = random_matrix(&mut rng, n, n);
        let mut e = e.add(&e.transpose()).scaled(0.5 / (n as f64).sqrt());
        e.symmetrize();
        a_prev.add(&e.scaled(perturb))
    };
    let z = random_matrix(&mut rng, n, s);
    let x_prev = rng.normal_vec(n);
    let xbar_prev: Vec<f64> = rng.normal_vec(n).iter().map(|v| 0.1 * v).collect();
    let xbar_cur = xbar_prev.clone();
    let x_cur = if perturb == 0.0 {
        x_prev.clone()
    } else {
        x_prev.iter().map(|v| v + perturb * rng.normal()).collect()
    };
    let c = if perturb == 0.0 {
        dense_cholesky(&a_cur).expect("SPD by construction").to_dense().transpose()
    } else {
        let q = (n / 2).max(s + 2);
        DenseMatrix::from_fn(q, n, |_, _| rng.next_f64())
    };
    WeightsInstance { seed, z, a_prev, a_cur, c, x_prev, xbar_prev, x_cur, xbar_cur }
}

/// `(ZᵀGZ)⁻¹ ZᵀG d`
fn galerkin(z: &DenseMatrix, g: &DenseMatrix, d: &[f64]) -> Result<Vec<f64>> {
    let gz = g.matmul(z);
    let mut zgz = z.t_matmul(&gz);
    zgz.symmetrize();
    Ok(dense_cholesky(&zgz)?.solve(&gz.t_matvec(d)))
}

/// Compares the previous-solution weights with the ideal weights of the current
/// system against the bound built from metric-projector differences.
pub fn check_weights_bound(inst: &WeightsInstance, variant: WeightsVariant) -> Result<BoundCheckReport> {
    let d_cur = sub(&inst.x_cur, &inst.xbar_cur);
    let d_prev = sub(&inst.x_prev, &inst.xbar_prev);
    let g_cur = match variant {
        WeightsVariant::AMetric => inst.a_cur.clone(),
        WeightsVariant::OutputMetric => inst.c.t_matmul(&inst.c),
    };
    let eta_ideal = galerkin(&inst.z, &g_cur, &d_cur)?;
    let eta_prev = galerkin(&inst.z, &inst.a_prev, &d_prev)?;
    let lhs = norm2(&sub(&eta_ideal, &eta_prev));

    let p_cur = dense_projector(&inst.z, &g_cur)?;
    let p_prev = dense_projector(&inst.z, &inst.a_prev)?;
    let proj_diff = spectral_norm(&p_cur.sub(&p_prev))?;
    let sigma1 = spectral_norm(&p_prev)?;
    let sigma_min = *thin_svd(&inst.z)?.sigma.last().unwrap();
    let sol_change = norm2(&sub(&d_cur, &d_prev));
    let rhs = (proj_diff * norm2(&d_cur) + sigma1 * sol_change) / sigma_min;
    Ok(BoundCheckReport::new(
        lhs,
        rhs,
        json!({
            "check": "weights",
            "variant": variant,
            "seed": inst.seed,
            "n": inst.z.rows(),
            "s": inst.z.cols(),
            "projector_difference": proj_diff,
            "sigma_1": sigma1,
            "sigma_min": sigma_min,
            "solution_change": sol_change,
        }),
    ))
}
