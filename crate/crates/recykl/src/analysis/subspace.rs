use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{
    dense_cholesky, principal_angle_distance, spectral_norm, symmetric_evd, DenseBasis,
    DenseMatrix,
};
use crate::problems::Xorshift64Star;

use super::{abssep, cond, strong_separation, BoundCheckReport};

/// Which simplification of the subspace-distance bound is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    General,
    FixedWeights,
    FixedMetric,
    RelBounded,
    Commuting,
    StrongSep,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::General,
        Regime::FixedWeights,
        Regime::FixedMetric,
        Regime::RelBounded,
        Regime::Commuting,
        Regime::StrongSep,
    ];
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::General => "general",
            Regime::FixedWeights => "fixed-weights",
            Regime::FixedMetric => "fixed-metric",
            Regime::RelBounded => "rel-bounded",
            Regime::Commuting => "commuting",
            Regime::StrongSep => "strong-sep",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown regime `{s}`")))
    }
}

/// Two POD problems over the same snapshots `Z`: the ideal one with metric
/// `Θ_c + Δ` and weights `η_ideal`, the computable one with `Θ_c` and `η_comp`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceInstance {
    pub seed: u64,
    pub z: DenseMatrix,
    pub theta_comp: DenseMatrix,
    pub delta: DenseMatrix,
    pub eta_ideal: Vec<f64>,
    pub eta_comp: Vec<f64>,
    pub y: usize,
}

struct Spectra {
    /// Eigenvalues of the ideal weighted Gram matrix beyond the first `y`.
    ideal_perp: Vec<f64>,
    ideal_norm: f64,
    comp_top: Vec<f64>,
    /// First `y` eigenvectors of the computable weighted Gram matrix.
    comp_vectors: DenseMatrix,
    ideal_vectors: DenseMatrix,
}

fn weighted_gram(z: &DenseMatrix, theta: &DenseMatrix, eta: &[f64]) -> DenseMatrix {
    let zh = z.scale_cols(eta);
    let mut b = zh.t_matmul(&theta.matmul(&zh));
    b.symmetrize();
    b
}

fn spectra(inst: &SubspaceInstance) -> Result<Spectra> {
    let theta_ideal = inst.theta_comp.add(&inst.delta);
    let bi = symmetric_evd(&weighted_gram(&inst.z, &theta_ideal, &inst.eta_ideal))?;
    let bc = symmetric_evd(&weighted_gram(&inst.z, &inst.theta_comp, &inst.eta_comp))?;
    Ok(Spectra {
        ideal_perp: bi.values[inst.y..].to_vec(),
        ideal_norm: bi.values.iter().map(|v| v.abs()).fold(0.0, f64::max),
        comp_top: bc.values[..inst.y].to_vec(),
        comp_vectors: bc.vectors.leading_cols(inst.y),
        ideal_vectors: bi.vectors.leading_cols(inst.y),
    })
}

fn random_spd(rng: &mut Xorshift64Star, n: usize, shift: f64) -> DenseMatrix {
    let g = DenseMatrix::from_fn(n, n, |_, _| rng.normal());
    let mut m = g.t_matmul(&g).scaled(1.0 / n as f64).add(&DenseMatrix::identity(n).scaled(shift));
    m.symmetrize();
    m
}

/// Seeded instance satisfying the preconditions of `regime`.
pub fn subspace_instance(regime: Regime, seed: u64) -> SubspaceInstance {
    let (n, s) = (24, 7);
    let mut rng = Xorshift64Star::new(seed ^ 0x5EED_0000_0000_0000);
    loop {
        let y = 2 + rng.below(3);
        let theta_comp = random_spd(&mut rng, n, 0.5);
        let mut z = DenseMatrix::from_fn(n, s, |_, _| rng.normal());
        if regime == Regime::Commuting {
            let mut g = z.t_matmul(&theta_comp.matmul(&z));
            g.symmetrize();
            let l = dense_cholesky(&g).expect("random snapshots have full rank");
            let d: Vec<f64> = (0..s).map(|_| rng.uniform(0.5, 2.0)).collect();
            z = l.right_solve_transpose(&z).scale_cols(&d);
        }
        let eta_ideal: Vec<f64> = (0..s)
            .map(|_| {
                let sign = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
                sign * rng.uniform(0.5, 3.0)
            })
            .collect();
        let eta_comp: Vec<f64> = match regime {
            Regime::FixedWeights => eta_ideal.clone(),
            _ => eta_ideal.iter().map(|e| e * (1.0 + 0.05 * rng.uniform(-1.0, 1.0))).collect(),
        };
        let delta = match regime {
            Regime::General | Regime::FixedWeights | Regime::StrongSep => {
                let t = [1e-4, 1e-3, 1e-2][rng.below(3)];
                let r = DenseMatrix::from_fn(n, 3, |_, _| rng.normal());
                let mut d = r.matmul(&r.transpose()).scaled(t / n as f64);
                d.symmetrize();
                d
            }
            _ => DenseMatrix::zeros(n, n),
        };
        let inst = SubspaceInstance { seed, z, theta_comp, delta, eta_ideal, eta_comp, y };
        if regime != Regime::StrongSep {
            return inst;
        }
        if let Ok(sp) = spectra(&inst) {
            if strong_separation(&sp.comp_top, &sp.ideal_perp) > 0.0 {
                return inst;
            }
        }
    }
}

fn inapplicable(regime: Regime, why: &str) -> Error {
    Error::RegimeInapplicable(format!("{regime}: {why}"))
}

/// Measures the principal-angle distance between the ideal and computable POD
/// subspaces and evaluates the perturbation bound for `regime`.
pub fn check_subspace_distance_bound(inst: &SubspaceInstance, regime: Regime) -> Result<BoundCheckReport> {
    let (n, s) = (inst.z.rows(), inst.z.cols());
    check_dim(n, inst.theta_comp.rows())?;
    check_dim(n, inst.delta.rows())?;
    check_dim(s, inst.eta_ideal.len())?;
    check_dim(s, inst.eta_comp.len())?;
    if inst.y == 0 || inst.y >= s {
        return Err(Error::Config(format!("subspace dimension {} outside [1, {})", inst.y, s)));
    }
    if inst.eta_ideal.iter().any(|&e| e == 0.0) {
        return Err(Error::RankDeficient);
    }
    let metric_fixed = inst.delta.max_abs() == 0.0;
    match regime {
        Regime::FixedWeights if inst.eta_comp != inst.eta_ideal => {
            return Err(inapplicable(regime, "weights differ"));
        }
        Regime::FixedMetric | Regime::RelBounded | Regime::Commuting if !metric_fixed => {
            return Err(inapplicable(regime, "metric perturbation is nonzero"));
        }
        _ => {}
    }
    let gram_c = {
        let mut g = inst.z.t_matmul(&inst.theta_comp.matmul(&inst.z));
        g.symmetrize();
        g
    };
    if regime == Regime::Commuting {
        let scale = gram_c.max_abs();
        let off = DenseMatrix::from_fn(s, s, |i, j| if i == j { 0.0 } else { gram_c.get(i, j) });
        if off.max_abs() > 1e-10 * scale {
            return Err(inapplicable(regime, "snapshot Gram matrix is not diagonal"));
        }
    }

    let sp = spectra(inst)?;
    let y_ideal = inst.z.scale_cols(&inst.eta_ideal).matmul(&sp.ideal_vectors);
    let y_comp = inst.z.scale_cols(&inst.eta_comp).matmul(&sp.comp_vectors);
    let lhs = principal_angle_distance(&DenseBasis::new(y_ideal), &DenseBasis::new(y_comp))?;

    let zh = inst.z.scale_cols(&inst.eta_ideal);
    let kappa_z = cond(&zh)?;
    let ratio: Vec<f64> = inst.eta_comp.iter().zip(&inst.eta_ideal).map(|(c, i)| c / i).collect();
    let kappa_x = cond(&sp.comp_vectors.scale_rows(&ratio))?;
    let sum_diff: Vec<f64> =
        inst.eta_comp.iter().zip(&inst.eta_ideal).map(|(c, i)| (c + i) * (c - i)).collect();
    let weight_term = {
        let left: Vec<f64> = sum_diff.iter().zip(&inst.eta_ideal).map(|(d, i)| d / i).collect();
        spectral_norm(&gram_c.scale_cols(&inst.eta_ideal).scale_rows(&left))?
    };
    let metric_norm = spectral_norm(&inst.delta)?;
    let zh_norm = spectral_norm(&zh)?;
    let metric_term = metric_norm * zh_norm * zh_norm;
    let sep = abssep(&sp.ideal_perp, &sp.comp_top);
    let delta_a = strong_separation(&sp.comp_top, &sp.ideal_perp);
    let rel = ratio.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);

    let rhs = match regime {
        Regime::General => kappa_z * kappa_x * (weight_term + metric_term) / sep,
        Regime::FixedWeights => kappa_z * metric_term / sep,
        Regime::FixedMetric => kappa_z * kappa_x * weight_term / sep,
        Regime::RelBounded => kappa_z * kappa_x * rel * (2.0 + rel) * sp.ideal_norm / sep,
        Regime::Commuting => {
            kappa_z * kappa_x * spectral_norm(&gram_c.scale_rows(&sum_diff))? / sep
        }
        Regime::StrongSep => {
            if !(delta_a > 0.0) {
                return Err(inapplicable(regime, "spectra are not strongly separated"));
            }
            kappa_z * kappa_x * (weight_term + metric_term) / delta_a
        }
    };
    Ok(BoundCheckReport::new(
        lhs,
        rhs,
        json!({
            "check": "subspace-distance",
            "regime": regime.to_string(),
            "seed": inst.seed,
            "n": n,
            "s": s,
            "y": inst.y,
            "kappa_snapshots": kappa_z,
            "kappa_eigvecs": kappa_x,
            "weight_term": weight_term,
            "metric_term": metric_term,
            "abssep": sep,
            "delta_a": delta_a,
            "relative_weight_perturbation": rel,
        }),
    ))
}
