use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseSpdMatrix;

use super::rng::Xorshift64Star;
use super::{LinearSystem, SequenceMetadata, SystemSequence};

/// Time dependence of the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LoadProfile {
    /// Same load for every system.
    Steady,
    /// Smooth load that rotates slowly with `j`.
    #[default]
    Moving,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiffusionParams {
    pub nx: usize,
    pub ny: usize,
    pub p: usize,
    /// Relative coefficient drift δ.
    pub drift: f64,
    pub load: LoadProfile,
    pub seed: u64,
    pub tol: f64,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        Self { nx: 50, ny: 50, p: 20, drift: 0.05, load: LoadProfile::Moving, seed: 1, tol: 1e-6 }
    }
}

struct Field {
    modes: Vec<(f64, f64, f64, f64)>,
    phase: (f64, f64, f64),
}

impl Field {
    fn new(seed: u64) -> Self {
        let mut rng = Xorshift64Star::new(seed);
        let modes = (0..4)
            .map(|_| {
                (
                    rng.uniform(-0.35, 0.35),
                    rng.uniform(0.5, 3.0),
                    rng.uniform(0.5, 3.0),
                    rng.uniform(0.0, TAU),
                )
            })
            .collect();
        let phase = (rng.uniform(0.0, TAU), rng.uniform(0.0, TAU), rng.uniform(0.0, TAU));
        Self { modes, phase }
    }

    fn kappa0(&self, x: f64, y: f64) -> f64 {
        self.modes
            .iter()
            .map(|&(amp, kx, ky, ph)| amp * (PI * (kx * x + ky * y) + ph).sin())
            .sum::<f64>()
            .exp()
    }

    fn phase(&self, x: f64, y: f64) -> f64 {
        self.phase.0 * x + self.phase.1 * y + self.phase.2
    }
}

fn coords(params: &DiffusionParams, idx: usize) -> (f64, f64) {
    let (i, k) = (idx % params.nx, idx / params.nx);
    ((i + 1) as f64 / (params.nx + 1) as f64, (k + 1) as f64 / (params.ny + 1) as f64)
}

fn stiffness(params: &DiffusionParams, kappa: &[f64]) -> Result<SparseSpdMatrix> {
    let (nx, ny) = (params.nx, params.ny);
    let mut trip = Vec::with_capacity(3 * nx * ny);
    for k in 0..ny {
        for i in 0..nx {
            let c = k * nx + i;
            let mut diag = 0.0;
            let neighbours = [
                (i > 0).then(|| c - 1),
                (i + 1 < nx).then(|| c + 1),
                (k > 0).then(|| c - nx),
                (k + 1 < ny).then(|| c + nx),
            ];
            for nb in neighbours {
                match nb {
                    Some(o) => {
                        let f = 0.5 * (kappa[c] + kappa[o]);
                        diag += f;
                        if o < c {
                            trip.push((c, o, -f));
                        }
                    }
                    None => diag += kappa[c],
                }
            }
            trip.push((c, c, diag));
        }
    }
    SparseSpdMatrix::from_lower_triplets(nx * ny, &trip)
}

fn load(params: &DiffusionParams, j: usize, x: f64, y: f64) -> f64 {
    let t = match params.load {
        LoadProfile::Steady => 0.0,
        LoadProfile::Moving => TAU * j as f64 / params.p as f64,
    };
    (PI * x).sin() * (PI * y).sin() * (1.0 + 0.5 * t.sin())
        + 0.5 * (TAU * x + t).cos() * (PI * y).sin()
        + 0.25 * (3.0 * PI * y - t).sin()
}

/// Five-point diffusion sequence on an `nx × ny` interior grid with homogeneous
/// Dirichlet boundary, coefficient `κ_j = κ₀ (1 + δ sin(2πj/p + φ(x, y)))`.
pub fn gen_diffusion_sequence(params: &DiffusionParams) -> Result<SystemSequence> {
    if params.nx == 0 || params.ny == 0 {
        return Err(Error::InvalidGrid { nx: params.nx, ny: params.ny });
    }
    if params.p == 0 {
        return Err(Error::Config("sequence needs at least one system".into()));
    }
    if !(0.0..1.0).contains(&params.drift) {
        return Err(Error::Config(format!("drift {} outside [0, 1)", params.drift)));
    }
    let n = params.nx * params.ny;
    let field = Field::new(params.seed);
    let pts: Vec<(f64, f64)> = (0..n).map(|c| coords(params, c)).collect();
    let k0: Vec<f64> = pts.iter().map(|&(x, y)| field.kappa0(x, y)).collect();
    let mut systems = Vec::with_capacity(params.p);
    let mut shared: Option<Arc<SparseSpdMatrix>> = None;
    for j in 1..=params.p {
        let a = if params.drift == 0.0 && shared.is_some() {
            shared.clone().unwrap()
        } else {
            let kappa: Vec<f64> = pts
                .iter()
                .zip(&k0)
                .map(|(&(x, y), k)| {
                    let s = TAU * j as f64 / params.p as f64 + field.phase(x, y);
                    k * (1.0 + params.drift * s.sin())
                })
                .collect();
            let a = Arc::new(stiffness(params, &kappa)?);
            shared = Some(a.clone());
            a
        };
        let b = pts.iter().map(|&(x, y)| load(params, j, x, y)).collect();
        systems.push(LinearSystem { a, b, xguess: vec![0.0; n], tol: params.tol });
    }
    SystemSequence::new(
        systems,
        None,
        SequenceMetadata {
            name: format!("diffusion-{}x{}-p{}-d{}", params.nx, params.ny, params.p, params.drift),
            seed: Some(params.seed),
            params: serde_json::to_value(params).ok(),
        },
    )
}

/// `q × n` matrix with entries uniform in `[0, 1]`, filled row by row.
pub fn gen_output_matrix(q: usize, n: usize, seed: u64) -> crate::linalg::DenseMatrix {
    let mut rng = Xorshift64Star::new(seed);
    let mut c = crate::linalg::DenseMatrix::zeros(q, n);
    for i in 0..q {
        for k in 0..n {
            c.set(i, k, rng.next_f64());
        }
    }
    c
}
