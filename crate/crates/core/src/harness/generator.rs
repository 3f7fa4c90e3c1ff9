use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{BlockSystem, CouplingBlock, TimeStep};
use crate::sparse::{DenseBlock, SparseMatrixCsc};

/// Coupling strength: fixed, or ramped linearly over a time-step run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Constant(f64),
    Ramp { from: f64, to: f64 },
}

impl Default for GammaSpec {
    fn default() -> Self {
        GammaSpec::Constant(0.0)
    }
}

impl GammaSpec {
    /// Value at step `t` of a run of `steps` steps.
    pub fn at(&self, t: usize, steps: usize) -> f64 {
        match *self {
            GammaSpec::Constant(g) => g,
            GammaSpec::Ramp { from, to } => {
                if steps <= 1 {
                    from
                } else {
                    from + (to - from) * t as f64 / (steps - 1) as f64
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |g: f64| g >= 0.0 && g.is_finite();
        let valid = match *self {
            GammaSpec::Constant(g) => ok(g),
            GammaSpec::Ramp { from, to } => ok(from) && ok(to),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::Config(format!("coupling strength must be finite and >= 0: {self:?}")))
        }
    }
}

/// Structured-grid problem description. Harmonic 0 carries `d` dofs per
/// node, every other harmonic `2d` (cosine and sine parts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_flux: usize,
    pub n_tht: usize,
    pub dofs_per_node: usize,
    pub harmonics: Vec<i32>,
    pub gamma: GammaSpec,
    pub seed: u64,
    /// Ratio of poloidal to radial diffusion.
    pub anisotropy: f64,
    /// Strength of the nonsymmetric radial convection term.
    pub convection: f64,
    /// Diagonal shift on every node. Large values model a mass-dominated
    /// implicit step; negative values make the blocks indefinite.
    pub shift: f64,
    /// Relative per-step perturbation of the diagonal blocks in time-step runs.
    pub drift: f64,
    /// Magnitude of inter-harmonic coupling entries before scaling by γ.
    pub coupling_scale: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_flux: 16,
            n_tht: 20,
            dofs_per_node: 4,
            harmonics: vec![0],
            gamma: GammaSpec::Constant(0.0),
            seed: 1,
            anisotropy: 4.0,
            convection: 0.5,
            shift: 40.0,
            drift: 0.0,
            coupling_scale: 1.0,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_flux < 2 || self.n_tht < 2 {
            return Err(Error::Config(format!(
                "grid must be at least 2x2, got {}x{}",
                self.n_flux, self.n_tht
            )));
        }
        if self.dofs_per_node == 0 {
            return Err(Error::Config("dofs_per_node must be >= 1".into()));
        }
        if self.harmonics.is_empty() {
            return Err(Error::Config("at least one harmonic is required".into()));
        }
        if self.harmonics.iter().any(|&h| h < 0) {
            return Err(Error::Config("harmonic mode numbers must be >= 0".into()));
        }
        for (i, h) in self.harmonics.iter().enumerate() {
            if self.harmonics[..i].contains(h) {
                return Err(Error::Config(format!("harmonic {h} listed twice")));
            }
        }
        for (name, v) in [
            ("anisotropy", self.anisotropy),
            ("convection", self.convection),
            ("shift", self.shift),
            ("drift", self.drift),
            ("coupling_scale", self.coupling_scale),
        ] {
            if !v.is_finite() || (!matches!(name, "convection" | "shift") && v < 0.0) {
                return Err(Error::Config(format!("invalid {name}: {v}")));
            }
        }
        if self.anisotropy <= 0.0 {
            return Err(Error::Config("anisotropy must be > 0".into()));
        }
        self.gamma.validate()
    }

    pub fn nodes(&self) -> usize {
        self.n_flux * self.n_tht
    }

    pub fn block_dim(&self, harmonic: i32) -> usize {
        let d = self.dofs_per_node * self.nodes();
        if harmonic == 0 {
            d
        } else {
            2 * d
        }
    }

    pub fn total_dim(&self) -> usize {
        self.harmonics.iter().map(|&h| self.block_dim(h)).sum()
    }
}

const OFFSETS: [(i64, i64); 9] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (0, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Scalar stencil weight for offset `(di, dj)` from node `(i, j)`. The
/// diffusion coefficient is evaluated at the edge midpoint so the diffusive
/// part is symmetric.
fn stencil_weight(cfg: &GridConfig, convection: f64, i: usize, j: usize, di: i64, dj: i64) -> f64 {
    let x = (i as f64 + 0.5 + 0.5 * di as f64) / cfg.n_flux as f64;
    let y = (j as f64 + 0.5 * dj as f64) / cfg.n_tht as f64;
    let modulation = 1.0 + 0.3 * (PI * x).sin() * (2.0 * PI * y).cos();
    let kx = modulation;
    let ky = cfg.anisotropy * modulation;
    match (di, dj) {
        (0, 0) => 0.0,
        (_, 0) => -kx + 0.5 * convection * di as f64,
        (0, _) => -ky,
        _ => -(kx + ky) / 8.0,
    }
}

/// One harmonic's diagonal block in natural node order, `node = i_flux * n_tht + i_tht`.
///
/// Each stencil direction and its opposite share a symmetric positive
/// definite `d × d` coupling; the centre block is minus the sum of all eight
/// neighbour blocks plus the shift, so constants away from the radial
/// boundary see only the shift and the skew part. Radial neighbours beyond the boundary are
/// dropped after contributing to the centre (Dirichlet).
fn harmonic_block(cfg: &GridConfig, harmonic: i32, rng: &mut ChaCha8Rng) -> Result<SparseMatrixCsc> {
    let d = cfg.dofs_per_node;
    let pair = harmonic != 0;
    let dd = if pair { 2 * d } else { d };
    let rho = 0.4 / d as f64;
    let mut couplings: Vec<DenseBlock> = vec![DenseBlock::zeros(d, d); 9];
    for k in 0..4 {
        let r = DenseBlock::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        let b = DenseBlock::from_fn(d, d, |a, c| {
            let sym = 0.5 * (r[(a, c)] + r[(c, a)]);
            if a == c {
                1.0 + rho * sym
            } else {
                rho * sym
            }
        });
        couplings[8 - k] = b.clone();
        couplings[k] = b;
    }
    let skew = {
        let r = DenseBlock::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        DenseBlock::from_fn(d, d, |a, c| 0.1 * (r[(a, c)] - r[(c, a)]))
    };
    let h = harmonic as f64;
    let twist = 0.05 * h;
    let mass = 0.01 * h * h;
    let copies = if pair { 2 } else { 1 };

    let (nf, nt) = (cfg.n_flux, cfg.n_tht);
    let mut t = Vec::with_capacity(cfg.nodes() * 9 * dd * dd);
    for i in 0..nf {
        for j in 0..nt {
            let row_node = i * nt + j;
            let mut centre = DenseBlock::zeros(d, d);
            for (k, &(di, dj)) in OFFSETS.iter().enumerate() {
                if (di, dj) == (0, 0) {
                    continue;
                }
                let w = stencil_weight(cfg, cfg.convection, i, j, di, dj);
                let b = &couplings[k];
                // The centre balances the symmetric (diffusive) part only.
                let wd = stencil_weight(cfg, 0.0, i, j, di, dj);
                for c in 0..d {
                    for a in 0..d {
                        centre[(a, c)] -= wd * b[(a, c)];
                    }
                }
                let ii = i as i64 + di;
                if ii < 0 || ii >= nf as i64 {
                    continue;
                }
                let jj = (j as i64 + dj).rem_euclid(nt as i64) as usize;
                let col_node = ii as usize * nt + jj;
                for c in 0..d {
                    for a in 0..d {
                        let v = w * b[(a, c)];
                        for p in 0..copies {
                            t.push((row_node * dd + p * d + a, col_node * dd + p * d + c, v));
                        }
                    }
                }
            }
            for c in 0..d {
                for a in 0..d {
                    let mut v = centre[(a, c)] + skew[(a, c)];
                    if a == c {
                        v += cfg.shift + mass;
                    }
                    for p in 0..copies {
                        t.push((row_node * dd + p * d + a, row_node * dd + p * d + c, v));
                    }
                }
                if pair {
                    // Antisymmetric cosine/sine coupling.
                    t.push((row_node * dd + c, row_node * dd + d + c, twist));
                    t.push((row_node * dd + d + c, row_node * dd + c, -twist));
                }
            }
        }
    }
    SparseMatrixCsc::from_triplets(nf * nt * dd, &t)
}

/// Node-local couplings between different harmonics, unscaled.
fn coupling_blocks(cfg: &GridConfig, rng: &mut ChaCha8Rng) -> Vec<CouplingBlock> {
    let mut out = Vec::new();
    let nodes = cfg.nodes();
    for (ra, &ha) in cfg.harmonics.iter().enumerate() {
        for (cb, &hb) in cfg.harmonics.iter().enumerate() {
            if ra == cb {
                continue;
            }
            let (da, db) = (cfg.block_dim(ha) / nodes, cfg.block_dim(hb) / nodes);
            let mut entries = Vec::with_capacity(nodes * da * db);
            for node in 0..nodes {
                for c in 0..db {
                    for a in 0..da {
                        entries.push((node * da + a, node * db + c, cfg.coupling_scale * rng.gen_range(-1.0..1.0)));
                    }
                }
            }
            out.push(CouplingBlock {
                row_block: ra,
                col_block: cb,
                entries,
            });
        }
    }
    out
}

/// Builds the coupled block system, deterministic in `cfg.seed`. A ramped
/// coupling strength takes its starting value.
pub fn generate_problem(cfg: &GridConfig) -> Result<BlockSystem> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let blocks = cfg
        .harmonics
        .iter()
        .map(|&h| harmonic_block(cfg, h, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let coupling = coupling_blocks(cfg, &mut rng);
    BlockSystem::new(cfg.harmonics.clone(), blocks, coupling, cfg.gamma.at(0, 1))
}

/// Seeded right-hand side for a generated system.
pub fn generate_rhs(cfg: &GridConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005e_ed0f_b10c);
    (0..cfg.total_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Time-step workload on one pattern: the coupling follows `cfg.gamma` and
/// every diagonal block drifts as `A_h(t) = A_h(0) + drift · t · P_h`, with
/// `P_h` a fixed entrywise relative perturbation.
pub struct Workload {
    base: BlockSystem,
    perturbations: Vec<Vec<f64>>,
    gamma: GammaSpec,
    drift: f64,
    steps: usize,
    rhs: Vec<f64>,
}

impl Workload {
    pub fn new(cfg: &GridConfig, steps: usize) -> Result<Self> {
        let base = generate_problem(cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(31).wrapping_add(7));
        let perturbations = base
            .diag_blocks()
            .iter()
            .map(|b| b.values().iter().map(|v| v * rng.gen_range(-1.0..1.0)).collect())
            .collect();
        Ok(Self {
            base,
            perturbations,
            gamma: cfg.gamma,
            drift: cfg.drift,
            steps,
            rhs: generate_rhs(cfg),
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn base(&self) -> &BlockSystem {
        &self.base
    }

    pub fn system_at(&self, t: usize) -> Result<BlockSystem> {
        let shift = self.drift * t as f64;
        let blocks = if shift == 0.0 {
            self.base.diag_blocks().to_vec()
        } else {
            self.base
                .diag_blocks()
                .iter()
                .zip(&self.perturbations)
                .map(|(b, p)| {
                    let values = b.values().iter().zip(p).map(|(v, q)| v + shift * q).collect();
                    SparseMatrixCsc::try_from_parts(b.n(), b.col_ptr().to_vec(), b.row_idx().to_vec(), values)
                })
                .collect::<Result<Vec<_>>>()?
        };
        BlockSystem::new(
            self.base.harmonics().to_vec(),
            blocks,
            self.base.coupling().to_vec(),
            self.gamma.at(t, self.steps),
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = Result<TimeStep>> + '_ {
        (0..self.steps).map(move |t| {
            Ok(TimeStep {
                system: self.system_at(t)?,
                rhs: self.rhs.clone(),
            })
        })
    }
}
