//! System Hamiltonian and its eigenbasis.
//!
//! The single-excitation Hamiltonian is block diagonal: an n x n chain block
//! with on-site energies on the diagonal and the coupling law off it, plus
//! the uncoupled ground and extraction-center levels. Only the chain block
//! mixes, so the chain is diagonalized alone and the three isolated states
//! pass through as exact eigenpairs.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::model::{ChainSpec, CouplingLaw, StateLabel};

/// Dense Hamiltonian over the full basis (sites, ground, EC levels), eV.
#[derive(Debug, Clone)]
pub struct SystemHamiltonian {
    pub matrix: DMatrix<f64>,
    pub n_sites: usize,
}

/// Hopping element between chain sites `a` and `b` (1-based) under the law.
fn hop(coupling: &CouplingLaw, a: usize, b: usize) -> f64 {
    match coupling {
        CouplingLaw::NearestNeighbor { j_coupling } => {
            if a.abs_diff(b) == 1 {
                j_coupling / 2.0
            } else {
                0.0
            }
        }
        CouplingLaw::DistanceDependent {
            j_coupling,
            positions,
        } => {
            let (p, q) = (positions[a - 1], positions[b - 1]);
            let r2: f64 = (0..3).map(|k| (p[k] - q[k]) * (p[k] - q[k])).sum();
            j_coupling / (2.0 * r2.powf(1.5))
        }
    }
}

pub fn build(chain: &ChainSpec) -> SystemHamiltonian {
    let n = chain.n_sites;
    let dim = chain.dim();
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..n {
        h[(i, i)] = chain.onsite_energies[i];
    }
    for a in 1..=n {
        for b in (a + 1)..=n {
            let t = hop(&chain.coupling, a, b);
            h[(a - 1, b - 1)] = t;
            h[(b - 1, a - 1)] = t;
        }
    }
    h[(n, n)] = chain.eps_ground;
    h[(n + 1, n + 1)] = chain.eps_alpha;
    h[(n + 2, n + 2)] = chain.eps_beta;
    SystemHamiltonian {
        matrix: h,
        n_sites: n,
    }
}

/// Eigenbasis of the system Hamiltonian in a fixed deterministic order:
/// chain eigenstates ascending in energy, then ground, EC excited, EC
/// ground. Column `n` of `vectors` holds eigenstate `n` in the site basis.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub n_sites: usize,
}

impl EigenBasis {
    /// Amplitude of eigenstate `state` on basis state `basis_index`.
    #[inline]
    pub fn overlap(&self, state: usize, basis_index: usize) -> f64 {
        self.vectors[(basis_index, state)]
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Eigenstate index of a basis label that passes through unmixed.
    pub fn isolated_index(&self, label: StateLabel) -> usize {
        match label {
            StateLabel::Ground => self.n_sites,
            StateLabel::EcExcited => self.n_sites + 1,
            StateLabel::EcGround => self.n_sites + 2,
            StateLabel::Site(_) => panic!("chain sites hybridize; no fixed eigenstate index"),
        }
    }

    /// Inverse participation number 1 / sum_i c^4 of one eigenstate: 1 for a
    /// state pinned to a single site, n for uniform spread over n sites.
    pub fn participation_ratio(&self, state: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            let c = self.vectors[(i, state)];
            s += c * c * c * c;
        }
        1.0 / s
    }

    /// Mean participation ratio over the chain eigenstates.
    pub fn mean_participation_ratio(&self) -> f64 {
        let n = self.n_sites;
        (0..n).map(|k| self.participation_ratio(k)).sum::<f64>() / n as f64
    }
}

pub fn diagonalize(h: &SystemHamiltonian) -> EigenBasis {
    let n = h.n_sites;
    let dim = n + 3;
    let chain_block = h.matrix.view((0, 0), (n, n)).into_owned();
    let eig = SymmetricEigen::new(chain_block);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut energies = Vec::with_capacity(dim);
    let mut vectors = DMatrix::zeros(dim, dim);
    for (k, &src) in order.iter().enumerate() {
        energies.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        // sign convention: the largest-magnitude component (lowest site index
        // on ties) is positive, so eigenvectors are reproducible across
        // backends and runs
        let mut lead = 0;
        for i in 1..n {
            if col[i].abs() > col[lead].abs() {
                lead = i;
            }
        }
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, k)] = sign * col[i];
        }
    }
    // isolated levels are exact eigenpairs
    energies.push(h.matrix[(n, n)]);
    energies.push(h.matrix[(n + 1, n + 1)]);
    energies.push(h.matrix[(n + 2, n + 2)]);
    for k in 0..3 {
        vectors[(n + k, n + k)] = 1.0;
    }

    let basis = EigenBasis {
        energies,
        vectors,
        n_sites: n,
    };
    debug_assert!(eigen_residual(h, &basis) < 1e-9, "eigen residual too large");
    basis
}

/// Max-norm residual ||H v - E v|| over all eigenpairs; diagnostic.
pub fn eigen_residual(h: &SystemHamiltonian, basis: &EigenBasis) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..basis.dim() {
        let v = basis.vectors.column(k);
        let hv = &h.matrix * v;
        for i in 0..basis.dim() {
            worst = worst.max((hv[i] - basis.energies[k] * v[i]).abs());
        }
    }
    worst
}
