use serde::{Deserialize, Serialize};

use super::lorenz::NodeDynamics;
use crate::error::{Error, Result};

/// Row-sum tolerance for a valid graph Laplacian.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Symmetric `N x N` weighted graph Laplacian with zero row sums and
/// off-diagonal weights in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl CouplingMatrix {
    /// Validates a dense row-major matrix.
    pub fn from_dense(size: usize, entries: Vec<f64>) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("coupling matrix must be nonempty"));
        }
        if entries.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                found: entries.len(),
            });
        }
        for i in 0..size {
            let mut row_sum = 0.0;
            for j in 0..size {
                let a = entries[i * size + j];
                if !a.is_finite() {
                    return Err(Error::invalid(format!("non-finite coupling entry ({i}, {j})")));
                }
                if i != j {
                    if !(0.0..=1.0).contains(&a) {
                        return Err(Error::invalid(format!(
                            "off-diagonal coupling entry ({i}, {j}) = {a} outside [0, 1]"
                        )));
                    }
                    if a != entries[j * size + i] {
                        return Err(Error::NonSymmetric {
                            row: i,
                            col: j,
                            gap: (a - entries[j * size + i]).abs(),
                        });
                    }
                }
                row_sum += a;
            }
            if row_sum.abs() > ROW_SUM_TOL {
                return Err(Error::invalid(format!("row {i} sums to {row_sum:e}, not 0")));
            }
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Euclidean distances between all pairs of points, row-major `N x N`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    size: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let size = points.len();
        if size == 0 {
            return Err(Error::invalid("point set is empty"));
        }
        let dim = points[0].as_ref().len();
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("point coordinates must be finite"));
            }
        }
        let mut values = vec![0.0; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                let d = euclidean(points[i].as_ref(), points[j].as_ref());
                values[i * size + j] = d;
                values[j * size + i] = d;
            }
        }
        Ok(Self { size, values })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `A_ij = exp(-(|r_i - r_j| / mu)^kappa)` off the diagonal, `A_ii = -sum_{l != i} A_il`.
pub fn build_coupling_matrix<P: AsRef<[f64]>>(
    points: &[P],
    mu: f64,
    kappa: f64,
) -> Result<CouplingMatrix> {
    let distances = DistanceMatrix::from_points(points)?;
    coupling_from_distances(&distances, mu, kappa)
}

pub fn coupling_from_distances(
    distances: &DistanceMatrix,
    mu: f64,
    kappa: f64,
) -> Result<CouplingMatrix> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid("coupling length scale mu must be positive"));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid("coupling exponent kappa must be positive"));
    }
    let n = distances.size();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = (-(distances.get(i, j) / mu).powf(kappa)).exp();
            entries[i * n + j] = w;
            entries[j * n + i] = w;
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&l| l != i).map(|l| entries[i * n + l]).sum();
        entries[i * n + i] = -off;
    }
    Ok(CouplingMatrix { size: n, entries })
}

/// Coupling strength `epsilon` and the `n x n` linking matrix `Gamma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledConfig {
    pub epsilon: f64,
    pub n: usize,
    /// Row-major `n x n`.
    pub linking: Vec<f64>,
}

impl CoupledConfig {
    pub fn identity(n: usize, epsilon: f64) -> Self {
        let mut linking = vec![0.0; n * n];
        for k in 0..n {
            linking[k * n + k] = 1.0;
        }
        Self {
            epsilon,
            n,
            linking,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("coupling strength epsilon must be >= 0"));
        }
        if self.linking.len() != self.n * self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n * self.n,
                found: self.linking.len(),
            });
        }
        if self.linking.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("linking matrix must be finite"));
        }
        Ok(())
    }

    fn is_identity(&self) -> bool {
        (0..self.n).all(|r| {
            (0..self.n).all(|c| self.linking[r * self.n + c] == if r == c { 1.0 } else { 0.0 })
        })
    }
}

/// `du/dt = G(u) + eps (A ⊗ Gamma) u` for `N` copies of a node system.
///
/// The coupling term is evaluated blockwise as
/// `eps * Gamma * sum_{j != i} A_ij (u_j - u_i)`, which equals the Kronecker
/// form because rows of `A` sum to zero, and vanishes exactly on synchronized
/// states.
pub struct CoupledSystem<'a, G: NodeDynamics + ?Sized> {
    node: &'a G,
    coupling: &'a CouplingMatrix,
    config: &'a CoupledConfig,
    identity_linking: bool,
    symmetric: bool,
}

impl<'a, G: NodeDynamics + ?Sized> CoupledSystem<'a, G> {
    pub fn new(node: &'a G, coupling: &'a CouplingMatrix, config: &'a CoupledConfig) -> Result<Self> {
        config.validate()?;
        if node.dim() != config.n {
            return Err(Error::DimensionMismatch {
                expected: config.n,
                found: node.dim(),
            });
        }
        Ok(Self {
            node,
            coupling,
            config,
            identity_linking: config.is_identity(),
            symmetric: (0..coupling.size()).all(|i| (0..i).all(|j| coupling.get(i, j) == coupling.get(j, i))),
        })
    }

    pub fn nodes(&self) -> usize {
        self.coupling.size()
    }

    pub fn node_dim(&self) -> usize {
        self.config.n
    }

    pub fn state_len(&self) -> usize {
        self.nodes() * self.node_dim()
    }

    pub fn rhs(&self, u: &[f64], out: &mut [f64]) {
        let n = self.config.n;
        let count = self.coupling.size();
        debug_assert_eq!(u.len(), count * n);
        for (ui, oi) in u.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            self.node.rhs(ui, oi);
        }
        let eps = self.config.epsilon;
        if eps == 0.0 {
            return;
        }
        if n == 3 && self.identity_linking && self.symmetric {
            self.pairwise_3(u, out, eps);
            return;
        }
        let mut acc = [0.0f64; 8];
        let mut heap;
        let y: &mut [f64] = if n <= acc.len() {
            &mut acc[..n]
        } else {
            heap = vec![0.0; n];
            &mut heap
        };
        for i in 0..count {
            y.fill(0.0);
            let ui = &u[i * n..(i + 1) * n];
            let row = self.coupling.row(i);
            for (j, &a) in row.iter().enumerate() {
                if j == i || a == 0.0 {
                    continue;
                }
                let uj = &u[j * n..(j + 1) * n];
                for k in 0..n {
                    y[k] += a * (uj[k] - ui[k]);
                }
            }
            let oi = &mut out[i * n..(i + 1) * n];
            if self.identity_linking {
                for k in 0..n {
                    oi[k] += eps * y[k];
                }
            } else {
                for (o, g) in oi.iter_mut().zip(self.config.linking.chunks_exact(n)) {
                    let gy: f64 = g.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
                    *o += eps * gy;
                }
            }
        }
    }
}

impl<G: NodeDynamics + ?Sized> CoupledSystem<'_, G> {
    /// Three-component nodes, identity linking and an exactly symmetric
    /// coupling: each pair difference is formed once and applied to both ends.
    fn pairwise_3(&self, u: &[f64], out: &mut [f64], eps: f64) {
        let count = self.coupling.size();
        let a = self.coupling.entries();
        let mut y = vec![0.0f64; 3 * count];
        for i in 0..count {
            let ui = [u[3 * i], u[3 * i + 1], u[3 * i + 2]];
            let row = &a[i * count..(i + 1) * count];
            let mut s = [0.0f64; 3];
            let (_, rest) = y.split_at_mut(3 * (i + 1));
            for ((w, uj), yj) in row[i + 1..].iter().zip(u[3 * (i + 1)..].chunks_exact(3)).zip(rest.chunks_exact_mut(3)) {
                let d0 = w * (uj[0] - ui[0]);
                let d1 = w * (uj[1] - ui[1]);
                let d2 = w * (uj[2] - ui[2]);
                s[0] += d0;
                s[1] += d1;
                s[2] += d2;
                yj[0] -= d0;
                yj[1] -= d1;
                yj[2] -= d2;
            }
            y[3 * i] += s[0];
            y[3 * i + 1] += s[1];
            y[3 * i + 2] += s[2];
        }
        for (o, v) in out.iter_mut().zip(&y) {
            *o += eps * v;
        }
    }
}

/// Allocating form of [`CoupledSystem::rhs`] with dimension checks.
pub fn coupled_rhs<G: NodeDynamics + ?Sized>(
    state: &[f64],
    node: &G,
    coupling: &CouplingMatrix,
    config: &CoupledConfig,
) -> Result<Vec<f64>> {
    let system = CoupledSystem::new(node, coupling, config)?;
    if state.len() != system.state_len() {
        return Err(Error::DimensionMismatch {
            expected: system.state_len(),
            found: state.len(),
        });
    }
    let mut out = vec![0.0; state.len()];
    system.rhs(state, &mut out);
    Ok(out)
}
