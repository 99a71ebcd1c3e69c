use nalgebra::DMatrix;

use crate::geometry::{motion_valid, ChainSpec, Circle, Configuration};
use crate::sampling::CovarianceSpec;

/// Regularization added to fitted clique covariances.
pub const COVARIANCE_JITTER: f64 = 1e-6;

/// A group of mutually visible configurations summarized by one Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct Clique {
    pub mean: Configuration,
    pub covariance: CovarianceSpec,
    /// Indices into the input configurations; the seed vertex comes first.
    pub members: Vec<usize>,
}

impl Clique {
    pub fn member_count(&self) -> usize {
        self.members.len()
    }
}

/// Straight-line visibility between every pair of configurations.
pub fn visibility_graph(
    configs: &[Configuration],
    spec: &ChainSpec,
    obstacles: &[Circle],
    motion_step: f64,
) -> Vec<Vec<bool>> {
    let n = configs.len();
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = motion_valid(spec, &configs[i], &configs[j], obstacles, motion_step);
            adj[i][j] = v;
            adj[j][i] = v;
        }
    }
    adj
}

/// Greedy sequential clique cover of an adjacency matrix. Each round seeds
/// with the highest-degree remaining vertex and adds, in degree order, every
/// neighbor adjacent to all members so far. Ties go to the lower index.
pub fn greedy_clique_cover(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut remaining = vec![true; n];
    let mut left = n;
    let mut cliques = Vec::new();
    while left > 0 {
        let degree: Vec<usize> = (0..n)
            .map(|i| {
                if remaining[i] {
                    (0..n)
                        .filter(|&j| j != i && remaining[j] && adj[i][j])
                        .count()
                } else {
                    0
                }
            })
            .collect();
        let by_degree = |a: &usize, b: &usize| degree[*b].cmp(&degree[*a]).then(a.cmp(b));
        let seed = (0..n)
            .filter(|&i| remaining[i])
            .min_by(by_degree)
            .expect("vertices remain");
        let mut candidates: Vec<usize> = (0..n)
            .filter(|&j| j != seed && remaining[j] && adj[seed][j])
            .collect();
        candidates.sort_by(by_degree);
        let mut members = vec![seed];
        for c in candidates {
            if members.iter().all(|&m| adj[m][c]) {
                members.push(c);
            }
        }
        for &m in &members {
            remaining[m] = false;
        }
        left -= members.len();
        cliques.push(members);
    }
    cliques
}

/// Groups configurations into cliques of the visibility graph and fits one
/// Gaussian per clique. Cliques with fewer than `dof + 1` members get the
/// isotropic `sigma` covariance.
pub fn merge_cliques(
    configs: &[Configuration],
    spec: &ChainSpec,
    obstacles: &[Circle],
    motion_step: f64,
    sigma: f64,
) -> Vec<Clique> {
    let adj = visibility_graph(configs, spec, obstacles, motion_step);
    greedy_clique_cover(&adj)
        .into_iter()
        .map(|members| fit_clique(configs, members, spec, sigma))
        .collect()
}

fn fit_clique(
    configs: &[Configuration],
    members: Vec<usize>,
    spec: &ChainSpec,
    sigma: f64,
) -> Clique {
    let d = spec.dof();
    let anchor = &configs[members[0]];
    // members unwrapped to the representative nearest the anchor
    let pts: Vec<Vec<f64>> = members
        .iter()
        .map(|&m| {
            let delta = spec.delta(anchor, &configs[m]);
            anchor
                .angles()
                .iter()
                .zip(delta)
                .map(|(a, dd)| a + dd)
                .collect()
        })
        .collect();
    let n = pts.len() as f64;
    let mean_raw: Vec<f64> = (0..d)
        .map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / n)
        .collect();
    let covariance = if pts.len() > d {
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for p in &pts {
            for i in 0..d {
                for j in 0..d {
                    cov[(i, j)] += (p[i] - mean_raw[i]) * (p[j] - mean_raw[j]);
                }
            }
        }
        cov /= n - 1.0;
        for i in 0..d {
            cov[(i, i)] += COVARIANCE_JITTER;
        }
        CovarianceSpec::Matrix(
            (0..d)
                .map(|i| (0..d).map(|j| cov[(i, j)]).collect())
                .collect(),
        )
    } else {
        CovarianceSpec::Sigma(sigma)
    };
    Clique {
        mean: spec.normalize(mean_raw),
        covariance,
        members,
    }
}
