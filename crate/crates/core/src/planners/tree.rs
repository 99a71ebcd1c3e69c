use crate::geometry::{motion_valid, ChainSpec, Circle, Configuration};

/// Search tree rooted at a single configuration. Nearest-neighbor queries
/// are a linear scan under the wrapped max-norm.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Configuration>,
    parents: Vec<Option<usize>>,
}

/// Result of growing a tree toward a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extend {
    /// The target is in the tree (possibly just added).
    Reached(usize),
    /// A new node one step toward the target was added.
    Advanced(usize),
    /// The motion from the nearest node was blocked; nothing added.
    Trapped,
}

impl Tree {
    pub fn new(root: Configuration) -> Self {
        Tree {
            nodes: vec![root],
            parents: vec![None],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &Configuration {
        &self.nodes[i]
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parents[i]
    }

    pub fn add(&mut self, q: Configuration, parent: usize) -> usize {
        self.nodes.push(q);
        self.parents.push(Some(parent));
        self.nodes.len() - 1
    }

    pub fn nearest(&self, spec: &ChainSpec, q: &Configuration) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = spec.distance(n, q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Configurations from the root down to node `i`.
    pub fn branch(&self, i: usize) -> Vec<Configuration> {
        let mut out = vec![self.nodes[i].clone()];
        let mut cur = i;
        while let Some(p) = self.parents[cur] {
            out.push(self.nodes[p].clone());
            cur = p;
        }
        out.reverse();
        out
    }
}

/// Moves from `from` toward `to` by at most `step` in the max-norm.
pub fn steer(
    spec: &ChainSpec,
    from: &Configuration,
    to: &Configuration,
    step: f64,
) -> Configuration {
    let d = spec.distance(from, to);
    if d <= step {
        return to.clone();
    }
    spec.interpolate(from, to, step / d)
}

/// One RRT extension of `tree` toward `x`.
pub fn rrt_extend(
    tree: &mut Tree,
    x: &Configuration,
    step: f64,
    spec: &ChainSpec,
    obstacles: &[Circle],
    motion_step: f64,
) -> Extend {
    let (near, d) = tree.nearest(spec, x);
    if d == 0.0 {
        return Extend::Reached(near);
    }
    let new = steer(spec, tree.node(near), x, step);
    if !motion_valid(spec, tree.node(near), &new, obstacles, motion_step) {
        return Extend::Trapped;
    }
    let id = tree.add(new, near);
    if d <= step {
        Extend::Reached(id)
    } else {
        Extend::Advanced(id)
    }
}

/// Repeated extension toward `x` until it is reached or blocked.
pub fn rrt_connect(
    tree: &mut Tree,
    x: &Configuration,
    step: f64,
    spec: &ChainSpec,
    obstacles: &[Circle],
    motion_step: f64,
) -> Extend {
    loop {
        match rrt_extend(tree, x, step, spec, obstacles, motion_step) {
            Extend::Advanced(_) => continue,
            other => return other,
        }
    }
}
