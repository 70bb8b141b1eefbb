#[derive(Clone, Copy)]
struct Node {
    parent: u32,
    size: u32,
    weight: u32,
    flags: u32,
}

/// Disjoint sets with union by size, path compression, and per-root
/// cluster weight and boundary flags.
pub(crate) struct UnionFind {
    nodes: Vec<Node>,
    init: Vec<Node>,
    pub max_weight: u32,
    init_max: u32,
}

pub(crate) const SOURCE: u8 = 1;
pub(crate) const SINK: u8 = 2;

impl UnionFind {
    pub fn new(weights: &[u32], flags: &[u8]) -> Self {
        let init: Vec<Node> = weights
            .iter()
            .zip(flags)
            .enumerate()
            .map(|(i, (&weight, &f))| Node { parent: i as u32, size: 1, weight, flags: u32::from(f) })
            .collect();
        let init_max = weights.iter().copied().max().unwrap_or(0);
        Self { nodes: init.clone(), init, max_weight: init_max, init_max }
    }

    pub fn reset(&mut self) {
        self.nodes.copy_from_slice(&self.init);
        self.max_weight = self.init_max;
    }

    #[inline]
    pub fn find(&mut self, v: u32) -> u32 {
        let mut root = v;
        while self.nodes[root as usize].parent != root {
            root = self.nodes[root as usize].parent;
        }
        let mut cur = v;
        while self.nodes[cur as usize].parent != root {
            let next = self.nodes[cur as usize].parent;
            self.nodes[cur as usize].parent = root;
            cur = next;
        }
        root
    }

    /// Merge the clusters of `a` and `b`; returns the root's flags.
    #[inline]
    pub fn union(&mut self, a: u32, b: u32) -> u8 {
        let (mut ra, mut rb) = (self.find(a) as usize, self.find(b) as usize);
        if ra == rb {
            return self.nodes[ra].flags as u8;
        }
        if self.nodes[ra].size < self.nodes[rb].size {
            std::mem::swap(&mut ra, &mut rb);
        }
        let child = self.nodes[rb];
        let root = &mut self.nodes[ra];
        root.size += child.size;
        root.weight += child.weight;
        root.flags |= child.flags;
        let (w, f) = (root.weight, root.flags);
        self.nodes[rb].parent = ra as u32;
        self.max_weight = self.max_weight.max(w);
        f as u8
    }

    #[cfg(test)]
    pub fn total_weight_of_roots(&mut self) -> u64 {
        let roots: Vec<u32> = (0..self.nodes.len() as u32).filter(|&v| self.find(v) == v).collect();
        roots.iter().map(|&v| u64::from(self.nodes[v as usize].weight)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn weights_are_conserved(edges in proptest::collection::vec((0u32..40, 0u32..40), 0..80)) {
            let w: Vec<u32> = (0..40).map(|i| i % 3).collect();
            let total: u64 = w.iter().map(|&x| u64::from(x)).sum();
            let mut uf = UnionFind::new(&w, &[0; 40]);
            for (a, b) in edges {
                uf.union(a, b);
                prop_assert_eq!(uf.total_weight_of_roots(), total);
            }
        }
    }
}
