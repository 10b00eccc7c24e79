use super::network::{ElementKind, Network};

/// Disjoint-set forest with path halving and union by size.
struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Partition of the nodes into islands joined by conducting switches.
#[derive(Debug, Clone, PartialEq)]
pub struct Islands {
    /// Island index of every node.
    pub island_of: Vec<usize>,
    /// Nodes of every island, ascending.
    pub members: Vec<Vec<usize>>,
    /// Source elements (and ground, as `None`) pinning each island.
    pub pins: Vec<Vec<Option<usize>>>,
}

impl Islands {
    pub fn is_pinned(&self, island: usize) -> bool {
        !self.pins[island].is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn floating(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.is_pinned(i))
    }
}

/// Groups nodes connected through conducting switches. Islands are numbered
/// in order of their lowest node, so the ground island is always 0.
pub fn islands(network: &Network, conducting: &[bool]) -> Islands {
    let n = network.node_count();
    let mut dsu = DisjointSet::new(n);
    for (idx, el) in network.elements().iter().enumerate() {
        if matches!(el.kind, ElementKind::OhmicSwitch { .. }) && conducting[idx] {
            dsu.union(el.a.0, el.b.0);
        }
    }

    let mut root_to_island = vec![usize::MAX; n];
    let mut island_of = vec![0; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for node in 0..n {
        let root = dsu.find(node);
        if root_to_island[root] == usize::MAX {
            root_to_island[root] = members.len();
            members.push(Vec::new());
        }
        let island = root_to_island[root];
        island_of[node] = island;
        members[island].push(node);
    }

    let mut pins = vec![Vec::new(); members.len()];
    pins[island_of[0]].push(None);
    for (idx, el) in network.elements().iter().enumerate() {
        if matches!(el.kind, ElementKind::Source { .. }) {
            pins[island_of[el.a.0]].push(Some(idx));
        }
    }

    Islands {
        island_of,
        members,
        pins,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_find_groups() {
        let mut d = DisjointSet::new(6);
        d.union(0, 1);
        d.union(2, 3);
        d.union(1, 3);
        assert_eq!(d.find(0), d.find(2));
        assert_ne!(d.find(4), d.find(0));
        assert_ne!(d.find(4), d.find(5));
    }
}
