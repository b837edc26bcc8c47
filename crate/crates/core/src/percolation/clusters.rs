use crate::lattice::Lattice;

use super::BondConfiguration;

/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Open clusters of a configuration.
///
/// Labels are canonical: each cluster is labelled by its smallest vertex
/// rank, which is also its lexicographically smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    pub labels: Vec<u32>,
    /// `sizes[label]` is the cluster size; zero for non-label vertices.
    pub sizes: Vec<u32>,
    pub largest: usize,
    pub origin: usize,
    touches: Vec<bool>,
}

impl ClusterLabeling {
    pub fn label(&self, v: usize) -> usize {
        self.labels[v] as usize
    }

    pub fn size_of(&self, v: usize) -> usize {
        self.sizes[self.label(v)] as usize
    }

    pub fn cluster_count(&self) -> usize {
        self.sizes.iter().filter(|&&s| s > 0).count()
    }

    /// True if the cluster with this label has a vertex on the outer face.
    pub fn touches_outer_face(&self, label: usize) -> bool {
        self.touches[label]
    }

    pub fn members(&self, label: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l as usize == label)
            .map(|(v, _)| v)
            .collect()
    }

    /// Largest cluster if it reaches the outer face: the giant-cluster proxy
    /// used for density diagnostics.
    pub fn giant(&self) -> Option<usize> {
        self.touches[self.largest].then_some(self.largest)
    }
}

pub fn label_clusters(config: &BondConfiguration) -> ClusterLabeling {
    let lat = config.lattice();
    let n = lat.vertex_count();
    let mut uf = UnionFind::new(n);
    for slot in 0..config.edge_count() {
        if config.is_open(slot) {
            let (a, b) = lat.edge_endpoints(slot);
            uf.union(a, b);
        }
    }
    let mut min_of_root = vec![u32::MAX; n];
    let mut roots = vec![0u32; n];
    for v in 0..n {
        let r = uf.find(v);
        roots[v] = r as u32;
        if min_of_root[r] == u32::MAX {
            // vertices are visited in increasing rank
            min_of_root[r] = v as u32;
        }
    }
    let labels: Vec<u32> = roots.iter().map(|&r| min_of_root[r as usize]).collect();
    let mut sizes = vec![0u32; n];
    let mut touches = vec![false; n];
    for v in 0..n {
        let l = labels[v] as usize;
        sizes[l] += 1;
        if lat.on_outer_face(v) {
            touches[l] = true;
        }
    }
    let mut largest = 0usize;
    for (l, &s) in sizes.iter().enumerate() {
        if s > sizes[largest] {
            largest = l;
        }
    }
    let origin = labels[lat.origin()] as usize;
    ClusterLabeling {
        labels,
        sizes,
        largest,
        origin,
        touches,
    }
}

/// Finite-volume proxy of the infinite cluster seen from the origin: the
/// origin's cluster if it reaches the outer face of the box, else empty.
/// Returned vertices are sorted by rank.
pub fn infinite_cluster_proxy(labeling: &ClusterLabeling, _lattice: &Lattice) -> Vec<usize> {
    if !labeling.touches_outer_face(labeling.origin) {
        return Vec::new();
    }
    labeling.members(labeling.origin)
}

#[cfg(test)]
mod tests {
    use super::super::sample_configuration;
    use super::*;
    use crate::lattice::BoxSpec;
    use std::collections::VecDeque;

    /// Independent BFS flood fill over open edges.
    fn bfs_labels(c: &BondConfiguration) -> Vec<usize> {
        let lat = c.lattice();
        let n = lat.vertex_count();
        let mut label = vec![usize::MAX; n];
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = s;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for (nb, slot) in lat.incident(v) {
                    if c.is_open(slot) && label[nb] == usize::MAX {
                        label[nb] = s;
                        q.push_back(nb);
                    }
                }
            }
        }
        label
    }

    #[test]
    fn all_open_grid_is_one_cluster() {
        let c = sample_configuration(BoxSpec::new(2, 1, 0).unwrap(), 1.0, 0).unwrap();
        let lab = label_clusters(&c);
        assert_eq!(lab.cluster_count(), 1);
        assert_eq!(lab.size_of(0), 9);
    }

    #[test]
    fn all_closed_gives_singletons() {
        let c = sample_configuration(BoxSpec::new(2, 3, 0).unwrap(), 0.0, 0).unwrap();
        let lab = label_clusters(&c);
        assert_eq!(lab.cluster_count(), 49);
        assert!(lab.labels.iter().enumerate().all(|(v, &l)| v == l as usize));
        assert_eq!(lab.largest, 0);
    }

    #[test]
    fn matches_bfs_oracle() {
        let fixed = sample_configuration(BoxSpec::new(2, 4, 1).unwrap(), 0.55, 11).unwrap();
        let mut cases = vec![fixed];
        for seed in 0..10 {
            cases.push(sample_configuration(BoxSpec::new(2, 30, 6).unwrap(), 0.5, seed).unwrap());
            cases.push(sample_configuration(BoxSpec::new(3, 8, 2).unwrap(), 0.25, seed).unwrap());
        }
        for c in &cases {
            let lab = label_clusters(c);
            let bfs = bfs_labels(c);
            assert_eq!(lab.labels.iter().map(|&l| l as usize).collect::<Vec<_>>(), bfs);
            assert_eq!(lab.sizes.iter().map(|&s| s as usize).sum::<usize>(), c.lattice().vertex_count());
        }
    }

    #[test]
    fn proxy_extremes() {
        let spec = BoxSpec::with_default_margin(2, 5).unwrap();
        let c = sample_configuration(spec, 1.0, 0).unwrap();
        let lab = label_clusters(&c);
        assert_eq!(infinite_cluster_proxy(&lab, c.lattice()).len(), 121);
        let c = sample_configuration(spec, 0.0, 0).unwrap();
        let lab = label_clusters(&c);
        assert!(infinite_cluster_proxy(&lab, c.lattice()).is_empty());
    }

    #[test]
    fn largest_tie_goes_to_smallest_label() {
        // Two open dominoes of equal size.
        let spec = BoxSpec::new(2, 3, 0).unwrap();
        let lat = Lattice::new(spec).unwrap();
        let e1 = lat.edge_between(lat.rank(&[1, 1]).unwrap(), lat.rank(&[1, 2]).unwrap()).unwrap();
        let e2 = lat.edge_between(lat.rank(&[-2, 0]).unwrap(), lat.rank(&[-2, 1]).unwrap()).unwrap();
        let c = BondConfiguration::from_open_slots(spec, [e1, e2]).unwrap();
        let lab = label_clusters(&c);
        assert_eq!(lab.largest, lat.rank(&[-2, 0]).unwrap());
    }
}
