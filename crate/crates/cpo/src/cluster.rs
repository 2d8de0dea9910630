//! Agglomerative hierarchical clustering of assets from a break-distance
//! matrix, for exploratory grouping of similar break profiles.

use serde::Serialize;

use crate::setdist::DistanceMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Average,
    Single,
    Complete,
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Linkage::Average),
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            other => Err(Error::InvalidConfig(format!("unknown linkage {other:?}"))),
        }
    }
}

/// One merge step. Cluster labels follow the usual convention: leaves are
/// `0..n-1`, the cluster created by merge `i` is `n + i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Stepwise dendrogram: exactly `n - 1` merges over the leaf labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    pub labels: Vec<String>,
    pub linkage: Linkage,
    pub merges: Vec<Merge>,
}

/// Agglomerative clustering with Lance-Williams updates. Ties in the minimal
/// pair break toward the smallest slot pair `(i, j)`.
pub fn hclust(d: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = d.n();
    if n < 2 {
        return Err(Error::InvalidConfig(format!("clustering needs at least 2 assets, got {n}")));
    }
    // Working copy over slots; a merge collapses into the smaller slot.
    let mut work: Vec<f64> = d.values().to_vec();
    let mut active = vec![true; n];
    let mut slot_id: Vec<usize> = (0..n).collect();
    let mut slot_size = vec![1usize; n];
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let dij = work[i * n + j];
                if best.is_none_or(|(_, _, b)| dij < b) {
                    best = Some((i, j, dij));
                }
            }
        }
        let (i, j, height) = best.expect("at least two active clusters");
        let (si, sj) = (slot_size[i] as f64, slot_size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let dik = work[i * n + k];
            let djk = work[j * n + k];
            let merged = match linkage {
                Linkage::Average => (si * dik + sj * djk) / (si + sj),
                Linkage::Single => dik.min(djk),
                Linkage::Complete => dik.max(djk),
            };
            work[i * n + k] = merged;
            work[k * n + i] = merged;
        }
        active[j] = false;
        merges.push(Merge { a: slot_id[i], b: slot_id[j], height, size: slot_size[i] + slot_size[j] });
        slot_size[i] += slot_size[j];
        slot_id[i] = n + step;
    }

    Ok(Dendrogram { labels: d.asset_ids.clone(), linkage, merges })
}

/// Partition induced by undoing the `k - 1` final merges. Clusters are
/// ordered by their smallest leaf index, members in leaf order.
pub fn cut(dendrogram: &Dendrogram, k: usize) -> Result<Vec<Vec<String>>> {
    let n = dendrogram.labels.len();
    if k < 1 || k > n {
        return Err(Error::ClusterCountOutOfRange { k, n });
    }
    // Union-find over leaves, applying the first n - k merges.
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for (step, merge) in dendrogram.merges.iter().take(n - k).enumerate() {
        let node = n + step;
        let ra = find(&mut parent, merge.a);
        let rb = find(&mut parent, merge.b);
        parent[ra] = node;
        parent[rb] = node;
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        groups.entry(root).or_default().push(leaf);
    }
    let mut clusters: Vec<Vec<usize>> = groups.into_values().collect();
    clusters.sort_by_key(|members| members[0]);
    Ok(clusters
        .into_iter()
        .map(|members| members.into_iter().map(|leaf| dendrogram.labels[leaf].clone()).collect())
        .collect())
}

/// Newick encoding; node height is its merge height (leaves at 0) and edge
/// lengths are parent-minus-child heights.
pub fn to_newick(dendrogram: &Dendrogram) -> String {
    let n = dendrogram.labels.len();
    fn node_string(dendrogram: &Dendrogram, node: usize, n: usize) -> (String, f64) {
        if node < n {
            return (dendrogram.labels[node].clone(), 0.0);
        }
        let merge = &dendrogram.merges[node - n];
        let (left, lh) = node_string(dendrogram, merge.a, n);
        let (right, rh) = node_string(dendrogram, merge.b, n);
        let h = merge.height;
        (format!("({left}:{},{right}:{})", h - lh, h - rh), h)
    }
    let (body, _) = node_string(dendrogram, 2 * n - 2, n);
    format!("{body};\n")
}

/// Partition as CSV rows `(asset_id, cluster)`.
pub fn partition_to_csv(partition: &[Vec<String>]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("asset_id,cluster\n");
    for (c, members) in partition.iter().enumerate() {
        for id in members {
            writeln!(out, "{id},{c}").unwrap();
        }
    }
    out
}
