//! Aggregation by clustering: build new dimension aggregate levels from the
//! facts themselves.
//!
//! Classical aggregation collapses members along a declared hierarchy. Here
//! the members of one dimension are clustered on their measure profile and
//! their own descriptors, so the induced groups express similarity rather
//! than taxonomy. Agglomerative hierarchical clustering fits the navigation
//! model: merging two clusters is a roll-up, splitting one is a drill-down,
//! and each partition of the dendrogram is a candidate aggregate level.
//!
//! Clustering runs on standardized coordinates with Ward linkage over
//! Euclidean distances. The merge cost is the increase in within-cluster
//! inertia, `|A||B| / (|A|+|B|) * ||c_A - c_B||^2`, so the sum of all merge
//! costs equals the total inertia and cut quality can be judged by the
//! intra/inter inertia split. Partition quality is scored by the mean
//! silhouette coefficient, standing in for a separability criterion; the
//! recommended cut maximizes it.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::store::{DimensionDef, HierarchyDef, MemberId, XCubeStore};
use crate::xml::Element;

/// One dimension member as a point: its aggregated measures and encoded
/// descriptors.
#[derive(Clone, Debug, PartialEq)]
pub struct FactVector {
    pub member: MemberId,
    pub coords: Vec<f64>,
}

/// What each coordinate of the vectors means; one-hot encodings stay
/// invertible through the carried value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoordLabel {
    /// Sum of this measure over the member's cells.
    Measure(String),
    /// Numeric descriptor attribute of the member.
    Numeric(String),
    /// One-hot indicator: 1 when the member's attribute equals the value.
    OneHot(String, String),
}

impl fmt::Display for CoordLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordLabel::Measure(m) => write!(f, "measure:{m}"),
            CoordLabel::Numeric(a) => write!(f, "descriptor:{a}"),
            CoordLabel::OneHot(a, v) => write!(f, "descriptor:{a}={v}"),
        }
    }
}

/// The vectorized dimension: one standardized point per member.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorizedDimension {
    pub dimension: String,
    pub vectors: Vec<FactVector>,
    pub legend: Vec<CoordLabel>,
    /// Coordinates dropped for being constant across members.
    pub warnings: Vec<String>,
}

/// One agglomeration step: clusters `a` and `b` merge into cluster
/// `n_leaves + step`.
#[derive(Clone, Debug, PartialEq)]
pub struct Merge {
    pub step: usize,
    pub a: usize,
    pub b: usize,
    pub cost: f64,
    pub size: usize,
}

/// The full merge sequence over `n_leaves` individuals.
#[derive(Clone, Debug, PartialEq)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

/// A cut of the dendrogram: clusters as sorted leaf-index lists, ordered by
/// smallest leaf.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub clusters: Vec<Vec<usize>>,
}

/// Quality measures of the `k`-cluster partition.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionScore {
    pub k: usize,
    pub intra_inertia: f64,
    pub inter_inertia: f64,
    /// Cost of the merge that produced this partition (0 at `k == n`).
    pub ward_cost: f64,
    /// Mean silhouette; 0 for the degenerate cuts.
    pub separability: f64,
}

/// A new aggregate level: cluster labels for every member of the dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateLevel {
    pub dimension: String,
    pub level_name: String,
    pub k: usize,
    pub assignment: BTreeMap<MemberId, String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpacError {
    UnknownMeasure(String),
    UnknownDescriptor(String),
    EmptyDimension(String),
    TooFewIndividuals(usize),
    BadK { k: usize, n: usize },
}

impl fmt::Display for OpacError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpacError::UnknownMeasure(m) => write!(f, "unknown measure '{m}'"),
            OpacError::UnknownDescriptor(d) => write!(f, "unknown descriptor attribute '{d}'"),
            OpacError::EmptyDimension(d) => write!(f, "dimension '{d}' has no members"),
            OpacError::TooFewIndividuals(n) => {
                write!(f, "clustering needs at least 2 individuals, found {n}")
            }
            OpacError::BadK { k, n } => write!(f, "cannot cut {n} individuals into {k} clusters"),
        }
    }
}

impl core::error::Error for OpacError {}

/// Turns the members of `dimension` into standardized points.
///
/// Measures aggregate by sum over the member's cells (absent values are
/// absent, contributing nothing). Descriptors are the member's own
/// attributes: numeric ones map to one coordinate, string ones one-hot
/// expand over their observed values. Every coordinate is standardized to
/// zero mean and unit variance; constant coordinates are dropped with a
/// warning.
pub fn vectorize(
    store: &XCubeStore,
    dimension: &str,
    measures: &[String],
    descriptors: &[String],
) -> Result<VectorizedDimension, OpacError> {
    let def: &DimensionDef = store
        .dimension_def(dimension)
        .ok_or_else(|| OpacError::EmptyDimension(dimension.to_string()))?;
    let members: Vec<_> = store.members_of(dimension).collect();
    if members.is_empty() {
        return Err(OpacError::EmptyDimension(dimension.to_string()));
    }
    for m in measures {
        if store.measure_def(m).is_none() {
            return Err(OpacError::UnknownMeasure(m.clone()));
        }
    }
    for d in descriptors {
        if def.attribute_type(d).is_none() {
            return Err(OpacError::UnknownDescriptor(format!("{dimension}.{d}")));
        }
    }

    // Raw coordinates, before standardization.
    let mut legend: Vec<CoordLabel> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();

    for measure in measures {
        let mut column = Vec::with_capacity(members.len());
        for member in &members {
            let total: f64 = store
                .cells
                .iter()
                .filter(|cell| cell.coordinate(dimension) == Some(&member.node))
                .filter_map(|cell| cell.measure(measure))
                .map(|v| v.to_f64())
                .sum();
            column.push(total);
        }
        legend.push(CoordLabel::Measure(measure.clone()));
        columns.push(column);
    }

    for descriptor in descriptors {
        let numeric = matches!(
            def.attribute_type(descriptor),
            Some(crate::mcm::AttrType::Integer | crate::mcm::AttrType::Decimal)
        );
        if numeric {
            let column = members
                .iter()
                .map(|m| {
                    m.attribute(descriptor)
                        .and_then(parse_number)
                        .unwrap_or(0.0)
                })
                .collect();
            legend.push(CoordLabel::Numeric(descriptor.clone()));
            columns.push(column);
        } else {
            // Observed values, sorted for a stable one-hot order.
            let mut values: Vec<&str> = members
                .iter()
                .filter_map(|m| m.attribute(descriptor))
                .collect();
            values.sort_unstable();
            values.dedup();
            for value in values {
                let column = members
                    .iter()
                    .map(|m| (m.attribute(descriptor) == Some(value)) as u8 as f64)
                    .collect();
                legend.push(CoordLabel::OneHot(descriptor.clone(), value.to_string()));
                columns.push(column);
            }
        }
    }

    // Standardize, dropping constant coordinates.
    let n = members.len() as f64;
    let mut warnings = Vec::new();
    let mut kept_legend = Vec::new();
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for (label, column) in legend.into_iter().zip(columns) {
        let mean = column.iter().sum::<f64>() / n;
        let variance = column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        if variance == 0.0 {
            warnings.push(format!("coordinate '{label}' is constant and was dropped"));
            continue;
        }
        let sd = libm::sqrt(variance);
        kept.push(column.iter().map(|x| (x - mean) / sd).collect());
        kept_legend.push(label);
    }

    let vectors = members
        .iter()
        .enumerate()
        .map(|(i, m)| FactVector {
            member: m.node.clone(),
            coords: kept.iter().map(|column| column[i]).collect(),
        })
        .collect();
    Ok(VectorizedDimension {
        dimension: dimension.to_string(),
        vectors,
        legend: kept_legend,
        warnings,
    })
}

fn parse_number(text: &str) -> Option<f64> {
    text.parse::<f64>().ok()
}

/// Ward-linkage agglomeration over Euclidean coordinates.
///
/// Clusters carry explicit member lists; each step merges the pair with the
/// smallest inertia increase, ties broken on the smallest (a, b) cluster-id
/// pair. Cluster ids follow the usual convention: leaves are `0..n`, the
/// merge at step `s` creates cluster `n + s`.
pub fn ahc(vectors: &[FactVector]) -> Result<Dendrogram, OpacError> {
    let n = vectors.len();
    if n < 2 {
        return Err(OpacError::TooFewIndividuals(n));
    }
    let dims = vectors.first().map_or(0, |v| v.coords.len());

    struct Cluster {
        id: usize,
        members: Vec<usize>,
    }
    let mut clusters: Vec<Cluster> = (0..n)
        .map(|i| Cluster {
            id: i,
            members: alloc::vec![i],
        })
        .collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let cost = ward_cost(vectors, dims, &clusters[i].members, &clusters[j].members);
                let (lo, hi) = ordered_ids(clusters[i].id, clusters[j].id);
                let better = match best {
                    None => true,
                    Some((bc, bi, bj)) => {
                        let (blo, bhi) = ordered_ids(clusters[bi].id, clusters[bj].id);
                        cost < bc || (cost == bc && (lo, hi) < (blo, bhi))
                    }
                };
                if better {
                    best = Some((cost, i, j));
                }
            }
        }
        let (cost, i, j) = best.expect("at least two clusters remain");
        let (a, b) = ordered_ids(clusters[i].id, clusters[j].id);
        let removed = clusters.remove(j);
        let target = &mut clusters[i];
        target.members.extend(removed.members);
        target.members.sort_unstable();
        target.id = n + step;
        merges.push(Merge {
            step,
            a,
            b,
            cost,
            size: target.members.len(),
        });
    }
    Ok(Dendrogram {
        n_leaves: n,
        merges,
    })
}

fn ordered_ids(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Ward merge cost: the increase in within-cluster inertia,
/// `|A||B| / (|A|+|B|) * ||c_A - c_B||^2`, computed from the raw members so
/// the same arithmetic is reproducible from any partitioning.
fn ward_cost(vectors: &[FactVector], dims: usize, a: &[usize], b: &[usize]) -> f64 {
    let ca = centroid(vectors, dims, a);
    let cb = centroid(vectors, dims, b);
    let mut dist2 = 0.0;
    for d in 0..dims {
        let diff = ca[d] - cb[d];
        dist2 += diff * diff;
    }
    (a.len() as f64 * b.len() as f64) / (a.len() + b.len()) as f64 * dist2
}

fn centroid(vectors: &[FactVector], dims: usize, members: &[usize]) -> Vec<f64> {
    let mut c = alloc::vec![0.0; dims];
    for &m in members {
        for (value, coord) in c.iter_mut().zip(&vectors[m].coords) {
            *value += coord;
        }
    }
    for value in &mut c {
        *value /= members.len() as f64;
    }
    c
}

/// The unique `k`-cluster partition: the state after the first `n - k`
/// merges.
pub fn cut(dendrogram: &Dendrogram, k: usize) -> Result<Partition, OpacError> {
    let n = dendrogram.n_leaves;
    if k == 0 || k > n {
        return Err(OpacError::BadK { k, n });
    }
    // Replay the merge list with a union-by-smaller-id map.
    let mut cluster_of: Vec<usize> = (0..n).collect();
    let mut members: BTreeMap<usize, Vec<usize>> = (0..n).map(|i| (i, alloc::vec![i])).collect();
    for merge in &dendrogram.merges[..n - k] {
        let mut merged = members.remove(&merge.a).expect("cluster id is live");
        let other = members.remove(&merge.b).expect("cluster id is live");
        merged.extend(other);
        merged.sort_unstable();
        for &leaf in &merged {
            cluster_of[leaf] = n + merge.step;
        }
        members.insert(n + merge.step, merged);
    }
    let mut clusters: Vec<Vec<usize>> = members.into_values().collect();
    clusters.sort_by_key(|c| c[0]);
    Ok(Partition { clusters })
}

/// Scores every cut of the dendrogram and recommends the most separable
/// one.
///
/// Inertias are recomputed from the coordinates (not from merge
/// bookkeeping), so `intra + inter = total` is a real identity check. The
/// recommended `k` maximizes the mean silhouette over the non-degenerate
/// cuts `2..=n-1` (smallest `k` on ties).
pub fn score_partitions(
    dendrogram: &Dendrogram,
    vectors: &[FactVector],
) -> Result<(Vec<PartitionScore>, usize), OpacError> {
    let n = dendrogram.n_leaves;
    if n != vectors.len() {
        return Err(OpacError::BadK {
            k: vectors.len(),
            n,
        });
    }
    let dims = vectors.first().map_or(0, |v| v.coords.len());
    let all: Vec<usize> = (0..n).collect();
    let global = centroid(vectors, dims, &all);
    let mut scores = Vec::with_capacity(n);
    for k in 1..=n {
        let partition = cut(dendrogram, k)?;
        let mut intra = 0.0;
        let mut inter = 0.0;
        for cluster in &partition.clusters {
            let c = centroid(vectors, dims, cluster);
            for &m in cluster {
                intra += dist2(&vectors[m].coords, &c);
            }
            inter += cluster.len() as f64 * dist2(&c, &global);
        }
        let ward_cost = if k == n {
            0.0
        } else {
            dendrogram.merges[n - k - 1].cost
        };
        scores.push(PartitionScore {
            k,
            intra_inertia: intra,
            inter_inertia: inter,
            ward_cost,
            separability: mean_silhouette(vectors, &partition),
        });
    }
    let recommended = scores
        .iter()
        .filter(|s| s.k >= 2 && (n <= 2 || s.k < n))
        .fold(None::<(f64, usize)>, |best, s| match best {
            Some((value, _)) if value >= s.separability => best,
            _ => Some((s.separability, s.k)),
        })
        .map(|(_, k)| k)
        .unwrap_or(1);
    Ok((scores, recommended))
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(dist2(a, b))
}

/// Mean silhouette coefficient; singleton clusters score 0, the one-cluster
/// partition scores 0 by convention.
fn mean_silhouette(vectors: &[FactVector], partition: &Partition) -> f64 {
    if partition.clusters.len() < 2 {
        return 0.0;
    }
    let n = vectors.len();
    let mut total = 0.0;
    for (ci, cluster) in partition.clusters.iter().enumerate() {
        for &m in cluster {
            if cluster.len() == 1 {
                continue; // silhouette of a singleton is 0
            }
            let a = cluster
                .iter()
                .filter(|&&other| other != m)
                .map(|&other| dist(&vectors[m].coords, &vectors[other].coords))
                .sum::<f64>()
                / (cluster.len() - 1) as f64;
            let b = partition
                .clusters
                .iter()
                .enumerate()
                .filter(|(cj, _)| *cj != ci)
                .map(|(_, other)| {
                    other
                        .iter()
                        .map(|&o| dist(&vectors[m].coords, &vectors[o].coords))
                        .sum::<f64>()
                        / other.len() as f64
                })
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                total += (b - a) / denom;
            }
        }
    }
    total / n as f64
}

/// Runs the whole operator: vectorize, cluster, cut at `k`, and return the
/// member-to-cluster assignment as a new aggregate level.
///
/// Cluster labels are `c0, c1, ...` ordered by each cluster's smallest leaf
/// index, so the assignment is deterministic.
pub fn opac_aggregate(
    store: &XCubeStore,
    dimension: &str,
    measures: &[String],
    descriptors: &[String],
    k: usize,
) -> Result<AggregateLevel, OpacError> {
    let vectorized = vectorize(store, dimension, measures, descriptors)?;
    let n = vectorized.vectors.len();
    if k == 0 || k > n {
        return Err(OpacError::BadK { k, n });
    }
    let partition = if n == 1 {
        Partition {
            clusters: alloc::vec![alloc::vec![0]],
        }
    } else {
        cut(&ahc(&vectorized.vectors)?, k)?
    };
    let mut assignment = BTreeMap::new();
    for (label, cluster) in partition.clusters.iter().enumerate() {
        for &m in cluster {
            assignment.insert(vectorized.vectors[m].member.clone(), format!("c{label}"));
        }
    }
    Ok(AggregateLevel {
        dimension: dimension.to_string(),
        level_name: format!("{dimension}_agg{k}"),
        k,
        assignment,
    })
}

impl AggregateLevel {
    /// Grafts the aggregate level into a store as a one-attribute dimension:
    /// every cell with a coordinate in the base dimension gains a coordinate
    /// to its cluster, and the hierarchy catalog gains (or extends) a chain
    /// so the query layer can roll up to it.
    pub fn apply(&self, store: &XCubeStore) -> Result<XCubeStore, OpacError> {
        use crate::mcm::AttrType;
        use crate::store::{DimensionMember, FactCell};

        if store.dimension_def(&self.dimension).is_none() {
            return Err(OpacError::EmptyDimension(self.dimension.clone()));
        }
        let mut out = store.clone();
        out.dimensions.push(DimensionDef {
            name: self.level_name.clone(),
            attributes: alloc::vec![("cluster".to_string(), AttrType::String)],
        });
        // One member per cluster label, keyed like imported members.
        let mut label_member: BTreeMap<&str, MemberId> = BTreeMap::new();
        let mut labels: Vec<&String> = self.assignment.values().collect();
        labels.sort_unstable();
        labels.dedup();
        for label in labels {
            let node = MemberId(crate::hash::hex16(crate::hash::fnv1a_64_fields([
                self.level_name.as_str(),
                "cluster",
                label.as_str(),
            ])));
            label_member.insert(label, node.clone());
            out.members.push(DimensionMember {
                dimension: self.level_name.clone(),
                node,
                attributes: alloc::vec![("cluster".to_string(), label.clone())],
            });
        }
        let cells = core::mem::take(&mut out.cells);
        out.cells = cells
            .into_iter()
            .map(|mut cell: FactCell| {
                if let Some(node) = cell.coordinate(&self.dimension) {
                    if let Some(label) = self.assignment.get(node) {
                        cell.coordinates
                            .push((self.level_name.clone(), label_member[label.as_str()].clone()));
                    }
                }
                cell
            })
            .collect();
        // Extend the hierarchy this dimension already heads, or start one.
        let mut extended = false;
        for h in &mut out.hierarchies {
            if h.levels.last() == Some(&self.dimension) {
                h.levels.push(self.level_name.clone());
                extended = true;
                break;
            }
        }
        if !extended {
            out.hierarchies.push(HierarchyDef {
                levels: alloc::vec![self.dimension.clone(), self.level_name.clone()],
            });
        }
        Ok(out)
    }

    /// The mapping file consumed by the query front end.
    pub fn to_xml(&self) -> Element {
        let mut root = Element::new("aggregate-level")
            .with_attr("dimension", self.dimension.clone())
            .with_attr("name", self.level_name.clone())
            .with_attr("k", self.k.to_string());
        for (member, label) in &self.assignment {
            root.children.push(
                Element::new("member")
                    .with_attr("node", member.as_str())
                    .with_attr("cluster", label.clone()),
            );
        }
        root
    }

    pub fn from_xml(doc: &Element) -> Result<AggregateLevel, String> {
        if doc.name != "aggregate-level" {
            return Err(format!("expected 'aggregate-level', found '{}'", doc.name));
        }
        let take = |name: &str| -> Result<String, String> {
            doc.attr(name)
                .map(String::from)
                .ok_or_else(|| format!("aggregate-level without '{name}'"))
        };
        let mut assignment = BTreeMap::new();
        for member in doc.children_named("member") {
            let node = member
                .attr("node")
                .ok_or_else(|| "member without node".to_string())?;
            let cluster = member
                .attr("cluster")
                .ok_or_else(|| "member without cluster".to_string())?;
            assignment.insert(MemberId(node.to_string()), cluster.to_string());
        }
        Ok(AggregateLevel {
            dimension: take("dimension")?,
            level_name: take("name")?,
            k: take("k")?.parse().map_err(|_| "bad k".to_string())?,
            assignment,
        })
    }
}

/// The dendrogram as a merge-list document.
pub fn dendrogram_to_xml(d: &Dendrogram) -> Element {
    let mut root = Element::new("dendrogram").with_attr("leaves", d.n_leaves.to_string());
    for m in &d.merges {
        root.children.push(
            Element::new("merge")
                .with_attr("step", m.step.to_string())
                .with_attr("a", m.a.to_string())
                .with_attr("b", m.b.to_string())
                .with_attr("cost", format!("{}", m.cost))
                .with_attr("size", m.size.to_string()),
        );
    }
    root
}

/// The per-k score table as a document.
pub fn scores_to_xml(scores: &[PartitionScore], recommended: usize) -> Element {
    let mut root = Element::new("partition-scores").with_attr("recommended-k", recommended.to_string());
    for s in scores {
        root.children.push(
            Element::new("partition")
                .with_attr("k", s.k.to_string())
                .with_attr("intra", format!("{}", s.intra_inertia))
                .with_attr("inter", format!("{}", s.inter_inertia))
                .with_attr("ward-cost", format!("{}", s.ward_cost))
                .with_attr("separability", format!("{}", s.separability)),
        );
    }
    root
}
