//! U-matrix, cluster extraction, cell labelling and co-purchase statistics.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::ingest::{Basket, ProductCatalog};
use crate::som::{euclidean, CellIndex, SomGrid};

pub const DEFAULT_PERCENTILE: f64 = 40.0;
pub const DEFAULT_THETA: f64 = 0.5;
pub const DEFAULT_DOMINANT_SHARE: f64 = 0.5;

/// Mean distance from each cell's weight vector to its lattice neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct UMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl UMatrix {
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig("U-matrix dimensions must be positive".into()));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig("U-values must be finite and non-negative".into()));
        }
        Ok(UMatrix { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, cell: CellIndex) -> f64 {
        self.values[cell.row * self.cols + cell.col]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// In-bounds up/down/left/right neighbours of `cell`.
fn four_neighbours(cell: CellIndex, rows: usize, cols: usize) -> impl Iterator<Item = CellIndex> {
    let CellIndex { row, col } = cell;
    [
        (row > 0).then(|| CellIndex::new(row - 1, col)),
        (row + 1 < rows).then(|| CellIndex::new(row + 1, col)),
        (col > 0).then(|| CellIndex::new(row, col - 1)),
        (col + 1 < cols).then(|| CellIndex::new(row, col + 1)),
    ]
    .into_iter()
    .flatten()
}

/// Mean of the distances to the existing 4-neighbours; border cells
/// average over 2 or 3 neighbours.
pub fn mean_neighbour_distance(distances: &[f64]) -> f64 {
    distances.iter().sum::<f64>() / distances.len() as f64
}

pub fn compute_umatrix(grid: &SomGrid) -> UMatrix {
    let (rows, cols) = (grid.rows(), grid.cols());
    let values = grid
        .cells()
        .map(|cell| {
            let w = grid.weight(cell);
            let distances: Vec<f64> = four_neighbours(cell, rows, cols)
                .map(|n| euclidean(w, grid.weight(n)))
                .collect();
            if distances.is_empty() {
                0.0
            } else {
                mean_neighbour_distance(&distances)
            }
        })
        .collect();
    UMatrix { rows, cols, values }
}

/// Percentile with linear interpolation between order statistics: rank
/// `p/100 · (n − 1)` into the sorted values.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: usize,
    /// Row-major sorted.
    pub cells: Vec<CellIndex>,
    pub dominant_products: Vec<String>,
}

/// Low cells are those at or below the `threshold_percentile` percentile
/// of the U-values; clusters are their 4-connected components, largest
/// first (ties by first cell), numbered from 1.
pub fn extract_clusters(umatrix: &UMatrix, threshold_percentile: f64) -> Result<Vec<Cluster>> {
    if !(threshold_percentile > 0.0 && threshold_percentile < 100.0) {
        return Err(Error::InvalidConfig(format!(
            "percentile {threshold_percentile} outside (0, 100)"
        )));
    }
    let (rows, cols) = (umatrix.rows, umatrix.cols);
    let tau = percentile(&umatrix.values, threshold_percentile);
    let low: Vec<bool> = umatrix.values.iter().map(|&v| v <= tau).collect();

    let mut seen = vec![false; rows * cols];
    let mut components: Vec<Vec<CellIndex>> = Vec::new();
    for start in 0..rows * cols {
        if !low[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([CellIndex::new(start / cols, start % cols)]);
        let mut cells = Vec::new();
        while let Some(cell) = queue.pop_front() {
            cells.push(cell);
            for n in four_neighbours(cell, rows, cols) {
                let i = n.row * cols + n.col;
                if low[i] && !seen[i] {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
        cells.sort();
        components.push(cells);
    }
    components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));

    Ok(components
        .into_iter()
        .enumerate()
        .map(|(i, cells)| Cluster { id: i + 1, cells, dominant_products: Vec::new() })
        .collect())
}

pub type CellLabels = BTreeMap<CellIndex, Vec<String>>;

/// Products whose weight component in a cell is at least `theta`, per
/// cell, strongest first (ties by name). Every cell gets an entry.
pub fn cell_associations(grid: &SomGrid, catalog: &ProductCatalog, theta: f64) -> Result<CellLabels> {
    if grid.dim() != catalog.len() {
        return Err(Error::DimensionMismatch { expected: catalog.len(), found: grid.dim() });
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidConfig(format!("theta {theta} outside (0, 1]")));
    }
    Ok(grid
        .cells()
        .map(|cell| {
            let mut hits: Vec<(f64, &str)> = grid
                .weight(cell)
                .iter()
                .enumerate()
                .filter(|(_, &w)| w >= theta)
                .map(|(j, &w)| (w, catalog.products()[j].as_str()))
                .collect();
            hits.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
            (cell, hits.into_iter().map(|(_, name)| name.to_string()).collect())
        })
        .collect())
}

/// `(baskets containing product, total baskets)`.
pub fn support_count(baskets: &[Basket], catalog: &ProductCatalog, product: &str) -> Result<(usize, usize)> {
    let column = catalog.require(product)?;
    if baskets.is_empty() {
        return Err(Error::EmptyInput("no baskets".into()));
    }
    Ok((baskets.iter().filter(|b| b.contains(column)).count(), baskets.len()))
}

/// Fraction of baskets containing `product`.
pub fn support(baskets: &[Basket], catalog: &ProductCatalog, product: &str) -> Result<f64> {
    let (hits, total) = support_count(baskets, catalog, product)?;
    Ok(hits as f64 / total as f64)
}

/// `(baskets containing a and b, baskets containing a)`.
pub fn confidence_count(baskets: &[Basket], catalog: &ProductCatalog, a: &str, b: &str) -> Result<(usize, usize)> {
    let ca = catalog.require(a)?;
    let cb = catalog.require(b)?;
    if ca == cb {
        return Err(Error::InvalidConfig(format!("confidence needs two distinct products, got `{a}` twice")));
    }
    let with_a: Vec<&Basket> = baskets.iter().filter(|x| x.contains(ca)).collect();
    if with_a.is_empty() {
        return Err(Error::UndefinedConditional { product: a.to_string() });
    }
    Ok((with_a.iter().filter(|x| x.contains(cb)).count(), with_a.len()))
}

/// Directional confidence a → b: of the baskets holding `a`, the
/// fraction also holding `b`.
pub fn confidence(baskets: &[Basket], catalog: &ProductCatalog, a: &str, b: &str) -> Result<f64> {
    let (both, with_a) = confidence_count(baskets, catalog, a, b)?;
    Ok(both as f64 / with_a as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportParams {
    pub percentile: f64,
    pub theta: f64,
    /// A product is dominant in a cluster when it labels at least this
    /// fraction of the cluster's cells.
    pub dominant_share: f64,
}

impl Default for ReportParams {
    fn default() -> Self {
        ReportParams {
            percentile: DEFAULT_PERCENTILE,
            theta: DEFAULT_THETA,
            dominant_share: DEFAULT_DOMINANT_SHARE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationReport {
    pub clusters: Vec<Cluster>,
    pub cell_labels: CellLabels,
    pub support: BTreeMap<String, f64>,
    /// Keyed by (antecedent, consequent).
    pub confidence: BTreeMap<(String, String), f64>,
}

/// Products labelling at least `share` of `cells`, most frequent first
/// (ties by name).
fn dominant_products(cells: &[CellIndex], labels: &CellLabels, share: f64) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for cell in cells {
        for product in labels.get(cell).into_iter().flatten() {
            *counts.entry(product.as_str()).or_default() += 1;
        }
    }
    let needed = ((share * cells.len() as f64).ceil() as usize).max(1);
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, n)| n >= needed).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().map(|(p, _)| p.to_string()).collect()
}

/// Assembles clusters with their dominant products, the per-cell labels,
/// support of every labelled product and confidence for every ordered
/// pair of products labelled within a common cluster. Pairs whose
/// antecedent never occurs in `baskets` are left out.
pub fn build_report(
    grid: &SomGrid,
    umatrix: &UMatrix,
    baskets: &[Basket],
    catalog: &ProductCatalog,
    params: &ReportParams,
) -> Result<AssociationReport> {
    if (umatrix.rows, umatrix.cols) != (grid.rows(), grid.cols()) {
        return Err(Error::DimensionMismatch { expected: grid.cell_count(), found: umatrix.values.len() });
    }
    if !(params.dominant_share > 0.0 && params.dominant_share <= 1.0) {
        return Err(Error::InvalidConfig(format!("dominant share {} outside (0, 1]", params.dominant_share)));
    }
    let mut clusters = extract_clusters(umatrix, params.percentile)?;
    let mut cell_labels = cell_associations(grid, catalog, params.theta)?;
    cell_labels.retain(|_, products| !products.is_empty());

    for cluster in &mut clusters {
        cluster.dominant_products = dominant_products(&cluster.cells, &cell_labels, params.dominant_share);
    }

    let mut support_table = BTreeMap::new();
    for product in cell_labels.values().flatten() {
        if !support_table.contains_key(product) {
            support_table.insert(product.clone(), support(baskets, catalog, product)?);
        }
    }

    let mut confidence_table = BTreeMap::new();
    for cluster in &clusters {
        let products: BTreeSet<&String> = cluster
            .cells
            .iter()
            .filter_map(|c| cell_labels.get(c))
            .flatten()
            .collect();
        for &a in &products {
            for &b in &products {
                if a == b || confidence_table.contains_key(&(a.clone(), b.clone())) {
                    continue;
                }
                match confidence(baskets, catalog, a, b) {
                    Ok(value) => {
                        confidence_table.insert((a.clone(), b.clone()), value);
                    }
                    Err(Error::UndefinedConditional { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }

    Ok(AssociationReport {
        clusters,
        cell_labels,
        support: support_table,
        confidence: confidence_table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn basket(id: u64, v: &[u8]) -> Basket {
        Basket::new(id, format!("c{id}"), NaiveDate::from_ymd_opt(2011, 9, 1).unwrap(), v.to_vec()).unwrap()
    }

    #[test]
    fn worked_example_averages_four_distances() {
        assert_eq!(mean_neighbour_distance(&[7.0, 12.5, 11.5, 5.0]), 9.0);
    }

    #[test]
    fn interior_cell_with_constructed_distances() {
        // 1-D weights make neighbour distances equal absolute differences.
        let centre = 100.0;
        let cells: Vec<Vec<f64>> = (0..9)
            .map(|i| match i {
                1 => vec![centre - 7.0],
                3 => vec![centre - 11.5],
                4 => vec![centre],
                5 => vec![centre + 5.0],
                7 => vec![centre + 12.5],
                _ => vec![0.0],
            })
            .collect();
        let grid = SomGrid::from_cells(3, 3, &cells).unwrap();
        assert_eq!(compute_umatrix(&grid).get(CellIndex::new(1, 1)), 9.0);
    }

    #[test]
    fn identical_weights_give_zero_matrix() {
        let grid = SomGrid::from_cells(3, 4, &vec![vec![0.3, 0.7]; 12]).unwrap();
        assert!(compute_umatrix(&grid).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_by_two_corner_averages() {
        // (0,0): |0-1|,|0-2| (0,1): |1-0|,|1-3| (1,0): |2-0|,|2-3| (1,1): |3-1|,|3-2|
        let grid = SomGrid::from_cells(2, 2, &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(compute_umatrix(&grid).values(), [1.5, 1.5, 1.5, 1.5]);

        let grid = SomGrid::from_cells(1, 3, &[vec![0.0], vec![1.0], vec![4.0]]).unwrap();
        assert_eq!(compute_umatrix(&grid).values(), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0, 5.0], 50.0), 3.0);
        assert_eq!(percentile(&[0.0, 10.0], 40.0), 4.0);
        assert_eq!(percentile(&[4.0, 1.0, 3.0, 2.0], 100.0 / 3.0), 2.0);
    }

    #[test]
    fn uniform_umatrix_is_one_cluster() {
        let u = UMatrix::from_values(3, 4, vec![2.5; 12]).unwrap();
        let clusters = extract_clusters(&u, 40.0).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].cells.len(), 12);
        assert_eq!(clusters[0].id, 1);
    }

    #[test]
    fn single_low_cell() {
        let mut values = vec![10.0; 16];
        values[6] = 1.0;
        let u = UMatrix::from_values(4, 4, values).unwrap();
        let clusters = extract_clusters(&u, 5.0).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].cells, vec![CellIndex::new(1, 2)]);
    }

    #[test]
    fn two_basins_split_by_high_column() {
        #[rustfmt::skip]
        let values = vec![
            1.0, 1.0, 9.0, 2.0, 2.0,
            1.0, 1.0, 9.0, 2.0, 2.0,
            1.0, 5.0, 9.0, 5.0, 2.0,
            5.0, 5.0, 9.0, 5.0, 2.0,
            5.0, 5.0, 9.0, 5.0, 5.0,
        ];
        let u = UMatrix::from_values(5, 5, values).unwrap();
        let clusters = extract_clusters(&u, 40.0).unwrap();
        let cells = |v: &[(usize, usize)]| v.iter().map(|&(r, c)| CellIndex::new(r, c)).collect::<Vec<_>>();
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].cells, cells(&[(0, 3), (0, 4), (1, 3), (1, 4), (2, 4), (3, 4)]));
        assert_eq!(clusters[1].cells, cells(&[(0, 0), (0, 1), (1, 0), (1, 1), (2, 0)]));
        // 6 cells vs 5 cells: larger first
        assert_eq!((clusters[0].id, clusters[1].id), (1, 2));
    }

    #[test]
    fn percentile_bounds_are_checked() {
        let u = UMatrix::from_values(1, 2, vec![0.0, 1.0]).unwrap();
        assert!(extract_clusters(&u, 0.0).is_err());
        assert!(extract_clusters(&u, 100.0).is_err());
    }

    #[test]
    fn associations_threshold_and_order() {
        let catalog = ProductCatalog::from_names(["A", "B", "C"]).unwrap();
        let grid = SomGrid::from_cells(1, 2, &[vec![0.9, 0.4, 0.6], vec![0.0, 0.0, 0.0]]).unwrap();
        let labels = cell_associations(&grid, &catalog, 0.5).unwrap();
        assert_eq!(labels[&CellIndex::new(0, 0)], ["A", "C"]);
        assert!(labels[&CellIndex::new(0, 1)].is_empty());

        let tied = SomGrid::from_cells(1, 2, &[vec![0.7, 0.9, 0.7], vec![0.0; 3]]).unwrap();
        assert_eq!(cell_associations(&tied, &catalog, 0.5).unwrap()[&CellIndex::new(0, 0)], ["B", "A", "C"]);
    }

    #[test]
    fn associations_reject_bad_inputs() {
        let catalog = ProductCatalog::from_names(["A", "B"]).unwrap();
        let grid = SomGrid::from_cells(1, 2, &[vec![0.0; 3], vec![0.0; 3]]).unwrap();
        assert!(matches!(cell_associations(&grid, &catalog, 0.5), Err(Error::DimensionMismatch { .. })));
        let ok = SomGrid::from_cells(1, 2, &[vec![0.0; 2], vec![0.0; 2]]).unwrap();
        assert!(cell_associations(&ok, &catalog, 1.1).is_err());
        assert!(cell_associations(&ok, &catalog, 0.0).is_err());
    }

    #[test]
    fn theta_one_on_binary_init_labels_exactly_the_ones() {
        let config = crate::som::SomConfig { rows: 3, cols: 3, seed: 9, ..Default::default() };
        let grid = crate::som::init_grid(&config, 6).unwrap();
        let catalog = ProductCatalog::from_names(["a", "b", "c", "d", "e", "f"]).unwrap();
        let labels = cell_associations(&grid, &catalog, 1.0).unwrap();
        for cell in grid.cells() {
            let mut expected: Vec<String> = grid
                .weight(cell)
                .iter()
                .enumerate()
                .filter(|(_, &w)| w == 1.0)
                .map(|(j, _)| catalog.products()[j].clone())
                .collect();
            expected.sort();
            assert_eq!(labels[&cell], expected);
        }
    }

    #[test]
    fn support_cases() {
        let catalog = ProductCatalog::from_names(["Aceite", "Arroz", "Fideos"]).unwrap();
        let baskets = vec![
            basket(1, &[1, 1, 0]),
            basket(2, &[0, 1, 0]),
            basket(3, &[1, 1, 1]),
            basket(4, &[0, 1, 1]),
            basket(5, &[0, 1, 0]),
        ];
        assert_eq!(support(&baskets, &catalog, "Aceite").unwrap(), 0.4);
        assert_eq!(support(&baskets, &catalog, "Arroz").unwrap(), 1.0);
        assert_eq!(support(&baskets[..2], &catalog, "Fideos").unwrap(), 0.0);
        assert!(matches!(support(&baskets, &catalog, "Cola"), Err(Error::UnknownProduct { .. })));
        assert!(matches!(support(&[], &catalog, "Arroz"), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn confidence_cases() {
        let catalog = ProductCatalog::from_names(["a", "b", "c"]).unwrap();
        let baskets = vec![
            basket(1, &[1, 1, 0]),
            basket(2, &[1, 1, 0]),
            basket(3, &[1, 1, 0]),
            basket(4, &[1, 0, 0]),
            basket(5, &[0, 1, 1]),
        ];
        assert_eq!(confidence(&baskets, &catalog, "a", "b").unwrap(), 0.75);
        assert_eq!(confidence(&baskets[..3], &catalog, "a", "b").unwrap(), 1.0);
        assert_eq!(confidence(&baskets, &catalog, "a", "c").unwrap(), 0.0);
        assert!(matches!(
            confidence(&baskets[..4], &catalog, "c", "a"),
            Err(Error::UndefinedConditional { ref product }) if product == "c"
        ));
        assert!(matches!(confidence(&baskets, &catalog, "a", "z"), Err(Error::UnknownProduct { .. })));
        assert!(confidence(&baskets, &catalog, "a", "a").is_err());
    }

    #[test]
    fn empty_association_map_gives_empty_tables() {
        let catalog = ProductCatalog::from_names(["a", "b"]).unwrap();
        let grid = SomGrid::from_cells(2, 2, &vec![vec![0.1, 0.2]; 4]).unwrap();
        let u = compute_umatrix(&grid);
        let report = build_report(&grid, &u, &[basket(1, &[1, 0])], &catalog, &ReportParams::default()).unwrap();
        assert_eq!(report.clusters.len(), 1);
        assert!(report.cell_labels.is_empty());
        assert!(report.support.is_empty());
        assert!(report.confidence.is_empty());
        assert!(report.clusters[0].dominant_products.is_empty());
    }

    #[test]
    fn report_tables_for_a_hand_built_map() {
        let catalog = ProductCatalog::from_names(["a", "b", "c"]).unwrap();
        let grid = SomGrid::from_cells(
            1,
            4,
            &[vec![1.0, 1.0, 0.0], vec![1.0, 0.9, 0.0], vec![0.0, 0.0, 9.0], vec![0.0, 0.0, 9.0]],
        )
        .unwrap();
        let u = UMatrix::from_values(1, 4, vec![0.0, 0.0, 5.0, 0.0]).unwrap();
        let baskets = vec![basket(1, &[1, 1, 0]), basket(2, &[1, 0, 0]), basket(3, &[0, 0, 1])];
        let report = build_report(&grid, &u, &baskets, &catalog, &ReportParams::default()).unwrap();
        assert_eq!(report.clusters.len(), 2);
        assert_eq!(report.clusters[0].dominant_products, ["a", "b"]);
        assert_eq!(report.clusters[1].dominant_products, ["c"]);
        assert_eq!(report.support["a"], 2.0 / 3.0);
        assert_eq!(report.confidence[&("a".to_string(), "b".to_string())], 0.5);
        assert_eq!(report.confidence[&("b".to_string(), "a".to_string())], 1.0);
        assert!(!report.confidence.contains_key(&("a".to_string(), "c".to_string())));
    }

    proptest! {
        #[test]
        fn umatrix_is_homogeneous(
            cells in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 6),
            k in 0.0f64..10.0,
        ) {
            let grid = SomGrid::from_cells(2, 3, &cells).unwrap();
            let scaled: Vec<Vec<f64>> = cells.iter().map(|c| c.iter().map(|w| w * k).collect()).collect();
            let u = compute_umatrix(&grid);
            let us = compute_umatrix(&SomGrid::from_cells(2, 3, &scaled).unwrap());
            for (a, b) in u.values().iter().zip(us.values()) {
                prop_assert!((a * k - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn clusters_are_disjoint_connected_and_low(
            values in prop::collection::vec(0.0f64..10.0, 30),
            p in 1.0f64..99.0,
        ) {
            let u = UMatrix::from_values(5, 6, values.clone()).unwrap();
            let clusters = extract_clusters(&u, p).unwrap();
            let tau = percentile(&values, p);
            let mut owner = BTreeMap::new();
            for cluster in &clusters {
                for &cell in &cluster.cells {
                    prop_assert!(u.get(cell) <= tau);
                    prop_assert!(owner.insert(cell, cluster.id).is_none());
                }
                // flood fill restricted to the cluster's own cells
                let members: BTreeSet<CellIndex> = cluster.cells.iter().copied().collect();
                let mut reached = BTreeSet::from([cluster.cells[0]]);
                let mut stack = vec![cluster.cells[0]];
                while let Some(c) = stack.pop() {
                    for n in four_neighbours(c, 5, 6) {
                        if members.contains(&n) && reached.insert(n) {
                            stack.push(n);
                        }
                    }
                }
                prop_assert_eq!(reached, members);
            }
            let low = values.iter().filter(|&&v| v <= tau).count();
            prop_assert_eq!(owner.len(), low);
            for pair in clusters.windows(2) {
                prop_assert!(pair[0].cells.len() >= pair[1].cells.len());
            }
        }
    }
}
