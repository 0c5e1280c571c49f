//! Seeded synthetic basket data with planted co-purchase groups, and
//! naive counting oracles for checking the statistics in
//! [`crate::analysis`].

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::ingest::{Basket, ProductCatalog};
use crate::rng::{SeededRng, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedGroup {
    pub products: Vec<usize>,
    /// Inclusion probability for each member when the group is chosen.
    pub p_in: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_baskets: usize,
    pub n_products: usize,
    pub groups: Vec<PlantedGroup>,
    /// Inclusion probability for products outside the chosen group.
    pub p_bg: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Three disjoint groups of four products spread across the catalog,
    /// `p_in = 0.8`, `p_bg = 0.05`. Needs at least 12 products.
    pub fn three_groups(n_baskets: usize, n_products: usize, seed: u64) -> Self {
        let stride = (n_products / 3).max(1);
        let groups = (0..3)
            .map(|g| PlantedGroup {
                products: (g * stride..g * stride + 4).collect(),
                p_in: 0.8,
            })
            .collect();
        SynthSpec { n_baskets, n_products, groups, p_bg: 0.05, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidConfig(m));
        if self.n_baskets == 0 || self.n_products == 0 {
            return invalid("n_baskets and n_products must be positive".into());
        }
        if self.groups.is_empty() {
            return invalid("at least one group is required".into());
        }
        if !(0.0..1.0).contains(&self.p_bg) {
            return invalid(format!("p_bg {} outside [0, 1)", self.p_bg));
        }
        for (g, group) in self.groups.iter().enumerate() {
            if group.products.is_empty() {
                return invalid(format!("group {g} is empty"));
            }
            if let Some(&p) = group.products.iter().find(|&&p| p >= self.n_products) {
                return invalid(format!("group {g} names product {p} ≥ {}", self.n_products));
            }
            if !(group.p_in > self.p_bg && group.p_in <= 1.0) {
                return invalid(format!("group {g}: need p_bg < p_in ≤ 1, got p_in {}", group.p_in));
            }
        }
        Ok(())
    }
}

/// Zero-padded names `p00`, `p01`, ... so lexicographic order matches
/// column order.
pub fn product_names(n_products: usize) -> Vec<String> {
    let width = n_products.saturating_sub(1).to_string().len().max(2);
    (0..n_products).map(|j| format!("p{j:0width$}")).collect()
}

pub fn catalog(n_products: usize) -> Result<ProductCatalog> {
    ProductCatalog::from_names(product_names(n_products))
}

fn synth_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2011, 9, 1).expect("valid date")
}

/// Generates baskets and reports which group each one was drawn from.
///
/// Per basket: pick a group with `index(groups)`, then for every product
/// in column order include it when `unit_f64() < p` (`p_in` for group
/// members, `p_bg` otherwise). Empty draws repeat the product pass with
/// the same group. Draws come from stream [`Stream::Synth`].
pub fn generate_labelled(spec: &SynthSpec) -> Result<(Vec<Basket>, Vec<usize>)> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed, Stream::Synth);
    let memberships: Vec<Vec<bool>> = spec
        .groups
        .iter()
        .map(|g| {
            let mut m = vec![false; spec.n_products];
            for &p in &g.products {
                m[p] = true;
            }
            m
        })
        .collect();

    let width = spec.n_baskets.to_string().len().max(6);
    let mut baskets = Vec::with_capacity(spec.n_baskets);
    let mut labels = Vec::with_capacity(spec.n_baskets);
    for i in 0..spec.n_baskets {
        let g = rng.index(spec.groups.len());
        let vector = loop {
            let v: Vec<u8> = (0..spec.n_products)
                .map(|j| {
                    let p = if memberships[g][j] { spec.groups[g].p_in } else { spec.p_bg };
                    u8::from(rng.unit_f64() < p)
                })
                .collect();
            if v.contains(&1) {
                break v;
            }
        };
        let id = i as u64 + 1;
        baskets.push(Basket::new(id, format!("synth-{id:0width$}"), synth_date(), vector)?);
        labels.push(g);
    }
    Ok((baskets, labels))
}

pub fn generate(spec: &SynthSpec) -> Result<Vec<Basket>> {
    generate_labelled(spec).map(|(baskets, _)| baskets)
}

/// Exhaustive co-occurrence counts for every product pair `(i, j)` with
/// `i ≤ j`; the diagonal holds single-product counts.
pub fn oracle_pair_counts(baskets: &[Basket]) -> Result<BTreeMap<(usize, usize), usize>> {
    let first = baskets
        .first()
        .ok_or_else(|| Error::EmptyInput("no baskets".into()))?;
    let dim = first.vector().len();
    let mut counts = BTreeMap::new();
    for i in 0..dim {
        for j in i..dim {
            let mut n = 0;
            for basket in baskets {
                let v = basket.vector();
                if v.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
                }
                if v[i] == 1 && v[j] == 1 {
                    n += 1;
                }
            }
            counts.insert((i, j), n);
        }
    }
    Ok(counts)
}

/// Looks up an unordered pair in [`oracle_pair_counts`] output.
pub fn pair_count(counts: &BTreeMap<(usize, usize), usize>, i: usize, j: usize) -> usize {
    counts[&(i.min(j), i.max(j))]
}
