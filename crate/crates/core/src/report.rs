//! Output artifacts: grayscale U-matrix images (binary PGM), the text grid
//! map with its product legend, and the CSV report tables.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use crate::analysis::{AssociationReport, CellLabels, Cluster, UMatrix};
use crate::error::{Error, Result};
use crate::som::CellIndex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayscaleImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayscaleImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig("image dimensions must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch { expected: width * height, found: pixels.len() });
        }
        Ok(GrayscaleImage { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Maps the smallest U-value to black and the largest to white, rounding
/// half up, and blows each cell up into a `scale × scale` block. A flat
/// U-matrix renders all black.
pub fn render_umatrix(umatrix: &UMatrix, scale: usize) -> Result<GrayscaleImage> {
    if scale == 0 {
        return Err(Error::InvalidConfig("scale must be ≥ 1".into()));
    }
    let (min, max) = (umatrix.min(), umatrix.max());
    let range = max - min;
    let shade = |v: f64| -> u8 {
        if range > 0.0 {
            (255.0 * (v - min) / range + 0.5).floor().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    };
    let width = umatrix.cols() * scale;
    let height = umatrix.rows() * scale;
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            pixels.push(shade(umatrix.get(CellIndex::new(y / scale, x / scale))));
        }
    }
    GrayscaleImage::new(width, height, pixels)
}

/// Binary PGM: `P5\n<w> <h>\n255\n` then the raw pixel bytes.
pub fn write_pgm<W: Write>(image: &GrayscaleImage, mut sink: W) -> Result<()> {
    write!(sink, "P5\n{} {}\n255\n", image.width, image.height)?;
    sink.write_all(&image.pixels)?;
    sink.flush()?;
    Ok(())
}

/// Parses a binary PGM with maxval 255. Comment lines are not supported.
pub fn read_pgm<R: Read>(mut source: R) -> Result<GrayscaleImage> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let bad = |reason: &str| Error::Format { line: 0, reason: format!("PGM: {reason}") };

    let mut pos = 0;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(bad("magic is not P5"));
    }
    let width: usize = token()?.parse().map_err(|_| bad("bad width"))?;
    let height: usize = token()?.parse().map_err(|_| bad("bad height"))?;
    let maxval: usize = token()?.parse().map_err(|_| bad("bad maxval"))?;
    if maxval != 255 {
        return Err(bad("maxval must be 255"));
    }
    // exactly one whitespace byte separates the header from the raster
    let raster = &bytes[pos + 1..];
    if raster.len() != width * height {
        return Err(bad("raster size does not match dimensions"));
    }
    GrayscaleImage::new(width, height, raster.to_vec())
}

/// Writes the labelled lattice as a fixed-width table. Each cell shows its
/// cluster id (or `.`) followed by `:[ids]` when it carries products; the
/// legend numbers products from 1 in name order.
pub fn emit_grid_map<W: Write>(
    rows: usize,
    cols: usize,
    cell_labels: &CellLabels,
    clusters: &[Cluster],
    mut sink: W,
) -> Result<()> {
    if let Some(cell) = cell_labels.keys().find(|c| c.row >= rows || c.col >= cols) {
        return Err(Error::InvalidConfig(format!("label for cell {cell} outside {rows}×{cols} grid")));
    }
    let legend: BTreeSet<&str> = cell_labels.values().flatten().map(String::as_str).collect();
    let product_ids: BTreeMap<&str, usize> = legend.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
    let cluster_of: BTreeMap<CellIndex, usize> = clusters
        .iter()
        .flat_map(|c| c.cells.iter().map(move |&cell| (cell, c.id)))
        .collect();

    let texts: Vec<Vec<String>> = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let cell = CellIndex::new(r, c);
                    let mut text = cluster_of.get(&cell).map_or_else(|| ".".to_string(), |id| id.to_string());
                    if let Some(products) = cell_labels.get(&cell).filter(|p| !p.is_empty()) {
                        let ids: Vec<String> = products.iter().map(|p| product_ids[p.as_str()].to_string()).collect();
                        text.push_str(&format!(":[{}]", ids.join(",")));
                    }
                    text
                })
                .collect()
        })
        .collect();
    let width = texts.iter().flatten().map(|t| t.chars().count()).max().unwrap_or(1);

    for row in &texts {
        let line: Vec<String> = row.iter().map(|t| format!("{t:<width$}")).collect();
        writeln!(sink, "{}", line.join(" ").trim_end())?;
    }
    writeln!(sink)?;
    writeln!(sink, "id product")?;
    for (product, id) in &product_ids {
        writeln!(sink, "{id} {product}")?;
    }
    sink.flush()?;
    Ok(())
}

fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink)
}

/// `cluster_id,cells,dominant_products`; cells as space-separated `row:col`,
/// products joined by `;`.
pub fn write_clusters_csv<W: Write>(clusters: &[Cluster], sink: W) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["cluster_id", "cells", "dominant_products"])?;
    for cluster in clusters {
        let cells: Vec<String> = cluster.cells.iter().map(|c| format!("{}:{}", c.row, c.col)).collect();
        w.write_record([cluster.id.to_string(), cells.join(" "), cluster.dominant_products.join(";")])?;
    }
    w.flush()?;
    Ok(())
}

/// `row,col,products` for every labelled cell, products joined by `;`.
pub fn write_labels_csv<W: Write>(labels: &CellLabels, sink: W) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["row", "col", "products"])?;
    for (cell, products) in labels.iter().filter(|(_, p)| !p.is_empty()) {
        w.write_record([cell.row.to_string(), cell.col.to_string(), products.join(";")])?;
    }
    w.flush()?;
    Ok(())
}

/// `kind,product_a,product_b,value` with supports first, then
/// confidences; values to 4 decimal places.
pub fn write_stats_csv<W: Write>(report: &AssociationReport, sink: W) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["kind", "product_a", "product_b", "value"])?;
    for (product, value) in &report.support {
        w.write_record(["support", product, "", &format!("{value:.4}")])?;
    }
    for ((a, b), value) in &report.confidence {
        w.write_record(["confidence", a, b, &format!("{value:.4}")])?;
    }
    w.flush()?;
    Ok(())
}
