//! Kohonen self-organizing map over basket vectors.
//!
//! Training is online: each iteration draws one basket uniformly with
//! replacement, finds its best matching unit (BMU) and pulls every cell
//! toward the sample by `alpha_t * h(bmu, cell, radius_t)`, where `h` is a
//! Gaussian over lattice distance. All randomness comes from
//! [`crate::rng::SeededRng`], so `(baskets, config)` fixes the result bit
//! for bit.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::Basket;
use crate::rng::{SeededRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    #[default]
    RandomBinary,
    RandomUniform,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::RandomBinary => "random_binary",
            InitMode::RandomUniform => "random_uniform",
        })
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "random_binary" | "binary" => Ok(InitMode::RandomBinary),
            "random_uniform" | "uniform" => Ok(InitMode::RandomUniform),
            other => Err(Error::InvalidConfig(format!("unknown init mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateSchedule {
    #[default]
    Constant,
    LinearDecay,
}

impl fmt::Display for RateSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateSchedule::Constant => "constant",
            RateSchedule::LinearDecay => "linear_decay",
        })
    }
}

impl FromStr for RateSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "constant" => Ok(RateSchedule::Constant),
            "linear_decay" | "linear" => Ok(RateSchedule::LinearDecay),
            other => Err(Error::InvalidConfig(format!("unknown rate schedule `{other}`"))),
        }
    }
}

/// Training parameters. Defaults: 10×12 grid, constant rate 0.8, 20,000
/// iterations, binary initialization, radius from `max(rows, cols) / 2`
/// down to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SomConfig {
    pub rows: usize,
    pub cols: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    pub init_mode: InitMode,
    pub rate_schedule: RateSchedule,
    /// `None` means `max(rows, cols) / 2`.
    pub initial_radius: Option<f64>,
    pub final_radius: f64,
}

impl Default for SomConfig {
    fn default() -> Self {
        SomConfig {
            rows: 10,
            cols: 12,
            learning_rate: 0.8,
            iterations: 20_000,
            seed: 0,
            init_mode: InitMode::RandomBinary,
            rate_schedule: RateSchedule::Constant,
            initial_radius: None,
            final_radius: 1.0,
        }
    }
}

impl SomConfig {
    pub fn initial_radius(&self) -> f64 {
        self.initial_radius
            .unwrap_or_else(|| self.rows.max(self.cols) as f64 / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.rows == 0 || self.cols == 0 {
            return invalid("rows and cols must be ≥ 1");
        }
        if self.rows * self.cols < 2 {
            return invalid("the grid needs at least 2 cells");
        }
        if self.iterations == 0 {
            return invalid("iterations must be ≥ 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return invalid("learning rate must be in (0, 1]");
        }
        let r0 = self.initial_radius();
        if !(r0.is_finite() && r0 > 0.0) || !(self.final_radius.is_finite() && self.final_radius > 0.0) {
            return invalid("radii must be positive and finite");
        }
        if self.final_radius > r0 {
            return invalid("final radius must not exceed initial radius");
        }
        Ok(())
    }

    /// Learning rate at step `t` (0-based).
    pub fn rate_at(&self, t: usize) -> f64 {
        match self.rate_schedule {
            RateSchedule::Constant => self.learning_rate,
            RateSchedule::LinearDecay => {
                self.learning_rate * (1.0 - t as f64 / self.iterations as f64)
            }
        }
    }

    /// Neighborhood radius at step `t`: linear from the initial radius at
    /// the first step to the final radius at the last.
    pub fn radius_at(&self, t: usize) -> f64 {
        let r0 = self.initial_radius();
        if self.iterations <= 1 {
            return r0;
        }
        let progress = t as f64 / (self.iterations - 1) as f64;
        r0 + (self.final_radius - r0) * progress
    }
}

/// A lattice position. Ordering is row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

impl CellIndex {
    pub fn new(row: usize, col: usize) -> Self {
        CellIndex { row, col }
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// `rows × cols` weight vectors of length `dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SomGrid {
    rows: usize,
    cols: usize,
    dim: usize,
    weights: Vec<f64>,
}

impl SomGrid {
    pub fn from_weights(rows: usize, cols: usize, dim: usize, weights: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || dim == 0 {
            return Err(Error::InvalidConfig("grid dimensions must be positive".into()));
        }
        if weights.len() != rows * cols * dim {
            return Err(Error::DimensionMismatch {
                expected: rows * cols * dim,
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig("weights must be finite".into()));
        }
        Ok(SomGrid { rows, cols, dim, weights })
    }

    /// Builds a grid from one weight vector per cell in row-major order.
    pub fn from_cells(rows: usize, cols: usize, cells: &[Vec<f64>]) -> Result<Self> {
        let dim = cells.first().map_or(0, Vec::len);
        if cells.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: cells.len(),
            });
        }
        if let Some(bad) = cells.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
        }
        SomGrid::from_weights(rows, cols, dim, cells.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellIndex> {
        let cols = self.cols;
        (0..self.rows * self.cols).map(move |i| CellIndex::new(i / cols, i % cols))
    }

    fn offset(&self, cell: CellIndex) -> usize {
        assert!(cell.row < self.rows && cell.col < self.cols, "cell {cell} out of bounds");
        (cell.row * self.cols + cell.col) * self.dim
    }

    pub fn weight(&self, cell: CellIndex) -> &[f64] {
        let start = self.offset(cell);
        &self.weights[start..start + self.dim]
    }

    pub fn weight_mut(&mut self, cell: CellIndex) -> &mut [f64] {
        let start = self.offset(cell);
        &mut self.weights[start..start + self.dim]
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim, found: x.len() })
        }
    }

    /// Nearest cell by Euclidean distance. Ties go to the smallest
    /// row-major index.
    pub fn find_bmu(&self, x: &[f64]) -> Result<(CellIndex, f64)> {
        self.check_dim(x)?;
        let (best, best_sq) = self
            .weights
            .chunks_exact(self.dim)
            .map(|w| squared_distance(w, x))
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bd), (i, d)| if d < bd { (i, d) } else { (bi, bd) });
        Ok((CellIndex::new(best / self.cols, best % self.cols), best_sq.sqrt()))
    }

    /// One online update toward `x`. The BMU is found on the current
    /// weights and every cell moves by `alpha * h(bmu, cell, radius)`.
    /// Returns the BMU.
    pub fn train_step(&mut self, x: &[f64], alpha: f64, radius: f64) -> Result<CellIndex> {
        let (bmu, _) = self.find_bmu(x)?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig(format!("step rate {alpha} outside [0, 1]")));
        }
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::InvalidConfig(format!("radius {radius} must be positive")));
        }
        if alpha == 0.0 {
            return Ok(bmu);
        }
        let (cols, dim) = (self.cols, self.dim);
        for (i, w) in self.weights.chunks_exact_mut(dim).enumerate() {
            let cell = CellIndex::new(i / cols, i % cols);
            let step = alpha * neighborhood_weight(bmu, cell, radius);
            if step == 0.0 {
                continue;
            }
            if step == 1.0 {
                w.copy_from_slice(x);
                continue;
            }
            for (wj, &xj) in w.iter_mut().zip(x) {
                *wj += step * (xj - *wj);
            }
        }
        Ok(bmu)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Gaussian lattice kernel `exp(-d² / (2 r²))` with `d` the Euclidean
/// distance between the two cells' (row, col) coordinates.
pub fn neighborhood_weight(bmu: CellIndex, cell: CellIndex, radius: f64) -> f64 {
    let dr = bmu.row as f64 - cell.row as f64;
    let dc = bmu.col as f64 - cell.col as f64;
    (-(dr * dr + dc * dc) / (2.0 * radius * radius)).exp()
}

/// Seeded initialization. `RandomBinary` takes the top bit of each draw,
/// `RandomUniform` a 53-bit float in `[0, 1)`. Components are filled
/// row-major, cell by cell, from stream [`Stream::Init`].
pub fn init_grid(config: &SomConfig, dim: usize) -> Result<SomGrid> {
    config.validate()?;
    if dim == 0 {
        return Err(Error::InvalidConfig("dimension must be ≥ 1".into()));
    }
    let mut rng = SeededRng::new(config.seed, Stream::Init);
    let n = config.rows * config.cols * dim;
    let weights = match config.init_mode {
        InitMode::RandomBinary => (0..n).map(|_| if rng.bit() { 1.0 } else { 0.0 }).collect(),
        InitMode::RandomUniform => (0..n).map(|_| rng.unit_f64()).collect(),
    };
    SomGrid::from_weights(config.rows, config.cols, dim, weights)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_qe: f64,
    pub final_qe: f64,
    pub iterations_run: usize,
    pub seed: u64,
}

fn basket_samples(baskets: &[Basket]) -> Result<Vec<Vec<f64>>> {
    let first = baskets
        .first()
        .ok_or_else(|| Error::EmptyInput("no baskets".into()))?;
    let dim = first.dim();
    baskets
        .iter()
        .map(|b| {
            if b.dim() == dim {
                Ok(b.to_f64())
            } else {
                Err(Error::DimensionMismatch { expected: dim, found: b.dim() })
            }
        })
        .collect()
}

fn mean_bmu_distance(grid: &SomGrid, samples: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for x in samples {
        total += grid.find_bmu(x)?.1;
    }
    Ok(total / samples.len() as f64)
}

/// Mean distance from each basket to its BMU.
pub fn quantization_error(grid: &SomGrid, baskets: &[Basket]) -> Result<f64> {
    let samples = basket_samples(baskets)?;
    mean_bmu_distance(grid, &samples)
}

/// Trains a fresh map. Samples are drawn from stream [`Stream::Sampling`].
pub fn train(baskets: &[Basket], config: &SomConfig) -> Result<(SomGrid, TrainReport)> {
    config.validate()?;
    let samples = basket_samples(baskets)?;
    let mut grid = init_grid(config, samples[0].len())?;
    let initial_qe = mean_bmu_distance(&grid, &samples)?;

    let mut rng = SeededRng::new(config.seed, Stream::Sampling);
    for t in 0..config.iterations {
        let x = &samples[rng.index(samples.len())];
        grid.train_step(x, config.rate_at(t), config.radius_at(t))?;
    }

    let final_qe = mean_bmu_distance(&grid, &samples)?;
    let report = TrainReport {
        initial_qe,
        final_qe,
        iterations_run: config.iterations,
        seed: config.seed,
    };
    Ok((grid, report))
}

const MAP_MAGIC: &str = "# basketmap trained map v1";

/// Writes the trained-map text format: a `#`-prefixed `key = value` header
/// followed by one `row,col,w_0,...` line per cell. Reals use Rust's
/// shortest round-trip formatting, so reading back is bit-exact.
pub fn write_map<W: Write>(grid: &SomGrid, config: &SomConfig, mut sink: W) -> Result<()> {
    writeln!(sink, "{MAP_MAGIC}")?;
    writeln!(sink, "# rows = {}", grid.rows)?;
    writeln!(sink, "# cols = {}", grid.cols)?;
    writeln!(sink, "# dim = {}", grid.dim)?;
    writeln!(sink, "# seed = {}", config.seed)?;
    writeln!(sink, "# learning_rate = {}", config.learning_rate)?;
    writeln!(sink, "# iterations = {}", config.iterations)?;
    writeln!(sink, "# init_mode = {}", config.init_mode)?;
    writeln!(sink, "# rate_schedule = {}", config.rate_schedule)?;
    writeln!(sink, "# initial_radius = {}", config.initial_radius())?;
    writeln!(sink, "# final_radius = {}", config.final_radius)?;
    let mut line = String::new();
    for cell in grid.cells() {
        line.clear();
        line.push_str(&format!("{},{}", cell.row, cell.col));
        for w in grid.weight(cell) {
            line.push(',');
            line.push_str(&w.to_string());
        }
        writeln!(sink, "{line}")?;
    }
    sink.flush()?;
    Ok(())
}

/// Reads a map written by [`write_map`], returning the grid and the
/// configuration echoed in its header.
pub fn read_map<R: Read>(source: R) -> Result<(SomGrid, SomConfig)> {
    let reader = BufReader::new(source);
    let mut header = std::collections::HashMap::new();
    let mut weights = Vec::new();
    let mut expected_cell = 0usize;
    let mut dims: Option<(usize, usize, usize)> = None;

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let bad = |reason: String| Error::Format { line: lineno, reason };
        if lineno == 1 {
            if line.trim() != MAP_MAGIC {
                return Err(bad(format!("expected `{MAP_MAGIC}`")));
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (key, value) = rest
                .split_once('=')
                .ok_or_else(|| bad("header line must be `# key = value`".into()))?;
            header.insert(key.trim().to_string(), value.trim().to_string());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (rows, cols, dim) = match dims {
            Some(d) => d,
            None => {
                let get = |k: &str| -> Result<usize> {
                    header
                        .get(k)
                        .ok_or_else(|| bad(format!("missing header `{k}`")))?
                        .parse()
                        .map_err(|_| bad(format!("bad header `{k}`")))
                };
                let d = (get("rows")?, get("cols")?, get("dim")?);
                dims = Some(d);
                d
            }
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(bad(format!("expected {} fields, found {}", dim + 2, fields.len())));
        }
        let row: usize = fields[0].parse().map_err(|_| bad("bad row index".into()))?;
        let col: usize = fields[1].parse().map_err(|_| bad("bad col index".into()))?;
        if expected_cell >= rows * cols || (row, col) != (expected_cell / cols, expected_cell % cols) {
            return Err(bad(format!("unexpected cell ({row}, {col})")));
        }
        for f in &fields[2..] {
            weights.push(f.parse::<f64>().map_err(|_| bad(format!("bad weight `{f}`")))?);
        }
        expected_cell += 1;
    }

    let (rows, cols, dim) = dims.ok_or_else(|| Error::EmptyInput("map file has no cells".into()))?;
    let grid = SomGrid::from_weights(rows, cols, dim, weights)?;

    let parse = |k: &str| -> Result<String> {
        header
            .get(k)
            .cloned()
            .ok_or_else(|| Error::Format { line: 0, reason: format!("missing header `{k}`") })
    };
    let num = |k: &str| -> Result<f64> {
        parse(k)?
            .parse()
            .map_err(|_| Error::Format { line: 0, reason: format!("bad header `{k}`") })
    };
    let config = SomConfig {
        rows,
        cols,
        learning_rate: num("learning_rate")?,
        iterations: num("iterations")? as usize,
        seed: parse("seed")?
            .parse()
            .map_err(|_| Error::Format { line: 0, reason: "bad header `seed`".into() })?,
        init_mode: parse("init_mode")?.parse()?,
        rate_schedule: parse("rate_schedule")?.parse()?,
        initial_radius: Some(num("initial_radius")?),
        final_radius: num("final_radius")?,
    };
    Ok((grid, config))
}
