//! Transaction log parsing and basket construction.
//!
//! A transaction log has one product sale per line. Lines bought by the same
//! client on the same calendar date form one basket, encoded as a 0/1 vector
//! over the product catalog.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Date format used in basket matrix files.
pub const MATRIX_DATE_FORMAT: &str = "%Y-%m-%d";

/// The nine columns of a transaction log, in canonical order.
pub const REQUIRED_COLUMNS: [&str; 9] = [
    "client_id",
    "transaction_date",
    "weekday",
    "day_of_month",
    "year",
    "category",
    "subcategory",
    "product_name",
    "price",
];

/// Dialect of a transaction log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvFormatSpec {
    pub delimiter: u8,
    /// Digit-group separator stripped from prices (`2.990` reads as 2990).
    pub thousands_separator: Option<char>,
    /// `chrono` format string for the transaction date column.
    pub date_format: String,
}

impl Default for CsvFormatSpec {
    fn default() -> Self {
        CsvFormatSpec {
            delimiter: b';',
            thousands_separator: Some('.'),
            date_format: "%d/%m/%Y".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionRow {
    pub client_id: String,
    pub transaction_date: NaiveDate,
    pub weekday: u8,
    pub day_of_month: u8,
    pub year: i32,
    pub category: String,
    pub subcategory: String,
    pub product_name: String,
    pub price: u64,
}

/// A rejected data line. `line` is 1-based and counts the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadRow {
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for BadRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedTransactions {
    pub rows: Vec<TransactionRow>,
    pub bad_rows: Vec<BadRow>,
}

/// Folds a header cell to lowercase ASCII letters and digits so that
/// `Fecha Transacción`, `fecha_transaccion` and `FECHA-TRANSACCION` match.
fn normalize_header(name: &str) -> String {
    name.trim()
        .to_lowercase()
        .chars()
        .map(|c| match c {
            'á' | 'à' | 'ä' => 'a',
            'é' | 'è' | 'ë' => 'e',
            'í' | 'ì' | 'ï' => 'i',
            'ó' | 'ò' | 'ö' => 'o',
            'ú' | 'ù' | 'ü' => 'u',
            'ñ' => 'n',
            other => other,
        })
        .filter(char::is_ascii_alphanumeric)
        .collect()
}

fn column_aliases(column: &str) -> &'static [&'static str] {
    match column {
        "client_id" => &["clientid", "client", "idcliente", "cliente"],
        "transaction_date" => &["transactiondate", "date", "fechatransaccion", "fecha"],
        "weekday" => &["weekday", "dia", "diasemana", "diadelasemana"],
        "day_of_month" => &["dayofmonth", "diames", "diadelmes", "mes"],
        "year" => &["year", "ano", "anio"],
        "category" => &["category", "categoria"],
        "subcategory" => &["subcategory", "subcategoria"],
        "product_name" => &["productname", "product", "producto", "nombreproducto"],
        "price" => &["price", "precio"],
        _ => &[],
    }
}

/// Maps each required column to its position in the header.
fn locate_columns(header: &csv::StringRecord) -> Result<[usize; 9]> {
    let normalized: Vec<String> = header.iter().map(normalize_header).collect();
    let mut positions = [0usize; 9];
    for (slot, column) in REQUIRED_COLUMNS.iter().enumerate() {
        let aliases = column_aliases(column);
        positions[slot] = normalized
            .iter()
            .position(|h| aliases.contains(&h.as_str()))
            .ok_or_else(|| Error::MalformedHeader {
                missing: (*column).to_string(),
            })?;
    }
    Ok(positions)
}

fn parse_bounded(field: &str, name: &str, lo: u8, hi: u8) -> std::result::Result<u8, String> {
    let value: u8 = field
        .parse()
        .map_err(|_| format!("{name} `{field}` is not an integer"))?;
    if value < lo || value > hi {
        return Err(format!("{name} {value} outside [{lo}, {hi}]"));
    }
    Ok(value)
}

fn parse_price(field: &str, format: &CsvFormatSpec) -> std::result::Result<u64, String> {
    let digits: String = match format.thousands_separator {
        Some(sep) => field.chars().filter(|&c| c != sep).collect(),
        None => field.to_string(),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("price `{field}` is not a non-negative integer"));
    }
    digits
        .parse()
        .map_err(|_| format!("price `{field}` is out of range"))
}

fn parse_row(
    record: &csv::StringRecord,
    columns: &[usize; 9],
    format: &CsvFormatSpec,
) -> std::result::Result<TransactionRow, String> {
    let field = |slot: usize| -> std::result::Result<&str, String> {
        record
            .get(columns[slot])
            .map(str::trim)
            .ok_or_else(|| format!("missing field `{}`", REQUIRED_COLUMNS[slot]))
    };

    let client_id = field(0)?;
    if client_id.is_empty() {
        return Err("client_id is empty".to_string());
    }
    let date_text = field(1)?;
    let transaction_date = NaiveDate::parse_from_str(date_text, &format.date_format)
        .map_err(|e| format!("transaction_date `{date_text}`: {e}"))?;
    let weekday = parse_bounded(field(2)?, "weekday", 1, 7)?;
    let day_of_month = parse_bounded(field(3)?, "day_of_month", 1, 31)?;
    let year_text = field(4)?;
    let year: i32 = year_text
        .parse()
        .map_err(|_| format!("year `{year_text}` is not an integer"))?;
    let product_name = field(7)?;
    if product_name.is_empty() {
        return Err("product_name is empty".to_string());
    }
    let price = parse_price(field(8)?, format)?;

    Ok(TransactionRow {
        client_id: client_id.to_string(),
        transaction_date,
        weekday,
        day_of_month,
        year,
        category: field(5)?.to_string(),
        subcategory: field(6)?.to_string(),
        product_name: product_name.to_string(),
        price,
    })
}

/// Parses a transaction log. Invalid data lines are collected in
/// `bad_rows` and parsing continues; only a missing or incomplete header
/// aborts.
pub fn parse_transactions<R: Read>(source: R, format: &CsvFormatSpec) -> Result<ParsedTransactions> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(source);

    let header = reader.headers()?.clone();
    if header.iter().all(|h| h.trim().is_empty()) {
        return Err(Error::EmptyInput(format!(
            "missing header row (expected columns: {})",
            REQUIRED_COLUMNS.join(", ")
        )));
    }
    let columns = locate_columns(&header)?;

    let mut parsed = ParsedTransactions::default();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line() as usize);
                if record.iter().all(|f| f.trim().is_empty()) {
                    continue;
                }
                match parse_row(&record, &columns, format) {
                    Ok(row) => parsed.rows.push(row),
                    Err(reason) => parsed.bad_rows.push(BadRow { line, reason }),
                }
            }
            Err(e) => match e.kind() {
                csv::ErrorKind::Utf8 { pos, .. } => parsed.bad_rows.push(BadRow {
                    line: pos.as_ref().map_or(0, |p| p.line() as usize),
                    reason: "invalid UTF-8".to_string(),
                }),
                _ => return Err(e.into()),
            },
        }
    }
    Ok(parsed)
}

/// Sorted, de-duplicated product names with a name → column lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductCatalog {
    products: Vec<String>,
    index: HashMap<String, usize>,
}

impl ProductCatalog {
    /// Builds a catalog from arbitrary names: trims, de-duplicates and sorts.
    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut products: Vec<String> = names
            .into_iter()
            .map(|n| n.as_ref().trim().to_string())
            .collect();
        if products.iter().any(String::is_empty) {
            return Err(Error::InvalidConfig("product names must be non-empty".into()));
        }
        products.sort();
        products.dedup();
        if products.is_empty() {
            return Err(Error::EmptyInput("catalog has no products".into()));
        }
        let index = products
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        Ok(ProductCatalog { products, index })
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn name(&self, column: usize) -> Option<&str> {
        self.products.get(column).map(String::as_str)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name.trim()).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.position(name).ok_or_else(|| Error::UnknownProduct {
            name: name.to_string(),
        })
    }
}

pub fn build_catalog(rows: &[TransactionRow]) -> Result<ProductCatalog> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("no transaction rows".into()));
    }
    ProductCatalog::from_names(rows.iter().map(|r| r.product_name.as_str()))
}

/// One purchase occasion as a presence vector over the catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basket {
    id: u64,
    client_id: String,
    date: NaiveDate,
    vector: Vec<u8>,
}

impl Basket {
    /// Fails unless every component is 0 or 1 and at least one is 1.
    pub fn new(id: u64, client_id: impl Into<String>, date: NaiveDate, vector: Vec<u8>) -> Result<Self> {
        if let Some(bad) = vector.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidBasket(format!("component {bad} is not 0 or 1")));
        }
        if !vector.contains(&1) {
            return Err(Error::InvalidBasket(format!("basket {id} contains no products")));
        }
        Ok(Basket {
            id,
            client_id: client_id.into(),
            date,
            vector,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn client_id(&self) -> &str {
        &self.client_id
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn vector(&self) -> &[u8] {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn contains(&self, column: usize) -> bool {
        self.vector.get(column) == Some(&1)
    }

    /// Columns set to 1, ascending.
    pub fn items(&self) -> impl Iterator<Item = usize> + '_ {
        self.vector
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1)
            .map(|(j, _)| j)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.vector.iter().map(|&v| f64::from(v)).collect()
    }
}

/// Groups rows into one basket per (client, date), ordered by date then
/// client, with ids assigned from 1.
pub fn group_baskets(rows: &[TransactionRow], catalog: &ProductCatalog) -> Result<Vec<Basket>> {
    let mut groups: BTreeMap<(NaiveDate, &str), Vec<u8>> = BTreeMap::new();
    for row in rows {
        let column = catalog.require(&row.product_name)?;
        let vector = groups
            .entry((row.transaction_date, row.client_id.as_str()))
            .or_insert_with(|| vec![0; catalog.len()]);
        vector[column] = 1;
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, ((date, client), vector))| Basket::new(i as u64 + 1, client, date, vector))
        .collect()
}

/// Writes `basket_id,client_id,date,<products...>` followed by one 0/1 row
/// per basket. Dates are ISO 8601, lines end in `\n`.
pub fn write_basket_matrix<W: Write>(baskets: &[Basket], catalog: &ProductCatalog, sink: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    let mut header = vec!["basket_id", "client_id", "date"];
    header.extend(catalog.products().iter().map(String::as_str));
    writer.write_record(&header)?;

    for basket in baskets {
        if basket.dim() != catalog.len() {
            return Err(Error::DimensionMismatch {
                expected: catalog.len(),
                found: basket.dim(),
            });
        }
        let mut record = vec![
            basket.id().to_string(),
            basket.client_id().to_string(),
            basket.date().format(MATRIX_DATE_FORMAT).to_string(),
        ];
        record.extend(basket.vector().iter().map(|v| v.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_basket_matrix`].
pub fn read_basket_matrix<R: Read>(source: R) -> Result<(ProductCatalog, Vec<Basket>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let header = reader.headers()?.clone();
    if header.len() < 4 || &header[0] != "basket_id" || &header[1] != "client_id" || &header[2] != "date" {
        return Err(Error::Format {
            line: 1,
            reason: "expected header `basket_id,client_id,date,<products...>`".into(),
        });
    }
    let names: Vec<&str> = header.iter().skip(3).collect();
    let catalog = ProductCatalog::from_names(&names)?;
    if catalog.products().iter().map(String::as_str).ne(names.iter().copied()) {
        return Err(Error::Format {
            line: 1,
            reason: "product columns must be unique and sorted".into(),
        });
    }

    let mut baskets = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |reason: String| Error::Format { line, reason };
        let id: u64 = record[0].parse().map_err(|_| bad(format!("bad basket_id `{}`", &record[0])))?;
        let date = NaiveDate::parse_from_str(&record[2], MATRIX_DATE_FORMAT)
            .map_err(|e| bad(format!("bad date `{}`: {e}", &record[2])))?;
        let vector = record
            .iter()
            .skip(3)
            .map(|v| match v {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(bad(format!("component `{other}` is not 0 or 1"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        let basket = Basket::new(id, &record[1], date, vector).map_err(|e| bad(e.to_string()))?;
        baskets.push(basket);
    }
    Ok((catalog, baskets))
}
