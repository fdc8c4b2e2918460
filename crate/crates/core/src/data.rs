//! Integer-coded categorical datasets and their CSV form.
//!
//! The CSV layout is a header row of variable names followed by one row per
//! sample holding codes `0..r_i`. Cardinalities come from a JSON sidecar
//! `{"cards": [...]}` when available, otherwise from the largest observed code.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    names: Vec<String>,
    cards: Vec<usize>,
    columns: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CardsSidecar {
    pub cards: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from per-variable columns. All columns must have the
    /// same length and every code must be below its cardinality.
    pub fn new(cards: Vec<usize>, columns: Vec<Vec<usize>>) -> Result<Self> {
        let names = (0..cards.len()).map(|v| format!("X{}", v + 1)).collect();
        Dataset::with_names(names, cards, columns)
    }

    pub fn with_names(names: Vec<String>, cards: Vec<usize>, columns: Vec<Vec<usize>>) -> Result<Self> {
        if cards.len() != columns.len() || names.len() != cards.len() {
            return Err(Error::InvalidData(format!(
                "{} names, {} cardinalities and {} columns",
                names.len(),
                cards.len(),
                columns.len()
            )));
        }
        let rows = columns.first().map_or(0, Vec::len);
        for (v, col) in columns.iter().enumerate() {
            if cards[v] == 0 {
                return Err(Error::InvalidData(format!("variable {v} has cardinality 0")));
            }
            if col.len() != rows {
                return Err(Error::InvalidData(format!(
                    "column {v} has {} rows, expected {rows}",
                    col.len()
                )));
            }
            if let Some(&bad) = col.iter().find(|&&x| x >= cards[v]) {
                return Err(Error::InvalidData(format!(
                    "code {bad} out of range for variable {v} with cardinality {}",
                    cards[v]
                )));
            }
        }
        Ok(Dataset { names, cards, columns })
    }

    /// Builds a dataset from sample rows.
    pub fn from_rows(cards: Vec<usize>, rows: &[Vec<usize>]) -> Result<Self> {
        let mut columns = vec![Vec::with_capacity(rows.len()); cards.len()];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cards.len() {
                return Err(Error::InvalidData(format!("row {r} has {} fields", row.len())));
            }
            for (v, &x) in row.iter().enumerate() {
                columns[v].push(x);
            }
        }
        Dataset::new(cards, columns)
    }

    pub fn n_vars(&self) -> usize {
        self.cards.len()
    }

    pub fn n_samples(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn card(&self, v: usize) -> usize {
        self.cards[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, v: usize) -> &[usize] {
        &self.columns[v]
    }

    /// Product of cardinalities of `vars`.
    pub fn joint_card(&self, vars: &[usize]) -> usize {
        vars.iter().map(|&v| self.cards[v]).product()
    }

    /// Mixed-radix index of each row's configuration over `vars`, the first
    /// variable varying fastest.
    pub fn config_indices(&self, vars: &[usize]) -> Vec<usize> {
        let mut idx = vec![0usize; self.n_samples()];
        let mut stride = 1;
        for &v in vars {
            for (slot, &x) in idx.iter_mut().zip(&self.columns[v]) {
                *slot += x * stride;
            }
            stride *= self.cards[v];
        }
        idx
    }

    /// Reorders variables so that new variable `k` is old variable `perm[k]`.
    pub fn permute_vars(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_vars() {
            return Err(Error::InvalidArgument("permutation length mismatch".into()));
        }
        Dataset::with_names(
            perm.iter().map(|&p| self.names[p].clone()).collect(),
            perm.iter().map(|&p| self.cards[p]).collect(),
            perm.iter().map(|&p| self.columns[p].clone()).collect(),
        )
    }

    /// Parses the CSV form. `cards`, when given, overrides inference.
    pub fn from_csv<R: Read>(reader: R, cards: Option<&[usize]>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if names.is_empty() {
            return Err(Error::InvalidData("header row has no columns".into()));
        }
        let mut columns = vec![Vec::new(); names.len()];
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != names.len() {
                return Err(Error::InvalidData(format!("row {} has {} fields", r + 1, record.len())));
            }
            for (v, field) in record.iter().enumerate() {
                let code: usize = field.trim().parse().map_err(|_| {
                    Error::InvalidData(format!("row {}: `{field}` is not a category code", r + 1))
                })?;
                columns[v].push(code);
            }
        }
        let cards = match cards {
            Some(c) => {
                if c.len() != names.len() {
                    return Err(Error::InvalidData(format!(
                        "sidecar lists {} cardinalities for {} columns",
                        c.len(),
                        names.len()
                    )));
                }
                c.to_vec()
            }
            None => columns
                .iter()
                .enumerate()
                .map(|(v, col)| {
                    col.iter().max().map(|&m| m + 1).ok_or_else(|| {
                        Error::InvalidData(format!("cannot infer cardinality of empty column {v}"))
                    })
                })
                .collect::<Result<_>>()?,
        };
        Dataset::with_names(names, cards, columns)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        let mut row = vec![String::new(); self.n_vars()];
        for s in 0..self.n_samples() {
            for (v, cell) in row.iter_mut().enumerate() {
                *cell = self.columns[v][s].to_string();
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn cards_json(&self) -> String {
        serde_json::to_string(&CardsSidecar {
            cards: self.cards.clone(),
        })
        .expect("sidecar serialization is infallible")
    }
}

pub fn parse_cards_json(s: &str) -> Result<Vec<usize>> {
    let sidecar: CardsSidecar = serde_json::from_str(s)?;
    Ok(sidecar.cards)
}
