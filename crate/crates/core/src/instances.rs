//! Instance generators and reductions: Latin squares, cyclic-group tables and
//! seeded random proper colourings.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multigraph::ColouredMultigraph;

/// Seed for every randomised step. Same seed and parameters give the same
/// output on every platform.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// A seed derived from this one for an independent stream.
    pub fn derive(self, stream: u64) -> Seed {
        Seed(
            self.0
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9))
                .rotate_left(17),
        )
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatinError {
    #[error("square must have at least one row")]
    Empty,
    #[error("row {row} has {len} cells, expected {order}")]
    Ragged { row: usize, len: usize, order: usize },
    #[error("cell ({row}, {col}) holds symbol {symbol}, outside 0..{order}")]
    SymbolOutOfRange {
        row: usize,
        col: usize,
        symbol: usize,
        order: usize,
    },
    #[error("symbol {symbol} repeated in row {row}")]
    RowRepeat { row: usize, symbol: usize },
    #[error("symbol {symbol} repeated in column {col}")]
    ColumnRepeat { col: usize, symbol: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// An order-n array of symbols `0..n`, each once per row and column.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatinSquare {
    order: usize,
    cells: Vec<Vec<usize>>,
}

impl LatinSquare {
    pub fn new(cells: Vec<Vec<usize>>) -> Result<Self, LatinError> {
        let order = cells.len();
        if order == 0 {
            return Err(LatinError::Empty);
        }
        for (row, line) in cells.iter().enumerate() {
            if line.len() != order {
                return Err(LatinError::Ragged {
                    row,
                    len: line.len(),
                    order,
                });
            }
            let mut seen = vec![false; order];
            for (col, &symbol) in line.iter().enumerate() {
                if symbol >= order {
                    return Err(LatinError::SymbolOutOfRange {
                        row,
                        col,
                        symbol,
                        order,
                    });
                }
                if std::mem::replace(&mut seen[symbol], true) {
                    return Err(LatinError::RowRepeat { row, symbol });
                }
            }
        }
        for col in 0..order {
            let mut seen = vec![false; order];
            for line in &cells {
                let symbol = line[col];
                if std::mem::replace(&mut seen[symbol], true) {
                    return Err(LatinError::ColumnRepeat { col, symbol });
                }
            }
        }
        Ok(LatinSquare { order, cells })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, row: usize, col: usize) -> usize {
        self.cells[row][col]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// Text format: `n` on the first line, then n rows of n symbols.
    pub fn parse(text: &str) -> Result<Self, LatinError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(LatinError::Empty)?;
        let order: usize = header.parse().map_err(|_| LatinError::Parse {
            line,
            message: format!("expected the order, found {header:?}"),
        })?;
        let mut cells = Vec::with_capacity(order);
        for (line, content) in lines {
            let row = content
                .split_whitespace()
                .map(|s| {
                    s.parse::<usize>().map_err(|_| LatinError::Parse {
                        line,
                        message: format!("expected a symbol, found {s:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            cells.push(row);
        }
        if cells.len() != order {
            return Err(LatinError::Parse {
                line: 1,
                message: format!("declared order {order} but found {} rows", cells.len()),
            });
        }
        LatinSquare::new(cells)
    }
}

impl fmt::Display for LatinSquare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.order)?;
        for row in &self.cells {
            let line: Vec<String> = row.iter().map(usize::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// The addition table of the cyclic group of order `n`.
pub fn cyclic_square(n: usize) -> LatinSquare {
    assert!(n >= 1, "order must be positive");
    let cells = (0..n)
        .map(|i| (0..n).map(|j| (i + j) % n).collect())
        .collect();
    LatinSquare { order: n, cells }
}

/// Rows become vertices `0..n`, columns `n..2n`, and cell `(i, j)` the edge
/// `(i, n + j)` coloured by its symbol. Rainbow matchings of the result are
/// exactly the partial transversals of the square.
pub fn latin_to_graph(square: &LatinSquare) -> ColouredMultigraph {
    let n = square.order;
    let edges = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
    ColouredMultigraph::new(
        2 * n,
        n,
        edges.map(|(i, j)| (i, n + j, square.cells[i][j])),
    )
    .expect("a Latin square always induces a proper colouring")
}

/// Every reduced Latin square (first row and column in natural order) of the
/// given order. Each square is isotopic to one of these.
pub fn reduced_squares(order: usize) -> Vec<LatinSquare> {
    assert!(order >= 1);
    let mut cells = vec![vec![usize::MAX; order]; order];
    for (k, cell) in cells[0].iter_mut().enumerate() {
        *cell = k;
    }
    for (k, row) in cells.iter_mut().enumerate() {
        row[0] = k;
    }
    let mut out = Vec::new();
    fill_reduced(&mut cells, order, 1, 1, &mut out);
    out
}

fn fill_reduced(
    cells: &mut Vec<Vec<usize>>,
    order: usize,
    row: usize,
    col: usize,
    out: &mut Vec<LatinSquare>,
) {
    if row == order {
        out.push(LatinSquare {
            order,
            cells: cells.clone(),
        });
        return;
    }
    let (next_row, next_col) = if col + 1 == order {
        (row + 1, 1)
    } else {
        (row, col + 1)
    };
    for symbol in 0..order {
        let in_row = cells[row][..col].contains(&symbol);
        let in_col = (0..row).any(|r| cells[r][col] == symbol);
        if in_row || in_col {
            continue;
        }
        cells[row][col] = symbol;
        fill_reduced(cells, order, next_row, next_col, out);
        cells[row][col] = usize::MAX;
    }
}

/// The bundled catalogue: all reduced Latin squares of orders `1..=max_order`.
pub fn catalogue(max_order: usize) -> Vec<LatinSquare> {
    (1..=max_order).flat_map(reduced_squares).collect()
}

/// Permutes the rows, columns and symbols of `square` at random.
pub fn random_isotope(square: &LatinSquare, seed: Seed) -> LatinSquare {
    let n = square.order;
    let mut rng = seed.rng();
    let mut perm = || {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(&mut rng);
        p
    };
    let (rows, cols, symbols) = (perm(), perm(), perm());
    let cells = (0..n)
        .map(|i| (0..n).map(|j| symbols[square.cells[rows[i]][cols[j]]]).collect())
        .collect();
    LatinSquare { order: n, cells }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomParams {
    pub num_colours: usize,
    /// Exact size of every colour class.
    pub colour_count: usize,
    pub multiplicity_cap: usize,
    pub vertex_budget: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenerateError {
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("colour {colour}: no partial matching of size {target} found after {attempts} attempts")]
    Exhausted {
        colour: usize,
        target: usize,
        attempts: usize,
    },
}

const ATTEMPTS_PER_COLOUR: usize = 200;

impl RandomParams {
    pub fn check(&self) -> Result<(), GenerateError> {
        if self.multiplicity_cap == 0 {
            return Err(GenerateError::Infeasible(
                "multiplicity cap must be at least 1".into(),
            ));
        }
        if self.colour_count > self.vertex_budget / 2 {
            return Err(GenerateError::Infeasible(format!(
                "colour classes of {} edges need at least {} vertices, budget is {}",
                self.colour_count,
                2 * self.colour_count,
                self.vertex_budget
            )));
        }
        let pairs = self.vertex_budget * self.vertex_budget.saturating_sub(1) / 2;
        let wanted = self.num_colours * self.colour_count;
        if wanted > pairs.saturating_mul(self.multiplicity_cap) {
            return Err(GenerateError::Infeasible(format!(
                "{wanted} edges exceed {pairs} vertex pairs at multiplicity cap {}",
                self.multiplicity_cap
            )));
        }
        Ok(())
    }
}

/// Builds each colour class as a random partial matching of exactly
/// `colour_count` edges, skipping pairs already at the multiplicity cap and
/// retrying with a fresh shuffle when the greedy pass falls short.
///
/// The distribution is approximately uniform, not exactly.
pub fn generate_random(
    params: &RandomParams,
    seed: Seed,
) -> Result<ColouredMultigraph, GenerateError> {
    params.check()?;
    let n_vertices = params.vertex_budget;
    let mut rng = seed.rng();
    let mut pairs: Vec<(usize, usize)> = (0..n_vertices)
        .flat_map(|a| (a + 1..n_vertices).map(move |b| (a, b)))
        .collect();
    let mut multiplicity = vec![0usize; pairs.len()];
    let pair_index = |a: usize, b: usize| {
        // index of (a, b), a < b, in the lexicographic pair list
        a * n_vertices - a * (a + 1) / 2 + (b - a - 1)
    };
    let mut edges = Vec::with_capacity(params.num_colours * params.colour_count);
    let mut used = vec![false; n_vertices];
    for colour in 0..params.num_colours {
        let mut chosen = Vec::with_capacity(params.colour_count);
        let mut attempts = 0;
        while chosen.len() < params.colour_count {
            if attempts == ATTEMPTS_PER_COLOUR {
                return Err(GenerateError::Exhausted {
                    colour,
                    target: params.colour_count,
                    attempts,
                });
            }
            attempts += 1;
            chosen.clear();
            used.iter_mut().for_each(|u| *u = false);
            pairs.shuffle(&mut rng);
            for &(a, b) in &pairs {
                if chosen.len() == params.colour_count {
                    break;
                }
                if used[a] || used[b] || multiplicity[pair_index(a, b)] >= params.multiplicity_cap {
                    continue;
                }
                used[a] = true;
                used[b] = true;
                chosen.push((a, b));
            }
        }
        chosen.sort_unstable();
        for &(a, b) in &chosen {
            multiplicity[pair_index(a, b)] += 1;
            edges.push((a, b, colour));
        }
    }
    Ok(ColouredMultigraph::new(n_vertices, params.num_colours, edges)
        .expect("colour classes are matchings"))
}
