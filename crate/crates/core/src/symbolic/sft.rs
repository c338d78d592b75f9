use serde::{Deserialize, Serialize};

use super::SymbolicError;

/// A one-sided subshift of finite type given by a 0/1 transition matrix.
///
/// Every row and every column must contain at least one allowed
/// transition, otherwise the shift has dead symbols.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SftRepr", into = "SftRepr")]
pub struct Sft {
    matrix: Vec<Vec<u8>>,
}

#[derive(Serialize, Deserialize)]
struct SftRepr {
    matrix: Vec<Vec<u8>>,
}

impl TryFrom<SftRepr> for Sft {
    type Error = SymbolicError;
    fn try_from(r: SftRepr) -> Result<Self, Self::Error> {
        Sft::new(r.matrix)
    }
}

impl From<Sft> for SftRepr {
    fn from(s: Sft) -> Self {
        SftRepr { matrix: s.matrix }
    }
}

impl Sft {
    pub fn new(matrix: Vec<Vec<u8>>) -> Result<Self, SymbolicError> {
        let n = matrix.len();
        if n == 0 {
            return Err(SymbolicError::DegenerateShift("empty alphabet".into()));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(SymbolicError::DegenerateShift(format!(
                    "row {i} has length {} in a {n}x{n} matrix",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|&&v| v > 1) {
                return Err(SymbolicError::DegenerateShift(format!(
                    "entry {v} in row {i} is not 0/1"
                )));
            }
            if row.iter().all(|&v| v == 0) {
                return Err(SymbolicError::DegenerateShift(format!(
                    "symbol {i} has no successor"
                )));
            }
        }
        for j in 0..n {
            if matrix.iter().all(|row| row[j] == 0) {
                return Err(SymbolicError::DegenerateShift(format!(
                    "symbol {j} has no predecessor"
                )));
            }
        }
        Ok(Self { matrix })
    }

    /// Full shift on `n` symbols.
    pub fn full(n: usize) -> Self {
        Self {
            matrix: vec![vec![1; n]; n],
        }
    }

    /// Golden-mean shift: the word `11` is forbidden.
    pub fn golden_mean() -> Self {
        Self {
            matrix: vec![vec![1, 1], vec![1, 0]],
        }
    }

    /// Single periodic orbit `0 -> 1 -> ... -> p-1 -> 0`.
    pub fn cycle(p: usize) -> Self {
        let mut m = vec![vec![0; p]; p];
        for (i, row) in m.iter_mut().enumerate() {
            row[(i + 1) % p] = 1;
        }
        Self { matrix: m }
    }

    pub fn size(&self) -> usize {
        self.matrix.len()
    }

    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.matrix[i][j] == 1
    }

    pub fn matrix(&self) -> &[Vec<u8>] {
        &self.matrix
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.matrix[i]
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1)
            .map(|(j, _)| j)
    }

    /// Entrywise inclusion of transition matrices on the same alphabet.
    pub fn is_subshift_of(&self, other: &Sft) -> bool {
        self.size() == other.size()
            && self
                .matrix
                .iter()
                .zip(&other.matrix)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x <= y))
    }

    /// Strongly connected components (Tarjan), each sorted, listed in
    /// order of their smallest symbol.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut comps = Vec::new();
        let mut counter = 0usize;
        // iterative Tarjan: (node, next successor position)
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut call: Vec<(usize, usize)> = vec![(root, 0)];
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(top) = call.last_mut() {
                let v = top.0;
                if top.1 < n {
                    let w = top.1;
                    top.1 += 1;
                    if self.matrix[v][w] == 0 {
                        continue;
                    }
                    if index[w] == usize::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(parent, _)) = call.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack");
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        comps.push(comp);
                    }
                }
            }
        }
        comps.sort_by_key(|c| c[0]);
        comps
    }

    /// Components that carry at least one cycle.
    pub fn nontrivial_components(&self) -> Vec<Vec<usize>> {
        self.strongly_connected_components()
            .into_iter()
            .filter(|c| c.len() > 1 || self.allowed(c[0], c[0]))
            .collect()
    }

    pub fn is_irreducible(&self) -> bool {
        self.strongly_connected_components().len() == 1
    }

    /// Restriction to a subset of symbols (indices renumbered in order).
    pub fn restrict(&self, symbols: &[usize]) -> Result<Sft, SymbolicError> {
        let m = symbols
            .iter()
            .map(|&i| symbols.iter().map(|&j| self.matrix[i][j]).collect())
            .collect();
        Sft::new(m)
    }
}
