//! Sparse LU factorization of simplex basis matrices.
//!
//! Right-looking elimination with Markowitz pivot selection and threshold
//! partial pivoting. Candidate pivots are found through doubly linked lists
//! of rows and columns keyed by their active entry counts, so singletons are
//! eliminated first without any arithmetic.

const NIL: usize = usize::MAX;

/// Relative threshold: a pivot must be at least this fraction of the largest
/// entry in its column.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Entries below this magnitude are never accepted as pivots.
const ABS_PIVOT_TOL: f64 = 1e-11;
/// Number of candidate rows/columns examined before settling on the best
/// Markowitz cost seen so far.
const SEARCH_LIMIT: usize = 4;

/// The basis could not be factorized: `positions` are the dependent basis
/// columns, `rows` the rows left without a pivot. Both have equal length.
#[derive(Debug)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

/// Doubly linked lists bucketing items by count.
struct CountLists {
    head: Vec<usize>,
    next: Vec<usize>,
    prev: Vec<usize>,
    count: Vec<usize>,
}

impl CountLists {
    fn new(items: usize, max_count: usize) -> Self {
        CountLists {
            head: vec![NIL; max_count + 2],
            next: vec![NIL; items],
            prev: vec![NIL; items],
            count: vec![0; items],
        }
    }

    fn insert(&mut self, item: usize, count: usize) {
        self.count[item] = count;
        let h = self.head[count];
        self.next[item] = h;
        self.prev[item] = NIL;
        if h != NIL {
            self.prev[h] = item;
        }
        self.head[count] = item;
    }

    fn remove(&mut self, item: usize) {
        let (p, n) = (self.prev[item], self.next[item]);
        if p != NIL {
            self.next[p] = n;
        } else {
            self.head[self.count[item]] = n;
        }
        if n != NIL {
            self.prev[n] = p;
        }
        self.prev[item] = NIL;
        self.next[item] = NIL;
    }

    fn update(&mut self, item: usize, count: usize) {
        if self.count[item] != count {
            self.remove(item);
            self.insert(item, count);
        }
    }
}

/// `L` and `U` factors of a square basis matrix `B`.
///
/// Step `k` pivots on row `pivot_row[k]` and basis position `pivot_col[k]`.
/// The `L` part of step `k` subtracts `l_i` times the pivot row from row `i`;
/// the `U` part holds the pivot row's entries in columns pivoted later.
#[derive(Clone, Debug, Default)]
pub(crate) struct LuFactors {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_col: Vec<usize>,
    diag: Vec<f64>,
    l_start: Vec<usize>,
    l_index: Vec<usize>,
    l_value: Vec<f64>,
    u_start: Vec<usize>,
    u_index: Vec<usize>,
    u_value: Vec<f64>,
    // L by rows (entries point at pivot rows) and U by basis positions
    // (entries point at pivot rows), so both solves can skip zeros.
    lr_start: Vec<usize>,
    lr_index: Vec<usize>,
    lr_value: Vec<f64>,
    uc_start: Vec<usize>,
    uc_index: Vec<usize>,
    uc_value: Vec<f64>,
}

impl LuFactors {
    /// Factorizes the `m x m` matrix whose columns are given as sparse
    /// `(row, value)` lists.
    pub(crate) fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);

        let mut col_rows: Vec<Vec<usize>> = Vec::with_capacity(m);
        let mut col_vals: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (j, col) in columns.iter().enumerate() {
            let mut rows = Vec::with_capacity(col.len());
            let mut vals = Vec::with_capacity(col.len());
            for &(i, v) in col {
                if v != 0.0 {
                    rows.push(i);
                    vals.push(v);
                    row_cols[i].push(j);
                }
            }
            col_rows.push(rows);
            col_vals.push(vals);
        }

        let mut col_lists = CountLists::new(m, m);
        let mut row_lists = CountLists::new(m, m);
        for j in 0..m {
            col_lists.insert(j, col_rows[j].len());
        }
        for i in 0..m {
            row_lists.insert(i, row_cols[i].len());
        }
        let mut col_done = vec![false; m];
        let mut row_done = vec![false; m];
        let mut mark = vec![NIL; m];

        let mut lu = LuFactors {
            m,
            pivot_row: Vec::with_capacity(m),
            pivot_col: Vec::with_capacity(m),
            diag: Vec::with_capacity(m),
            l_start: vec![0],
            l_index: Vec::new(),
            l_value: Vec::new(),
            u_start: vec![0],
            u_index: Vec::new(),
            u_value: Vec::new(),
            lr_start: Vec::new(),
            lr_index: Vec::new(),
            lr_value: Vec::new(),
            uc_start: Vec::new(),
            uc_index: Vec::new(),
            uc_value: Vec::new(),
        };
        let mut l_tmp: Vec<(usize, f64)> = Vec::new();
        let mut u_tmp: Vec<(usize, f64)> = Vec::new();

        for _ in 0..m {
            let Some((r, c)) = find_pivot(m, &col_rows, &col_vals, &row_cols, &col_lists, &row_lists)
            else {
                break;
            };
            let c_pos = col_rows[c].iter().position(|&i| i == r).unwrap();
            let pivot = col_vals[c][c_pos];

            // Column c leaves the active matrix.
            for &i in &col_rows[c] {
                let rc = &mut row_cols[i];
                let p = rc.iter().position(|&j| j == c).unwrap();
                rc.swap_remove(p);
            }
            l_tmp.clear();
            for (&i, &v) in col_rows[c].iter().zip(&col_vals[c]) {
                if i != r {
                    l_tmp.push((i, v / pivot));
                }
            }
            col_rows[c].clear();
            col_vals[c].clear();

            // Row r leaves the active matrix; its remaining entries form U.
            u_tmp.clear();
            for &j in &row_cols[r] {
                let p = col_rows[j].iter().position(|&i| i == r).unwrap();
                col_rows[j].swap_remove(p);
                let v = col_vals[j].swap_remove(p);
                u_tmp.push((j, v));
            }
            row_cols[r].clear();

            if !l_tmp.is_empty() {
                for &(j, urj) in &u_tmp {
                    for (p, &i) in col_rows[j].iter().enumerate() {
                        mark[i] = p;
                    }
                    for &(i, li) in &l_tmp {
                        let delta = li * urj;
                        if mark[i] != NIL {
                            col_vals[j][mark[i]] -= delta;
                        } else {
                            col_rows[j].push(i);
                            col_vals[j].push(-delta);
                            row_cols[i].push(j);
                        }
                    }
                    for &i in &col_rows[j] {
                        mark[i] = NIL;
                    }
                }
            }

            col_done[c] = true;
            row_done[r] = true;
            col_lists.remove(c);
            row_lists.remove(r);
            for &(j, _) in &u_tmp {
                col_lists.update(j, col_rows[j].len());
            }
            for &(i, _) in &l_tmp {
                row_lists.update(i, row_cols[i].len());
            }

            lu.pivot_row.push(r);
            lu.pivot_col.push(c);
            lu.diag.push(pivot);
            for &(i, l) in &l_tmp {
                lu.l_index.push(i);
                lu.l_value.push(l);
            }
            lu.l_start.push(lu.l_index.len());
            for &(j, u) in &u_tmp {
                lu.u_index.push(j);
                lu.u_value.push(u);
            }
            lu.u_start.push(lu.u_index.len());
        }

        if lu.pivot_row.len() < m {
            let positions: Vec<usize> = (0..m).filter(|&j| !col_done[j]).collect();
            let rows: Vec<usize> = (0..m).filter(|&i| !row_done[i]).collect();
            return Err(Singular { positions, rows });
        }
        lu.transpose();
        Ok(lu)
    }

    fn transpose(&mut self) {
        let m = self.m;
        let (start, index, value) = transpose_by(
            m,
            &self.l_start,
            &self.l_index,
            &self.l_value,
            &self.pivot_row,
        );
        self.lr_start = start;
        self.lr_index = index;
        self.lr_value = value;
        let (start, index, value) = transpose_by(
            m,
            &self.u_start,
            &self.u_index,
            &self.u_value,
            &self.pivot_row,
        );
        self.uc_start = start;
        self.uc_index = index;
        self.uc_value = value;
    }

    pub(crate) fn dim(&self) -> usize {
        self.m
    }

    pub(crate) fn nnz(&self) -> usize {
        self.m + self.l_index.len() + self.u_index.len()
    }

    /// Solves `B x = b`. `rhs` is indexed by row and is destroyed; the
    /// solution is written to `out`, indexed by basis position.
    pub(crate) fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        for k in 0..self.m {
            let v = rhs[self.pivot_row[k]];
            if v != 0.0 {
                for p in self.l_start[k]..self.l_start[k + 1] {
                    rhs[self.l_index[p]] -= self.l_value[p] * v;
                }
            }
        }
        for k in (0..self.m).rev() {
            let c = self.pivot_col[k];
            let v = rhs[self.pivot_row[k]];
            if v == 0.0 {
                out[c] = 0.0;
                continue;
            }
            let v = v / self.diag[k];
            out[c] = v;
            for p in self.uc_start[c]..self.uc_start[c + 1] {
                rhs[self.uc_index[p]] -= self.uc_value[p] * v;
            }
        }
    }

    /// Solves `B' y = c`. `rhs` is indexed by basis position and is
    /// destroyed; the solution is written to `out`, indexed by row.
    pub(crate) fn btran(&self, rhs: &mut [f64], out: &mut [f64]) {
        for k in 0..self.m {
            let w = rhs[self.pivot_col[k]] / self.diag[k];
            out[self.pivot_row[k]] = w;
            if w != 0.0 {
                for p in self.u_start[k]..self.u_start[k + 1] {
                    rhs[self.u_index[p]] -= self.u_value[p] * w;
                }
            }
        }
        for k in (0..self.m).rev() {
            let r = self.pivot_row[k];
            let w = out[r];
            if w != 0.0 {
                for p in self.lr_start[r]..self.lr_start[r + 1] {
                    out[self.lr_index[p]] -= self.lr_value[p] * w;
                }
            }
        }
    }
}

/// Transposes a factor stored by pivot step: entry `(key, v)` of step `k`
/// becomes entry `(pivot_row[k], v)` of `key`.
fn transpose_by(
    m: usize,
    start: &[usize],
    index: &[usize],
    value: &[f64],
    pivot_row: &[usize],
) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let mut t_start = vec![0usize; m + 1];
    for &key in index {
        t_start[key + 1] += 1;
    }
    for i in 0..m {
        t_start[i + 1] += t_start[i];
    }
    let mut fill = t_start.clone();
    let mut t_index = vec![0usize; index.len()];
    let mut t_value = vec![0.0; index.len()];
    for k in 0..m {
        for p in start[k]..start[k + 1] {
            let q = fill[index[p]];
            t_index[q] = pivot_row[k];
            t_value[q] = value[p];
            fill[index[p]] += 1;
        }
    }
    (t_start, t_index, t_value)
}

struct Candidate {
    row: usize,
    col: usize,
    cost: usize,
    magnitude: f64,
}

impl Candidate {
    fn better_than(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => self.cost < o.cost || (self.cost == o.cost && self.magnitude > o.magnitude),
        }
    }
}

fn col_max(vals: &[f64]) -> f64 {
    vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn find_pivot(
    m: usize,
    col_rows: &[Vec<usize>],
    col_vals: &[Vec<f64>],
    row_cols: &[Vec<usize>],
    col_lists: &CountLists,
    row_lists: &CountLists,
) -> Option<(usize, usize)> {
    let mut best: Option<Candidate> = None;
    let mut examined = 0usize;

    for count in 1..=m {
        let mut c = col_lists.head[count];
        while c != NIL {
            let cmax = col_max(&col_vals[c]);
            if cmax > ABS_PIVOT_TOL {
                for (&i, &v) in col_rows[c].iter().zip(&col_vals[c]) {
                    let a = v.abs();
                    if a >= PIVOT_THRESHOLD * cmax && a > ABS_PIVOT_TOL {
                        let cand = Candidate {
                            row: i,
                            col: c,
                            cost: (row_cols[i].len() - 1) * (count - 1),
                            magnitude: a,
                        };
                        if cand.better_than(&best) {
                            best = Some(cand);
                        }
                    }
                }
                examined += 1;
                if let Some(b) = &best {
                    if count == 1 || examined >= SEARCH_LIMIT {
                        return Some((b.row, b.col));
                    }
                }
            }
            c = col_lists.next[c];
        }

        let mut r = row_lists.head[count];
        while r != NIL {
            let mut any = false;
            for &j in &row_cols[r] {
                let p = col_rows[j].iter().position(|&i| i == r).unwrap();
                let a = col_vals[j][p].abs();
                let cmax = col_max(&col_vals[j]);
                if a >= PIVOT_THRESHOLD * cmax && a > ABS_PIVOT_TOL {
                    any = true;
                    let cand = Candidate {
                        row: r,
                        col: j,
                        cost: (count - 1) * (col_rows[j].len() - 1),
                        magnitude: a,
                    };
                    if cand.better_than(&best) {
                        best = Some(cand);
                    }
                }
            }
            if any {
                examined += 1;
            }
            if let Some(b) = &best {
                if (count == 1 && any) || examined >= SEARCH_LIMIT {
                    return Some((b.row, b.col));
                }
            }
            r = row_lists.next[r];
        }

        if let Some(b) = &best {
            if b.cost <= count * count {
                return Some((b.row, b.col));
            }
        }
    }
    best.map(|b| (b.row, b.col))
}
