//! Helpers shared by the test suites: a brute-force vertex enumeration
//! oracle for small linear programs and a generator of random models.

use feedflow_lp::{LpModel, RowSense, Sense};
use rand::Rng;

/// Result of the brute-force oracle.
#[derive(Clone, Debug, PartialEq)]
pub enum Oracle {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

const FEAS_TOL: f64 = 1e-7;

/// Hyperplane `a'x = b` a vertex may lie on.
struct Plane {
    a: Vec<f64>,
    b: f64,
}

/// Solves the square system by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    Some(x)
}

fn feasible(model: &LpModel, x: &[f64], lower: &[f64], upper: &[f64]) -> bool {
    let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = FEAS_TOL + 1e-12 * scale;
    for (j, &v) in x.iter().enumerate() {
        if v < lower[j] - tol || v > upper[j] + tol {
            return false;
        }
    }
    for c in &model.constraints {
        let act: f64 = c.coefficients.iter().map(|&(j, a)| a * x[j]).sum();
        let ok = match c.sense {
            RowSense::Le => act <= c.rhs + tol,
            RowSense::Ge => act >= c.rhs - tol,
            RowSense::Eq => (act - c.rhs).abs() <= tol,
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Best vertex of the model with every variable clipped to `[-boxed, boxed]`.
fn best_vertex(model: &LpModel, boxed: f64) -> Option<(f64, Vec<f64>)> {
    let n = model.num_vars();
    let lower: Vec<f64> = model.variables.iter().map(|v| v.lower.max(-boxed)).collect();
    let upper: Vec<f64> = model.variables.iter().map(|v| v.upper.min(boxed)).collect();
    if n == 0 {
        let x: Vec<f64> = Vec::new();
        return feasible(model, &x, &lower, &upper).then_some((model.objective_offset, x));
    }

    // Equalities are enumerated like any other plane so that dependent
    // equality rows do not hide the vertices.
    let mut planes = Vec::new();
    for c in &model.constraints {
        let mut a = vec![0.0; n];
        for &(j, v) in &c.coefficients {
            a[j] += v;
        }
        planes.push(Plane { a, b: c.rhs });
    }
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        planes.push(Plane { a: a.clone(), b: lower[j] });
        if upper[j] != lower[j] {
            planes.push(Plane { a, b: upper[j] });
        }
    }
    let need = n;
    let sign = match model.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut pick: Vec<usize> = (0..need).collect();
    if need > planes.len() {
        return None;
    }
    loop {
        let a: Vec<Vec<f64>> = pick.iter().map(|&k| planes[k].a.clone()).collect();
        let b: Vec<f64> = pick.iter().map(|&k| planes[k].b).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(model, &x, &lower, &upper) {
                let obj = model.objective_value(&x);
                if best.as_ref().is_none_or(|(o, _)| sign * obj > sign * o) {
                    best = Some((obj, x));
                }
            }
        }
        // next combination
        let mut i = need;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < planes.len() - need + i {
                pick[i] += 1;
                for k in i + 1..need {
                    pick[k] = pick[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solves a small model by enumerating every basic solution.
///
/// Unbounded directions are detected by solving twice with artificial
/// boxes of different size: a bounded problem has the same optimum in both.
/// Intended for models with at most a handful of variables and rows.
pub fn vertex_oracle(model: &LpModel) -> Oracle {
    const SMALL: f64 = 1e4;
    const LARGE: f64 = 2e4;
    match best_vertex(model, SMALL) {
        None => {
            // The artificial box may have cut off every feasible point.
            match best_vertex(model, 1e8) {
                None => Oracle::Infeasible,
                Some(_) => Oracle::Unbounded,
            }
        }
        Some((obj, x)) => {
            let (obj2, _) = best_vertex(model, LARGE).expect("larger box stays feasible");
            if (obj2 - obj).abs() > 1e-6 * (1.0 + obj.abs()) {
                Oracle::Unbounded
            } else {
                Oracle::Optimal { objective: obj, x }
            }
        }
    }
}

/// Shape of the random models produced by [`random_model`].
#[derive(Clone, Debug)]
pub struct ModelShape {
    pub max_vars: usize,
    pub max_rows: usize,
    /// Probability that a variable gets an infinite bound.
    pub open_bound_prob: f64,
    /// Probability that the right-hand sides are built around a known
    /// feasible point.
    pub feasible_prob: f64,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            max_vars: 6,
            max_rows: 8,
            open_bound_prob: 0.0,
            feasible_prob: 0.8,
        }
    }
}

/// Random model with small integer coefficients, which makes degenerate
/// vertices and ties common.
pub fn random_model<R: Rng>(rng: &mut R, shape: &ModelShape) -> LpModel {
    let n = rng.gen_range(1..=shape.max_vars);
    let m = rng.gen_range(0..=shape.max_rows);
    let sense = if rng.gen_bool(0.5) {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    let mut model = LpModel::new("random", sense);
    let mut point = Vec::with_capacity(n);
    let mut vars = Vec::with_capacity(n);
    for j in 0..n {
        let lo = rng.gen_range(-3..=2) as f64;
        let hi = lo + rng.gen_range(0..=6) as f64;
        let lower = if rng.gen_bool(shape.open_bound_prob) {
            f64::NEG_INFINITY
        } else {
            lo
        };
        let upper = if rng.gen_bool(shape.open_bound_prob) {
            f64::INFINITY
        } else {
            hi
        };
        let obj = rng.gen_range(-4..=4) as f64;
        vars.push(model.add_var(format!("x{j}"), lower, upper, obj));
        point.push(lo + (hi - lo) * rng.gen::<f64>());
    }
    let anchored = rng.gen_bool(shape.feasible_prob);
    for i in 0..m {
        let mut coefs = Vec::new();
        for &v in &vars {
            if rng.gen_bool(0.6) {
                let a = rng.gen_range(-5..=5) as f64;
                if a != 0.0 {
                    coefs.push((v, a));
                }
            }
        }
        let act: f64 = coefs.iter().map(|&(v, a)| a * point[v.0]).sum();
        let roll = rng.gen_range(0..10);
        let (row_sense, rhs) = if anchored {
            let slack = rng.gen_range(0..=3) as f64;
            match roll {
                0 | 1 => (RowSense::Eq, act),
                2..=5 => (RowSense::Le, (act + slack).round().max(act)),
                _ => (RowSense::Ge, (act - slack).round().min(act)),
            }
        } else {
            let rhs = rng.gen_range(-8..=8) as f64;
            match roll {
                0 => (RowSense::Eq, rhs),
                1..=5 => (RowSense::Le, rhs),
                _ => (RowSense::Ge, rhs),
            }
        };
        model.add_row(format!("r{i}"), coefs, row_sense, rhs);
    }
    model
}
