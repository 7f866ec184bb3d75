//! Exact rational linear programming.
//!
//! Dense two-phase simplex with Bland's rule. A light presolve turns
//! single-variable rows into bounds, substitutes fixed variables and splits
//! the problem into independent blocks before pivoting.

use std::fmt;

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub lower: Rational,
    pub upper: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
}

impl Constraint {
    pub fn lhs(&self, x: &[Rational]) -> Rational {
        self.coeffs.iter().map(|(j, c)| c * &x[*j]).sum()
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        let l = self.lhs(x);
        match self.sense {
            Sense::Le => l <= self.rhs,
            Sense::Ge => l >= self.rhs,
            Sense::Eq => l == self.rhs,
        }
    }
}

/// `min objective · x` subject to the constraints and variable bounds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearProgram {
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, Rational)>,
}

impl LinearProgram {
    pub fn add_var(&mut self, name: impl Into<String>, lower: Rational, upper: Option<Rational>) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.vars.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, Rational)>,
        sense: Sense,
        rhs: Rational,
    ) {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Whether `x` satisfies every bound and constraint exactly.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.vars.len()
            && self
                .vars
                .iter()
                .zip(x)
                .all(|(v, xi)| *xi >= v.lower && v.upper.as_ref().is_none_or(|u| xi <= u))
            && self.constraints.iter().all(|c| c.holds(x))
    }

    pub fn objective_at(&self, x: &[Rational]) -> Rational {
        self.objective.iter().map(|(j, c)| c * &x[*j]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<Rational>,
    pub objective: Rational,
    /// Value of the dual objective of each solved block, summed; equals
    /// `objective` at optimality.
    pub dual_objective: Rational,
    pub pivots: usize,
}

impl LpResult {
    fn failed(status: LpStatus, n: usize, pivots: usize) -> Self {
        LpResult {
            status,
            x: vec![Rational::zero(); n],
            objective: Rational::zero(),
            dual_objective: Rational::zero(),
            pivots,
        }
    }
}

/// Solves exactly. Never uses a tolerance.
pub fn solve(lp: &LinearProgram) -> LpResult {
    let n = lp.vars.len();
    let mut lower: Vec<Rational> = lp.vars.iter().map(|v| v.lower.clone()).collect();
    let mut upper: Vec<Option<Rational>> = lp.vars.iter().map(|v| v.upper.clone()).collect();
    // Singleton rows become bounds.
    let mut rows: Vec<Constraint> = Vec::new();
    for c in &lp.constraints {
        let nz: Vec<&(usize, Rational)> = c.coeffs.iter().filter(|(_, a)| !a.is_zero()).collect();
        match nz.len() {
            0 => {
                let ok = match c.sense {
                    Sense::Le => Rational::zero() <= c.rhs,
                    Sense::Ge => Rational::zero() >= c.rhs,
                    Sense::Eq => c.rhs.is_zero(),
                };
                if !ok {
                    return LpResult::failed(LpStatus::Infeasible, n, 0);
                }
            }
            1 => {
                let (j, a) = nz[0];
                let v = &c.rhs / a;
                let sense = if a.is_negative() {
                    match c.sense {
                        Sense::Le => Sense::Ge,
                        Sense::Ge => Sense::Le,
                        Sense::Eq => Sense::Eq,
                    }
                } else {
                    c.sense
                };
                if matches!(sense, Sense::Ge | Sense::Eq) && v > lower[*j] {
                    lower[*j] = v.clone();
                }
                if matches!(sense, Sense::Le | Sense::Eq) && upper[*j].as_ref().is_none_or(|u| v < *u) {
                    upper[*j] = Some(v);
                }
            }
            _ => rows.push(Constraint {
                name: c.name.clone(),
                coeffs: nz.into_iter().cloned().collect(),
                sense: c.sense,
                rhs: c.rhs.clone(),
            }),
        }
    }
    for j in 0..n {
        if upper[j].as_ref().is_some_and(|u| *u < lower[j]) {
            return LpResult::failed(LpStatus::Infeasible, n, 0);
        }
    }
    let fixed: Vec<bool> = (0..n).map(|j| upper[j].as_ref() == Some(&lower[j])).collect();
    let mut cost = vec![Rational::zero(); n];
    for (j, c) in &lp.objective {
        cost[*j] += c;
    }
    // Blocks of variables linked through rows.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for row in &rows {
        let free: Vec<usize> = row.coeffs.iter().map(|(j, _)| *j).filter(|&j| !fixed[j]).collect();
        for w in free.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a] = b;
        }
    }
    let mut x: Vec<Rational> = lower.clone();
    let mut total = Rational::zero();
    let mut dual_total = Rational::zero();
    let mut pivots = 0usize;
    let mut blocks: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for j in 0..n {
        if !fixed[j] {
            let root = find(&mut parent, j);
            blocks.entry(root).or_default().push(j);
        }
    }
    let mut row_block: Vec<Option<usize>> = Vec::with_capacity(rows.len());
    for row in &rows {
        row_block.push(
            row.coeffs
                .iter()
                .find(|(j, _)| !fixed[*j])
                .map(|(j, _)| find(&mut parent, *j)),
        );
    }
    // Rows over fixed variables only must hold as they are.
    for (row, b) in rows.iter().zip(&row_block) {
        if b.is_none() && !row.holds(&x) {
            return LpResult::failed(LpStatus::Infeasible, n, 0);
        }
    }
    for (root, cols) in &blocks {
        let block_rows: Vec<&Constraint> = rows
            .iter()
            .zip(&row_block)
            .filter(|(_, b)| **b == Some(*root))
            .map(|(r, _)| r)
            .collect();
        let res = solve_block(cols, &block_rows, &lower, &upper, &cost, &x);
        pivots += res.pivots;
        match res.status {
            LpStatus::Optimal => {
                for (k, &j) in cols.iter().enumerate() {
                    x[j] = res.values[k].clone();
                }
                dual_total += res.dual;
            }
            s => return LpResult::failed(s, n, pivots),
        }
    }
    for j in 0..n {
        total += &cost[j] * &x[j];
    }
    // Constant contributions from variables at their lower bounds count on
    // both sides.
    let const_part: Rational = (0..n).filter(|&j| fixed[j]).map(|j| &cost[j] * &x[j]).sum();
    dual_total += const_part;
    LpResult {
        status: LpStatus::Optimal,
        x,
        objective: total,
        dual_objective: dual_total,
        pivots,
    }
}

struct BlockResult {
    status: LpStatus,
    values: Vec<Rational>,
    dual: Rational,
    pivots: usize,
}

/// Simplex on one block. Variables are shifted so their lower bound is zero.
fn solve_block(
    cols: &[usize],
    rows: &[&Constraint],
    lower: &[Rational],
    upper: &[Option<Rational>],
    cost: &[Rational],
    fixed_x: &[Rational],
) -> BlockResult {
    let local: std::collections::HashMap<usize, usize> = cols.iter().enumerate().map(|(k, &j)| (j, k)).collect();
    let nv = cols.len();
    // Standard-form rows: coefficients over shifted vars, sense, rhs.
    let mut std_rows: Vec<(Vec<Rational>, Sense, Rational)> = Vec::new();
    for r in rows {
        let mut a = vec![Rational::zero(); nv];
        let mut rhs = r.rhs.clone();
        for (j, c) in &r.coeffs {
            match local.get(j) {
                Some(&k) => {
                    a[k] += c;
                    rhs -= c * &lower[*j];
                }
                None => rhs -= c * &fixed_x[*j],
            }
        }
        std_rows.push((a, r.sense, rhs));
    }
    for (k, &j) in cols.iter().enumerate() {
        if let Some(u) = &upper[j] {
            let mut a = vec![Rational::zero(); nv];
            a[k] = Rational::one();
            std_rows.push((a, Sense::Le, u - &lower[j]));
        }
    }
    let c: Vec<Rational> = cols.iter().map(|&j| cost[j].clone()).collect();
    let offset: Rational = cols.iter().map(|&j| &cost[j] * &lower[j]).sum();
    let mut t = Tableau::new(&std_rows, &c);
    let status = t.run();
    let values = match status {
        LpStatus::Optimal => (0..nv).map(|k| t.value(k) + &lower[cols[k]]).collect(),
        _ => Vec::new(),
    };
    let dual = if status == LpStatus::Optimal {
        t.dual_objective() + offset
    } else {
        Rational::zero()
    };
    BlockResult {
        status,
        values,
        dual,
        pivots: t.pivots,
    }
}

struct Tableau {
    /// `m` rows of `ncols` coefficients followed by the right-hand side.
    a: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    ncols: usize,
    artificial_start: usize,
    cost: Vec<Rational>,
    /// Column holding the unit vector of each row's slack or artificial.
    unit_col: Vec<usize>,
    unit_sign: Vec<Rational>,
    rhs0: Vec<Rational>,
    pivots: usize,
}

impl Tableau {
    fn new(rows: &[(Vec<Rational>, Sense, Rational)], c: &[Rational]) -> Self {
        let m = rows.len();
        let nv = c.len();
        let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
        let artificial_start = nv + n_slack;
        let ncols = artificial_start + m;
        let mut a = vec![vec![Rational::zero(); ncols + 1]; m];
        let mut basis = vec![0; m];
        let mut unit_col = vec![0; m];
        let mut unit_sign = vec![Rational::one(); m];
        let mut rhs0 = Vec::with_capacity(m);
        let mut slack = nv;
        for (i, (coef, sense, rhs)) in rows.iter().enumerate() {
            let flip = rhs.is_negative();
            let sgn = if flip { -Rational::one() } else { Rational::one() };
            for k in 0..nv {
                if !coef[k].is_zero() {
                    a[i][k] = &coef[k] * &sgn;
                }
            }
            a[i][ncols] = rhs * &sgn;
            rhs0.push(a[i][ncols].clone());
            if *sense != Sense::Eq {
                let s = if *sense == Sense::Le {
                    Rational::one()
                } else {
                    -Rational::one()
                };
                a[i][slack] = &s * &sgn;
                unit_col[i] = slack;
                unit_sign[i] = &s * &sgn;
                slack += 1;
            }
            a[i][artificial_start + i] = Rational::one();
            basis[i] = artificial_start + i;
            if *sense == Sense::Eq {
                unit_col[i] = artificial_start + i;
            }
        }
        let mut cost = vec![Rational::zero(); ncols];
        cost[..nv].clone_from_slice(c);
        Tableau {
            a,
            basis,
            ncols,
            artificial_start,
            cost,
            unit_col,
            unit_sign,
            rhs0,
            pivots: 0,
        }
    }

    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for j in 0..self.ncols {
                if !self.a[i][j].is_zero() {
                    d[j] -= &cost[b] * &self.a[i][j];
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, c: usize) {
        self.pivots += 1;
        let p = self.a[r][c].clone();
        if p != Rational::one() {
            for v in self.a[r].iter_mut() {
                if !v.is_zero() {
                    *v = &*v / &p;
                }
            }
        }
        let prow = self.a[r].clone();
        for i in 0..self.a.len() {
            if i == r || self.a[i][c].is_zero() {
                continue;
            }
            let f = self.a[i][c].clone();
            for (v, pv) in self.a[i].iter_mut().zip(prow.iter()) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule on columns `< limit`.
    fn optimize(&mut self, cost: &[Rational], limit: usize) -> LpStatus {
        loop {
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..limit).find(|&j| d[j].is_negative() && !self.basis.contains(&j)) else {
                return LpStatus::Optimal;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.a.len() {
                let aij = &self.a[i][enter];
                if aij.is_positive() {
                    let ratio = &self.a[i][self.ncols] / aij;
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                None => return LpStatus::Unbounded,
                Some((r, _)) => self.pivot(r, enter),
            }
        }
    }

    fn run(&mut self) -> LpStatus {
        let m = self.a.len();
        let mut phase1 = vec![Rational::zero(); self.ncols];
        for c in phase1.iter_mut().skip(self.artificial_start) {
            *c = Rational::one();
        }
        self.optimize(&phase1, self.ncols);
        let infeas: Rational = (0..m)
            .filter(|&i| self.basis[i] >= self.artificial_start)
            .map(|i| self.a[i][self.ncols].clone())
            .sum();
        if infeas.is_positive() {
            return LpStatus::Infeasible;
        }
        // Drive zero-valued artificials out of the basis where possible.
        for i in 0..m {
            if self.basis[i] >= self.artificial_start {
                if let Some(j) = (0..self.artificial_start).find(|&j| !self.a[i][j].is_zero()) {
                    self.pivot(i, j);
                }
            }
        }
        let cost = self.cost.clone();
        self.optimize(&cost, self.artificial_start)
    }

    fn value(&self, k: usize) -> Rational {
        self.basis
            .iter()
            .position(|&b| b == k)
            .map(|i| self.a[i][self.ncols].clone())
            .unwrap_or_else(Rational::zero)
    }

    /// `b · y` with `y = c_B B^-1`, read off the unit columns.
    fn dual_objective(&self) -> Rational {
        let d = self.reduced_costs(&self.cost);
        let mut total = Rational::zero();
        for i in 0..self.a.len() {
            // The unit column of row i is s·e_i with zero cost, so its
            // reduced cost is -s·y_i.
            let y = -(&d[self.unit_col[i]]) / &self.unit_sign[i];
            total += &y * &self.rhs0[i];
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::r;
    use proptest::prelude::*;

    #[test]
    fn trivial_bound() {
        let mut lp = LinearProgram::default();
        let o = lp.add_var("o", r(0, 1), None);
        lp.add_constraint("c", vec![(o, r(1, 1))], Sense::Ge, r(1, 1));
        lp.objective = vec![(o, r(1, 1))];
        let res = solve(&lp);
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.objective, r(1, 1));
    }

    #[test]
    fn small_two_variable() {
        // min x + 2y  s.t. x + y >= 3, x - y <= 1, x <= 5/2
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", r(0, 1), Some(r(5, 2)));
        let y = lp.add_var("y", r(0, 1), None);
        lp.add_constraint("a", vec![(x, r(1, 1)), (y, r(1, 1))], Sense::Ge, r(3, 1));
        lp.add_constraint("b", vec![(x, r(1, 1)), (y, r(-1, 1))], Sense::Le, r(1, 1));
        lp.objective = vec![(x, r(1, 1)), (y, r(2, 1))];
        let res = solve(&lp);
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.x, vec![r(2, 1), r(1, 1)]);
        assert_eq!(res.objective, r(4, 1));
        assert_eq!(res.dual_objective, res.objective);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", r(0, 1), None);
        let y = lp.add_var("y", r(0, 1), None);
        lp.add_constraint("a", vec![(x, r(1, 1)), (y, r(1, 1))], Sense::Le, r(1, 1));
        lp.add_constraint("b", vec![(x, r(1, 1)), (y, r(1, 1))], Sense::Ge, r(2, 1));
        assert_eq!(solve(&lp).status, LpStatus::Infeasible);
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", r(0, 1), None);
        let y = lp.add_var("y", r(0, 1), None);
        lp.add_constraint("a", vec![(x, r(1, 1)), (y, r(-1, 1))], Sense::Le, r(1, 1));
        lp.objective = vec![(y, r(-1, 1))];
        assert_eq!(solve(&lp).status, LpStatus::Unbounded);
    }

    #[test]
    fn equalities_and_negative_rhs() {
        // min -x  s.t. x + y = 1/3, -x + y >= -1/6
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", r(0, 1), None);
        let y = lp.add_var("y", r(0, 1), None);
        lp.add_constraint("e", vec![(x, r(1, 1)), (y, r(1, 1))], Sense::Eq, r(1, 3));
        lp.add_constraint("g", vec![(x, r(-1, 1)), (y, r(1, 1))], Sense::Ge, r(-1, 6));
        lp.objective = vec![(x, r(-1, 1))];
        let res = solve(&lp);
        assert_eq!(res.x, vec![r(1, 4), r(1, 12)]);
        assert_eq!(res.objective, r(-1, 4));
        assert_eq!(res.dual_objective, res.objective);
    }

    /// Optimum over all basic solutions of a tiny LP, by brute force.
    fn vertex_enumeration(a: &[[i64; 2]], b: &[i64], c: [i64; 2]) -> Option<Rational> {
        // Constraints a·x <= b plus x >= 0, y >= 0.
        let mut lines: Vec<([Rational; 2], Rational)> = a
            .iter()
            .zip(b)
            .map(|(row, &bi)| ([r(row[0], 1), r(row[1], 1)], r(bi, 1)))
            .collect();
        lines.push(([r(-1, 1), r(0, 1)], r(0, 1)));
        lines.push(([r(0, 1), r(-1, 1)], r(0, 1)));
        let mut best: Option<Rational> = None;
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (p, q) = (&lines[i], &lines[j]);
                let det = &p.0[0] * &q.0[1] - &p.0[1] * &q.0[0];
                if det.is_zero() {
                    continue;
                }
                let x = (&p.1 * &q.0[1] - &p.0[1] * &q.1) / &det;
                let y = (&p.0[0] * &q.1 - &p.1 * &q.0[0]) / &det;
                let feasible = lines.iter().all(|(l, rhs)| &l[0] * &x + &l[1] * &y <= *rhs);
                if feasible {
                    let v = r(c[0], 1) * &x + r(c[1], 1) * &y;
                    if best.as_ref().is_none_or(|bv| v < *bv) {
                        best = Some(v);
                    }
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(
            a in proptest::collection::vec([-3i64..4, -3i64..4], 1..4),
            b in proptest::collection::vec(0i64..6, 4),
            c in [0i64..4, 0i64..4],
        ) {
            // Non-negative costs and a bounding box keep the LP bounded.
            let mut rows: Vec<[i64; 2]> = a.clone();
            rows.push([1, 0]);
            rows.push([0, 1]);
            let mut rhs: Vec<i64> = b[..a.len()].to_vec();
            rhs.push(5);
            rhs.push(5);
            let mut lp = LinearProgram::default();
            let x = lp.add_var("x", r(0, 1), None);
            let y = lp.add_var("y", r(0, 1), None);
            for (i, row) in rows.iter().enumerate() {
                lp.add_constraint(format!("r{}", i), vec![(x, r(row[0], 1)), (y, r(row[1], 1))], Sense::Le, r(rhs[i], 1));
            }
            lp.objective = vec![(x, r(c[0], 1)), (y, r(c[1], 1))];
            let res = solve(&lp);
            let expect = vertex_enumeration(&rows, &rhs, c);
            prop_assert_eq!(res.status, LpStatus::Optimal);
            prop_assert!(lp.is_feasible(&res.x));
            prop_assert_eq!(Some(res.objective.clone()), expect);
            prop_assert_eq!(res.dual_objective, res.objective);
        }
    }
}
