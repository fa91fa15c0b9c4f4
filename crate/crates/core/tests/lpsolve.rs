use crowdship_core::clock::Unlimited;
use crowdship_core::lpsolve::{
    solve_lp, solve_milp, solve_milp_with, Disjunction, LinearProgram, LpStatus, MilpOptions, MilpStatus, Simplex,
};
use proptest::prelude::*;

/// `a·y ≤ b` for every row, `0 ≤ y ≤ u`.
fn constraints(lp: &LinearProgram) -> Vec<(Vec<f64>, f64)> {
    let n = lp.num_vars();
    let mut out = Vec::new();
    for (row, &b) in lp.rows.iter().zip(&lp.row_bounds) {
        let mut a = vec![0.0; n];
        for &(j, v) in row {
            a[j] += v;
        }
        out.push((a, b));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        out.push((e.clone(), 0.0));
        e[j] = 1.0;
        out.push((e, lp.upper_bounds[j]));
    }
    out
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &k| a[i][c].abs().total_cmp(&a[k][c].abs()))?;
        if a[p][c].abs() < 1e-9 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Best objective over all basic feasible points; `None` when infeasible.
fn vertex_optimum(lp: &LinearProgram) -> Option<f64> {
    let cons = constraints(lp);
    let n = lp.num_vars();
    let mut best: Option<f64> = None;
    for pick in subsets(cons.len(), n) {
        let a = pick.iter().map(|&i| cons[i].0.clone()).collect();
        let b = pick.iter().map(|&i| cons[i].1).collect();
        let Some(y) = solve_square(a, b) else { continue };
        let feasible = cons.iter().all(|(a, b)| a.iter().zip(&y).map(|(x, v)| x * v).sum::<f64>() <= b + 1e-7);
        if feasible {
            let obj: f64 = lp.objective.iter().zip(&y).map(|(c, v)| c * v).sum();
            best = Some(best.map_or(obj, |o: f64| o.max(obj)));
        }
    }
    best
}

fn bounded_lp() -> impl Strategy<Value = LinearProgram> {
    (1..=3usize, 1..=3usize).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-5i32..=5, n),
            prop::collection::vec(prop::collection::vec(-3i32..=4, n), m),
            prop::collection::vec(-2i32..=8, m),
            prop::collection::vec(1i32..=4, n),
        )
            .prop_map(move |(c, a, b, u)| {
                let mut lp = LinearProgram::new(m, b.iter().map(|&v| v as f64).collect());
                for j in 0..n {
                    let entries: Vec<(usize, f64)> =
                        (0..m).filter(|&i| a[i][j] != 0).map(|i| (i, a[i][j] as f64)).collect();
                    lp.add_variable(c[j] as f64, u[j] as f64, &entries);
                }
                lp
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_matches_vertex_enumeration(lp in bounded_lp()) {
        let r = solve_lp(&lp).unwrap();
        match vertex_optimum(&lp) {
            None => prop_assert_eq!(r.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(r.status, LpStatus::Optimal);
                prop_assert!((r.objective - best).abs() <= 1e-7, "{} vs {}", r.objective, best);
                let act = lp.activities(&r.primal);
                for (a, b) in act.iter().zip(&lp.row_bounds) {
                    prop_assert!(*a <= b + 1e-7);
                }
                // strong duality with bounded variables
                let mut dual = 0.0;
                for (pi, b) in r.row_duals.iter().zip(&lp.row_bounds) {
                    prop_assert!(*pi >= 0.0);
                    dual += pi * b;
                }
                let cols: Vec<f64> = (0..lp.num_vars())
                    .map(|j| lp.rows.iter().zip(&r.row_duals).map(|(row, pi)| {
                        row.iter().filter(|e| e.0 == j).map(|e| e.1 * pi).sum::<f64>()
                    }).sum())
                    .collect();
                for j in 0..lp.num_vars() {
                    dual += lp.upper_bounds[j] * (lp.objective[j] - cols[j]).max(0.0);
                }
                prop_assert!((dual - r.objective).abs() <= 1e-6, "dual {} primal {}", dual, r.objective);
            }
        }
    }

    #[test]
    fn warm_start_agrees_with_cold_solve(lp in bounded_lp(), k in 0usize..3, fix_up in any::<bool>()) {
        let k = k % lp.num_vars();
        let mut warm = Simplex::new(&lp);
        let first = warm.solve();
        if first.status != LpStatus::Optimal {
            return Ok(());
        }
        let basis = warm.warm_start();
        let (lo, hi) = if fix_up { (1.0, 1.0) } else { (0.0, 0.0) };
        warm.set_bounds(k, lo, hi);
        let again = warm.solve_from(&basis);

        let mut cold = Simplex::new(&lp);
        cold.set_bounds(k, lo, hi);
        let fresh = cold.solve();
        prop_assert_eq!(again.status, fresh.status);
        if fresh.status == LpStatus::Optimal {
            prop_assert!((again.objective - fresh.objective).abs() <= 1e-7);
            prop_assert!((again.primal[k] - lo).abs() <= 1e-9);
        }
    }
}

/// Random set packing over `n` binary columns with 0/1 rows.
fn packing() -> impl Strategy<Value = (LinearProgram, Vec<Vec<usize>>)> {
    (2..=10usize, 2..=6usize).prop_flat_map(|(n, m)| {
        (prop::collection::vec(1u32..=100, n), prop::collection::vec(prop::collection::vec(any::<bool>(), m), n))
            .prop_map(move |(value, member)| {
                let mut lp = LinearProgram::new(m, vec![1.0; m]);
                let mut sets = Vec::new();
                for j in 0..n {
                    let rows: Vec<usize> = (0..m).filter(|&i| member[j][i]).collect();
                    let entries: Vec<(usize, f64)> = rows.iter().map(|&i| (i, 1.0)).collect();
                    lp.add_variable(value[j] as f64 / 7.0, 1.0, &entries);
                    sets.push(rows);
                }
                (lp, sets)
            })
    })
}

fn packing_optimum(lp: &LinearProgram, sets: &[Vec<usize>]) -> f64 {
    let n = sets.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let mut used = 0u64;
        let mut ok = true;
        let mut value = 0.0;
        for j in (0..n).filter(|j| mask >> j & 1 == 1) {
            for &i in &sets[j] {
                ok &= used >> i & 1 == 0;
                used |= 1 << i;
            }
            value += lp.objective[j];
        }
        if ok {
            best = best.max(value);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn branch_and_bound_matches_subset_enumeration((lp, sets) in packing()) {
        let binary = vec![true; lp.num_vars()];
        let best = packing_optimum(&lp, &sets);
        let r = solve_milp(&lp, &binary, &Unlimited).unwrap();
        prop_assert_eq!(r.status, MilpStatus::Optimal);
        prop_assert!((r.objective - best).abs() <= 1e-7);
        prop_assert!(r.primal.iter().all(|&v| v == 0.0 || v == 1.0));
        let lp_bound = solve_lp(&lp).unwrap().objective;
        prop_assert!(r.objective <= lp_bound + 1e-7);

        // pairwise disjunctions over overlapping columns are valid for set
        // packing and must not change the optimum; neither may a start point
        let mut disjunctions = Vec::new();
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                if sets[a].iter().any(|i| sets[b].contains(i)) {
                    disjunctions.push(Disjunction { left: vec![a], right: vec![b] });
                }
            }
        }
        let start = vec![0.0; lp.num_vars()];
        let opts = MilpOptions { start: Some(&start), disjunctions: &disjunctions };
        let r2 = solve_milp_with(&lp, &binary, &Unlimited, &opts).unwrap();
        prop_assert!((r2.objective - best).abs() <= 1e-7);
    }
}
