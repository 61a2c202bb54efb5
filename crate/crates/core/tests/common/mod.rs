#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rumor_core::graph::{EdgeDelay, GraphBuilder};
use rumor_core::{NodeId, SocialGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn graph_from(edges: &[(u64, u64, f64, f64)]) -> SocialGraph {
    let mut b = GraphBuilder::new();
    for &(u, v, m, var) in edges {
        b.add_edge(NodeId(u), NodeId(v), EdgeDelay::new(m, var).unwrap())
            .unwrap();
    }
    b.build()
}

/// Connected random graph: a random spanning tree plus `extra` chords.
pub fn random_connected(n: u64, extra: usize, seed: u64, integer_means: bool) -> SocialGraph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mean = |r: &mut ChaCha8Rng| {
        if integer_means {
            r.random_range(1..4) as f64
        } else {
            r.random_range(0.5..3.0)
        }
    };
    for v in 1..n {
        let u = r.random_range(0..v);
        seen.insert((u, v));
        let m = mean(&mut r);
        edges.push((u, v, m, 0.1 * m * m));
    }
    let mut tries = 0;
    while edges.len() < (n as usize - 1) + extra && tries < 10_000 {
        tries += 1;
        let a = r.random_range(0..n);
        let b = r.random_range(0..n);
        let key = (a.min(b), a.max(b));
        if a == b || seen.contains(&key) {
            continue;
        }
        seen.insert(key);
        let m = mean(&mut r);
        edges.push((key.0, key.1, m, 0.1 * m * m));
    }
    graph_from(&edges)
}

/// Every simple path between two dense indices, as node index sequences.
pub fn simple_paths(g: &SocialGraph, from: usize, to: usize) -> Vec<Vec<usize>> {
    fn walk(g: &SocialGraph, at: usize, to: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if at == to {
            out.push(path.clone());
            return;
        }
        for &(w, _) in g.neighbors(at) {
            if !path.contains(&w) {
                path.push(w);
                walk(g, w, to, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(g, from, to, &mut vec![from], &mut out);
    out
}

pub fn path_cost(g: &SocialGraph, path: &[usize], weight: impl Fn(usize) -> f64) -> f64 {
    path.windows(2)
        .map(|w| {
            let e = g.neighbors(w[0]).iter().find(|(x, _)| *x == w[1]).unwrap().1;
            weight(e)
        })
        .sum()
}

pub fn random_tree(n: u64, seed: u64, mean_range: (f64, f64), var_ratio: f64) -> SocialGraph {
    let mut r = rng(seed);
    let edges: Vec<_> = (1..n)
        .map(|v| {
            let u = r.random_range(0..v);
            let m = r.random_range(mean_range.0..mean_range.1);
            (u, v, m, var_ratio * m * m)
        })
        .collect();
    graph_from(&edges)
}

/// `min ‖x‖₁ s.t. θx = y` by enumerating every square column subset of a
/// full-row-rank `θ` and keeping the cheapest basic solution.
pub fn l1_by_enumeration(theta: &rumor_core::Matrix, y: &[f64]) -> (f64, Vec<f64>) {
    use nalgebra::{DMatrix, DVector};
    let (l, k) = (theta.rows(), theta.cols());
    let mut best = (f64::INFINITY, Vec::new());
    for cols in subsets(k, l) {
        let a = DMatrix::from_fn(l, l, |r, c| theta[(r, cols[c])]);
        let Some(z) = a.clone().lu().solve(&DVector::from_column_slice(y)) else {
            continue;
        };
        if a.svd(false, false).singular_values.min() < 1e-10 {
            continue;
        }
        let cost: f64 = z.iter().map(|v| v.abs()).sum();
        if cost < best.0 {
            let mut x = vec![0.0; k];
            for (i, &c) in cols.iter().enumerate() {
                x[c] = z[i];
            }
            best = (cost, x);
        }
    }
    best
}

pub fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, size, &mut Vec::new(), &mut out);
    out
}

/// Partial delay matrix with random valid known blocks.
pub fn random_layout(m: usize, n: usize, seed: u64) -> rumor_core::PartialDelayMatrix {
    let mut r = rng(seed);
    let sym = |k: usize, r: &mut ChaCha8Rng| {
        let mut a = rumor_core::Matrix::zeros(k, k);
        for i in 0..k {
            for j in i + 1..k {
                let v = r.random_range(0.5..5.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    };
    let a = sym(m, &mut r);
    let b = sym(n, &mut r);
    let c = (0..m).map(|_| r.random_range(0.5..5.0)).collect();
    let d = (0..n).map(|_| r.random_range(0.5..5.0)).collect();
    rumor_core::PartialDelayMatrix::from_blocks(a, c, 0.0, d, b).unwrap()
}

/// Best rank-one approximation from a full SVD.
pub fn rank_one_svd(ex: &rumor_core::Matrix) -> nalgebra::DMatrix<f64> {
    let m = nalgebra::DMatrix::from_fn(ex.rows(), ex.cols(), |i, j| ex[(i, j)]);
    let svd = m.svd(true, true);
    let (i, _) = svd.singular_values.argmax();
    let u = svd.u.as_ref().unwrap().column(i).into_owned();
    let vt = svd.v_t.as_ref().unwrap().row(i).into_owned();
    u * vt * svd.singular_values[i]
}

pub fn relative_frobenius(got: &rumor_core::Matrix, want: &nalgebra::DMatrix<f64>) -> f64 {
    let mut num = 0.0;
    for i in 0..got.rows() {
        for j in 0..got.cols() {
            num += (got[(i, j)] - want[(i, j)]).powi(2);
        }
    }
    num.sqrt() / want.norm()
}
