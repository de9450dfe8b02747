//! Fixed-step classical Runge-Kutta marching on a grid.

use crate::grid::Grid;

pub(crate) fn rk4<const N: usize, F>(f: &F, y: [f64; N], dx: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let add = |a: &[f64; N], b: &[f64; N], s: f64| {
        let mut r = *a;
        for k in 0..N {
            r[k] += s * b[k];
        }
        r
    };
    let k1 = f(&y);
    let k2 = f(&add(&y, &k1, 0.5 * dx));
    let k3 = f(&add(&y, &k2, 0.5 * dx));
    let k4 = f(&add(&y, &k3, dx));
    let mut out = y;
    for k in 0..N {
        out[k] += dx / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Dir {
    Left,
    Right,
}

/// Marches from `(x_start, y_start)` across the grid nodes in one
/// direction. `step(y, dx)` returns `None` to stop early. The first step
/// may be partial when `x_start` is off-node; a node at `x_start` gets
/// `y_start` itself. Returns `(node, state)` pairs in marching order.
pub(crate) fn march<const N: usize, S>(
    grid: &Grid,
    x_start: f64,
    y_start: [f64; N],
    dir: Dir,
    mut step: S,
) -> Vec<(usize, [f64; N])>
where
    S: FnMut([f64; N], f64) -> Option<[f64; N]>,
{
    let n = grid.n();
    let on_node = grid.node_index(x_start);
    let mut out = Vec::new();
    let first = match (dir, on_node) {
        (_, Some(i)) => {
            out.push((i, y_start));
            match dir {
                Dir::Right if i + 1 < n => Some(i + 1),
                Dir::Left if i > 0 => Some(i - 1),
                _ => None,
            }
        }
        (Dir::Right, None) => (0..n).find(|&i| grid.x(i) > x_start),
        (Dir::Left, None) => (0..n).rev().find(|&i| grid.x(i) < x_start),
    };
    let Some(mut i) = first else {
        return out;
    };
    let mut x = x_start;
    let mut y = y_start;
    loop {
        let xi = grid.x(i);
        match step(y, xi - x) {
            Some(next) => {
                y = next;
                x = xi;
                out.push((i, y));
            }
            None => break,
        }
        match dir {
            Dir::Right if i + 1 < n => i += 1,
            Dir::Left if i > 0 => i -= 1,
            _ => break,
        }
    }
    out
}
