//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use rcp_core::percolation::{WedgeBondConfig, WedgeEdge};

const MOVES: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// `(exact, relaxed)` counts of admissible paths of length `n`, by running
/// every non-backtracking turn word over the `n − 2` interior moves and
/// filtering. `exact` also requires self-avoidance.
pub fn contour_word_counts(n: usize) -> (u64, u64) {
    assert!(n >= 2);
    let interior = n - 2;
    let words = 3u64.pow(interior as u32);
    let (mut exact, mut relaxed) = (0, 0);
    for k in 1..n as i64 {
        'word: for w in 0..words {
            let mut code = w;
            let mut path = vec![(0, k), (1, k)];
            let mut dir = 0usize;
            for _ in 0..interior {
                // 0: turn left, 1: straight, 2: turn right
                let turn = (code % 3) as usize;
                code /= 3;
                dir = (dir + [1, 0, 3][turn]) % 4;
                let (x, y) = *path.last().unwrap();
                let next = (x + MOVES[dir].0, y + MOVES[dir].1);
                if next.0 < 0 || next.1 < 1 {
                    continue 'word;
                }
                path.push(next);
            }
            let (l, y) = *path.last().unwrap();
            if y != 1 || l < 1 {
                continue;
            }
            path.push((l, 0));
            relaxed += 1;
            let distinct: HashSet<_> = path.iter().collect();
            if distinct.len() == path.len() {
                exact += 1;
            }
        }
    }
    (exact, relaxed)
}

/// Dual vertices `(x, y)` with `0 ≤ y ≤ H`, `|x| ≤ y+1`, `x+y` odd.
fn dual_ok(x: i64, y: i64, h: i64) -> bool {
    (0..=h).contains(&y) && x.abs() <= y + 1 && (x + y).rem_euclid(2) == 1
}

/// Breadth-first search for any dual path from the left side to the right
/// side whose `↗`/`↘` steps all cross existing closed edges.
pub fn dual_separation_exists(config: &WedgeBondConfig) -> bool {
    let g = config.graph();
    let h = g.height() as i64;
    let closed = |e: WedgeEdge| g.contains_edge(&e) && !config.is_open(&e);
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    for y in 0..=h {
        seen.insert((-y - 1, y));
        queue.push_back((-y - 1, y));
    }
    while let Some((x, y)) = queue.pop_front() {
        if x == y + 1 {
            return true;
        }
        let moves = [
            ((x + 1, y + 1), closed(WedgeEdge::north_west(x + 1, y))),
            ((x + 1, y - 1), closed(WedgeEdge::north_east(x, y - 1))),
            ((x - 1, y - 1), true),
            ((x - 1, y + 1), true),
        ];
        for ((nx, ny), allowed) in moves {
            if allowed && dual_ok(nx, ny, h) && seen.insert((nx, ny)) {
                queue.push_back((nx, ny));
            }
        }
    }
    false
}

/// Origin's forward cluster reaches row `H`, by depth-first search over the
/// open edges with vertices keyed by coordinates.
pub fn reaches_top(config: &WedgeBondConfig) -> bool {
    let h = config.height() as i64;
    let mut stack = vec![(0i64, 0i64)];
    let mut seen = HashSet::from([(0i64, 0i64)]);
    while let Some((x, y)) = stack.pop() {
        if y == h {
            return true;
        }
        for e in [WedgeEdge::north_west(x, y), WedgeEdge::north_east(x, y)] {
            let t = e.to();
            if config.is_open(&e) && seen.insert((t.x, t.y)) {
                stack.push((t.x, t.y));
            }
        }
    }
    false
}

/// One-sided normal check: `estimate − 3·se ≤ bound`.
pub fn within_three_se(estimate: f64, se: f64, bound: f64) -> bool {
    estimate - 3.0 * se <= bound
}
