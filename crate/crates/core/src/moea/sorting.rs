/// Two minimisation objectives.
pub type Point = [f64; 2];

/// `a` is no worse than `b` in both objectives and strictly better in one.
#[inline]
pub fn dominates(a: &Point, b: &Point) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Fast non-dominated sorting. Returns fronts of point indices, best first;
/// indices inside a front are ascending.
pub fn non_dominated_sort(points: &[Point]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::new();

    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            if dominates(&points[p], &points[q]) {
                dominated_by_me[p].push(q);
            } else if dominates(&points[q], &points[p]) {
                domination_count[p] += 1;
            }
        }
        if domination_count[p] == 0 {
            current.push(p);
        }
    }

    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Rank (front number) of every point.
pub fn ranks(points: &[Point]) -> Vec<usize> {
    let mut rank = vec![0; points.len()];
    for (r, front) in non_dominated_sort(points).iter().enumerate() {
        for &i in front {
            rank[i] = r;
        }
    }
    rank
}

/// Crowding distance of each member of `front` (same order as `front`).
/// Boundary members in either objective get `f64::INFINITY`.
pub fn crowding_distance(points: &[Point], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut distance = vec![0.0; m];
    if m <= 2 {
        distance.fill(f64::INFINITY);
        return distance;
    }
    let mut order: Vec<usize> = (0..m).collect();
    #[allow(clippy::needless_range_loop)]
    for obj in 0..2 {
        order.sort_by(|&a, &b| {
            points[front[a]][obj]
                .total_cmp(&points[front[b]][obj])
                .then(a.cmp(&b))
        });
        let lo = points[front[order[0]]][obj];
        let hi = points[front[order[m - 1]]][obj];
        distance[order[0]] = f64::INFINITY;
        distance[order[m - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        for w in 1..m - 1 {
            let prev = points[front[order[w - 1]]][obj];
            let next = points[front[order[w + 1]]][obj];
            distance[order[w]] += (next - prev) / span;
        }
    }
    distance
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mutually_non_dominated() {
        let pts = [[1.0, 5.0], [2.0, 4.0], [3.0, 3.0]];
        assert_eq!(non_dominated_sort(&pts), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn strict_domination() {
        let pts = [[1.0, 1.0], [2.0, 2.0]];
        assert_eq!(non_dominated_sort(&pts), vec![vec![0], vec![1]]);
        assert_eq!(ranks(&pts), vec![0, 1]);
    }

    #[test]
    fn equal_points_share_a_front() {
        let pts = [[1.0, 1.0], [1.0, 1.0], [0.5, 2.0]];
        assert_eq!(non_dominated_sort(&pts), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn boundaries_are_infinite() {
        let pts = [[1.0, 5.0], [2.0, 4.0], [4.0, 2.0], [5.0, 1.0]];
        let d = crowding_distance(&pts, &[0, 1, 2, 3]);
        assert!(d[0].is_infinite() && d[3].is_infinite());
        // neighbours span 3 of 4 in each objective
        assert!((d[1] - (3.0 / 4.0 + 3.0 / 4.0)).abs() < 1e-12);
        assert!((d[2] - (3.0 / 4.0 + 3.0 / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn small_fronts_are_all_boundary() {
        let pts = [[1.0, 2.0], [2.0, 1.0]];
        assert!(crowding_distance(&pts, &[0, 1])
            .iter()
            .all(|d| d.is_infinite()));
    }
}
