//! Projection onto convex hulls and the convex-extraction construction: from a
//! bounded sequence with convergent points, pick convex combinations whose
//! points and values both converge.

use crate::algebra::{pinv, CMat, CVec, C64};
use crate::error::{Error, Result};

pub const GAP_TOL: f64 = 1e-10;
pub const MAX_ITER: usize = 10_000;
const ACTIVE_CUT: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct HullProjection {
    pub point: CVec,
    /// Convex weights over the input points.
    pub weights: Vec<f64>,
    pub distance: f64,
    /// Wolfe gap `max_i Re⟨x − t, x − p_i⟩` at the returned point.
    pub gap: f64,
    pub iterations: usize,
}

fn re_inner(u: &CVec, v: &CVec) -> f64 {
    v.dotc(u).re
}

fn combine(points: &[CVec], weights: &[f64]) -> CVec {
    let mut x = CVec::zeros(points[0].len());
    for (p, &w) in points.iter().zip(weights) {
        if w != 0.0 {
            x += p * C64::from(w);
        }
    }
    x
}

fn wolfe_gap(points: &[CVec], x: &CVec, target: &CVec) -> (f64, usize) {
    let g = x - target;
    let gx = re_inner(&g, x);
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, p) in points.iter().enumerate() {
        let v = gx - re_inner(&g, p);
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

/// Minimizes `‖Σ_{i∈S} λ_i p_i − t‖` over `Σλ = 1` (no sign constraint).
fn affine_projection(points: &[CVec], subset: &[usize], target: &CVec) -> Vec<f64> {
    let p0 = &points[subset[0]];
    if subset.len() == 1 {
        return vec![1.0];
    }
    let n = p0.len();
    let k = subset.len() - 1;
    let mut m = CMat::zeros(2 * n, k);
    for (c, &i) in subset[1..].iter().enumerate() {
        let d = &points[i] - p0;
        for r in 0..n {
            m[(r, c)] = C64::from(d[r].re);
            m[(n + r, c)] = C64::from(d[r].im);
        }
    }
    let rhs_c = target - p0;
    let rhs = CVec::from_fn(2 * n, |r, _| C64::from(if r < n { rhs_c[r].re } else { rhs_c[r - n].im }));
    let mu = pinv(&m, 1e-13) * rhs;
    let mut lambda = Vec::with_capacity(subset.len());
    lambda.push(1.0 - mu.iter().map(|z| z.re).sum::<f64>());
    lambda.extend(mu.iter().map(|z| z.re));
    lambda
}

/// Active-set refinement starting from `support`; returns full-length weights.
fn polish(points: &[CVec], support: Vec<usize>, target: &CVec) -> Option<Vec<f64>> {
    let mut s = support;
    while !s.is_empty() {
        let lam = affine_projection(points, &s, target);
        let (worst, at) = lam
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |acc, (i, &v)| if v < acc.0 { (v, i) } else { acc });
        if worst >= -ACTIVE_CUT {
            let mut w = vec![0.0; points.len()];
            let total: f64 = lam.iter().map(|v| v.max(0.0)).sum();
            for (&i, &v) in s.iter().zip(&lam) {
                w[i] = v.max(0.0) / total;
            }
            return Some(w);
        }
        s.remove(at);
    }
    None
}

/// Frank-Wolfe with away steps, then an active-set polish on the support.
pub fn hull_project(points: &[CVec], target: &CVec, tol: f64) -> Result<HullProjection> {
    if points.is_empty() {
        return Err(Error::Domain("hull of an empty set".into()));
    }
    let n = target.len();
    if points.iter().any(|p| p.len() != n) {
        return Err(Error::Shape("points and target differ in dimension".into()));
    }
    let m = points.len();
    let start = (0..m)
        .min_by(|&a, &b| (&points[a] - target).norm().total_cmp(&(&points[b] - target).norm()))
        .expect("nonempty");
    let mut lambda = vec![0.0; m];
    lambda[start] = 1.0;
    let mut x = points[start].clone();
    let mut iterations = 0;
    let mut gap = wolfe_gap(points, &x, target).0;
    let mut polished = false;
    while iterations < MAX_ITER {
        if gap <= tol {
            break;
        }
        iterations += 1;
        let g = &x - target;
        let gx = re_inner(&g, &x);
        let scores: Vec<f64> = points.iter().map(|p| re_inner(&g, p)).collect();
        let s = (0..m).min_by(|&a, &b| scores[a].total_cmp(&scores[b])).expect("nonempty");
        let away = (0..m)
            .filter(|&i| lambda[i] > 0.0)
            .max_by(|&a, &b| scores[a].total_cmp(&scores[b]))
            .expect("nonempty support");
        let fw_gap = gx - scores[s];
        let away_gap = scores[away] - gx;
        let (d, gamma_max, fw) = if fw_gap >= away_gap {
            (&points[s] - &x, 1.0, true)
        } else {
            let la = lambda[away];
            (&x - &points[away], if la < 1.0 { la / (1.0 - la) } else { f64::INFINITY }, false)
        };
        let dd = d.norm_squared();
        if dd == 0.0 {
            break;
        }
        let gamma = (-re_inner(&g, &d) / dd).clamp(0.0, gamma_max);
        if fw {
            lambda.iter_mut().for_each(|l| *l *= 1.0 - gamma);
            lambda[s] += gamma;
        } else {
            lambda.iter_mut().for_each(|l| *l *= 1.0 + gamma);
            lambda[away] -= gamma;
            if gamma == gamma_max {
                lambda[away] = 0.0;
            }
        }
        lambda.iter_mut().for_each(|l| {
            if *l < 0.0 {
                *l = 0.0
            }
        });
        x = combine(points, &lambda);
        gap = wolfe_gap(points, &x, target).0;
        // polish once the support stabilises, then at the end
        if gap <= tol.sqrt() && !polished {
            polished = true;
            try_polish(points, target, &mut lambda, &mut x, &mut gap);
        }
    }
    try_polish(points, target, &mut lambda, &mut x, &mut gap);
    if gap > tol {
        return Err(Error::Accuracy { achieved: gap, tolerance: tol });
    }
    let distance = (&x - target).norm();
    Ok(HullProjection { point: x, weights: lambda, distance, gap, iterations })
}

fn try_polish(points: &[CVec], target: &CVec, lambda: &mut Vec<f64>, x: &mut CVec, gap: &mut f64) {
    let support: Vec<usize> = (0..points.len()).filter(|&i| lambda[i] > ACTIVE_CUT).collect();
    if let Some(w) = polish(points, support, target) {
        let y = combine(points, &w);
        let g = wolfe_gap(points, &y, target).0;
        if (&y - target).norm() <= (&*x - target).norm() + 1e-14 && g <= gap.max(GAP_TOL) {
            *lambda = w;
            *x = y;
            *gap = g;
        }
    }
}

/// Exhaustive oracle: the best nonnegative affine projection over all vertex subsets.
pub fn hull_project_brute(points: &[CVec], target: &CVec) -> Result<HullProjection> {
    let m = points.len();
    if m == 0 {
        return Err(Error::Domain("hull of an empty set".into()));
    }
    if m > 16 {
        return Err(Error::Domain(format!("brute force limited to 16 points, got {m}")));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << m) {
        let subset: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let lam = affine_projection(points, &subset, target);
        if lam.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let mut w = vec![0.0; m];
        for (&i, &v) in subset.iter().zip(&lam) {
            w[i] = v.max(0.0);
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let d = (combine(points, &w) - target).norm();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, w));
        }
    }
    let (distance, weights) = best.expect("singletons are always feasible");
    let point = combine(points, &weights);
    let gap = wolfe_gap(points, &point, target).0;
    Ok(HullProjection { point, weights, distance, gap, iterations: 0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionProblem {
    pub points: Vec<CVec>,
    pub values: Vec<CVec>,
    pub target: CVec,
    pub bound: f64,
}

impl ExtractionProblem {
    /// Rejects values beyond `bound` and mismatched lengths.
    pub fn new(points: Vec<CVec>, values: Vec<CVec>, target: CVec, bound: f64) -> Result<Self> {
        validate(points.len(), &values, bound)?;
        if points.iter().any(|p| p.len() != target.len()) {
            return Err(Error::Shape("points and target differ in dimension".into()));
        }
        Ok(Self { points, values, target, bound })
    }

    pub fn distances(&self) -> Vec<f64> {
        self.points.iter().map(|p| (p - &self.target).norm()).collect()
    }
}

fn validate(n: usize, values: &[CVec], bound: f64) -> Result<()> {
    if n == 0 || n != values.len() {
        return Err(Error::Shape(format!("{n} points but {} values", values.len())));
    }
    if let Some(v) = values.iter().map(|v| v.norm()).find(|&v| v > bound * (1.0 + 1e-12)) {
        return Err(Error::Bound { observed: v, bound });
    }
    Ok(())
}

/// Smallest `k` with `d_i ≤ ε` for every `i ≥ k`.
pub fn tail_start(distances: &[f64], eps: f64) -> Option<usize> {
    let mut k = distances.len();
    while k > 0 && distances[k - 1] <= eps {
        k -= 1;
    }
    (k < distances.len()).then_some(k)
}

/// Greedy ε-halving: keep the fullest ε-ball (ties to the earliest centre);
/// the cluster point is the latest value of the final ball.
pub fn cluster_point(values: &[CVec]) -> (CVec, Vec<usize>) {
    let mut members: Vec<usize> = (0..values.len()).collect();
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let mut eps = 2.0 * scale;
    while members.len() > 1 && eps > 1e-13 * scale {
        let diameter = members
            .iter()
            .flat_map(|&i| members.iter().map(move |&j| (i, j)))
            .map(|(i, j)| (&values[i] - &values[j]).norm())
            .fold(0.0, f64::max);
        if diameter <= 1e-13 * scale {
            break;
        }
        eps *= 0.5;
        let mut best: (usize, Vec<usize>) = (0, Vec::new());
        for &c in &members {
            let ball: Vec<usize> = members.iter().copied().filter(|&i| (&values[i] - &values[c]).norm() <= eps).collect();
            if ball.len() > best.1.len() {
                best = (c, ball);
            }
        }
        members = best.1;
    }
    let last = *members.last().expect("nonempty");
    (values[last].clone(), members)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionStep {
    pub n: usize,
    pub tail_start: Option<usize>,
    /// Weights over the full index set, zero before the tail.
    pub weights: Vec<f64>,
    pub value: CVec,
    /// `‖v − Λ(y_n)‖`.
    pub value_gap: f64,
    /// Closeness of `y_n` to the target.
    pub point_gap: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub cluster: CVec,
    pub steps: Vec<ExtractionStep>,
    pub points: Vec<CVec>,
    /// `max_n ‖y_n‖ − max_i ‖x_i‖`.
    pub norm_excess: f64,
}

impl Extraction {
    pub fn all_feasible(&self) -> bool {
        self.steps.iter().all(|s| s.feasible)
    }

    pub fn worst_value_gap(&self) -> f64 {
        self.steps.iter().map(|s| s.value_gap * s.n as f64).fold(0.0, f64::max)
    }
}

fn extract_weights(distances: &[f64], values: &[CVec], cluster: &CVec, n: usize) -> Result<ExtractionStep> {
    let eps = 1.0 / n as f64;
    let Some(k) = tail_start(distances, eps) else {
        return Ok(ExtractionStep {
            n,
            tail_start: None,
            weights: vec![0.0; values.len()],
            value: CVec::zeros(cluster.len()),
            value_gap: f64::INFINITY,
            point_gap: f64::INFINITY,
            feasible: false,
        });
    };
    let proj = hull_project(&values[k..], cluster, GAP_TOL)?;
    let mut weights = vec![0.0; values.len()];
    weights[k..].copy_from_slice(&proj.weights);
    Ok(ExtractionStep {
        n,
        tail_start: Some(k),
        weights,
        value: proj.point,
        value_gap: proj.distance,
        point_gap: 0.0,
        feasible: false,
    })
}

/// For `n = 1..=n_max`: project `v` onto the hull of the tail values with `‖x_i − x‖ ≤ 1/n`.
pub fn convex_extract(prob: &ExtractionProblem, n_max: usize) -> Result<Extraction> {
    let (cluster, _) = cluster_point(&prob.values);
    let distances = prob.distances();
    let mut steps = Vec::with_capacity(n_max);
    let mut points = Vec::with_capacity(n_max);
    let max_in = prob.points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let mut max_out: f64 = 0.0;
    for n in 1..=n_max {
        let mut step = extract_weights(&distances, &prob.values, &cluster, n)?;
        if step.tail_start.is_some() {
            let y = combine(&prob.points, &step.weights);
            step.point_gap = (&y - &prob.target).norm();
            let eps = 1.0 / n as f64;
            step.feasible = step.point_gap <= eps + 1e-12 && step.value_gap <= eps + 1e-12;
            max_out = max_out.max(y.norm());
            points.push(y);
        }
        steps.push(step);
    }
    Ok(Extraction { cluster, steps, points, norm_excess: max_out - max_in })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixExtraction {
    pub cluster: CVec,
    pub steps: Vec<ExtractionStep>,
    pub points: Vec<CMat>,
    /// `max_n ‖y_n‖ − max_i ‖x_i‖` in operator norm.
    pub norm_excess: f64,
}

impl MatrixExtraction {
    pub fn all_feasible(&self) -> bool {
        self.steps.iter().all(|s| s.feasible)
    }
}

/// `max_{w∈E} max(‖(y−x)w‖, ‖(y−x)*w‖)`.
pub fn strong_star_distance(y: &CMat, x: &CMat, witnesses: &[CVec]) -> f64 {
    let d = y - x;
    let da = d.adjoint();
    witnesses
        .iter()
        .map(|w| (&d * w).norm().max((&da * w).norm()))
        .fold(0.0, f64::max)
}

/// Matrix-valued extraction with closeness measured by witnesses.
pub fn strong_star_variant(
    points: &[CMat],
    values: &[CVec],
    target: &CMat,
    bound: f64,
    witnesses: &[CVec],
    n_max: usize,
) -> Result<MatrixExtraction> {
    validate(points.len(), values, bound)?;
    if points.iter().any(|p| p.shape() != target.shape()) || witnesses.iter().any(|w| w.len() != target.ncols()) {
        return Err(Error::Shape("matrix points, target and witnesses disagree".into()));
    }
    let (cluster, _) = cluster_point(values);
    let distances: Vec<f64> = points.iter().map(|p| strong_star_distance(p, target, witnesses)).collect();
    let max_in = points.iter().map(crate::algebra::op_norm).fold(0.0, f64::max);
    let mut max_out: f64 = 0.0;
    let mut steps = Vec::new();
    let mut out = Vec::new();
    for n in 1..=n_max {
        let mut step = extract_weights(&distances, values, &cluster, n)?;
        if step.tail_start.is_some() {
            let y = points
                .iter()
                .zip(&step.weights)
                .fold(CMat::zeros(target.nrows(), target.ncols()), |acc, (p, &w)| acc + p * C64::from(w));
            step.point_gap = strong_star_distance(&y, target, witnesses);
            let eps = 1.0 / n as f64;
            step.feasible = step.point_gap <= eps + 1e-12 && step.value_gap <= eps + 1e-12;
            max_out = max_out.max(crate::algebra::op_norm(&y));
            out.push(y);
        }
        steps.push(step);
    }
    Ok(MatrixExtraction { cluster, steps, points: out, norm_excess: max_out - max_in })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian_matrix, gaussian_vector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real(v: &[f64]) -> CVec {
        CVec::from_iterator(v.len(), v.iter().map(|&x| C64::from(x)))
    }

    #[test]
    fn midpoint_and_interior() {
        let p = real(&[1.0, 0.0]);
        let q = real(&[-1.0, 2.0]);
        let mid = (&p + &q) * C64::from(0.5);
        let proj = hull_project(&[p.clone(), q.clone()], &mid, GAP_TOL).unwrap();
        assert!((proj.weights[0] - 0.5).abs() < 1e-12 && (proj.weights[1] - 0.5).abs() < 1e-12);
        let r = real(&[0.0, -3.0]);
        let inside = real(&[0.0, 0.0]);
        let proj = hull_project(&[p, q, r], &inside, GAP_TOL).unwrap();
        assert!(proj.distance < 1e-12);
        assert!(hull_project(&[], &inside, GAP_TOL).is_err());
    }

    #[test]
    fn matches_brute_force_on_large_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let pts: Vec<CVec> = (0..12).map(|_| gaussian_vector(6, &mut rng)).collect();
            let t = gaussian_vector(6, &mut rng) * C64::from(2.0);
            let fw = hull_project(&pts, &t, GAP_TOL).unwrap();
            let bf = hull_project_brute(&pts, &t).unwrap();
            assert!((&fw.point - &bf.point).norm() <= 1e-8, "{} vs {}", fw.distance, bf.distance);
        }
        let pts: Vec<CVec> = (0..20).map(|_| gaussian_vector(6, &mut rng)).collect();
        let t = gaussian_vector(6, &mut rng) * C64::from(2.0);
        let fw = hull_project(&pts, &t, GAP_TOL).unwrap();
        assert!(fw.gap <= GAP_TOL);
    }

    #[test]
    fn tail_and_cluster() {
        assert_eq!(tail_start(&[1.0, 0.5, 0.2, 0.1], 0.25), Some(2));
        assert_eq!(tail_start(&[1.0, 0.5], 0.1), None);
        let w = real(&[1.0, 0.0]);
        let vals: Vec<CVec> = (0..10).map(|i| if i % 2 == 0 { w.clone() } else { -&w }).collect();
        assert_eq!(cluster_point(&vals).0, w);
    }

    #[test]
    fn alternating_values_extract_first_cluster() {
        let x = real(&[0.3, -0.2]);
        let w = real(&[0.0, 1.0, 0.5]);
        let n = 60;
        let points = vec![x.clone(); n];
        let values: Vec<CVec> = (0..n).map(|i| if i % 2 == 0 { w.clone() } else { -&w }).collect();
        let prob = ExtractionProblem::new(points, values, x.clone(), w.norm()).unwrap();
        let out = convex_extract(&prob, 50).unwrap();
        assert_eq!(out.cluster, w);
        assert!(out.all_feasible());
        for step in &out.steps {
            assert!((&step.value - &w).norm() < 1e-12);
        }
        assert!(out.norm_excess <= 1e-12);
    }

    #[test]
    fn shrinking_points_constant_value() {
        let x = real(&[1.0, 2.0]);
        let w = real(&[0.5]);
        let n = 400;
        let points: Vec<CVec> = (1..=n).map(|i| &x * C64::from(1.0 - 1.0 / i as f64)).collect();
        let prob = ExtractionProblem::new(points, vec![w.clone(); n], x.clone(), 1.0).unwrap();
        let out = convex_extract(&prob, 50).unwrap();
        assert!(out.all_feasible());
        assert!(out.steps.iter().all(|s| s.value_gap < 1e-12));
    }

    #[test]
    fn unbounded_values_rejected() {
        let x = real(&[0.0]);
        let err = ExtractionProblem::new(vec![x.clone()], vec![real(&[3.0])], x, 1.0);
        assert!(matches!(err, Err(Error::Bound { .. })));
    }

    #[test]
    fn strong_star_witness_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let target = gaussian_matrix(3, 3, &mut rng);
        let n = 200;
        let noise: Vec<CMat> = (0..n).map(|_| gaussian_matrix(3, 3, &mut rng)).collect();
        let points: Vec<CMat> = (0..n).map(|i| &target + &noise[i] * C64::from(1.0 / (i as f64 + 1.0))).collect();
        let w = real(&[1.0, -1.0]);
        let values: Vec<CVec> = (0..n).map(|i| if i % 3 == 0 { w.clone() } else { -&w }).collect();
        let basis: Vec<CVec> = (0..3).map(|k| CVec::from_fn(3, |r, _| C64::from(if r == k { 1.0 } else { 0.0 }))).collect();
        let out = strong_star_variant(&points, &values, &target, 2.0, &basis, 30).unwrap();
        assert!(out.norm_excess <= 1e-12);
        for (step, y) in out.steps.iter().zip(&out.points) {
            let cols = (0..3)
                .map(|k| (y - &target).column(k).norm().max((y - &target).adjoint().column(k).norm()))
                .fold(0.0, f64::max);
            assert!((cols - step.point_gap).abs() < 1e-12);
        }
        let vacuous = strong_star_variant(&points, &values, &target, 2.0, &[CVec::zeros(3)], 10).unwrap();
        assert!(vacuous.steps.iter().all(|s| s.tail_start == Some(0) && s.point_gap == 0.0));
        assert!(out.all_feasible());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn fw_matches_oracle(seed in any::<u64>(), m in 1usize..=12, dim in 1usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<CVec> = (0..m).map(|_| gaussian_vector(dim, &mut rng)).collect();
            let t = gaussian_vector(dim, &mut rng) * C64::from(1.5);
            let fw = hull_project(&pts, &t, GAP_TOL).unwrap();
            let bf = hull_project_brute(&pts, &t).unwrap();
            prop_assert!((&fw.point - &bf.point).norm() <= 1e-8);
            prop_assert!(fw.weights.iter().all(|&w| w >= -1e-14));
            prop_assert!((fw.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn two_cluster_extraction(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = 4;
            let x = gaussian_vector(dim, &mut rng);
            let (w1, w2) = (gaussian_vector(3, &mut rng), gaussian_vector(3, &mut rng));
            let n = 600;
            let points: Vec<CVec> = (0..n)
                .map(|i| &x + gaussian_vector(dim, &mut rng) * C64::from(0.3 / (i as f64 + 1.0)))
                .collect();
            let values: Vec<CVec> = (0..n)
                .map(|i| {
                    let base = if rng.random::<bool>() { &w1 } else { &w2 };
                    base + gaussian_vector(3, &mut rng) * C64::from(0.2 / (i as f64 + 1.0))
                })
                .collect();
            let bound = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let prob = ExtractionProblem::new(points, values, x, bound).unwrap();
            let out = convex_extract(&prob, 50).unwrap();
            prop_assert!(out.all_feasible());
            prop_assert!(out.norm_excess <= 1e-12);
        }
    }
}
