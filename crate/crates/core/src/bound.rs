//! Tight optimistic estimator for the boosting gain.
//!
//! For an extent `I` the bound is `max { obj(J) : J ⊆ I }`. When `I` is
//! listed by descending `g/h`, some maximizing `J` is either a prefix ending
//! in a row with `g > 0` or a suffix starting at a row with `g < 0`, so one
//! scan from each end suffices.

use crate::error::Result;
use crate::loss::{GradientStats, ObjectiveContext};

/// Which part of the ratio-sorted extent attains the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cut {
    Empty,
    /// The first `len` entries.
    Prefix(usize),
    /// The last `len` entries.
    Suffix(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub value: f64,
    pub cut: Cut,
}

impl BoundResult {
    /// The maximizing subset, as a slice of the extent the bound was computed on.
    pub fn witness<'a, T>(&self, extent_sorted: &'a [T]) -> &'a [T] {
        match self.cut {
            Cut::Empty => &extent_sorted[..0],
            Cut::Prefix(len) => &extent_sorted[..len],
            Cut::Suffix(len) => &extent_sorted[extent_sorted.len() - len..],
        }
    }
}

/// Bound over `(g, h)` pairs already listed by descending `g/h`.
pub fn bound_sorted_pairs(pairs: &[(f64, f64)], ctx: &ObjectiveContext) -> Result<BoundResult> {
    let mut best = BoundResult { value: 0.0, cut: Cut::Empty };

    let (mut sg, mut sh) = (0.0, 0.0);
    for (len, &(g, h)) in pairs.iter().enumerate() {
        if g <= 0.0 {
            break;
        }
        sg += g;
        sh += h;
        let v = ctx.gain(sg, sh)?;
        if v > best.value {
            best = BoundResult { value: v, cut: Cut::Prefix(len + 1) };
        }
    }

    let (mut sg, mut sh) = (0.0, 0.0);
    for (len, &(g, h)) in pairs.iter().rev().enumerate() {
        if g >= 0.0 {
            break;
        }
        sg += g;
        sh += h;
        let v = ctx.gain(sg, sh)?;
        if v > best.value {
            best = BoundResult { value: v, cut: Cut::Suffix(len + 1) };
        }
    }
    Ok(best)
}

/// Tight bound of an extent given in `stats.sorted_order` order.
///
/// The extent is not re-sorted; callers pass rows already filtered into
/// ratio order (see [`GradientStats::sort_extent`]).
pub fn tight_bound(extent_sorted: &[usize], stats: &GradientStats, ctx: &ObjectiveContext) -> Result<BoundResult> {
    let (g, h) = (stats.g(), stats.h());
    let pairs: Vec<(f64, f64)> = extent_sorted.iter().map(|&i| (g[i], h[i])).collect();
    bound_sorted_pairs(&pairs, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::objective;
    use proptest::prelude::*;

    fn brute_force(ext: &[usize], stats: &GradientStats, ctx: &ObjectiveContext) -> f64 {
        let mut best = 0.0f64;
        for mask in 1u32..(1 << ext.len()) {
            let subset: Vec<usize> = (0..ext.len()).filter(|b| mask >> b & 1 == 1).map(|b| ext[b]).collect();
            best = best.max(objective(&subset, stats, ctx).unwrap());
        }
        best
    }

    #[test]
    fn three_row_example() {
        let stats = GradientStats::new(vec![3.0, 1.0, -2.0], vec![1.0; 3]).unwrap();
        let ctx = ObjectiveContext::new(0.0, 3).unwrap();
        let ext = stats.sorted_order().to_vec();
        let b = tight_bound(&ext, &stats, &ctx).unwrap();
        assert_eq!(b.value, 1.5);
        assert_eq!(b.witness(&ext), &[0]);
        assert_eq!(brute_force(&ext, &stats, &ctx), 1.5);
    }

    #[test]
    fn zero_gradients() {
        let stats = GradientStats::new(vec![0.0; 4], vec![1.0; 4]).unwrap();
        let ctx = ObjectiveContext::new(0.0, 4).unwrap();
        let b = tight_bound(stats.sorted_order(), &stats, &ctx).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.witness(stats.sorted_order()).is_empty());
    }

    #[test]
    fn single_negative_row() {
        let stats = GradientStats::new(vec![-2.0], vec![2.0]).unwrap();
        let ctx = ObjectiveContext::new(0.0, 1).unwrap();
        let b = tight_bound(&[0], &stats, &ctx).unwrap();
        assert_eq!(b.value, 1.0);
        assert_eq!(b.witness(&[0usize]), &[0]);
    }

    #[test]
    fn zero_hessian_prefix_is_a_domain_error_without_regularization() {
        let stats = GradientStats::new(vec![1.0, -1.0], vec![0.0, 1.0]).unwrap();
        let ctx = ObjectiveContext::new(0.0, 2).unwrap();
        assert!(tight_bound(&[0, 1], &stats, &ctx).is_err());
        let ctx = ObjectiveContext::new(0.1, 2).unwrap();
        assert_eq!(tight_bound(&[0, 1], &stats, &ctx).unwrap().cut, Cut::Prefix(1));
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (1usize..=10).prop_flat_map(|m| {
            (
                proptest::collection::vec(-5.0f64..5.0, m),
                proptest::collection::vec(0.01f64..3.0, m),
                prop_oneof![Just(0.0), Just(0.1), Just(1.0)],
            )
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force((g, h, lambda) in instance()) {
            let stats = GradientStats::new(g.clone(), h).unwrap();
            let ctx = ObjectiveContext::new(lambda, g.len()).unwrap();
            let ext = stats.sorted_order().to_vec();
            let b = tight_bound(&ext, &stats, &ctx).unwrap();
            let oracle = brute_force(&ext, &stats, &ctx);
            prop_assert!((b.value - oracle).abs() <= 1e-9 * oracle.max(1e-300));
            let w = b.witness(&ext);
            if !w.is_empty() {
                prop_assert!((objective(w, &stats, &ctx).unwrap() - b.value).abs() <= 1e-12 * b.value);
            }
            prop_assert!(w.iter().all(|&i| g[i] > 0.0) || w.iter().all(|&i| g[i] < 0.0) || w.is_empty());
        }

        #[test]
        fn monotone_under_subsets((g, h, lambda) in instance(), mask in any::<u16>()) {
            let stats = GradientStats::new(g.clone(), h).unwrap();
            let ctx = ObjectiveContext::new(lambda, g.len()).unwrap();
            let ext = stats.sorted_order().to_vec();
            let sub: Vec<usize> = ext.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &i)| i).collect();
            let full = tight_bound(&ext, &stats, &ctx).unwrap().value;
            let part = tight_bound(&sub, &stats, &ctx).unwrap().value;
            prop_assert!(part <= full * (1.0 + 1e-12));
        }
    }
}
