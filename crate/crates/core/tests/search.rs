mod common;

use std::collections::BTreeSet;

use common::*;
use rand::Rng;
use ruleboost::*;

fn with_flags(bounding: bool, propagate: bool, skip: bool) -> SearchConfig {
    SearchConfig { bounding, propagate_equivalence: propagate, skip_prefix_checks: skip, ..Default::default() }
}

#[test]
fn matches_exhaustive_optimum() {
    for seed in 0..40 {
        let inst = random_instance(seed);
        let best = exhaustive_max(&inst.props, &inst.stats, &inst.ctx);
        let res = find_best_query(&inst.props, &inst.stats, &inst.ctx, &SearchConfig::default()).unwrap();
        assert!(close(res.objective, best, 1e-9), "seed {seed}: {} vs {best}", res.objective);
        assert!(res.completed);
        assert_eq!(res.guarantee, 1.0);
        let achieved = objective(&res.query.extent, &inst.stats, &inst.ctx).unwrap_or(0.0);
        assert!(close(achieved, res.objective, 1e-9));
    }
}

#[test]
fn flags_do_not_change_the_answer() {
    for seed in 100..130 {
        let inst = random_instance(seed);
        let base = find_best_query(&inst.props, &inst.stats, &inst.ctx, &with_flags(true, true, true)).unwrap();
        let mut unbounded_nodes = 0;
        for mask in 0..8u32 {
            let cfg = with_flags(mask & 1 != 0, mask & 2 != 0, mask & 4 != 0);
            let res = find_best_query(&inst.props, &inst.stats, &inst.ctx, &cfg).unwrap();
            assert!(close(res.objective, base.objective, 1e-12), "seed {seed} flags {mask}");
            if !cfg.bounding {
                unbounded_nodes = unbounded_nodes.max(res.stats.nodes_expanded);
            }
        }
        assert!(base.stats.nodes_expanded <= unbounded_nodes);
    }
}

#[test]
fn skipping_prefix_checks_is_invisible() {
    for seed in 200..230 {
        let inst = random_instance(seed);
        let run = |skip| {
            let cfg = SearchConfig {
                bounding: false,
                skip_prefix_checks: skip,
                record_core_queries: true,
                ..Default::default()
            };
            find_best_query(&inst.props, &inst.stats, &inst.ctx, &cfg).unwrap()
        };
        let (on, off) = (run(true), run(false));
        assert_eq!(on.core_queries, off.core_queries);
        assert_eq!(on.query, off.query);
        assert_eq!(off.stats.prefix_checks_skipped, 0);
    }
}

#[test]
fn core_queries_are_one_per_extent() {
    for seed in 300..330 {
        let inst = random_instance(seed);
        let cfg = SearchConfig { bounding: false, record_core_queries: true, ..Default::default() };
        let res = find_best_query(&inst.props, &inst.stats, &inst.ctx, &cfg).unwrap();
        let found: Vec<u64> = res.core_queries.iter().map(|q| mask_of(&q.extent)).collect();
        let unique: BTreeSet<u64> = found.iter().copied().collect();
        assert_eq!(unique.len(), found.len(), "seed {seed}: duplicate core extents");
        assert_eq!(unique, all_extents(&inst.props), "seed {seed}");
        for q in &res.core_queries {
            assert_eq!(Query::from_props(q.props.clone(), &inst.props).extent, q.extent);
        }
    }
}

#[test]
fn early_stops_respect_guarantee() {
    for seed in 400..440 {
        let inst = random_instance(seed);
        let best = exhaustive_max(&inst.props, &inst.stats, &inst.ctx);
        for depth in 1..=3 {
            let cfg = SearchConfig { max_depth: Some(depth), ..Default::default() };
            let res = find_best_query(&inst.props, &inst.stats, &inst.ctx, &cfg).unwrap();
            assert!(res.query.len() <= depth);
            assert!((0.0..=1.0).contains(&res.guarantee));
            assert!(res.objective >= res.guarantee * best - 1e-12, "seed {seed} depth {depth}");
            if res.completed {
                assert!(close(res.objective, best, 1e-9));
            }
        }
        let cfg = SearchConfig { time_budget: Some(std::time::Duration::ZERO), ..Default::default() };
        let res = find_best_query(&inst.props, &inst.stats, &inst.ctx, &cfg).unwrap();
        assert!(!res.completed);
        assert!(res.objective >= res.guarantee * best - 1e-12);
    }
}

#[test]
fn alpha_search_is_approximate() {
    for seed in 500..540 {
        let inst = random_instance(seed);
        let best = exhaustive_max(&inst.props, &inst.stats, &inst.ctx);
        for alpha in [0.5, 0.8, 0.95] {
            let cfg = SearchConfig { alpha, ..Default::default() };
            let res = find_best_query(&inst.props, &inst.stats, &inst.ctx, &cfg).unwrap();
            assert!(res.objective >= alpha * best - 1e-12);
        }
    }
}

#[test]
fn shortest_equivalent_never_grows() {
    for seed in 600..640 {
        let inst = random_instance(seed);
        let mut r = rng(seed);
        for _ in 0..30 {
            let props: Vec<usize> = (0..inst.props.len()).filter(|_| r.gen_bool(0.4)).collect();
            let q = Query::from_props(props, &inst.props);
            let s = shortest_equivalent(&q, &inst.props);
            assert_eq!(s.extent, q.extent);
            assert!(s.len() <= q.len());
            assert_eq!(Query::from_props(s.props.clone(), &inst.props).extent, q.extent);
        }
    }
}

#[test]
fn bound_is_admissible_for_refinements() {
    for seed in 700..720 {
        let inst = random_instance(seed);
        let mut r = rng(seed);
        for _ in 0..30 {
            let base: Vec<usize> = (0..inst.props.len()).filter(|_| r.gen_bool(0.2)).collect();
            let q = Query::from_props(base.clone(), &inst.props);
            let bnd = tight_bound(&inst.stats.sort_extent(&q.extent), &inst.stats, &inst.ctx).unwrap().value;
            let mut more = base;
            more.extend((0..inst.props.len()).filter(|_| r.gen_bool(0.3)));
            let refined = Query::from_props(more, &inst.props);
            let obj = mask_gain(mask_of(&refined.extent), &inst.stats, &inst.ctx);
            assert!(bnd >= obj * (1.0 - 1e-12), "seed {seed}");
        }
    }
}
