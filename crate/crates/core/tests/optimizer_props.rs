use std::collections::BTreeSet;

use awarekit_core::attention::{PolarRequirementMap, SEGMENTS};
use awarekit_core::optimizer::{
    brute_force_optimal, is_relation_valid, AggregationMode, BruteForceError, ConfigForest,
    DynamicConstraints,
};
use awarekit_core::registry::{
    CategoryRequirement, CostModel, Coverage, ModuleDescriptor, ModuleId, ModuleType, PerformanceTable,
    Registry, RelationSet, SituationGate,
};
use awarekit_core::situation::Situation;
use awarekit_core::world::{SubSituation, ZoneTag};
use proptest::prelude::*;

const NON_SOURCE_CATEGORIES: [&str; 3] = ["trk", "pls", "fus"];
const ALL_CATEGORIES: [&str; 4] = ["od", "trk", "pls", "fus"];

#[derive(Debug, Clone)]
struct Case {
    registry: Registry,
    req: PolarRequirementMap,
    situation: Situation,
    constraints: DynamicConstraints,
    aggregation: AggregationMode,
    regions: usize,
}

fn coverage() -> impl Strategy<Value = Coverage> {
    prop_oneof![
        2 => Just(Coverage::full()),
        1 => (0u32..360, 10u32..=360, 5u32..=120).prop_map(|(start, span, range)| Coverage {
            angle_start_deg: start as f64,
            angle_span_deg: span as f64,
            range_m: range as f64,
        }),
        1 => (5u32..=120).prop_map(|range| Coverage { range_m: range as f64, ..Coverage::full() }),
    ]
}

fn performance() -> impl Strategy<Value = PerformanceTable> {
    (0u32..=10, 0u32..=10, 0u32..=10)
        .prop_map(|(h, r, u)| PerformanceTable::new(h as f64 * 0.1, r as f64 * 0.1, u as f64 * 0.1))
}

fn cost() -> impl Strategy<Value = CostModel> {
    prop_oneof![
        3 => (1u32..=100).prop_map(|c| CostModel::constant(c as f64 * 0.01)),
        1 => (1u32..=100, 0u32..=5).prop_map(|(c, k)| CostModel::per_item(c as f64 * 0.01, k as f64 * 0.001)),
    ]
}

fn gate() -> impl Strategy<Value = Option<Vec<SituationGate>>> {
    prop_oneof![
        4 => Just(None),
        1 => Just(Some(vec![SituationGate::sub(SubSituation::FollowDrive)])),
        1 => prop::sample::select(ZoneTag::ALL.to_vec())
            .prop_map(|z| Some(vec![SituationGate { location: Some(z), sub: None }])),
    ]
}

fn source(i: usize) -> impl Strategy<Value = ModuleDescriptor> {
    (coverage(), performance(), cost()).prop_map(move |(coverage, performance, cost)| ModuleDescriptor {
        id: format!("S{i}").as_str().into(),
        category: "od".into(),
        variant: None,
        module_type: ModuleType::Source,
        coverage,
        performance,
        cost,
        relations: RelationSet::default(),
    })
}

fn non_source(i: usize) -> impl Strategy<Value = ModuleDescriptor> {
    (
        0..NON_SOURCE_CATEGORIES.len(),
        prop::option::of(prop::sample::select(vec!["a", "b"])),
        coverage(),
        performance(),
        cost(),
        prop::collection::vec((0..ALL_CATEGORIES.len(), 1usize..=2), 0..=2),
        gate(),
    )
        .prop_map(move |(cat, variant, coverage, performance, cost, reqs, valid_only_in)| ModuleDescriptor {
            id: format!("N{i}").as_str().into(),
            category: NON_SOURCE_CATEGORIES[cat].into(),
            variant: variant.map(Into::into),
            module_type: ModuleType::NonSource,
            coverage,
            performance,
            cost,
            relations: RelationSet {
                requires_category: reqs
                    .into_iter()
                    .map(|(c, n)| CategoryRequirement { category: ALL_CATEGORIES[c].into(), min_count: n })
                    .collect(),
                valid_only_in,
                notes: String::new(),
            },
        })
}

fn registry() -> impl Strategy<Value = Registry> {
    (1usize..=3, 0usize..=5)
        .prop_flat_map(|(s, n)| {
            let sources: Vec<_> = (0..s).map(source).collect();
            let others: Vec<_> = (0..n).map(non_source).collect();
            (sources, others)
        })
        .prop_map(|(sources, others)| {
            let mut r = Registry::new();
            for m in sources.into_iter().chain(others) {
                r.register_module(m).unwrap();
            }
            r
        })
}

fn requirement() -> impl Strategy<Value = PolarRequirementMap> {
    prop_oneof![
        1 => (1u32..=6, 1u32..=100).prop_map(|(p, d)| PolarRequirementMap::uniform(p as f64 * 0.5, d as f64)),
        3 => prop::collection::vec((0..SEGMENTS, 0u32..=6, 0u32..=100), 0..=12).prop_map(|cells| {
            let mut req = PolarRequirementMap::empty();
            for (s, p, d) in cells {
                req.set(s, p as f64 * 0.5, d as f64);
            }
            req
        }),
    ]
}

fn situation() -> impl Strategy<Value = Situation> {
    (prop::sample::select(ZoneTag::ALL.to_vec()), any::<bool>(), any::<bool>()).prop_map(|(z, f, c)| {
        let mut s = Situation::new(z);
        if f {
            s = s.with(SubSituation::FollowDrive);
        }
        if c {
            s = s.with(SubSituation::ComplexIntersection);
        }
        s
    })
}

fn case() -> impl Strategy<Value = Case> {
    (
        registry(),
        requirement(),
        situation(),
        any::<bool>(),
        prop::option::of(0usize..8),
        prop_oneof![Just(AggregationMode::SourceCapped), Just(AggregationMode::PlainAdditive)],
        0usize..2000,
    )
        .prop_map(|(registry, req, situation, two_od, forbid, aggregation, regions)| {
            let ids = registry.ids();
            let mut constraints = DynamicConstraints::none();
            if two_od {
                constraints = constraints.require_category("od", 2);
            }
            if let Some(k) = forbid {
                if let Some(id) = ids.get(k) {
                    constraints = constraints.forbid(id.as_str()).unwrap();
                }
            }
            Case { registry, req, situation, constraints, aggregation, regions }
        })
}

fn forest_select(c: &Case) -> Result<(Vec<ModuleId>, f64), ()> {
    let mut forest = ConfigForest::build(&c.registry, c.aggregation);
    forest.update_for_situation(&c.registry, &c.situation, c.regions);
    forest.apply_constraints(&c.registry, &c.constraints);
    forest.select_optimal(&c.req).map(|cfg| (cfg.modules, cfg.cost)).map_err(|_| ())
}

fn oracle_select(c: &Case) -> Result<(Vec<ModuleId>, f64), ()> {
    match brute_force_optimal(&c.registry, &c.req, &c.situation, &c.constraints, c.aggregation, c.regions) {
        Ok(cfg) => Ok((cfg.modules, cfg.cost)),
        Err(BruteForceError::Infeasible) => Err(()),
        Err(e) => panic!("{e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn forest_search_matches_exhaustive_search(c in case()) {
        prop_assert_eq!(forest_select(&c), oracle_select(&c));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn forest_holds_exactly_the_valid_subsets(r in registry()) {
        let forest = ConfigForest::build(&r, AggregationMode::SourceCapped);
        let nodes: Vec<Vec<ModuleId>> = forest.nodes().iter().map(|n| n.modules.clone()).collect();
        let unique: BTreeSet<_> = nodes.iter().cloned().collect();
        prop_assert_eq!(unique.len(), nodes.len());

        let all: Vec<&ModuleDescriptor> = r.modules().collect();
        let mut expected = BTreeSet::new();
        for mask in 1u32..(1 << all.len()) {
            let members: Vec<&ModuleDescriptor> =
                (0..all.len()).filter(|i| mask & (1 << i) != 0).map(|i| all[i]).collect();
            if is_relation_valid(&members) {
                expected.insert(members.iter().map(|m| m.id.clone()).collect::<Vec<_>>());
            }
        }
        prop_assert_eq!(unique, expected);

        for (i, n) in forest.nodes().iter().enumerate() {
            match n.parent {
                Some(p) => {
                    let parent = &forest.nodes()[p].modules;
                    prop_assert!(parent.iter().all(|m| n.modules.contains(m)));
                    prop_assert_eq!(parent.len() + 1, n.modules.len());
                }
                None => prop_assert!(forest.roots().contains(&i)),
            }
        }
    }

    #[test]
    fn forbidding_a_module_never_lowers_the_optimum(c in case(), k in 0usize..8) {
        let ids = c.registry.ids();
        prop_assume!(k < ids.len());
        let before = forest_select(&c);
        let mut blacklist = c.constraints.blacklist().clone();
        blacklist.insert(ids[k].clone());
        let tighter = Case {
            constraints: DynamicConstraints::new(c.constraints.whitelist().to_vec(), blacklist).unwrap(),
            ..c.clone()
        };
        match (before, forest_select(&tighter)) {
            (Ok((_, a)), Ok((_, b))) => prop_assert!(b >= a),
            (Err(()), after) => prop_assert!(after.is_err()),
            (Ok(_), Err(())) => {}
        }
    }

    #[test]
    fn raising_a_requirement_never_lowers_the_optimum(c in case(), seg in 0..SEGMENTS, bump in 1u32..=4) {
        let before = forest_select(&c);
        let mut req = c.req.clone();
        let d = if req.p_req(seg) > 0.0 { req.d_req(seg) } else { 1.0 };
        req.set(seg, req.p_req(seg) + bump as f64 * 0.5, d);
        let raised = Case { req, ..c.clone() };
        match (before, forest_select(&raised)) {
            (Ok((_, a)), Ok((_, b))) => prop_assert!(b >= a),
            (Err(()), after) => prop_assert!(after.is_err()),
            (Ok(_), Err(())) => {}
        }
    }

    #[test]
    fn selected_cost_is_the_member_sum(c in case()) {
        if let Ok((ids, cost)) = forest_select(&c) {
            let sum = ids
                .iter()
                .map(|id| c.registry.get(id).unwrap().cost_for(c.regions))
                .fold(0.0, |acc, v| acc + v);
            prop_assert_eq!(cost, sum);
        }
    }

    #[test]
    fn scaling_costs_keeps_the_selected_set(c in case(), k in 1i32..=6, up in any::<bool>()) {
        let lambda = if up { 2f64.powi(k) } else { 2f64.powi(-k) };
        let mut scaled = Registry::new();
        for m in c.registry.modules() {
            let mut m = m.clone();
            m.cost = CostModel { base: m.cost.base * lambda, per_item: m.cost.per_item * lambda, ..m.cost };
            scaled.register_module(m).unwrap();
        }
        let a = forest_select(&c).map(|(ids, _)| ids);
        let b = forest_select(&Case { registry: scaled, ..c.clone() }).map(|(ids, _)| ids);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn reference_catalog_agrees_with_exhaustive_search() {
    let r = Registry::reference();
    let none = DynamicConstraints::none();
    for z in ZoneTag::ALL {
        for p in [2.0, 3.0] {
            let s = Situation::new(z);
            let req = PolarRequirementMap::uniform(p, 70.0);
            let c = Case {
                registry: r.clone(),
                req,
                situation: s,
                constraints: none.clone(),
                aggregation: AggregationMode::SourceCapped,
                regions: 0,
            };
            assert_eq!(forest_select(&c), oracle_select(&c), "{z:?} {p}");
        }
    }
}
