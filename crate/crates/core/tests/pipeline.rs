mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use common::Records;
use echodet::graph::{weakly_connected_components, GraphBuilder};
use echodet::ingest::{generate_synthetic, ChamberSpec, Dataset, SyntheticConfig, TrustLabel};
use echodet::pipeline::{
    aggregate_flow, clustering_report, detect_dico, detect_echo_chambers, detect_nec, purity,
    run_all, trust_histogram, Chamber, CountingMode, DicoAssignment, EchoChamberSet, Groups,
    NecAssignment, NecLayer, PipelineConfig, OUTSIDE_GROUP,
};
use echodet::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(shuffles: usize, seed: u64) -> PipelineConfig {
    PipelineConfig {
        shuffles,
        seed,
        ..Default::default()
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Two camps, each with two verified hubs and 100 unverified users who
/// retweet their own hubs; a retweet lands on the other camp with
/// probability `cross`.
fn two_camp_records(seed: u64, cross: f64) -> Records {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Records::new();
    let hubs = [["a0", "a1"], ["b0", "b1"]];
    for camp in hubs {
        for h in camp {
            r.verified_tweet(h, &[]);
        }
    }
    for (c, camp) in hubs.iter().enumerate() {
        for k in 0..100 {
            let user = format!("u{c}_{k}");
            let mut targets: Vec<&str> =
                camp.iter().copied().filter(|_| rng.gen_bool(0.8)).collect();
            if targets.is_empty() {
                targets.push(camp[rng.gen_range(0..2)]);
            }
            for t in targets {
                let t = if rng.gen_bool(cross) {
                    hubs[1 - c][rng.gen_range(0..2)]
                } else {
                    t
                };
                r.retweet(&user, t);
            }
        }
    }
    r
}

#[test]
fn dico_recovers_two_camps() {
    for seed in 0..5 {
        let d = two_camp_records(seed, 0.01).dataset();
        let dico = detect_dico(&d, &config(20, seed)).unwrap();
        assert_eq!(dico.dico_ids().len(), 2, "seed {seed}");
        let (a, b) = (dico.dico_of("a0").unwrap(), dico.dico_of("b0").unwrap());
        assert_ne!(a, b);
        assert_eq!(dico.dico_of("a1"), Some(a));
        assert_eq!(dico.dico_of("b1"), Some(b));
        let correct = (0..100)
            .filter(|k| dico.dico_of(&format!("u0_{k}")) == Some(a))
            .chain((0..100).filter(|k| dico.dico_of(&format!("u1_{k}")) == Some(b)))
            .count();
        assert!(correct >= 190, "seed {seed}: {correct}/200");
    }
}

fn assert_stats_consistent(d: &Dataset, dico: &DicoAssignment) {
    let stats = dico.stats();
    assert_eq!(stats.last().unwrap().dico, "none");
    assert_eq!(stats.iter().map(|s| s.users).sum::<usize>(), d.user_count());
    assert_eq!(
        stats.iter().map(|s| s.verified_users).sum::<usize>(),
        d.verified_count()
    );
    assert_eq!(
        stats.iter().map(|s| s.tweets).sum::<usize>(),
        d.tweet_count()
    );
    assert_eq!(
        stats.iter().map(|s| s.retweets).sum::<usize>(),
        d.retweet_count()
    );
    let unassigned = dico.labels().iter().filter(|l| l.is_none()).count();
    assert_eq!(stats.last().unwrap().users, unassigned);
}

#[test]
fn dico_stats_sum_to_dataset_totals() {
    let d = two_camp_records(3, 0.01).dataset();
    let dico = detect_dico(&d, &config(10, 3)).unwrap();
    assert_stats_consistent(&d, &dico);
    let core = dico.verified_core().unwrap();
    for (v, _) in core.iter() {
        assert!(dico.dico_of(v).is_some());
    }
}

#[test]
fn dico_without_signal_does_not_crash() {
    let mut r = Records::new();
    let verified = ["v0", "v1", "v2", "v3"];
    for v in verified {
        r.verified_tweet(v, &[]);
    }
    for k in 0..30 {
        for v in verified {
            r.retweet(&format!("u{k}"), v);
        }
    }
    let d = r.dataset();
    let dico = detect_dico(&d, &config(10, 0)).unwrap();
    assert!(dico.dico_ids().len() <= 1);
    assert_stats_consistent(&d, &dico);
}

#[test]
fn dico_needs_verified_users() {
    let mut r = Records::new();
    r.tweet("a", &[]).retweet("b", "a");
    assert!(matches!(
        detect_dico(&r.dataset(), &config(1, 0)),
        Err(Error::NoSeedLayer)
    ));
}

/// Three users who all share the same five URLs, plus 50 users who each
/// share one URL drawn from a pool of 200, with or without replacement.
fn nec_fixture(seed: u64, replacement: bool) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Records::new();
    let core: Vec<String> = (0..5)
        .map(|k| format!("https://core.example.org/item/{k}"))
        .collect();
    let core: Vec<&str> = core.iter().map(String::as_str).collect();
    for u in ["c0", "c1", "c2"] {
        for url in &core {
            r.tweet(u, &[url]);
        }
    }
    let mut pool: Vec<usize> = (0..200).collect();
    pool.shuffle(&mut rng);
    for k in 0..50 {
        let pick = if replacement {
            rng.gen_range(0..200)
        } else {
            pool[k]
        };
        r.tweet(
            &format!("n{k}"),
            &[&format!("https://pool.example.com/p/{pick}")],
        );
    }
    r.dataset()
}

#[test]
fn nec_on_users_finds_the_co_sharing_trio() {
    for seed in 0..5 {
        let d = nec_fixture(seed, false);
        let nec = detect_nec(&d, NecLayer::Users, &config(10, seed)).unwrap();
        assert_eq!(nec.nec_count(), 1, "seed {seed}");
        let members: Vec<&String> = nec.members().keys().collect();
        assert_eq!(members, ["c0", "c1", "c2"]);
        assert_eq!(nec.validated_members(), 3);
        assert_eq!(nec.non_validated_members(), 50);
        assert_eq!(nec.summaries()[0].shares, 15);
    }
}

#[test]
fn nec_on_urls_finds_the_co_shared_urls() {
    for seed in 0..5 {
        let d = nec_fixture(seed, false);
        let nec = detect_nec(&d, NecLayer::Urls, &config(10, seed)).unwrap();
        assert_eq!(nec.nec_count(), 1, "seed {seed}");
        let expected: Vec<String> = (0..5)
            .map(|k| format!("https://core.example.org/item/{k}"))
            .collect();
        let members: Vec<String> = nec.members().keys().cloned().collect();
        assert_eq!(members, expected);
        assert_eq!(nec.non_validated_members(), d.url_count() - 5);
    }
}

// With replacement, noise users colliding on a URL co-occur once at p ≈ 0.025
// and pass the correction inside the small co-occurring family. The trio
// still forms a NEC of its own.
#[test]
fn colliding_noise_users_do_not_join_the_trio() {
    for seed in 0..5 {
        let d = nec_fixture(seed, true);
        let nec = detect_nec(&d, NecLayer::Users, &config(10, seed)).unwrap();
        let groups = nec.groups();
        let trio = nec.nec_of("c0").unwrap();
        assert_eq!(groups[&trio], strings(&["c0", "c1", "c2"]));
        let url_of = |u: &str| {
            d.shares()
                .iter()
                .find(|s| d.user_id(s.user) == u)
                .map(|s| s.url)
        };
        for (id, members) in groups.iter().filter(|(id, _)| **id != trio) {
            let shared: BTreeSet<_> = members.iter().map(|m| url_of(m)).collect();
            assert_eq!(
                shared.len(),
                1,
                "seed {seed}: NEC {id} is not one shared URL"
            );
        }
    }
}

#[test]
fn nec_with_empty_projection_is_empty() {
    let mut r = Records::new();
    for k in 0..10 {
        r.tweet(&format!("u{k}"), &[&format!("https://site{k}.com/x")]);
    }
    let d = r.dataset();
    let nec = detect_nec(&d, NecLayer::Users, &config(5, 0)).unwrap();
    assert_eq!(nec.nec_count(), 0);
    assert_eq!(nec.validated_members(), 0);
    assert_eq!(nec.non_validated_members(), 10);
    assert!(nec.partition().is_none());
}

#[test]
fn nec_needs_shares() {
    let mut r = Records::new();
    r.tweet("a", &[]).retweet("b", "a");
    assert!(matches!(
        detect_nec(&r.dataset(), NecLayer::Users, &config(1, 0)),
        Err(Error::NoUrlShares)
    ));
}

fn single_dico(d: &Dataset, users: &[&str]) -> DicoAssignment {
    DicoAssignment::from_labels(d, users.iter().map(|u| (*u, 0))).unwrap()
}

fn single_nec(d: &Dataset, users: &[&str]) -> NecAssignment {
    NecAssignment::from_groups(d, NecLayer::Users, users.iter().map(|u| (*u, 0))).unwrap()
}

#[test]
fn retweet_chain_is_one_chamber() {
    let mut r = Records::new();
    let users = ["u1", "u2", "u3", "u4", "u5"];
    for w in users.windows(2) {
        r.retweet(w[0], w[1]);
    }
    let d = r.dataset();
    let set = detect_echo_chambers(&d, &single_dico(&d, &users), &single_nec(&d, &users)).unwrap();
    assert_eq!(set.chambers.len(), 1);
    let c = &set.chambers[0];
    assert_eq!(c.members, strings(&users));
    assert_eq!(
        (c.id.as_str(), c.nec, c.dico, c.internal_edges),
        ("0", 0, 0, 4)
    );
    assert!(set.excluded_members.is_empty());
}

#[test]
fn nec_without_internal_retweets_has_no_chamber() {
    let mut r = Records::new();
    let users = ["u1", "u2", "u3", "u4"];
    for u in users {
        r.retweet(u, "outsider");
    }
    let d = r.dataset();
    let set = detect_echo_chambers(&d, &single_dico(&d, &users), &single_nec(&d, &users)).unwrap();
    assert!(set.is_empty());
    assert_eq!(set.excluded_members, strings(&users));
}

/// Components by breadth-first search over an explicit undirected edge list.
fn flood_fill(nodes: &[&str], edges: &[(&str, &str)]) -> BTreeSet<Vec<String>> {
    let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
    for &(a, b) in edges {
        if nodes.contains(&a) && nodes.contains(&b) {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = BTreeSet::new();
    for &start in nodes {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start.to_string()];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in adj.get(v).into_iter().flatten() {
                if seen.insert(w) {
                    comp.push(w.to_string());
                    queue.push_back(w);
                }
            }
        }
        comp.sort();
        out.insert(comp);
    }
    out
}

#[test]
fn nec_split_across_dicos_gives_one_chamber_per_dico() {
    let edges = [
        ("a1", "a2"),
        ("a3", "a2"),
        ("a4", "a1"),
        ("b1", "b2"),
        ("a4", "b1"),
        ("x", "a3"),
    ];
    let mut r = Records::new();
    for (s, t) in edges {
        r.retweet(s, t);
    }
    let d = r.dataset();
    let dicos = DicoAssignment::from_labels(
        &d,
        [
            ("a1", 0),
            ("a2", 0),
            ("a3", 0),
            ("a4", 0),
            ("b1", 1),
            ("b2", 1),
            ("x", 0),
        ],
    )
    .unwrap();
    let nec_users = ["a1", "a2", "a3", "a4", "b1", "b2"];
    let set = detect_echo_chambers(&d, &dicos, &single_nec(&d, &nec_users)).unwrap();
    let found: BTreeSet<(usize, Vec<String>)> = set
        .chambers
        .iter()
        .map(|c| (c.dico, c.members.clone()))
        .collect();
    let mut expected = BTreeSet::new();
    for (dico, part) in [(0, &nec_users[..4]), (1, &nec_users[4..])] {
        for comp in flood_fill(part, &edges) {
            expected.insert((dico, comp));
        }
    }
    assert_eq!(found, expected);
    let ids: BTreeSet<&str> = set.chambers.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(ids, BTreeSet::from(["0.0", "0.1"]));
    assert!(set.chambers.iter().all(|c| c.nec == 0));
}

#[test]
fn users_without_dico_never_enter_chambers() {
    let mut r = Records::new();
    r.retweet("a", "b").retweet("b", "c");
    let d = r.dataset();
    let dicos = DicoAssignment::from_labels(&d, [("a", 0), ("b", 0)]).unwrap();
    let set = detect_echo_chambers(&d, &dicos, &single_nec(&d, &["a", "b", "c"])).unwrap();
    assert_eq!(set.chambers.len(), 1);
    assert_eq!(set.chambers[0].members, strings(&["a", "b"]));
    assert_eq!(set.excluded_members, strings(&["c"]));
}

#[test]
fn chambers_need_user_necs() {
    let mut r = Records::new();
    r.tweet("a", &["https://x.com/1"]);
    let d = r.dataset();
    let urls = NecAssignment::from_groups(&d, NecLayer::Urls, [("https://x.com/1", 0)]).unwrap();
    assert!(detect_echo_chambers(&d, &single_dico(&d, &["a"]), &urls).is_err());
}

fn chamber(id: &str, dico: usize, members: &[&str]) -> Chamber {
    Chamber {
        id: id.to_string(),
        nec: 0,
        dico,
        members: strings(members),
        internal_edges: 0,
        internal_retweets: 0,
    }
}

fn chamber_set(chambers: Vec<Chamber>) -> EchoChamberSet {
    EchoChamberSet {
        chambers,
        excluded_members: Vec::new(),
    }
}

/// A sparse DiCo of 30 users on a ring, plus `extra` edges among the first
/// users.
fn sparse_dico_with(extra: &[(&str, &str)]) -> (Dataset, Vec<String>) {
    let mut r = Records::new();
    let users: Vec<String> = (0..30).map(|k| format!("u{k:02}")).collect();
    for k in 0..30 {
        r.retweet(&users[k], &users[(k + 1) % 30]);
    }
    for (s, t) in extra {
        r.retweet(s, t);
    }
    (r.dataset(), users)
}

#[test]
fn triangle_chamber_beats_the_benchmark() {
    let (d, users) = sparse_dico_with(&[("u00", "u02")]);
    let dicos = DicoAssignment::from_labels(&d, users.iter().map(|u| (u, 0))).unwrap();
    let set = chamber_set(vec![chamber("0", 0, &["u00", "u01", "u02"])]);
    let report = clustering_report(&set, &dicos, d.retweet_graph()).unwrap();
    assert_eq!(report.chambers[0].mean, 1.0);
    assert!(report.benchmarks[&0] < 1.0);
    assert_eq!(report.benchmark_sizes[&0], 30);
    assert_eq!(report.pooled, 1.0);
}

#[test]
fn star_chamber_has_zero_clustering() {
    let (d, users) = sparse_dico_with(&[("u05", "u00"), ("u10", "u00"), ("u15", "u00")]);
    let dicos = DicoAssignment::from_labels(&d, users.iter().map(|u| (u, 0))).unwrap();
    let set = chamber_set(vec![chamber("0", 0, &["u00", "u05", "u10", "u15"])]);
    let report = clustering_report(&set, &dicos, d.retweet_graph()).unwrap();
    assert_eq!(report.chambers[0].mean, 0.0);
}

#[test]
fn clustering_report_needs_chambers() {
    let (d, users) = sparse_dico_with(&[]);
    let dicos = DicoAssignment::from_labels(&d, users.iter().map(|u| (u, 0))).unwrap();
    assert!(clustering_report(&EchoChamberSet::default(), &dicos, d.retweet_graph()).is_err());
}

#[test]
fn dense_planted_chamber_is_more_clustered() {
    let seeds = 40;
    let mut wins = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 120;
        let size = 15;
        let users: Vec<String> = (0..n).map(|k| format!("u{k:03}")).collect();
        let mut r = Records::new();
        for i in 0..n {
            for j in 0..n {
                let p = if i < size && j < size { 0.6 } else { 0.05 };
                if i != j && rng.gen_bool(p) {
                    r.retweet(&users[i], &users[j]);
                }
            }
        }
        let d = r.dataset();
        let dicos = DicoAssignment::from_labels(&d, users.iter().map(|u| (u, 0))).unwrap();
        let members: Vec<&str> = users[..size].iter().map(String::as_str).collect();
        let set = chamber_set(vec![chamber("0", 0, &members)]);
        let report = clustering_report(&set, &dicos, d.retweet_graph()).unwrap();
        if report.chambers[0].mean >= 3.0 * report.benchmarks[&0] {
            wins += 1;
        }
    }
    assert!(wins as f64 >= 0.95 * seeds as f64, "{wins}/{seeds}");
}

#[test]
fn flow_between_two_chambers() {
    let mut b = GraphBuilder::new();
    b.add_edge("a1", "b1", 2).unwrap();
    b.add_edge("a2", "b1", 1).unwrap();
    b.add_edge("a1", "a2", 4).unwrap();
    b.add_edge("z", "a1", 5).unwrap();
    let g = b.build();
    let set = chamber_set(vec![
        chamber("0", 0, &["a1", "a2"]),
        chamber("1", 0, &["b1"]),
    ]);
    let flow = aggregate_flow(&g, &set, 0);
    assert_eq!(flow.weight("0", "1"), 3);
    assert_eq!(flow.weight("0", "0"), 4);
    assert_eq!(flow.weight(OUTSIDE_GROUP, "0"), 5);
    assert_eq!(flow.total_weight(), g.total_weight());

    let filtered = aggregate_flow(&g, &set, 100);
    assert_eq!(filtered.edge_count(), 0);
    let ids: Vec<&str> = filtered.ids().collect();
    assert_eq!(ids, ["0", "1", OUTSIDE_GROUP]);
}

fn label_fixture() -> Records {
    let mut r = Records::new();
    r.tweet(
        "g1",
        &[
            "https://www.bad.com/1",
            "https://www.bad.com/2",
            "https://bad.org/3",
            "https://good.com/4",
        ],
    );
    r.tweet("g2", &["https://good.com/t"; 1]);
    for _ in 0..9 {
        r.retweet_with("g2", "g1", &["https://good.com/t"]);
    }
    r.tweet(
        "other",
        &[
            "https://www.social.net/p",
            "https://unknown.net/a",
            "https://good.com/4",
        ],
    );
    r
}

fn labeled() -> Dataset {
    label_fixture().labeled(&[
        ("bad.com", TrustLabel::NotTrustworthy),
        ("bad.org", TrustLabel::NotTrustworthy),
        ("good.com", TrustLabel::Trustworthy),
        ("social.net", TrustLabel::Platform),
    ])
}

fn user_groups(groups: &[(&str, &[&str])]) -> Groups {
    Groups::Users(
        groups
            .iter()
            .map(|(g, m)| (g.to_string(), strings(m)))
            .collect(),
    )
}

#[test]
fn purity_of_three_untrusted_and_one_trusted_url() {
    let d = labeled();
    let report = purity(&user_groups(&[("g", &["g1"])]), &d, CountingMode::Distinct).unwrap();
    let p = report.groups[0].purity.unwrap();
    assert_eq!((p.n, p.t, p.unc), (0.75, 0.25, 0.0));
}

#[test]
fn purity_with_multiplicity_counts_every_share() {
    let d = labeled();
    let report = purity(
        &user_groups(&[("g", &["g2"])]),
        &d,
        CountingMode::Multiplicity,
    )
    .unwrap();
    let g = &report.groups[0];
    assert_eq!(g.counts.t, 10);
    assert_eq!(g.counts.total(), 10);
    assert_eq!(g.purity.unwrap().t, 1.0);
    let distinct = purity(&user_groups(&[("g", &["g2"])]), &d, CountingMode::Distinct).unwrap();
    assert_eq!(distinct.groups[0].counts.t, 1);
}

#[test]
fn platform_urls_feed_necs_but_not_purity() {
    let d = labeled();
    let social = "https://www.social.net/p";
    assert!(d.url_index(social).is_some());
    let nec = NecAssignment::from_groups(&d, NecLayer::Urls, [(social, 0)]).unwrap();
    assert_eq!(nec.summaries()[0].shares, 1);
    let report = purity(
        &user_groups(&[("g", &["other"])]),
        &d,
        CountingMode::Distinct,
    )
    .unwrap();
    let c = report.groups[0].counts;
    assert_eq!((c.t, c.n, c.unc, c.excluded), (1, 0, 1, 1));
    assert_eq!(report.groups[0].purity.unwrap().t, 0.5);
}

#[test]
fn pooled_and_complement_purity() {
    let d = labeled();
    let report = purity(
        &user_groups(&[("a", &["g1"]), ("b", &["g2"])]),
        &d,
        CountingMode::Multiplicity,
    )
    .unwrap();
    let pooled = report.pooled.counts;
    assert_eq!((pooled.t, pooled.n, pooled.unc), (11, 3, 0));
    let complement = report.complement.counts;
    assert_eq!(
        (
            complement.t,
            complement.n,
            complement.unc,
            complement.excluded
        ),
        (1, 0, 1, 1)
    );
    // share-weighted mean of the group purities
    let weighted: f64 = report
        .groups
        .iter()
        .map(|g| g.purity.unwrap().n * g.counts.total() as f64)
        .sum::<f64>()
        / pooled.total() as f64;
    assert!((weighted - report.pooled.purity.unwrap().n).abs() < 1e-15);
}

#[test]
fn purity_rejects_unknown_members() {
    let d = labeled();
    assert!(matches!(
        purity(
            &user_groups(&[("g", &["ghost"])]),
            &d,
            CountingMode::Distinct
        ),
        Err(Error::UnknownMember { .. })
    ));
    let urls = Groups::Urls(BTreeMap::from([(
        "g".to_string(),
        strings(&["https://nowhere.org/"]),
    )]));
    assert!(purity(&urls, &d, CountingMode::Distinct).is_err());
}

#[test]
fn group_without_counted_urls_has_no_purity() {
    let d = labeled();
    let report = purity(&user_groups(&[("g", &[])]), &d, CountingMode::Distinct).unwrap();
    assert!(report.groups[0].purity.is_none());
}

#[test]
fn histogram_of_a_single_group() {
    let mut r = Records::new();
    r.tweet("a", &["https://t.com/1", "https://t.com/2"])
        .tweet("b", &["https://n.com/1"]);
    let d = r.labeled(&[
        ("t.com", TrustLabel::Trustworthy),
        ("n.com", TrustLabel::NotTrustworthy),
    ]);
    let rows =
        trust_histogram(&d, &[("g".to_string(), user_groups(&[("x", &["a", "b"])]))]).unwrap();
    let counts: BTreeMap<&str, usize> = rows
        .iter()
        .filter(|r| r.grouping == "g")
        .map(|r| (r.label.as_str(), r.shares))
        .collect();
    assert_eq!(counts, BTreeMap::from([("N", 1), ("T", 2), ("UNC", 0)]));
}

#[test]
fn histogram_counts_shared_url_once_per_group() {
    let mut r = Records::new();
    r.tweet("a", &["https://u.com/1"])
        .tweet("a", &["https://u.com/1"])
        .tweet("b", &["https://u.com/1"]);
    let d = r.dataset();
    let groups = user_groups(&[("x", &["a"]), ("y", &["b"])]);
    let rows = trust_histogram(&d, &[("g".to_string(), groups)]).unwrap();
    let unc: Vec<(&str, usize, usize)> = rows
        .iter()
        .filter(|r| r.grouping == "g" && r.label == "UNC")
        .map(|r| (r.group.as_str(), r.shares, r.distinct_urls))
        .collect();
    assert_eq!(unc, [("x", 2, 1), ("y", 1, 1)]);
}

#[test]
fn histogram_matches_flat_scan() {
    let corpus = generate_synthetic(&SyntheticConfig::two_chambers(20, 5)).unwrap();
    let d = &corpus.dataset;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut users: Vec<String> = d.users().map(|(u, _)| u.to_string()).collect();
    users.shuffle(&mut rng);
    let groups: BTreeMap<String, Vec<String>> = users[..90]
        .chunks(30)
        .enumerate()
        .map(|(k, c)| (k.to_string(), c.to_vec()))
        .collect();
    let rows = trust_histogram(d, &[("g".to_string(), Groups::Users(groups.clone()))]).unwrap();

    // linear rescan of the raw records
    for (name, members) in &groups {
        let mut shares: HashMap<&str, usize> = HashMap::new();
        let mut distinct: HashMap<&str, BTreeSet<String>> = HashMap::new();
        for rec in d
            .records()
            .iter()
            .filter(|rec| members.contains(&rec.user_id))
        {
            for raw in &rec.urls {
                let canonical = echodet::ingest::canonicalize_url(
                    raw,
                    &echodet::ingest::Canonicalizer::new(Box::new(corpus.url_map.clone())),
                )
                .unwrap()
                .url;
                let label = match corpus
                    .labels
                    .get(&echodet::ingest::extract_domain(&canonical).unwrap())
                {
                    TrustLabel::Trustworthy => "T",
                    TrustLabel::NotTrustworthy => "N",
                    TrustLabel::Unclassified => "UNC",
                    _ => continue,
                };
                *shares.entry(label).or_default() += 1;
                distinct.entry(label).or_default().insert(canonical);
            }
        }
        for row in rows
            .iter()
            .filter(|r| r.grouping == "g" && &r.group == name)
        {
            assert_eq!(
                row.shares,
                shares.get(row.label.as_str()).copied().unwrap_or(0)
            );
            assert_eq!(
                row.distinct_urls,
                distinct.get(row.label.as_str()).map_or(0, BTreeSet::len)
            );
        }
    }
    let whole: usize = rows
        .iter()
        .filter(|r| r.grouping == "dataset")
        .map(|r| r.shares)
        .sum();
    let counted = d
        .shares()
        .iter()
        .filter(|s| d.url(s.url).1.label.counts_for_trust())
        .count();
    assert_eq!(whole, counted);
}

#[test]
fn chamber_without_internal_retweets_is_excluded() {
    // background retweets would connect NEC members by chance
    let mut cfg = SyntheticConfig {
        seed: 2,
        background_retweets: 0,
        ..SyntheticConfig::default()
    };
    cfg.chambers = vec![ChamberSpec {
        internal_retweet_prob: 0.0,
        ..ChamberSpec::new(0, 20)
    }];
    let corpus = generate_synthetic(&cfg).unwrap();
    let planted = &corpus.manifest.necs[0].members;
    let result = run_all(&corpus.dataset, &config(10, 2)).unwrap();
    let found: BTreeSet<&String> = result.user_necs.members().keys().collect();
    assert!(planted.iter().filter(|m| found.contains(m)).count() >= 18);
    let membership = result.chambers.membership();
    assert!(planted.iter().all(|m| !membership.contains_key(m.as_str())));
    assert!(planted
        .iter()
        .filter(|m| found.contains(m))
        .all(|m| result.chambers.excluded_members.contains(m)));
}

#[test]
fn run_all_recovers_planted_chambers() {
    let corpus = generate_synthetic(&SyntheticConfig::two_chambers(20, 7)).unwrap();
    let result = run_all(&corpus.dataset, &config(20, 7)).unwrap();
    for planted in &corpus.manifest.chambers {
        let best = result
            .chambers
            .chambers
            .iter()
            .map(|c| common::f1(&c.members, &planted.members))
            .fold(0.0, f64::max);
        assert!(best >= 0.9, "{best}");
    }
    for c in &result.chambers.chambers {
        let sub = corpus.dataset.retweet_graph().induced_subgraph(&c.members);
        assert_eq!(weakly_connected_components(&sub).len(), 1);
    }
    assert!(result.clustering.is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_conserves_weight(
        edges in prop::collection::vec((0usize..25, 0usize..25, 1u64..20), 1..120),
        groups in prop::collection::vec(0usize..4, 25),
        min_weight in 0u64..50,
    ) {
        let mut b = GraphBuilder::new();
        for (s, t, w) in &edges {
            if s != t {
                b.add_edge(&format!("n{s}"), &format!("n{t}"), *w).unwrap();
            }
        }
        let g = b.build();
        // group 0 stays outside
        let mut by_group: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (i, &grp) in groups.iter().enumerate() {
            if grp > 0 && g.contains(&format!("n{i}")) {
                by_group.entry(grp).or_default().push(format!("n{i}"));
            }
        }
        let set = chamber_set(by_group.iter().map(|(k, m)| Chamber {
            id: k.to_string(), nec: *k, dico: 0, members: m.clone(), internal_edges: 0, internal_retweets: 0,
        }).collect());
        let all = aggregate_flow(&g, &set, 0);
        prop_assert_eq!(all.total_weight(), g.total_weight());
        let filtered = aggregate_flow(&g, &set, min_weight);
        prop_assert!(filtered.edges().all(|(_, _, w)| w >= min_weight));
        prop_assert_eq!(filtered.node_count(), set.chambers.len() + 1);
        for (s, t, w) in filtered.edges() {
            prop_assert_eq!(all.weight(filtered.id(s), filtered.id(t)), w);
        }
    }

    #[test]
    fn purity_lies_on_the_simplex(
        shares in prop::collection::vec((0usize..8, 0usize..12), 1..80),
        split in 1usize..7,
        labels in prop::collection::vec(0u8..5, 12),
    ) {
        let mut r = Records::new();
        for (u, url) in &shares {
            r.tweet(&format!("u{u}"), &[&format!("https://d{url}.com/x")]);
        }
        let table: Vec<(String, TrustLabel)> = labels.iter().enumerate().map(|(k, l)| {
            let label = [TrustLabel::Trustworthy, TrustLabel::NotTrustworthy, TrustLabel::Unclassified,
                TrustLabel::Platform, TrustLabel::Satire][*l as usize];
            (format!("d{k}.com"), label)
        }).collect();
        let table: Vec<(&str, TrustLabel)> = table.iter().map(|(d, l)| (d.as_str(), *l)).collect();
        let d = r.labeled(&table);
        let users: Vec<String> = d.users().map(|(u, _)| u.to_string()).collect();
        let cut = split.min(users.len());
        let groups = Groups::Users(BTreeMap::from([
            ("a".to_string(), users[..cut].to_vec()),
            ("b".to_string(), users[cut..].to_vec()),
        ]));
        for mode in [CountingMode::Distinct, CountingMode::Multiplicity] {
            let report = purity(&groups, &d, mode).unwrap();
            for g in report.groups.iter().chain([&report.pooled, &report.complement]) {
                if let Some(p) = g.purity {
                    prop_assert_eq!(p.t + p.n + p.unc, 1.0);
                    prop_assert!(p.t >= 0.0 && p.n >= 0.0 && p.unc >= 0.0);
                } else {
                    prop_assert_eq!(g.counts.total(), 0);
                }
            }
            let mut sum = [0usize; 4];
            for g in &report.groups {
                sum[0] += g.counts.t;
                sum[1] += g.counts.n;
                sum[2] += g.counts.unc;
                sum[3] += g.counts.excluded;
            }
            let p = report.pooled.counts;
            prop_assert_eq!(sum, [p.t, p.n, p.unc, p.excluded]);
        }
    }
}
