use proptest::prelude::*;
use sentgraph_core::{stream_rng, Graph};
use sentgraph_data::families::{random_tree, sbm, shuffle_nodes, SbmParams};
use sentgraph_data::{generate, DatasetSpec, Family};
use sentgraph_eval::{
    calibrate, descriptor_mmds, fit_blocks, full_report, mmd, vun, Distance, MmdConfig, ReportConfig, SbmValidity,
    Validity,
};

fn trees(count: usize, seed: u64) -> Vec<Graph> {
    (0..count).map(|i| random_tree(20, &mut stream_rng(seed, i as u64)).unwrap()).collect()
}

fn hist_sample() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 1..8).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum::<f64>() + 1e-9;
                r.into_iter().map(|x| x / s).collect()
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn mmd_is_symmetric_nonnegative_and_zero_on_self(a in hist_sample(), b in hist_sample()) {
        let cfg = MmdConfig::default();
        for d in [Distance::TotalVariation, Distance::Euclidean] {
            let ab = mmd(&a, &b, d, &cfg).unwrap();
            prop_assert_eq!(ab, mmd(&b, &a, d, &cfg).unwrap());
            prop_assert!(ab >= -1e-12);
            prop_assert!(mmd(&a, &a, d, &cfg).unwrap().abs() <= 1e-12);
            let mut shuffled = a.clone();
            shuffled.reverse();
            prop_assert_eq!(mmd(&shuffled, &b, d, &cfg).unwrap(), ab);
        }
    }
}

#[test]
fn mmd_matches_direct_formula() {
    let a = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
    let b = vec![vec![0.0, 1.0]];
    let k = |x: &[f64], y: &[f64]| {
        let tv = 0.5 * ((x[0] - y[0]).abs() + (x[1] - y[1]).abs());
        (-tv * tv / 2.0).exp()
    };
    let kaa = (k(&a[0], &a[0]) + k(&a[0], &a[1]) + k(&a[1], &a[0]) + k(&a[1], &a[1])) / 4.0;
    let kab = (k(&a[0], &b[0]) + k(&a[1], &b[0])) / 2.0;
    let expected = kaa + 1.0 - 2.0 * kab;
    let got = mmd(&a, &b, Distance::TotalVariation, &MmdConfig::default()).unwrap();
    assert!((got - expected).abs() < 1e-15);
    let unbiased = MmdConfig { unbiased: true, ..MmdConfig::default() };
    let c = vec![vec![0.0, 1.0], vec![0.25, 0.75]];
    let kaa_u = (k(&a[0], &a[1]) + k(&a[1], &a[0])) / 2.0;
    let kcc_u = (k(&c[0], &c[1]) + k(&c[1], &c[0])) / 2.0;
    let kac = (k(&a[0], &c[0]) + k(&a[0], &c[1]) + k(&a[1], &c[0]) + k(&a[1], &c[1])) / 4.0;
    let got = mmd(&a, &c, Distance::TotalVariation, &unbiased).unwrap();
    assert!((got - (kaa_u + kcc_u - 2.0 * kac)).abs() < 1e-15);
    assert!(mmd(&a, &[vec![1.0]], Distance::Euclidean, &MmdConfig::default()).is_err());
    assert!(mmd(&a, &[], Distance::Euclidean, &MmdConfig::default()).is_err());
}

#[test]
fn families_separate_under_mmd() {
    let cfg = ReportConfig::default();
    let same = descriptor_mmds(&trees(50, 1), &trees(50, 2), &cfg).unwrap();
    let complete: Vec<Graph> = (0..50).map(|i| Graph::complete(15 + i % 10)).collect();
    let cross = descriptor_mmds(&trees(50, 1), &complete, &cfg).unwrap();
    for i in 0..4 {
        assert!(same[i] < cross[i], "descriptor {i}: {} vs {}", same[i], cross[i]);
    }
}

#[test]
fn report_on_test_set_is_zero_and_invariant_to_relabeling() {
    let (train, test) = (trees(20, 3), trees(20, 4));
    let cfg = ReportConfig::default();
    let r = full_report(&test, &train, &test, &Validity::Tree, &cfg).unwrap();
    assert!(r.mmd_deg.abs() < 1e-12 && r.mmd_clus.abs() < 1e-12 && r.mmd_orbit.abs() < 1e-12 && r.mmd_spec.abs() < 1e-12);
    assert!(r.ratio.unwrap() < 1e-9);
    let shuffled: Vec<Graph> = test.iter().enumerate().map(|(i, g)| shuffle_nodes(g, &mut stream_rng(9, i as u64))).collect();
    assert_eq!(full_report(&shuffled, &train, &test, &Validity::Tree, &cfg).unwrap(), r);
    let r_train = full_report(&train, &train, &test, &Validity::Tree, &cfg).unwrap();
    assert!((r_train.ratio.unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(r_train.novel_frac, 0.0);
    for f in [r.valid_frac, r.unique_frac, r.novel_frac, r.vun] {
        assert!((0.0..=1.0).contains(&f));
    }
    assert!(r.vun <= r.valid_frac.min(r.unique_frac).min(r.novel_frac));
    assert!(r.csv_row().split(',').count() == 10 && r.table_row("trees").contains("trees"));
}

#[test]
fn vanishing_denominators_are_skipped() {
    let cycles: Vec<Graph> = (0..5).map(|_| Graph::cycle(8)).collect();
    let r = full_report(&cycles, &cycles, &cycles, &Validity::Any, &ReportConfig::default()).unwrap();
    assert_eq!(r.ratio, None);
    assert_eq!(r.ratio_skipped.len(), 4);
}

#[test]
fn vun_counts() {
    let train = trees(10, 5);
    let novel = trees(10, 6);
    let r = vun(&train, &train, &Validity::Any).unwrap();
    assert_eq!(r.novel_frac, 0.0);
    let r = vun(&novel, &train, &Validity::Tree).unwrap();
    assert_eq!((r.unique_frac, r.novel_frac, r.valid_frac, r.vun), (1.0, 1.0, 1.0, 1.0));
    let mut dup = novel.clone();
    dup.push(shuffle_nodes(&novel[0], &mut stream_rng(1, 1)));
    let r = vun(&dup, &train, &Validity::Tree).unwrap();
    assert!((r.unique_frac - 10.0 / 11.0).abs() < 1e-12);
    let cyc = vun(&[Graph::cycle(5)], &train, &Validity::Tree).unwrap();
    assert_eq!(cyc.valid_frac, 0.0);
}

#[test]
fn sbm_checker_accepts_fresh_draws_and_rejects_others() {
    let graphs: Vec<Graph> = generate(&DatasetSpec::new(Family::Sbm, 100, 11)).unwrap().into_iter().map(|g| g.graph).collect();
    let params = SbmValidity::default();
    let cal = calibrate(&graphs, &params, 0.95);
    assert!(cal.accept_rate >= 0.95, "{cal:?}");
    let mut rng = stream_rng(12, 0);
    let er = sentgraph_data::families::erdos_renyi(100, 0.15, &mut rng);
    assert!(!params.is_valid(&er));
    let single = sbm(&SbmParams { min_blocks: 1, max_blocks: 1, min_block_size: 30, max_block_size: 30, ..SbmParams::default() }, &mut rng);
    assert!(!params.is_valid(&single.graph));
    // A planted draw is recovered close to its true partition.
    let draw = sbm(&SbmParams::default(), &mut rng);
    let fit = fit_blocks(&draw.graph, &params);
    let agree = (0..draw.blocks.len())
        .flat_map(|u| (u + 1..draw.blocks.len()).map(move |v| (u, v)))
        .filter(|&(u, v)| (draw.blocks[u] == draw.blocks[v]) == (fit.blocks[u] == fit.blocks[v]))
        .count();
    let pairs = draw.blocks.len() * (draw.blocks.len() - 1) / 2;
    assert!(agree as f64 / pairs as f64 > 0.95);
}
