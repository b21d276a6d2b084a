use super::*;
use crate::data::{Attribute, Column, FeatureMatrix, Schema};
use crate::rules::{rule_covers, Form};

fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("a{i}")).collect()
}

/// Binary matrix; labels "1" for positives, "0" otherwise.
fn binary(rows: &[(&[u8], bool)]) -> FeatureMatrix {
    let width = rows.first().map_or(0, |r| r.0.len());
    let data: Vec<Vec<u8>> = rows.iter().map(|r| r.0.to_vec()).collect();
    let labels = rows.iter().map(|r| if r.1 { "1" } else { "0" }.to_string()).collect();
    FeatureMatrix::from_binary_rows(names(width), &data, labels).unwrap()
}

fn task(m: &FeatureMatrix) -> BinaryTask<'_> {
    let pos = (0..m.rows()).filter(|&r| m.labels()[r] == "1").collect();
    let neg = (0..m.rows()).filter(|&r| m.labels()[r] != "1").collect();
    BinaryTask::new(m, pos, neg, "1", "target").unwrap()
}

fn covered(rule: &Rule, m: &FeatureMatrix) -> Vec<usize> {
    (0..m.rows())
        .filter(|&r| rule_covers(rule, &m.row(r)).unwrap())
        .collect()
}

fn set_covered(rs: &RuleSet, m: &FeatureMatrix) -> Vec<usize> {
    (0..m.rows())
        .filter(|&r| rs.rules().iter().any(|rule| rule_covers(rule, &m.row(r)).unwrap()))
        .collect()
}

fn log2_choose(n: usize, k: usize) -> f64 {
    (0..k).map(|i| ((n - i) as f64 / (k - i) as f64).log2()).sum()
}

#[test]
fn gain_values() {
    assert_eq!(foil_gain(2, 2, 2, 0), 2.0);
    assert_eq!(foil_gain(5, 3, 5, 3), 0.0);
    assert_eq!(foil_gain(5, 3, 0, 1), 0.0);
}

#[test]
fn candidates_for_binary_and_numeric() {
    let m = binary(&[(&[0, 1], true), (&[1, 0], false)]);
    let all: Vec<usize> = (0..2).collect();
    let c = candidate_literals(&m, &Rule::empty("t"), &all).unwrap();
    assert_eq!(
        c,
        vec![
            Literal::white("a0"),
            Literal::black("a0"),
            Literal::white("a1"),
            Literal::black("a1")
        ]
    );
    let used = Rule::new("t", vec![Literal::black("a0")]).unwrap();
    let c = candidate_literals(&m, &used, &all).unwrap();
    assert!(c.iter().all(|l| l.attribute == "a1"));

    let schema = Schema::new(vec![Attribute::numeric("x")]).unwrap();
    let nm = FeatureMatrix::new(
        schema,
        vec![Column::Numeric(vec![7.0, 1.0, 3.0, 3.0])],
        vec!["1".into(), "0".into(), "1".into(), "0".into()],
    )
    .unwrap();
    let c = candidate_literals(&nm, &Rule::empty("t"), &[0, 1, 2, 3]).unwrap();
    assert_eq!(
        c,
        vec![
            Literal::gt("x", 2.0),
            Literal::gt("x", 5.0),
            Literal::lt("x", 2.0),
            Literal::lt("x", 5.0)
        ]
    );
    let with_gt = Rule::new("t", vec![Literal::gt("x", 2.0)]).unwrap();
    let c = candidate_literals(&nm, &with_gt, &[0, 2]).unwrap();
    assert_eq!(c, vec![Literal::lt("x", 5.0)]);
}

#[test]
fn foil_empty_positives() {
    let m = binary(&[(&[0, 1], false), (&[1, 0], false)]);
    let rs = foil_learn(&task(&m), &LearnerConfig::default());
    assert!(rs.is_empty());
    assert!(irep_learn(&task(&m), &LearnerConfig::default()).is_empty());
    assert!(ripper_learn(&task(&m), &LearnerConfig::default()).is_empty());
}

#[test]
fn foil_matches_exhaustive_search() {
    let m = binary(&[(&[1, 1], true), (&[0, 1], false), (&[1, 0], false)]);
    let rs = foil_learn(&task(&m), &LearnerConfig::default());
    assert_eq!(rs.len(), 1);
    // all conjunctions of at most two literals over two binary attributes
    let lits = [
        Literal::white("a0"),
        Literal::black("a0"),
        Literal::white("a1"),
        Literal::black("a1"),
    ];
    let mut perfect = Vec::new();
    for i in 0..4 {
        for j in i..4 {
            let body = if i == j {
                vec![lits[i].clone()]
            } else {
                vec![lits[i].clone(), lits[j].clone()]
            };
            if let Ok(rule) = Rule::new("target", body) {
                if covered(&rule, &m) == vec![0] {
                    perfect.push(covered(&rule, &m));
                }
            }
        }
    }
    assert!(!perfect.is_empty());
    assert_eq!(covered(&rs.rules()[0], &m), vec![0]);
}

#[test]
fn grow_stops_on_separation_and_keeps_seed() {
    let m = binary(&[
        (&[1, 0, 1], true),
        (&[1, 1, 0], true),
        (&[0, 1, 1], false),
        (&[0, 0, 0], false),
    ]);
    let t = task(&m);
    let cfg = LearnerConfig::default();
    let grown = grow_rule(&t, &Rule::empty("target"), &cfg).unwrap();
    assert_eq!(grown, Rule::new("target", vec![Literal::black("a0")]).unwrap());
    let seed = Rule::new("target", vec![Literal::black("a0"), Literal::white("a1")]).unwrap();
    assert_eq!(grow_rule(&t, &seed, &cfg).unwrap(), seed);

    // identical rows: no literal has positive gain
    let same = binary(&[(&[1, 1], true), (&[1, 1], false)]);
    let out = grow_rule(&task(&same), &Rule::empty("target"), &cfg).unwrap();
    assert!(out.is_empty());
}

#[test]
fn prune_picks_best_prefix() {
    let m = binary(&[
        (&[1, 1, 0], true),
        (&[1, 1, 0], true),
        (&[1, 1, 0], true),
        (&[1, 1, 1], false),
        (&[1, 0, 0], false),
        (&[1, 0, 0], false),
    ]);
    let rule = Rule::new(
        "target",
        vec![Literal::black("a0"), Literal::black("a1"), Literal::black("a2")],
    )
    .unwrap();
    let pruned = prune_rule(&rule, &task(&m)).unwrap();
    assert_eq!(pruned, rule.truncated(2));
    assert_eq!(
        rule_coverage(&pruned, &task(&m)).unwrap(),
        CoverageCounts { p: 3, n: 1 }
    );
    assert_eq!(CoverageCounts { p: 3, n: 1 }.prune_metric(), 0.5);
    let best = Rule::new(
        "target",
        vec![Literal::black("a0"), Literal::black("a1"), Literal::white("a2")],
    )
    .unwrap();
    assert_eq!(prune_rule(&best, &task(&m)).unwrap(), best);
}

#[test]
fn description_length_cases() {
    let m = binary(&[]);
    let empty = BinaryTask::new(&m, vec![], vec![], "1", "target").unwrap();
    assert_eq!(description_length(&RuleSet::empty("1", "target"), &empty).unwrap(), 0.0);

    let four = binary(&[(&[1], true), (&[0], true), (&[1], true), (&[1], true)]);
    let dl = description_length(&RuleSet::empty("1", "target"), &task(&four)).unwrap();
    assert!((dl - 5f64.log2()).abs() < 1e-12);
}

#[test]
fn description_length_matches_formula() {
    let rows: Vec<(Vec<u8>, bool)> = (0..10u8)
        .map(|i| (vec![(i % 2), (i / 3 % 2), (i / 5)], i < 4))
        .collect();
    let view: Vec<(&[u8], bool)> = rows.iter().map(|(r, l)| (r.as_slice(), *l)).collect();
    let m = binary(&view);
    let t = task(&m);
    let r1 = Rule::new("target", vec![Literal::white("a2"), Literal::white("a0")]).unwrap();
    let rs1 = RuleSet::new("1", "target", vec![r1.clone()]).unwrap();
    let dl1 = description_length(&rs1, &t).unwrap();

    let cov = covered(&r1, &m);
    let fp = cov.iter().filter(|&&r| m.labels()[r] != "1").count();
    let unc = 10 - cov.len();
    let fn_ = 4 - (cov.len() - fp);
    let theory = 0.5 * (3f64.log2() + 2.0 * 6f64.log2());
    let expected = theory
        + ((cov.len() + 1) as f64).log2()
        + log2_choose(cov.len(), fp)
        + ((unc + 1) as f64).log2()
        + log2_choose(unc, fn_);
    assert!((dl1 - expected).abs() < 1e-9, "{dl1} vs {expected}");

    // an extra rule that covers nothing new only adds model bits
    let extra = Rule::new(
        "target",
        vec![Literal::white("a2"), Literal::white("a0"), Literal::black("a1")],
    )
    .unwrap();
    let rs2 = RuleSet::new("1", "target", vec![r1, extra]).unwrap();
    assert!(description_length(&rs2, &t).unwrap() > dl1);
}

#[test]
fn dl_stop_keeps_one_rule() {
    // 40 clean positives, one positive indistinguishable from all negatives
    let mut rows: Vec<(&[u8], bool)> = vec![(&[1, 0], true); 40];
    rows.push((&[0, 0], true));
    rows.extend(std::iter::repeat_n((&[0u8, 0][..], false), 200));
    let m = binary(&rows);
    let t = task(&m);
    let cfg = LearnerConfig::default();
    let rs = irep_learn(&t, &cfg);
    assert_eq!(rs.len(), 1);
    assert_eq!(covered(&rs.rules()[0], &m), (0..40).collect::<Vec<_>>());
}

#[test]
fn irep_agrees_with_foil_on_clean_concept() {
    let mut rows = Vec::new();
    for i in 0..64u32 {
        let bits: Vec<u8> = (0..6).map(|b| ((i >> b) & 1) as u8).collect();
        let label = bits[1] == 1 && bits[4] == 0;
        rows.push((bits, label));
    }
    let view: Vec<(&[u8], bool)> = rows.iter().map(|(r, l)| (r.as_slice(), *l)).collect();
    let m = binary(&view);
    let t = task(&m);
    let cfg = LearnerConfig::default();
    let foil = foil_learn(&t, &cfg);
    let irep = irep_learn(&t, &cfg);
    assert_eq!(set_covered(&foil, &m), t.positives);
    assert_eq!(set_covered(&irep, &m), set_covered(&foil, &m));
}

#[test]
fn ripper_without_passes_is_irep() {
    let mut rows = Vec::new();
    for i in 0..120u32 {
        let x = i.wrapping_mul(2654435761);
        let bits: Vec<u8> = (0..8).map(|b| ((x >> (b * 3)) & 1) as u8).collect();
        let label = (bits[0] == 1 && bits[2] == 1) || (x % 11 == 0);
        rows.push((bits, label));
    }
    let view: Vec<(&[u8], bool)> = rows.iter().map(|(r, l)| (r.as_slice(), *l)).collect();
    let m = binary(&view);
    let t = task(&m);
    for seed in 0..5 {
        let cfg = LearnerConfig {
            seed,
            ripper_k: 0,
            ..LearnerConfig::default()
        };
        assert_eq!(ripper_learn(&t, &cfg), irep_learn(&t, &cfg));
        let k2 = ripper_learn(
            &t,
            &LearnerConfig {
                ripper_k: 2,
                ..cfg.clone()
            },
        );
        let k0 = irep_learn(&t, &cfg);
        assert!(description_length(&k2, &t).unwrap() <= description_length(&k0, &t).unwrap() + 1e-9);
    }
}

#[test]
fn optimize_replaces_overfit_rule() {
    let mut rows = Vec::new();
    for i in 0..32u32 {
        let bits: Vec<u8> = (0..5).map(|b| ((i >> b) & 1) as u8).collect();
        let label = bits[0] == 1;
        rows.push((bits, label));
    }
    let view: Vec<(&[u8], bool)> = rows.iter().map(|(r, l)| (r.as_slice(), *l)).collect();
    let m = binary(&view);
    let t = task(&m);
    let cfg = LearnerConfig::default();
    let overfit = Rule::new(
        "target",
        vec![Literal::black("a0"), Literal::black("a1"), Literal::white("a2")],
    )
    .unwrap();
    let rs = RuleSet::new("1", "target", vec![overfit]).unwrap();
    let before = description_length(&rs, &t).unwrap();
    let out = optimize_ruleset(&rs, &t, &cfg).unwrap();
    assert_eq!(out.rules()[0], Rule::new("target", vec![Literal::black("a0")]).unwrap());
    assert!(description_length(&out, &t).unwrap() < before);

    // already minimal: nothing changes
    assert_eq!(optimize_ruleset(&out, &t, &cfg).unwrap(), out);
    assert!(optimize_ruleset(&RuleSet::empty("1", "target"), &t, &cfg)
        .unwrap()
        .is_empty());
}

#[test]
fn numeric_threshold_rule() {
    let schema = Schema::new(vec![Attribute::numeric("cost"), Attribute::numeric("noise")]).unwrap();
    let cost: Vec<f64> = (0..40).map(|i| i as f64 * 0.5).collect();
    let noise: Vec<f64> = (0..40).map(|i| ((i * 7) % 13) as f64).collect();
    let labels = cost
        .iter()
        .map(|&c| if c > 12.0 { "1" } else { "0" }.to_string())
        .collect();
    let m = FeatureMatrix::new(schema, vec![Column::Numeric(cost), Column::Numeric(noise)], labels).unwrap();
    let rs = foil_learn(&task(&m), &LearnerConfig::default());
    assert_eq!(rs.len(), 1);
    assert_eq!(rs.rules()[0].literals()[0].form, Form::Gt(12.25));
}

#[test]
fn task_validation() {
    let m = binary(&[(&[1], true), (&[0], false)]);
    assert_eq!(
        BinaryTask::new(&m, vec![0], vec![0], "1", "t").unwrap_err(),
        TaskError::Overlap(0)
    );
    assert!(BinaryTask::new(&m, vec![5], vec![], "1", "t").is_err());
    assert!(LearnerConfig {
        grow_fraction: 1.0,
        ..Default::default()
    }
    .validate()
    .is_err());
    assert!(LearnerConfig::default().validate().is_ok());
}
