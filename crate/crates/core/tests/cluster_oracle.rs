use proptest::prelude::*;
use rulecraft::cluster::{build_cluster_tasks, kmeans, select_negative_representatives};
use rulecraft::data::FeatureMatrix;
use rulecraft::learners::BinaryTask;
use rulecraft::represent::EmbeddedMatrix;

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn partition_cost(points: &[Vec<f64>], mask: u32) -> f64 {
    let mut cost = 0.0;
    for side in [0, 1] {
        let members: Vec<&Vec<f64>> = (0..points.len())
            .filter(|&i| (mask >> i) & 1 == side)
            .map(|i| &points[i])
            .collect();
        if members.is_empty() {
            return f64::INFINITY;
        }
        let mean: Vec<f64> = (0..2)
            .map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64)
            .collect();
        cost += members.iter().map(|p| sq(p, &mean)).sum::<f64>();
    }
    cost
}

#[test]
fn two_blobs_reach_the_optimal_partition() {
    let points = vec![
        vec![0.0, 0.0],
        vec![0.5, 0.2],
        vec![0.1, 0.7],
        vec![9.0, 9.0],
        vec![9.4, 8.8],
        vec![8.7, 9.3],
    ];
    let best = (1..(1u32 << 6) - 1)
        .map(|m| partition_cost(&points, m))
        .fold(f64::INFINITY, f64::min);
    for seed in 0..10 {
        let c = kmeans(&EmbeddedMatrix::from_points(&points), 2, seed).unwrap();
        assert!((c.inertia - best).abs() < 1e-9);
        assert_eq!(c.assignments[0], c.assignments[1]);
        assert_eq!(c.assignments[0], c.assignments[2]);
        assert_eq!(c.assignments[3], c.assignments[4]);
        assert_eq!(c.assignments[3], c.assignments[5]);
        assert_ne!(c.assignments[0], c.assignments[3]);
    }
}

#[test]
fn cluster_tasks_share_negatives() {
    let m = FeatureMatrix::from_binary_rows(
        vec!["a".into()],
        &(0..10).map(|i| vec![(i % 2) as u8]).collect::<Vec<_>>(),
        (0..10).map(|i| if i < 6 { "1" } else { "0" }.to_string()).collect(),
    )
    .unwrap();
    let task = BinaryTask::new(&m, (0..6).collect(), (6..10).collect(), "1", "t").unwrap();
    let points: Vec<Vec<f64>> = (0..6).map(|i| vec![(i / 2) as f64 * 10.0]).collect();
    let pos = kmeans(&EmbeddedMatrix::from_points(&points), 3, 1).unwrap();
    let tasks = build_cluster_tasks(&task, &pos, &[6, 8], 20);
    assert_eq!(tasks.len(), 3);
    let mut all: Vec<usize> = tasks.iter().flat_map(|t| t.positives.clone()).collect();
    all.sort();
    assert_eq!(all, (0..6).collect::<Vec<_>>());
    assert!(tasks.iter().all(|t| t.negatives == vec![6, 8] && t.rule_cap == 20));
}

fn points_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 2..60)
}

proptest! {
    #[test]
    fn lloyd_invariants(points in points_strategy(), k in 1usize..6, seed in any::<u64>()) {
        let k = k.min(points.len());
        let e = EmbeddedMatrix::from_points(&points);
        let c = kmeans(&e, k, seed).unwrap();
        prop_assert!(c.assignments.iter().all(|&a| a < k));
        for w in c.inertia_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].max(1.0));
        }
        for (i, p) in points.iter().enumerate() {
            let own = sq(p, &c.centroids[c.assignments[i]]);
            for cent in &c.centroids {
                prop_assert!(own <= sq(p, cent) + 1e-9);
            }
        }
        prop_assert_eq!(c.clone(), kmeans(&e, k, seed).unwrap());
    }

    #[test]
    fn representatives_are_a_covering_subset(points in points_strategy(), k in 1usize..5, f in 0.01f64..=1.0, seed in any::<u64>()) {
        let k = k.min(points.len());
        let c = kmeans(&EmbeddedMatrix::from_points(&points), k, seed).unwrap();
        let reps = select_negative_representatives(&c, f, seed);
        let nonempty = c.sizes().iter().filter(|&&s| s > 0).count();
        prop_assert!(reps.len() >= nonempty && reps.len() <= points.len());
        prop_assert!(reps.windows(2).all(|w| w[0] < w[1]));
        for cluster in 0..k {
            if c.sizes()[cluster] > 0 {
                prop_assert!(reps.iter().any(|&r| c.assignments[r] == cluster));
            }
        }
    }
}
