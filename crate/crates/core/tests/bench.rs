use ethgnn::bench::*;
use ethgnn::gnn::LayerType;

fn small(models: Vec<LayerType>, block_counts: Vec<usize>) -> BenchConfig {
    BenchConfig { models, block_counts, epochs: 5, seed: 3, ..Default::default() }
}

#[test]
fn one_cell_one_row() {
    let rows = run_bench(&small(vec![LayerType::GraphConv], vec![20])).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].model.as_str(), rows[0].blocks), ("GraphConv", 20));
    assert!(rows[0].train_seconds >= 0.0 && rows[0].total_seconds >= rows[0].train_seconds);
    let mut out = Vec::new();
    write_bench_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next(), Some("model,blocks,accuracy,train_seconds,total_seconds"));
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn accuracy_column_is_deterministic() {
    let cfg = small(vec![LayerType::GraphConv, LayerType::GraphSage, LayerType::Gat], vec![20, 40]);
    let a = run_bench(&cfg).unwrap();
    let b = run_bench(&cfg).unwrap();
    let key = |r: &BenchRow| (r.model.clone(), r.blocks, r.accuracy.to_bits());
    assert_eq!(a.iter().map(key).collect::<Vec<_>>(), b.iter().map(key).collect::<Vec<_>>());
    let order: Vec<_> = a.iter().map(|r| (r.blocks, r.model.as_str())).collect();
    assert_eq!(order[..3], [(20, "GraphConv"), (20, "GraphSAGE"), (20, "GAT")]);
}

#[test]
fn workload_densifies_with_blocks() {
    let small = synthetic_workload(50, 1).unwrap();
    let large = synthetic_workload(500, 1).unwrap();
    assert!(large.adjacency.nnz() > 2 * small.adjacency.nnz());
    assert!(large.adjacency.n_nodes() <= BENCH_POOL_SIZE);
    for w in [&small, &large] {
        assert_eq!(w.features.rows(), w.labels.len());
        w.masks.validate(w.labels.len()).unwrap();
        for i in 0..w.adjacency.n_nodes() {
            let s: f64 = w.adjacency.row_values(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn bad_config_lists_problems() {
    let cfg = BenchConfig { models: vec![], block_counts: vec![0], epochs: 0, lr: 0.0, seed: 0 };
    assert_eq!(cfg.problems().len(), 4);
    assert!(run_bench(&cfg).is_err());
}
