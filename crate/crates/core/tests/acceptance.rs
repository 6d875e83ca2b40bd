//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use embtree_core::analysis::{assignment_for_row, cold_start_embed, diagnose_leaf, Verdict};
use embtree_core::dataset::{binarize, BinaryFeatureMatrix, EmbeddingMatrix, RawColumn, RawFeatureTable};
use embtree_core::projection::project;
use embtree_core::split::embedding_bic;
use embtree_core::synthetic::{axis_hierarchy, four_blobs, random_directions};
use embtree_core::tree::{build_tree, build_tree_from_table, BuildOptions, EmbeddingTree, StoppingCriteria};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("likelihood-oracle-equivalence", likelihood_oracle),
        ("hierarchy-recovery", hierarchy_recovery),
        ("determinism", determinism),
        ("partition-conservation", partition_conservation),
        ("pca-correctness", pca_correctness),
        ("diagnosis-power", diagnosis_power),
        ("cold-start-fidelity", cold_start_fidelity),
        ("scale", scale),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = check();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.2}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn within(budget: Duration, started: Instant) -> Result<(), String> {
    let took = started.elapsed();
    if took < budget {
        Ok(())
    } else {
        Err(format!("took {:.2}s, budget {:.0}s", took.as_secs_f64(), budget.as_secs_f64()))
    }
}

fn likelihood_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut compared = 0;
    for instance in 0..1000 {
        let n = rng.gen_range(2..=200);
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let offset = rng.gen_range(-50.0..50.0);
        let density = rng.gen_range(0.0..1.0);
        let scores: Vec<f64> = (0..n).map(|_| offset + scale * rng.gen_range(-1.0..1.0)).collect();
        let bits: Vec<bool> = (0..n).map(|_| rng.gen_bool(density)).collect();
        let got = embedding_bic(&scores, &bits);
        match common::direct_two_gaussian(&scores, &bits, common::floor_for(&scores)) {
            None if got.valid => return Err(format!("instance {instance}: one-sided split reported valid")),
            None => {}
            Some(expected) => {
                if !got.valid {
                    return Err(format!("instance {instance}: valid split reported invalid"));
                }
                worst = worst.max((got.log_likelihood - expected).abs());
                compared += 1;
            }
        }
    }
    if worst > 1e-9 {
        return Err(format!("max abs difference {worst:e}"));
    }
    within(Duration::from_secs(5), started)?;
    Ok(format!("1000 instances ({compared} two-sided), max abs difference {worst:.1e}"))
}

fn split_name(tree: &EmbeddingTree<f64>, id: usize) -> Option<&str> {
    let node = tree.node(id)?;
    Some(tree.features[node.split()?.feature_index].source.as_str())
}

fn hierarchy_recovery() -> Outcome {
    let started = Instant::now();
    let mut hits = 0;
    for seed in 0..100 {
        let data = axis_hierarchy::<f64>(seed, 2000, 16, &[20.0, 5.0, 1.0], 1.0);
        let tree = build_tree_from_table(
            &data.embeddings,
            &data.features,
            3,
            StoppingCriteria::default(),
            &BuildOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        if split_name(&tree, 0) == Some("A") && split_name(&tree, 1) == Some("B") && split_name(&tree, 2) == Some("B") {
            hits += 1;
        }
    }
    within(Duration::from_secs(60), started)?;
    if hits >= 95 {
        Ok(format!("{hits}/100 seeds split A at the root and B at depth 1"))
    } else {
        Err(format!("only {hits}/100 seeds recovered the hierarchy"))
    }
}

fn determinism() -> Outcome {
    let datasets = [
        four_blobs::<f64>(11, 40, 5),
        axis_hierarchy::<f64>(12, 1500, 8, &[9.0, 4.0, 2.0, 1.0], 1.0),
        random_directions::<f64>(13, 3000, 24, 12),
    ];
    for (d, data) in datasets.iter().enumerate() {
        let criteria = StoppingCriteria::new(10, 8).unwrap();
        let build = |options: &BuildOptions| {
            build_tree_from_table(&data.embeddings, &data.features, 3, criteria, options).unwrap().to_json()
        };
        let first = build(&BuildOptions::default());
        let second = build(&BuildOptions::default());
        let sequential = build(&BuildOptions::sequential());
        if first != second {
            return Err(format!("dataset {d}: repeated parallel builds differ"));
        }
        if first != sequential {
            return Err(format!("dataset {d}: parallel and sequential builds differ"));
        }
    }
    Ok("3 datasets, repeated and parallel/sequential builds byte-identical".into())
}

fn random_table(rng: &mut ChaCha8Rng, n: usize) -> RawFeatureTable {
    let ids = (0..n).map(|i| format!("r{i}")).collect();
    let labels = ["north", "south", "east", "west"];
    let arity = rng.gen_range(2..=4);
    let mut columns = vec![
        RawColumn::categorical("region", (0..n).map(|_| labels[rng.gen_range(0..arity)].to_string()).collect()),
        RawColumn::numeric("spend", (0..n).map(|_| rng.gen_range(0.0..100.0f64).round()).collect()),
    ];
    for k in 0..rng.gen_range(1..=4) {
        let density = rng.gen_range(0.1..0.9);
        let bits = (0..n).map(|_| if rng.gen_bool(density) { 1.0 } else { 0.0 }).collect();
        columns.push(RawColumn::numeric(format!("flag{k}"), bits));
    }
    RawFeatureTable { ids, columns }
}

fn partition_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut internal = 0;
    for dataset in 0..50 {
        let n = rng.gen_range(30..=400);
        let p = rng.gen_range(1..=8);
        let table = random_table(&mut rng, n);
        let (bits, _) = binarize(&table, 3).map_err(|e| e.to_string())?;
        // Embeddings shifted by a few of the binary features so trees grow.
        let shifts: Vec<Vec<f64>> = (0..bits.feature_count()).map(|_| (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row: Vec<f64> = (0..p).map(|_| normal.sample(&mut rng)).collect();
                for (f, shift) in shifts.iter().enumerate() {
                    if bits.bit(i, f) {
                        row.iter_mut().zip(shift).for_each(|(x, s)| *x += s);
                    }
                }
                row
            })
            .collect();
        let embeddings = EmbeddingMatrix::from_rows(table.ids.clone(), &rows).map_err(|e| e.to_string())?;
        let criteria = StoppingCriteria::new(rng.gen_range(2..=30), rng.gen_range(0..=8)).unwrap();
        let tree = build_tree_from_table(&embeddings, &table, 3, criteria, &BuildOptions::default())
            .map_err(|e| e.to_string())?;
        common::audit_partition(&tree, &bits, n).map_err(|e| format!("dataset {dataset}: {e}"))?;
        internal += tree.node_count() - tree.leaf_count();
    }
    Ok(format!("50 datasets, {internal} internal nodes audited"))
}

fn pca_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let (mut worst_value, mut worst_cos) = (0.0f64, 1.0f64);
    for matrix in 0..100 {
        let p = rng.gen_range(1..=32);
        let n = rng.gen_range(2..=120);
        let scales: Vec<f64> = (0..p).map(|_| rng.gen_range(0.1..5.0)).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|_| scales.iter().map(|s| s * normal.sample(&mut rng)).collect()).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let (mean, cov) = common::covariance(&refs);
        let oracle = common::reference_eigen(&cov, p);
        for k in [1usize, 2].into_iter().filter(|&k| k <= p) {
            let got = project(&rows, k).map_err(|e| e.to_string())?;
            for (c, (value, vector)) in oracle.iter().enumerate().take(k) {
                let rel = (got.explained_variance[c] - value).abs() / value.abs().max(f64::MIN_POSITIVE);
                worst_value = worst_value.max(rel);
                let cos: f64 = got.components[c].iter().zip(vector).map(|(a, b)| a * b).sum::<f64>().abs();
                worst_cos = worst_cos.min(cos);
                for (i, row) in rows.iter().enumerate() {
                    let expected: f64 = row.iter().zip(&mean).zip(&got.components[c]).map(|((x, m), v)| (x - m) * v).sum();
                    if (got.score(i, c) - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
                        return Err(format!("matrix {matrix}: score {i},{c} is not the centered projection"));
                    }
                }
            }
        }
    }
    if worst_value > 1e-6 {
        return Err(format!("eigenvalue relative error {worst_value:e}"));
    }
    if worst_cos < 1.0 - 1e-8 {
        return Err(format!("component cosine {worst_cos}"));
    }
    Ok(format!("100 matrices, max eigenvalue rel error {worst_value:.1e}, min |cos| 1-{:.1e}", 1.0 - worst_cos))
}

fn single_leaf(values: &[f64]) -> (EmbeddingTree<f64>, EmbeddingMatrix<f64>) {
    let ids = (0..values.len()).map(|i| format!("x{i}")).collect();
    let rows: Vec<Vec<f64>> = values.iter().map(|&x| vec![x]).collect();
    let embeddings = EmbeddingMatrix::from_rows(ids, &rows).unwrap();
    let bits = BinaryFeatureMatrix::from_indicator_columns(values.len(), vec![vec![false; values.len()]]);
    let tree = build_tree(&embeddings, &bits, StoppingCriteria::new(2, 0).unwrap(), &BuildOptions::default()).unwrap();
    (tree, embeddings)
}

fn diagnosis_power() -> Outcome {
    let mut consistent = 0;
    let mut inconsistent = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).unwrap();
        let unimodal: Vec<f64> = (0..200).map(|_| unit.sample(&mut rng)).collect();
        let (tree, emb) = single_leaf(&unimodal);
        if diagnose_leaf(&tree, &emb, 0).map_err(|e| e.to_string())?.verdict == Verdict::Consistent {
            consistent += 1;
        }
        let bimodal: Vec<f64> = (0..200).map(|i| unit.sample(&mut rng) + if i < 100 { -3.0 } else { 3.0 }).collect();
        let (tree, emb) = single_leaf(&bimodal);
        if diagnose_leaf(&tree, &emb, 0).map_err(|e| e.to_string())?.verdict == Verdict::Inconsistent {
            inconsistent += 1;
        }
    }
    let detail = format!("unimodal consistent {consistent}/100, bimodal inconsistent {inconsistent}/100");
    if consistent >= 95 && inconsistent >= 95 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cold_start_fidelity() -> Outcome {
    let data = four_blobs::<f64>(3, 30, 4);
    let tree = build_tree_from_table(&data.embeddings, &data.features, 3, StoppingCriteria::default(), &BuildOptions::default())
        .map_err(|e| e.to_string())?;
    if tree.leaf_count() != 4 {
        return Err(format!("expected 4 leaves, got {}", tree.leaf_count()));
    }
    let mut worst = 0.0f64;
    for row in 0..data.embeddings.len() {
        let result = cold_start_embed(&tree, &assignment_for_row(&data.features, row)).map_err(|e| e.to_string())?;
        let leaf = tree.leaf_of(row).ok_or(format!("entity {row} is in no leaf"))?;
        if result.leaf_id != leaf.id {
            return Err(format!("entity {row} routed to {} instead of {}", result.leaf_id, leaf.id));
        }
        let members = leaf.entities().unwrap();
        let blob = row / 30;
        if members.iter().any(|&m| m / 30 != blob) || members.len() != 30 {
            return Err(format!("leaf {} mixes blobs", leaf.id));
        }
        let expected = common::mean_of(&data.embeddings, members);
        for (a, b) in result.embedding.iter().zip(&expected) {
            worst = worst.max((a - b).abs());
        }
    }
    if worst > 1e-12 {
        return Err(format!("max deviation from recomputed leaf mean {worst:e}"));
    }
    Ok(format!("120 entities reach their own leaf, max mean deviation {worst:.1e}"))
}

fn peak_resident_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn scale() -> Outcome {
    let started = Instant::now();
    let data = random_directions::<f64>(99, 50_000, 128, 30);
    let tree = build_tree_from_table(&data.embeddings, &data.features, 3, StoppingCriteria::default(), &BuildOptions::default())
        .map_err(|e| e.to_string())?;
    within(Duration::from_secs(120), started)?;
    let peak = peak_resident_bytes().ok_or("cannot read peak memory from /proc/self/status")?;
    let gib = peak as f64 / (1u64 << 30) as f64;
    if gib >= 4.0 {
        return Err(format!("peak resident memory {gib:.2} GiB"));
    }
    Ok(format!("N=50000 p=128 q=30: {} nodes, depth {}, peak memory {gib:.2} GiB", tree.node_count(), tree.depth()))
}
