use serde_json::Value;
use tngeo_web::api::{inspect, rank_profile, train, TrainRequest};

fn json(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn inspect_lists_nodes_and_bonds() {
    let v = json(inspect("mps", 6, 4).unwrap());
    assert_eq!(v["regular"]["nodes"].as_array().unwrap().len(), 6);
    let dims: Vec<u64> = v["regular"]["bonds"].as_array().unwrap().iter().map(|b| b["dim"].as_u64().unwrap()).collect();
    assert_eq!(dims, [2, 4, 4, 4, 2]);
    assert_eq!(v["regular"]["diameter"], 5);
    assert_eq!(v["compacted"]["nodes"].as_array().unwrap().len(), 4);
    assert!(json(inspect("peps", 6, 2).unwrap())["compacted"].is_null());
}

#[test]
fn inspect_rejects_bad_input() {
    assert!(inspect("nope", 6, 2).is_err());
    assert!(inspect("mps", 30, 2).is_err());
    assert!(inspect("mps", 6, 0).is_err());
}

#[test]
fn train_returns_a_curve() {
    let req = TrainRequest {
        family: "balanced".into(),
        n: 6,
        chi: 8,
        compact: true,
        target: "random".into(),
        target_chi: 2,
        seed: 3,
        max_iters: 300,
    };
    let v = json(train(&req).unwrap());
    let curve = v["infidelity"].as_array().unwrap();
    assert_eq!(curve.len(), v["iterations"].as_u64().unwrap() as usize + 1);
    assert!(v["final_infidelity"].as_f64().unwrap() < 1e-8);
    assert!(train(&TrainRequest { family: "peps".into(), ..req }).is_err());
}

#[test]
fn rank_profile_follows_the_hidden_bond() {
    let v = json(rank_profile("mps", 8, 2, 1).unwrap());
    let ranks: Vec<u64> = v.as_array().unwrap().iter().map(|c| c["rank"].as_u64().unwrap()).collect();
    assert_eq!(ranks, [2, 2, 2, 2, 2, 2, 2]);
    let v = json(rank_profile("random", 6, 0, 1).unwrap());
    let ranks: Vec<u64> = v.as_array().unwrap().iter().map(|c| c["rank"].as_u64().unwrap()).collect();
    assert_eq!(ranks, [2, 4, 8, 4, 2]);
}
