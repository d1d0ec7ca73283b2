use saliency_core::data::{gen_popout_dataset, PopoutDataset, PopoutSpec};
use saliency_core::metrics::nss;
use saliency_core::net::{ClassificationSet, NetworkConfig, TrainOptions, TwoBranchNet};

fn stats(net: &TwoBranchNet, ds: &PopoutDataset) -> (f64, f64) {
    let mut total = 0.0;
    let mut hits = 0usize;
    for item in &ds.items {
        let map = net.predict_saliency(&item.image).unwrap();
        total += nss(&map, &item.fixations).unwrap().value;
        let (ax, ay) = map.argmax();
        let (x0, y0, x1, y1) = item.target_bbox;
        if ax >= x0 && ax <= x1 && ay >= y0 && ay <= y1 { hits += 1; }
    }
    (total / ds.items.len() as f64, hits as f64 / ds.items.len() as f64)
}

#[test]
#[ignore]
fn pretrain_depth_vs_selective_quality() {
    let mut train_spec = PopoutSpec::new(64, 8, 2000, 1001);
    train_spec.distractors = 6;
    let mut test_spec = train_spec.clone();
    test_spec.n_images = 500;
    test_spec.seed = 2002;
    let train_ds = gen_popout_dataset(&train_spec).unwrap();
    let test_ds = gen_popout_dataset(&test_spec).unwrap();
    let data = ClassificationSet::from_popout(&train_ds);
    let test_data = ClassificationSet::from_popout(&test_ds);

    for pre_epochs in [5usize, 8] {
        let mut net = TwoBranchNet::new(NetworkConfig::toy(8, 42)).unwrap();
        net.pretrain_rgb(&data, TrainOptions { epochs: pre_epochs, lr: 0.05, batch_size: 16, seed: 7 }).unwrap();
        let acc = net.accuracy(&test_data, false).unwrap();
        println!("arm pre={pre_epochs}: pretrain acc {acc:.3}");
        for round in 0..10 {
            net.train_selective(&data, TrainOptions { epochs: 2, lr: 0.05, batch_size: 16, seed: 100 + round }).unwrap();
            let (n, h) = stats(&net, &test_ds);
            println!("arm pre={pre_epochs}: selective {} epochs: nss {n:.3} hit {h:.3}", 2 * (round + 1));
        }
    }
}
