//! Hyperparameter probe (run with --ignored).

use std::time::Instant;

use saliency_core::data::{gen_popout_dataset, PopoutSpec};
use saliency_core::net::{ClassificationSet, NetworkConfig, TrainOptions, TwoBranchNet};
use saliency_core::tensor::Tensor;

fn centered(set: &ClassificationSet) -> ClassificationSet {
    ClassificationSet {
        images: set.images.iter().map(|t| t.map(|v| v - 0.5)).collect(),
        labels: set.labels.clone(),
    }
}

#[test]
#[ignore]
fn lr_and_centering_sweep() {
    let mut train_spec = PopoutSpec::new(64, 8, 500, 77);
    train_spec.distractors = 6;
    let mut test_spec = train_spec.clone();
    test_spec.n_images = 200;
    test_spec.seed = 78;
    let train_raw = ClassificationSet::from_popout(&gen_popout_dataset(&train_spec).unwrap());
    let test_raw = ClassificationSet::from_popout(&gen_popout_dataset(&test_spec).unwrap());
    let train_c = centered(&train_raw);
    let test_c = centered(&test_raw);

    for center in [false, true] {
        let (train, test) = if center {
            (&train_c, &test_c)
        } else {
            (&train_raw, &test_raw)
        };
        for lr in [0.1, 0.5, 1.0, 2.0] {
            let mut net = TwoBranchNet::new(NetworkConfig::toy(8, 42)).unwrap();
            let t = Instant::now();
            let log = net
                .pretrain_rgb(
                    train,
                    TrainOptions {
                        epochs: 4,
                        lr,
                        batch_size: 32,
                        seed: 7,
                    },
                )
                .unwrap();
            let acc = net.accuracy(test, false).unwrap();
            println!(
                "center={center} lr={lr}: loss {:.3} -> {:.3}, acc {acc:.3} ({:?})",
                log.losses.first().unwrap(),
                log.losses.last().unwrap(),
                t.elapsed()
            );
            let _ = Tensor::scalar(0.0);
        }
    }
}
