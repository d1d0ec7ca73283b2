use saliency_core::data::{gen_popout_dataset, PopoutSpec};
use saliency_core::net::{ClassificationSet, NetworkConfig, TwoBranchNet};
use saliency_core::tensor::Tensor;

fn rms(t: &Tensor) -> f64 {
    (t.data().iter().map(|v| v * v).sum::<f64>() / t.len() as f64).sqrt()
}

#[test]
#[ignore]
fn gradient_magnitudes_at_init() {
    let spec = PopoutSpec::new(64, 8, 32, 77);
    let ds = gen_popout_dataset(&spec).unwrap();
    let data = ClassificationSet::from_popout(&ds);
    let mut net = TwoBranchNet::new(NetworkConfig::toy(8, 42)).unwrap();
    let mut images = Vec::new();
    for img in &data.images[..32] { images.extend_from_slice(img.data()); }
    let x = Tensor::new(&[32, 3, 64, 64], images).unwrap();
    let loss = net.loss_and_param_grads(&x, &data.labels[..32], false).unwrap();
    println!("loss: {loss}");
    for p in net.params() {
        println!("{:24} value_rms {:10.3e}  grad_rms {:10.3e}", p.name, rms(&p.value), rms(&p.grad));
    }
    // Also inspect activation scale: probabilities spread across classes.
    let probs = net.forward_rgb_only(&x).unwrap();
    let row = &probs.data()[..8];
    println!("first prob row: {row:?}");
}
