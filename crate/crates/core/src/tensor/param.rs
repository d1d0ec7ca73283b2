use super::Tensor;

/// Named trainable tensor with an accumulated gradient of identical shape.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(0.0);
    }
}

/// One plain SGD step: `value -= lr * grad`, then gradients are cleared.
pub fn sgd_step(params: &mut [&mut Parameter], lr: f64) {
    for p in params.iter_mut() {
        debug_assert_eq!(p.value.shape(), p.grad.shape());
        let grad = p.grad.data();
        for (v, g) in p.value.data_mut().iter_mut().zip(grad) {
            *v -= lr * g;
        }
        p.zero_grad();
    }
}
