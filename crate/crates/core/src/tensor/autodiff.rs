//! Reverse-mode gradient tape.
//!
//! A [`Tape`] records one forward pass as a topologically ordered node list.
//! Each node stores its value and a closure that maps the node's output
//! gradient to gradients for its parents. `requires_grad` is propagated at
//! construction so backward skips whole subgraphs that only feed frozen
//! parameters or inputs.

use super::ops;
use super::{Tensor, TensorError};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Context handed to a node's backward closure.
pub struct BackwardCtx<'a> {
    /// Gradient of the loss w.r.t. this node's output.
    pub grad: &'a Tensor,
    /// Values of the node's parents, in push order.
    pub parents: &'a [&'a Tensor],
    /// Which parents actually need a gradient.
    pub needs: &'a [bool],
}

type BackwardFn = Box<dyn Fn(&BackwardCtx) -> Vec<Option<Tensor>>>;

struct Node {
    value: Tensor,
    parents: Vec<usize>,
    backward: Option<BackwardFn>,
    requires_grad: bool,
    grad: Option<Tensor>,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Leaf that never receives a gradient (network inputs, frozen values).
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, false)
    }

    /// Leaf that accumulates a gradient during backward (trainable parameters).
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push_leaf(value, requires_grad)
    }

    fn push_leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            parents: Vec::new(),
            backward: None,
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records an operation node. `backward` receives the output gradient and
    /// parent values and returns per-parent gradients (aligned with
    /// `parents`; `None` where `needs` is false).
    pub fn push_op(&mut self, value: Tensor, parents: Vec<Var>, backward: BackwardFn) -> Var {
        let parents: Vec<usize> = parents.into_iter().map(|v| v.0).collect();
        let requires_grad = parents.iter().any(|&p| self.nodes[p].requires_grad);
        self.nodes.push(Node {
            value,
            parents,
            backward: requires_grad.then_some(backward),
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient accumulated at `v` by the last [`Tape::backward`] call.
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.nodes[v.0].grad.as_ref()
    }

    /// Propagates gradients of the scalar `loss` to every reachable node with
    /// `requires_grad`.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        if loss.0 >= self.nodes.len() {
            return Err(TensorError::BackwardWithoutForward);
        }
        let loss_shape = self.nodes[loss.0].value.shape().to_vec();
        if self.nodes[loss.0].value.len() != 1 {
            return Err(TensorError::NonScalarLoss { got: loss_shape });
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[loss.0].grad = Some(Tensor::full(&loss_shape, 1.0));
        for i in (0..=loss.0).rev() {
            if self.nodes[i].grad.is_none() || self.nodes[i].backward.is_none() {
                continue;
            }
            let (before, rest) = self.nodes.split_at_mut(i);
            let node = &rest[0];
            let grad = node.grad.as_ref().expect("checked above");
            let parent_values: Vec<&Tensor> =
                node.parents.iter().map(|&p| &before[p].value).collect();
            let needs: Vec<bool> = node
                .parents
                .iter()
                .map(|&p| before[p].requires_grad)
                .collect();
            let ctx = BackwardCtx {
                grad,
                parents: &parent_values,
                needs: &needs,
            };
            let parent_grads = (node.backward.as_ref().expect("checked above"))(&ctx);
            debug_assert_eq!(parent_grads.len(), node.parents.len());
            for (&p, pg) in node.parents.iter().zip(parent_grads) {
                if let Some(g) = pg {
                    match &mut before[p].grad {
                        Some(acc) => acc.add_assign(&g),
                        slot => *slot = Some(g),
                    }
                }
            }
        }
        Ok(())
    }

    // -- built-in ops ------------------------------------------------------

    pub fn conv2d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Var,
        stride: usize,
        pad: usize,
    ) -> Result<Var, TensorError> {
        let value = ops::conv2d(
            self.value(input),
            self.value(weight),
            self.value(bias),
            stride,
            pad,
        )?;
        Ok(self.push_op(
            value,
            vec![input, weight, bias],
            Box::new(move |ctx| {
                let (gi, gw, gb) = ops::conv2d_grads(
                    ctx.parents[0],
                    ctx.parents[1],
                    ctx.grad,
                    stride,
                    pad,
                    ctx.needs[0],
                    ctx.needs[1],
                );
                vec![gi, gw, ctx.needs[2].then_some(gb)]
            }),
        ))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = ops::relu(self.value(x));
        self.push_op(
            value,
            vec![x],
            Box::new(|ctx| vec![Some(ops::relu_grad(ctx.parents[0], ctx.grad))]),
        )
    }

    pub fn maxpool2d(&mut self, x: Var, k: usize, stride: usize) -> Result<Var, TensorError> {
        let (value, argmax) = ops::maxpool2d(self.value(x), k, stride)?;
        Ok(self.push_op(
            value,
            vec![x],
            Box::new(move |ctx| {
                vec![Some(ops::maxpool2d_grad(
                    ctx.parents[0].shape(),
                    &argmax,
                    ctx.grad,
                ))]
            }),
        ))
    }

    pub fn linear(&mut self, x: Var, weight: Var, bias: Var) -> Result<Var, TensorError> {
        let value = ops::linear(self.value(x), self.value(weight), self.value(bias))?;
        Ok(self.push_op(
            value,
            vec![x, weight, bias],
            Box::new(|ctx| {
                let (gi, gw, gb) = ops::linear_grads(
                    ctx.parents[0],
                    ctx.parents[1],
                    ctx.grad,
                    ctx.needs[0],
                    ctx.needs[1],
                );
                vec![gi, gw, ctx.needs[2].then_some(gb)]
            }),
        ))
    }

    pub fn bilinear_upsample(
        &mut self,
        x: Var,
        out_h: usize,
        out_w: usize,
    ) -> Result<Var, TensorError> {
        let value = ops::bilinear_upsample(self.value(x), out_h, out_w)?;
        Ok(self.push_op(
            value,
            vec![x],
            Box::new(|ctx| {
                let shape = ctx.parents[0].shape();
                vec![Some(ops::bilinear_upsample_grad(
                    shape[2], shape[3], ctx.grad,
                ))]
            }),
        ))
    }

    pub fn global_avg_pool(&mut self, x: Var) -> Result<Var, TensorError> {
        let value = ops::global_avg_pool(self.value(x))?;
        Ok(self.push_op(
            value,
            vec![x],
            Box::new(|ctx| {
                vec![Some(ops::global_avg_pool_grad(
                    ctx.parents[0].shape(),
                    ctx.grad,
                ))]
            }),
        ))
    }

    /// Records the scalar classification loss node.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: Var,
        labels: &[usize],
    ) -> Result<Var, TensorError> {
        let loss = ops::softmax_cross_entropy(self.value(logits), labels)?;
        let labels = labels.to_vec();
        Ok(self.push_op(
            Tensor::scalar(loss),
            vec![logits],
            Box::new(move |ctx| {
                let g = ops::softmax_cross_entropy_grad(ctx.parents[0], &labels)
                    .expect("validated at forward");
                vec![Some(g.scale(ctx.grad.item()))]
            }),
        ))
    }
}
