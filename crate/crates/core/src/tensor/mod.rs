//! Dense row-major tensors with tape-free reverse-mode differentiation.
//!
//! Every tensor produced by an operation keeps handles to its parents and a
//! closure computing the vector-Jacobian product for each of them. Calling
//! [`Tensor::backward`] on a scalar walks the reachable nodes in reverse
//! creation order (see [`GradGraph`]) and accumulates gradients into every
//! node that tracks them.

mod element;
mod graph;
mod ops;

use std::cell::{Cell, Ref, RefCell, RefMut};
use std::fmt;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

pub use element::{Element, Precision};
pub(crate) use element::{axpy, dot};
pub use graph::GradGraph;

use crate::error::{shape_err, Result};

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

/// Runs `f` without recording any operation on the gradient graph.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    struct Restore(bool);
    impl Drop for Restore {
        fn drop(&mut self) {
            GRAD_ENABLED.with(|g| g.set(self.0));
        }
    }
    let _restore = Restore(GRAD_ENABLED.with(|g| g.replace(false)));
    f()
}

pub fn grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

/// Vector-Jacobian product: given the upstream gradient and the parents,
/// returns one optional gradient per parent.
pub(crate) type BackwardFn<T> = Box<dyn Fn(&[T], &[Tensor<T>]) -> Vec<Option<Vec<T>>>>;

pub(crate) struct GradFn<T: Element> {
    pub(crate) name: &'static str,
    pub(crate) parents: Vec<Tensor<T>>,
    pub(crate) backward: BackwardFn<T>,
}

pub(crate) struct Node<T: Element> {
    id: u64,
    shape: Vec<usize>,
    data: RefCell<Vec<T>>,
    grad: RefCell<Option<Vec<T>>>,
    requires_grad: bool,
    grad_fn: Option<GradFn<T>>,
}

/// Shared handle to a tensor node. Cloning is cheap and aliases the same storage.
pub struct Tensor<T: Element>(Rc<Node<T>>);

impl<T: Element> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor(Rc::clone(&self.0))
    }
}

impl<T: Element> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.0.shape)
            .field("requires_grad", &self.0.requires_grad)
            .field("op", &self.op_name())
            .finish()
    }
}

impl<T: Element> Tensor<T> {
    /// Builds a leaf tensor. Fails when any extent is zero or the value count
    /// does not equal the product of the extents.
    pub fn new(shape: &[usize], values: Vec<T>, requires_grad: bool) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return shape_err(format!("extents must be positive, got {shape:?}"));
        }
        let numel: usize = shape.iter().product();
        if numel != values.len() {
            return shape_err(format!(
                "shape {shape:?} holds {numel} values but {} were given",
                values.len()
            ));
        }
        Ok(Self::leaf(shape.to_vec(), values, requires_grad))
    }

    /// Leaf that does not require gradients.
    pub fn constant(shape: &[usize], values: Vec<T>) -> Result<Self> {
        Self::new(shape, values, false)
    }

    /// Trainable leaf.
    pub fn parameter(shape: &[usize], values: Vec<T>) -> Result<Self> {
        Self::new(shape, values, true)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Self::leaf(shape.to_vec(), vec![T::zero(); numel], false)
    }

    pub fn scalar(v: T) -> Self {
        Self::leaf(Vec::new(), vec![v], false)
    }

    fn leaf(shape: Vec<usize>, data: Vec<T>, requires_grad: bool) -> Self {
        Tensor(Rc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad,
            grad_fn: None,
        }))
    }

    /// Result of an operation. Records the backward rule only when gradient
    /// recording is enabled and some parent tracks gradients.
    pub(crate) fn from_op(
        shape: Vec<usize>,
        data: Vec<T>,
        name: &'static str,
        parents: Vec<Tensor<T>>,
        backward: impl Fn(&[T], &[Tensor<T>]) -> Vec<Option<Vec<T>>> + 'static,
    ) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        let tracks = grad_enabled() && parents.iter().any(Tensor::requires_grad);
        let grad_fn = tracks.then(|| GradFn {
            name,
            parents,
            backward: Box::new(backward),
        });
        Tensor(Rc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad: tracks,
            grad_fn,
        }))
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn rank(&self) -> usize {
        self.0.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.0.shape.iter().product()
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.0.grad_fn.is_none()
    }

    pub fn op_name(&self) -> Option<&'static str> {
        self.0.grad_fn.as_ref().map(|g| g.name)
    }

    pub fn data(&self) -> Ref<'_, Vec<T>> {
        self.0.data.borrow()
    }

    /// Mutable access to the values. Intended for optimizers and loaders.
    pub fn data_mut(&self) -> RefMut<'_, Vec<T>> {
        self.0.data.borrow_mut()
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.0.data.borrow().clone()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> T {
        let d = self.0.data.borrow();
        assert_eq!(d.len(), 1, "item() on tensor with {} elements", d.len());
        d[0]
    }

    pub fn grad(&self) -> Option<Vec<T>> {
        self.0.grad.borrow().clone()
    }

    pub fn has_grad(&self) -> bool {
        self.0.grad.borrow().is_some()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.borrow_mut() = None;
    }

    pub fn fill(&self, v: T) {
        self.0.data.borrow_mut().iter_mut().for_each(|x| *x = v);
    }

    pub(crate) fn accumulate_grad(&self, g: &[T]) {
        let mut slot = self.0.grad.borrow_mut();
        match slot.as_mut() {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, &b)| *a += b),
            None => *slot = Some(g.to_vec()),
        }
    }

    pub(crate) fn grad_fn(&self) -> Option<&GradFn<T>> {
        self.0.grad_fn.as_ref()
    }

    /// Detached copy of the values, without graph history.
    pub fn detach(&self) -> Self {
        Self::leaf(self.0.shape.clone(), self.to_vec(), false)
    }

    /// Same values in another precision, without graph history.
    pub fn cast<U: Element>(&self) -> Tensor<U> {
        let data = self.data().iter().map(|v| U::of(v.as_f64())).collect();
        Tensor::<U>::leaf(self.0.shape.clone(), data, false)
    }
}
