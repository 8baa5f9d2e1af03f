"""Small reverse-mode differentiation engine over dense float64 numpy arrays.

Graphs are built eagerly: every operation computes its value when it is
called and records a closure that maps the output gradient to gradients of
its inputs.  ``backward`` walks the recorded graph in reverse topological
order.
"""

from __future__ import annotations

import json

import numpy as np

CHECKPOINT_FORMAT = "prpn-params/1"
DENOM_FLOOR = 1e-12


class NonFiniteError(FloatingPointError):
    """Raised when an operation produces NaN or Inf."""


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("value", "grad", "parents", "backward_fn", "op", "name")

    def __init__(self, value, parents=(), backward_fn=None, op="leaf", name=None):
        value = np.asarray(value, dtype=np.float64)
        if not np.isfinite(value).all():
            raise NonFiniteError(f"non-finite value produced by {op}")
        self.value = value
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.op = op
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def size(self):
        return self.value.size

    def __len__(self):
        return len(self.value)

    def __repr__(self):
        label = self.name or self.op
        return f"Tensor({label}, shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return reshape(self, shape)

    @property
    def T(self):
        return transpose(self)


def tensor(value, name=None):
    return Tensor(value, name=name)


def constant(value):
    return Tensor(value, op="const")


def _lift(x):
    return x if isinstance(x, Tensor) else constant(x)


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(a, b, op):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: cannot combine shapes {a.shape} and {b.shape}") from None


# -- elementwise arithmetic ------------------------------------------------

def add(a, b):
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b, "add")
    sa, sb = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, sa), _unbroadcast(g, sb)

    return Tensor(a.value + b.value, (a, b), backward, "add")


def sub(a, b):
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b, "sub")
    sa, sb = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, sa), _unbroadcast(-g, sb)

    return Tensor(a.value - b.value, (a, b), backward, "sub")


def mul(a, b):
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b, "mul")
    av, bv = a.value, b.value

    def backward(g):
        return _unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)

    return Tensor(av * bv, (a, b), backward, "mul")


def div(a, b):
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b, "div")
    av, bv = a.value, b.value
    with np.errstate(divide="ignore", invalid="ignore"):
        out = av / bv

    def backward(g):
        return (_unbroadcast(g / bv, av.shape),
                _unbroadcast(-g * out / bv, bv.shape))

    return Tensor(out, (a, b), backward, "div")


def clamp_min(a, floor=DENOM_FLOOR):
    """max(a, floor); gradient passes only where a >= floor."""
    a = _lift(a)
    keep = a.value >= floor

    def backward(g):
        return (g * keep,)

    return Tensor(np.where(keep, a.value, floor), (a,), backward, "clamp_min")


# -- nonlinearities --------------------------------------------------------

def relu(a):
    a = _lift(a)
    on = a.value > 0

    def backward(g):
        return (g * on,)

    return Tensor(np.where(on, a.value, 0.0), (a,), backward, "relu")


def hardtanh(a):
    """Clamp to [-1, 1]; derivative is 1 on the closed interval."""
    a = _lift(a)
    inside = (a.value >= -1.0) & (a.value <= 1.0)

    def backward(g):
        return (g * inside,)

    return Tensor(np.clip(a.value, -1.0, 1.0), (a,), backward, "hardtanh")


def sigmoid(a):
    a = _lift(a)
    out = 0.5 * (np.tanh(0.5 * a.value) + 1.0)

    def backward(g):
        return (g * out * (1.0 - out),)

    return Tensor(out, (a,), backward, "sigmoid")


def tanh(a):
    a = _lift(a)
    out = np.tanh(a.value)

    def backward(g):
        return (g * (1.0 - out * out),)

    return Tensor(out, (a,), backward, "tanh")


def _softmax_values(x, mask=None):
    if mask is None:
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=-1, keepdims=True)
    mask = np.asarray(mask, dtype=bool)
    shifted = np.where(mask, x, -np.inf)
    top = shifted.max(axis=-1, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    e = np.where(mask, np.exp(np.where(mask, x - top, 0.0)), 0.0)
    total = e.sum(axis=-1, keepdims=True)
    return e / np.where(total > 0, total, 1.0)


def softmax(a, mask=None):
    """Softmax over the last axis.

    Masked-out entries get probability 0; a row with no unmasked entries is
    all zeros.
    """
    a = _lift(a)
    out = _softmax_values(a.value, mask)

    def backward(g):
        inner = (g * out).sum(axis=-1, keepdims=True)
        return (out * (g - inner),)

    return Tensor(out, (a,), backward, "softmax")


def softmax_cross_entropy(logits, targets):
    """Summed negative log-likelihood of ``targets`` under softmax(logits).

    ``logits`` has shape (n, classes); ``targets`` holds n class ids.
    """
    logits = _lift(logits)
    targets = np.asarray(targets, dtype=np.int64)
    if logits.value.ndim != 2 or targets.shape != (logits.shape[0],):
        raise ShapeError(f"softmax_cross_entropy: logits {logits.shape} vs targets {targets.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= logits.shape[1]):
        raise ShapeError("softmax_cross_entropy: target id out of range")
    x = logits.value
    top = x.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(x - top).sum(axis=1, keepdims=True)) + top
    rows = np.arange(len(targets))
    nll = float((log_z[:, 0] - x[rows, targets]).sum())

    def backward(g):
        grad = np.exp(x - log_z)
        grad[rows, targets] -= 1.0
        return (g * grad,)

    return Tensor(nll, (logits,), backward, "softmax_xent")


# -- linear algebra and shape plumbing -------------------------------------

def matmul(a, b):
    a, b = _lift(a), _lift(b)
    av, bv = a.value, b.value
    if av.ndim not in (1, 2) or bv.ndim not in (1, 2) or av.shape[-1] != bv.shape[0]:
        raise ShapeError(f"matmul: shapes {av.shape} and {bv.shape}")

    def backward(g):
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T, av.T @ g
        if av.ndim == 2:
            return np.outer(g, bv), av.T @ g
        if bv.ndim == 2:
            return bv @ g, np.outer(av, g)
        return g * bv, g * av

    return Tensor(av @ bv, (a, b), backward, "matmul")


def transpose(a):
    a = _lift(a)

    def backward(g):
        return (g.T,)

    return Tensor(a.value.T, (a,), backward, "transpose")


def reshape(a, shape):
    a = _lift(a)
    old = a.shape
    try:
        out = a.value.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: {old} -> {shape}") from None

    def backward(g):
        return (g.reshape(old),)

    return Tensor(out, (a,), backward, "reshape")


def concat(parts, axis=0):
    parts = [_lift(p) for p in parts]
    try:
        out = np.concatenate([p.value for p in parts], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"concat: {exc}") from None
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return Tensor(out, tuple(parts), backward, "concat")


def stack(parts, axis=0):
    parts = [_lift(p) for p in parts]
    try:
        out = np.stack([p.value for p in parts], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"stack: {exc}") from None

    def backward(g):
        return tuple(np.moveaxis(g, axis, 0))

    return Tensor(out, tuple(parts), backward, "stack")


def getitem(a, index):
    """Basic slicing and integer-array indexing."""
    a = _lift(a)
    out = a.value[index]
    shape = a.shape

    def backward(g):
        grad = np.zeros(shape)
        np.add.at(grad, index, g)
        return (grad,)

    return Tensor(out, (a,), backward, "getitem")


def take(table, ids):
    """Rows of ``table`` selected by an integer array of any shape."""
    table = _lift(table)
    ids = np.asarray(ids, dtype=np.int64)
    n = table.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= n):
        raise ShapeError(f"take: index out of range for {n} rows")
    shape = table.shape

    def backward(g):
        grad = np.zeros(shape)
        np.add.at(grad, ids, g)
        return (grad,)

    return Tensor(table.value[ids], (table,), backward, "take")


def sum(a, axis=None):  # noqa: A001
    a = _lift(a)
    shape = a.shape

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return Tensor(a.value.sum(axis=axis), (a,), backward, "sum")


def mean(a, axis=None):
    a = _lift(a)
    count = a.size if axis is None else a.shape[axis]
    return mul(sum(a, axis), 1.0 / max(count, 1))


def suffix_prod(a):
    """Exclusive suffix product along the last axis.

    ``out[..., i] = prod(a[..., i+1:])``; the last entry is 1.
    """
    a = _lift(a)
    x = a.value
    n = x.shape[-1]
    out = np.ones_like(x)
    for i in range(n - 2, -1, -1):
        out[..., i] = out[..., i + 1] * x[..., i + 1]

    def backward(g):
        # d out[i]/d x[j] = prod(x[i+1:j]) * out[j] for j > i.  The running sum
        # run_j = sum_{i<j} g[i] * prod(x[i+1:j]) avoids dividing by x.
        grad = np.zeros_like(x)
        run = np.zeros(x.shape[:-1])
        for j in range(1, n):
            run = run * x[..., j - 1] + g[..., j - 1]
            grad[..., j] = run * out[..., j]
        return (grad,)

    return Tensor(out, (a,), backward, "suffix_prod")


# -- graph traversal -------------------------------------------------------

def _topological(root):
    order, seen = [], set()
    stack_ = [(root, False)]
    while stack_:
        node, done = stack_.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack_.append((p, False))
    return order


def forward(root):
    """Value of ``root``; values are computed when the graph is built."""
    return root.value


def backward(root, leaves=None):
    """Accumulate d(root)/d(node) into ``node.grad`` for every node.

    Returns a dict mapping each leaf (a node without parents) to its
    gradient.  When ``leaves`` is given, those tensors are included even if
    unreachable, with zero gradient.
    """
    if root.value.shape != () and root.value.size != 1:
        raise ShapeError(f"backward needs a scalar root, got shape {root.shape}")
    order = _topological(root)
    for node in order:
        node.grad = None
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node.backward_fn is None or node.grad is None:
            continue
        grads = node.backward_fn(node.grad)
        for parent, g in zip(node.parents, grads):
            if parent.grad is None:
                parent.grad = np.array(g, dtype=np.float64, copy=True).reshape(parent.shape)
            else:
                parent.grad = parent.grad + g
    result = {}
    for node in order:
        if not node.parents:
            result[node] = node.grad if node.grad is not None else np.zeros_like(node.value)
    for leaf in leaves or ():
        if leaf not in result:
            result[leaf] = np.zeros_like(leaf.value)
        elif leaf.grad is None:
            result[leaf] = np.zeros_like(leaf.value)
    return result


# -- finite-difference verification ----------------------------------------

def fd_check(loss_builder, params, epsilon=1e-5, max_coords=None, rng=None):
    """Largest relative error between analytic and central-difference gradients.

    ``params`` maps names to leaf tensors; ``loss_builder()`` must rebuild the
    scalar loss from their current values.  With ``max_coords`` set, that
    many coordinates are sampled per parameter, otherwise all are checked.
    """
    if not 0 < epsilon <= 1e-2:
        raise ValueError("epsilon must lie in (0, 1e-2]")
    items = list(params.items()) if isinstance(params, dict) else list(params)
    if not any(t.size for _, t in items):
        return 0.0
    first = loss_builder()
    second = loss_builder()
    if first.value.tobytes() != second.value.tobytes():
        raise RuntimeError("loss builder is not deterministic")
    grads = backward(first, leaves=[t for _, t in items])
    rng = rng if rng is not None else np.random.default_rng(0)
    worst = 0.0
    for _, t in items:
        flat = t.value.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = rng.choice(flat.size, size=max_coords, replace=False)
        analytic = grads[t].reshape(-1)
        for k in coords:
            saved = flat[k]
            flat[k] = saved + epsilon
            up = float(loss_builder().value)
            flat[k] = saved - epsilon
            down = float(loss_builder().value)
            flat[k] = saved
            numeric = (up - down) / (2 * epsilon)
            a = float(analytic[k])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst


# -- checkpoint files ------------------------------------------------------

def save_params(path, params, header=None):
    """Write named arrays plus an optional JSON header to an ``.npz`` file."""
    arrays = {f"p:{name}": np.asarray(t.value if isinstance(t, Tensor) else t, dtype=np.float64)
              for name, t in params.items()}
    meta = {"format": CHECKPOINT_FORMAT, "order": list(params), "header": header or {}}
    arrays["__meta__"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_params(path):
    """Inverse of :func:`save_params`; returns ``(dict name -> ndarray, header)``."""
    with np.load(path) as data:
        meta = json.loads(data["__meta__"].tobytes().decode("utf-8"))
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"unsupported checkpoint format {meta.get('format')!r}")
        params = {name: data[f"p:{name}"].copy() for name in meta["order"]}
    return params, meta["header"]

