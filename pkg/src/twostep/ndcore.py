"""Minimal dense numeric core with reverse-mode gradients.

Every op takes and returns :class:`Tensor` objects. A tensor records its
parents and a backward closure only when at least one input requires a
gradient, so inference on frozen parameters builds no graph at all.

Sequence ops use batch-first layout ``(B, L, D)``; a 2-D ``(L, D)`` input is
treated as a batch of one and returned without the batch axis.
"""
from __future__ import annotations

import contextlib
import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NumericError, TwoStepError

DEFAULT_DTYPE = np.float64

# ops whose backward pass flips sign; only used by the gradient-check self test
_CORRUPTED: set[str] = set()


class GraphError(TwoStepError, RuntimeError):
    pass


@contextlib.contextmanager
def corrupt_backward(*ops: str):
    """Flip the sign of the named ops' input gradients inside the block."""
    added = [op for op in ops if op not in _CORRUPTED]
    _CORRUPTED.update(added)
    try:
        yield
    finally:
        _CORRUPTED.difference_update(added)


def _sign(op: str) -> float:
    return -1.0 if op in _CORRUPTED else 1.0


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{tag})"

    def backward(self):
        backward(self)

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(as_tensor(other), -1.0))

    def sum(self):
        return total(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data, parents, backward_fn) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _accum(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype, copy=True)
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def backward(loss: Tensor, store: "ParamStore | None" = None):
    """Populate ``.grad`` on every tensor upstream of the scalar ``loss``.

    When ``store`` is given, every trainable parameter ends with a gradient
    array (zeros if the loss does not depend on it) and the store is marked
    ready for :func:`adam_step`. The graph is released afterwards.
    """
    if loss._backward is None:
        raise GraphError("backward() called on a tensor with no recorded forward pass")
    if loss.data.size != 1:
        raise GraphError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if store is not None:
        store.zero_grad()

    order: list[Tensor] = []
    seen: set[int] = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    for node in order:
        node._parents = ()
        node._backward = None
    if store is not None:
        store._grads_ready = True


# ---------------------------------------------------------------- elementwise

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(g, b.shape))

    return _node(a.data + b.data, (a, b), bw)


def mul(a, b) -> Tensor:
    a = as_tensor(a)
    if not isinstance(b, Tensor):
        c = float(b)

        def bw_scalar(g):
            _accum(a, g * c)

        return _node(a.data * c, (a,), bw_scalar)

    def bw(g):
        _accum(a, _unbroadcast(g * b.data, a.shape))
        _accum(b, _unbroadcast(g * a.data, b.shape))

    return _node(a.data * b.data, (a, b), bw)


def total(x: Tensor) -> Tensor:
    def bw(g):
        _accum(x, np.broadcast_to(g, x.shape))

    return _node(np.asarray(x.data.sum()), (x,), bw)


def sum_squares(x: Tensor) -> Tensor:
    def bw(g):
        _accum(x, 2.0 * g * x.data)

    return _node(np.asarray(np.sum(x.data * x.data)), (x,), bw)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def bw(g):
        _accum(x, _sign("relu") * g * mask)

    return _node(x.data * mask, (x,), bw)


def dropout(x: Tensor, rate: float, mode: str = "infer", rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: survivors are scaled by ``1/(1-rate)`` in train mode."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    if mode == "infer" or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    keep = (rng.random(x.shape) >= rate).astype(x.data.dtype) / (1.0 - rate)

    def bw(g):
        _accum(x, g * keep)

    return _node(x.data * keep, (x,), bw)


# ---------------------------------------------------------------- shape ops

def reshape(x: Tensor, shape) -> Tensor:
    def bw(g):
        _accum(x, g.reshape(x.shape))

    return _node(x.data.reshape(shape), (x,), bw)


def flatten(x: Tensor) -> Tensor:
    """Collapse all axes after the batch axis."""
    return reshape(x, (x.shape[0], -1))


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % tensors[0].ndim
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            _accum(t, g[tuple(idx)])

    return _node(np.concatenate([t.data for t in tensors], axis=axis), tensors, bw)


def onehot(ids: np.ndarray, depth: int, dtype=DEFAULT_DTYPE) -> Tensor:
    """Constant one-hot encoding; ids outside ``[0, depth)`` become zero rows."""
    ids = np.asarray(ids)
    out = np.zeros(ids.shape + (depth,), dtype=dtype)
    valid = (ids >= 0) & (ids < depth)
    out[valid, ids[valid]] = 1.0
    return Tensor(out)


def gather(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup ``table[ids]``; gradients are scatter-added back into the table."""
    ids = np.asarray(ids, dtype=np.int64)

    def bw(g):
        if not table.requires_grad:
            return
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        _accum(table, gt)

    return _node(table.data[ids], (table,), bw)


def masked_mean(x: Tensor, mask: np.ndarray) -> Tensor:
    """Mean over axis 1 of ``(B, L, D)`` counting only positions where mask is 1.

    Rows with an empty mask produce a zero vector.
    """
    mask = np.asarray(mask, dtype=x.data.dtype)
    counts = mask.sum(axis=1, keepdims=True)
    w = mask / np.maximum(counts, 1.0)

    def bw(g):
        _accum(x, g[:, None, :] * w[:, :, None])

    return _node(np.einsum("bld,bl->bd", x.data, w), (x,), bw)


# ---------------------------------------------------------------- linear algebra

def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _node(a.data @ b.data, (a, b), bw)


def dense(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map ``x @ weight + bias`` for ``x`` of shape (N,) or (B, N)."""
    x = as_tensor(x)
    single = x.ndim == 1
    xd = x.data[None, :] if single else x.data
    if xd.shape[1] != weight.shape[0] or weight.shape[1] != bias.shape[0]:
        raise ValueError(
            f"dense shape mismatch: input {x.shape}, weight {weight.shape}, bias {bias.shape}")
    s = _sign("dense")

    def bw(g):
        g2 = g[None, :] if single else g
        _accum(x, s * (g2 @ weight.data.T).reshape(x.shape))
        _accum(weight, s * (xd.T @ g2))
        _accum(bias, s * g2.sum(axis=0))

    out = xd @ weight.data + bias.data
    return _node(out[0] if single else out, (x, weight, bias), bw)


def sparse_dense(x: sp.csr_matrix, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map with a constant sparse input matrix of shape (B, F)."""
    x = sp.csr_matrix(x)
    if x.shape[1] != weight.shape[0]:
        raise ValueError(f"sparse_dense shape mismatch: input {x.shape}, weight {weight.shape}")
    s = _sign("dense")

    def bw(g):
        _accum(weight, s * np.asarray(x.T @ g))
        _accum(bias, s * g.sum(axis=0))

    out = np.asarray(x @ weight.data) + bias.data
    return _node(out.astype(weight.data.dtype, copy=False), (weight, bias), bw)


def _windows(x: np.ndarray, width: int) -> np.ndarray:
    # (B, L, D) -> (B, L-width+1, width, D) view
    v = np.lib.stride_tricks.sliding_window_view(x, width, axis=1)
    return v.transpose(0, 1, 3, 2)


def conv1d(x: Tensor, filters: Tensor, bias: Tensor) -> Tensor:
    """Valid 1-D cross-correlation.

    ``x`` is (B, L, D_in) or (L, D_in); ``filters`` is (W, D_in, M);
    ``out[b, t, m] = sum_{w,d} x[b, t+w, d] * filters[w, d, m] + bias[m]``.
    """
    x = as_tensor(x)
    single = x.ndim == 2
    xd = x.data[None] if single else x.data
    width, d_in, maps = filters.shape
    n, length, d = xd.shape
    if d != d_in:
        raise ValueError(f"conv1d channel mismatch: input has {d}, filters expect {d_in}")
    if length < width:
        raise ValueError(f"conv1d input length {length} shorter than filter width {width}")
    steps = length - width + 1
    cols = _windows(xd, width).reshape(n * steps, width * d_in)
    wmat = filters.data.reshape(width * d_in, maps)
    out = (cols @ wmat + bias.data).reshape(n, steps, maps)
    s = _sign("conv1d")

    def bw(g):
        g2 = (g[None] if single else g).reshape(n * steps, maps)
        _accum(filters, s * (cols.T @ g2).reshape(filters.shape))
        _accum(bias, s * g2.sum(axis=0))
        if x.requires_grad:
            dcols = (g2 @ wmat.T).reshape(n, steps, width, d_in)
            dx = np.zeros_like(xd)
            for w in range(width):
                dx[:, w:w + steps, :] += dcols[:, :, w, :]
            _accum(x, s * (dx[0] if single else dx))

    return _node(out[0] if single else out, (x, filters, bias), bw)


def conv1d_onehot(ids: np.ndarray, depth: int, filters: Tensor, bias: Tensor) -> Tensor:
    """``conv1d(onehot(ids, depth), filters, bias)`` without materializing the one-hot grid.

    Ids outside ``[0, depth)`` act as all-zero (PAD) columns.
    """
    ids = np.asarray(ids, dtype=np.int64)
    single = ids.ndim == 1
    ids2 = ids[None] if single else ids
    width, d_in, maps = filters.shape
    if d_in != depth:
        raise ValueError(f"conv1d_onehot depth {depth} does not match filters {filters.shape}")
    n, length = ids2.shape
    if length < width:
        raise ValueError(f"conv1d input length {length} shorter than filter width {width}")
    steps = length - width + 1
    safe = np.where((ids2 >= 0) & (ids2 < depth), ids2, depth)
    # an extra all-zero row absorbs PAD positions
    table = np.concatenate([filters.data, np.zeros((width, 1, maps), dtype=filters.data.dtype)], axis=1)
    out = np.zeros((n, steps, maps), dtype=filters.data.dtype)
    for w in range(width):
        out += table[w][safe[:, w:w + steps]]
    out += bias.data
    s = _sign("conv1d")

    def bw(g):
        g2 = (g[None] if single else g).reshape(n * steps, maps)
        rows = np.arange(n * steps)
        ones = np.ones(n * steps, dtype=g2.dtype)
        dw = np.empty(filters.shape, dtype=g2.dtype)
        for w in range(width):
            scatter = sp.csr_matrix((ones, (safe[:, w:w + steps].reshape(-1), rows)),
                                    shape=(depth + 1, n * steps))
            dw[w] = np.asarray(scatter @ g2)[:depth]
        _accum(filters, s * dw)
        _accum(bias, s * g2.sum(axis=0))

    return _node(out[0] if single else out, (filters, bias), bw)


def maxpool1d(x: Tensor, width: int, stride: int | None = None) -> Tensor:
    """Max over windows along the time axis; output length ``(L-width)//stride + 1``."""
    stride = width if stride is None else stride
    single = x.ndim == 2
    xd = x.data[None] if single else x.data
    length = xd.shape[1]
    if length < width:
        raise ValueError(f"maxpool1d input length {length} shorter than window {width}")
    steps = (length - width) // stride + 1
    idx = np.arange(steps)[:, None] * stride + np.arange(width)[None, :]
    win = xd[:, idx, :]                       # (B, T, width, M)
    arg = win.argmax(axis=2)                  # first max on ties
    out = np.take_along_axis(win, arg[:, :, None, :], axis=2)[:, :, 0, :]

    def bw(g):
        g2 = g[None] if single else g
        dx = np.zeros_like(xd)
        for w in range(width):
            # positions idx[:, w] are distinct, so fancy-index += is safe
            dx[:, idx[:, w], :] += g2 * (arg == w)
        _accum(x, _sign("maxpool1d") * (dx[0] if single else dx))

    return _node(out[0] if single else out, (x,), bw)


def global_maxpool(x: Tensor) -> Tensor:
    """1-max pooling over time: (B, L, M) -> (B, M), or (L, M) -> (M,)."""
    single = x.ndim == 2
    xd = x.data[None] if single else x.data
    if xd.shape[1] < 1:
        raise ValueError("global_maxpool needs at least one time step")
    arg = xd.argmax(axis=1)                   # (B, M), first max on ties
    out = np.take_along_axis(xd, arg[:, None, :], axis=1)[:, 0, :]

    def bw(g):
        g2 = g[None] if single else g
        dx = np.zeros_like(xd)
        np.put_along_axis(dx, arg[:, None, :], g2[:, None, :], axis=1)
        _accum(x, _sign("global_maxpool") * (dx[0] if single else dx))

    return _node(out[0] if single else out, (x,), bw)


# ---------------------------------------------------------------- losses

def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent(logits: Tensor, gold) -> tuple[Tensor, np.ndarray]:
    """Mean cross-entropy of softmax(logits) against integer gold labels.

    Accepts (C,) logits with a scalar gold or (B, C) logits with B golds.
    Returns the loss tensor and the probability array.
    """
    single = logits.ndim == 1
    z = logits.data[None] if single else logits.data
    gold = np.atleast_1d(np.asarray(gold, dtype=np.int64))
    n, c = z.shape
    if c < 2:
        raise ValueError("softmax_xent needs at least two classes")
    if gold.shape[0] != n:
        raise ValueError(f"got {gold.shape[0]} gold labels for {n} rows")
    if np.any(gold < 0) or np.any(gold >= c):
        raise ValueError(f"gold label out of range for {c} classes: {gold.tolist()}")
    shifted = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=1))
    logp = shifted - logsum[:, None]
    probs = np.exp(logp)
    rows = np.arange(n)
    loss = -logp[rows, gold].mean()

    def bw(g):
        d = probs.copy()
        d[rows, gold] -= 1.0
        d *= g / n
        _accum(logits, _sign("softmax_xent") * (d[0] if single else d))

    return _node(np.asarray(loss), (logits,), bw), (probs[0] if single else probs)


def squared_hinge(scores: Tensor, gold) -> Tensor:
    """One-vs-rest squared hinge, summed over classes and averaged over the batch.

    Target is +1 for the gold class and -1 for every other class.
    """
    z = scores.data
    gold = np.asarray(gold, dtype=np.int64)
    n, c = z.shape
    y = -np.ones_like(z)
    y[np.arange(n), gold] = 1.0
    slack = np.maximum(0.0, 1.0 - y * z)
    loss = (slack ** 2).sum() / n

    def bw(g):
        _accum(scores, g * (-2.0 * y * slack) / n)

    return _node(np.asarray(loss), (scores,), bw)


# ---------------------------------------------------------------- parameters

@dataclass
class Param:
    tensor: Tensor
    trainable: bool
    m: np.ndarray
    v: np.ndarray


class ParamStore:
    """Named parameter tensors with Adam moments.

    Non-trainable entries are stored as tensors that never request a
    gradient, so backward never touches them.
    """

    def __init__(self):
        self._params: dict[str, Param] = {}
        self._grads_ready = False

    def add(self, name: str, value, trainable: bool = True) -> Tensor:
        if name in self._params:
            raise KeyError(f"parameter {name!r} already exists")
        arr = np.array(value, copy=True)
        t = Tensor(arr, requires_grad=trainable, name=name)
        self._params[name] = Param(t, trainable, np.zeros_like(t.data), np.zeros_like(t.data))
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name].tensor

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self):
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def trainable_names(self) -> list[str]:
        return [n for n, p in self._params.items() if p.trainable]

    def param(self, name: str) -> Param:
        return self._params[name]

    def zero_grad(self):
        for p in self._params.values():
            if p.trainable:
                if p.tensor.grad is None:
                    p.tensor.grad = np.zeros_like(p.tensor.data)
                else:
                    p.tensor.grad.fill(0)
            else:
                p.tensor.grad = None
        self._grads_ready = False

    def state(self) -> dict[str, np.ndarray]:
        """Copy of every parameter value, keyed by name."""
        return {n: p.tensor.data.copy() for n, p in self._params.items()}

    def load_state(self, state: dict[str, np.ndarray]):
        missing = set(self._params) ^ set(state)
        if missing:
            raise KeyError(f"state does not match store; differing names: {sorted(missing)}")
        for n, p in self._params.items():
            arr = np.asarray(state[n])
            if arr.shape != p.tensor.shape:
                raise ValueError(f"shape mismatch for {n}: {arr.shape} vs {p.tensor.shape}")
            p.tensor.data[...] = arr

    def digest(self, name: str | None = None) -> str:
        h = hashlib.sha256()
        for n in ([name] if name else sorted(self._params)):
            arr = np.ascontiguousarray(self._params[n].tensor.data)
            h.update(n.encode())
            h.update(str(arr.dtype).encode() + str(arr.shape).encode())
            h.update(arr.tobytes())
        return h.hexdigest()


def is_weight(name: str) -> bool:
    """Default L2 filter: weight matrices and filters, not biases or embeddings."""
    return name.endswith(".weight")


def add_l2(loss: Tensor, store: ParamStore, lam: float, include=is_weight) -> Tensor:
    """Return ``loss + lam * sum ||w||^2`` over trainable params accepted by ``include``."""
    if lam < 0:
        raise ValueError(f"L2 constant must be >= 0, got {lam}")
    if lam == 0:
        return loss
    for name in store.trainable_names():
        if include(name):
            loss = loss + mul(sum_squares(store[name]), lam)
    return loss


@dataclass
class AdamHyper:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.lr <= 0 or self.eps <= 0:
            raise ValueError("Adam lr and eps must be positive")
        if self.t < 0:
            raise ValueError("Adam step counter must be >= 0")


def adam_step(store: ParamStore, hyper: AdamHyper) -> ParamStore:
    """One bias-corrected Adam update on every trainable parameter, then zero grads."""
    if not store._grads_ready:
        raise GraphError("adam_step called before backward populated gradients")
    hyper.t += 1
    c1 = 1.0 - hyper.beta1 ** hyper.t
    c2 = 1.0 - hyper.beta2 ** hyper.t
    for name in store.trainable_names():
        p = store.param(name)
        g = p.tensor.grad
        p.m *= hyper.beta1
        p.m += (1.0 - hyper.beta1) * g
        p.v *= hyper.beta2
        p.v += (1.0 - hyper.beta2) * g * g
        p.tensor.data -= hyper.lr * (p.m / c1) / (np.sqrt(p.v / c2) + hyper.eps)
    store.zero_grad()
    return store


def check_finite(store: ParamStore) -> dict[str, float]:
    """Parameter L2 norms; raises NumericError if any value is non-finite."""
    norms = {}
    for name in store.names():
        data = store[name].data
        norms[name] = float(np.sqrt(np.sum(data * data)))
        if not np.all(np.isfinite(data)):
            raise NumericError(f"parameter {name} has non-finite values")
    return norms


# ---------------------------------------------------------------- gradient check

def grad_check_tensors(loss_fn, store: ParamStore, eps: float = 1e-5, n_coords: int = 20,
                       seed: int = 0, floor: float = 1e-7) -> dict[str, float]:
    """Compare analytic gradients with central differences, per parameter tensor.

    ``loss_fn`` takes no arguments and rebuilds the forward graph, returning a
    scalar tensor; it must be deterministic. Up to ``n_coords`` coordinates
    are sampled per trainable tensor. The relative error of one coordinate is
    ``|a - n| / max(|a| + |n|, floor)``; the floor keeps coordinates whose true
    gradient sits at finite-difference noise level from dominating.
    """
    rng = np.random.default_rng(seed)
    loss = loss_fn()
    backward(loss, store)
    analytic = {n: store[n].grad.copy() for n in store.trainable_names()}
    store.zero_grad()

    errors = {}
    for name in store.trainable_names():
        data = store[name].data
        flat = data.reshape(-1)
        k = min(n_coords, flat.size)
        coords = rng.choice(flat.size, size=k, replace=False)
        worst = 0.0
        for i in coords:
            orig = flat[i]
            flat[i] = orig + eps
            up = float(loss_fn().data)
            flat[i] = orig - eps
            down = float(loss_fn().data)
            flat[i] = orig
            num = (up - down) / (2 * eps)
            a = float(analytic[name].reshape(-1)[i])
            worst = max(worst, abs(a - num) / max(abs(a) + abs(num), floor))
        errors[name] = worst
    return errors


def grad_check(loss_fn, store: ParamStore, eps: float = 1e-5, n_coords: int = 20,
               seed: int = 0) -> float:
    """Maximum relative error over :func:`grad_check_tensors`."""
    errs = grad_check_tensors(loss_fn, store, eps=eps, n_coords=n_coords, seed=seed)
    return max(errs.values()) if errs else 0.0
