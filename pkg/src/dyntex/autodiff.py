"""Reverse-mode automatic differentiation over dense video tensors.

Video tensors are laid out (batch, channels, frames, height, width), float32
by default (float64 is allowed so finite-difference oracles can run at higher
precision). Every operation records per-input backward closures that are
themselves built from these same operations, so a gradient is an ordinary
graph node and can be differentiated again. That second-order path is what
the critic's gradient-norm penalty needs.

The convolution family is closed under differentiation through three kernels
that are the three partial contractions of one trilinear form:

    conv(x, w)      -> output        (stride 1, zero padding)
    conv_dx(g, w)   -> input-shaped  (adjoint in x; a conv with the kernel
                                      flipped and channel axes swapped)
    conv_dw(x, g)   -> kernel-shaped (adjoint in w)

Each one's backward is expressed with the other two, so any order of
differentiation stays inside the set.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from .errors import ShapeError

_GRAD_STACK = [True]


@contextmanager
def no_grad():
    """Disable graph recording inside the block; forward values only."""
    _GRAD_STACK.append(False)
    try:
        yield
    finally:
        _GRAD_STACK.pop()


def grad_enabled() -> bool:
    return _GRAD_STACK[-1]


class Tensor:
    """A numpy array plus the bookkeeping reverse-mode differentiation needs."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_vjps")

    def __init__(self, data, requires_grad: bool = False):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._vjps = ()

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{flag})"

    # arithmetic ---------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return mul(self, power(other, -1.0))
        return mul(self, 1.0 / float(other))

    def __rtruediv__(self, other):
        return mul(power(self, -1.0), other)

    def __pow__(self, p):
        return power(self, p)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, shape):
        return reshape(self, shape)

    def backward(self):
        """Populate .grad on every requires_grad leaf below this scalar."""
        leaves = [n for n in _topo(self) if not n._parents and n.requires_grad]
        for leaf, g in zip(leaves, grad(self, leaves)):
            leaf.grad = g if leaf.grad is None else Tensor(leaf.grad.data + g.data)


def _as_tensor(x, like: Tensor | None = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.data.dtype if like is not None else np.float32
    return Tensor(np.asarray(x, dtype=dtype))


def _op(data: np.ndarray, parents: tuple, vjps: tuple) -> Tensor:
    """Build an op result; records the graph only while grads are enabled."""
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    if _GRAD_STACK[-1] and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._vjps = vjps
    else:
        out.requires_grad = False
        out._parents = ()
        out._vjps = ()
    return out


def _reduce_to(g: Tensor, shape: tuple) -> Tensor:
    """Sum g down to `shape` (the adjoint of numpy broadcasting)."""
    extra = g.data.ndim - len(shape)
    if extra > 0:
        g = tsum(g, axis=tuple(range(extra)))
    axes = tuple(
        i for i, (gd, sd) in enumerate(zip(g.data.shape, shape)) if sd == 1 and gd != 1
    )
    if axes:
        g = tsum(g, axis=axes, keepdims=True)
    if g.data.shape != shape:
        g = reshape(g, shape)
    return g


# elementwise and broadcasting ops ---------------------------------------


def add(a, b) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, like=a)
    return _op(
        a.data + b.data,
        (a, b),
        (lambda g: _reduce_to(g, a.data.shape), lambda g: _reduce_to(g, b.data.shape)),
    )


def sub(a, b) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, like=a)
    return _op(
        a.data - b.data,
        (a, b),
        (
            lambda g: _reduce_to(g, a.data.shape),
            lambda g: _reduce_to(neg(g), b.data.shape),
        ),
    )


def mul(a, b) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, like=a)
    return _op(
        a.data * b.data,
        (a, b),
        (
            lambda g: _reduce_to(mul(g, b), a.data.shape),
            lambda g: _reduce_to(mul(g, a), b.data.shape),
        ),
    )


def neg(a) -> Tensor:
    a = _as_tensor(a)
    return _op(-a.data, (a,), (lambda g: neg(g),))


def power(a, p) -> Tensor:
    """Elementwise a**p for a scalar exponent p."""
    a = _as_tensor(a)
    p = float(p)
    out = _op(a.data**p, (a,), ())
    if out._parents:
        out._vjps = (lambda g: mul(g, mul(power(a, p - 1.0), p)),)
    return out


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    shape = a.data.shape
    data = np.asarray(a.data.sum(axis=axis, keepdims=keepdims))

    def vjp(g):
        if axis is not None and not keepdims:
            axes = axis if isinstance(axis, tuple) else (axis,)
            kshape = tuple(
                1 if i in {ax % len(shape) for ax in axes} else d
                for i, d in enumerate(shape)
            )
            g = reshape(g, kshape)
        elif axis is None and not keepdims:
            g = reshape(g, (1,) * len(shape))
        return broadcast_to(g, shape)

    return _op(data, (a,), (vjp,))


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    if axis is None:
        n = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        n = int(np.prod([a.data.shape[ax] for ax in axes]))
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def broadcast_to(a: Tensor, shape) -> Tensor:
    a = _as_tensor(a)
    # read-only view is fine: results are never written in place
    return _op(
        np.broadcast_to(a.data, shape), (a,), (lambda g: _reduce_to(g, a.data.shape),)
    )


def reshape(a: Tensor, shape) -> Tensor:
    a = _as_tensor(a)
    old = a.data.shape
    return _op(a.data.reshape(shape), (a,), (lambda g: reshape(g, old),))


def flip(a: Tensor, axes) -> Tensor:
    a = _as_tensor(a)
    return _op(np.flip(a.data, axes), (a,), (lambda g: flip(g, axes),))


def swapaxes(a: Tensor, ax1: int, ax2: int) -> Tensor:
    a = _as_tensor(a)
    return _op(np.swapaxes(a.data, ax1, ax2), (a,), (lambda g: swapaxes(g, ax1, ax2),))


# activations -------------------------------------------------------------


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    y = np.tanh(a.data)
    # float rounding saturates tanh(|x| >~ 20) to exactly +-1; pull those onto
    # the largest representable value strictly inside (-1, 1)
    lim = np.nextafter(y.dtype.type(1.0), y.dtype.type(0.0))
    np.clip(y, -lim, lim, out=y)
    out = _op(y, (a,), ())
    if out._parents:
        # rebuild tanh(a) in the vjp rather than closing over `out`: keeps the
        # graph cycle-free (prompt refcount frees) and twice differentiable
        out._vjps = (lambda g: mul(g, sub(1.0, mul(tanh(a), tanh(a)))),)
    return out


def leaky_relu(a, slope: float = 0.2) -> Tensor:
    if not 0.0 < slope < 1.0:
        raise ValueError(f"leaky_relu slope must lie in (0, 1), got {slope}")
    a = _as_tensor(a)
    d = a.data
    out = _op(np.maximum(d, d * slope), (a,), ())
    if out._parents:
        cell = []  # mask built on first backward only

        def vjp(g):
            if not cell:
                cell.append(Tensor(np.where(d > 0, 1.0, slope).astype(d.dtype)))
            return mul(g, cell[0])

        out._vjps = (vjp,)
    return out


def clamp(a, lo: float, hi: float) -> Tensor:
    a = _as_tensor(a)
    d = a.data
    out = _op(np.clip(d, lo, hi), (a,), ())
    if out._parents:
        cell = []

        def vjp(g):
            if not cell:
                cell.append(Tensor(((d > lo) & (d < hi)).astype(d.dtype)))
            return mul(g, cell[0])

        out._vjps = (vjp,)
    return out


# convolution family -------------------------------------------------------


def _pad_video(x: np.ndarray, pt: int, ph: int, pw: int) -> np.ndarray:
    if pt == 0 and ph == 0 and pw == 0:
        return x
    B, C, T, H, W = x.shape
    out = np.zeros((B, C, T + 2 * pt, H + 2 * ph, W + 2 * pw), dtype=x.dtype)
    out[:, :, pt : pt + T, ph : ph + H, pw : pw + W] = x
    return out


def _im2col(xp: np.ndarray, kdims, odims) -> np.ndarray:
    """Unfold padded video xp into a (Ci*K, B*P) matrix, K-major per channel."""
    B, Ci = xp.shape[:2]
    kt, kh, kw = kdims
    To, Ho, Wo = odims
    P = To * Ho * Wo
    col = np.empty((Ci, kt * kh * kw, B * P), dtype=xp.dtype)
    single = xp[0] if B == 1 else None
    k = 0
    for dt in range(kt):
        for dh in range(kh):
            for dw in range(kw):
                if single is not None:
                    col[:, k, :] = single[
                        :, dt : dt + To, dh : dh + Ho, dw : dw + Wo
                    ].reshape(Ci, P)
                else:
                    sl = xp[:, :, dt : dt + To, dh : dh + Ho, dw : dw + Wo]
                    col[:, k, :] = sl.transpose(1, 0, 2, 3, 4).reshape(Ci, B * P)
                k += 1
    return col.reshape(Ci * kt * kh * kw, B * P)


# unfolded-input matrices above this many bytes are processed (and never
# cached) in frame slabs, bounding peak memory at large spatial sizes
_COL_BYTES_LIMIT = 192 * 1024 * 1024


def _frame_slabs(xp, w, odims, pad):
    """Yield (padded-input slab, frames in the corresponding output slab)."""
    kt = w.shape[2]
    To = odims[0]
    per_frame = xp.shape[1] * w.shape[2] * w.shape[3] * w.shape[4] * (
        xp.shape[0] * odims[1] * odims[2]
    ) * xp.dtype.itemsize
    slab = max(1, min(To, int(_COL_BYTES_LIMIT // max(per_frame, 1))))
    for t0 in range(0, To, slab):
        t1 = min(t0 + slab, To)
        yield xp[:, :, t0 : t1 + kt - 1], t1 - t0


def _conv_raw(x: np.ndarray, w: np.ndarray, pad) -> tuple[np.ndarray, np.ndarray | None]:
    B, Ci, T, H, W = x.shape
    Co, Ciw, kt, kh, kw = w.shape
    if Ciw != Ci:
        raise ShapeError(f"conv input has {Ci} channels but kernel expects {Ciw}")
    pt, ph, pw = pad
    To, Ho, Wo = T + 2 * pt - kt + 1, H + 2 * ph - kh + 1, W + 2 * pw - kw + 1
    if min(To, Ho, Wo) < 1:
        raise ShapeError(
            f"conv output would be empty: input {(T, H, W)}, kernel {(kt, kh, kw)}, pad {pad}"
        )
    xp = _pad_video(x, pt, ph, pw)
    wm = np.ascontiguousarray(w.reshape(Co, -1))
    col_bytes = Ci * kt * kh * kw * B * To * Ho * Wo * xp.dtype.itemsize
    if col_bytes <= _COL_BYTES_LIMIT:
        col = _im2col(xp, (kt, kh, kw), (To, Ho, Wo))
        out = wm @ col
        out = np.ascontiguousarray(
            out.reshape(Co, B, To, Ho, Wo).transpose(1, 0, 2, 3, 4)
        )
        return out, col
    out = np.empty((B, Co, To, Ho, Wo), dtype=xp.dtype)
    t0 = 0
    for xslab, frames in _frame_slabs(xp, w, (To, Ho, Wo), pad):
        part = wm @ _im2col(xslab, (kt, kh, kw), (frames, Ho, Wo))
        out[:, :, t0 : t0 + frames] = part.reshape(
            Co, B, frames, Ho, Wo
        ).transpose(1, 0, 2, 3, 4)
        t0 += frames
    return out, None


def _convw_raw(x: np.ndarray, g: np.ndarray, pad, kdims, col=None) -> np.ndarray:
    B, Ci = x.shape[:2]
    Bg, Co, To, Ho, Wo = g.shape
    kt, kh, kw = kdims
    gm = np.ascontiguousarray(g.transpose(1, 0, 2, 3, 4).reshape(Co, -1))
    if col is not None:
        return (gm @ col.T).reshape(Co, Ci, kt, kh, kw)
    xp = _pad_video(x, *pad)
    col_bytes = Ci * kt * kh * kw * B * To * Ho * Wo * xp.dtype.itemsize
    if col_bytes <= _COL_BYTES_LIMIT:
        col = _im2col(xp, kdims, (To, Ho, Wo))
        return (gm @ col.T).reshape(Co, Ci, kt, kh, kw)
    acc = np.zeros((Co, Ci * kt * kh * kw), dtype=xp.dtype)
    t0 = 0
    gmat = g.transpose(1, 0, 2, 3, 4)
    for xslab, frames in _frame_slabs(xp, np.empty((Co, Ci, kt, kh, kw)), (To, Ho, Wo), pad):
        gslab = np.ascontiguousarray(gmat[:, :, t0 : t0 + frames].reshape(Co, -1))
        acc += gslab @ _im2col(xslab, kdims, (frames, Ho, Wo)).T
        t0 += frames
    return acc.reshape(Co, Ci, kt, kh, kw)


def _flip_kernel(w: Tensor) -> Tensor:
    """Flip a (Co,Ci,kt,kh,kw) kernel in its window axes and swap channel axes."""
    return swapaxes(flip(w, (2, 3, 4)), 0, 1)


def _dual_pad(pad, kdims):
    return tuple(k - 1 - p for k, p in zip(kdims, pad))


def _conv_op(x: Tensor, w: Tensor, pad) -> Tensor:
    data, col = _conv_raw(x.data, w.data, pad)
    out = _op(data, (x, w), ())
    if out._parents:
        kdims = w.data.shape[2:]
        # hand the unfolded input to the weight-gradient pass once, then free it
        cache = [col]

        def vjp_x(g):
            return _conv_op(g, _flip_kernel(w), _dual_pad(pad, kdims))

        def vjp_w(g):
            saved, cache[0] = cache[0], None
            return _convw_op(x, g, pad, kdims, col=saved)

        out._vjps = (vjp_x, vjp_w)
    return out


def _convw_op(x: Tensor, g: Tensor, pad, kdims, col=None) -> Tensor:
    out = _op(_convw_raw(x.data, g.data, pad, kdims, col=col), (x, g), ())
    if out._parents:

        def vjp_x(u):
            return _conv_op(g, _flip_kernel(u), _dual_pad(pad, kdims))

        def vjp_g(u):
            return _conv_op(x, u, pad)

        out._vjps = (vjp_x, vjp_g)
    return out


def conv3d(x: Tensor, weight: Tensor, bias=None, padding="same") -> Tensor:
    """3-D convolution, stride 1, zero padding.

    x: (B, Ci, T, H, W); weight: (Co, Ci, kt, kh, kw); bias: (Co,) or None.
    padding="same" keeps output dims equal to input dims (odd kernels only);
    an explicit (pt, ph, pw) tuple is also accepted.
    """
    x = _as_tensor(x)
    weight = _as_tensor(weight)
    if x.ndim != 5 or weight.ndim != 5:
        raise ShapeError(
            f"conv3d wants 5-D input and kernel, got {x.ndim}-D and {weight.ndim}-D"
        )
    if not np.all(np.isfinite(x.data)):
        raise ValueError("conv3d input contains non-finite values")
    kdims = weight.data.shape[2:]
    if padding == "same":
        if any(k % 2 == 0 for k in kdims):
            raise ShapeError(f"'same' padding needs odd kernel dims, got {kdims}")
        padding = tuple((k - 1) // 2 for k in kdims)
    out = _conv_op(x, weight, tuple(padding))
    if bias is not None:
        bias = _as_tensor(bias)
        if bias.data.shape != (weight.data.shape[0],):
            raise ShapeError(
                f"bias shape {bias.data.shape} does not match {weight.data.shape[0]} output channels"
            )
        out = add(out, reshape(bias, (1, -1, 1, 1, 1)))
    return out


# spatial resampling -------------------------------------------------------


def _linear_interp_matrix(src: int, dst: int, dtype) -> np.ndarray:
    """dst x src bilinear interpolation matrix, endpoints aligned."""
    m = np.zeros((dst, src), dtype=dtype)
    if src == 1:
        m[:, 0] = 1.0
        return m
    if dst == 1:
        m[0, 0] = 1.0
        return m
    pos = np.arange(dst) * (src - 1) / (dst - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, src - 1)
    frac = pos - lo
    m[np.arange(dst), lo] += 1.0 - frac
    m[np.arange(dst), hi] += frac
    return m


def _resample_hw(x: Tensor, mat_h: np.ndarray, mat_w_t: np.ndarray) -> Tensor:
    """y = mat_h @ x @ mat_w_t over the trailing two axes; adjoint = transposes."""
    data = np.matmul(mat_h, np.matmul(x.data, mat_w_t))
    return _op(
        data, (x,), (lambda g: _resample_hw(g, mat_h.T.copy(), mat_w_t.T.copy()),)
    )


def upsample_spatial(x: Tensor, target_h: int, target_w: int) -> Tensor:
    """Bilinear upsampling of the trailing (H, W) axes; other axes untouched."""
    x = _as_tensor(x)
    h, w = x.data.shape[-2], x.data.shape[-1]
    if target_h < h or target_w < w:
        raise ShapeError(
            f"upsample target ({target_h}, {target_w}) smaller than source ({h}, {w})"
        )
    if (target_h, target_w) == (h, w):
        return x
    dt = x.data.dtype
    return _resample_hw(
        x, _linear_interp_matrix(h, target_h, dt), _linear_interp_matrix(w, target_w, dt).T.copy()
    )


# batch normalization ------------------------------------------------------


class BatchNormState:
    """Running mean/variance for one normalized layer."""

    __slots__ = ("mean", "var", "momentum")

    def __init__(self, channels: int, momentum: float = 0.1):
        self.mean = np.zeros(channels, dtype=np.float32)
        self.var = np.ones(channels, dtype=np.float32)
        self.momentum = momentum

    def update(self, batch_mean: np.ndarray, batch_var: np.ndarray):
        m = self.momentum
        self.mean = ((1 - m) * self.mean + m * batch_mean).astype(np.float32)
        self.var = ((1 - m) * self.var + m * batch_var).astype(np.float32)

    def copy(self) -> "BatchNormState":
        out = BatchNormState(len(self.mean), self.momentum)
        out.mean = self.mean.copy()
        out.var = self.var.copy()
        return out


_BN_AXES = (0, 2, 3, 4)


def batchnorm3d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    state: BatchNormState | None = None,
    eps: float = 1e-5,
    training: bool = True,
    update_stats: bool = False,
) -> Tensor:
    """Per-channel normalization over (batch, frames, height, width).

    training=True normalizes with the batch's own statistics; training=False
    uses the running statistics in `state`. eps keeps a zero-variance channel
    finite. Differentiable in x, gamma and beta.
    """
    x = _as_tensor(x)
    if x.ndim != 5:
        raise ShapeError(f"batchnorm3d wants a 5-D tensor, got {x.ndim}-D")
    gamma = _as_tensor(gamma)
    beta = _as_tensor(beta)
    C = x.data.shape[1]
    if gamma.data.shape != (C,) or beta.data.shape != (C,):
        raise ShapeError(
            f"gamma/beta must have shape ({C},), got {gamma.data.shape} and {beta.data.shape}"
        )
    if eps <= 0:
        raise ValueError("batchnorm eps must be positive")
    cshape = (1, C, 1, 1, 1)
    if training:
        mu = tmean(x, axis=_BN_AXES, keepdims=True)
        xc = sub(x, mu)
        var = tmean(mul(xc, xc), axis=_BN_AXES, keepdims=True)
        if update_stats:
            if state is None:
                raise ValueError("update_stats requires a BatchNormState")
            state.update(mu.data.reshape(-1), var.data.reshape(-1))
        inv = power(add(var, eps), -0.5)
    else:
        if state is None:
            raise ValueError("eval mode requires a BatchNormState")
        mu = Tensor(state.mean.reshape(cshape).astype(x.data.dtype))
        xc = sub(x, mu)
        inv = Tensor(
            (1.0 / np.sqrt(state.var.astype(np.float64) + eps))
            .reshape(cshape)
            .astype(x.data.dtype)
        )
    scale = mul(inv, reshape(gamma, cshape))
    return add(mul(xc, scale), reshape(beta, cshape))


# backward machinery -------------------------------------------------------


def _topo(root: Tensor) -> list:
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    return order  # parents before consumers


class _nullctx:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def grad(
    output: Tensor,
    inputs,
    create_graph: bool = False,
    grad_output: Tensor | None = None,
) -> list[Tensor]:
    """Gradients of a scalar `output` with respect to each tensor in `inputs`.

    With create_graph=True the returned gradients carry their own graph and
    can be differentiated again. Inputs unreachable from the output get zero
    gradients. Nothing's .grad field is touched.
    """
    inputs = list(inputs)
    if grad_output is None:
        if output.data.size != 1:
            raise ShapeError(
                f"grad needs a scalar output (or an explicit grad_output); got shape {output.data.shape}"
            )
        grad_output = Tensor(np.ones_like(output.data))
    topo = _topo(output)
    wanted = {id(t) for t in inputs}
    needs: dict[int, bool] = {}
    for node in topo:  # parents first, so lookups below are already filled
        needs[id(node)] = id(node) in wanted or any(
            needs.get(id(p), False) for p in node._parents
        )
    table: dict[int, Tensor] = {id(output): grad_output}
    results: dict[int, Tensor] = {}
    ctx = _nullctx() if create_graph else no_grad()
    with ctx:
        for node in reversed(topo):
            g = table.pop(id(node), None)
            if g is None:
                continue
            if id(node) in wanted:
                prev = results.get(id(node))
                results[id(node)] = g if prev is None else add(prev, g)
            for p, vjp in zip(node._parents, node._vjps):
                if not needs.get(id(p), False):
                    continue
                contrib = vjp(g)
                prev = table.get(id(p))
                table[id(p)] = contrib if prev is None else add(prev, contrib)
    return [
        results.get(id(t), None) or Tensor(np.zeros_like(t.data)) for t in inputs
    ]


def grad_check(fn, point, step: float = 1e-3, guard: float = 1e-6) -> float:
    """Worst per-coordinate relative error between reverse-mode and central
    finite-difference gradients of a scalar-valued `fn` at `point`.

    The finite-difference oracle runs the function in float64. `fn` must be
    deterministic.
    """
    if step <= 0:
        raise ValueError("grad_check step must be positive")
    base = point.data if isinstance(point, Tensor) else np.asarray(point)
    x = Tensor(base.astype(np.float64), requires_grad=True)
    out = fn(x)
    if out.data.size != 1:
        raise ShapeError(f"grad_check needs a scalar function, got shape {out.data.shape}")
    (g,) = grad(out, [x])
    analytic = np.asarray(g.data, dtype=np.float64).reshape(x.data.shape)

    fd = np.zeros_like(x.data)
    flat = x.data.ravel()
    fd_flat = fd.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = float(fn(Tensor(x.data.copy())).data)
        flat[i] = orig - step
        lo = float(fn(Tensor(x.data.copy())).data)
        flat[i] = orig
        fd_flat[i] = (hi - lo) / (2.0 * step)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), guard)
    return float(np.max(np.abs(analytic - fd) / denom))
