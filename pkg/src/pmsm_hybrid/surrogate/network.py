"""Multi-branch feed-forward network with hand-written reverse-mode gradients.

Layout: a common trunk of dense layers, then one or more branches that each
read the trunk's last activation. Hidden layers use the configured
activation; branch output layers are linear.

Parameters live in one flat list ``net.params`` ordered as
``[W, b]`` per layer: trunk layers first, then branches in topology order.
Gradients use the same list layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, NumericError, ShapeError

ACTIVATIONS = ("elu", "relu", "tanh", "softplus")
LOSSES = ("mae", "mse", "huber")
HUBER_DELTA = 1.0

HYBRID_BRANCHES = ("loss", "torque", "flux1", "flux2", "flux3")


# activations: f(z) and f'(z) expressed through (z, y=f(z))

def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "elu":
        return np.where(z > 0.0, z, np.expm1(np.minimum(z, 0.0)))
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "softplus":
        return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    raise ConfigurationError(f"unknown activation {name!r}")


def _act_grad(name: str, z: np.ndarray, y: np.ndarray) -> np.ndarray:
    if name == "elu":
        return np.where(z > 0.0, 1.0, y + 1.0)
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - y * y
    if name == "softplus":
        return 0.5 * (1.0 + np.tanh(0.5 * z))  # logistic sigmoid, overflow-free
    raise ConfigurationError(f"unknown activation {name!r}")


def activation(name: str, z) -> np.ndarray:
    return _act(name, np.asarray(z, dtype=np.float64))


# losses: mean over every output element of every branch

def loss_value(kind: str, residual: np.ndarray) -> np.ndarray:
    """Elementwise loss of ``residual = pred - target`` (not yet averaged)."""
    if kind == "mae":
        return np.abs(residual)
    if kind == "mse":
        return residual * residual
    if kind == "huber":
        a = np.abs(residual)
        return np.where(a <= HUBER_DELTA, 0.5 * residual * residual, HUBER_DELTA * (a - 0.5 * HUBER_DELTA))
    raise ConfigurationError(f"unknown loss {kind!r}")


def loss_grad(kind: str, residual: np.ndarray) -> np.ndarray:
    """Elementwise derivative; the subgradient of |r| at 0 is 0."""
    if kind == "mae":
        return np.sign(residual)
    if kind == "mse":
        return 2.0 * residual
    if kind == "huber":
        return np.clip(residual, -HUBER_DELTA, HUBER_DELTA)
    raise ConfigurationError(f"unknown loss {kind!r}")


def loss_mae(pred, target) -> float:
    return float(np.mean(np.abs(np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64))))


def total_loss(kind: str, preds: dict, targets: dict) -> float:
    total = 0.0
    count = 0
    for name, p in preds.items():
        total += float(np.sum(loss_value(kind, p - targets[name])))
        count += p.size
    return total / count


def spectral_basis(n: int) -> np.ndarray:
    """Orthonormal real DFT basis of length-``n`` periodic signals, one column per coefficient.

    Column order: constant, then cos/sin pairs by harmonic, then the Nyquist
    term for even ``n``. ``y @ B`` gives coefficients and ``c @ B.T`` inverts.
    """
    t = np.arange(n)
    cols = [np.full(n, 1.0 / np.sqrt(n))]
    for k in range(1, (n - 1) // 2 + 1):
        cols.append(np.sqrt(2.0 / n) * np.cos(2.0 * np.pi * k * t / n))
        cols.append(np.sqrt(2.0 / n) * np.sin(2.0 * np.pi * k * t / n))
    if n % 2 == 0:
        cols.append(np.cos(np.pi * t) / np.sqrt(n))
    return np.column_stack(cols)


@dataclass(frozen=True)
class Branch:
    """A branch head. ``spectral`` branches are standardized per harmonic of a periodic output."""

    name: str
    widths: tuple[int, ...]
    output_dim: int
    spectral: bool = False


@dataclass(frozen=True)
class NetTopology:
    input_dim: int
    common_layers: tuple[int, ...]
    branches: tuple[Branch, ...]
    activation: str = "elu"

    def __post_init__(self):
        if self.input_dim < 1:
            raise ConfigurationError("input_dim must be >= 1")
        if any(w < 1 for w in self.common_layers):
            raise ConfigurationError("common layer widths must be >= 1")
        if not self.branches:
            raise ConfigurationError("at least one branch is required")
        names = [b.name for b in self.branches]
        if len(set(names)) != len(names):
            raise ConfigurationError("branch names must be unique")
        for b in self.branches:
            if any(w < 1 for w in b.widths) or b.output_dim < 1:
                raise ConfigurationError(f"branch {b.name!r}: widths and output_dim must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"activation must be one of {ACTIVATIONS}")

    @property
    def trunk_dim(self) -> int:
        return self.common_layers[-1] if self.common_layers else self.input_dim

    def layer_shapes(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) per dense layer in parameter order."""
        dims = [self.input_dim, *self.common_layers]
        shapes = list(zip(dims[:-1], dims[1:]))
        for b in self.branches:
            bd = [self.trunk_dim, *b.widths, b.output_dim]
            shapes += list(zip(bd[:-1], bd[1:]))
        return shapes

    def param_count(self) -> int:
        return sum(i * o + o for i, o in self.layer_shapes())

    def output_dims(self) -> dict[str, int]:
        return {b.name: b.output_dim for b in self.branches}

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "common_layers": list(self.common_layers),
            "branches": [{"name": b.name, "widths": list(b.widths), "output_dim": b.output_dim,
                          "spectral": b.spectral} for b in self.branches],
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetTopology":
        return cls(int(d["input_dim"]), tuple(int(w) for w in d["common_layers"]),
                   tuple(Branch(b["name"], tuple(int(w) for w in b["widths"]), int(b["output_dim"]),
                                bool(b.get("spectral", False))) for b in d["branches"]),
                   d.get("activation", "elu"))


def hybrid_topology(input_dim: int, common, loss_torque_widths, flux_widths, n_steps: int = 15,
                    n_losses: int = 4, activation: str = "elu") -> NetTopology:
    lt = tuple(loss_torque_widths)
    fl = tuple(flux_widths)
    return NetTopology(input_dim, tuple(common), (
        Branch("loss", lt, n_losses),
        Branch("torque", lt, n_steps, spectral=True),
        Branch("flux1", fl, n_steps),
        Branch("flux2", fl, n_steps),
        Branch("flux3", fl, n_steps),
    ), activation)


@dataclass(eq=False)
class SurrogateNet:
    """Weights plus the normalizers that map raw inputs/outputs to network space.

    Inputs are min-max scaled with ``x_lo`` and ``x_span``; each branch output
    is standardized with ``y_mean[name]`` and ``y_std[name]``. Spectral
    branches are standardized in the ``spectral_basis`` coordinates, so a
    small periodic ripple gets the same weight in the loss as the mean level.
    """

    topology: NetTopology
    params: list[np.ndarray]
    x_lo: np.ndarray = None
    x_span: np.ndarray = None
    y_mean: dict[str, np.ndarray] = field(default_factory=dict)
    y_std: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        shapes = self.topology.layer_shapes()
        if len(self.params) != 2 * len(shapes):
            raise ShapeError(f"expected {2 * len(shapes)} parameter arrays, got {len(self.params)}")
        for k, (i, o) in enumerate(shapes):
            if self.params[2 * k].shape != (i, o) or self.params[2 * k + 1].shape != (o,):
                raise ShapeError(f"layer {k}: parameter shapes do not match ({i}, {o})")
        if self.x_lo is None:
            self.x_lo = np.zeros(self.topology.input_dim)
            self.x_span = np.ones(self.topology.input_dim)
        for b in self.topology.branches:
            self.y_mean.setdefault(b.name, np.zeros(b.output_dim))
            self.y_std.setdefault(b.name, np.ones(b.output_dim))

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "SurrogateNet":
        return SurrogateNet(self.topology, [p.copy() for p in self.params], self.x_lo.copy(),
                            self.x_span.copy(), {k: v.copy() for k, v in self.y_mean.items()},
                            {k: v.copy() for k, v in self.y_std.items()})

    def _segments(self):
        """Yield (branch name or None for trunk, list of (W, b), first global layer index)."""
        n_trunk = len(self.topology.common_layers)
        yield None, [(self.params[2 * j], self.params[2 * j + 1]) for j in range(n_trunk)], 0
        k = n_trunk
        for b in self.topology.branches:
            n = len(b.widths) + 1
            yield b.name, [(self.params[2 * j], self.params[2 * j + 1]) for j in range(k, k + n)], k
            k += n

    # normalization

    def normalize_inputs(self, x):
        return (np.asarray(x, dtype=np.float64) - self.x_lo) / self.x_span

    def denormalize_inputs(self, xn):
        return np.asarray(xn, dtype=np.float64) * self.x_span + self.x_lo

    def _bases(self) -> dict[str, np.ndarray]:
        return {b.name: spectral_basis(b.output_dim) for b in self.topology.branches if b.spectral}

    def normalize_outputs(self, y: dict) -> dict:
        bases = self._bases()
        out = {}
        for k, v in y.items():
            v = np.asarray(v, dtype=np.float64)
            if k in bases:
                v = v @ bases[k]
            out[k] = (v - self.y_mean[k]) / self.y_std[k]
        return out

    def denormalize_outputs(self, yn: dict) -> dict:
        bases = self._bases()
        out = {}
        for k, v in yn.items():
            v = np.asarray(v, dtype=np.float64) * self.y_std[k] + self.y_mean[k]
            out[k] = v @ bases[k].T if k in bases else v
        return out

    def fit_normalizers(self, x, y: dict) -> None:
        """Min-max input scaling and per-channel output standardization from ``x``, ``y``.

        Channels whose spread is below 1e-12 of the branch's largest spread
        are treated as constant and keep unit scale.
        """
        x = np.asarray(x, dtype=np.float64)
        lo, hi = x.min(axis=0), x.max(axis=0)
        span = hi - lo
        self.x_lo = lo
        self.x_span = np.where(span > 0.0, span, 1.0)
        bases = self._bases()
        for name, v in y.items():
            v = np.asarray(v, dtype=np.float64)
            if name in bases:
                v = v @ bases[name]
            std = v.std(axis=0)
            floor = 1e-12 * std.max() if std.size else 0.0
            self.y_mean[name] = v.mean(axis=0)
            self.y_std[name] = np.where(std > floor, std, 1.0)

    # forward / backward in normalized space

    def forward(self, xn, cache: list | None = None) -> dict[str, np.ndarray]:
        xn = np.asarray(xn, dtype=np.float64)
        if xn.ndim == 1:
            xn = xn[None, :]
        if xn.ndim != 2 or xn.shape[1] != self.topology.input_dim:
            raise ShapeError(f"input must have {self.topology.input_dim} columns, got shape {xn.shape}")
        act = self.topology.activation
        out = {}
        trunk = xn
        for name, layers, first in self._segments():
            a = trunk if name is not None else xn
            n_layers = len(layers)
            for j, (w, b) in enumerate(layers):
                z = a @ w + b
                linear = name is not None and j == n_layers - 1
                y = z if linear else _act(act, z)
                if not np.isfinite(y).all():
                    raise NumericError(first + j)
                if cache is not None:
                    cache.append((a, z, y, linear))
                a = y
            if name is None:
                trunk = a
            else:
                out[name] = a
        return out

    def predict_normalized(self, xn, chunk: int = 8192) -> dict[str, np.ndarray]:
        xn = np.asarray(xn, dtype=np.float64)
        parts = [self.forward(xn[s:s + chunk]) for s in range(0, max(xn.shape[0], 1), chunk)]
        return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}

    def predict(self, x, chunk: int = 8192) -> dict[str, np.ndarray]:
        """Raw inputs to raw (denormalized) branch outputs."""
        return self.denormalize_outputs(self.predict_normalized(self.normalize_inputs(x), chunk))

    def backward(self, xn, targets: dict, loss: str = "mae") -> tuple[float, list[np.ndarray]]:
        """Loss (mean over all output elements) and its gradient for every parameter."""
        cache: list = []
        preds = self.forward(xn, cache)
        count = sum(p.size for p in preds.values())
        value = 0.0
        grads: list[np.ndarray | None] = [None] * len(self.params)
        act = self.topology.activation
        n_trunk = len(self.topology.common_layers)
        trunk_grad = None
        # branches, last first, accumulating into the trunk output gradient
        seg = list(self._segments())
        for name, layers, first in reversed(seg[1:]):
            r = preds[name] - targets[name]
            value += float(np.sum(loss_value(loss, r)))
            g = loss_grad(loss, r) / count
            for j in reversed(range(len(layers))):
                a, z, y, linear = cache[first + j]
                if not linear:
                    g = g * _act_grad(act, z, y)
                k = first + j
                grads[2 * k] = a.T @ g
                grads[2 * k + 1] = g.sum(axis=0)
                g = g @ layers[j][0].T
            trunk_grad = g if trunk_grad is None else trunk_grad + g
        g = trunk_grad
        for j in reversed(range(n_trunk)):
            a, z, y, _ = cache[j]
            g = g * _act_grad(act, z, y)
            grads[2 * j] = a.T @ g
            grads[2 * j + 1] = g.sum(axis=0)
            if j > 0:
                g = g @ self.params[2 * j].T
        return value / count, grads


def init_params(topology: NetTopology, seed: int) -> list[np.ndarray]:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    params = []
    for i, o in topology.layer_shapes():
        limit = np.sqrt(6.0 / (i + o))
        params.append(rng.uniform(-limit, limit, size=(i, o)))
        params.append(np.zeros(o))
    return params


def build_net(topology: NetTopology, seed: int = 0) -> SurrogateNet:
    return SurrogateNet(topology, init_params(topology, seed))


def zero_net(topology: NetTopology) -> SurrogateNet:
    return SurrogateNet(topology, [np.zeros((i, o)) if k == 0 else np.zeros(o)
                                   for i, o in topology.layer_shapes() for k in (0, 1)])
