"""Small differentiable predictors with exact per-sample gradients.

Two model kinds: a bias-free linear model with squared loss, and a tanh MLP
with squared or softmax cross-entropy loss. Parameters live in one flat
vector, flattened layer-major with each layer's weight matrix (C order)
followed by its bias; the linear model's vector is just the weight vector.

All dataset-level contractions go through np.einsum with its default
non-BLAS evaluation, so row i of a batched computation is bitwise identical
to the same computation on the singleton batch {z_i}. That keeps the
documented identity exact: grad_mean is the plain arithmetic mean (numpy
pairwise summation over the sample axis) of grad_per_sample results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import (
    DimensionMismatchError,
    InvalidArgumentError,
    NumericDomainError,
)
from .numerics import RngStream, default_fd_step


@dataclass(frozen=True)
class ModelSpec:
    """Architecture and loss choice; validated on construction."""

    kind: str  # "linear" | "mlp"
    input_dim: int
    output_dim: int = 1
    layer_widths: tuple[int, ...] = ()  # mlp only, includes input and output
    activation: str = "tanh"
    loss: str = "squared"  # "squared" | "cross_entropy"

    def __post_init__(self):
        if self.input_dim < 1:
            raise InvalidArgumentError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.kind == "linear":
            if self.output_dim != 1 or self.loss != "squared":
                raise InvalidArgumentError("linear model is squared-loss, single-output")
            object.__setattr__(self, "layer_widths", ())
        elif self.kind == "mlp":
            w = tuple(int(x) for x in self.layer_widths)
            if len(w) < 2 or any(x < 1 for x in w):
                raise InvalidArgumentError(f"mlp needs widths >= 1 from input to output, got {w}")
            if w[0] != self.input_dim or w[-1] != self.output_dim:
                raise InvalidArgumentError(
                    f"mlp widths {w} must start at input_dim={self.input_dim} "
                    f"and end at output_dim={self.output_dim}"
                )
            if self.activation != "tanh":
                raise InvalidArgumentError(f"unsupported activation {self.activation!r}")
            object.__setattr__(self, "layer_widths", w)
        else:
            raise InvalidArgumentError(f"unknown model kind {self.kind!r}")
        if self.loss not in ("squared", "cross_entropy"):
            raise InvalidArgumentError(f"unknown loss {self.loss!r}")
        if self.loss == "squared" and self.output_dim != 1:
            raise InvalidArgumentError("squared loss is wired for a single output")
        if self.loss == "cross_entropy" and self.output_dim < 2:
            raise InvalidArgumentError("cross-entropy needs >= 2 output logits")


def linear_spec(input_dim: int) -> ModelSpec:
    return ModelSpec(kind="linear", input_dim=input_dim)


def mlp_spec(input_dim: int, hidden: tuple[int, ...], output_dim: int = 1,
             loss: str = "squared") -> ModelSpec:
    widths = (input_dim, *hidden, output_dim)
    return ModelSpec(kind="mlp", input_dim=input_dim, output_dim=output_dim,
                     layer_widths=widths, loss=loss)


def param_count(spec: ModelSpec) -> int:
    if spec.kind == "linear":
        return spec.input_dim
    w = spec.layer_widths
    return sum(w[i + 1] * w[i] + w[i + 1] for i in range(len(w) - 1))


def init_params(spec: ModelSpec, rng: RngStream) -> np.ndarray:
    """Linear starts at zero; mlp layers draw uniform +-1/sqrt(fan_in)."""
    if spec.kind == "linear":
        return np.zeros(spec.input_dim)
    gen = rng.generator()
    chunks = []
    widths = spec.layer_widths
    for l in range(len(widths) - 1):
        fan_in, fan_out = widths[l], widths[l + 1]
        bound = 1.0 / np.sqrt(fan_in)
        chunks.append(gen.uniform(-bound, bound, size=fan_out * fan_in))
        chunks.append(gen.uniform(-bound, bound, size=fan_out))
    return np.concatenate(chunks)


def unflatten(spec: ModelSpec, w: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split the flat vector into per-layer (weight, bias) pairs (mlp only)."""
    w = np.asarray(w, dtype=np.float64)
    expect = param_count(spec)
    if w.shape != (expect,):
        raise DimensionMismatchError(f"parameter vector shape {w.shape}, expected ({expect},)")
    layers = []
    pos = 0
    widths = spec.layer_widths
    for l in range(len(widths) - 1):
        fan_in, fan_out = widths[l], widths[l + 1]
        mat = w[pos:pos + fan_out * fan_in].reshape(fan_out, fan_in)
        pos += fan_out * fan_in
        bias = w[pos:pos + fan_out]
        pos += fan_out
        layers.append((mat, bias))
    return layers


def _check_inputs(spec: ModelSpec, w: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise DimensionMismatchError(
            f"features shape {X.shape} incompatible with input_dim={spec.input_dim}"
        )
    if w.shape != (param_count(spec),):
        raise DimensionMismatchError(
            f"parameter vector shape {w.shape}, expected ({param_count(spec)},)"
        )
    return w, X


def _forward_mlp(spec: ModelSpec, w: np.ndarray, X: np.ndarray):
    """Batched forward pass. Returns (outputs, hidden activations per layer)."""
    layers = unflatten(spec, w)
    hs = [X]  # hs[l] has shape (n, width_l)
    out = X
    for l, (mat, bias) in enumerate(layers):
        z = np.einsum("ni,oi->no", out, mat) + bias
        out = np.tanh(z) if l < len(layers) - 1 else z
        if l < len(layers) - 1:
            hs.append(out)
    return out, hs


def forward_batch(spec: ModelSpec, w: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Model outputs, shape (n, output_dim)."""
    w, X = _check_inputs(spec, w, X)
    if spec.kind == "linear":
        return np.einsum("ni,i->n", X, w)[:, None]
    out, _ = _forward_mlp(spec, w, X)
    return out


def _class_indices(spec: ModelSpec, y: np.ndarray) -> np.ndarray:
    idx = np.asarray(y)
    rounded = np.rint(idx)
    if not np.all(rounded == idx):
        raise InvalidArgumentError("cross-entropy labels must be integral class indices")
    idx = rounded.astype(np.int64)
    if np.any(idx < 0) or np.any(idx >= spec.output_dim):
        raise InvalidArgumentError(
            f"class labels must lie in [0, {spec.output_dim}), got range "
            f"[{idx.min()}, {idx.max()}]"
        )
    return idx


def losses_batch(spec: ModelSpec, w: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-sample losses, shape (n,)."""
    out = forward_batch(spec, w, X)
    if not np.all(np.isfinite(out)):
        bad = int(np.argwhere(~np.isfinite(out))[0][0])
        raise NumericDomainError(f"non-finite forward value at sample {bad}")
    y = np.asarray(y, dtype=np.float64)
    if spec.loss == "squared":
        resid = out[:, 0] - y
        return 0.5 * resid * resid
    idx = _class_indices(spec, y)
    m = np.max(out, axis=1)
    lse = m + np.log(np.sum(np.exp(out - m[:, None]), axis=1))
    return lse - out[np.arange(out.shape[0]), idx]


def per_sample_grads(spec: ModelSpec, w: np.ndarray, data: Dataset) -> np.ndarray:
    """Exact gradient of each sample's loss, stacked as an (n, P) matrix."""
    return per_sample_grads_xy(spec, w, data.features, data.labels)


def per_sample_grads_xy(spec: ModelSpec, w: np.ndarray, X: np.ndarray,
                        y: np.ndarray) -> np.ndarray:
    w, X = _check_inputs(spec, w, X)
    y = np.asarray(y, dtype=np.float64)
    if spec.kind == "linear":
        resid = np.einsum("ni,i->n", X, w) - y  # (n,)
        return resid[:, None] * X

    out, hs = _forward_mlp(spec, w, X)
    if not np.all(np.isfinite(out)):
        bad = int(np.argwhere(~np.isfinite(out))[0][0])
        raise NumericDomainError(f"non-finite forward value at sample {bad}")
    if spec.loss == "squared":
        delta = out - y[:, None]  # dloss/dlogits, (n, 1)
    else:
        idx = _class_indices(spec, y)
        m = np.max(out, axis=1, keepdims=True)
        e = np.exp(out - m)
        delta = e / np.sum(e, axis=1, keepdims=True)
        delta[np.arange(out.shape[0]), idx] -= 1.0

    layers = unflatten(spec, w)
    n = X.shape[0]
    grads = [None] * len(layers)
    g = delta  # gradient wrt pre-activation of the current layer, (n, width)
    for l in range(len(layers) - 1, -1, -1):
        mat, _bias = layers[l]
        h_prev = hs[l]
        gw = np.einsum("no,ni->noi", g, h_prev).reshape(n, -1)
        grads[l] = np.concatenate([gw, g], axis=1)
        if l > 0:
            g = np.einsum("no,oi->ni", g, mat) * (1.0 - h_prev * h_prev)
    return np.concatenate(grads, axis=1)


def loss_per_sample(spec: ModelSpec, w: np.ndarray, z: tuple) -> float:
    x, y = z
    return float(losses_batch(spec, w, np.asarray(x, dtype=np.float64)[None, :],
                              np.asarray([y]))[0])


def grad_per_sample(spec: ModelSpec, w: np.ndarray, z: tuple) -> np.ndarray:
    x, y = z
    single = Dataset(np.asarray(x, dtype=np.float64)[None, :], np.asarray([y], dtype=np.float64))
    return per_sample_grads(spec, w, single)[0]


def grad_mean_xy(spec: ModelSpec, w: np.ndarray, X: np.ndarray,
                 y: np.ndarray) -> tuple[float, np.ndarray]:
    losses = losses_batch(spec, w, X, y)
    grads = per_sample_grads_xy(spec, w, X, y)
    return float(np.mean(losses)), np.mean(grads, axis=0)


def grad_mean(spec: ModelSpec, w: np.ndarray, data: Dataset) -> tuple[float, np.ndarray]:
    """Mean loss and mean gradient over the dataset.

    Both reductions are numpy means over the sample axis (pairwise
    summation), so the result is a deterministic function of the inputs;
    the mean gradient is exactly the arithmetic mean of per_sample_grads.
    """
    return grad_mean_xy(spec, w, data.features, data.labels)


def hessian_vector_product(spec: ModelSpec, w: np.ndarray, data: Dataset,
                           v: np.ndarray, h: float | None = None) -> np.ndarray:
    """Central-difference HVP of the mean loss: exact for the linear model."""
    v = np.asarray(v, dtype=np.float64)
    norm_v = float(np.linalg.norm(v))
    if norm_v == 0.0:
        raise InvalidArgumentError("HVP direction must be nonzero")
    if h is None:
        h = default_fd_step(w)
    unit = v / norm_v
    _, gp = grad_mean(spec, w + h * unit, data)
    _, gm = grad_mean(spec, w - h * unit, data)
    return (gp - gm) / (2.0 * h) * norm_v


def model_tag(spec: ModelSpec) -> str:
    """Short text form used in snapshot headers and config echoes."""
    if spec.kind == "linear":
        return f"linear:d{spec.input_dim}"
    widths = "-".join(str(x) for x in spec.layer_widths)
    return f"mlp:{widths}:{spec.activation}:{spec.loss}"


def save_param_vector(path: str, spec: ModelSpec, w: np.ndarray) -> None:
    """One header line naming the model and P, then the flat CSV row."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (param_count(spec),):
        raise DimensionMismatchError(
            f"parameter vector shape {w.shape}, expected ({param_count(spec)},)"
        )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# model={model_tag(spec)} P={w.size}\n")
        fh.write(",".join(repr(float(x)) for x in w) + "\n")


def load_param_vector(path: str, spec: ModelSpec | None = None) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        row = fh.readline().strip()
    if not header.startswith("# model="):
        raise InvalidArgumentError(f"{path}: missing parameter-snapshot header")
    declared = int(header.rsplit("P=", 1)[1])
    w = np.array([float(c) for c in row.split(",")])
    if w.size != declared:
        raise DimensionMismatchError(
            f"{path}: header declares P={declared} but row has {w.size} values"
        )
    if spec is not None and w.size != param_count(spec):
        raise DimensionMismatchError(
            f"{path}: snapshot P={w.size} does not fit {model_tag(spec)}"
        )
    return w
