"""Feed-forward price surrogate: numpy MLP, backpropagation and Adam.

Default architecture: 9 scaled inputs, six hidden layers of 200 units (ReLU in
the first five, softplus in the sixth) and a linear output neuron.  Training
minimises the half mean squared error against raw MC prices and keeps the
parameters from the validation checkpoint with the lowest loss.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, Scaler
from .simulation import make_rng


FILE_MAGIC = "BNSMLP v1"
PAPER_SIZES = (9, 200, 200, 200, 200, 200, 200, 1)
PAPER_ACTIVATIONS = ("relu",) * 5 + ("softplus", "linear")


class ModelFormatError(ValueError):
    pass


def relu(x):
    return np.maximum(x, 0.0)


def softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


_ACT = {"relu": relu, "softplus": softplus, "linear": lambda x: x}


def _act_grad(tag: str, z, a):
    if tag == "relu":
        return (z > 0).astype(z.dtype)
    if tag == "softplus":
        return _sigmoid(z)
    return None


@dataclass
class MlpModel:
    sizes: tuple[int, ...]
    activations: tuple[str, ...]
    weights: list[np.ndarray]   # layer l maps (n, sizes[l]) -> (n, sizes[l+1]) via x @ W
    biases: list[np.ndarray]
    scaler: Scaler | None = None

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        self.activations = tuple(self.activations)
        if len(self.activations) != len(self.sizes) - 1:
            raise ValueError("one activation tag per layer required")
        for tag in self.activations:
            if tag not in _ACT:
                raise ValueError(f"unknown activation {tag!r}")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[l], self.sizes[l + 1]) or b.shape != (self.sizes[l + 1],):
                raise ValueError(f"layer {l} parameter shapes do not chain")

    @property
    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "MlpModel":
        return MlpModel(self.sizes, self.activations, [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.scaler)


def init_model(sizes=PAPER_SIZES, activations=PAPER_ACTIVATIONS, rng: np.random.Generator | None = None,
               scaler: Scaler | None = None) -> MlpModel:
    """He-normal weights for ReLU layers, Xavier-normal otherwise, zero biases."""
    rng = rng if rng is not None else make_rng(0)
    weights, biases = [], []
    for n_in, n_out, tag in zip(sizes[:-1], sizes[1:], activations):
        std = math.sqrt(2.0 / n_in) if tag == "relu" else math.sqrt(2.0 / (n_in + n_out))
        weights.append(rng.standard_normal((n_in, n_out)) * std)
        biases.append(np.zeros(n_out))
    return MlpModel(tuple(sizes), tuple(activations), weights, biases, scaler)


def forward(model: MlpModel, x, keep: bool = False):
    """Network output (n,) for scaled inputs (n, sizes[0]); ``keep`` also returns the layer cache."""
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if a.shape[1] != model.sizes[0]:
        raise ValueError(f"expected {model.sizes[0]} inputs, got {a.shape[1]}")
    cache = [(None, a)]
    for w, b, tag in zip(model.weights, model.biases, model.activations):
        z = a @ w + b
        a = _ACT[tag](z)
        if keep:
            cache.append((z, a))
    out = a[:, 0]
    return (out, cache) if keep else out


def predict(model: MlpModel, raw_inputs) -> np.ndarray:
    """Prices for unscaled inputs in INPUT_NAMES order; negatives clamp to 0."""
    x = np.atleast_2d(np.asarray(raw_inputs, dtype=float))
    if model.scaler is not None:
        x = model.scaler.transform(x)
    return np.maximum(forward(model, x), 0.0)


def half_mse(pred, target) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError("prediction and target lengths differ")
    if pred.size == 0:
        raise ValueError("empty batch")
    r = pred - target
    return float(r @ r / (2 * r.size))


def backward(model: MlpModel, x, y) -> tuple[float, list[np.ndarray]]:
    """Half-MSE over the batch and its gradient, ordered like ``model.params``."""
    y = np.asarray(y, dtype=float)
    out, cache = forward(model, x, keep=True)
    m = y.size
    resid = out - y
    loss = float(resid @ resid / (2 * m))
    delta = (resid / m)[:, None]
    n_layers = len(model.weights)
    gw = [None] * n_layers
    gb = [None] * n_layers
    for l in range(n_layers - 1, -1, -1):
        z, a = cache[l + 1]
        d = _act_grad(model.activations[l], z, a)
        if d is not None:
            delta = delta * d
        gw[l] = cache[l][1].T @ delta
        gb[l] = delta.sum(axis=0)
        if l:
            delta = delta @ model.weights[l].T
    return loss, gw + gb


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params, **kw) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], **kw)


def adam_step(params: list[np.ndarray], state: AdamState, grads: list[np.ndarray], lr: float) -> None:
    """One bias-corrected Adam update, in place on ``params`` and ``state``."""
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient at Adam step {state.t + 1}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 128
    epochs: int = 800
    lr0: float = 0.006
    lr_decay: float = 0.995
    decay_every: int = 10
    val_every: int = 50
    seed: int = 0
    sizes: tuple[int, ...] = PAPER_SIZES
    activations: tuple[str, ...] = PAPER_ACTIVATIONS

    def __post_init__(self):
        if min(self.batch_size, self.epochs, self.decay_every, self.val_every) < 1 or not self.lr0 > 0:
            raise ValueError("training settings must be positive")
        if self.epochs % self.val_every:
            raise ValueError("val_every must divide epochs")

    def lr_at(self, epoch: int) -> float:
        """Learning rate used during ``epoch`` (1-based); decays after each block of ``decay_every``."""
        return self.lr0 * self.lr_decay ** ((epoch - 1) // self.decay_every)


PAPER_TRAIN = TrainConfig(epochs=4000)


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    val_epochs: list[int] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0
    best_val: float = math.inf
    test_rmse: float = math.nan
    n_updates: int = 0
    seconds: float = 0.0


def batch_slices(n: int, batch_size: int) -> list[slice]:
    return [slice(i, min(i + batch_size, n)) for i in range(0, n, batch_size)]


def train(ds: Dataset, cfg: TrainConfig = TrainConfig(), scaler: Scaler | None = None,
          progress=None) -> tuple[MlpModel, TrainReport]:
    """Train on the ``train`` split, checkpoint on ``val``, report RMSE on ``test``."""
    scaler = scaler or ds.fit_scaler()
    tr, va, te = ds.subset("train"), ds.subset("val"), ds.subset("test")
    if len(tr) == 0:
        raise ValueError("no training records")
    x_tr, y_tr = scaler.transform(tr.inputs), tr.mc
    x_va = scaler.transform(va.inputs) if len(va) else None

    rng = make_rng(cfg.seed, 7)
    model = init_model(cfg.sizes, cfg.activations, rng, scaler)
    state = AdamState.zeros_like(model.params)
    params = model.params
    best = model.copy()
    report = TrainReport()
    slices = batch_slices(len(tr), cfg.batch_size)
    t0 = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.lr_at(epoch)
        perm = rng.permutation(len(tr))
        total = 0.0
        for bi, sl in enumerate(slices):
            idx = perm[sl]
            loss, grads = backward(model, x_tr[idx], y_tr[idx])
            if not math.isfinite(loss):
                raise FloatingPointError(f"non-finite loss at epoch {epoch}, batch {bi + 1}")
            adam_step(params, state, grads, lr)
            total += loss
        report.train_loss.append(total / len(slices))
        if epoch % cfg.val_every == 0 and x_va is not None:
            v = half_mse(forward(model, x_va), va.mc)
            report.val_epochs.append(epoch)
            report.val_loss.append(v)
            if v < report.best_val:
                report.best_val, report.best_epoch = v, epoch
                best = model.copy()
            if progress:
                progress(epoch, report.train_loss[-1], v)
    report.n_updates = state.t
    report.seconds = time.perf_counter() - t0
    if x_va is None:
        best = model.copy()
        report.best_epoch = cfg.epochs
    if len(te):
        report.test_rmse = evaluate_rmse(best, te.inputs, te.mc)
    return best, report


def evaluate_rmse(model: MlpModel, raw_inputs, mc) -> float:
    """Root mean squared error of the clamped surrogate prices against MC labels."""
    mc = np.asarray(mc, dtype=float)
    if mc.size == 0:
        raise ValueError("no records to evaluate")
    r = predict(model, raw_inputs) - mc
    return float(math.sqrt(r @ r / r.size))


def _row(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def model_to_text(model: MlpModel) -> str:
    lines = [FILE_MAGIC, " ".join(map(str, model.sizes)), " ".join(model.activations)]
    for w, b in zip(model.weights, model.biases):
        lines.extend(_row(r) for r in w)
        lines.append(_row(b))
    if model.scaler is None:
        lines.append("scaler none")
    else:
        lines.append(f"scaler {len(model.scaler.names)}")
        lines.extend(model.scaler.to_text().splitlines())
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> MlpModel:
    lines = text.split("\n")
    offsets = np.cumsum([0] + [len(l.encode()) + 1 for l in lines]).tolist()
    pos = 0

    def take() -> str:
        nonlocal pos
        if pos >= len(lines) or (pos == len(lines) - 1 and lines[pos] == ""):
            raise ModelFormatError(f"unexpected end of file at byte {min(offsets[pos], len(text.encode()))}")
        pos += 1
        return lines[pos - 1]

    def floats(n: int) -> np.ndarray:
        line = take()
        try:
            vals = [float(t) for t in line.split()]
        except ValueError:
            raise ModelFormatError(f"non-numeric value at byte {offsets[pos - 1]}") from None
        if len(vals) != n:
            raise ModelFormatError(f"expected {n} values at byte {offsets[pos - 1]}, found {len(vals)}")
        return np.array(vals)

    magic = take()
    if magic != FILE_MAGIC:
        if magic.startswith("BNSMLP"):
            raise ModelFormatError(f"unsupported model file version {magic!r} (expected {FILE_MAGIC!r})")
        raise ModelFormatError("not a BNSMLP model file")
    try:
        sizes = tuple(int(t) for t in take().split())
    except ValueError:
        raise ModelFormatError(f"bad layer-size line at byte {offsets[1]}") from None
    acts = tuple(take().split())
    if len(sizes) < 2 or len(acts) != len(sizes) - 1:
        raise ModelFormatError("layer sizes and activation tags do not match")
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        weights.append(np.stack([floats(n_out) for _ in range(n_in)]))
        biases.append(floats(n_out))
    head = take().split()
    scaler = None
    if head[:1] != ["scaler"] or len(head) != 2:
        raise ModelFormatError(f"expected scaler block at byte {offsets[pos - 1]}")
    if head[1] != "none":
        k = int(head[1])
        scaler = Scaler.from_text("\n".join(take() for _ in range(k)))
    try:
        return MlpModel(sizes, acts, weights, biases, scaler)
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None


def save_model(path, model: MlpModel) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(model_to_text(model))


def load_model(path) -> MlpModel:
    return model_from_text(Path(path).read_text())


