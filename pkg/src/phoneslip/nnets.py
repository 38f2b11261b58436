"""Two-class neural classifiers trained by full-batch momentum gradient descent.

Four kinds share one forward/backward core:

* ``PATTERNNET``: MLP 54-10-2, tanh hidden, softmax output, cross-entropy.
* ``FEEDFORWARD``: same topology, sigmoid outputs, mean-squared error.
* ``FITNET``: the PatternNet network with learning rate and momentum chosen
  by a genetic algorithm scored on an inner validation split.
* ``CASCADE``: 54-10-5-2 cascade-forward net; every layer also sees the raw
  input and the outputs of all earlier layers.

Parameter arrays may carry a leading population axis. The GA uses that to
train a whole generation in one pass.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import InvalidArgument, NonFiniteLoss, SchemaMismatch, ShapeMismatch, SingleClassTraining
from .featuredb import StandardizationParams
from .split import stratified_partition

INPUT_WIDTH = 54
N_CLASSES = 2
MODEL_FORMAT = "phoneslip-model/1"


class NetworkKind(enum.Enum):
    # declaration order is the report's column order
    PATTERNNET = "patternnet"
    FEEDFORWARD = "feedforward"
    FITNET = "fitnet"
    CASCADE = "cascade"

    @property
    def display_name(self) -> str:
        return _DISPLAY[self]


_DISPLAY = {
    NetworkKind.PATTERNNET: "Pattern Net",
    NetworkKind.FEEDFORWARD: "Feedforward",
    NetworkKind.FITNET: "Fit Net",
    NetworkKind.CASCADE: "Cascade",
}


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 500
    seed: int = 0

    def validate(self) -> None:
        if not self.learning_rate > 0:
            raise InvalidArgument("learning_rate must be > 0")
        if not 0 <= self.momentum < 1:
            raise InvalidArgument("momentum must lie in [0, 1)")
        if self.epochs < 1:
            raise InvalidArgument("epochs must be >= 1")


@dataclass(frozen=True)
class GaConfig:
    population: int = 12
    generations: int = 8
    learning_rate_bounds: tuple[float, float] = (1e-3, 0.5)
    momentum_bounds: tuple[float, float] = (0.0, 0.95)
    mutation_rate: float = 0.2
    tournament_size: int = 3
    elitism: int = 1
    validation_fraction: float = 0.25

    def validate(self) -> None:
        if self.population < 1 or self.generations < 1:
            raise InvalidArgument("population and generations must be >= 1")
        lo, hi = self.learning_rate_bounds
        if not 0 < lo <= hi:
            raise InvalidArgument("learning_rate_bounds must satisfy 0 < lo <= hi")
        lo, hi = self.momentum_bounds
        if not 0 <= lo <= hi < 1:
            raise InvalidArgument("momentum_bounds must satisfy 0 <= lo <= hi < 1")
        for name in ("mutation_rate", "validation_fraction"):
            if not 0 < getattr(self, name) < 1:
                raise InvalidArgument(f"{name} must lie in (0, 1)")
        if self.tournament_size < 1 or not 0 <= self.elitism <= self.population:
            raise InvalidArgument("bad tournament_size or elitism")


@dataclass(frozen=True)
class Architecture:
    layer_sizes: tuple[int, ...]
    cascade: bool
    output: str  # "softmax" or "sigmoid"

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def sources(self, layer: int) -> list[int]:
        """Activation indices feeding ``layer``; 0 is the raw input."""
        return list(range(layer + 1)) if self.cascade else [layer]

    def source_rows(self, layer: int) -> list[tuple[int, slice]]:
        out, start = [], 0
        for s in self.sources(layer):
            width = self.layer_sizes[s]
            out.append((s, slice(start, start + width)))
            start += width
        return out

    def fan_in(self, layer: int) -> int:
        return sum(self.layer_sizes[s] for s in self.sources(layer))


def architecture_for(kind: NetworkKind, input_width: int = INPUT_WIDTH) -> Architecture:
    if kind is NetworkKind.CASCADE:
        return Architecture((input_width, 10, 5, N_CLASSES), True, "softmax")
    output = "sigmoid" if kind is NetworkKind.FEEDFORWARD else "softmax"
    return Architecture((input_width, 10, N_CLASSES), False, output)


@dataclass
class NetworkModel:
    kind: NetworkKind
    arch: Architecture
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    standardization: StandardizationParams | None = None
    hyperparameters: dict = field(default_factory=dict)

    @property
    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]


def init_params(arch: Architecture, seed: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    rng = np.random.default_rng(seed % 2**64)
    weights, biases = [], []
    for k in range(arch.n_layers):
        fan_in = arch.fan_in(k)
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, arch.layer_sizes[k + 1])))
        biases.append(np.zeros(arch.layer_sizes[k + 1]))
    return weights, biases


def zero_model(kind: NetworkKind, input_width: int = INPUT_WIDTH) -> NetworkModel:
    arch = architecture_for(kind, input_width)
    weights = [np.zeros((arch.fan_in(k), arch.layer_sizes[k + 1])) for k in range(arch.n_layers)]
    biases = [np.zeros(arch.layer_sizes[k + 1]) for k in range(arch.n_layers)]
    return NetworkModel(kind, arch, weights, biases)


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _forward(arch: Architecture, weights, biases, X):
    """Returns (activations, final pre-activation, outputs)."""
    acts = [X]
    z = None
    for k in range(arch.n_layers):
        W = weights[k]
        z = biases[k][..., None, :]
        for s, rows in arch.source_rows(k):
            z = z + acts[s] @ W[..., rows, :]
        if k < arch.n_layers - 1:
            acts.append(np.tanh(z))
    out = _softmax(z) if arch.output == "softmax" else _sigmoid(z)
    return acts, z, out


def _loss_and_grads(arch: Architecture, weights, biases, X, Y):
    """Mean loss (shape: leading population dims) and exact gradients."""
    n = X.shape[-2]
    acts, z, out = _forward(arch, weights, biases, X)
    if arch.output == "softmax":
        zmax = z.max(axis=-1, keepdims=True)
        logp = z - zmax - np.log(np.exp(z - zmax).sum(axis=-1, keepdims=True))
        loss = -(Y * logp).sum(axis=-1).mean(axis=-1)
        dz = (out - Y) / n
    else:
        diff = out - Y
        loss = (diff * diff).mean(axis=(-2, -1))
        dz = (2.0 / (n * Y.shape[-1])) * diff * out * (1.0 - out)

    gW = [None] * arch.n_layers
    gb = [None] * arch.n_layers
    dacts = [None] * len(acts)
    for k in reversed(range(arch.n_layers)):
        if k < arch.n_layers - 1:
            a = acts[k + 1]
            dz = dacts[k + 1] * (1.0 - a * a)
        W = weights[k]
        gWk = np.empty_like(W)
        for s, rows in arch.source_rows(k):
            gWk[..., rows, :] = np.swapaxes(acts[s], -1, -2) @ dz
            if s > 0:
                contrib = dz @ np.swapaxes(W[..., rows, :], -1, -2)
                dacts[s] = contrib if dacts[s] is None else dacts[s] + contrib
        gW[k] = gWk
        gb[k] = dz.sum(axis=-2)
    return loss, gW, gb


def _check_xy(model_or_arch, X, Y=None) -> tuple[np.ndarray, np.ndarray | None]:
    arch = model_or_arch.arch if isinstance(model_or_arch, NetworkModel) else model_or_arch
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != arch.layer_sizes[0]:
        raise ShapeMismatch(f"X must have shape (n, {arch.layer_sizes[0]}), got {X.shape}")
    if Y is None:
        return X, None
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (X.shape[0], arch.layer_sizes[-1]):
        raise ShapeMismatch(f"Y must have shape ({X.shape[0]}, {arch.layer_sizes[-1]}), got {Y.shape}")
    return X, Y


def compute_loss_and_gradients(model: NetworkModel, X, Y) -> tuple[float, list[np.ndarray]]:
    """Loss and gradients, ordered like ``model.params`` (weights then biases)."""
    X, Y = _check_xy(model, X, Y)
    loss, gW, gb = _loss_and_grads(model.arch, model.weights, model.biases, X, Y)
    return float(loss), [*gW, *gb]


def loss_only(model: NetworkModel, X, Y) -> float:
    X, Y = _check_xy(model, X, Y)
    return float(_loss_and_grads(model.arch, model.weights, model.biases, X, Y)[0])


def forward(model: NetworkModel, X) -> np.ndarray:
    """Raw network outputs for already-standardized rows."""
    X, _ = _check_xy(model, X)
    return _forward(model.arch, model.weights, model.biases, X)[2]


def one_hot(labels, n_classes: int = N_CLASSES) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def _gradient_descent(arch, weights, biases, X, Y, lr, momentum, epochs, raise_on_nonfinite=True):
    """Full-batch momentum GD. ``lr``/``momentum`` broadcast over a leading axis."""
    weights = [w.copy() for w in weights]
    biases = [b.copy() for b in biases]
    lr = np.asarray(lr, dtype=float)
    momentum = np.asarray(momentum, dtype=float)
    lr_w, mom_w = lr[..., None, None], momentum[..., None, None]
    lr_b, mom_b = lr[..., None], momentum[..., None]
    vW = [np.zeros_like(w) for w in weights]
    vb = [np.zeros_like(b) for b in biases]
    diverged = np.zeros(lr.shape, dtype=bool)
    for epoch in range(1, epochs + 1):
        loss, gW, gb = _loss_and_grads(arch, weights, biases, X, Y)
        bad = ~np.isfinite(loss)
        if bad.any():
            if raise_on_nonfinite:
                raise NonFiniteLoss(epoch)
            diverged |= bad
        for k in range(arch.n_layers):
            vW[k] = mom_w * vW[k] - lr_w * gW[k]
            vb[k] = mom_b * vb[k] - lr_b * gb[k]
            weights[k] = weights[k] + vW[k]
            biases[k] = biases[k] + vb[k]
    loss = _loss_and_grads(arch, weights, biases, X, Y)[0]
    diverged |= ~np.isfinite(loss)
    if raise_on_nonfinite and diverged.any():
        raise NonFiniteLoss(epochs + 1)
    return weights, biases, diverged


def _validate_targets(Y: np.ndarray) -> None:
    present = Y.sum(axis=0) > 0
    if not present.all():
        raise SingleClassTraining(f"classes absent from training targets: {np.flatnonzero(~present).tolist()}")


def _train_base(kind, X, Y, cfg: TrainConfig, standardization) -> NetworkModel:
    arch = architecture_for(kind, X.shape[1])
    w0, b0 = init_params(arch, cfg.seed)
    weights, biases, _ = _gradient_descent(arch, w0, b0, X, Y, cfg.learning_rate, cfg.momentum, cfg.epochs)
    hyper = {"learning_rate": cfg.learning_rate, "momentum": cfg.momentum, "epochs": cfg.epochs, "seed": cfg.seed}
    return NetworkModel(kind, arch, weights, biases, standardization, hyper)


def train(
    kind: NetworkKind,
    X,
    Y,
    cfg: TrainConfig | None = None,
    ga: GaConfig | None = None,
    standardization: StandardizationParams | None = None,
) -> NetworkModel:
    """Fit one network on standardized rows ``X`` with one-hot targets ``Y``.

    ``ga`` is used only for ``FITNET`` (defaults apply when omitted).
    ``standardization`` is stored on the model and applied by :func:`predict`.
    """
    cfg = cfg or TrainConfig()
    cfg.validate()
    arch = architecture_for(kind, np.asarray(X).shape[-1])
    X, Y = _check_xy(arch, X, Y)
    _validate_targets(Y)
    if kind is NetworkKind.FITNET:
        result = run_ga(X, Y, cfg, ga or GaConfig())
        tuned = replace(cfg, learning_rate=result.learning_rate, momentum=result.momentum)
        model = _train_base(NetworkKind.PATTERNNET, X, Y, tuned, standardization)
        model.kind = NetworkKind.FITNET
        model.hyperparameters["ga_best_fitness"] = result.history
        return model
    return _train_base(kind, X, Y, cfg, standardization)


def predict_proba(model: NetworkModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if model.standardization is not None:
        X = model.standardization.apply(X)
    out = forward(model, X)
    if model.arch.output == "sigmoid":
        out = out / out.sum(axis=-1, keepdims=True)
    return out


def predict(model: NetworkModel, x) -> tuple[int, np.ndarray]:
    """Label and class probabilities for one raw 54-vector; ties go to label 0."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.arch.layer_sizes[0],):
        raise ShapeMismatch(f"expected a vector of length {model.arch.layer_sizes[0]}, got shape {x.shape}")
    p = predict_proba(model, x[None, :])[0]
    return (0 if p[0] >= p[1] else 1), p


def predict_labels(model: NetworkModel, X) -> np.ndarray:
    p = predict_proba(model, X)
    return np.where(p[:, 0] >= p[:, 1], 0, 1)


# ---------------------------------------------------------------------------
# genetic algorithm over (learning rate, momentum)
# ---------------------------------------------------------------------------

@dataclass
class GaResult:
    learning_rate: float
    momentum: float
    fitness: float
    history: list[float]  # best fitness after each generation
    evaluations: int


def _genes_to_hyper(genes: np.ndarray) -> tuple[float, float]:
    return float(10.0 ** genes[0]), float(genes[1])


def initial_population(ga: GaConfig, rng: np.random.Generator) -> np.ndarray:
    """Rows of (log10 learning rate, momentum), uniform within the gene bounds."""
    lo = np.array([math.log10(ga.learning_rate_bounds[0]), ga.momentum_bounds[0]])
    hi = np.array([math.log10(ga.learning_rate_bounds[1]), ga.momentum_bounds[1]])
    return lo + (hi - lo) * rng.random((ga.population, 2))


def ga_rng(cfg: TrainConfig) -> np.random.Generator:
    return np.random.Generator(np.random.Philox((cfg.seed + 0x9E3779B97F4A7C15) % 2**64))


def _rank_key(fitness: float, genes: np.ndarray, index: int):
    # higher fitness first, then smaller learning rate, then lower index
    return (-fitness, genes[0], index)


def run_ga(X, Y, cfg: TrainConfig, ga: GaConfig) -> GaResult:
    ga.validate()
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    labels = Y.argmax(axis=1)
    inner_train, inner_val = stratified_partition(labels, 1.0 - ga.validation_fraction, cfg.seed)
    Xt, Yt = X[inner_train], Y[inner_train]
    Xv, yv = X[inner_val], labels[inner_val]
    arch = architecture_for(NetworkKind.PATTERNNET, X.shape[1])
    w0, b0 = init_params(arch, cfg.seed)
    cache: dict[tuple[float, float], float] = {}

    def evaluate(pop: np.ndarray) -> np.ndarray:
        fresh = []
        for genes in pop:
            key = (float(genes[0]), float(genes[1]))
            if key not in cache and key not in fresh:
                fresh.append(key)
        if fresh:
            lrs = np.array([10.0 ** g[0] for g in fresh])
            moms = np.array([g[1] for g in fresh])
            P = len(fresh)
            ws = [np.broadcast_to(w, (P, *w.shape)).copy() for w in w0]
            bs = [np.broadcast_to(b, (P, *b.shape)).copy() for b in b0]
            ws, bs, diverged = _gradient_descent(arch, ws, bs, Xt, Yt, lrs, moms, cfg.epochs, raise_on_nonfinite=False)
            out = _forward(arch, ws, bs, Xv)[2]
            pred = np.where(out[..., 0] >= out[..., 1], 0, 1)
            acc = (pred == yv).mean(axis=-1)
            for i, key in enumerate(fresh):
                cache[key] = 0.0 if diverged[i] else float(acc[i])
        return np.array([cache[(float(g[0]), float(g[1]))] for g in pop])

    rng = ga_rng(cfg)
    lo = np.array([math.log10(ga.learning_rate_bounds[0]), ga.momentum_bounds[0]])
    hi = np.array([math.log10(ga.learning_rate_bounds[1]), ga.momentum_bounds[1]])
    pop = initial_population(ga, rng)
    fit = evaluate(pop)
    history = [float(fit.max())]
    for _ in range(ga.generations - 1):
        order = sorted(range(len(pop)), key=lambda i: _rank_key(fit[i], pop[i], i))
        children = [pop[i].copy() for i in order[: ga.elitism]]
        while len(children) < ga.population:
            parents = []
            for _ in range(2):
                entrants = rng.integers(0, len(pop), size=ga.tournament_size)
                parents.append(pop[min(entrants, key=lambda i: _rank_key(fit[i], pop[i], i))])
            alpha = rng.random(2)
            child = alpha * parents[0] + (1.0 - alpha) * parents[1]
            mutate = rng.random(2) < ga.mutation_rate
            child = child + mutate * rng.normal(0.0, 0.1, size=2) * (hi - lo)
            children.append(np.clip(child, lo, hi))
        pop = np.array(children)
        fit = evaluate(pop)
        history.append(float(fit.max()))
    best = min(range(len(pop)), key=lambda i: _rank_key(fit[i], pop[i], i))
    lr, mom = _genes_to_hyper(pop[best])
    return GaResult(lr, mom, float(fit[best]), history, len(cache))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def model_to_text(model: NetworkModel) -> str:
    st = model.standardization
    doc = {
        "format": MODEL_FORMAT,
        "kind": model.kind.value,
        "layer_sizes": list(model.arch.layer_sizes),
        "cascade": model.arch.cascade,
        "output": model.arch.output,
        "hyperparameters": model.hyperparameters,
        "standardization": None
        if st is None
        else {"mean": st.mean.tolist(), "std": st.std.tolist(), "flagged": st.flagged.tolist()},
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    return json.dumps(doc, indent=1) + "\n"


def model_from_text(text: str) -> NetworkModel:
    try:
        doc = json.loads(text)
        if doc.get("format") != MODEL_FORMAT:
            raise SchemaMismatch(f"unsupported model format {doc.get('format')!r}")
        arch = Architecture(tuple(doc["layer_sizes"]), bool(doc["cascade"]), doc["output"])
        weights = [np.array(w, dtype=float).reshape(arch.fan_in(k), arch.layer_sizes[k + 1]) for k, w in enumerate(doc["weights"])]
        biases = [np.array(b, dtype=float).reshape(arch.layer_sizes[k + 1]) for k, b in enumerate(doc["biases"])]
        st = doc["standardization"]
        standardization = None
        if st is not None:
            standardization = StandardizationParams(
                np.array(st["mean"], dtype=float), np.array(st["std"], dtype=float), np.array(st["flagged"], dtype=bool)
            )
        return NetworkModel(NetworkKind(doc["kind"]), arch, weights, biases, standardization, doc["hyperparameters"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"malformed model file: {exc}") from exc


def parse_kinds(spec: str | Sequence[str]) -> list[NetworkKind]:
    """``all`` or comma-separated kind names, returned in column order."""
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    items = [s.strip().lower() for s in items if s.strip()]
    if items == ["all"]:
        return list(NetworkKind)
    try:
        chosen = {NetworkKind(s) for s in items}
    except ValueError as exc:
        raise InvalidArgument(f"unknown network kind: {exc}") from None
    if not chosen:
        raise InvalidArgument("no network kinds selected")
    return [k for k in NetworkKind if k in chosen]
