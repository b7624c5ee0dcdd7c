"""Six-output multilayer perceptron and its trainer.

Hidden layers are rectified, the output layer is linear (irradiance is
unbounded above, so no squashing). Training minimizes mean squared error
with Adam (or plain gradient descent), inverted dropout on hidden
activations, early stopping on validation MSE, and multi-start
initialization; the start with the best validation MSE wins and is
returned restored to its best epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError, ShapeError, TrainingFailureError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class MlpModel:
    layer_sizes: list[int]
    weights: list[np.ndarray]  # weights[k]: (layer_sizes[k], layer_sizes[k+1])
    biases: list[np.ndarray]  # biases[k]: (layer_sizes[k+1],)

    def __post_init__(self) -> None:
        if len(self.layer_sizes) < 2:
            raise ShapeError("need at least input and output layers")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("parameter count does not match layer_sizes")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            expect = (self.layer_sizes[k], self.layer_sizes[k + 1])
            if w.shape != expect or b.shape != (expect[1],):
                raise ShapeError(f"layer {k}: weight shape {w.shape} does not chain {expect}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ParameterError(f"layer {k}: non-finite parameters")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Map inputs to the per-horizon irradiance vector."""
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        a = np.atleast_2d(x)
        if a.shape[1] != self.n_inputs:
            raise ShapeError(f"input dim {a.shape[1]} != expected {self.n_inputs}")
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ w + b, 0.0)
        out = a @ self.weights[-1] + self.biases[-1]
        return out[0] if squeeze else out

    def copy(self) -> "MlpModel":
        return MlpModel(
            layer_sizes=list(self.layer_sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def mlp_forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    return model.forward(x)


def init_model(arch: list[int], rng: np.random.Generator) -> MlpModel:
    """Uniform fan-in initialization scaled for rectifier activations."""
    weights, biases = [], []
    for n_in, n_out in zip(arch[:-1], arch[1:]):
        limit = np.sqrt(6.0 / n_in)
        weights.append(rng.uniform(-limit, limit, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return MlpModel(layer_sizes=list(arch), weights=weights, biases=biases)


def mse_loss_and_grads(
    model: MlpModel,
    x: np.ndarray,
    y: np.ndarray,
    dropout_masks: list[np.ndarray] | None = None,
):
    """Mean squared error over all outputs and its analytic gradients.

    `dropout_masks` holds one inverted-dropout mask per hidden layer
    (values 0 or 1/keep); None disables dropout.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    n_hidden = len(model.weights) - 1

    acts = [x]
    pre = []
    a = x
    for k in range(n_hidden):
        z = a @ model.weights[k] + model.biases[k]
        a = np.maximum(z, 0.0)
        if dropout_masks is not None:
            a = a * dropout_masks[k]
        pre.append(z)
        acts.append(a)
    out = a @ model.weights[-1] + model.biases[-1]

    err = out - y
    loss = float(np.mean(err * err))
    delta = 2.0 * err / err.size

    grad_w = [np.empty(0)] * len(model.weights)
    grad_b = [np.empty(0)] * len(model.biases)
    grad_w[-1] = acts[-1].T @ delta
    grad_b[-1] = delta.sum(axis=0)
    upstream = delta @ model.weights[-1].T
    for k in range(n_hidden - 1, -1, -1):
        if dropout_masks is not None:
            upstream = upstream * dropout_masks[k]
        dz = upstream * (pre[k] > 0.0)
        grad_w[k] = acts[k].T @ dz
        grad_b[k] = dz.sum(axis=0)
        if k > 0:
            upstream = dz @ model.weights[k].T
    return loss, grad_w, grad_b


@dataclass(frozen=True)
class TrainConfig:
    initial_learning_rate: float = 1.16e-3  # winning global value
    dropout_rate: float = 0.14
    batch_size: int = 64
    max_epochs: int = 500
    patience: int = 20
    n_starts: int = 4
    seed: int = 0
    optimizer: str = "adam"  # "adam" or "sgd" (plain gradient descent)

    def __post_init__(self) -> None:
        if self.initial_learning_rate <= 0.0:
            raise ParameterError("learning rate must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ParameterError("dropout_rate must be in [0, 1)")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ParameterError("batch_size and max_epochs must be >= 1")
        if not 0 < self.patience < self.max_epochs:
            raise ParameterError("patience must satisfy 0 < patience < max_epochs")
        if self.n_starts < 1:
            raise ParameterError("n_starts must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ParameterError("optimizer must be 'adam' or 'sgd'")


@dataclass
class TrainingTrace:
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_mse: float = np.inf
    start_index: int = -1
    start_summaries: list[dict] = field(default_factory=list)

    @property
    def n_epochs(self) -> int:
        return len(self.val_mse)


def _mse(model: MlpModel, x: np.ndarray, y: np.ndarray) -> float:
    err = model.forward(x) - y
    return float(np.mean(err * err))


def _run_start(x_tr, y_tr, x_val, y_val, arch, cfg: TrainConfig, rng) -> tuple | None:
    # divergence is handled explicitly through the non-finite loss checks
    with np.errstate(over="ignore", invalid="ignore"):
        return _run_start_inner(x_tr, y_tr, x_val, y_val, arch, cfg, rng)


def _run_start_inner(x_tr, y_tr, x_val, y_val, arch, cfg: TrainConfig, rng) -> tuple | None:
    model = init_model(arch, rng)
    n = len(x_tr)
    n_hidden = len(arch) - 2
    keep = 1.0 - cfg.dropout_rate

    if cfg.optimizer == "adam":
        m_w = [np.zeros_like(w) for w in model.weights]
        v_w = [np.zeros_like(w) for w in model.weights]
        m_b = [np.zeros_like(b) for b in model.biases]
        v_b = [np.zeros_like(b) for b in model.biases]
        step = 0

    trace_train: list[float] = []
    trace_val: list[float] = []
    best_val = np.inf
    best_epoch = -1
    best_model = model.copy()
    stall = 0

    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            masks = None
            if cfg.dropout_rate > 0.0:
                masks = [
                    (rng.random((len(batch), arch[k + 1])) < keep) / keep
                    for k in range(n_hidden)
                ]
            loss, gw, gb = mse_loss_and_grads(model, x_tr[batch], y_tr[batch], masks)
            if not np.isfinite(loss):
                return None
            if cfg.optimizer == "adam":
                step += 1
                c1 = 1.0 - ADAM_BETA1**step
                c2 = 1.0 - ADAM_BETA2**step
                for k in range(len(model.weights)):
                    for g, p, m, v in (
                        (gw[k], model.weights[k], m_w[k], v_w[k]),
                        (gb[k], model.biases[k], m_b[k], v_b[k]),
                    ):
                        m *= ADAM_BETA1
                        m += (1.0 - ADAM_BETA1) * g
                        v *= ADAM_BETA2
                        v += (1.0 - ADAM_BETA2) * g * g
                        p -= cfg.initial_learning_rate * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)
            else:
                for k in range(len(model.weights)):
                    model.weights[k] -= cfg.initial_learning_rate * gw[k]
                    model.biases[k] -= cfg.initial_learning_rate * gb[k]

        train_mse = _mse(model, x_tr, y_tr)
        val_mse = _mse(model, x_val, y_val)
        if not (np.isfinite(train_mse) and np.isfinite(val_mse)):
            return None
        trace_train.append(train_mse)
        trace_val.append(val_mse)
        if val_mse < best_val:
            best_val = val_mse
            best_epoch = epoch
            best_model = model.copy()
            stall = 0
        else:
            stall += 1
            if stall >= cfg.patience:
                break
    return best_model, best_val, best_epoch, trace_train, trace_val


def mlp_train(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    arch: list[int],
    cfg: TrainConfig,
) -> tuple[MlpModel, TrainingTrace]:
    """Multi-start training; returns the best start restored to its best epoch."""
    x_train = np.atleast_2d(np.asarray(x_train, dtype=np.float64))
    y_train = np.atleast_2d(np.asarray(y_train, dtype=np.float64))
    x_val = np.atleast_2d(np.asarray(x_val, dtype=np.float64))
    y_val = np.atleast_2d(np.asarray(y_val, dtype=np.float64))
    if len(x_train) == 0 or len(x_val) == 0:
        raise ParameterError("training and validation sets must be non-empty")
    if x_train.shape[1] != arch[0]:
        raise ShapeError(f"arch expects {arch[0]} inputs, data has {x_train.shape[1]}")
    if y_train.shape[1] != arch[-1]:
        raise ShapeError(f"arch expects {arch[-1]} outputs, targets have {y_train.shape[1]}")

    trace = TrainingTrace()
    best = None
    for start in range(cfg.n_starts):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, start])))
        result = _run_start(x_train, y_train, x_val, y_val, arch, cfg, rng)
        if result is None:
            trace.start_summaries.append({"start": start, "status": "aborted"})
            continue
        model, val, epoch, tr_mse, va_mse = result
        trace.start_summaries.append(
            {"start": start, "status": "ok", "best_val_mse": val, "best_epoch": epoch}
        )
        if best is None or val < best[1]:
            best = (model, val, epoch, start, tr_mse, va_mse)
    if best is None:
        raise TrainingFailureError("all training starts aborted with non-finite loss")

    model, val, epoch, start, tr_mse, va_mse = best
    trace.train_mse = tr_mse
    trace.val_mse = va_mse
    trace.best_epoch = epoch
    trace.best_val_mse = val
    trace.start_index = start
    return model, trace
