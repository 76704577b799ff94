"""Base recommenders trainable under per-user weights.

Two model families share the same training contract (binary rating rows,
one non-negative scalar weight per user):

* ``EaseModel`` -- an item-item linear model with zero diagonal. The ridge
  objective sum_u t_u ||r_u - r_u B||^2 + lam ||B||^2 subject to diag(B) = 0
  has the closed-form solution B = I - P diag(1/diag(P)) with
  P = (X^T D X + lam I)^-1 and D = diag(t).
* ``DaeModel`` -- a one-hidden-layer denoising autoencoder (tanh hidden,
  sigmoid output, input dropout as the corruption) trained by Adam on the
  weighted cross-entropy sum_u t_u CE(r_u, r_hat_u) + l2 * ||W||^2 with
  analytic gradients.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .data import RatingMatrix
from .errors import ConfigError, TrainingError

_LOG_EPS = 1e-10
_MAGIC = b"LRMODB01"


# --------------------------------------------------------------------- EASE

@dataclass
class EaseModel:
    """Item-item weight matrix (zero diagonal) and its ridge strength."""

    b: np.ndarray
    lam: float

    @property
    def n(self) -> int:
        return self.b.shape[0]


def _check_row_weights(row_weights, m: int) -> np.ndarray:
    w = np.asarray(row_weights, dtype=np.float64)
    if w.shape != (m,):
        raise ConfigError(f"row_weights must have shape ({m},), got {w.shape}")
    if np.any(w < 0):
        raise ConfigError("row weights must be non-negative")
    if not np.any(w > 0):
        raise ConfigError("at least one row weight must be positive")
    return w


def train_ease(train: RatingMatrix, row_weights, lam: float) -> EaseModel:
    """Closed-form weighted ridge solution with a zero-diagonal constraint."""
    if lam <= 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    weights = _check_row_weights(row_weights, train.m)
    x = train.to_csr()
    gram = (x.T @ x.multiply(weights[:, None])).toarray()
    gram[np.diag_indices_from(gram)] += lam
    try:
        p = np.linalg.inv(gram)
    except np.linalg.LinAlgError as exc:
        raise TrainingError(f"weighted Gram matrix is singular: {exc}") from exc
    if not np.all(np.isfinite(p)):
        raise TrainingError("weighted Gram inversion produced non-finite values")
    b = -p / np.diag(p)
    np.fill_diagonal(b, 0.0)
    return EaseModel(b=b, lam=float(lam))


def score_ease(model: EaseModel, r_u: np.ndarray) -> np.ndarray:
    """Predicted scores r_u @ B; accepts a single row or a stack of rows."""
    r_u = np.asarray(r_u, dtype=np.float64)
    if r_u.shape[-1] != model.n:
        raise ConfigError(f"expected vectors of length {model.n}, got {r_u.shape[-1]}")
    return r_u @ model.b


# ---------------------------------------------------------------------- DAE

@dataclass
class DaeModel:
    """One-hidden-layer denoising autoencoder (tanh hidden, sigmoid output)."""

    w_enc: np.ndarray  # (n, d)
    b_enc: np.ndarray  # (d,)
    w_dec: np.ndarray  # (d, n)
    b_dec: np.ndarray  # (n,)
    dropout_p: float = 0.5
    hidden_activation: str = "tanh"
    output_activation: str = "sigmoid"

    @property
    def n(self) -> int:
        return self.w_enc.shape[0]

    @property
    def d(self) -> int:
        return self.w_enc.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-training knobs for the autoencoder."""

    learning_rate: float = 0.01
    batch_size: int = 512
    max_epochs: int = 200
    patience: int = 50
    l2: float = 0.01
    init_std: float = 0.01
    seed: int = 0
    dropout: float = 0.5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 0:
            raise ConfigError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if self.patience < 0:
            raise ConfigError(f"patience must be >= 0, got {self.patience}")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.init_std < 0:
            raise ConfigError(f"init_std must be >= 0, got {self.init_std}")


def dae_hidden(model: DaeModel, r_u: np.ndarray) -> np.ndarray:
    """Hidden-layer activations for one row or a stack of rows."""
    r_u = np.asarray(r_u, dtype=np.float64)
    return np.tanh(r_u @ model.w_enc + model.b_enc)


def score_dae(model: DaeModel, r_u: np.ndarray) -> np.ndarray:
    """Deterministic forward pass with dropout disabled."""
    r_u = np.asarray(r_u, dtype=np.float64)
    if r_u.shape[-1] != model.n:
        raise ConfigError(f"expected vectors of length {model.n}, got {r_u.shape[-1]}")
    return expit(dae_hidden(model, r_u) @ model.w_dec + model.b_dec)


def _ce_loss(y: np.ndarray, target: np.ndarray, user_weights: np.ndarray) -> float:
    y = np.clip(y, _LOG_EPS, 1.0 - _LOG_EPS)
    per_user = -(target * np.log(y) + (1.0 - target) * np.log(1.0 - y)).sum(axis=1)
    return float(user_weights @ per_user)


def _reg_term(model: DaeModel, l2: float) -> float:
    # overflow to inf is fine here: callers check finiteness and report
    with np.errstate(over="ignore"):
        return float(l2 * ((model.w_enc**2).sum() + (model.w_dec**2).sum()))


def dae_loss(model: DaeModel, x_in, x_target, user_weights, l2: float) -> float:
    """Weighted cross-entropy plus the squared-Frobenius penalty."""
    h = np.tanh(np.asarray(x_in, dtype=np.float64) @ model.w_enc + model.b_enc)
    y = expit(h @ model.w_dec + model.b_dec)
    return _ce_loss(y, np.asarray(x_target, dtype=np.float64), np.asarray(user_weights)) + _reg_term(model, l2)


def dae_loss_and_grads(model: DaeModel, x_in, x_target, user_weights, l2: float):
    """Loss and exact gradients for a batch.

    ``x_in`` is the (possibly corrupted) input, ``x_target`` the clean rows,
    ``user_weights`` one scalar per row. Biases are not regularized.
    """
    x_in = np.asarray(x_in, dtype=np.float64)
    x_target = np.asarray(x_target, dtype=np.float64)
    t = np.asarray(user_weights, dtype=np.float64)

    h = np.tanh(x_in @ model.w_enc + model.b_enc)
    y = expit(h @ model.w_dec + model.b_dec)
    loss = _ce_loss(y, x_target, t) + _reg_term(model, l2)

    dz = (y - x_target) * t[:, None]  # d loss / d pre-sigmoid
    dh = (dz @ model.w_dec.T) * (1.0 - h * h)
    grads = {
        "w_dec": h.T @ dz + 2.0 * l2 * model.w_dec,
        "b_dec": dz.sum(axis=0),
        "w_enc": x_in.T @ dh + 2.0 * l2 * model.w_enc,
        "b_enc": dh.sum(axis=0),
    }
    return loss, grads


_PARAM_ORDER = ("w_enc", "b_enc", "w_dec", "b_dec")


def train_dae(train: RatingMatrix, row_weights, d: int, config: TrainConfig) -> DaeModel:
    """Train the autoencoder on users with positive weight.

    Parameters are drawn from N(0, init_std^2) under ``config.seed`` in the
    fixed order w_enc, b_enc, w_dec, b_dec. Each epoch reshuffles the active
    users and applies a fresh input-dropout mask per batch. Training stops at
    ``max_epochs`` or once the full weighted loss has not improved for more
    than ``patience`` consecutive epochs; the best parameters seen are kept.
    """
    if d < 1:
        raise ConfigError(f"hidden width must be >= 1, got {d}")
    weights = _check_row_weights(row_weights, train.m)

    active = np.flatnonzero(weights > 0)
    x = train.to_csr()[active].toarray()
    t = weights[active]
    n = train.n

    rng = np.random.default_rng(config.seed)
    params = {
        "w_enc": rng.normal(0.0, config.init_std, size=(n, d)),
        "b_enc": rng.normal(0.0, config.init_std, size=d),
        "w_dec": rng.normal(0.0, config.init_std, size=(d, n)),
        "b_dec": rng.normal(0.0, config.init_std, size=n),
    }
    model = DaeModel(dropout_p=config.dropout, **params)

    adam_m = {k: np.zeros_like(v) for k, v in params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in params.items()}
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_eps

    best = {k: v.copy() for k, v in params.items()}
    best_loss = np.inf
    bad_epochs = 0
    step = 0

    for epoch in range(config.max_epochs):
        perm = rng.permutation(len(active))
        for start in range(0, len(active), config.batch_size):
            batch = perm[start : start + config.batch_size]
            xb = x[batch]
            if config.dropout > 0:
                mask = rng.random(xb.shape) >= config.dropout
                x_in = xb * mask / (1.0 - config.dropout)
            else:
                x_in = xb
            loss, grads = dae_loss_and_grads(model, x_in, xb, t[batch], config.l2)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            step += 1
            with np.errstate(over="ignore"):  # divergence surfaces via the loss check
                for key in _PARAM_ORDER:
                    g = grads[key]
                    adam_m[key] = b1 * adam_m[key] + (1.0 - b1) * g
                    adam_v[key] = b2 * adam_v[key] + (1.0 - b2) * g * g
                    m_hat = adam_m[key] / (1.0 - b1**step)
                    v_hat = adam_v[key] / (1.0 - b2**step)
                    params[key] -= config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)

        epoch_loss = dae_loss(model, x, x, t, config.l2)
        if not np.isfinite(epoch_loss):
            raise TrainingError(f"non-finite training loss at epoch {epoch}")
        if epoch_loss < best_loss:
            best_loss = epoch_loss
            best = {k: v.copy() for k, v in params.items()}
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs > config.patience:
                break

    return DaeModel(dropout_p=config.dropout, **best)


# ---------------------------------------------------------------- persistence

def save_model(model: EaseModel | DaeModel, path: str | Path) -> None:
    """Write a model as a binary container: magic, JSON header, raw float64 blocks."""
    if isinstance(model, EaseModel):
        header = {
            "kind": "ease",
            "lambda": model.lam,
            "params": [["b", [model.n, model.n]]],
        }
        blocks = [model.b]
    elif isinstance(model, DaeModel):
        header = {
            "kind": "dae",
            "dropout_p": model.dropout_p,
            "hidden_activation": model.hidden_activation,
            "output_activation": model.output_activation,
            "params": [[name, list(getattr(model, name).shape)] for name in _PARAM_ORDER],
        }
        blocks = [getattr(model, name) for name in _PARAM_ORDER]
    else:
        raise ConfigError(f"cannot serialize {type(model).__name__}")

    payload = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)
        for arr in blocks:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path: str | Path) -> EaseModel | DaeModel:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ConfigError(f"{path} is not a model container (bad magic)")
        (length,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(length).decode())
        arrays = {}
        for name, shape in header["params"]:
            count = int(np.prod(shape))
            buf = fh.read(count * 8)
            arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()

    if header["kind"] == "ease":
        return EaseModel(b=arrays["b"], lam=header["lambda"])
    if header["kind"] == "dae":
        return DaeModel(
            dropout_p=header["dropout_p"],
            hidden_activation=header["hidden_activation"],
            output_activation=header["output_activation"],
            **{name: arrays[name] for name in _PARAM_ORDER},
        )
    raise ConfigError(f"{path}: unknown model kind {header['kind']!r}")
