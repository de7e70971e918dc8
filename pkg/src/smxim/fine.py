"""Learned per-subblock bit detector: pointwise CNN over real/imag antenna
channels followed by a two-layer fully connected network.

The forward pass, backpropagation, and the Adam/SGD updates are implemented
directly in numpy so every multiply is visible to the complexity audit. The
:class:`FineDetector` estimator wraps training and inference behind the usual
fit/predict surface.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

MODEL_FORMAT_HEADER = "smximodel v1"

_PARAM_FIELDS = (
    "kernels", "kernel_bias", "hidden_weights", "hidden_bias",
    "out_weights", "out_bias",
)


@dataclass
class FineDetectorModel:
    """All trainable parameters plus the dimensions they were built for.

    kernels (F, 2T) and kernel_bias (F,) form the pointwise convolution over
    the interleaved real/imag antenna channels; hidden_weights (tau, u*F) and
    out_weights (p*T, tau) are the fully connected stage.
    """

    kernels: np.ndarray = field(repr=False)
    kernel_bias: np.ndarray = field(repr=False)
    hidden_weights: np.ndarray = field(repr=False)
    hidden_bias: np.ndarray = field(repr=False)
    out_weights: np.ndarray = field(repr=False)
    out_bias: np.ndarray = field(repr=False)
    n_tx: int = 0
    group_len: int = 0
    bits_per_group: int = 0

    @property
    def kernel_count(self):
        return self.kernels.shape[0]

    @property
    def hidden_size(self):
        return self.hidden_weights.shape[0]

    @property
    def out_size(self):
        return self.bits_per_group * self.n_tx

    def __post_init__(self):
        f, two_t = self.kernels.shape
        if two_t != 2 * self.n_tx:
            raise ValueError(f"kernels must have 2*T={2 * self.n_tx} inputs, got {two_t}")
        if self.kernel_bias.shape != (f,):
            raise ValueError("kernel bias length must match kernel count")
        tau, flat = self.hidden_weights.shape
        if flat != self.group_len * f:
            raise ValueError(f"hidden layer expects u*F={self.group_len * f} inputs, got {flat}")
        if self.hidden_bias.shape != (tau,):
            raise ValueError("hidden bias length must match hidden size")
        if self.out_weights.shape != (self.out_size, tau):
            raise ValueError(f"output layer must be {self.out_size}x{tau}")
        if self.out_bias.shape != (self.out_size,):
            raise ValueError("output bias length must match output size")
        for name in _PARAM_FIELDS:
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite values")

    def copy(self):
        kwargs = {name: getattr(self, name).copy() for name in _PARAM_FIELDS}
        return FineDetectorModel(
            n_tx=self.n_tx, group_len=self.group_len,
            bits_per_group=self.bits_per_group, **kwargs,
        )


@dataclass
class FineGradients:
    """Gradient arrays mirroring the model parameter shapes."""

    kernels: np.ndarray
    kernel_bias: np.ndarray
    hidden_weights: np.ndarray
    hidden_bias: np.ndarray
    out_weights: np.ndarray
    out_bias: np.ndarray


@dataclass(frozen=True)
class TrainingConfig:
    """Optimizer hyperparameters and dataset bookkeeping for offline training."""

    learning_rate: float = 8e-4
    batch_size: int = 1000
    epochs: int = 120
    train_snr_db: float = 15.0
    dataset_size: int = 1_200_000
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    optimizer: str = "adam"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch size and epochs must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be adam or sgd, got {self.optimizer!r}")


def init_model(n_tx, group_len, bits_per_group, kernel_count, hidden_size, rng):
    """Random init: every layer uniform in +-1/sqrt(fan-in)."""
    def uniform(shape, fan_in):
        bound = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    flat = group_len * kernel_count
    out = bits_per_group * n_tx
    return FineDetectorModel(
        kernels=uniform((kernel_count, 2 * n_tx), 2 * n_tx),
        kernel_bias=uniform((kernel_count,), 2 * n_tx),
        hidden_weights=uniform((hidden_size, flat), flat),
        hidden_bias=uniform((hidden_size,), flat),
        out_weights=uniform((out, hidden_size), hidden_size),
        out_bias=uniform((out,), hidden_size),
        n_tx=n_tx, group_len=group_len, bits_per_group=bits_per_group,
    )


def subblock_to_tensor(psi):
    """(T, u) complex subblock -> (u, 2, T) real tensor (real/imag split)."""
    psi = np.asarray(psi, dtype=np.complex128)
    return np.stack([psi.real.T, psi.imag.T], axis=1)


def _interleave(x):
    """(B, u, 2, T) -> (B, u, 2T) with per-antenna [real, imag] feature pairs."""
    b, u = x.shape[0], x.shape[1]
    return x.transpose(0, 1, 3, 2).reshape(b, u, -1)


def _forward(model, x):
    """Batched forward pass; returns intermediates needed by backprop."""
    feats = _interleave(x)                                   # (B, u, 2T)
    theta = np.tanh(feats @ model.kernels.T + model.kernel_bias)   # (B, u, F)
    flat = theta.transpose(0, 2, 1).reshape(x.shape[0], -1)  # feature-major
    hidden = np.tanh(flat @ model.hidden_weights.T + model.hidden_bias)
    s_hat = expit(hidden @ model.out_weights.T + model.out_bias)
    return feats, theta, flat, hidden, s_hat


def cnn_forward(model, psi):
    """Pointwise convolution stage for one subblock: (T, u) complex -> (F, u) in (-1, 1).

    Each output row f applies kernel weights to the real and imaginary parts
    of every antenna at one subcarrier position, adds the bias, and squashes
    through tanh; positions are processed independently (stride-1, width-1).
    """
    x = subblock_to_tensor(psi)[None]
    if x.shape[1] != model.group_len or x.shape[3] != model.n_tx:
        raise ValueError(
            f"subblock must be {model.n_tx}x{model.group_len}, got {x.shape[3]}x{x.shape[1]}"
        )
    _, theta, _, _, _ = _forward(model, x)
    return theta[0].T


def fcnn_forward(model, theta):
    """Fully connected stage: (F, u) features -> p*T soft bits in (0, 1).

    The feature matrix is flattened feature-major (all positions of kernel 1,
    then kernel 2, ...) before the two dense layers.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (model.kernel_count, model.group_len):
        raise ValueError(
            f"expected ({model.kernel_count}, {model.group_len}) features, got {theta.shape}"
        )
    flat = theta.reshape(-1)
    hidden = np.tanh(model.hidden_weights @ flat + model.hidden_bias)
    return expit(model.out_weights @ hidden + model.out_bias)


def loss_eval(s, s_hat):
    """Euclidean distance between target bits and soft outputs."""
    s = np.asarray(s, dtype=np.float64)
    s_hat = np.asarray(s_hat, dtype=np.float64)
    if s.shape != s_hat.shape:
        raise ValueError(f"shape mismatch {s.shape} vs {s_hat.shape}")
    return float(np.linalg.norm(s - s_hat))


def _loss_and_grad(model, x, y):
    """Mean squared-distance batch loss and its gradients.

    Training minimizes the squared distance (differentiable everywhere, same
    minimizers as the plain distance); the distance itself is also returned
    for logging.
    """
    b = x.shape[0]
    feats, theta, flat, hidden, s_hat = _forward(model, x)
    diff = s_hat - y
    sq_loss = float(np.mean(np.sum(diff ** 2, axis=1)))
    norm_loss = float(np.mean(np.linalg.norm(diff, axis=1)))

    d_out = (2.0 / b) * diff * s_hat * (1.0 - s_hat)         # (B, pT)
    g_out_w = d_out.T @ hidden
    g_out_b = d_out.sum(axis=0)
    d_hidden = (d_out @ model.out_weights) * (1.0 - hidden ** 2)
    g_hid_w = d_hidden.T @ flat
    g_hid_b = d_hidden.sum(axis=0)
    d_flat = d_hidden @ model.hidden_weights                 # (B, F*u)
    d_theta = d_flat.reshape(b, model.kernel_count, model.group_len).transpose(0, 2, 1)
    d_pre = d_theta * (1.0 - theta ** 2)                     # (B, u, F)
    g_ker = np.einsum("buf,bud->fd", d_pre, feats)
    g_ker_b = d_pre.sum(axis=(0, 1))

    grads = FineGradients(
        kernels=g_ker, kernel_bias=g_ker_b,
        hidden_weights=g_hid_w, hidden_bias=g_hid_b,
        out_weights=g_out_w, out_bias=g_out_b,
    )
    return sq_loss, norm_loss, grads


def model_grad(model, x, y):
    """Gradient of the mean batch loss w.r.t. every parameter group.

    x is (B, u, 2, T) real, y is (B, p*T) binary targets.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 4 or x.shape[0] == 0:
        raise ValueError(f"batch must be a nonempty (B, u, 2, T) tensor, got {x.shape}")
    _, _, grads = _loss_and_grad(model, x, y)
    return grads


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    m: dict
    v: dict
    step: int = 0

    @classmethod
    def for_model(cls, model):
        zeros = {name: np.zeros_like(getattr(model, name)) for name in _PARAM_FIELDS}
        return cls(m=zeros, v={k: a.copy() for k, a in zeros.items()}, step=0)


def sgd_step(model, grads, learning_rate):
    """Plain gradient step: every parameter decreases by lr * gradient."""
    out = model.copy()
    for name in _PARAM_FIELDS:
        getattr(out, name)[...] -= learning_rate * getattr(grads, name)
    return out


def adam_step(model, grads, state, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update with bias correction; returns (new model, new state)."""
    out = model.copy()
    t = state.step + 1
    new_m, new_v = {}, {}
    for name in _PARAM_FIELDS:
        g = getattr(grads, name)
        m = beta1 * state.m[name] + (1.0 - beta1) * g
        v = beta2 * state.v[name] + (1.0 - beta2) * g ** 2
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        getattr(out, name)[...] -= learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name] = m
        new_v[name] = v
    return out, AdamState(m=new_m, v=new_v, step=t)


def train_model(x, y, n_tx, group_len, bits_per_group, kernel_count, hidden_size,
                config: TrainingConfig):
    """Train from random init on shuffled minibatches.

    Returns the final model and a per-epoch history dict with the mean
    squared-distance loss ("squared") and the mean plain-distance loss
    ("norm"). Fully deterministic for a fixed config seed.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        raise ValueError("training dataset is empty")
    rng = np.random.default_rng(config.seed)
    model = init_model(n_tx, group_len, bits_per_group, kernel_count, hidden_size, rng)
    state = AdamState.for_model(model)
    history = {"squared": [], "norm": []}
    batch = min(config.batch_size, n)
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        sq_sum = norm_sum = 0.0
        n_batches = 0
        for start in range(0, n, batch):
            sel = perm[start:start + batch]
            sq, norm, grads = _loss_and_grad(model, x[sel], y[sel])
            if config.optimizer == "adam":
                model, state = adam_step(
                    model, grads, state, config.learning_rate,
                    config.beta1, config.beta2, config.eps,
                )
            else:
                model = sgd_step(model, grads, config.learning_rate)
            sq_sum += sq
            norm_sum += norm
            n_batches += 1
        history["squared"].append(sq_sum / n_batches)
        history["norm"].append(norm_sum / n_batches)
    return model, history


def predict_soft(model, x):
    """Batched soft outputs: (B, u, 2, T) -> (B, p*T) in (0, 1)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        x = x[None]
    if x.shape[1:] != (model.group_len, 2, model.n_tx):
        raise ValueError(
            f"inputs must be (B, {model.group_len}, 2, {model.n_tx}), got {x.shape}"
        )
    return _forward(model, x)[4]


def detect_bits(model, psi):
    """Hard bit decisions for one (T, u) subblock: soft output thresholded at 0.5."""
    soft = predict_soft(model, subblock_to_tensor(psi))
    return (soft[0] >= 0.5).astype(np.int64)


def _format_row(values):
    return " ".join(repr(float(v)) for v in np.atleast_1d(values))


def model_save(model, path):
    """Write the versioned text format: header, dims, then one section per parameter."""
    lines = [MODEL_FORMAT_HEADER]
    lines.append(
        "dims %d %d %d %d %d"
        % (model.n_tx, model.group_len, model.bits_per_group,
           model.kernel_count, model.hidden_size)
    )
    for name in _PARAM_FIELDS:
        arr = np.atleast_2d(getattr(model, name))
        lines.append(_SECTION_BY_FIELD[name])
        lines.extend(_format_row(row) for row in arr)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


_SECTION_BY_FIELD = {
    "kernels": "w", "kernel_bias": "c",
    "hidden_weights": "a1", "hidden_bias": "b1",
    "out_weights": "a2", "out_bias": "b2",
}
_FIELD_BY_SECTION = {v: k for k, v in _SECTION_BY_FIELD.items()}


def model_load(path):
    """Parse a file written by :func:`model_save`, validating version and dimensions."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip()]
    if not lines or lines[0] != MODEL_FORMAT_HEADER:
        raise ValueError(f"not a {MODEL_FORMAT_HEADER!r} file: {path}")
    if len(lines) < 2 or not lines[1].startswith("dims "):
        raise ValueError("missing dims line")
    try:
        n_tx, u, p, f, tau = (int(tok) for tok in lines[1].split()[1:])
    except ValueError as exc:
        raise ValueError(f"malformed dims line: {lines[1]!r}") from exc

    rows_by_section = {"w": f, "c": 1, "a1": tau, "b1": 1, "a2": p * n_tx, "b2": 1}
    arrays = {}
    pos = 2
    for section in ("w", "c", "a1", "b1", "a2", "b2"):
        if pos >= len(lines) or lines[pos] != section:
            raise ValueError(f"expected section {section!r} at line {pos + 1}")
        pos += 1
        n_rows = rows_by_section[section]
        block = lines[pos:pos + n_rows]
        if len(block) != n_rows:
            raise ValueError(f"section {section!r} is truncated")
        try:
            data = np.array([[float(tok) for tok in row.split()] for row in block])
        except ValueError as exc:
            raise ValueError(f"malformed float in section {section!r}") from exc
        arrays[_FIELD_BY_SECTION[section]] = data[0] if n_rows == 1 else data
        pos += n_rows
    if pos != len(lines):
        raise ValueError("trailing content after final section")
    # Dimension consistency beyond row counts is enforced by the constructor.
    return FineDetectorModel(
        n_tx=n_tx, group_len=u, bits_per_group=p,
        kernels=np.atleast_2d(arrays["kernels"]),
        kernel_bias=np.atleast_1d(arrays["kernel_bias"]),
        hidden_weights=np.atleast_2d(arrays["hidden_weights"]),
        hidden_bias=np.atleast_1d(arrays["hidden_bias"]),
        out_weights=np.atleast_2d(arrays["out_weights"]),
        out_bias=np.atleast_1d(arrays["out_bias"]),
    )


class FineDetector(BaseEstimator):
    """Sklearn-style estimator around the subblock bit detector.

    Parameters mirror the training hyperparameters; ``fit`` infers the
    subblock dimensions from the data. X is (n, u, 2, T) real (real/imag
    split of the equalized subblock), y is (n, p*T) binary.
    """

    def __init__(self, kernel_count=64, hidden_size=128, learning_rate=8e-4,
                 batch_size=1000, epochs=120, optimizer="adam",
                 beta1=0.9, beta2=0.999, eps=1e-8, random_state=0):
        self.kernel_count = kernel_count
        self.hidden_size = hidden_size
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.optimizer = optimizer
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.random_state = random_state

    def _validate_xy(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y)
        if x.ndim != 4 or x.shape[2] != 2:
            raise ValueError(f"X must be (n, u, 2, T), got {x.shape}")
        if y.ndim != 2 or y.shape[0] != x.shape[0]:
            raise ValueError(f"y must be (n, p*T) aligned with X, got {y.shape}")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("y must be binary")
        n_tx = x.shape[3]
        if y.shape[1] % n_tx != 0:
            raise ValueError(
                f"y width {y.shape[1]} is not a multiple of the antenna count {n_tx}"
            )
        return x, y.astype(np.float64)

    def fit(self, X, y):
        X, y = self._validate_xy(X, y)
        n_tx = X.shape[3]
        config = TrainingConfig(
            learning_rate=self.learning_rate, batch_size=self.batch_size,
            epochs=self.epochs, seed=self.random_state, beta1=self.beta1,
            beta2=self.beta2, eps=self.eps, optimizer=self.optimizer,
            dataset_size=X.shape[0],
        )
        self.model_, self.history_ = train_model(
            X, y, n_tx=n_tx, group_len=X.shape[1],
            bits_per_group=y.shape[1] // n_tx,
            kernel_count=self.kernel_count, hidden_size=self.hidden_size,
            config=config,
        )
        self.loss_curve_ = list(self.history_["squared"])
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("FineDetector must be fitted before prediction")

    def predict_proba(self, X):
        self._check_fitted()
        return predict_soft(self.model_, X)

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def score(self, X, y):
        """Fraction of correctly detected bits."""
        X, y = self._validate_xy(X, y)
        return float(np.mean(self.predict(X) == y))
