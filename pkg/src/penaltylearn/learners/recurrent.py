"""Stacked RNN / LSTM / GRU encoders with a linear readout, trained by full BPTT.

The final hidden state of the top layer is the extracted feature vector;
``log(lambda) = h_N . beta + beta0``. Sequences of different lengths are
batched right-padded with a mask; once a sequence ends its state is frozen,
so ``h_N`` is read at the last padded step.

Gate layouts (rows of ``Wx``, ``Wh``, ``b``):
  rnn:  h' = tanh(a)
  lstm: [input, forget, candidate, output]; c' = f*c + i*g, h' = o*tanh(c')
  gru:  [update, reset, candidate]; n = tanh(Wx_n x + Wh_n (r*h) + b_n),
        h' = z*h + (1-z)*n
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..data import Sequence as LabeledSequence
from ..data import TargetInterval
from ..losses import hinge_losses
from .baselines import fit_constant
from .linear import target_arrays
from .models import Preprocessing, Recurrent, TrainConfig
from .optim import adam, split_validation

GATES = {"rnn": 1, "lstm": 4, "gru": 3}
HIDDEN_SIZES = (2, 4, 8, 16)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def init_recurrent(cell_kind: str, n_layers: int, hidden: int, rng: np.random.Generator,
                   beta0: float = 0.0, input_size: int = 1) -> Recurrent:
    """Uniform(-1/sqrt(m), 1/sqrt(m)) weights, biases and readout."""
    if cell_kind not in GATES:
        raise ValueError(f"unknown cell kind {cell_kind!r}")
    if n_layers < 1 or hidden < 1:
        raise ValueError("need at least one layer and one hidden unit")
    bound = 1.0 / np.sqrt(hidden)
    g = GATES[cell_kind] * hidden
    layers = []
    for k in range(n_layers):
        d = input_size if k == 0 else hidden
        layers.append({
            "Wx": rng.uniform(-bound, bound, size=(g, d)),
            "Wh": rng.uniform(-bound, bound, size=(g, hidden)),
            "b": rng.uniform(-bound, bound, size=g),
        })
    beta = rng.uniform(-bound, bound, size=hidden)
    return Recurrent(cell_kind, layers, beta, float(beta0))


def pad_batch(arrays: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad to (T, B) values and a (T, B) 0/1 mask."""
    T = max(a.size for a in arrays)
    X = np.zeros((T, len(arrays)))
    M = np.zeros((T, len(arrays)))
    for j, a in enumerate(arrays):
        X[:a.size, j] = a
        M[:a.size, j] = 1.0
    return X, M


# One layer -------------------------------------------------------------------

def _layer_forward(kind, W, Xin, M):
    T, B, _ = Xin.shape
    m = W["Wh"].shape[1]
    XW = Xin @ W["Wx"].T + W["b"]
    Wh = W["Wh"]
    H = np.empty((T, B, m))
    h = np.zeros((B, m))
    c = np.zeros((B, m))
    cache = []
    for t in range(T):
        mk = M[t][:, None]
        if kind == "rnn":
            hn = np.tanh(XW[t] + h @ Wh.T)
            cache.append((h, hn))
        elif kind == "gru":
            hzr = h @ Wh[:2 * m].T
            z = _sigmoid(XW[t, :, :m] + hzr[:, :m])
            r = _sigmoid(XW[t, :, m:2 * m] + hzr[:, m:])
            rh = r * h
            n = np.tanh(XW[t, :, 2 * m:] + rh @ Wh[2 * m:].T)
            hn = z * h + (1.0 - z) * n
            cache.append((h, z, r, rh, n))
        else:
            a = XW[t] + h @ Wh.T
            i = _sigmoid(a[:, :m])
            f = _sigmoid(a[:, m:2 * m])
            g = np.tanh(a[:, 2 * m:3 * m])
            o = _sigmoid(a[:, 3 * m:])
            cn = f * c + i * g
            tc = np.tanh(cn)
            hn = o * tc
            cache.append((h, c, i, f, g, o, tc))
            c = mk * cn + (1.0 - mk) * c
        h = mk * hn + (1.0 - mk) * h
        H[t] = h
    return H, cache


def _layer_backward(kind, W, Xin, M, cache, dH):
    T, B, _ = Xin.shape
    m = W["Wh"].shape[1]
    Wh = W["Wh"]
    dA = np.zeros((T, B, Wh.shape[0]))
    dWh = np.zeros_like(Wh)
    dh_next = np.zeros((B, m))
    dc_next = np.zeros((B, m))
    for t in range(T - 1, -1, -1):
        mk = M[t][:, None]
        dh = dH[t] + dh_next
        dhn = mk * dh
        dh_prev = (1.0 - mk) * dh
        if kind == "rnn":
            h, hn = cache[t]
            da = dhn * (1.0 - hn * hn)
            dWh += da.T @ h
            dh_prev += da @ Wh
        elif kind == "gru":
            h, z, r, rh, n = cache[t]
            dz = dhn * (h - n)
            dn = dhn * (1.0 - z)
            dh_prev += dhn * z
            dan = dn * (1.0 - n * n)
            drh = dan @ Wh[2 * m:]
            dWh[2 * m:] += dan.T @ rh
            dh_prev += drh * r
            dar = drh * h * r * (1.0 - r)
            daz = dz * z * (1.0 - z)
            dzr = np.concatenate([daz, dar], axis=1)
            dWh[:2 * m] += dzr.T @ h
            dh_prev += dzr @ Wh[:2 * m]
            da = np.concatenate([dzr, dan], axis=1)
        else:
            h, c, i, f, g, o, tc = cache[t]
            dc = dc_next
            dcn = mk * dc
            dc_prev = (1.0 - mk) * dc
            do = dhn * tc
            dcn = dcn + dhn * o * (1.0 - tc * tc)
            dc_prev += dcn * f
            da = np.concatenate([
                dcn * g * i * (1.0 - i),
                dcn * c * f * (1.0 - f),
                dcn * i * (1.0 - g * g),
                do * o * (1.0 - o),
            ], axis=1)
            dWh += da.T @ h
            dh_prev += da @ Wh
            dc_next = dc_prev
        dA[t] = da
        dh_next = dh_prev
    flatA = dA.reshape(T * B, -1)
    grads = {
        "Wx": flatA.T @ Xin.reshape(T * B, -1),
        "Wh": dWh,
        "b": flatA.sum(axis=0),
    }
    dXin = dA @ W["Wx"]
    return dXin, grads


# Whole network ---------------------------------------------------------------

def _split(p: dict, n_layers: int):
    return [{k: p[f"L{l}.{k}"] for k in ("Wx", "Wh", "b")} for l in range(n_layers)]


def forward_batch(p: dict, kind: str, n_layers: int, X: np.ndarray, M: np.ndarray):
    """Predictions (B,), final hidden states (B, m) and the cache for backprop."""
    Xin = X[:, :, None]
    inputs, caches = [], []
    for W in _split(p, n_layers):
        inputs.append(Xin)
        Xin, cache = _layer_forward(kind, W, Xin, M)
        caches.append(cache)
    hN = Xin[-1]
    pred = hN @ p["beta"] + p["beta0"][0]
    return pred, hN, (inputs, caches)


def backward_batch(p: dict, kind: str, n_layers: int, M, state, hN, dpred) -> dict:
    inputs, caches = state
    grads = {"beta": hN.T @ dpred, "beta0": np.array([dpred.sum()])}
    T = M.shape[0]
    dH = np.zeros((T,) + hN.shape)
    dH[-1] = np.outer(dpred, p["beta"])
    layers = _split(p, n_layers)
    for l in range(n_layers - 1, -1, -1):
        dH, g = _layer_backward(kind, layers[l], inputs[l], M, caches[l], dH)
        for k, v in g.items():
            grads[f"L{l}.{k}"] = v
    return grads


def recurrent_forward(model: Recurrent, values) -> tuple[float, np.ndarray]:
    """Log-penalty and final hidden state for one (already preprocessed) sequence."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("need a nonempty 1-D sequence")
    if not np.all(np.isfinite(x)):
        raise ValueError("input has non-finite values")
    X, M = pad_batch([x])
    pred, hN, _ = forward_batch(model.params(), model.cell_kind, model.n_layers, X, M)
    return float(pred[0]), hN[0].copy()


def recurrent_loss_grad(p: dict, kind: str, n_layers: int, X, M, lo, hi, loss_cfg):
    """Mean hinge loss over the batch columns and its parameter gradient."""
    pred, hN, state = forward_batch(p, kind, n_layers, X, M)
    loss, g = hinge_losses(pred, lo, hi, loss_cfg)
    B = X.shape[1]
    return float(loss.mean()), backward_batch(p, kind, n_layers, M, state, hN, g / B)


def _as_arrays(sequences):
    out = []
    for s in sequences:
        v = s.values if isinstance(s, LabeledSequence) else np.asarray(s, float)
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise ValueError("training sequences must be nonempty and finite")
        out.append(v)
    return out


def fit_recurrent(sequences, targets: Sequence[TargetInterval], cell_kind: str = "gru",
                  n_layers: int = 1, hidden: int = 8, cfg: TrainConfig = TrainConfig(),
                  preprocessing: Preprocessing | None = None) -> Recurrent:
    """Adam on the mean hinge loss with backpropagation through entire sequences.

    ``sequences`` must already be preprocessed; ``preprocessing`` is only
    recorded on the model so that raw inputs can be transformed at predict time.
    """
    arrays = _as_arrays(sequences)
    if not arrays:
        raise ValueError("empty training set")
    if len(arrays) != len(targets):
        raise ValueError("one target per sequence is required")
    lo, hi = target_arrays(targets)
    rng = np.random.default_rng(cfg.seed)
    model = init_recurrent(cell_kind, n_layers, hidden, rng,
                           beta0=fit_constant(targets, cfg.loss).c)
    if preprocessing is not None:
        model.preprocessing = preprocessing

    X, M = pad_batch(arrays)
    lengths = np.array([a.size for a in arrays])
    tr, va = split_validation(len(arrays), cfg)
    batches = int(lengths[tr].sum()) > cfg.batch_points

    def loss_grad(q, idx):
        T = int(lengths[idx].max())
        return recurrent_loss_grad(q, cell_kind, n_layers, X[:T, idx], M[:T, idx],
                                   lo[idx], hi[idx], cfg.loss)

    def val_loss(q):
        T = int(lengths[va].max())
        pred = forward_batch(q, cell_kind, n_layers, X[:T, va], M[:T, va])[0]
        return float(hinge_losses(pred, lo[va], hi[va], cfg.loss)[0].mean())

    best, meta = adam(model.params(), loss_grad, tr, val_loss if va.size else None, cfg,
                      batches=batches)
    out = model.with_params(best)
    out.train_meta = {**meta, "cell_kind": cell_kind, "layers": n_layers, "hidden": hidden,
                      "batched": batches}
    return out
