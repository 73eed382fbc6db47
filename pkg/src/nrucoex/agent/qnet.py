"""Fully connected Q-network with hand-written backprop (float64)."""

import struct
from typing import List, Optional, Sequence, Tuple

import numpy as np

CKPT_MAGIC = b"NRUQNET\x00"
CKPT_VERSION = 1


def relu(x):
    return np.maximum(x, 0.0)


class QNetwork:
    """MLP mapping a state vector to one Q-value per action.

    Weights are stored as ``(fan_in, fan_out)`` matrices so a batch of row
    vectors propagates as ``x @ W + b``.
    """

    def __init__(self, input_dim: int, output_dim: int, hidden: Sequence[int] = (32, 32, 32),
                 rng: Optional[np.random.Generator] = None):
        self.sizes = [input_dim, *hidden, output_dim]
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = np.sqrt(6.0 / fan_in)  # He-uniform for ReLU
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def input_dim(self) -> int:
        return self.sizes[0]

    @property
    def output_dim(self) -> int:
        return self.sizes[-1]

    @property
    def params(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "QNetwork":
        net = QNetwork.__new__(QNetwork)
        net.sizes = list(self.sizes)
        net.weights = [w.copy() for w in self.weights]
        net.biases = [b.copy() for b in self.biases]
        return net

    def load_from(self, other: "QNetwork") -> None:
        for dst, src in zip(self.params, other.params):
            dst[...] = src

    def flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat_params(self, flat: np.ndarray) -> None:
        i = 0
        for p in self.params:
            n = p.size
            p[...] = flat[i:i + n].reshape(p.shape)
            i += n

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, list]:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_dim:
            raise ValueError(f"state has dim {x.shape[-1]}, network expects {self.input_dim}")
        acts = [x]
        pre = []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            h = z if i == last else relu(z)
            acts.append(h)
        return h, [acts, pre]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: list, dout: np.ndarray) -> List[np.ndarray]:
        """Gradients of ``sum(dout * output)`` w.r.t. params, in ``params`` order."""
        acts, pre = cache
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        d = dout
        for i in reversed(range(len(self.weights))):
            if i != len(self.weights) - 1:
                d = d * (pre[i] > 0)
            a = acts[i]
            if a.ndim == 1:
                grads_w[i] = np.outer(a, d)
                grads_b[i] = d.copy()
            else:
                grads_w[i] = a.T @ d
                grads_b[i] = d.sum(axis=0)
            d = d @ self.weights[i].T
        out = []
        for gw, gb in zip(grads_w, grads_b):
            out += [gw, gb]
        return out


def q_forward(net: QNetwork, state: np.ndarray) -> np.ndarray:
    return net(state)


def huber(x: np.ndarray, delta: float = 1.0) -> np.ndarray:
    a = np.abs(x)
    return np.where(a <= delta, 0.5 * x * x, delta * (a - 0.5 * delta))


def huber_grad(x: np.ndarray, delta: float = 1.0) -> np.ndarray:
    return np.clip(x, -delta, delta)


class Adam:
    """Adaptive-step optimiser; ``beta1=0`` disables the momentum term."""

    def __init__(self, params: List[np.ndarray], lr: float = 1e-4, beta1: float = 0.0,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: List[np.ndarray], grads: List[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def td_targets(target_net: QNetwork, rewards, next_states, terminals, gamma: float):
    q_next = target_net(next_states).max(axis=1)
    return rewards + gamma * q_next * (1.0 - terminals)


def td_loss_and_grads(net: QNetwork, states, actions, targets):
    q, cache = net.forward(states)
    idx = np.arange(len(actions))
    err = q[idx, actions] - targets
    loss = float(huber(err).mean())
    dq = np.zeros_like(q)
    dq[idx, actions] = huber_grad(err) / len(actions)
    return loss, net.backward(cache, dq)


def train_step(net: QNetwork, target_net: QNetwork, batch, gamma: float, opt: Adam) -> float:
    """One Huber-loss gradient step toward ``r + gamma * max_a' Q_target(s', a')``."""
    states, actions, rewards, next_states, terminals = batch
    y = td_targets(target_net, rewards, next_states, terminals, gamma)
    loss, grads = td_loss_and_grads(net, states, actions, y)
    if not np.isfinite(loss):
        raise FloatingPointError(
            f"non-finite TD loss (reward range {rewards.min()}..{rewards.max()}, "
            f"target range {y.min()}..{y.max()})"
        )
    opt.step(net.params, grads)
    return loss


def save_checkpoint(net: QNetwork, path) -> None:
    """Binary layout: magic, u32 version, u32 n_sizes, u32 sizes..., then f64 LE
    parameters per layer (weights row-major, then biases)."""
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<II", CKPT_VERSION, len(net.sizes)))
        fh.write(struct.pack(f"<{len(net.sizes)}I", *net.sizes))
        for p in net.params:
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_checkpoint(path) -> QNetwork:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(CKPT_MAGIC):
        raise ValueError(f"{path}: not a Q-network checkpoint")
    off = len(CKPT_MAGIC)
    version, n = struct.unpack_from("<II", data, off)
    if version != CKPT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    off += 8
    sizes = list(struct.unpack_from(f"<{n}I", data, off))
    off += 4 * n
    net = QNetwork(sizes[0], sizes[-1], sizes[1:-1])
    for p in net.params:
        nbytes = p.size * 8
        p[...] = np.frombuffer(data, dtype="<f8", count=p.size, offset=off).reshape(p.shape)
        off += nbytes
    if off != len(data):
        raise ValueError(f"{path}: trailing bytes after parameters")
    return net
