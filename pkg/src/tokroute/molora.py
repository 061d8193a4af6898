"""Learned routing: a gated mixture of low-rank adapters.

A two-layer MLP router scores K adapters per token; the top-k scores
are renormalized with a softmax and the selected adapters' deltas are
mixed. Training is plain full-batch gradient descent with exact
analytic gradients (top-k selection held constant within a step) and
an auxiliary load-balancing term. Clustering metrics (ARI, NMI,
routing entropy, confusion) measure how well the learned routing
recovers ground-truth structure it was never shown.

The mixture's grouped execution reuses the dispatch module: selections
become a routing decision over (token, choice) pairs and flow through
build_dispatch / gather / scatter like any other mechanism.

Training runs in float64 internally; parameters are stored as float32.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from . import dispatch
from .catalog import LoraPair
from .errors import ConfigError, FormatError, ShapeError, TrainingError
from .linalg import DTYPE, gelu, gelu_grad_f64, gelu_f64, matmul, softmax, softmax_f64
from .routing import RoutingDecision

ROUTER_MAGIC = b"PTRR"
ROUTER_VERSION = 1
_ROUTER_HEADER = struct.Struct("<4s5If")  # magic, version, d, hidden, K, k, aux_weight


@dataclass
class RouterParams:
    """Router MLP weights plus mixture hyperparameters.

    Logits are W2 @ gelu(W1 @ x + b1) + b2; k adapters are kept per
    token; aux_weight scales the load-balancing loss.
    """

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    k: int = 2
    aux_weight: float = 0.01

    def __post_init__(self):
        self.W1 = np.ascontiguousarray(self.W1, dtype=DTYPE)
        self.b1 = np.ascontiguousarray(self.b1, dtype=DTYPE)
        self.W2 = np.ascontiguousarray(self.W2, dtype=DTYPE)
        self.b2 = np.ascontiguousarray(self.b2, dtype=DTYPE)
        if self.W1.ndim != 2 or self.W2.ndim != 2:
            raise ShapeError("router weights must be 2-D")
        hidden, _ = self.W1.shape
        num = self.W2.shape[0]
        if self.W2.shape[1] != hidden:
            raise ShapeError(f"W2 must be (K, {hidden}), got {self.W2.shape}")
        if self.b1.shape != (hidden,) or self.b2.shape != (num,):
            raise ShapeError("bias shapes inconsistent with weights")
        if not 1 <= self.k <= num:
            raise ConfigError(f"k must be in [1, {num}], got {self.k}")

    @property
    def d(self):
        return self.W1.shape[1]

    @property
    def hidden(self):
        return self.W1.shape[0]

    @property
    def num_adapters(self):
        return self.W2.shape[0]


def init_router(d, num_adapters, hidden=64, k=2, aux_weight=0.01, seed=0):
    """Seeded Gaussian init scaled by 1/sqrt(fan-in); zero biases."""
    rng = np.random.default_rng(seed)
    return RouterParams(
        W1=rng.normal(0.0, 1.0, (hidden, d)) / np.sqrt(d),
        b1=np.zeros(hidden),
        W2=rng.normal(0.0, 1.0, (num_adapters, hidden)) / np.sqrt(hidden),
        b2=np.zeros(num_adapters),
        k=k,
        aux_weight=aux_weight,
    )


def router_forward(x, params):
    """Router logits for one feature vector or a batch of them."""
    x = np.asarray(x, dtype=DTYPE)
    squeeze = x.ndim == 1
    if squeeze:
        x = x.reshape(1, -1)
    if x.shape[1] != params.d:
        raise ShapeError(f"features have d={x.shape[1]}, router expects {params.d}")
    h = gelu(matmul(x, params.W1.T) + params.b1)
    logits = matmul(h, params.W2.T) + params.b2
    return logits[0] if squeeze else logits


def topk_softmax(logits, k):
    """Indices of the k largest logits and softmax weights over them.

    Ties keep the lower index. Indices come back ascending with
    weights aligned; weights are strictly positive and sum to 1.
    """
    logits = np.asarray(logits)
    if logits.ndim != 1:
        raise ShapeError("topk_softmax takes a single logit vector")
    if not 1 <= k <= logits.shape[0]:
        raise ConfigError(f"k must be in [1, {logits.shape[0]}], got {k}")
    # stable sort of -logits puts ties in original (lower-first) order
    idx = np.sort(np.argsort(-logits, kind="stable")[:k])
    return idx, softmax(logits[idx].reshape(1, -1))[0]


def _topk_batch(logits, k):
    # per-row top-k indices, ascending within each row
    sel = np.argsort(-logits, axis=1, kind="stable")[:, :k]
    return np.sort(sel, axis=1)


def molora_forward(features, params, adapters):
    """Mixture delta plus the signals the aux loss needs.

    Returns (delta, probs, selections): the weighted sum of selected
    adapters' low-rank updates, the full softmax over all K logits,
    and each token's top-1 adapter.
    """
    features = np.ascontiguousarray(features, dtype=DTYPE)
    if features.ndim != 2:
        raise ShapeError("features must be (n, d)")
    num = params.num_adapters
    if len(adapters) != num:
        raise ShapeError(f"{len(adapters)} adapters for a {num}-way router")
    for pair in adapters:
        if pair.d != features.shape[1]:
            raise ShapeError(f"adapter d={pair.d}, features d={features.shape[1]}")

    n, d = features.shape
    k = params.k
    logits = router_forward(features, params)
    sel = _topk_batch(logits, k)
    weights = softmax(np.take_along_axis(logits, sel, axis=1))

    # grouped execution over (token, choice) assignments, one group per adapter
    decision = RoutingDecision(sel.ravel(), num, "learned")
    plan = dispatch.build_dispatch(decision)
    buf = np.zeros((n * k, d), dtype=DTYPE)
    for c in plan.nonempty():
        group = plan.groups[c]
        x_g = dispatch.gather(features, group // k)
        pair = adapters[c]
        buf = dispatch.scatter(matmul(matmul(x_g, pair.A), pair.B), group, buf)

    weighted = weights.ravel().astype(np.float64)[:, None] * buf.astype(np.float64)
    delta = weighted.reshape(n, k, d).sum(axis=1).astype(DTYPE)
    probs = softmax(logits)
    selections = np.argmax(logits, axis=1)
    return delta, probs, selections


def aux_loss(probs, selections):
    """Load-balancing penalty K * sum_j f_j * p_j.

    f_j is the fraction of tokens whose top-1 choice is adapter j; p_j
    is the mean routing probability of j. Uniform routing scores 1,
    total collapse scores K.
    """
    probs = np.asarray(probs, dtype=np.float64)
    selections = np.asarray(selections, dtype=np.int64)
    if probs.ndim != 2 or selections.shape != (probs.shape[0],):
        raise ShapeError("probs must be (n, K) with one selection per row")
    n, num = probs.shape
    f = np.bincount(selections, minlength=num) / n
    p = probs.mean(axis=0)
    return float(num * np.sum(f * p))


# ---------------------------------------------------------------------------
# Clustering metrics
# ---------------------------------------------------------------------------

def _contingency(labels, assignments):
    labels = np.asarray(labels, dtype=np.int64)
    assignments = np.asarray(assignments, dtype=np.int64)
    if labels.ndim != 1 or labels.shape != assignments.shape:
        raise ShapeError("labels and assignments must be equal-length vectors")
    _, li = np.unique(labels, return_inverse=True)
    _, ai = np.unique(assignments, return_inverse=True)
    table = np.zeros((li.max() + 1, ai.max() + 1), dtype=np.int64)
    np.add.at(table, (li, ai), 1)
    return table


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def ari(labels, assignments):
    """Adjusted Rand index between two partitions (pair counting)."""
    table = _contingency(labels, assignments)
    n = table.sum()
    index = _comb2(table).sum()
    a = _comb2(table.sum(axis=1)).sum()
    b = _comb2(table.sum(axis=0)).sum()
    total = _comb2(n)
    expected = a * b / total if total > 0 else 0.0
    max_index = (a + b) / 2.0
    if max_index == expected:
        return 1.0  # both partitions trivial and identical
    return float((index - expected) / (max_index - expected))


def nmi(labels, assignments):
    """Mutual information normalized by the mean of the two entropies."""
    table = _contingency(labels, assignments).astype(np.float64)
    n = table.sum()
    pij = table / n
    pi = pij.sum(axis=1)
    pj = pij.sum(axis=0)
    nz = pij > 0
    mi = float(np.sum(pij[nz] * np.log(pij[nz] / np.outer(pi, pj)[nz])))
    h_u = float(-np.sum(pi[pi > 0] * np.log(pi[pi > 0])))
    h_v = float(-np.sum(pj[pj > 0] * np.log(pj[pj > 0])))
    if h_u == 0.0 and h_v == 0.0:
        return 1.0
    if h_u == 0.0 or h_v == 0.0:
        return 0.0
    return max(mi, 0.0) / ((h_u + h_v) / 2.0)


def routing_entropy(probs):
    """Mean Shannon entropy (natural log) of per-token routing rows."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2:
        raise ShapeError("probs must be (n, K)")
    terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return float(-terms.sum(axis=1).mean())


def confusion(labels, assignments, num_targets=None):
    """Row-normalized confusion matrix: true class x routed adapter."""
    labels = np.asarray(labels, dtype=np.int64)
    assignments = np.asarray(assignments, dtype=np.int64)
    if labels.ndim != 1 or labels.shape != assignments.shape:
        raise ShapeError("labels and assignments must be equal-length vectors")
    classes = np.unique(labels)
    if num_targets is None:
        num_targets = int(assignments.max()) + 1
    out = np.zeros((classes.size, num_targets), dtype=np.float64)
    for row, cls in enumerate(classes):
        mask = labels == cls
        counts = np.bincount(assignments[mask], minlength=num_targets)
        out[row] = counts / counts.sum()
    return out


# ---------------------------------------------------------------------------
# Synthetic tasks
# ---------------------------------------------------------------------------

@dataclass
class RoutingTask:
    """Features with optional regression targets and cluster labels."""

    features: np.ndarray
    targets: np.ndarray = None
    labels: np.ndarray = None

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=DTYPE)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ShapeError("features must be a non-empty (n, d) matrix")
        if self.targets is not None:
            self.targets = np.ascontiguousarray(self.targets, dtype=DTYPE)
            if self.targets.shape != self.features.shape:
                raise ShapeError("targets must match features shape")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.features.shape[0],):
                raise ShapeError("labels must be one per token")

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]


def make_cluster_task(num_clusters, per_cluster, d, seed=0, sep=2.0, noise=1.0,
                      rank=4):
    """Gaussian clusters, each with its own orthogonal target transform.

    Token features are a cluster center plus noise; regression targets
    are the features pushed through that cluster's transform. The
    transform is a random rotation confined to a random rank-`rank`
    subspace (identity elsewhere), so a single rank-`rank` adapter can
    realize each cluster's update exactly: routing that recovers the
    clusters is rewarded by the task loss alone, and any cross-cluster
    mixture is strictly worse.
    """
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 1.0, (num_clusters, d))
    centers *= sep / np.linalg.norm(centers, axis=1, keepdims=True)
    deltas = []
    for _ in range(num_clusters):
        basis, _ = np.linalg.qr(rng.normal(0.0, 1.0, (d, rank)))
        rot, _ = np.linalg.qr(rng.normal(0.0, 1.0, (rank, rank)))
        deltas.append(basis @ (rot - np.eye(rank)) @ basis.T)

    n = num_clusters * per_cluster
    labels = rng.permutation(np.repeat(np.arange(num_clusters), per_cluster))
    features = centers[labels] + rng.normal(0.0, noise, (n, d))
    targets = np.empty_like(features)
    for m in range(num_clusters):
        mask = labels == m
        targets[mask] = features[mask] + features[mask] @ deltas[m]
    return RoutingTask(features=features, targets=targets, labels=labels)


def make_labeled_task(num_classes, per_class, d, seed=0, sep=4.0, noise=1.0):
    """Labeled embeddings with no regression targets (router-only task)."""
    task = make_cluster_task(num_classes, per_class, d, seed=seed, sep=sep, noise=noise)
    return RoutingTask(features=task.features, targets=None, labels=task.labels)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    """Knobs for train_router. aux_weight of None defers to the router;
    batch_size of None means one full-batch step per epoch."""

    epochs: int
    lr: float = 1e-2
    aux_weight: float = None
    seed: int = 0
    routing_mode: str = "learned"  # learned | oracle | single
    batch_size: int = None

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.routing_mode not in ("learned", "oracle", "single"):
            raise ConfigError(f"unknown routing mode {self.routing_mode!r}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be positive")


@dataclass(frozen=True)
class HistoryRecord:
    epoch: int
    task_loss: float
    aux_loss: float
    ari: float
    nmi: float
    entropy: float


@dataclass
class TrainHistory:
    """One record per epoch, evaluated before that epoch's update."""

    records: list = field(default_factory=list)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            f.write("epoch,task_loss,aux_loss,ari,nmi,entropy\n")
            for r in self.records:
                f.write(f"{r.epoch},{r.task_loss:.10g},{r.aux_loss:.10g},"
                        f"{r.ari:.10g},{r.nmi:.10g},{r.entropy:.10g}\n")


def params_to_f64(params, adapters):
    """Training-precision copies of router and adapter parameters."""
    state = {
        "W1": params.W1.astype(np.float64),
        "b1": params.b1.astype(np.float64),
        "W2": params.W2.astype(np.float64),
        "b2": params.b2.astype(np.float64),
    }
    if adapters:
        state["A"] = np.stack([p.A.astype(np.float64) for p in adapters])
        state["B"] = np.stack([p.B.astype(np.float64) for p in adapters])
    return state


def loss_and_grads(task, state, k, aux_weight, routing_mode="learned", fixed_sel=None):
    """One full-batch evaluation with exact analytic gradients.

    state holds float64 parameters (router W1/b1/W2/b2 and, for
    regression tasks, stacked adapter factors A/B). Top-k selection is
    treated as constant: recomputed here unless fixed_sel pins it to a
    (sel, selections) pair, and gradients never flow through it.
    Returns (task_loss, aux_loss, grads, info) where info carries
    probs / selections / sel / weights.
    """
    x = task.features.astype(np.float64)
    n, d = x.shape
    num = state["W2"].shape[0]

    z1 = x @ state["W1"].T + state["b1"]
    a1 = gelu_f64(z1)
    logits = a1 @ state["W2"].T + state["b2"]
    probs = softmax_f64(logits)
    grads = {name: np.zeros_like(arr) for name, arr in state.items()}

    classification = task.targets is None
    if classification:
        if task.labels is None:
            raise ConfigError("router-only task needs labels")
        y = task.labels
        rows = np.arange(n)
        shifted = logits - logits.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1))
        task_loss = float(np.mean(logz - shifted[rows, y]))
        selections = np.argmax(logits, axis=1)
        aux = aux_loss(probs, selections)
        dlogits = (probs - np.eye(num)[y]) / n
        if aux_weight:
            f = np.bincount(selections, minlength=num) / n
            u = num * f / n
            dlogits = dlogits + aux_weight * probs * (u[None, :] - (probs @ u)[:, None])
        info = {"probs": probs, "selections": selections, "sel": None, "weights": None}
    else:
        if routing_mode == "learned":
            if fixed_sel is not None:
                sel, selections = fixed_sel
            else:
                sel = _topk_batch(logits, k)
                selections = np.argmax(logits, axis=1)
            weights = softmax_f64(np.take_along_axis(logits, sel, axis=1))
        elif routing_mode == "oracle":
            if task.labels is None:
                raise ConfigError("oracle routing needs labels")
            sel = task.labels.reshape(-1, 1)
            weights = np.ones((n, 1))
            selections = task.labels.copy()
        else:  # single
            sel = np.zeros((n, 1), dtype=np.int64)
            weights = np.ones((n, 1))
            selections = np.zeros(n, dtype=np.int64)

        # forward through the selected adapters
        delta = np.zeros((n, d))
        cache = []
        for j in range(state["A"].shape[0]):
            tok, slot = np.nonzero(sel == j)
            if tok.size == 0:
                cache.append(None)
                continue
            xa = x[tok] @ state["A"][j]
            dj = xa @ state["B"][j]
            delta[tok] += weights[tok, slot][:, None] * dj
            cache.append((tok, slot, xa, dj))
        out = x + delta
        task_loss = float(np.mean((out - task.targets.astype(np.float64)) ** 2))

        if routing_mode == "learned":
            aux = aux_loss(probs, selections)
        else:
            # fixed one-hot routing: report the aux value it implies
            width = max(num, int(selections.max()) + 1)
            aux = aux_loss(np.eye(width)[selections], selections)

        # backward: d task / d out
        g_out = 2.0 * (out - task.targets.astype(np.float64)) / out.size
        dweights = np.zeros_like(weights)
        for j, entry in enumerate(cache):
            if entry is None:
                continue
            tok, slot, xa, dj = entry
            g_rows = g_out[tok]
            wj = weights[tok, slot][:, None]
            grads["B"][j] = (wj * xa).T @ g_rows
            grads["A"][j] = x[tok].T @ ((wj * g_rows) @ state["B"][j].T)
            dweights[tok, slot] = np.sum(g_rows * dj, axis=1)

        dlogits = np.zeros_like(logits)
        if routing_mode == "learned":
            # softmax over the selected logits
            dot = np.sum(dweights * weights, axis=1, keepdims=True)
            dsel_logits = weights * (dweights - dot)
            np.add.at(dlogits, (np.arange(n)[:, None], sel), dsel_logits)
            if aux_weight:
                f = np.bincount(selections, minlength=num) / n
                u = num * f / n
                dlogits += aux_weight * probs * (u[None, :] - (probs @ u)[:, None])
        info = {"probs": probs, "selections": selections, "sel": sel, "weights": weights}

    if routing_mode == "learned" or classification:
        grads["W2"] = dlogits.T @ a1
        grads["b2"] = dlogits.sum(axis=0)
        da1 = dlogits @ state["W2"]
        dz1 = da1 * gelu_grad_f64(z1)
        grads["W1"] = dz1.T @ x
        grads["b1"] = dz1.sum(axis=0)

    info["aux"] = aux
    return task_loss, aux, grads, info


class _TaskView:
    """Row slice of a RoutingTask, cheap enough to build per minibatch."""

    __slots__ = ("features", "targets", "labels")

    def __init__(self, task, idx):
        self.features = task.features[idx]
        self.targets = None if task.targets is None else task.targets[idx]
        self.labels = None if task.labels is None else task.labels[idx]


def train_router(task, params, config, adapters=None):
    """Gradient-descent training; returns (new params, history).

    Each epoch records full-dataset metrics at its start, then takes
    one descent step per minibatch (one full-batch step when
    config.batch_size is None) over a seeded shuffle of the data. For
    regression tasks the passed adapters train too and are updated in
    place when the loop finishes (their factor arrays are replaced
    with the trained float32 values). Record 0 reflects the initial
    state.
    """
    if task.n == 0:
        raise ConfigError("dataset is empty")
    aux_weight = params.aux_weight if config.aux_weight is None else config.aux_weight
    regression = task.targets is not None
    if regression and not adapters:
        raise ConfigError("regression training needs adapters")

    state = params_to_f64(params, adapters if regression else [])
    history = TrainHistory()
    mode = config.routing_mode
    batch = task.n if config.batch_size is None else min(config.batch_size, task.n)
    shuffle_rng = np.random.default_rng(config.seed)
    train_router_step = mode == "learned" or not regression

    for epoch in range(config.epochs):
        task_loss, aux, _, info = loss_and_grads(
            task, state, params.k, aux_weight, routing_mode=mode
        )
        if not (np.isfinite(task_loss) and np.isfinite(aux)):
            raise TrainingError("non-finite loss", epoch=epoch)

        if task.labels is not None:
            rec_ari = ari(task.labels, info["selections"])
            rec_nmi = nmi(task.labels, info["selections"])
        else:
            rec_ari = rec_nmi = float("nan")
        if mode == "learned" or not regression:
            entropy = routing_entropy(info["probs"])
        else:
            entropy = 0.0  # fixed one-hot routing
        history.records.append(HistoryRecord(
            epoch=epoch, task_loss=task_loss, aux_loss=aux,
            ari=rec_ari, nmi=rec_nmi, entropy=entropy,
        ))

        order = shuffle_rng.permutation(task.n)
        for start in range(0, task.n, batch):
            view = _TaskView(task, order[start:start + batch])
            step_loss, step_aux, grads, _ = loss_and_grads(
                view, state, params.k, aux_weight, routing_mode=mode
            )
            if not (np.isfinite(step_loss) and np.isfinite(step_aux)):
                raise TrainingError("non-finite loss", epoch=epoch)
            for name, g in grads.items():
                if name in ("W1", "b1", "W2", "b2") and not train_router_step:
                    continue
                state[name] -= config.lr * g

    new_params = RouterParams(
        W1=state["W1"], b1=state["b1"], W2=state["W2"], b2=state["b2"],
        k=params.k, aux_weight=params.aux_weight,
    )
    if regression and adapters is not None:
        for j, pair in enumerate(adapters):
            pair.A = state["A"][j].astype(DTYPE)
            pair.B = state["B"][j].astype(DTYPE)
    return new_params, history


def evaluate(task, params, adapters=None, routing_mode="learned"):
    """Task loss, metrics, and routing signals at the current parameters."""
    state = params_to_f64(params, adapters if task.targets is not None else [])
    aux_w = params.aux_weight
    task_loss, aux, _, info = loss_and_grads(
        task, state, params.k, aux_w, routing_mode=routing_mode
    )
    return task_loss, aux, info


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_router(path, params):
    """Write router parameters with magic PTRR, little-endian float32."""
    with open(path, "wb") as f:
        f.write(_ROUTER_HEADER.pack(ROUTER_MAGIC, ROUTER_VERSION, params.d,
                                    params.hidden, params.num_adapters, params.k,
                                    float(params.aux_weight)))
        for arr in (params.W1, params.b1, params.W2, params.b2):
            f.write(arr.astype("<f4").tobytes(order="C"))


def load_router(path):
    """Read a PTRR blob back into RouterParams."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _ROUTER_HEADER.size:
        raise FormatError(f"header truncated: {len(blob)} bytes", offset=len(blob))
    magic, version, d, hidden, num, k, aux_weight = _ROUTER_HEADER.unpack_from(blob, 0)
    if magic != ROUTER_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {ROUTER_MAGIC!r}", offset=0)
    if version != ROUTER_VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if min(d, hidden, num, k) < 1:
        raise FormatError(f"non-positive dimension in header: {(d, hidden, num, k)}",
                          offset=8)
    sizes = [hidden * d, hidden, num * hidden, num]
    expected = _ROUTER_HEADER.size + 4 * sum(sizes)
    if len(blob) != expected:
        raise FormatError(f"payload is {len(blob) - _ROUTER_HEADER.size} bytes, "
                          f"expected {expected - _ROUTER_HEADER.size}",
                          offset=min(len(blob), expected))
    pos = _ROUTER_HEADER.size
    arrays = []
    for count in sizes:
        arrays.append(np.frombuffer(blob, dtype="<f4", count=count, offset=pos))
        pos += 4 * count
    return RouterParams(
        W1=arrays[0].reshape(hidden, d), b1=arrays[1],
        W2=arrays[2].reshape(num, hidden), b2=arrays[3],
        k=k, aux_weight=float(aux_weight),
    )
