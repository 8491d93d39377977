"""Property suites that check the library against independent brute-force or numeric oracles.

Each ``check_*`` function returns an :class:`OracleResult`; the CLI and the
acceptance tests both call them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import torch
from scipy.optimize import minimize_scalar

from . import geometry
from .cse import CseConfig, EmbeddingSet, cse_loss
from .entropy import (check_conductance_bound, enumerate_trees, min_se_bruteforce, one_dim_entropy,
                      se_cost, structural_entropy, structural_entropy_lca)
from .graph import WeightedGraph, conductance
from .trees import PartitionTree


@dataclass
class OracleResult:
    name: str
    passed: bool
    checked: int
    worst: float
    seconds: float
    details: dict = field(default_factory=dict)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = " ".join(f"{k}={v}" for k, v in self.details.items())
        return (f"{status} {self.name}: checked={self.checked} worst={self.worst:.3e} "
                f"time={self.seconds:.1f}s {extra}").rstrip()


# -- random instances ----------------------------------------------------------


def random_graph(n: int, rng: np.random.Generator, density: float = 0.6,
                 low: float = 0.1, high: float = 1.0) -> WeightedGraph:
    """Connected graph with uniform random weights; edges kept with probability ``density``."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    while True:
        keep = rng.random(len(pairs)) < density
        edges = [(i, j, rng.uniform(low, high)) for (i, j), k in zip(pairs, keep) if k]
        if edges:
            G = WeightedGraph.from_edges(n, edges)
            if G.is_connected():
                return G


def random_partition_tree(n: int, rng: np.random.Generator, max_children: int = 3) -> PartitionTree:
    """Random tree built by recursively splitting the vertex set into 2..max_children blocks."""

    def split(items):
        if len(items) == 1:
            return int(items[0])
        k = int(rng.integers(2, min(max_children, len(items)) + 1))
        items = rng.permutation(items)
        cuts = np.sort(rng.choice(np.arange(1, len(items)), size=k - 1, replace=False))
        return tuple(split(block) for block in np.split(items, cuts))

    return PartitionTree.from_nested(split(np.arange(n)))


# -- discrete structural entropy -----------------------------------------------


def check_entropy_forms(num_graphs: int = 50, max_n: int = 5, tol: float = 1e-9, seed: int = 0) -> OracleResult:
    """Cut-based and LCA-based SE agree on every partitioning tree of small random graphs."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, count = 0.0, 0
    for g in range(num_graphs):
        n = 2 + g % (max_n - 1)
        G = random_graph(n, rng)
        for nested in enumerate_trees(n):
            T = PartitionTree.from_nested(nested)
            worst = max(worst, abs(structural_entropy(G, T) - structural_entropy_lca(G, T)))
            count += 1
    return OracleResult("theorem4", worst < tol, count, worst, time.perf_counter() - start,
                        {"graphs": num_graphs})


def check_binary_minimum(num_graphs: int = 50, max_n: int = 5, tol: float = 1e-9, seed: int = 1) -> OracleResult:
    """The SE minimum over binary trees equals the minimum over all partitioning trees."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for g in range(num_graphs):
        n = 2 + g % (max_n - 1)
        G = random_graph(n, rng)
        _, best_binary = min_se_bruteforce(G, binary_only=True)
        _, best_all = min_se_bruteforce(G, binary_only=False)
        worst = max(worst, abs(best_binary - best_all))
    return OracleResult("lemma2", worst < tol, num_graphs, worst, time.perf_counter() - start)


def check_conductance_bound_suite(num_pairs: int = 500, max_n: int = 8, seed: int = 2) -> OracleResult:
    """Normalized SE ``H^T / H^1`` versus exhaustive conductance on random (graph, tree) pairs.

    ``worst`` is the largest violation ``conductance - H^T / H^1`` (0 when none).
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    violations, worst = 0, 0.0
    example = None
    for t in range(num_pairs):
        n = 2 + t % (max_n - 1)
        G = random_graph(n, rng)
        T = random_partition_tree(n, rng)
        if not check_conductance_bound(G, T):
            violations += 1
            gap = conductance(G) - structural_entropy(G, T) / one_dim_entropy(G)
            if gap > worst:
                worst, example = gap, (n, T.to_nested())
    details = {"violations": violations}
    if example is not None:
        details["worst_case"] = f"n={example[0]} tree={example[1]}"
    return OracleResult("lemma3", violations == 0, num_pairs, worst, time.perf_counter() - start, details)


# -- geodesic to the origin ------------------------------------------------------


def mobius_add(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Mobius addition of points (last axis) with broadcasting over leading axes."""
    xy = (x * y).sum(-1, keepdims=True)
    xx = (x * x).sum(-1, keepdims=True)
    yy = (y * y).sum(-1, keepdims=True)
    return ((1 + 2 * xy + yy) * x + (1 - xx) * y) / (1 + 2 * xy + xx * yy)


def geodesic_points(x: np.ndarray, y: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Points at fractions ``ts`` along the Poincare geodesic segment from ``x`` to ``y``."""
    v = mobius_add(-x, y)
    nv = math.sqrt(v @ v)
    scaled = np.tanh(np.asarray(ts, dtype=float)[:, None] * math.atanh(nv)) * (v / nv)
    return mobius_add(np.broadcast_to(x, scaled.shape), scaled)


def sampled_origin_distance(x, y, samples: int = 4001) -> float:
    """Hyperbolic distance from the origin to the segment ``[x, y]`` by dense sampling plus refinement."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.allclose(x, y, rtol=0.0, atol=1e-15):
        return 2.0 * math.atanh(math.sqrt(min(x @ x, y @ y)))

    def dists(ts):
        p = geodesic_points(x, y, ts)
        return 2.0 * np.arctanh(np.minimum(np.linalg.norm(p, axis=1), 1 - 1e-16))

    ts = np.linspace(0.0, 1.0, samples)
    values = dists(ts)
    k = int(np.argmin(values))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, samples - 1)]
    refined = minimize_scalar(lambda t: float(dists(np.array([t]))[0]), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-13})
    return float(min(values.min(), refined.fun))


def origin_value_from_distance(D: float) -> float:
    """The LCA-depth transform ``artanh(tanh(D)^2) / 2`` of a distance ``D`` to the origin."""
    return float(np.arctanh(min(math.tanh(D) ** 2, geometry.ARTANH_MAX)) / 2.0)


def random_poincare_pair(rng: np.random.Generator, dim: int, max_norm: float = 0.9):
    """Two points with norms uniform in ``(0.05, max_norm)``; resampled when nearly collinear."""
    while True:
        x, y = (rng.normal(size=dim) for _ in range(2))
        x *= rng.uniform(0.05, max_norm) / np.linalg.norm(x)
        y *= rng.uniform(0.05, max_norm) / np.linalg.norm(y)
        gram = (x @ x) * (y @ y) - (x @ y) ** 2
        if gram > 1e-6 * (x @ x) * (y @ y):
            return x, y


def check_origin_depth(num_pairs: int = 500, tol: float = 1e-6, seed: int = 3) -> OracleResult:
    """Closed-form geodesic-to-origin value against numeric minimization along the geodesic.

    Excluded degeneracies: nearly collinear pairs (the geodesic is then a
    diameter through the origin) and points within 0.1 of the boundary.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in range(num_pairs):
        x, y = random_poincare_pair(rng, 2 + t % 3)
        formula = geometry.geodesic_origin_distance(x, y)
        oracle = origin_value_from_distance(sampled_origin_distance(x, y))
        worst = max(worst, abs(formula - oracle))
    return OracleResult("lemma6", worst < tol, num_pairs, worst, time.perf_counter() - start)


# -- hard limit of the continuous relaxation --------------------------------------

# ((0, 1), (2, (3, (4, 5)))); every edge joins the two outermost leaves of its LCA's subtree
HARD_LIMIT_TREE = ((0, 1), (2, (3, (4, 5))))
HARD_LIMIT_EDGES = ((0, 1, 1.0), (4, 5, 0.7), (3, 5, 0.9), (2, 5, 0.6), (0, 5, 0.8))
HARD_LIMIT_ANGLES = (0.0, 12.0, 70.0, 100.0, 118.0, 124.0)


def hard_limit_instance(radius: float = 0.9):
    """A 6-vertex graph, a binary tree and 2-D Poincare points realizing that tree.

    The leaves sit on a circle in the tree's leaf order with gaps that shrink
    with depth. For equal norms the LCA depth grows as the angle between two
    points shrinks, so for every edge the vertices strictly between its
    endpoints (exactly the descendants of the edge's LCA) have strictly
    larger depths to both endpoints, and every other vertex has a strictly
    smaller depth to one endpoint.
    """
    G = WeightedGraph.from_edges(6, HARD_LIMIT_EDGES)
    T = PartitionTree.from_nested(HARD_LIMIT_TREE)
    angles = np.deg2rad(HARD_LIMIT_ANGLES)
    points = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return G, T, points


def check_hard_limit(temperatures=(10.0, 1.0, 0.1, 1e-3), tol: float = 1e-3) -> OracleResult:
    """The relaxed loss approaches the discrete edge cost as ``t1`` shrinks."""
    start = time.perf_counter()
    G, T, points = hard_limit_instance()
    Z = EmbeddingSet.from_poincare(torch.as_tensor(points), torch.as_tensor(G.degrees))
    target = se_cost(G, T)
    gaps = [abs(float(cse_loss(G, Z, CseConfig(t1=t))) - target) for t in temperatures]
    monotone = all(a > b for a, b in zip(gaps, gaps[1:]))
    details = {"gaps": "[" + ", ".join(f"{g:.3e}" for g in gaps) + "]", "monotone": monotone}
    return OracleResult("hard_limit", monotone and gaps[-1] < tol, len(temperatures), gaps[-1],
                        time.perf_counter() - start, details)


# -- gradients through the encoder --------------------------------------------------


def gradcheck_instance(seed: int, n: int = 6, features: int = 8):
    """Random connected graph with O(1) weights and Gaussian features.

    Eight features make an all-zero masked feature row (a kink of the first
    leaky activation) practically impossible.
    """
    rng = np.random.default_rng(seed)
    return random_graph(n, rng), torch.as_tensor(rng.normal(size=(n, features)))


def relative_error(a: float, b: float, floor: float = 1e-10) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


class KinkRecorder:
    """Records the sign pattern of every piecewise-linear preactivation during forward passes.

    Two evaluations with different patterns lie on different linear pieces,
    so a central difference spanning them does not estimate a derivative.
    """

    def __init__(self, model):
        from .model.layers import LorentzLinear
        from .model.learner import GraphLearner, normalized_adjacency

        self.signs: list[torch.Tensor] = []
        self.handles = []

        def linear_hook(module, inputs, output):
            if module.activation != "none":
                self.signs.append((inputs[0] @ module.weight.T > 0).flatten())

        def learner_hook(module, inputs, output):
            if not module.activation:
                return
            h = inputs[0]
            if module.variant == "gcn":
                h = normalized_adjacency(h.shape[0], *inputs[1:4], h.dtype) @ h
            self.signs.append((h @ module.w1 + module.b1 > 0).flatten())

        for m in model.modules():
            if isinstance(m, LorentzLinear):
                self.handles.append(m.register_forward_hook(linear_hook))
            elif isinstance(m, GraphLearner):
                self.handles.append(m.register_forward_hook(learner_hook))

    def take(self) -> torch.Tensor:
        out = torch.cat(self.signs) if self.signs else torch.zeros(0, dtype=torch.bool)
        self.signs = []
        return out

    def close(self) -> None:
        for h in self.handles:
            h.remove()


def _projected_error(model, params, evaluate, grads, directions, h, dir_rng):
    """Relative error of the gradient projected onto random unit directions, or ``None`` at a kink."""
    values, center = evaluate()
    analytic = {name: [] for name in grads}
    numeric = {name: [] for name in grads}
    for _ in range(directions):
        u = [torch.randn(p.shape, generator=dir_rng, dtype=p.dtype) for p in params]
        norm = math.sqrt(sum(float((x * x).sum()) for x in u))
        u = [x / norm for x in u]
        with torch.no_grad():
            for p, x in zip(params, u):
                p.add_(h * x)
            plus, plus_state = evaluate()
            for p, x in zip(params, u):
                p.sub_(2 * h * x)
            minus, minus_state = evaluate()
            for p, x in zip(params, u):
                p.add_(h * x)
        for state in (plus_state, minus_state):
            if not (torch.equal(state[0], center[0]) and state[1] == center[1]):
                return None
        for name, g in grads.items():
            analytic[name].append(sum(float((gi * x).sum()) for gi, x in zip(g, u)))
            numeric[name].append((float(plus[name]) - float(minus[name])) / (2 * h))
    out = {}
    for name in grads:
        a, n = np.array(analytic[name]), np.array(numeric[name])
        out[name] = float(np.linalg.norm(a - n) / max(np.linalg.norm(a), np.linalg.norm(n), 1e-10))
    return out


def check_gradients(draws: int = 50, directions: int = 4, h: float = 1e-5, tol: float = 1e-3,
                    t1: float = 1.0, seed: int = 4) -> OracleResult:
    """Autograd against central differences for the three loss terms, through every parameter.

    Each draw re-initializes the model and graph from a new seed and
    compares the gradient projected onto ``directions`` random unit
    directions of the full parameter space. Augmentation masks are fixed per
    evaluation so the contrastive term is a deterministic function of the
    parameters. A draw whose stencil crosses a kink (an activation changes
    sign or the learner's top-p edge set changes) has no derivative to
    compare against; it is replaced by the next seed and counted.
    """
    from .pipeline.config import RunConfig
    from .pipeline.train import HypCSE, compute_losses

    start = time.perf_counter()
    worst = {"cse": 0.0, "con": 0.0, "cen": 0.0}
    valid = skipped = 0
    d = 0
    while valid < draws:
        if skipped > draws:
            raise RuntimeError("too many draws sit on a kink; reduce h")
        G, X = gradcheck_instance(seed * 1000 + d)
        cfg = RunConfig(t1=t1, p=3, seed=d)
        cse_cfg = CseConfig(cfg.t1, cfg.r1, cfg.t2, cfg.r2, cfg.eta1, cfg.eta2)
        model = HypCSE(X.shape[1], cfg, torch.Generator().manual_seed(seed * 1000 + d)).double()
        params = list(model.parameters())
        recorder = KinkRecorder(model)
        rng_seed = d

        def evaluate():
            losses = compute_losses(model, X, G, cfg, cse_cfg, np.random.default_rng(rng_seed))
            edges = (losses.learner.rows.tobytes(), losses.learner.cols.tobytes())
            return {"cse": losses.cse, "con": losses.con, "cen": losses.cen}, (recorder.take(), edges)

        values, _ = evaluate()
        grads = {}
        for name, value in values.items():
            g = torch.autograd.grad(value, params, retain_graph=True, allow_unused=True)
            grads[name] = [torch.zeros_like(p) if x is None else x for p, x in zip(params, g)]
        errors = _projected_error(model, params, evaluate, grads, directions, h,
                                  torch.Generator().manual_seed(d))
        recorder.close()
        d += 1
        if errors is None:
            skipped += 1
            continue
        valid += 1
        for name, err in errors.items():
            worst[name] = max(worst[name], err)
    top = max(worst.values())
    details = {k: f"{v:.2e}" for k, v in worst.items()}
    details["kink_skips"] = skipped
    return OracleResult("gradcheck", top < tol, draws, top, time.perf_counter() - start, details)


# keys are the public ``hypcse oracle --check`` names
CHECKS = {
    "theorem4": check_entropy_forms,
    "lemma2": check_binary_minimum,
    "lemma3": check_conductance_bound_suite,
    "lemma6": check_origin_depth,
    "hard_limit": check_hard_limit,
    "gradcheck": check_gradients,
}


def run_check(name: str) -> OracleResult:
    if name not in CHECKS:
        raise KeyError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}")
    return CHECKS[name]()
