"""End-to-end training: anchor graph, encoder, structure learning, per-epoch decoding and model selection."""

from __future__ import annotations

import copy
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import torch
from scipy.cluster.hierarchy import linkage
from torch import nn

from .. import manifold
from ..cse import CseConfig, EmbeddingSet, centroid_loss, cse_loss, leaves_at_radius, total_loss
from ..decode import decode_tree_fast, decode_tree_naive
from ..entropy import dendrogram_purity, dendrogram_scores
from ..graph import WeightedGraph, build_knn_graph, standardize, subgraph_sample
from ..gsl import (AnchorState, LearnerGraph, build_learner_graph, contrastive_loss, drop_edges,
                   mask_features, update_anchor)
from ..model import Encoder, GraphLearner, ParamGroup, Projector, RiemannianAdam, backward
from ..model.optim import NonFiniteGradientError
from ..trees import Dendrogram
from .config import RunConfig
from .data import load_dataset


class NumericError(FloatingPointError):
    pass


@dataclass
class EpochReport:
    epoch: int
    cse: float
    con: float
    cen: float
    total: float
    se: float
    dp: float
    dasgupta: float


@dataclass
class RunReport:
    config: RunConfig
    epochs: list[EpochReport]
    best_epoch: int
    metrics: dict
    tree: Dendrogram
    embedding: np.ndarray
    lorentz: np.ndarray
    graph0: WeightedGraph
    labels: np.ndarray | None
    best_anchor: WeightedGraph
    best_params: dict = field(repr=False, default_factory=dict)
    wall_clock: float = 0.0


class HypCSE(nn.Module):
    """Encoder, projector and graph learner sharing one initialization stream."""

    def __init__(self, in_features: int, cfg: RunConfig, generator: torch.Generator):
        super().__init__()
        self.encoder = Encoder(in_features, cfg.hidden, cfg.embed, cfg.layers, generator)
        self.projector = Projector(cfg.embed, cfg.hidden, generator)
        self.learner = GraphLearner(in_features, cfg.learner_hidden, cfg.learner_hidden, cfg.learner,
                                    generator=generator)
        self.metric = "cosine" if cfg.learner == "gcn" else "gaussian"

    def encode(self, features: torch.Tensor, graph: WeightedGraph, weights=None) -> torch.Tensor:
        w = torch.as_tensor(graph.weights) if weights is None else weights
        return self.encoder(features, graph.rows, graph.cols, w)

    def learner_graph(self, features: torch.Tensor, anchor: WeightedGraph, p: int) -> LearnerGraph:
        E = self.learner(features, anchor.rows, anchor.cols, torch.as_tensor(anchor.weights))
        return build_learner_graph(E, p, self.metric)


def make_optimizer(model: HypCSE, cfg: RunConfig) -> RiemannianAdam:
    """Every trainable tensor of the model is a Euclidean matrix or vector.

    Hyperboloid-valued parameters would form a second group stepped with
    ``cfg.lr_riemannian``; the layers keep their outputs on the manifold by
    construction, so the default model has none.
    """
    named = list(model.named_parameters())
    return RiemannianAdam([ParamGroup([n for n, _ in named], [p for _, p in named], cfg.lr_euclidean)])


@dataclass
class Losses:
    cse: torch.Tensor
    con: torch.Tensor
    cen: torch.Tensor
    total: torch.Tensor
    lorentz: torch.Tensor
    learner: LearnerGraph


def compute_losses(model: HypCSE, features: torch.Tensor, anchor: WeightedGraph, cfg: RunConfig,
                   cse_cfg: CseConfig, rng: np.random.Generator) -> Losses:
    """Clean anchor view for the entropy and centroid terms; two augmented views for the contrastive term."""
    learner = model.learner_graph(features, anchor, cfg.p)
    Z = model.encode(features, anchor)
    volumes = torch.as_tensor(anchor.degrees)
    leaves = leaves_at_radius(Z, cfg.cse_radius) if cfg.cse_radius > 0 else Z
    cse = cse_loss(anchor, EmbeddingSet(leaves, volumes), cse_cfg)
    cen = centroid_loss(Z)
    if cse_cfg.eta1 > 0:
        keep_a = drop_edges(anchor.num_edges, cfg.edge_drop, rng)
        view_a = anchor.with_edges(anchor.rows[keep_a], anchor.cols[keep_a], anchor.weights[keep_a])
        Za = model.encode(mask_features(features, cfg.feature_mask, rng), view_a)
        keep_l = drop_edges(learner.rows.size, cfg.edge_drop, rng)
        view_l = WeightedGraph(anchor.n, learner.rows[keep_l], learner.cols[keep_l],
                               np.ones(int(keep_l.sum())))
        Zl = model.encode(mask_features(features, cfg.feature_mask, rng), view_l,
                          learner.weights[torch.as_tensor(keep_l)])
        con = contrastive_loss(model.projector(Za), model.projector(Zl), cse_cfg.t2, cse_cfg.r2)
    else:
        con = Z.new_zeros(())
    return Losses(cse, con, cen, total_loss(cse, con, cen, cse_cfg), Z, learner)


def decode(cfg: RunConfig, poincare: np.ndarray) -> Dendrogram:
    if cfg.decode == "fast":
        return decode_tree_fast(poincare, cfg.decode_k, cfg.rho_max)
    return decode_tree_naive(poincare, cfg.rho_max)


def evaluate(tree: Dendrogram, G0: WeightedGraph, labels=None) -> dict:
    """DP against ``labels`` plus SE and Dasgupta cost on the frozen graph ``G0``."""
    se, dasgupta = dendrogram_scores(G0, tree)
    dp = float("nan") if labels is None else dendrogram_purity(tree, labels)
    return {"dp": float(dp), "se": float(se), "dasgupta": float(dasgupta)}


def single_linkage_reference(X: np.ndarray, G0: WeightedGraph, labels=None) -> tuple[Dendrogram, dict]:
    """Euclidean single linkage on standardized features, scored on ``G0``."""
    L = linkage(standardize(np.asarray(X, dtype=float)), method="single")
    tree = Dendrogram(X.shape[0], L[:, :2].astype(np.int64))
    return tree, evaluate(tree, G0, labels)


def _rngs(seed: int):
    init, aug, anchor, sample = np.random.SeedSequence(seed).spawn(4)
    gen = torch.Generator().manual_seed(int(init.generate_state(1)[0]))
    return gen, np.random.default_rng(aug), np.random.default_rng(anchor), np.random.default_rng(sample)


def _union_learner(n: int, parts: list[tuple[np.ndarray, WeightedGraph]]) -> WeightedGraph:
    """Map subgraph learner edges to parent ids; a repeated edge keeps its first weight."""
    rows, cols, weights = [], [], []
    for ids, g in parts:
        a, b = ids[g.rows], ids[g.cols]
        rows.append(np.minimum(a, b))
        cols.append(np.maximum(a, b))
        weights.append(g.weights)
    rows, cols, weights = np.concatenate(rows), np.concatenate(cols), np.concatenate(weights)
    keys, first = np.unique(rows * n + cols, return_index=True)
    return WeightedGraph(n, keys // n, keys % n, weights[first])


def run_training(cfg: RunConfig, X=None, labels=None, log=None) -> RunReport:
    """Train for ``cfg.epochs`` epochs and return the lowest-SE epoch's tree.

    Row ``e`` of the report holds the losses and metrics of the parameters
    after ``e`` optimizer passes; the losses of row ``e`` drive pass ``e + 1``.
    """
    start = time.perf_counter()
    if X is None:
        X, labels = load_dataset(cfg.dataset, cfg.label_column)
    X = np.asarray(X, dtype=float)
    G0 = build_knn_graph(X, cfg.k, cfg.sigma)
    if not G0.is_connected():
        warnings.warn("anchor graph is disconnected")
    features = torch.as_tensor(standardize(X))
    gen, aug_rng, anchor_rng, sample_rng = _rngs(cfg.seed)
    model = HypCSE(X.shape[1], cfg, gen).double()
    opt = make_optimizer(model, cfg)
    cse_cfg = CseConfig(cfg.t1, cfg.r1, cfg.t2, cfg.r2, cfg.eta1, cfg.eta2)
    state = AnchorState(G0, None, cfg.tau, cfg.p)
    params = {f"{n}": p for n, p in model.named_parameters()}
    use_subgraphs = G0.n > cfg.subgraph_threshold

    history: list[EpochReport] = []
    best = None
    for epoch in range(cfg.epochs + 1):
        losses = compute_losses(model, features, state.anchor, cfg, cse_cfg, aug_rng)
        values = [float(v.detach()) for v in (losses.cse, losses.con, losses.cen, losses.total)]
        if not all(math.isfinite(v) for v in values):
            raise NumericError(f"non-finite loss at epoch {epoch}")
        poincare = manifold.to_poincare(losses.lorentz.detach()).numpy()
        tree = decode(cfg, poincare)
        metrics = evaluate(tree, G0, labels)
        row = EpochReport(epoch, *values, metrics["se"], metrics["dp"], metrics["dasgupta"])
        history.append(row)
        if log is not None:
            log(row)
        if best is None or row.se < best[0].se:
            best = (row, tree, poincare, losses.lorentz.detach().numpy().copy(),
                    copy.deepcopy(model.state_dict()), state.anchor)
        if epoch == cfg.epochs:
            break
        if use_subgraphs:
            parts = []
            for sub in subgraph_sample(state.anchor, cfg.n_prime, cfg.n_seed, sample_rng):
                sub_losses = compute_losses(model, features[torch.as_tensor(sub.ids)], sub, cfg,
                                            cse_cfg, aug_rng)
                _step(opt, sub_losses.total, params, epoch)
                parts.append((sub.ids, sub_losses.learner.detached()))
            learner = _union_learner(G0.n, parts)
        else:
            _step(opt, losses.total, params, epoch)
            learner = losses.learner.detached()
        state = update_anchor(AnchorState(state.anchor, learner, cfg.tau, cfg.p), anchor_rng)

    row, tree, poincare, lorentz, params_best, anchor_best = best
    metrics = {"dp": row.dp, "se": row.se, "dasgupta": row.dasgupta}
    return RunReport(cfg, history, row.epoch, metrics, tree, poincare, lorentz, G0,
                     None if labels is None else np.asarray(labels), anchor_best, params_best,
                     time.perf_counter() - start)


def _step(opt: RiemannianAdam, loss: torch.Tensor, params: dict, epoch: int) -> None:
    opt.zero_grad()
    backward(loss, params)
    try:
        opt.step()
    except NonFiniteGradientError as err:
        raise NumericError(f"epoch {epoch + 1}: {err}") from err


def reevaluate(report: RunReport) -> dict:
    """Rebuild the model from the best checkpoint and recompute the reported metrics."""
    cfg = report.config
    model = HypCSE(report.graph0.features.shape[1], cfg, torch.Generator().manual_seed(0)).double()
    model.load_state_dict(report.best_params)
    X_std = torch.as_tensor(standardize(report.graph0.features))
    with torch.no_grad():
        Z = model.encode(X_std, report.best_anchor)
    tree = decode(cfg, manifold.to_poincare(Z).numpy())
    return evaluate(tree, report.graph0, report.labels)
