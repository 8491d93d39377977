import math

import numpy as np
import pytest
import torch

from hypcse import manifold
from hypcse.graph import WeightedGraph
from hypcse.model import (Encoder, GraphLearner, LorentzAggregation, LorentzLinear, NonFiniteGradientError,
                          NonScalarLossError, ParamGroup, Projector, RiemannianAdam, backward,
                          load_checkpoint, save_checkpoint)
from hypcse.model.checkpoint import load_into
from hypcse.model.layers import directed_edges, lorentz_aggregate
from hypcse.oracles import random_graph


def gen(seed=0):
    return torch.Generator().manual_seed(seed)


def constraint_error(x):
    return float((manifold.linner(x, x) + 1.0).abs().max().detach())


def test_backward_trivial_gradients():
    x = torch.tensor(3.0, dtype=torch.float64, requires_grad=True)
    assert float(backward(x ** 2, {"x": x})["x"]) == pytest.approx(6.0)
    y = torch.tensor(2.0, dtype=torch.float64, requires_grad=True)
    assert float(backward(torch.log2(y), {"y": y})["y"]) == pytest.approx(1 / (2 * math.log(2)), abs=1e-12)


def test_backward_rejects_non_scalar_and_zeros_unused():
    x = torch.ones(3, dtype=torch.float64, requires_grad=True)
    unused = torch.ones(2, dtype=torch.float64, requires_grad=True)
    with pytest.raises(NonScalarLossError):
        backward(x * 2, {"x": x})
    grads = backward((x * x).sum(), {"x": x, "u": unused})
    assert torch.equal(grads["u"], torch.zeros(2, dtype=torch.float64))


def test_backward_accumulates_fan_out():
    x = torch.tensor(2.0, dtype=torch.float64, requires_grad=True)
    y = x * x
    assert float(backward(y + y * x, {"x": x})["x"]) == pytest.approx(2 * 2 + 3 * 4)


def test_lorentz_linear_trivial_values():
    layer = LorentzLinear(3, 2, generator=gen())
    with torch.no_grad():
        layer.weight.zero_()
    out = layer(manifold.lift(torch.randn(4, 2, dtype=torch.float64)))
    assert torch.allclose(out, torch.tensor([1.0, 0.0, 0.0], dtype=torch.float64).expand(4, 3))
    with torch.no_grad():
        layer.bias.copy_(torch.tensor([1.0, 0.0]))
    assert float(layer(manifold.lift(torch.zeros(1, 2, dtype=torch.float64)))[0, 0].detach()) == pytest.approx(math.sqrt(2))


def test_lorentz_linear_constraint():
    layer = LorentzLinear(6, 4, "leaky", generator=gen(1))
    with torch.no_grad():
        layer.weight.normal_(generator=gen(2))
    x = manifold.lift(torch.randn(50, 5, dtype=torch.float64, generator=gen(3)) * 3)
    assert constraint_error(layer(x)) < 1e-9


def test_aggregation_single_neighbor_and_uniform_keys():
    agg = LorentzAggregation(2, generator=gen())
    x = manifold.lift(torch.tensor([[0.3, -0.2]], dtype=torch.float64))
    src = dst = torch.tensor([0])
    assert torch.allclose(agg(x, src, dst), agg.value(x), atol=1e-12)
    with torch.no_grad():
        agg.key.weight.zero_()
        agg.key.bias.zero_()
        agg.query.weight.zero_()
    X = manifold.lift(torch.randn(4, 2, dtype=torch.float64, generator=gen(1)))
    src, dst, _ = directed_edges(4, [0, 0, 0], [1, 2, 3])
    att = agg.attention(X, src, dst)
    assert torch.allclose(att[dst == 0], torch.full((4,), 0.25, dtype=torch.float64))


def straight_line_aggregate(agg, X, edges, weights):
    n = X.shape[0]
    nbrs = {i: [(i, 1.0)] for i in range(n)}
    for (i, j), w in zip(edges, weights):
        nbrs[i].append((j, w))
        nbrs[j].append((i, w))
    q, k, v = agg.query(X), agg.key(X), agg.value(X)
    out = []
    for i in range(n):
        scores = []
        for j, w in nbrs[i]:
            inner = -q[i, 0] * k[j, 0] + (q[i, 1:] * k[j, 1:]).sum()
            d = torch.arccosh(torch.clamp(-inner, min=1.0))
            scores.append(-d * d / math.sqrt(agg.dim) + math.log(w))
        a = torch.softmax(torch.stack(scores), 0)
        s = sum(a[t] * v[j] for t, (j, _) in enumerate(nbrs[i]))
        norm = torch.sqrt(s[0] ** 2 - (s[1:] ** 2).sum())
        out.append(s / norm)
    return torch.stack(out)


def test_aggregation_matches_straight_line_reimplementation():
    agg = LorentzAggregation(3, generator=gen(4))
    X = manifold.lift(torch.randn(3, 3, dtype=torch.float64, generator=gen(5)) * 0.5)
    G = WeightedGraph.from_edges(3, [(0, 1, 0.3), (1, 2, 0.6)])
    got = lorentz_aggregate(X, G, agg, torch.as_tensor(G.weights))
    want = straight_line_aggregate(agg, X, [(0, 1), (1, 2)], [0.3, 0.6])
    assert torch.allclose(got, want, atol=1e-9)


def test_attention_sums_to_one_and_outputs_on_manifold():
    G = random_graph(12, np.random.default_rng(0))
    agg = LorentzAggregation(4, generator=gen(6))
    X = manifold.lift(torch.randn(12, 4, dtype=torch.float64, generator=gen(7)))
    src, dst, w = directed_edges(12, G.rows, G.cols, torch.as_tensor(G.weights))
    att = agg.attention(X, src, dst, w)
    sums = torch.zeros(12, dtype=torch.float64).index_add(0, dst, att)
    assert torch.allclose(sums, torch.ones(12, dtype=torch.float64), atol=1e-9)
    assert constraint_error(agg(X, src, dst, w)) < 1e-6


def encoder_setup(seed=0, n=10):
    rng = np.random.default_rng(seed)
    G = random_graph(n, rng)
    X = torch.as_tensor(rng.normal(size=(n, 5)))
    return G, X, Encoder(5, 8, 4, 3, gen(seed))


def test_encoder_shape_manifold_and_determinism():
    G, X, enc = encoder_setup()
    Z = enc(X, G.rows, G.cols, torch.as_tensor(G.weights))
    assert Z.shape == (10, 5)
    assert constraint_error(Z) < 1e-6
    assert torch.equal(Z, enc(X, G.rows, G.cols, torch.as_tensor(G.weights)))
    Z2 = Encoder(5, 8, 4, 3, gen(0))(X, G.rows, G.cols, torch.as_tensor(G.weights))
    assert torch.equal(Z, Z2)


def test_encoder_equivariance():
    G, X, enc = encoder_setup(1)
    perm = np.random.default_rng(2).permutation(G.n)
    inv = np.argsort(perm)
    H = WeightedGraph.from_edges(G.n, [(inv[i], inv[j], w) for i, j, w in G.edges()])
    Z = enc(X, G.rows, G.cols, torch.as_tensor(G.weights))
    Zp = enc(X[perm], H.rows, H.cols, torch.as_tensor(H.weights))
    assert torch.allclose(Zp, Z[perm], atol=1e-10)


def test_projector_contract():
    proj = Projector(4, 8, gen(3))
    Z = manifold.lift(torch.randn(6, 4, dtype=torch.float64, generator=gen(4)))
    P = proj(Z)
    assert P.shape == (6, 5)
    assert constraint_error(P) < 1e-6
    assert torch.equal(P, proj(Z))
    perm = torch.randperm(6, generator=gen(5))
    assert torch.allclose(proj(Z[perm]), P[perm])


def test_learner_identity_mlp_normalizes_rows():
    X = torch.randn(5, 4, dtype=torch.float64, generator=gen(0))
    learner = GraphLearner(4, 4, 4, "mlp", activation=False, identity_init=True)
    assert torch.allclose(learner(X), X / X.norm(dim=1, keepdim=True))


def test_learner_gcn_without_edges_matches_mlp():
    X = torch.randn(5, 4, dtype=torch.float64, generator=gen(1))
    gcn = GraphLearner(4, 6, 3, "gcn", generator=gen(2))
    mlp = GraphLearner(4, 6, 3, "mlp", generator=gen(2))
    empty = np.zeros(0, dtype=np.int64)
    assert torch.allclose(gcn(X, empty, empty), mlp(X))


def test_learner_gradient_matches_finite_differences():
    G = random_graph(6, np.random.default_rng(3))
    X = torch.randn(6, 4, dtype=torch.float64, generator=gen(3))
    learner = GraphLearner(4, 5, 3, "gcn", activation=False, generator=gen(4))
    target = torch.randn(6, 3, dtype=torch.float64, generator=gen(5))

    def f():
        return (learner(X, G.rows, G.cols, G.weights) * target).sum()

    grads = backward(f(), dict(learner.named_parameters()), accumulate=False)
    h = 1e-6
    for name, p in learner.named_parameters():
        fd = torch.zeros_like(p)
        with torch.no_grad():
            for idx in range(p.numel()):
                old = float(p.view(-1)[idx])
                p.view(-1)[idx] = old + h
                up = float(f())
                p.view(-1)[idx] = old - h
                down = float(f())
                p.view(-1)[idx] = old
                fd.view(-1)[idx] = (up - down) / (2 * h)
        assert float((grads[name] - fd).norm() / fd.norm().clamp_min(1e-12)) < 1e-4, name


def test_unknown_variants_raise():
    with pytest.raises(ValueError):
        GraphLearner(3, variant="sage")
    with pytest.raises(ValueError):
        LorentzLinear(3, 2, activation="tanh")


def test_optimizer_zero_gradient_leaves_parameters():
    p = torch.tensor([1.0, -2.0], dtype=torch.float64, requires_grad=True)
    opt = RiemannianAdam([ParamGroup(["p"], [p], 0.1)])
    p.grad = torch.zeros_like(p)
    opt.step()
    assert torch.equal(p.detach(), torch.tensor([1.0, -2.0], dtype=torch.float64))


def test_optimizer_converges_on_quadratic():
    p = torch.tensor([5.0, -3.0], dtype=torch.float64, requires_grad=True)
    target = torch.tensor([1.5, 0.25], dtype=torch.float64)
    opt = RiemannianAdam([ParamGroup(["p"], [p], 0.1)])
    for _ in range(500):
        opt.zero_grad()
        backward(((p - target) ** 2).sum(), {"p": p})
        opt.step()
    assert float((p.detach() - target).abs().max()) < 1e-4


def test_riemannian_group_stays_on_manifold():
    x = manifold.lift(torch.randn(8, 3, dtype=torch.float64, generator=gen(6))).requires_grad_(True)
    anchor = manifold.lift(torch.zeros(1, 3, dtype=torch.float64))
    opt = RiemannianAdam([ParamGroup(["x"], [x], 0.05, riemannian=True)])
    start = float(manifold.lorentz_distance(x.detach(), anchor).sum())
    for _ in range(100):
        opt.zero_grad()
        backward(manifold.sq_lorentz_distance(x, anchor.expand_as(x)).sum(), {"x": x})
        opt.step()
        assert constraint_error(x.detach()) < 1e-6
    assert float(manifold.lorentz_distance(x.detach(), anchor).sum()) < start


def test_optimizer_rejects_nan_gradient_by_name():
    p = torch.zeros(2, dtype=torch.float64, requires_grad=True)
    opt = RiemannianAdam([ParamGroup(["weights"], [p], 0.1)])
    p.grad = torch.tensor([float("nan"), 0.0], dtype=torch.float64)
    with pytest.raises(NonFiniteGradientError, match="weights"):
        opt.step()


def test_checkpoint_round_trip(tmp_path):
    _, _, enc = encoder_setup()
    path = tmp_path / "ck.npz"
    save_checkpoint(path, {"model": dict(enc.named_parameters())})
    loaded = load_checkpoint(path)
    fresh = Encoder(5, 8, 4, 3, gen(99))
    load_into(fresh, loaded["model"])
    for (a, p), (b, q) in zip(enc.named_parameters(), fresh.named_parameters()):
        assert a == b and torch.equal(p, q)


def test_checkpoint_rejects_foreign_files(tmp_path):
    path = tmp_path / "other.npz"
    np.savez(path, x=np.zeros(2))
    with pytest.raises(ValueError):
        load_checkpoint(path)
