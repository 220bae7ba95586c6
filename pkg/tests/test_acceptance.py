"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they
print. The statistical analogs use the default synthetic benchmark
(4 classes, 2000 train-pool samples, 5 seeds).
"""

import math
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from ceal import data, engine, harness, model, selection, service
from ceal.data import SplitSpec
from ceal.engine import CealConfig, SimulatedOracle
from ceal.harness import ExperimentSpec
from ceal.model import TrainConfig
from ceal.selection import CriterionKind


def emit(name, ok, detail=""):
    line = f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {name}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


# -- shared benchmark runs ------------------------------------------------------


@pytest.fixture(scope="module")
def benchmark():
    spec = ExperimentSpec()  # the default synthetic benchmark
    start = time.time()
    result = harness.run_experiment(spec)
    elapsed = time.time() - start
    return {"spec": spec, "result": result, "elapsed": elapsed}


# -- 1. gradient correctness -----------------------------------------------------


def numeric_gradient(params, x, y, eps=1e-5):
    grads = []
    for li in range(len(params.layers)):
        shapes = [params.layers[li][0].shape, params.layers[li][1].shape]
        pair = []
        for slot, shape in enumerate(shapes):
            num = np.zeros(shape)
            for idx in np.ndindex(*shape):
                plus = params.copy()
                plus.layers[li][slot][idx] += eps
                minus = params.copy()
                minus.layers[li][slot][idx] -= eps
                num[idx] = (model.loss(plus, x, y) - model.loss(minus, x, y)) / (2 * eps)
            pair.append(num)
        grads.append(tuple(pair))
    return grads


def test_gradient_correctness():
    rng = np.random.default_rng(101)
    start = time.time()
    worst = 0.0
    for trial in range(20):
        d = int(rng.integers(2, 6))
        m = int(rng.integers(2, 6))
        hidden = None if trial % 2 == 0 else int(rng.integers(2, 6))
        params = model.init_params(d, m, hidden_size=hidden, seed=int(rng.integers(1 << 30)))
        n = int(rng.integers(1, 6))
        x = rng.normal(size=(n, d))
        y = rng.integers(0, m, size=n)
        analytic = model.gradient(params, x, y)
        numeric = numeric_gradient(params, x, y)
        for (aw, ab), (nw, nb) in zip(analytic, numeric):
            for a, v in ((aw, nw), (ab, nb)):
                rel = np.abs(a - v) / np.maximum(np.abs(a) + np.abs(v), 1e-8)
                worst = max(worst, float(rel.max()))
    elapsed = time.time() - start
    emit(
        "gradient matches central finite differences",
        worst <= 1e-4 and elapsed < 5.0,
        f"max rel err {worst:.2e}, {elapsed:.2f}s",
    )


# -- 2. probability simplex -------------------------------------------------------


def test_probability_simplex_invariant():
    rng = np.random.default_rng(102)
    worst_sum = 0.0
    ok = True
    for trial in range(1000):
        d = int(rng.integers(2, 10))
        m = int(rng.integers(2, 10))
        hidden = None if trial % 3 else int(rng.integers(2, 8))
        params = model.init_params(d, m, hidden_size=hidden, seed=trial)
        # stretch some weights so logits are far from uniform
        params.layers[-1][0][:] *= rng.uniform(0.1, 50.0)
        probs = model.forward_probs(params, rng.uniform(-100, 100, size=d))
        ok = ok and probs.min() >= 0.0
        worst_sum = max(worst_sum, abs(float(probs.sum()) - 1.0))
    emit(
        "forward probabilities stay on the simplex",
        ok and worst_sum < 1e-9,
        f"1000 outputs, worst |sum-1| {worst_sum:.1e}",
    )


# -- 3. criterion closed forms + binary equivalence -------------------------------


def test_criterion_closed_forms_and_binary_equivalence():
    closed = (
        abs(selection.score_en(np.full(4, 0.25)) - math.log(4)) <= 1e-12
        and selection.score_ms(np.array([0.5, 0.5])) == 0.0
        and selection.score_lc(np.array([0.0, 1.0, 0.0])) == 1.0
    )
    rng = np.random.default_rng(103)
    p = rng.uniform(0.001, 0.999, size=200)
    pool = {i: np.array([v, 1 - v]) for i, v in enumerate(p)}
    lc = selection.select_informative(pool, CriterionKind.LC, 200)
    ms = selection.select_informative(pool, CriterionKind.MS, 200)
    en = selection.select_informative(pool, CriterionKind.EN, 200)
    emit(
        "criterion closed forms and binary ranking equivalence",
        closed and lc == ms == en,
        "200 random binary vectors",
    )


# -- 4. selection oracle equivalence ----------------------------------------------


def brute_rank(pool, criterion):
    def key(item):
        i, p = item
        if criterion == CriterionKind.LC:
            return (max(p), i)
        if criterion == CriterionKind.MS:
            top = sorted(p, reverse=True)
            return (top[0] - top[1], i)
        return (-selection.score_en(p), i)

    return [i for i, _ in sorted(pool.items(), key=key)]


def test_selection_matches_brute_force():
    rng = np.random.default_rng(104)
    ok = True
    for trial in range(50):
        n = int(rng.integers(2, 201))
        m = int(rng.integers(2, 6))
        raw = rng.uniform(0.01, 1.0, size=(n, m))
        probs = raw / raw.sum(axis=1, keepdims=True)
        # sharpen a third of the pool so thresholds separate
        for i in range(0, n, 3):
            v = np.full(m, 0.02 / (m - 1))
            v[i % m] = 0.98
            probs[i] = v / v.sum()
        pool = {i: probs[i] for i in range(n)}
        k = int(rng.integers(1, n + 1))
        for criterion in (CriterionKind.LC, CriterionKind.MS, CriterionKind.EN):
            ok = ok and selection.select_informative(pool, criterion, k) == brute_rank(
                pool, criterion
            )[:k]
        delta = float(rng.uniform(0.05, 0.7))
        picked = selection.select_high_confidence(pool, delta)
        expected = [
            (i, int(np.argmax(pool[i])))
            for i in sorted(pool)
            if selection.score_en(pool[i]) < delta
        ]
        ok = ok and [(q.sample_id, q.label) for q in picked] == expected
        if n >= 2:
            k_even = max(2, (k // 2) * 2)
            union = set()
            for criterion in (CriterionKind.LC, CriterionKind.MS, CriterionKind.EN):
                union.update(brute_rank(pool, criterion)[: k_even // 2])
            fused = selection.fuse_select(pool, k_even, seed=trial)
            if k_even >= n:
                ok = ok and fused == sorted(pool)
            else:
                ok = ok and set(fused) <= union
                ok = ok and len(fused) == min(k_even, len(union))
    emit("selection matches brute-force references", ok, "50 random pools")


# -- 5. threshold schedule ---------------------------------------------------------


def test_threshold_schedule_exact(benchmark):
    spec = benchmark["spec"]
    assert spec.ceal.delta0 == 0.05 and spec.ceal.decay_rate == 0.0033
    trace = benchmark["result"].traces[("CEAL_EN", 0)]
    deltas = [r.delta for r in trace]
    exact = all(
        d == max(0.0, spec.ceal.delta0 - spec.ceal.decay_rate * k)
        for k, d in enumerate(deltas)
    )
    emit(
        "threshold series starts at delta0 and decays linearly",
        deltas[0] == spec.ceal.delta0
        and all(a >= b for a, b in zip(deltas, deltas[1:]))
        and exact,
        f"{len(deltas)} steps",
    )


# -- 6. pool conservation and transience ---------------------------------------------


def test_pool_conservation_and_transience():
    ds = data.synth_gaussian_mixture(4, 625, 16, 3.0, seed=7)
    train_pool, _ = data.split(ds, SplitSpec(seed=0))
    cfg = CealConfig(seed=0, train=TrainConfig(seed=0))
    oracle = SimulatedOracle(train_pool)
    state, params = engine.initialize(train_pool, 0.1, cfg, oracle)
    total = len(train_pool)
    ok = len(state.unlabeled) + len(state.labeled) == total
    labeled_sizes = [len(state.labeled)]
    i = 1
    while state.unlabeled:
        state, params, _ = engine.run_iteration(train_pool, state, params, cfg, oracle, i)
        state.check(total)
        ok = ok and len(state.unlabeled) + len(state.labeled) == total
        ok = ok and not state.pseudo
        ok = ok and len(state.labeled) >= labeled_sizes[-1]
        labeled_sizes.append(len(state.labeled))
        i += 1
    emit(
        "pool is conserved and pseudo-labels are transient",
        ok and labeled_sizes[-1] == total,
        f"{i - 1} iterations checked",
    )


# -- 7. annotation-savings analog ------------------------------------------------------


def per_seed_reach(trace, target):
    points = [
        harness.CurvePoint("x", r.pct_labeled, r.test_accuracy, 0.0) for r in trace
    ]
    return harness.annotation_savings(points, target)["x"]


def test_annotation_savings_analog(benchmark):
    result = benchmark["result"]
    target = 0.95 * result.final_accuracy("AL_ALL")
    en_curve = [c for c in result.curves if c.variant == "CEAL_EN"]
    rand_curve = {c.pct_labeled: c for c in result.curves if c.variant == "AL_RAND"}
    first = next(c for c in en_curve if c.mean_accuracy >= target)
    ordering_ok = rand_curve[first.pct_labeled].mean_accuracy < first.mean_accuracy
    wins = 0
    for rep in range(benchmark["spec"].repetitions):
        en_reach = per_seed_reach(result.traces[("CEAL_EN", rep)], target)
        rand_reach = per_seed_reach(result.traces[("AL_RAND", rep)], target)
        if en_reach is not None and (rand_reach is None or en_reach <= rand_reach):
            wins += 1
    emit(
        "uncertainty + pseudo-labeling saves annotations over random",
        ordering_ok and wins >= 4 and benchmark["elapsed"] < 300,
        f"target {target:.3f}, first reach {first.pct_labeled:.2f}, "
        f"{wins}/5 seed wins, {benchmark['elapsed']:.0f}s",
    )


# -- 8. pseudo-label reliability ---------------------------------------------------------


def test_pseudo_label_reliability(benchmark):
    worst = 0.0
    ok = True
    for rep in range(benchmark["spec"].repetitions):
        trace = benchmark["result"].traces[("CEAL_EN", rep)]
        rates = [r.pseudo_error_rate for r in trace if r.iteration > 2]
        seed_mean = float(np.mean(rates))
        worst = max(worst, seed_mean)
        ok = ok and seed_mean < 0.10
    emit(
        "pseudo-labels stay reliable after early iterations",
        ok,
        f"worst per-seed mean error {worst:.3f}",
    )


# -- 9. threshold sensitivity ---------------------------------------------------------------


def test_threshold_sensitivity(benchmark):
    spec = benchmark["spec"]
    d0, dr = spec.ceal.delta0, spec.ceal.decay_rate
    cells = harness.sweep_sensitivity(
        spec, [0.5 * d0, d0, 1.5 * d0], [0.0, dr, 2.0 * dr]
    )
    finals = [c.mean_final_accuracy for c in cells]
    spread = float(np.std(finals))
    emit(
        "final accuracy is insensitive to threshold settings",
        spread < 0.03,
        f"{len(cells)} cells, std {spread:.4f}",
    )


# -- 10. full-initialization equivalence ---------------------------------------------------


def test_full_init_matches_direct_training():
    ds = data.synth_gaussian_mixture(4, 625, 16, 3.0, seed=7)
    train_pool, test = data.split(ds, SplitSpec(seed=3))
    cfg = CealConfig(seed=21, train=TrainConfig(seed=21))
    reports = engine.run(
        train_pool, cfg, SimulatedOracle(train_pool), init_fraction=1.0, test_set=test
    )
    direct = model.sgd_finetune(
        model.init_params(train_pool.dim, train_pool.class_count, seed=cfg.seed),
        train_pool.features,
        train_pool.labels,
        cfg.train,
    )
    direct_acc = model.accuracy(direct, test.features, test.labels)
    emit(
        "fully-initialized run equals direct training",
        len(reports) == 1 and reports[-1].test_accuracy == direct_acc,
        f"accuracy {direct_acc:.4f}",
    )


# -- secondary: scripted HTTP client -----------------------------------------------------


def test_secondary_scripted_client_equivalence():
    payload = {
        "dataset": {"kind": "synthetic", "class_count": 4, "per_class": 25,
                     "dim": 6, "separation": 3.0, "seed": 9},
        "ceal": {"query_size": 10, "seed": 1,
                  "train": {"learning_rate": 0.05, "epochs": 2, "batch_size": 16, "seed": 1}},
    }
    spec = harness.spec_from_dict({"dataset": payload["dataset"], "ceal": payload["ceal"]})
    dataset = harness.load_source(spec.source)
    train_pool, test_set = data.split(dataset, spec.split)

    app = service.create_app()
    try:
        with TestClient(app) as client:
            sid = client.post("/sessions", json=payload).json()["session_id"]
            batches = []
            while True:
                status = client.get(f"/sessions/{sid}/status").json()
                if status["phase"] == "finished":
                    break
                if status["phase"] != "awaiting_labels":
                    time.sleep(0.005)
                    continue
                items = client.get(f"/sessions/{sid}/batch").json()["items"]
                ids = [item["sample_id"] for item in items]
                batches.append(ids)
                client.post(
                    f"/sessions/{sid}/labels",
                    json={"labels": [
                        {"sample_id": i, "label": int(train_pool.labels[i])} for i in ids
                    ]},
                )
            history = [engine.IterationReport(**h) for h in status["history"]]
    finally:
        service.close_all_sessions(app)

    class Recording(engine.Oracle):
        def __init__(self):
            self.batches = []

        def label_batch(self, sample_ids, scores=None):
            self.batches.append(list(sample_ids))
            return [int(train_pool.labels[i]) for i in sample_ids]

    oracle = Recording()
    reports = engine.run(
        train_pool, spec.ceal, oracle,
        init_fraction=spec.split.init_fraction, test_set=test_set,
    )
    emit(
        "[secondary] scripted HTTP client replays the simulated run",
        oracle.batches[1:] == batches and history == reports,
        f"{len(batches)} query batches",
    )
