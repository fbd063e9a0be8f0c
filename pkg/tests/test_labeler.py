import itertools
import math
import random

import numpy as np
import pytest
from scipy.optimize import brentq

from gridteam.errors import DegenerateCorpusWarning, EmptySequence
from gridteam.gridworld import Action, CompositePlan, Direction, GridMap, Problem
from gridteam.labeler import (
    LABELS,
    JudgedSequence,
    Label,
    LabelerModel,
    decode,
    explicability_score,
    extract_features,
    gradient,
    label,
    sequence_log_likelihood,
    train,
)

# ---------------------------------------------------------------------------
# feature extraction


def corridor_problem():
    # start (1,0); room 0 at (1,4); hidden obstacle at (1,2) forces a detour
    m = GridMap(
        width=5,
        height=3,
        visible_obstacles=frozenset(),
        hidden_obstacles=frozenset({(1, 2)}),
        rooms=((0, (1, 4)),),
        robot_start=(1, 0),
    )
    return Problem(map=m, goal=frozenset({0}))


def test_features_on_path_move():
    p = corridor_problem()
    plan = CompositePlan.of([Action.command(0), Action.move(Direction.RIGHT)])
    vecs = extract_features(plan, p)
    move = vecs[1]
    # straight right matches the human-view expectation: distance drops
    assert move["hv_delta=-1"] == 1.0
    assert "off_expected_path" not in move
    assert move["agent=ROBOT"] == 1.0
    assert move["dir=Right"] == 1.0


def test_features_on_deviating_move():
    p = corridor_problem()
    # detour around the hidden cell: Right, Up leaves the expected straight line
    plan = CompositePlan.of([Action.command(0), Action.move(Direction.RIGHT), Action.move(Direction.UP)])
    vecs = extract_features(plan, p)
    move = vecs[2]
    assert move["hv_delta=+1"] == 1.0  # human thinks the robot walked away
    assert move["off_expected_path"] == 1.0
    # true-map distance still drops on an optimal detour
    assert move["tv_delta=-1"] == 1.0


def test_features_on_human_command():
    p = corridor_problem()
    plan = CompositePlan.of([Action.command(0)])
    vec = extract_features(plan, p)[0]
    assert vec["agent=HUMAN"] == 1.0
    assert vec["bias"] == 1.0
    assert not any(k.startswith(("dir=", "hv_delta", "tv_delta", "off_")) for k in vec)


def test_features_command_change_indicator():
    m = GridMap(
        width=5,
        height=3,
        visible_obstacles=frozenset(),
        hidden_obstacles=frozenset(),
        rooms=((0, (1, 4)), (1, (2, 0))),
        robot_start=(1, 0),
    )
    p = Problem(map=m, goal=frozenset({0, 1}))
    plan = CompositePlan.of([Action.command(0), Action.move(Direction.RIGHT), Action.command(1)])
    vecs = extract_features(plan, p)
    assert "cmd_change" not in vecs[0]  # first command: nothing active yet
    assert vecs[2]["cmd_change"] == 1.0  # switched while 0 unfinished


def test_features_symbol_free():
    p = corridor_problem()
    plan = CompositePlan.of([Action.command(0), Action.move(Direction.RIGHT)])
    for vec in extract_features(plan, p):
        for name in vec:
            assert "(" not in name and "0" not in name.split("=")[0]


# ---------------------------------------------------------------------------
# explicability score

def test_score_examples():
    E, I = Label.EXPLICABLE, Label.INEXPLICABLE
    assert explicability_score([E, E, E, E]) == 1.0
    assert explicability_score([I, I]) == 0.0
    assert explicability_score([E] * 7 + [I] * 3) == 0.7


def test_score_empty_errors():
    with pytest.raises(EmptySequence):
        explicability_score([])


# ---------------------------------------------------------------------------
# scoring machinery against independent oracles

def random_model(rng, n_features):
    weights = np.asarray([rng.gauss(0, 1) for _ in range(2 * n_features + 4)])
    index = {f"f{i}": i for i in range(n_features)}
    return LabelerModel(feature_index=index, weights=weights, l2_sigma=5.0)


def random_sequence(rng, n_features, length):
    feats = []
    for _ in range(length):
        vec = {f"f{i}": rng.choice([0.0, 1.0, 0.5]) for i in range(n_features) if rng.random() < 0.7}
        vec.setdefault("f0", 1.0)
        feats.append(vec)
    labels = [rng.choice(LABELS) for _ in range(length)]
    return JudgedSequence(features=feats, labels=labels)


def brute_sequence_scores(model, seq):
    """Enumerate the unnormalized score of every label sequence directly."""
    emissions = model.emissions(seq.features)
    trans = model.transitions
    scores = {}
    for assignment in itertools.product(range(2), repeat=len(seq.features)):
        s = sum(emissions[t, y] for t, y in enumerate(assignment))
        s += sum(trans[a, b] for a, b in zip(assignment, assignment[1:]))
        scores[assignment] = s
    return scores


def test_zero_weights_uniform_log_likelihood():
    rng = random.Random(0)
    model = LabelerModel(feature_index={"f0": 0}, weights=np.zeros(6), l2_sigma=10.0)
    for n in (1, 2, 5, 9):
        seq = random_sequence(rng, 1, n)
        assert sequence_log_likelihood(model, seq) == pytest.approx(-n * math.log(2), abs=1e-12)


def test_probabilities_sum_to_one():
    rng = random.Random(1)
    for trial in range(10):
        model = random_model(rng, 3)
        seq = random_sequence(rng, 3, rng.randint(1, 8))
        scores = brute_sequence_scores(model, seq)
        logz = math.log(sum(math.exp(s) for s in scores.values()))
        total = sum(math.exp(s - logz) for s in scores.values())
        assert total == pytest.approx(1.0, abs=1e-10)
        # and the model's own log-likelihoods agree with enumeration
        y = tuple(l.index for l in seq.labels)
        assert sequence_log_likelihood(model, seq) == pytest.approx(scores[y] - logz, abs=1e-9)


def test_gradient_matches_finite_differences():
    rng = random.Random(2)
    eps = 1e-5
    for trial in range(8):
        n_features = rng.randint(1, 3)
        model = random_model(rng, n_features)
        corpus = [random_sequence(rng, n_features, rng.randint(1, 6)) for _ in range(3)]
        analytic = gradient(model, corpus)

        def objective(w):
            m = LabelerModel(model.feature_index, w, model.l2_sigma)
            ll = sum(sequence_log_likelihood(m, seq) for seq in corpus)
            return ll - float(w @ w) / (2 * model.l2_sigma**2)

        for k in range(len(model.weights)):
            w_hi = model.weights.copy()
            w_lo = model.weights.copy()
            w_hi[k] += eps
            w_lo[k] -= eps
            numeric = (objective(w_hi) - objective(w_lo)) / (2 * eps)
            denom = max(1.0, abs(numeric))
            assert abs(analytic[k] - numeric) / denom <= 1e-4


def test_viterbi_is_score_maximal():
    rng = random.Random(3)
    for trial in range(10):
        model = random_model(rng, 2)
        seq = random_sequence(rng, 2, rng.randint(1, 8))
        scores = brute_sequence_scores(model, seq)
        best = max(scores.values())
        decoded = decode(model, seq.features)
        # undo the human-override: these synthetic features carry no agent marker
        y = tuple(l.index for l in decoded)
        assert scores[y] == pytest.approx(best, abs=1e-9)


def test_decode_tie_break_prefers_explicable():
    model = LabelerModel(feature_index={"f0": 0}, weights=np.zeros(6), l2_sigma=10.0)
    feats = [{"f0": 1.0} for _ in range(5)]
    assert decode(model, feats) == [Label.EXPLICABLE] * 5


def test_decode_forces_human_actions_explicable():
    # weights that make everything INEXPLICABLE, except the override
    weights = np.zeros(6)
    weights[1] = 5.0  # f0 strongly votes INEXPLICABLE
    model = LabelerModel(feature_index={"f0": 0}, weights=weights, l2_sigma=10.0)
    feats = [{"f0": 1.0}, {"f0": 1.0, "agent=HUMAN": 1.0}, {"f0": 1.0}]
    out = decode(model, feats)
    assert out == [Label.INEXPLICABLE, Label.EXPLICABLE, Label.INEXPLICABLE]


# ---------------------------------------------------------------------------
# training

def test_train_single_observation_matches_logistic_fit():
    # one sequence, one position, one feature, labeled EXPLICABLE.
    # The optimum satisfies d = 2 sigma^2 (1 - sigmoid(d)) for the weight
    # difference d = w_E - w_I; solve that independently and compare.
    sigma = 4.0
    seq = JudgedSequence(features=[{"f0": 1.0}], labels=[Label.EXPLICABLE])
    model = train([seq], l2_sigma=sigma, max_iter=500, tol=1e-10)

    def stationarity(d):
        return d - 2 * sigma**2 * (1 - 1 / (1 + math.exp(-d)))

    d_star = brentq(stationarity, 0, 2 * sigma**2)
    idx = model.feature_index["f0"]
    w = model.state_weights
    assert w[idx, 0] - w[idx, 1] == pytest.approx(d_star, abs=1e-4)
    assert w[idx, 0] == pytest.approx(-w[idx, 1], abs=1e-4)


def test_train_learns_indicator_rule():
    # label = EXPLICABLE iff marker feature absent; near-separable data
    rng = random.Random(5)
    corpus = []
    for _ in range(120):
        length = rng.randint(2, 8)
        feats, labels = [], []
        for _ in range(length):
            bad = rng.random() < 0.3
            vec = {"bias": 1.0}
            if bad:
                vec["marker"] = 1.0
            feats.append(vec)
            labels.append(Label.INEXPLICABLE if bad else Label.EXPLICABLE)
        corpus.append(JudgedSequence(feats, labels))
    model = train(corpus, max_iter=150)
    held = [random_holdout(rng) for _ in range(40)]
    correct = total = 0
    for feats, labels in held:
        out = decode(model, feats)
        correct += sum(a is b for a, b in zip(out, labels))
        total += len(labels)
    assert correct / total >= 0.95


def random_holdout(rng):
    length = rng.randint(2, 8)
    feats, labels = [], []
    for _ in range(length):
        bad = rng.random() < 0.3
        vec = {"bias": 1.0}
        if bad:
            vec["marker"] = 1.0
        feats.append(vec)
        labels.append(Label.INEXPLICABLE if bad else Label.EXPLICABLE)
    return feats, labels


def test_train_degenerate_corpus_warns_and_predicts_majority():
    seqs = [
        JudgedSequence([{"bias": 1.0}, {"bias": 1.0}], [Label.EXPLICABLE, Label.EXPLICABLE])
        for _ in range(5)
    ]
    with pytest.warns(DegenerateCorpusWarning):
        model = train(seqs, max_iter=50)
    assert decode(model, [{"bias": 1.0}] * 4) == [Label.EXPLICABLE] * 4
    assert model.metadata["warnings"]


def test_label_plan_end_to_end():
    p = corridor_problem()
    plan = CompositePlan.of(
        [
            Action.command(0),
            Action.move(Direction.RIGHT),
            Action.move(Direction.UP),
            Action.move(Direction.RIGHT),
            Action.move(Direction.RIGHT),
            Action.move(Direction.DOWN),
            Action.move(Direction.RIGHT),
        ]
    )
    # train on the deviation rule applied to this very plan shape
    feats = extract_features(plan, p)
    labels = [
        Label.INEXPLICABLE if "off_expected_path" in vec else Label.EXPLICABLE for vec in feats
    ]
    corpus = [JudgedSequence(feats, labels)] * 30
    model = train(corpus, max_iter=100)
    out = label(model, plan, p)
    assert out == labels
    # human command stays explicable no matter what
    assert out[0] is Label.EXPLICABLE
