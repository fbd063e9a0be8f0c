"""Binary sequence labeler over composite plans: a linear-chain CRF.

Each plan action gets a feature vector describing how the move looks from
the human's side of the map (distance progress on the human view, agreement
with the path the human would expect, proximity to hidden obstacles). A
trained model labels actions EXPLICABLE or INEXPLICABLE; the fraction of
explicable actions is the plan's explicability score.

Features are deliberately symbol-free: no room ids or coordinates appear,
so relabeling rooms leaves feature vectors untouched.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .errors import DegenerateCorpusWarning, EmptySequence
from .gridworld import (
    DIRECTION_ORDER,
    CompositePlan,
    Problem,
    TeamState,
    View,
    replay,
    step_cell,
)
from .paths import MapCache
from . import kernels


class Label(str, Enum):
    EXPLICABLE = "EXPLICABLE"
    INEXPLICABLE = "INEXPLICABLE"

    @property
    def index(self) -> int:
        return LABELS.index(self)


# Index order matters: ties in decoding resolve to the first entry.
LABELS: Tuple[Label, Label] = (Label.EXPLICABLE, Label.INEXPLICABLE)
N_LABELS = 2

FeatureVector = Dict[str, float]

_AGENT_HUMAN = "agent=HUMAN"


@dataclass
class JudgedSequence:
    """One training example: per-action features plus per-action labels."""

    features: List[FeatureVector]
    labels: List[Label]

    def __post_init__(self):
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels must align")
        if not self.features:
            raise ValueError("judged sequences must be nonempty")


@dataclass
class LabelerModel:
    """Trained labeler: feature index, packed weights, training metadata.

    Weight layout: state weights first (feature-major, label-minor, so
    w[f * 2 + y]), then the 2x2 label-transition block row-major.
    """

    feature_index: Dict[str, int]
    weights: np.ndarray
    l2_sigma: float
    metadata: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.feature_index)

    @property
    def state_weights(self) -> np.ndarray:
        return self.weights[: 2 * self.n_features].reshape(self.n_features, N_LABELS)

    @property
    def transitions(self) -> np.ndarray:
        return self.weights[2 * self.n_features :].reshape(N_LABELS, N_LABELS)

    def emissions(self, features: Sequence[FeatureVector]) -> np.ndarray:
        out = np.zeros((len(features), N_LABELS))
        sw = self.state_weights
        for t, vec in enumerate(features):
            for name, value in vec.items():
                idx = self.feature_index.get(name)
                if idx is not None:
                    out[t] += value * sw[idx]
        return out

    def label(self, plan: CompositePlan, problem: Problem, start_state=None, cache=None) -> List[Label]:
        return label(self, plan, problem, start_state=start_state, cache=cache)


def extract_features(
    plan: CompositePlan,
    problem: Problem,
    start_state: Optional[TeamState] = None,
    cache: Optional[MapCache] = None,
) -> List[FeatureVector]:
    """Per-action feature vectors, computed by replaying the plan.

    Robot moves are described relative to the commanded room: distance
    change on both map views, whether the move leaves the path the human
    would compute on their own map, and hidden-obstacle adjacency. Human
    commands carry agent and command-change indicators. Every vector has a
    bias term. Raises InvalidPlan when the plan does not replay.
    """
    grid_map = problem.map
    if cache is None:
        cache = MapCache(grid_map)
    state = start_state if start_state is not None else problem.initial_state()
    states_after = replay(plan, problem, start_state=state)

    segments = _segment_positions(plan)
    vectors: List[FeatureVector] = []
    before = state
    for t, action in enumerate(plan):
        after = states_after[t]
        vec: FeatureVector = {"bias": 1.0}
        if action.is_command:
            vec[_AGENT_HUMAN] = 1.0
            if before.current_command is not None:
                vec["cmd_change"] = 1.0
        else:
            vec["agent=ROBOT"] = 1.0
            vec[f"dir={action.direction.value}"] = 1.0
            room_cell = grid_map.room_cell(before.current_command)
            vec[f"hv_delta={_delta_bucket(cache, View.HUMAN, before.robot_pos, after.robot_pos, room_cell)}"] = 1.0
            vec[f"tv_delta={_delta_bucket(cache, View.TRUE, before.robot_pos, after.robot_pos, room_cell)}"] = 1.0
            expected = cache.first_step(View.HUMAN, before.robot_pos, room_cell)
            if expected is not None and action.direction != expected:
                vec["off_expected_path"] = 1.0
            if _adjacent_to_hidden(grid_map, after.robot_pos):
                vec["near_hidden"] = 1.0
        vec[f"seg={segments[t]}"] = 1.0
        vectors.append(vec)
        before = after
    return vectors


def _delta_bucket(cache: MapCache, view: View, frm, to, room_cell) -> str:
    d0 = cache.distance(view, frm, room_cell)
    d1 = cache.distance(view, to, room_cell)
    if d0 < 0 or d1 < 0:
        return "undef"
    step = d1 - d0
    if step < 0:
        return "-1"
    if step > 0:
        return "+1"
    return "0"


def _adjacent_to_hidden(grid_map, cell) -> bool:
    return any(step_cell(cell, d) in grid_map.hidden_obstacles for d in DIRECTION_ORDER)


def _segment_positions(plan: CompositePlan) -> List[str]:
    """Bucket each action's position within its command segment into thirds."""
    seg_ids: List[int] = []
    seg = 0
    for i, action in enumerate(plan):
        if action.is_command and i > 0:
            seg += 1
        seg_ids.append(seg)
    lengths: Dict[int, int] = {}
    for s in seg_ids:
        lengths[s] = lengths.get(s, 0) + 1
    buckets: List[str] = []
    offset: Dict[int, int] = {}
    for s in seg_ids:
        i = offset.get(s, 0)
        offset[s] = i + 1
        n = lengths[s]
        frac = 0.0 if n == 1 else i / (n - 1)
        buckets.append("first" if frac < 1 / 3 else ("mid" if frac < 2 / 3 else "last"))
    return buckets


def explicability_score(labels: Sequence[Label]) -> float:
    """Fraction of actions labeled EXPLICABLE. Errors on empty input."""
    if len(labels) == 0:
        raise EmptySequence("cannot score an empty label sequence")
    return sum(1 for l in labels if l is Label.EXPLICABLE) / len(labels)


def decode(model: LabelerModel, features: Sequence[FeatureVector]) -> List[Label]:
    """Viterbi decode, then force human actions to EXPLICABLE."""
    if not features:
        return []
    emissions = model.emissions(features)
    path = kernels.viterbi(emissions, model.transitions)
    out = [LABELS[int(k)] for k in path]
    for t, vec in enumerate(features):
        if _AGENT_HUMAN in vec:
            out[t] = Label.EXPLICABLE
    return out


def label(
    model: LabelerModel,
    plan: CompositePlan,
    problem: Problem,
    start_state: Optional[TeamState] = None,
    cache: Optional[MapCache] = None,
) -> List[Label]:
    return decode(model, extract_features(plan, problem, start_state=start_state, cache=cache))


# ---------------------------------------------------------------------------
# Training

def _pack_sequence(feature_index: Dict[str, int], seq: JudgedSequence):
    ids, vals = [], []
    for vec in seq.features:
        pos_ids, pos_vals = [], []
        for name, value in vec.items():
            idx = feature_index.get(name)
            if idx is not None:
                pos_ids.append(idx)
                pos_vals.append(value)
        ids.append(np.asarray(pos_ids, dtype=np.int64))
        vals.append(np.asarray(pos_vals, dtype=np.float64))
    y = np.asarray([l.index for l in seq.labels], dtype=np.int64)
    return ids, vals, y


def _emissions_packed(weights: np.ndarray, n_features: int, ids, vals) -> np.ndarray:
    sw = weights[: 2 * n_features].reshape(n_features, N_LABELS)
    out = np.zeros((len(ids), N_LABELS))
    for t in range(len(ids)):
        if len(ids[t]):
            out[t] = vals[t] @ sw[ids[t]]
    return out


def _sequence_ll_and_grad(weights, n_features, packed, grad):
    """Adds one sequence's gradient contribution in place; returns its log-lik."""
    ids, vals, y = packed
    trans = weights[2 * n_features :].reshape(N_LABELS, N_LABELS)
    emissions = _emissions_packed(weights, n_features, ids, vals)
    logz, node, edge = kernels.crf_marginals(emissions, trans)
    T = len(y)
    score = emissions[np.arange(T), y].sum()
    if T > 1:
        score += trans[y[:-1], y[1:]].sum()
    sw_grad = grad[: 2 * n_features].reshape(n_features, N_LABELS)
    for t in range(T):
        if len(ids[t]):
            sw_grad[ids[t], y[t]] += vals[t]
            sw_grad[ids[t]] -= vals[t][:, None] * node[t]
    t_grad = grad[2 * n_features :].reshape(N_LABELS, N_LABELS)
    for t in range(T - 1):
        t_grad[y[t], y[t + 1]] += 1.0
    if T > 1:
        t_grad -= edge.sum(axis=0)
    return float(score - logz)


def _corpus_objective(weights, n_features, packed_corpus, sigma):
    """Regularized log-likelihood and its gradient over the whole corpus."""
    grad = np.zeros_like(weights)
    total = 0.0
    for packed in packed_corpus:
        total += _sequence_ll_and_grad(weights, n_features, packed, grad)
    total -= float(weights @ weights) / (2.0 * sigma**2)
    grad -= weights / sigma**2
    return total, grad


def train(
    corpus: Sequence[JudgedSequence],
    l2_sigma: float = 10.0,
    max_iter: int = 200,
    tol: float = 1e-5,
) -> LabelerModel:
    """Fit the labeler by maximizing the L2-regularized conditional likelihood.

    Optimization is quasi-Newton (L-BFGS-B) on the packed weight vector,
    stopping at the gradient tolerance or the iteration cap. Warns (and
    records in metadata) when a label never occurs in the corpus.
    """
    if not corpus:
        raise ValueError("training corpus is empty")
    names = sorted({name for seq in corpus for vec in seq.features for name in vec})
    feature_index = {name: i for i, name in enumerate(names)}
    n_features = len(names)

    counts = {lab: 0 for lab in LABELS}
    for seq in corpus:
        for lab in seq.labels:
            counts[lab] += 1
    notes = []
    for lab, n in counts.items():
        if n == 0:
            msg = f"label {lab.value} never occurs in the training corpus"
            warnings.warn(msg, DegenerateCorpusWarning)
            notes.append(msg)

    packed_corpus = [_pack_sequence(feature_index, seq) for seq in corpus]

    def neg(weights):
        value, grad = _corpus_objective(weights, n_features, packed_corpus, l2_sigma)
        return -value, -grad

    x0 = np.zeros(2 * n_features + N_LABELS * N_LABELS)
    result = optimize.minimize(
        neg,
        x0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": tol, "ftol": 0.0},
    )
    metadata = {
        "final_objective": float(-result.fun),
        "iterations": int(result.nit),
        "converged": bool(result.success),
        "n_sequences": len(corpus),
        "n_positions": int(sum(len(seq.labels) for seq in corpus)),
        "label_counts": {lab.value: counts[lab] for lab in LABELS},
        "warnings": notes,
    }
    return LabelerModel(
        feature_index=feature_index,
        weights=np.asarray(result.x, dtype=np.float64),
        l2_sigma=float(l2_sigma),
        metadata=metadata,
    )


def sequence_log_likelihood(model: LabelerModel, seq: JudgedSequence) -> float:
    """Exact log p(labels | features) for one sequence."""
    packed = _pack_sequence(model.feature_index, seq)
    ids, vals, y = packed
    emissions = _emissions_packed(model.weights, model.n_features, ids, vals)
    logz = kernels.crf_logz(emissions, model.transitions)
    T = len(y)
    score = emissions[np.arange(T), y].sum()
    if T > 1:
        score += model.transitions[y[:-1], y[1:]].sum()
    return float(score - logz)


def gradient(model: LabelerModel, corpus: Sequence[JudgedSequence]) -> np.ndarray:
    """Gradient of the regularized corpus log-likelihood at the model's weights."""
    packed_corpus = [_pack_sequence(model.feature_index, seq) for seq in corpus]
    _, grad = _corpus_objective(model.weights, model.n_features, packed_corpus, model.l2_sigma)
    return grad
