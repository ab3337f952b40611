"""Perceived motion artifact scores from pairwise comparisons.

Human raters judge which of two reconstructions shows worse motion
artifacts. Judgments become preference probabilities p(a>b) in
{0, 0.25, 0.5, 0.75, 1}, and a Bradley-Terry model fitted by penalised
maximum likelihood turns them into one latent severity score per item
(higher = worse artifacts). Spearman rank correlation then relates metric
values to these scores.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigurationError, InvalidInputError, UndefinedCorrelationError

OUTCOMES = ("a_worse", "b_worse", "similar")
DEFAULT_REG_WEIGHT = 1e-3
GRAD_TOL = 1e-6
MAX_ITER = 10000


@dataclass
class ComparisonRecord:
    item_a: str
    item_b: str
    outcomes: tuple  # one outcome per rater, 1 or 2 raters
    annotator: str = ""
    timestamp: str = ""

    def __post_init__(self):
        if self.item_a == self.item_b:
            raise InvalidInputError("comparison of an item with itself")
        self.outcomes = tuple(self.outcomes)
        if not 1 <= len(self.outcomes) <= 2:
            raise InvalidInputError("a record needs outcomes from 1 or 2 raters")
        for o in self.outcomes:
            if o not in OUTCOMES:
                raise InvalidInputError(f"unknown outcome {o!r}")

    @property
    def p_a_gt_b(self):
        return derive_preference(self.outcomes)

    def to_json(self):
        return json.dumps(
            {
                "a": self.item_a,
                "b": self.item_b,
                "outcomes": list(self.outcomes),
                "annotator": self.annotator,
                "timestamp": self.timestamp,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(
            item_a=doc["a"],
            item_b=doc["b"],
            outcomes=tuple(doc["outcomes"]),
            annotator=doc.get("annotator", ""),
            timestamp=doc.get("timestamp", ""),
        )


def derive_preference(outcomes):
    """Map 1- or 2-rater outcomes to p(a worse than b).

    Two raters: agreement gives 1 (or 0), one 'worse' plus one 'similar'
    gives 0.75 (or 0.25), both 'similar' or a split gives 0.5. One rater:
    1, 0 or 0.5.
    """
    outcomes = tuple(outcomes)
    if len(outcomes) == 0:
        raise InvalidInputError("need at least one rater outcome")
    if len(outcomes) > 2:
        raise InvalidInputError("at most two raters are supported")
    score = {"a_worse": 1.0, "b_worse": 0.0, "similar": 0.5}
    for o in outcomes:
        if o not in score:
            raise InvalidInputError(f"unknown outcome {o!r}")
    return float(np.mean([score[o] for o in outcomes]))


@dataclass
class PmasScores:
    beta: dict  # item id -> latent severity, mean-zero per component
    converged: bool = True
    n_components: int = 1
    items: list = field(default_factory=list)

    def ordered(self):
        """(id, beta) pairs sorted by descending severity."""
        return sorted(self.beta.items(), key=lambda kv: (-kv[1], kv[0]))

    def to_json(self):
        return json.dumps({k: float(v) for k, v in sorted(self.beta.items())}, sort_keys=True)


def _sigmoid(d):
    out = np.empty_like(d, dtype=np.float64)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    e = np.exp(d[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _components(items, pairs):
    parent = {i: i for i in items}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups = {}
    for i in items:
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _fit_component(items, pref, reg_weight):
    """Maximise sum_{i!=j} P_ij log sigmoid(b_i - b_j) - reg*||b||^2."""
    n = len(items)
    idx = {item: k for k, item in enumerate(items)}
    p = np.zeros((n, n))
    for (a, b), v in pref.items():
        if a in idx and b in idx:
            p[idx[a], idx[b]] += v

    beta = np.zeros(n)

    def gradient(b):
        # d ln sigmoid(b_k - b_j) / d b_k = sigmoid(b_j - b_k)
        d = b[:, None] - b[None, :]
        sig = _sigmoid(d)
        np.fill_diagonal(sig, 0.0)
        g = (p * (1.0 - sig)).sum(axis=1) - (p.T * sig).sum(axis=1)
        return g - 2.0 * reg_weight * b

    # The penalised log-likelihood is concave with Hessian norm bounded by
    # 0.5 * max_i sum_j (P_ij + P_ji) + 2*reg (Gershgorin), so this fixed
    # step guarantees ascent.
    row_mass = (p + p.T).sum(axis=1).max() if n > 1 else 1.0
    step = 1.0 / (0.5 * row_mass + 2.0 * reg_weight + 1e-12)
    converged = False
    for _ in range(MAX_ITER):
        g = gradient(beta)
        if np.max(np.abs(g)) < GRAD_TOL:
            converged = True
            break
        beta = beta + step * g
    beta -= beta.mean()
    return {item: float(beta[idx[item]]) for item in items}, converged


def fit_bt(records, reg_weight=DEFAULT_REG_WEIGHT) -> PmasScores:
    """Fit Bradley-Terry severities from comparison records.

    Each record contributes its preference to the ordered pair (a, b) and
    the complement to (b, a). A small L2 prior keeps deterministic outcomes
    finite; scores are shifted to mean zero. Disconnected comparison graphs
    are fitted per component with a warning.
    """
    records = list(records)
    if not records:
        raise InvalidInputError("no comparison records to fit")
    items = sorted({r.item_a for r in records} | {r.item_b for r in records})
    pref = {}
    for r in records:
        v = r.p_a_gt_b
        pref[(r.item_a, r.item_b)] = pref.get((r.item_a, r.item_b), 0.0) + v
        pref[(r.item_b, r.item_a)] = pref.get((r.item_b, r.item_a), 0.0) + (1.0 - v)

    comps = _components(items, [(r.item_a, r.item_b) for r in records])
    if len(comps) > 1:
        warnings.warn(
            f"comparison graph has {len(comps)} components; fitting each separately",
            stacklevel=2,
        )
    beta = {}
    converged = True
    for comp in comps:
        comp_beta, comp_conv = _fit_component(sorted(comp), pref, reg_weight)
        beta.update(comp_beta)
        converged &= comp_conv
    return PmasScores(beta=beta, converged=converged, n_components=len(comps), items=items)


def spearman(x, y):
    """Spearman rank correlation with averaged tied ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise InvalidInputError("spearman: inputs must be 1D of equal length")
    if x.size < 3:
        raise InvalidInputError("spearman: need at least 3 observations")
    rx = rankdata(x)
    ry = rankdata(y)
    sx = rx - rx.mean()
    sy = ry - ry.mean()
    nx, ny = np.linalg.norm(sx), np.linalg.norm(sy)
    if nx == 0 or ny == 0:
        raise UndefinedCorrelationError("zero rank variance")
    rho = float(np.dot(sx, sy) / (nx * ny))
    # identical / reversed rankings are exactly +-1; snap float residue
    for exact in (1.0, -1.0):
        if abs(rho - exact) < 1e-12:
            return exact
    return max(-1.0, min(1.0, rho))


def severity_partition(scores: PmasScores, k_mild):
    """Split items into the k_mild lowest-severity ids and the rest.

    Ties are broken by identifier order.
    """
    if k_mild > len(scores.beta):
        raise ConfigurationError("k_mild exceeds the number of scored items")
    ordered = sorted(scores.beta.items(), key=lambda kv: (kv[1], kv[0]))
    mild = {item for item, _ in ordered[:k_mild]}
    rest = {item for item, _ in ordered[k_mild:]}
    return mild, rest


def read_comparisons(path):
    """Read a JSON-lines comparison log."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(ComparisonRecord.from_json(line))
    return records
