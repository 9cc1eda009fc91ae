"""Variable selection rules: product, hybrid ratio and single-variable tree size.

Every rule returns the index of one candidate and breaks ties by smaller phi,
then by lower index. Under that tie policy no rule ever picks a variable whose
dominator is also a candidate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

from .core import Variable, as_variable
from .ratio import PhiCache, compute_phi
from .trees import svb_sizes


class RuleKind(str, enum.Enum):
    PRODUCT = "product"
    RATIO = "ratio"
    SVTS = "svts"


@dataclass(frozen=True)
class ScoringParams:
    epsilon: float = 1e-6
    height_threshold: int = 10
    # svts: exact tree sizes while the DP table has at most this many cells,
    # beyond that extrapolate from anchor = anchor_fraction * cap.
    exact_size_gap_cap: int = 10**6
    anchor_fraction: float = 1.0
    # ratio rule: "min" switches to phi when every candidate's height
    # floor(G / l_i) exceeds the threshold, "max" when any does. Only "min"
    # keeps the frontier simulation sound.
    height_mode: str = "min"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.height_threshold < 1:
            raise ValueError("height_threshold must be >= 1")
        if self.exact_size_gap_cap < 1:
            raise ValueError("exact_size_gap_cap must be >= 1")
        if not 0 < self.anchor_fraction <= 1:
            raise ValueError("anchor_fraction must lie in (0, 1]")
        if self.height_mode not in ("min", "max"):
            raise ValueError("height_mode must be 'min' or 'max'")

    @property
    def anchor(self) -> int:
        return max(0, int(self.anchor_fraction * self.exact_size_gap_cap))


def product_score(v, params: ScoringParams = ScoringParams()) -> float:
    l, r = v
    return max(params.epsilon, l) * max(params.epsilon, r)


@dataclass
class SelectionRule:
    kind: RuleKind
    params: ScoringParams = field(default_factory=ScoringParams)
    phi_cache: PhiCache = field(default_factory=PhiCache)

    def __post_init__(self):
        self.kind = RuleKind(self.kind)
        self._phi: dict[tuple[int, int], float] = {}
        self._svb: dict[tuple[int, int], list[int]] = {}

    # -- per-variable quantities -------------------------------------------

    def phi(self, index: int, v: Variable) -> float:
        key = (v.l, v.r)
        value = self._phi.get(key)
        if value is None:
            value = compute_phi(v, self.phi_cache, key=index).phi
            self._phi[key] = value
        return value

    def svb(self, v: Variable, gap: int) -> int:
        """Exact single-variable tree size, grown on demand and kept per pair."""
        key = (v.l, v.r)
        table = self._svb.get(key)
        if table is None or len(table) <= gap:
            table = svb_sizes(v, max(gap, 2 * len(table) if table else gap), limit=None)
            self._svb[key] = table
        return table[gap]

    def svts_exact(self, gap: int) -> bool:
        return gap + 1 <= self.params.exact_size_gap_cap

    def svts_score(self, index: int, v: Variable, gap: int) -> float:
        """Natural log of the (possibly extrapolated) single-variable tree size."""
        if self.svts_exact(gap):
            return math.log(self.svb(v, gap))
        anchor = min(self.params.anchor, gap)
        return math.log(self.svb(v, anchor)) + (gap - anchor) * math.log(self.phi(index, v))

    def ratio_uses_phi(self, candidates, gap: int) -> bool:
        heights = [gap // v.l for _, v in candidates]
        height = min(heights) if self.params.height_mode == "min" else max(heights)
        return height > self.params.height_threshold

    def scores(self, candidates, gap: int) -> list[float]:
        """Displayed score per candidate (higher is better for product, lower otherwise)."""
        candidates = _normalise(candidates)
        if self.kind is RuleKind.PRODUCT or (
            self.kind is RuleKind.RATIO and not self.ratio_uses_phi(candidates, gap)
        ):
            return [product_score(v, self.params) for _, v in candidates]
        if self.kind is RuleKind.RATIO:
            return [self.phi(i, v) for i, v in candidates]
        return [self.svts_score(i, v, gap) for i, v in candidates]

    # -- selection -----------------------------------------------------------

    def select(self, candidates, gap: int) -> int:
        candidates = _normalise(candidates)
        if not candidates:
            raise ValueError("no candidates to select from")
        if self.kind is RuleKind.PRODUCT:
            return self._argbest(candidates, lambda i, v: -product_score(v, self.params))
        if self.kind is RuleKind.RATIO:
            if self.ratio_uses_phi(candidates, gap):
                return self._argbest(candidates, self.phi)
            return self._argbest(candidates, lambda i, v: -product_score(v, self.params))
        if self.svts_exact(gap):
            return self._argbest(candidates, lambda i, v: self.svb(v, gap))
        return self._argbest(candidates, lambda i, v: self.svts_score(i, v, gap))

    def _argbest(self, candidates, key) -> int:
        """Minimise ``key``; ties by smaller phi, then lower index."""
        best_key = None
        tied = []
        for i, v in candidates:
            k = key(i, v)
            if best_key is None or k < best_key:
                best_key, tied = k, [(i, v)]
            elif k == best_key:
                tied.append((i, v))
        if len(tied) == 1:
            return tied[0][0]
        return min(tied, key=lambda iv: (self.phi(iv[0], iv[1]), iv[0]))[0]


def _normalise(candidates) -> list[tuple[int, Variable]]:
    return [(i, as_variable(v)) for i, v in candidates]


def make_rule(kind, params: ScoringParams | None = None) -> SelectionRule:
    return SelectionRule(RuleKind(kind), params or ScoringParams())


def select(rule: SelectionRule, candidates: Sequence, gap: int) -> int:
    return rule.select(candidates, gap)
