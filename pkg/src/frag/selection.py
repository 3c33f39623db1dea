"""Top-K selection over scored frames and temporal-spread statistics."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from frag.media import MediaKind
from frag.scoring import ScoredFrame

VIDEO_N_SAMPLED = 256
VIDEO_K_SELECTED = 32
DOCUMENT_K_SELECTED = 2


@dataclass(frozen=True)
class SelectionConfig:
    k: int
    n_sampled: int | None = None  # None: every frame/page

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("selection budget k must be >= 1")
        if self.n_sampled is not None and self.n_sampled < 1:
            raise ValueError("n_sampled must be >= 1")


def default_selection(kind: MediaKind | str) -> SelectionConfig:
    """Video: sample 256, keep 32. Documents: all pages, keep 2."""
    if MediaKind(kind) is MediaKind.VIDEO:
        return SelectionConfig(k=VIDEO_K_SELECTED, n_sampled=VIDEO_N_SAMPLED)
    return SelectionConfig(k=DOCUMENT_K_SELECTED, n_sampled=None)


@dataclass(frozen=True)
class DiversityStats:
    normalized_span: float
    mean_pairwise_gap: float


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[ScoredFrame, ...]
    k_effective: int
    tie_events: int
    spread: DiversityStats | None = None
    k: int | None = None
    n_sampled: int | None = None

    @property
    def indices(self) -> list[int]:
        return [f.frame_index for f in self.selected]


def _effective(frame: ScoredFrame) -> float:
    return 0.0 if frame.failed else frame.score


def select_top_k(
    scored: list[ScoredFrame], cfg: SelectionConfig, t_total: int | None = None
) -> SelectionResult:
    """Keep the ``cfg.k`` best frames (earliest index wins ties), returned in frame order.

    Failed frames take part with score 0.
    """
    if not scored:
        raise ValueError("cannot select from an empty set of scored frames")
    ranked = sorted(scored, key=lambda f: (-_effective(f), f.frame_index))
    k_eff = min(cfg.k, len(ranked))
    chosen = sorted(ranked[:k_eff], key=lambda f: f.frame_index)

    tie_events = 0
    if k_eff < len(ranked):
        tie_events = int(_effective(ranked[k_eff - 1]) == _effective(ranked[k_eff]))

    spread = None
    if t_total is not None:
        spread = diversity_of_indices([f.frame_index for f in chosen], t_total)
    return SelectionResult(
        selected=tuple(chosen),
        k_effective=k_eff,
        tie_events=tie_events,
        spread=spread,
        k=cfg.k,
        n_sampled=cfg.n_sampled,
    )


def diversity_of_indices(indices: list[int], t_total: int) -> DiversityStats:
    if t_total < 1:
        raise ValueError("t_total must be >= 1")
    if t_total == 1 or len(indices) < 2:
        return DiversityStats(0.0, 0.0)
    scale = t_total - 1
    span = (max(indices) - min(indices)) / scale
    pairs = list(combinations(indices, 2))
    gap = sum(abs(a - b) for a, b in pairs) / len(pairs) / scale
    return DiversityStats(normalized_span=span, mean_pairwise_gap=gap)


def diversity(selection: SelectionResult, t_total: int) -> DiversityStats:
    return diversity_of_indices(selection.indices, t_total)
