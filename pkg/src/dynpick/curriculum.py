"""Three-track difficulty curriculum with synchronized advancement.

Pick, place, and release tracks each hold a level in [0.10, 1.0]. Every
`period` training iterations the windowed success rates are compared against
per-track thresholds; a track that clears its threshold advances by one step.
The pick and place levels may never drift apart by more than the sync margin,
so the leader waits for the laggard; the release track is exempt. Window
counters reset after every check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .configs import CurriculumParams

TRACKS = ("pick", "place", "release")


def _quantize(level: float) -> float:
    """Levels live on the 0.01 grid; keep them exactly there."""
    return round(level * 100.0) / 100.0


@dataclass(slots=True)
class CurriculumState:
    levels: dict = field(default_factory=dict)
    successes: dict = field(default_factory=dict)
    attempts: dict = field(default_factory=dict)
    iteration: int = 0
    advances: int = 0          # total advancement events across tracks

    @classmethod
    def fresh(cls, params: CurriculumParams) -> "CurriculumState":
        lv = _quantize(params.init_level)
        return cls(levels={t: lv for t in TRACKS},
                   successes={t: 0 for t in TRACKS},
                   attempts={t: 0 for t in TRACKS})


def record_outcomes(state: CurriculumState, pick: tuple, place: tuple,
                    release: tuple) -> None:
    """Add (successes, attempts) pairs for each track to the current window."""
    for name, (s, a) in zip(TRACKS, (pick, place, release)):
        state.successes[name] += s
        state.attempts[name] += a


def end_iteration(state: CurriculumState, params: CurriculumParams) -> dict:
    """Advance the iteration counter; on period boundaries run the level
    update and reset the windows. Returns {track: advanced} for the check,
    or an empty dict when no check ran."""
    state.iteration += 1
    if state.iteration % params.period != 0:
        return {}

    rates = {}
    for t in TRACKS:
        att = state.attempts[t]
        rates[t] = state.successes[t] / att if att > 0 else 0.0

    thresholds = {"pick": params.pick_threshold,
                  "place": params.place_threshold,
                  "release": params.release_threshold}
    want = {t: rates[t] > thresholds[t] and state.levels[t] < params.level_max
            for t in TRACKS}

    # Synchronization: pick and place may not separate beyond the margin.
    new = dict(state.levels)
    for t in TRACKS:
        if want[t]:
            new[t] = _quantize(min(params.level_max,
                                   state.levels[t] + params.level_step))
    if abs(new["pick"] - new["place"]) > params.sync_margin + 1e-12:
        # the advance that would widen the gap is withheld
        if new["pick"] > new["place"] and want["pick"]:
            new["pick"] = state.levels["pick"]
            want["pick"] = False
        if new["place"] > new["pick"] and want["place"]:
            new["place"] = state.levels["place"]
            want["place"] = False

    advanced = {t: new[t] != state.levels[t] for t in TRACKS}
    state.levels = new
    state.advances += sum(advanced.values())
    for t in TRACKS:
        state.successes[t] = 0
        state.attempts[t] = 0
    return advanced


def level_interp(level: float, easy: float, hard: float) -> float:
    """Linear difficulty anchor interpolation at `level` in [0, 1]."""
    return easy + (hard - easy) * level


def place_tolerance(level: float, ranges) -> float:
    return level_interp(level, ranges.place_tol_easy, ranges.place_tol_hard)


def retreat_requirement(level: float, ranges) -> float:
    return level_interp(level, ranges.retreat_easy, ranges.retreat_hard)
