"""Modified perceptron training of flash threshold voltages.

The update rule walks minterms in ascending index order; on an incorrect
response, every flash device whose input bit is 1 moves by one step delta
(down for a missed on-set minterm, up for a missed off-set minterm),
clamped to [vt_min, vt_max].  The side devices act as the bias term and
move on every incorrect response: a missed on-set minterm raises V_R
(lowering V_L instead once V_R clamps), a missed off-set minterm raises
V_L (then lowers V_R).  Updating the bias only when the input-device
update is fully clamped looks equivalent but is not: input-only updates
can cancel exactly across an epoch (e.g. the 1-vs-4 weighted function of
five inputs) and the loop then cycles forever.

Correctness flows solely through the device-model oracle; the weight
vector of the target function is never consulted during updates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

from .device import DeviceParams, FtlCell, evaluate, verify_cell
from .truthtable import TruthTable


class TrainingError(Exception):
    """Raised when no side assignment converges (non-threshold input)."""


@dataclass(frozen=True)
class TrainConfig:
    delta: float | None = None  # defaults to params.delta
    init_vt: float | None = None  # defaults to vdd / 2
    active_side: str = "auto"  # "left" | "right" | "auto"
    max_iterations: int | None = None  # overrides the kmax bound
    handicap_margin: float = 0.0  # siemens
    seed: int = 0  # reserved; training is deterministic
    record_trace: bool = False

    def __post_init__(self):
        if self.active_side not in ("left", "right", "auto"):
            raise ValueError(f"bad active_side {self.active_side!r}")
        if self.delta is not None and self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    epoch: int
    minterm: int
    device: str  # "v1".."vn", "vl", "vr"
    old_vt: float
    new_vt: float
    reason: str  # "eq2" | "fallback_vr" | "fallback_vl"


@dataclass
class TrainResult:
    cell: FtlCell
    converged: bool
    iterations: int
    epochs: int
    active_side: str
    trace: list[TraceEntry] = field(default_factory=list)


def kmax_bound(n: int, delta: float, vdd: float) -> int:
    """Pessimistic perceptron iteration bound with the solution norm taken
    at its worst case of n + 2 devices at vdd each."""
    return math.ceil(2 * n * (n + 2) * vdd ** 2 / delta ** 2)


def _step_up(v: float, delta: float, vt_min: float, vt_max: float) -> float:
    # A device at or above vt_max (including one parked at vdd) stays put.
    if v >= vt_max:
        return v
    return min(v + delta, vt_max)


def _step_down(v: float, delta: float, vt_min: float, vt_max: float) -> float:
    if v <= vt_min:
        return v
    return min(max(v - delta, vt_min), vt_max)


def _train_from(
    cell: FtlCell,
    tt: TruthTable,
    config: TrainConfig,
    side: str,
) -> TrainResult:
    p = cell.params
    delta = config.delta if config.delta is not None else p.delta
    bound = (config.max_iterations if config.max_iterations is not None
             else kmax_bound(tt.n, delta, p.vdd))
    h = config.handicap_margin
    vt = list(cell.vt)
    vl, vr = cell.v_left, cell.v_right
    trace: list[TraceEntry] = []
    iterations = 0
    epochs = 0
    converged = False

    def record(minterm, device, old, new, reason):
        if config.record_trace and new != old:
            trace.append(TraceEntry(iterations, epochs, minterm, device,
                                    old, new, reason))

    while True:
        epochs += 1
        clean = True
        state_before = (tuple(vt), vl, vr)
        for m in range(tt.size):
            want = tt.value(m)
            r = evaluate(
                FtlCell(tt.n, tuple(vt), vl, vr, p),
                m, h if want else -h,
            )
            if r.y == want and not r.metastable:
                continue
            clean = False
            iterations += 1
            for i in range(tt.n):
                if not (m >> i) & 1:
                    continue
                old = vt[i]
                step = _step_down if want else _step_up
                vt[i] = step(old, delta, p.vt_min, p.vt_max)
                if vt[i] != old:
                    record(m, f"v{i + 1}", old, vt[i], "eq2")
            if want:
                new = _step_up(vr, delta, p.vt_min, p.vt_max)
                if new != vr:
                    record(m, "vr", vr, new, "fallback_vr")
                    vr = new
                else:
                    new = _step_down(vl, delta, p.vt_min, p.vt_max)
                    record(m, "vl", vl, new, "fallback_vl")
                    vl = new
            else:
                new = _step_up(vl, delta, p.vt_min, p.vt_max)
                if new != vl:
                    record(m, "vl", vl, new, "fallback_vl")
                    vl = new
                else:
                    new = _step_down(vr, delta, p.vt_min, p.vt_max)
                    record(m, "vr", vr, new, "fallback_vr")
                    vr = new
            if iterations > bound:
                return TrainResult(FtlCell(tt.n, tuple(vt), vl, vr, p),
                                   False, iterations, epochs, side, trace)
        if clean:
            converged = True
            break
        if (tuple(vt), vl, vr) == state_before:
            # Incorrect responses but every update clamped to a no-op: the
            # deterministic epoch would repeat verbatim, so bail out now.
            return TrainResult(FtlCell(tt.n, tuple(vt), vl, vr, p),
                               False, iterations, epochs, side, trace)

    out = FtlCell(tt.n, tuple(vt), vl, vr, p)
    # Convergence certificate, independent of the training loop.
    assert verify_cell(out, tt, h), "converged cell failed re-verification"
    return TrainResult(out, converged, iterations, epochs, side, trace)


def train(
    tt: TruthTable,
    params: DeviceParams | None = None,
    config: TrainConfig | None = None,
    weights_hint=None,
) -> TrainResult:
    """Train a cell to realize tt (which should be a positive-unate
    threshold function; non-threshold inputs come back unconverged).
    weights_hint is advisory only and never read during updates."""
    params = params or DeviceParams()
    config = config or TrainConfig()
    sides = [config.active_side] if config.active_side != "auto" else ["right", "left"]
    # Functions whose bias must dominate the inputs (OR-like, low threshold)
    # dead-end from the midpoint start: the inputs saturate at vt_min before
    # the side device wins the race, leaving an incorrect fixed point.  A
    # weaker-input start (higher init Vt) avoids it, so retry up the ladder.
    if config.init_vt is not None:
        inits = [config.init_vt]
    else:
        inits = [params.vdd / 2, round(params.vdd * 7 / 9, 6)]
    result = None
    for init_vt in inits:
        for side in sides:
            cell = FtlCell.fresh(tt.n, params, init_vt, side)
            result = _train_from(cell, tt, config, side)
            if result.converged:
                return result
    return result


def select_active_side(
    tt: TruthTable,
    params: DeviceParams | None = None,
    config: TrainConfig | None = None,
) -> str:
    """Right side first (left parked at vdd); fall back to left."""
    params = params or DeviceParams()
    config = config or TrainConfig()
    r = train(tt, params, replace(config, handicap_margin=0.0,
                                  active_side="auto"))
    if r is not None and r.converged:
        return r.active_side
    raise TrainingError("neither side converged; not a threshold function")


def train_robust(
    tt: TruthTable,
    params: DeviceParams | None = None,
    config: TrainConfig | None = None,
    margin_step: float = 0.02,
    max_margin: float = 0.10,
) -> tuple[TrainResult, float]:
    """Progressively retrain at margins 0, step, 2*step, ... <= max_margin,
    warm-starting each level; returns the result for the largest margin
    that converged, plus that margin."""
    if margin_step <= 0:
        raise ValueError("margin_step must be positive")
    params = params or DeviceParams()
    config = config or TrainConfig()
    base = train(tt, params, replace(config, handicap_margin=0.0))
    if not base.converged:
        raise TrainingError("base (margin 0) training failed")
    best, achieved = base, 0.0
    level = margin_step
    while level <= max_margin + 1e-15:
        cfg = replace(config, handicap_margin=level, active_side=best.active_side)
        r = _train_from(best.cell, tt, cfg, best.active_side)
        if not r.converged:
            break
        best, achieved = r, level
        level += margin_step
    return best, achieved


def write_trace_csv(trace: list[TraceEntry], fp) -> None:
    writer = csv.writer(fp)
    writer.writerow(["iteration", "epoch", "minterm", "device",
                     "old_vt", "new_vt", "reason"])
    for e in trace:
        writer.writerow([e.iteration, e.epoch, e.minterm, e.device,
                         f"{e.old_vt:.6f}", f"{e.new_vt:.6f}", e.reason])
