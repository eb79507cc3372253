"""Behavioral electrical model of the FTL cell.

The cell is reduced to a conductance comparison: for a minterm, the left
network sums the branch conductances of inputs at 1 plus the left side
device, the right network sums inputs at 0 plus the right side device.
The output is 1 when G_L wins; the sense-amp resolution time is modeled
as tau0 + tau1 / |G_L - G_R|.

Branch conductance uses the alpha-power law g = k * max(0, Vgate - Vt)^alpha
(alpha = 1.3), a stand-in for the saturation current of the flash device
in series with a full-rail input switch.  All conductances are in
normalized siemens (k_cond = 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .truthtable import TruthTable

# Sense-amp contention coefficient, calibrated once so that the margin-0
# trained F115 reference cell reports a worst-case delay of ~244 ps.
TAU1_DEFAULT = 5.145e-12  # siemens * seconds

METASTABLE_EPS = 1e-12  # siemens


def _default_kappa(vdd: float, vgate: float, k_cond: float, alpha: float) -> float:
    # 0.1 fF of handicap capacitance maps to 15% of the mid-range conductance.
    g_mid = k_cond * max(0.0, vgate - vdd / 2) ** alpha
    return 0.15 * g_mid / 0.1e-15


@dataclass(frozen=True)
class DeviceParams:
    vdd: float = 0.9
    vgate: float | None = None  # defaults to vdd
    delta: float = 0.02
    k_cond: float = 1.0
    alpha: float = 1.3
    tau0: float = 50e-12
    tau1: float = TAU1_DEFAULT
    kappa: float | None = None  # siemens per farad, defaults via _default_kappa
    # power model constants (trend-level only)
    switching_activity: float = 0.2
    clock_freq: float = 1e9
    c_eff: float = 1e-15
    duty: float = 0.5

    def __post_init__(self):
        if self.vdd <= 0:
            raise ValueError("vdd must be positive")
        if not 0 < self.delta < self.vdd / 2:
            raise ValueError("delta must lie in (0, vdd/2)")
        if not 1.0 <= self.alpha <= 2.0:
            raise ValueError("alpha must lie in [1, 2]")
        if self.tau0 <= 0 or self.tau1 <= 0:
            raise ValueError("tau0 and tau1 must be positive")
        if self.vgate is None:
            object.__setattr__(self, "vgate", self.vdd)
        if self.kappa is None:
            object.__setattr__(
                self,
                "kappa",
                _default_kappa(self.vdd, self.vgate, self.k_cond, self.alpha),
            )
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")

    @property
    def vt_min(self) -> float:
        return self.delta

    @property
    def vt_max(self) -> float:
        return self.vdd - self.delta

    def margin_for_capacitance(self, cap: float) -> float:
        return self.kappa * cap


def branch_conductance(vt_eff: float, params: DeviceParams) -> float:
    """Conductance of one input branch; zero at and beyond cutoff."""
    drive = params.vgate - vt_eff
    if drive <= 0.0:
        return 0.0
    return params.k_cond * drive ** params.alpha


@dataclass(frozen=True)
class VariationSample:
    """Per-device local Vt shifts (inputs first, then left and right side
    devices), a shared global Vt shift, and a conductance multiplier."""

    local: tuple[float, ...]
    global_shift: float = 0.0
    k_mult: float = 1.0

    @classmethod
    def identity(cls, n: int) -> "VariationSample":
        return cls(local=(0.0,) * (n + 2))


def sample_variation(
    n: int,
    sigma_local: float,
    sigma_global: float,
    sigma_k: float,
    seed: int,
    trial: int,
) -> VariationSample:
    """Deterministic Gaussian variation draw for one Monte Carlo trial;
    identical (seed, trial) always reproduce the identical sample."""
    if min(sigma_local, sigma_global, sigma_k) < 0:
        raise ValueError("sigmas must be nonnegative")
    rng = np.random.default_rng((int(seed), int(trial)))
    local = rng.normal(0.0, sigma_local, n + 2) if sigma_local else np.zeros(n + 2)
    gshift = float(rng.normal(0.0, sigma_global)) if sigma_global else 0.0
    kmult = float(np.exp(rng.normal(0.0, sigma_k))) if sigma_k else 1.0
    return VariationSample(tuple(float(v) for v in local), gshift, kmult)


@dataclass(frozen=True)
class FtlCell:
    """Programmable state of one cell: per-input flash thresholds plus the
    two side devices.  A side device parked at vdd is effectively off."""

    n: int
    vt: tuple[float, ...]
    v_left: float
    v_right: float
    params: DeviceParams = field(default_factory=DeviceParams)

    def __post_init__(self):
        if len(self.vt) != self.n:
            raise ValueError("vt length must equal n")
        object.__setattr__(self, "vt", tuple(float(v) for v in self.vt))

    @classmethod
    def fresh(cls, n: int, params: DeviceParams, init_vt: float | None = None,
              active_side: str = "right") -> "FtlCell":
        v0 = params.vdd / 2 if init_vt is None else init_vt
        if active_side == "right":
            return cls(n, (v0,) * n, params.vdd, v0, params)
        return cls(n, (v0,) * n, v0, params.vdd, params)

    def with_params(self, params: DeviceParams) -> "FtlCell":
        return replace(self, params=params)

    def all_vt(self) -> tuple[float, ...]:
        return self.vt + (self.v_left, self.v_right)

    def to_json(self) -> str:
        d = {
            "n": self.n,
            "vt": [round(v, 6) for v in self.vt],
            "v_left": round(self.v_left, 6),
            "v_right": round(self.v_right, 6),
            "params": {
                "vdd": self.params.vdd,
                "vgate": self.params.vgate,
                "delta": self.params.delta,
                "k_cond": self.params.k_cond,
                "alpha": self.params.alpha,
                "tau0": self.params.tau0,
                "tau1": self.params.tau1,
                "kappa": self.params.kappa,
            },
        }
        return json.dumps(d, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FtlCell":
        d = json.loads(text)
        params = DeviceParams(**d["params"])
        return cls(d["n"], tuple(d["vt"]), d["v_left"], d["v_right"], params)


@dataclass(frozen=True)
class EvalResult:
    y: int
    g_left: float
    g_right: float
    gap: float
    delay: float
    metastable: bool


def evaluate(
    cell: FtlCell,
    minterm: int,
    margin: float = 0.0,
    sample: VariationSample | None = None,
) -> EvalResult:
    """Evaluate one minterm.  A positive margin handicaps the '1' decision
    (callers pass a negative margin to handicap the '0' decision).  The
    margin models a training-only capacitor and is excluded from delay."""
    if not 0 <= minterm < (1 << cell.n):
        raise ValueError(f"minterm {minterm} out of range for n={cell.n}")
    p = cell.params
    if sample is None:
        local = None
        gshift = 0.0
        kmult = 1.0
    else:
        if len(sample.local) != cell.n + 2:
            raise ValueError("variation sample width mismatch")
        local = sample.local
        gshift = sample.global_shift
        kmult = sample.k_mult

    g_left = g_right = 0.0
    for i in range(cell.n):
        shift = gshift + (local[i] if local else 0.0)
        g = branch_conductance(cell.vt[i] + shift, p)
        if (minterm >> i) & 1:
            g_left += g
        else:
            g_right += g
    g_left += branch_conductance(
        cell.v_left + gshift + (local[cell.n] if local else 0.0), p)
    g_right += branch_conductance(
        cell.v_right + gshift + (local[cell.n + 1] if local else 0.0), p)
    g_left *= kmult
    g_right *= kmult

    gap = g_left - g_right
    metastable = abs(gap - margin) < METASTABLE_EPS
    y = 1 if gap > margin else 0
    if abs(gap) < METASTABLE_EPS:
        delay = math.inf
    else:
        delay = p.tau0 + p.tau1 / abs(gap)
    return EvalResult(y, g_left, g_right, gap, delay, metastable)


def verify_cell(cell: FtlCell, tt: TruthTable, margin: float = 0.0) -> bool:
    """Exhaustive functional check: every on-set minterm must clear the
    margin and every off-set minterm must clear it on the other side."""
    if tt.n != cell.n:
        return False
    for m in range(tt.size):
        r = evaluate(cell, m, margin if tt.value(m) else -margin)
        if r.metastable or r.y != tt.value(m):
            return False
    return True


def worst_case_delay(cell: FtlCell, tt: TruthTable) -> float:
    """Max nominal evaluate delay over all minterms (the modeled C2Q)."""
    return max(evaluate(cell, m).delay for m in range(tt.size))


def model_power(cell: FtlCell, tt: TruthTable) -> float:
    """Trend-level power: dynamic switching term plus the crowbar-style
    static term through the losing network."""
    p = cell.params
    static_g = np.mean(
        [min(evaluate(cell, m).g_left, evaluate(cell, m).g_right)
         for m in range(tt.size)]
    )
    dynamic = p.switching_activity * p.clock_freq * p.c_eff * p.vdd ** 2
    return dynamic + p.vdd ** 2 * float(static_g) * p.duty
