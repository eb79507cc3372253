"""Post-fabrication programming model: block erase, counted-pulse Vt
setting with quantization, and the serial address decoding used to select
one flash device of one cell on a chip.

Pulses are modeled as a constant Vt increment each; programming only
raises Vt (tunneling electrons in), erase resets a whole block to the
erased level.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

from .device import FtlCell


@dataclass(frozen=True)
class ProgrammerConfig:
    vt_erased: float | None = None  # defaults to vt_min of the cell's params
    pulse_resolution: float = 0.010  # volts per pulse
    hiv_program: float = 20.0
    hiv_erase: float = -20.0

    def __post_init__(self):
        if self.pulse_resolution <= 0:
            raise ValueError("pulse_resolution must be positive")

    def erased_level(self, cell: FtlCell) -> float:
        v = cell.params.vt_min if self.vt_erased is None else self.vt_erased
        if not cell.params.vt_min <= v <= cell.params.vt_max:
            raise ValueError("vt_erased outside the legal Vt interval")
        return v


@dataclass(frozen=True)
class PulseSchedule:
    """Per-device pulse counts, ordered inputs first then V_L, V_R."""

    counts: tuple[int, ...]
    achieved: tuple[float, ...]
    vt_erased: float
    pulse_resolution: float


def erase_block(cells: list[FtlCell], cfg: ProgrammerConfig) -> list[FtlCell]:
    """Erase every flash device (inputs and side devices) of every cell."""
    out = []
    for cell in cells:
        v = cfg.erased_level(cell)
        out.append(replace(cell, vt=(v,) * cell.n, v_left=v, v_right=v))
    return out


def plan_program(target: FtlCell, cfg: ProgrammerConfig) -> PulseSchedule:
    """Pulse counts reproducing the target Vts from the erased state;
    per-device error is at most half a pulse."""
    erased = cfg.erased_level(target)
    res = cfg.pulse_resolution
    counts = []
    achieved = []
    for v in target.all_vt():
        if v < erased - 1e-12:
            raise ValueError(
                f"target Vt {v:.4f} below erased level {erased:.4f}; erase first"
            )
        k = round((v - erased) / res)
        counts.append(k)
        achieved.append(erased + k * res)
    return PulseSchedule(tuple(counts), tuple(achieved), erased, res)


def apply_schedule(cell_erased: FtlCell, sched: PulseSchedule) -> FtlCell:
    """Pure state transition from an erased cell to the scheduled Vts."""
    if len(sched.counts) != cell_erased.n + 2:
        raise ValueError("schedule width does not match the cell")
    if any(abs(v - sched.vt_erased) > 1e-12 for v in cell_erased.all_vt()):
        raise ValueError("cell is not in the erased state")
    vt = sched.achieved[: cell_erased.n]
    return replace(cell_erased, vt=vt,
                   v_left=sched.achieved[cell_erased.n],
                   v_right=sched.achieved[cell_erased.n + 1])


def program_cell(target: FtlCell, cfg: ProgrammerConfig) -> FtlCell:
    """erase -> plan -> apply round trip for one cell."""
    erased = erase_block([target], cfg)[0]
    return apply_schedule(erased, plan_program(target, cfg))


@dataclass(frozen=True)
class ChipAddress:
    cell_index: int  # selects FC_j
    device_index: int  # selects FT_i


@dataclass(frozen=True)
class ArrayConfig:
    n_cells: int
    n_devices: int
    cell_bits: int | None = None
    device_bits: int | None = None

    def __post_init__(self):
        if self.n_cells < 1 or self.n_devices < 1:
            raise ValueError("array dimensions must be >= 1")
        if self.cell_bits is None:
            object.__setattr__(self, "cell_bits",
                               max(1, math.ceil(math.log2(self.n_cells))))
        if self.device_bits is None:
            object.__setattr__(self, "device_bits",
                               max(1, math.ceil(math.log2(self.n_devices))))

    @property
    def frame_bits(self) -> int:
        return self.cell_bits + self.device_bits


def _as_bits(bitstream) -> list[int]:
    bits = []
    for b in bitstream:
        v = int(b)
        if v not in (0, 1):
            raise ValueError(f"bitstream element {b!r} is not a bit")
        bits.append(v)
    return bits


def decode_address(bitstream, cfg: ArrayConfig) -> ChipAddress:
    """Big-endian split: cell index bits first, then device index bits."""
    bits = _as_bits(bitstream)
    if len(bits) != cfg.frame_bits:
        raise ValueError(
            f"bitstream length {len(bits)} != frame width {cfg.frame_bits}"
        )
    j = i = 0
    for b in bits[: cfg.cell_bits]:
        j = (j << 1) | b
    for b in bits[cfg.cell_bits:]:
        i = (i << 1) | b
    if j >= cfg.n_cells:
        raise ValueError(f"cell index {j} beyond array of {cfg.n_cells}")
    if i >= cfg.n_devices:
        raise ValueError(f"device index {i} beyond {cfg.n_devices} devices")
    return ChipAddress(j, i)


def encode_address(addr: ChipAddress, cfg: ArrayConfig) -> str:
    if not 0 <= addr.cell_index < cfg.n_cells:
        raise ValueError("cell index out of range")
    if not 0 <= addr.device_index < cfg.n_devices:
        raise ValueError("device index out of range")
    return (format(addr.cell_index, f"0{cfg.cell_bits}b")
            + format(addr.device_index, f"0{cfg.device_bits}b"))


def write_schedule_csv(schedules: dict[int, PulseSchedule], fp) -> None:
    writer = csv.writer(fp)
    writer.writerow(["cell", "device", "pulses", "achieved_vt"])
    for cell_idx, sched in schedules.items():
        for dev, (k, v) in enumerate(zip(sched.counts, sched.achieved)):
            writer.writerow([cell_idx, dev, k, f"{v:.6f}"])
