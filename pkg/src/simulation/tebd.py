"""
Time Evolution

Suzuki-Trotter gate schedules for two-body Hamiltonians and their
application to a TTN in real time and imaginary time, including ground-state
search with a decreasing time-step schedule.

Every two-qudit gate is routed through the tree; the layout is restored
after each gate.
"""

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg

from config import TebdConfig, TruncationPolicy, get_logger
from errors import NumericalError, ValidationError
from ttn.canonical import canonicalize
from ttn.gates import EXACT, GateOp, apply_gate_routed
from ttn.observables import energy
from ttn.state import TtnState, require_canonical

from .hamiltonians import HamiltonianSpec

logger = get_logger(__name__)

CSV_COLUMNS = ("step", "time", "energy", "max_rank", "discarded", "seconds")


@dataclass
class TrotterGate:
    """One factor exp(-i h c dt) (or exp(-h c dt)) of a Trotter step."""

    term_index: int
    coefficient: float
    gate: GateOp


@dataclass
class TrotterSchedule:
    order: int
    dt: float
    imaginary: bool
    layers: List[List[TrotterGate]] = field(default_factory=list)

    @property
    def gates(self) -> List[TrotterGate]:
        return [g for layer in self.layers for g in layer]

    def term_weights(self) -> Dict[int, float]:
        """Total coefficient per term over one step (1 for every term)."""
        totals: Dict[int, float] = {}
        for g in self.gates:
            totals[g.term_index] = totals.get(g.term_index, 0.0) + g.coefficient
        return totals


def trotter_schedule(h: HamiltonianSpec, dt: float, order: int = TebdConfig.DEFAULT_ORDER,
                     imaginary: bool = False) -> TrotterSchedule:
    """
    Gates of one Trotter step.

    Terms are taken in (min site, max site) order. Order 1 applies each term
    once; order 2 applies half steps forward then backward, with the two
    middle half steps fused. Gates are packed into layers as early as their
    sites allow, so gates sharing a site keep their relative order.
    """
    if order not in (1, 2):
        raise ValidationError(f"Trotter order must be 1 or 2, got {order}")
    if dt == 0 or not math.isfinite(dt):
        raise ValidationError(f"dt must be finite and nonzero, got {dt}")
    if imaginary and dt < 0:
        raise ValidationError(f"imaginary-time dt must be positive, got {dt}")

    ordered = sorted(range(len(h.terms)), key=lambda i: h.terms[i].sort_key)
    if order == 1:
        sequence = [(i, 1.0) for i in ordered]
    else:
        sequence = [(i, 0.5) for i in ordered] + [(i, 0.5) for i in reversed(ordered)]
        fused = []
        for index, c in sequence:
            if fused and fused[-1][0] == index:
                fused[-1] = (index, fused[-1][1] + c)
            else:
                fused.append((index, c))
        sequence = fused

    schedule = TrotterSchedule(order=order, dt=dt, imaginary=imaginary)
    last_layer: Dict[int, int] = {}
    for index, c in sequence:
        term = h.terms[index]
        generator = term.matrix * dt * c
        matrix = scipy.linalg.expm(-generator if imaginary else -1j * generator)
        layer = 1 + max(last_layer.get(s, -1) for s in term.sites)
        while len(schedule.layers) <= layer:
            schedule.layers.append([])
        schedule.layers[layer].append(TrotterGate(index, c, GateOp(matrix, term.sites, name=term.label)))
        for s in term.sites:
            last_layer[s] = layer
    return schedule


@dataclass
class EvolutionRecord:
    step: int
    time: float
    energy: float
    max_rank: int
    discarded: float
    seconds: float


@dataclass
class EvolutionReport:
    """Per-step records of one evolution."""

    records: List[EvolutionRecord] = field(default_factory=list)
    converged: Optional[bool] = None

    @property
    def final_energy(self) -> float:
        return self.records[-1].energy

    @property
    def discarded(self) -> float:
        return self.records[-1].discarded if self.records else 0.0

    def extend(self, other: "EvolutionReport") -> None:
        """Append another report, continuing step numbers, time and discarded weight."""
        offset_step = self.records[-1].step if self.records else 0
        offset_time = self.records[-1].time if self.records else 0.0
        offset_discarded = self.discarded
        for r in other.records[1:] if self.records else other.records:
            self.records.append(EvolutionRecord(
                step=r.step + offset_step,
                time=r.time + offset_time,
                energy=r.energy,
                max_rank=r.max_rank,
                discarded=r.discarded + offset_discarded,
                seconds=r.seconds,
            ))
        self.converged = other.converged

    def to_csv(self, include_timing: bool = True) -> str:
        buffer = io.StringIO()
        columns = CSV_COLUMNS if include_timing else CSV_COLUMNS[:-1]
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for r in self.records:
            row = [r.step, repr(r.time), repr(r.energy), r.max_rank, repr(r.discarded), f"{r.seconds:.6f}"]
            writer.writerow(row[:len(columns)])
        return buffer.getvalue()

    def write_csv(self, path: str) -> None:
        with open(path, 'w', newline='') as fh:
            fh.write(self.to_csv())

    def to_dict(self) -> Dict:
        return {
            'converged': self.converged,
            'final_energy': self.final_energy if self.records else None,
            'records': [asdict(r) for r in self.records],
        }


StepCallback = Callable[[EvolutionRecord], None]


def _check_finite(state: TtnState, value: float, step: int) -> None:
    if not math.isfinite(value):
        raise NumericalError(f"energy became non-finite at step {step}")
    for edge, w in state.weights.items():
        if not np.all(np.isfinite(w)):
            raise NumericalError(f"non-finite weights on edge {edge} at step {step}")


def _record(state: TtnState, h: HamiltonianSpec, step: int, t: float, discarded: float,
            started: float, callback: Optional[StepCallback]) -> EvolutionRecord:
    value = energy(state, h)
    _check_finite(state, value, step)
    record = EvolutionRecord(step, t, value, state.chi_max_observed, discarded, time.perf_counter() - started)
    if callback is not None:
        callback(record)
    return record


def evolve_real(
    state: TtnState,
    h: HamiltonianSpec,
    t: float,
    dt: float = TebdConfig.DEFAULT_DT,
    order: int = TebdConfig.DEFAULT_ORDER,
    policy: TruncationPolicy = EXACT,
    callback: Optional[StepCallback] = None,
) -> EvolutionReport:
    """
    Real-time evolution exp(-iHt) by ceil(t/dt) Trotter steps.

    The step is shortened to t / ceil(t/dt) so that the final time is exactly t.
    """
    require_canonical(state, "evolve_real")
    if t < 0 or dt <= 0:
        raise ValidationError(f"need t >= 0 and dt > 0, got t={t}, dt={dt}")
    steps = math.ceil(t / dt - 1e-12) if t > 0 else 0
    report = EvolutionReport()
    started = time.perf_counter()
    discarded = 0.0
    report.records.append(_record(state, h, 0, 0.0, discarded, started, callback))
    if steps == 0:
        return report

    schedule = trotter_schedule(h, t / steps, order)
    logger.info(f"Real-time evolution: {steps} steps of dt={t / steps:.4g}, "
                f"{len(schedule.gates)} gates per step")
    for step in range(1, steps + 1):
        for gate in schedule.gates:
            discarded += apply_gate_routed(state, gate.gate, policy).discarded_weight
        report.records.append(_record(state, h, step, step * t / steps, discarded, started, callback))
    return report


def evolve_imag(
    state: TtnState,
    h: HamiltonianSpec,
    dt: float = TebdConfig.DT_START,
    order: int = TebdConfig.DEFAULT_ORDER,
    policy: TruncationPolicy = EXACT,
    tolerance: float = TebdConfig.ENERGY_TOLERANCE,
    max_steps: int = TebdConfig.MAX_STEPS_PER_DT,
    strict: Optional[bool] = None,
    sweep_every: int = TebdConfig.NONUNITARY_SWEEP_EVERY,
    callback: Optional[StepCallback] = None,
) -> EvolutionReport:
    """
    Imaginary-time evolution exp(-H dt) at a fixed step until the energy settles.

    Non-unitary gates are applied without a sweep; the canonical form is
    restored after every layer, or after every ``sweep_every`` gates when
    that is positive. Stops when the energy changes by less than
    ``tolerance`` over one step, or after ``max_steps`` steps.

    Args:
        strict: Raise NumericalError if the energy rises by more than the
            monotonicity tolerance across a step; otherwise log a warning.
            Defaults to strict when the policy sets no rank cap
    """
    require_canonical(state, "evolve_imag")
    if strict is None:
        strict = policy.chi_max is None
    schedule = trotter_schedule(h, dt, order, imaginary=True)
    report = EvolutionReport(converged=False)
    started = time.perf_counter()
    discarded = 0.0
    report.records.append(_record(state, h, 0, 0.0, discarded, started, callback))
    previous = report.records[0].energy
    applied = 0

    for step in range(1, max_steps + 1):
        for layer in schedule.layers:
            for gate in layer:
                discarded += apply_gate_routed(state, gate.gate, policy, sweep=False).discarded_weight
                applied += 1
                if sweep_every > 0 and applied % sweep_every == 0:
                    canonicalize(state, cutoff=policy.cutoff)
            if sweep_every <= 0:
                canonicalize(state, cutoff=policy.cutoff)
        if not state.is_canonical:
            canonicalize(state, cutoff=policy.cutoff)

        record = _record(state, h, step, step * dt, discarded, started, callback)
        report.records.append(record)
        change = record.energy - previous
        if change > TebdConfig.MONOTONIC_TOLERANCE:
            message = f"energy rose by {change:.3e} at step {step} (dt={dt})"
            if strict:
                raise NumericalError(message)
            logger.warning(message)
        if abs(change) < tolerance:
            report.converged = True
            break
        previous = record.energy

    if report.converged:
        logger.info(f"Imaginary time dt={dt}: converged after {len(report.records) - 1} steps, "
                    f"E={report.final_energy:.12f}")
    else:
        logger.warning(f"Imaginary time dt={dt}: no convergence within {max_steps} steps, "
                       f"E={report.final_energy:.12f}")
    return report


def anneal_schedule(dt_start: float = TebdConfig.DT_START, dt_min: float = TebdConfig.DT_MIN,
                    factor: float = TebdConfig.ANNEAL_FACTOR) -> List[float]:
    """Geometric time steps dt_start, dt_start*factor, ... down to dt_min."""
    if not 0 < factor < 1:
        raise ValidationError(f"anneal factor must be in (0, 1), got {factor}")
    if not 0 < dt_min <= dt_start:
        raise ValidationError(f"need 0 < dt_min <= dt_start, got {dt_min}, {dt_start}")
    schedule = [dt_start]
    while schedule[-1] * factor >= dt_min * (1 - 1e-9):
        schedule.append(schedule[-1] * factor)
    if schedule[-1] > dt_min * (1 + 1e-9):
        schedule.append(dt_min)
    return schedule


def ground_state(
    state: TtnState,
    h: HamiltonianSpec,
    dt_schedule: Optional[Sequence[float]] = None,
    order: int = TebdConfig.DEFAULT_ORDER,
    policy: TruncationPolicy = EXACT,
    tolerance: float = TebdConfig.ENERGY_TOLERANCE,
    max_steps: int = TebdConfig.MAX_STEPS_PER_DT,
    strict: Optional[bool] = None,
    callback: Optional[StepCallback] = None,
) -> EvolutionReport:
    """Imaginary-time evolution over a decreasing dt schedule; the report spans all stages."""
    dt_schedule = list(dt_schedule or anneal_schedule())
    report = EvolutionReport()
    for dt in dt_schedule:
        stage = evolve_imag(state, h, dt, order, policy, tolerance, max_steps, strict, callback=callback)
        report.extend(stage)
    logger.info(f"Ground-state search finished: E={report.final_energy:.12f}, "
                f"chi={state.chi_max_observed}, converged={report.converged}")
    return report
