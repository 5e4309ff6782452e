"""
Experiment Runner

One method per workflow (validate, canonicalize, evolve, ground-state,
mbqc, oracle-check, bench-routing, bench-canonical). Each reads a RunConfig,
runs the workflow and writes its result files into the output directory.
Shared by the command-line front end and the job server.
"""

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from config import RunConfig, TruncationPolicy, get_logger
from errors import BudgetExceededError, ValidationError
from oracle import run_suite, sv_ground_state
from oracle.statevector import check_operator_budget
from simulation import (
    MeasurementPattern,
    RandomSource,
    anneal_schedule,
    evolve_real,
    ground_state,
    load_hamiltonian,
    run_mbqc,
)
from simulation.hamiltonians import HamiltonianSpec
from simulation.tebd import EvolutionRecord
from ttn import (
    GateOp,
    TreeTopology,
    TtnState,
    apply_gate_routed,
    basis_state,
    canonicalize,
    check_canonical,
    entropies,
    expectation,
    layout,
    load_state,
    named_matrix,
    product_state,
    random_product_state,
    random_state,
    rdm1,
    save_state,
    truncate_state,
)
from ttn.topology import LAYOUTS

logger = get_logger(__name__)

WORKFLOWS = ("validate", "canonicalize", "evolve", "ground-state", "mbqc",
             "oracle-check", "bench-routing", "bench-canonical")


def _mbqc_trajectory(args: Tuple[List[List[int]], Dict[str, Any], Optional[TreeTopology], int, int]) -> Dict[str, Any]:
    """One seeded MBQC run; module level so that a process pool can pickle it."""
    edges, pattern_data, topology, seed, stream = args
    pattern = MeasurementPattern.from_dict(pattern_data)
    transcript, state = run_mbqc(edges, pattern, RandomSource(seed, stream), topology)
    measured = set(pattern.targets)
    outputs = {q: rdm1(state, q).matrix for q in range(state.n) if q not in measured}
    return {
        'trajectory': stream,
        'outcomes': transcript.outcomes,
        'probability': transcript.probability,
        'records': transcript.to_json_lines(),
        'max_rank': state.chi_max_observed,
        'outputs': {str(q): {'re': m.real.tolist(), 'im': m.imag.tolist()} for q, m in outputs.items()},
    }


class ExperimentRunner:
    """Runs workflows described by one RunConfig."""

    def __init__(self, config: RunConfig):
        """
        Initialize the runner.

        Args:
            config: Validated run settings
        """
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        logger.info(f"Created ExperimentRunner: seed={config.seed}, output={config.output}")

    # ------------------------------------------------------------------
    # Inputs
    # ------------------------------------------------------------------

    def topology(self, validate: bool = True) -> TreeTopology:
        if self.config.topology:
            topology = TreeTopology.from_file(self.config.topology)
            return topology.require_valid() if validate else topology
        return layout(self.config.layout, self.config.n)

    def hamiltonian(self, n: int) -> HamiltonianSpec:
        spec = self.config.hamiltonian or {'name': 'tfim-chain'}
        return load_hamiltonian(spec, n, self.config.d)

    def initial_state(self, topology: TreeTopology) -> TtnState:
        """Starting state: a state file, or one of the named product states."""
        if self.config.state:
            state = load_state(self.config.state)
            if state.topology != topology:
                logger.warning("State file topology differs from the configured one; using the state's")
            if not state.is_canonical:
                canonicalize(state)
            return state
        kind = self.config.initial_state
        d = self.config.d
        if kind == "random-product":
            return random_product_state(topology, d, self.rng)
        if kind == "zero":
            return basis_state(topology, d, [0] * topology.n)
        if kind == "plus":
            return product_state(topology, d, [np.ones(d) / np.sqrt(d)] * topology.n)
        if kind == "random":
            return random_state(topology, d, 2, self.rng)
        raise ValidationError(f"unknown initial state {kind!r} (random-product, zero, plus, random)")

    # ------------------------------------------------------------------
    # Outputs
    # ------------------------------------------------------------------

    def _path(self, name: str) -> str:
        os.makedirs(self.config.output, exist_ok=True)
        return os.path.join(self.config.output, name)

    def _write_json(self, name: str, data: Any) -> str:
        path = self._path(name)
        with open(path, 'w') as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
        logger.info(f"Wrote {path}")
        return path

    def _write_table(self, name: str, columns: List[str], rows: List[Dict[str, Any]]) -> str:
        """A flat table as CSV or JSON, depending on the configured format."""
        if self.config.format == "json":
            return self._write_json(f"{name}.json", rows)
        path = self._path(f"{name}.csv")
        with open(path, 'w', newline='') as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, extrasaction='ignore', lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        logger.info(f"Wrote {path}")
        return path

    # ------------------------------------------------------------------
    # Workflows
    # ------------------------------------------------------------------

    def run(self, workflow: str, callback: Optional[Callable[[EvolutionRecord], None]] = None) -> Dict[str, Any]:
        """Dispatch a workflow by its command-line name."""
        handlers = {
            'validate': self.validate,
            'canonicalize': self.canonicalize,
            'evolve': lambda: self.evolve(callback),
            'ground-state': lambda: self.ground_state(callback),
            'mbqc': self.mbqc,
            'oracle-check': self.oracle_check,
            'bench-routing': self.bench_routing,
            'bench-canonical': self.bench_canonical,
        }
        if workflow not in handlers:
            raise ValidationError(f"unknown workflow {workflow!r}; known: {', '.join(WORKFLOWS)}")
        logger.info(f"Running workflow {workflow}")
        return handlers[workflow]()

    def validate(self) -> Dict[str, Any]:
        """Topology invariants and, when a state file is configured, state invariants."""
        topology = self.topology(validate=False)
        report = topology.validate()
        result: Dict[str, Any] = {'workflow': 'validate', 'topology': report.to_dict(), 'valid': report.valid}
        if self.config.state and report.valid:
            try:
                state = load_state(self.config.state)
                canonical = check_canonical(state)
                result['state'] = {'n': state.n, 'd': state.d, 'max_rank': state.chi_max_observed,
                                   'canonical': canonical.to_dict()}
            except ValidationError as e:
                result['state'] = {'error': str(e)}
                result['valid'] = False
        result['files'] = [self._write_json('validate.json', result)]
        return result

    def canonicalize(self) -> Dict[str, Any]:
        """Canonical form of a state file (or of a seeded random TTN) with per-edge spectra."""
        if self.config.state:
            state = load_state(self.config.state)
        else:
            state = random_state(self.topology(), self.config.d, self.config.chi_max or 4,
                                 self.rng, canonicalize=False)
        max_discarded = canonicalize(state, cutoff=self.config.cutoff)
        fidelity = 1.0
        if self.config.chi_max is not None:
            fidelity = truncate_state(state, self.config.chi_max)
        report = check_canonical(state)
        spectra = {f"{u}-{w}": state.weights[(u, w)].tolist() for u, w in state.topology.internal_edges}
        result = {
            'workflow': 'canonicalize',
            'max_discarded': max_discarded,
            'truncation_fidelity': fidelity,
            'max_rank': state.chi_max_observed,
            'canonical': report.to_dict(),
            'spectra': spectra,
            'entropies': {f"{u}-{w}": s for (u, w), s in entropies(state).items()},
        }
        state_path = self._path('canonical_state.json')
        save_state(state, state_path)
        result['files'] = [state_path, self._write_json('spectra.json', result)]
        return result

    def _magnetization(self, state: TtnState) -> Optional[List[float]]:
        if state.d != 2:
            return None
        z = named_matrix("Z")
        return [expectation(state, z, (q,)) for q in range(state.n)]

    def evolve(self, callback: Optional[Callable[[EvolutionRecord], None]] = None) -> Dict[str, Any]:
        """Real-time evolution to time t."""
        topology = self.topology()
        h = self.hamiltonian(topology.n)
        state = self.initial_state(topology)
        report = evolve_real(state, h, self.config.t, self.config.dt, self.config.order,
                             self.config.policy, callback=callback)
        csv_path = self._path('evolution.csv')
        report.write_csv(csv_path)
        state_path = self._path('final_state.json')
        save_state(state, state_path)
        result = {
            'workflow': 'evolve',
            'hamiltonian': h.name,
            't': self.config.t,
            'steps': len(report.records) - 1,
            'final_energy': report.final_energy,
            'energy_drift': report.final_energy - report.records[0].energy,
            'discarded': report.discarded,
            'max_rank': state.chi_max_observed,
            'magnetization': self._magnetization(state),
        }
        result['files'] = [csv_path, state_path, self._write_json('evolve.json', result)]
        return result

    def ground_state(self, callback: Optional[Callable[[EvolutionRecord], None]] = None) -> Dict[str, Any]:
        """Imaginary-time ground-state search, compared with exact diagonalization when it fits."""
        topology = self.topology()
        h = self.hamiltonian(topology.n)
        state = self.initial_state(topology)
        schedule = self.config.dt_schedule or anneal_schedule()
        report = ground_state(state, h, schedule, self.config.order, self.config.policy,
                              self.config.energy_tolerance, self.config.max_steps, callback=callback)
        result = {
            'workflow': 'ground-state',
            'hamiltonian': h.name,
            'dt_schedule': list(schedule),
            'steps': len(report.records) - 1,
            'converged': report.converged,
            'final_energy': report.final_energy,
            'discarded': report.discarded,
            'max_rank': state.chi_max_observed,
        }
        try:
            check_operator_budget(h.n, h.d)
            exact, _ = sv_ground_state(h)
            result['oracle_energy'] = exact
            result['error'] = abs(report.final_energy - exact)
        except BudgetExceededError as e:
            logger.info(f"No exact reference energy: {e}")
        csv_path = self._path('evolution.csv')
        report.write_csv(csv_path)
        state_path = self._path('ground_state.json')
        save_state(state, state_path)
        result['files'] = [csv_path, state_path, self._write_json('ground_state_summary.json', result)]
        return result

    def mbqc(self) -> Dict[str, Any]:
        """Cluster state plus measurement pattern, for one or more seeded trajectories."""
        edges = self.config.graph or [[k, k + 1] for k in range(self.config.n - 1)]
        pattern = (MeasurementPattern.from_file(self.config.pattern)
                   if self.config.pattern else MeasurementPattern())
        topology = self.topology() if self.config.topology else None
        jobs = [(edges, pattern.to_dict(), topology, self.config.seed, i)
                for i in range(self.config.trajectories)]
        if self.config.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=self.config.jobs) as pool:
                trajectories = list(pool.map(_mbqc_trajectory, jobs))
        else:
            trajectories = [_mbqc_trajectory(job) for job in jobs]

        transcript_path = self._path('transcript.jsonl')
        with open(transcript_path, 'w') as fh:
            for trajectory in trajectories:
                for line in trajectory['records'].splitlines():
                    record = json.loads(line)
                    record['trajectory'] = trajectory['trajectory']
                    fh.write(json.dumps(record, sort_keys=True) + "\n")
        summary = [{k: v for k, v in t.items() if k != 'records'} for t in trajectories]
        result = {'workflow': 'mbqc', 'graph': edges, 'trajectories': summary}
        result['files'] = [transcript_path, self._write_json('mbqc.json', result)]
        return result

    def oracle_check(self) -> Dict[str, Any]:
        """Run a named cross-validation suite against the dense oracle."""
        results = run_suite(self.config.suite, self.config.n, self.config.seed)
        result = {
            'workflow': 'oracle-check',
            'passed': all(r.passed for r in results),
            'suites': [r.to_dict() for r in results],
        }
        result['files'] = [self._write_json('oracle_check.json', result)]
        return result

    def bench_routing(self, pairs_per_size: int = 16) -> Dict[str, Any]:
        """Path lengths and swap counts of routed gates vs n for both layouts."""
        rows = []
        cz = named_matrix("CZ")
        plus = np.ones(2) / np.sqrt(2)
        policy = TruncationPolicy(chi_max=self.config.chi_max or 8, cutoff=self.config.cutoff)
        for kind in LAYOUTS:
            for n in self.config.sizes:
                topology = layout(kind, n)
                state = product_state(topology, 2, [plus] * n)
                lengths, swaps = [], []
                for _ in range(pairs_per_size):
                    q1, q2 = (int(q) for q in self.rng.choice(n, size=2, replace=False))
                    report = apply_gate_routed(state, GateOp(cz, (q1, q2)), policy)
                    lengths.append(report.path_length)
                    swaps.append(report.swap_count)
                rows.append({
                    'layout': kind,
                    'n': n,
                    'log2_n': math.log2(n),
                    'max_path_length': topology.max_path_length(),
                    'mean_path_length': float(np.mean(lengths)),
                    'mean_swaps': float(np.mean(swaps)),
                    'max_swaps': int(max(swaps)),
                    'max_rank': state.chi_max_observed,
                })
                logger.info(f"bench-routing {kind} n={n}: max path {rows[-1]['max_path_length']}")

        fits = {}
        for kind in LAYOUTS:
            kind_rows = [r for r in rows if r['layout'] == kind]
            if len(kind_rows) >= 2:
                x_n = [r['n'] for r in kind_rows]
                x_log = [r['log2_n'] for r in kind_rows]
                y = [r['max_path_length'] for r in kind_rows]
                fits[kind] = {
                    'slope_vs_n': float(np.polyfit(x_n, y, 1)[0]),
                    'slope_vs_log2_n': float(np.polyfit(x_log, y, 1)[0]),
                }
        columns = ['layout', 'n', 'log2_n', 'max_path_length', 'mean_path_length',
                   'mean_swaps', 'max_swaps', 'max_rank']
        result = {'workflow': 'bench-routing', 'rows': rows, 'fits': fits}
        result['files'] = [self._write_table('bench_routing', columns, rows),
                           self._write_json('bench_routing_fits.json', fits)]
        return result

    def bench_canonical(self, repeats: int = 3) -> Dict[str, Any]:
        """Wall time of canonicalize vs bond dimension at a fixed topology."""
        topology = self.topology()
        rows = []
        for chi in self.config.chis:
            state = random_state(topology, self.config.d, chi, self.rng, canonicalize=False)
            best = math.inf
            for _ in range(repeats):
                trial = state.copy()
                started = time.perf_counter()
                canonicalize(trial)
                best = min(best, time.perf_counter() - started)
            rows.append({'chi': chi, 'effective_chi': state.chi_max_observed, 'seconds': best})
            logger.info(f"bench-canonical chi={chi}: {best:.4f}s")

        slope = None
        if len(rows) >= 2:
            slope = float(np.polyfit(np.log([r['effective_chi'] for r in rows]),
                                     np.log([r['seconds'] for r in rows]), 1)[0])
        result = {'workflow': 'bench-canonical', 'n': topology.n, 'rows': rows, 'log_log_slope': slope}
        result['files'] = [self._write_table('bench_canonical', ['chi', 'effective_chi', 'seconds'], rows),
                           self._write_json('bench_canonical_summary.json',
                                            {'n': topology.n, 'log_log_slope': slope})]
        return result
