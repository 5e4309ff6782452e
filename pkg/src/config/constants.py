"""
Configuration Constants

Contains numerical tolerances, budgets and per-run settings for the simulator.
"""

import json
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional

from errors import ConfigError


@dataclass
class NumericsConfig:
    """Tolerances shared by the tensor network code."""

    # Input checks
    HERMITIAN_TOLERANCE: float = 1e-10
    UNIT_VECTOR_TOLERANCE: float = 1e-10
    UNITARY_TOLERANCE: float = 1e-10
    COMPLETENESS_TOLERANCE: float = 1e-10

    # Gram eigenvalues d_tau <= EPS * max(d) are dropped
    GRAM_EIGENVALUE_EPS: float = 1e-12

    # Singular values below SCHMIDT_FLOOR * s_max are never stored as weights
    SCHMIDT_FLOOR: float = 1e-13

    # Weights smaller than this cannot be detached from a tensor
    DIVISION_THRESHOLD: float = 1e-14

    CANONICAL_TOLERANCE: float = 1e-10
    MIN_PROBABILITY: float = 1e-14


@dataclass
class OracleConfig:
    """Size budgets for dense statevector work."""

    MAX_AMPLITUDES: int = 2 ** 14  # ~14 qubits
    MAX_OPERATOR_DIMENSION: int = 2 ** 12  # dense H is dim x dim
    BUDGET_ENV_VAR: str = "TTN_ORACLE_BUDGET"

    @classmethod
    def amplitude_budget(cls) -> int:
        """Statevector budget, overridable through the environment."""
        raw = os.environ.get(cls.BUDGET_ENV_VAR)
        if raw is None:
            return cls.MAX_AMPLITUDES
        try:
            return int(raw)
        except ValueError:
            return cls.MAX_AMPLITUDES


@dataclass
class TebdConfig:
    """Defaults for time evolution and ground-state search."""

    DEFAULT_DT: float = 0.01
    DEFAULT_ORDER: int = 2
    DEFAULT_CHI_MAX: Optional[int] = None
    DEFAULT_CUTOFF: float = 0.0

    # Imaginary time
    ENERGY_TOLERANCE: float = 1e-10
    MAX_STEPS_PER_DT: int = 2000
    DT_START: float = 0.1
    DT_MIN: float = 0.001
    ANNEAL_FACTOR: float = 0.1
    MONOTONIC_TOLERANCE: float = 1e-8

    # Full canonicalization sweep after this many non-unitary gates (0 = once per layer)
    NONUNITARY_SWEEP_EVERY: int = 0


@dataclass
class LoggingConfig:
    """Configuration for logging system."""

    DEFAULT_LEVEL: str = "INFO"

    # File settings
    MAX_LOG_SIZE: int = 1024 * 1024  # 1MB
    BACKUP_COUNT: int = 3

    FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    DATE_FORMAT: str = "%Y-%m-%d %H:%M:%S"


@dataclass(frozen=True)
class TruncationPolicy:
    """Rank cap and relative squared-weight cutoff applied at every SVD."""

    chi_max: Optional[int] = None
    cutoff: float = 0.0

    def __post_init__(self):
        if self.chi_max is not None and self.chi_max < 1:
            raise ConfigError(f"chi_max must be >= 1, got {self.chi_max}")
        if self.cutoff < 0:
            raise ConfigError(f"cutoff must be non-negative, got {self.cutoff}")

    @property
    def is_exact(self) -> bool:
        return self.chi_max is None and self.cutoff == 0.0


@dataclass
class RunConfig:
    """Declarative settings for one run; loaded from JSON, overridden by flags."""

    # Topology: a text file, or a generated layout
    topology: Optional[str] = None
    layout: str = "caterpillar"
    n: int = 8
    d: int = 2

    # Workload
    state: Optional[str] = None
    hamiltonian: Dict[str, Any] = field(default_factory=dict)
    pattern: Optional[str] = None
    graph: Optional[List[List[int]]] = None
    suite: str = "all"

    # Numerics
    chi_max: Optional[int] = TebdConfig.DEFAULT_CHI_MAX
    cutoff: float = TebdConfig.DEFAULT_CUTOFF
    dt: float = TebdConfig.DEFAULT_DT
    order: int = TebdConfig.DEFAULT_ORDER
    t: float = 1.0
    dt_schedule: Optional[List[float]] = None
    energy_tolerance: float = TebdConfig.ENERGY_TOLERANCE
    max_steps: int = TebdConfig.MAX_STEPS_PER_DT
    initial_state: str = "random-product"
    sizes: List[int] = field(default_factory=lambda: [8, 16, 32, 64])
    chis: List[int] = field(default_factory=lambda: [8, 16, 32, 64])

    # Execution
    seed: int = 0
    trajectories: int = 1
    jobs: int = 1
    output: str = "results"
    format: str = "json"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Check value ranges; raise ConfigError on the first problem."""
        if self.n < 3:
            raise ConfigError(f"n must be >= 3, got {self.n}")
        if self.d < 2:
            raise ConfigError(f"d must be >= 2, got {self.d}")
        if self.order not in (1, 2):
            raise ConfigError(f"order must be 1 or 2, got {self.order}")
        if self.dt == 0:
            raise ConfigError("dt must be non-zero")
        if self.chi_max is not None and self.chi_max < 1:
            raise ConfigError(f"chi_max must be >= 1, got {self.chi_max}")
        if self.cutoff < 0:
            raise ConfigError(f"cutoff must be non-negative, got {self.cutoff}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format}")
        if self.jobs < 1 or self.trajectories < 1:
            raise ConfigError("jobs and trajectories must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(chi_max=self.chi_max, cutoff=self.cutoff)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: Optional[str] = None) -> "RunConfig":
        """Build a config from a parsed JSON document.

        Args:
            data: Mapping of config keys
            base_dir: Directory that relative file paths are resolved against
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")
        values = dict(data)
        if base_dir:
            for key in ("topology", "state", "pattern"):
                if values.get(key) and not os.path.isabs(values[key]):
                    values[key] = os.path.join(base_dir, values[key])
            ham_file = values.get("hamiltonian", {}).get("file")
            if ham_file and not os.path.isabs(ham_file):
                values["hamiltonian"] = dict(values["hamiltonian"], file=os.path.join(base_dir, ham_file))
        try:
            return cls(**values)
        except TypeError as e:
            raise ConfigError(f"Invalid config: {e}") from e

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path} must be a JSON object")
        return cls.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a copy with every non-None override applied."""
        values = {k: v for k, v in overrides.items() if v is not None}
        try:
            return replace(self, **values)
        except TypeError as e:
            raise ConfigError(f"Invalid override: {e}") from e
