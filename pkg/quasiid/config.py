"""
Reading and validation of analysis configs.

A config is a JSON document naming the distributions to analyze and the
numerical settings (grid, h-sequence, probes, tolerances, outputs). Every
field except `distributions` is optional. Content problems raise
ConfigInvalid naming the offending field; missing files raise the usual
OSError subclasses.
"""
import json
import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from quasiid.charfn import (CharFn, Convolution, Degenerate, DiscretePMF, Gaussian,
                            Poisson, ScaledShift)
from quasiid.criteria import (DEFAULT_COUNT, DEFAULT_H0, DEFAULT_K_MAX, DEFAULT_PROBES,
                              DEFAULT_RATIO, Tolerances, default_h_sequence)
from quasiid.exceptions import ConfigInvalid
from quasiid.lk import LevyKhinchineCF
from quasiid.spectral import Density, SpectralFunction, SpectralPair

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

DEFAULT_T_MAX = 4.0 * math.pi
DEFAULT_STEP = math.pi / 512
DEFAULT_REPORT = "report.json"

# Relative tolerance for "is an integer multiple of the step"
_GRID_TOL = 1e-9

_PI_EXPRESSION = re.compile(
    r"^\s*(?:(?P<coef>[0-9.eE+-]+)\s*\*\s*)?pi(?:\s*/\s*(?P<div>[0-9.eE+-]+))?\s*$"
)


@dataclass(frozen=True)
class DistributionSpec:
    """A named distribution from the config."""

    name: str
    cf: CharFn


@dataclass
class AnalysisConfig:
    """
    Validated analysis settings.

    Attributes:
        distributions: Named characteristic functions, in config order
        t_max: Half-width of the trace grid
        step: Grid spacing; divides t_max
        h_sequence: Decreasing steps, each a multiple of `step`
        t_probes: Positive probe points
        k_max: Largest lattice index used by recovery
        tolerances: Verdict thresholds
        report: Path of the JSON report
        traces: Directory for trace CSVs, or None
    """

    distributions: List[DistributionSpec]
    t_max: float = DEFAULT_T_MAX
    step: float = DEFAULT_STEP
    h_sequence: List[float] = field(default_factory=lambda: default_h_sequence(DEFAULT_STEP))
    t_probes: List[float] = field(default_factory=lambda: list(DEFAULT_PROBES))
    k_max: int = DEFAULT_K_MAX
    tolerances: Tolerances = field(default_factory=Tolerances)
    report: str = DEFAULT_REPORT
    traces: Optional[str] = None

    def settings(self) -> Dict[str, Any]:
        """Numerical settings echoed into the report."""
        return {
            "t_max": self.t_max,
            "step": self.step,
            "h_sequence": list(self.h_sequence),
            "t_probes": list(self.t_probes),
            "k_max": self.k_max,
        }


def parse_number(value: Any, field_name: str) -> float:
    """
    Parse a JSON number or a multiple of pi written as "pi", "2*pi",
    "pi/512" or "3*pi/4".
    """
    if isinstance(value, bool):
        raise ConfigInvalid(field_name, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        number = float(value)
    elif isinstance(value, str):
        match = _PI_EXPRESSION.match(value)
        try:
            if match:
                coef = float(match.group("coef") or 1.0)
                div = float(match.group("div") or 1.0)
                number = coef * math.pi / div
            else:
                number = float(value)
        except (ValueError, ZeroDivisionError):
            raise ConfigInvalid(field_name, f"cannot parse {value!r} as a number")
    else:
        raise ConfigInvalid(field_name, f"expected a number, got {type(value).__name__}")
    if not math.isfinite(number):
        raise ConfigInvalid(field_name, f"must be finite, got {value!r}")
    return number


def _positive(value: Any, field_name: str) -> float:
    number = parse_number(value, field_name)
    if not number > 0:
        raise ConfigInvalid(field_name, f"must be positive, got {value!r}")
    return number


def _require(spec: Dict[str, Any], key: str, field_name: str) -> Any:
    if key not in spec:
        raise ConfigInvalid(f"{field_name}.{key}", "is required")
    return spec[key]


def _atom_list(raw: Any, field_name: str) -> List[tuple]:
    if not isinstance(raw, list):
        raise ConfigInvalid(field_name, "expected a list of [x, mass] pairs")
    atoms = []
    for i, item in enumerate(raw):
        item_field = f"{field_name}[{i}]"
        if isinstance(item, dict):
            item = [item.get("x"), item.get("mass")]
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ConfigInvalid(item_field, "expected [x, mass]")
        atoms.append((parse_number(item[0], item_field), parse_number(item[1], item_field)))
    return atoms


def read_pmf_csv(path: Path, field_name: str) -> List[tuple]:
    """
    Read (x, mass) atoms from a CSV file with columns x and mass.

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigInvalid: If the file cannot be parsed or lacks the columns
    """
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ConfigInvalid(field_name, f"CSV parsing error in '{path}': {e}")

    missing = {"x", "mass"} - set(frame.columns)
    if missing:
        raise ConfigInvalid(field_name, f"CSV '{path}' lacks column(s) {sorted(missing)}")
    if frame.empty:
        raise ConfigInvalid(field_name, f"CSV '{path}' contains no data rows")
    try:
        values = frame[["x", "mass"]].astype(float).to_numpy()
    except ValueError as e:
        raise ConfigInvalid(field_name, f"non-numeric entry in '{path}': {e}")
    return [(float(x), float(m)) for x, m in values]


def build_cf(spec: Any, field_name: str, base_dir: Path) -> CharFn:
    """Turn one distribution spec (a dict with a `kind`) into a CharFn."""
    if not isinstance(spec, dict):
        raise ConfigInvalid(field_name, "expected an object with a 'kind'")
    kind = spec.get("kind")

    try:
        if kind == "degenerate":
            return Degenerate(parse_number(_require(spec, "a", field_name), f"{field_name}.a"))
        if kind == "gaussian":
            return Gaussian(
                parse_number(spec.get("mean", 0.0), f"{field_name}.mean"),
                parse_number(_require(spec, "variance", field_name), f"{field_name}.variance"),
            )
        if kind == "poisson":
            return Poisson(parse_number(_require(spec, "rate", field_name), f"{field_name}.rate"))
        if kind == "bernoulli":
            return DiscretePMF.bernoulli(parse_number(_require(spec, "p", field_name), f"{field_name}.p"))
        if kind == "pmf":
            if "path" in spec:
                atoms = read_pmf_csv(base_dir / str(spec["path"]), f"{field_name}.path")
            else:
                atoms = _atom_list(_require(spec, "atoms", field_name), f"{field_name}.atoms")
            return DiscretePMF(tuple(atoms))
        if kind == "convolution":
            components = _require(spec, "components", field_name)
            if not isinstance(components, list) or not components:
                raise ConfigInvalid(f"{field_name}.components", "expected a nonempty list")
            return Convolution(tuple(
                build_cf(c, f"{field_name}.components[{i}]", base_dir)
                for i, c in enumerate(components)
            ))
        if kind == "scaled_shift":
            base = build_cf(_require(spec, "base", field_name), f"{field_name}.base", base_dir)
            return ScaledShift(
                base,
                parse_number(spec.get("scale", 1.0), f"{field_name}.scale"),
                parse_number(spec.get("shift", 0.0), f"{field_name}.shift"),
            )
        if kind == "levy_khinchine":
            return LevyKhinchineCF(_build_pair(spec, field_name))
    except ConfigInvalid:
        raise
    except ValueError as e:
        raise ConfigInvalid(field_name, str(e))

    raise ConfigInvalid(f"{field_name}.kind", f"unknown distribution kind {kind!r}")


def _build_pair(spec: Dict[str, Any], field_name: str) -> SpectralPair:
    gamma = parse_number(spec.get("gamma", 0.0), f"{field_name}.gamma")
    atoms = _atom_list(spec.get("atoms", []), f"{field_name}.atoms")
    density = None
    raw = spec.get("density")
    if raw is not None:
        density_field = f"{field_name}.density"
        if not isinstance(raw, dict):
            raise ConfigInvalid(density_field, "expected an object")
        values = _require(raw, "values", density_field)
        if not isinstance(values, list):
            raise ConfigInvalid(f"{density_field}.values", "expected a list of numbers")
        density = Density(
            parse_number(_require(raw, "grid_min", density_field), f"{density_field}.grid_min"),
            _positive(_require(raw, "grid_step", density_field), f"{density_field}.grid_step"),
            np.array([parse_number(v, f"{density_field}.values") for v in values]),
        )
    return SpectralPair(gamma, SpectralFunction.from_atoms(atoms, density))


def _is_multiple(value: float, step: float) -> bool:
    ratio = value / step
    return round(ratio) >= 1 and abs(ratio - round(ratio)) <= _GRID_TOL * max(1.0, ratio)


def _h_sequence(raw: Any, step: float) -> List[float]:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigInvalid("h_sequence", "expected an object with h0, ratio, count")
    ratio = parse_number(raw.get("ratio", DEFAULT_RATIO), "h_sequence.ratio")
    if not 0 < ratio < 1:
        raise ConfigInvalid("h_sequence.ratio", f"must lie in (0, 1), got {ratio}")
    count = raw.get("count", DEFAULT_COUNT)
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        raise ConfigInvalid("h_sequence.count", f"must be a positive integer, got {count!r}")

    h0 = _positive(raw["h0"], "h_sequence.h0") if "h0" in raw else DEFAULT_H0
    sequence = default_h_sequence(step, h0, ratio, count)
    if abs(sequence[0] - h0) > 1e-9 * h0:
        logger.info("h_0 = %.17g rounded to %.17g to stay on the grid", h0, sequence[0])

    for l, h in enumerate(sequence):
        if not _is_multiple(h, step):
            raise ConfigInvalid("h_sequence",
                                f"h_{l} = {h:.17g} is not a multiple of the grid step {step:.17g}")
    return sequence


def _tolerances(raw: Any) -> Tolerances:
    if raw is None:
        return Tolerances()
    if not isinstance(raw, dict):
        raise ConfigInvalid("tolerances", "expected an object")
    unknown = set(raw) - set(Tolerances().to_dict())
    if unknown:
        raise ConfigInvalid("tolerances", f"unknown tolerance(s) {sorted(unknown)}")
    return Tolerances(**{key: _positive(value, f"tolerances.{key}") for key, value in raw.items()})


def parse_probes(raw: Any, field_name: str = "t_probes") -> List[float]:
    """Parse a probe list from JSON or from a comma-separated string."""
    if isinstance(raw, str):
        raw = [item for item in raw.split(",") if item.strip()]
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ConfigInvalid(field_name, "expected a nonempty list of positive numbers")
    return [_positive(value, field_name) for value in raw]


def validate_config(data: Any, base_dir: Path) -> AnalysisConfig:
    """
    Validate a parsed JSON config and build the AnalysisConfig.

    Raises:
        ConfigInvalid: On the first offending field
    """
    if not isinstance(data, dict):
        raise ConfigInvalid("<root>", f"expected a JSON object, got {type(data).__name__}")

    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigInvalid("schema_version", f"unsupported version {version!r}; expected {SCHEMA_VERSION}")

    raw_distributions = data.get("distributions")
    if not isinstance(raw_distributions, list) or not raw_distributions:
        raise ConfigInvalid("distributions", "expected a nonempty list")
    distributions = []
    seen = set()
    for i, item in enumerate(raw_distributions):
        item_field = f"distributions[{i}]"
        if not isinstance(item, dict):
            raise ConfigInvalid(item_field, "expected an object with 'name' and 'spec'")
        name = item.get("name")
        if not isinstance(name, str) or not name.strip():
            raise ConfigInvalid(f"{item_field}.name", "must be a nonempty string")
        if name in seen:
            raise ConfigInvalid(f"{item_field}.name", f"duplicate name {name!r}")
        seen.add(name)
        cf = build_cf(_require(item, "spec", item_field), f"{item_field}.spec", base_dir)
        distributions.append(DistributionSpec(name, cf))

    grid = data.get("grid") or {}
    if not isinstance(grid, dict):
        raise ConfigInvalid("grid", "expected an object with t_max and step")
    t_max = _positive(grid.get("t_max", DEFAULT_T_MAX), "grid.t_max")
    step = _positive(grid.get("step", DEFAULT_STEP), "grid.step")
    if not _is_multiple(t_max, step):
        raise ConfigInvalid("grid.step", f"step {step:.17g} does not divide t_max {t_max:.17g}")

    h_sequence = _h_sequence(data.get("h_sequence"), step)
    t_probes = parse_probes(data.get("t_probes", list(DEFAULT_PROBES)))
    if max(t_probes) + h_sequence[0] > t_max * (1.0 + _GRID_TOL):
        raise ConfigInvalid("t_probes",
                            f"probe {max(t_probes)} plus h_0 = {h_sequence[0]:.6g} "
                            f"exceeds t_max {t_max:.6g}")

    k_max = data.get("k_max", DEFAULT_K_MAX)
    if isinstance(k_max, bool) or not isinstance(k_max, int) or k_max < 1:
        raise ConfigInvalid("k_max", f"must be a positive integer, got {k_max!r}")

    outputs = data.get("outputs") or {}
    if not isinstance(outputs, dict):
        raise ConfigInvalid("outputs", "expected an object")
    report = outputs.get("report", DEFAULT_REPORT)
    if not isinstance(report, str) or not report:
        raise ConfigInvalid("outputs.report", "must be a nonempty path string")
    traces = outputs.get("traces")
    if traces is not None and not isinstance(traces, str):
        raise ConfigInvalid("outputs.traces", "must be a directory path string or null")

    return AnalysisConfig(
        distributions=distributions,
        t_max=t_max,
        step=step,
        h_sequence=h_sequence,
        t_probes=t_probes,
        k_max=k_max,
        tolerances=_tolerances(data.get("tolerances")),
        report=report,
        traces=traces,
    )


def read_config(path: str) -> AnalysisConfig:
    """
    Read and validate a JSON analysis config.

    Args:
        path: Path to the config file; PMF CSV paths inside it are
            resolved relative to its directory

    Returns:
        AnalysisConfig

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigInvalid: If the JSON is malformed or a field is invalid
        OSError: If the file cannot be read
    """
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"File not found: {path}")

    try:
        with open(file_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigInvalid("<root>", f"JSON parsing error at line {e.lineno}, column {e.colno}: {e.msg}")
    except UnicodeDecodeError as e:
        raise ConfigInvalid("<root>", f"JSON encoding error: {e}. File must be UTF-8 encoded.")

    return validate_config(data, file_path.parent)


def with_probes(config: AnalysisConfig, probes: Sequence[float]) -> AnalysisConfig:
    """Copy of `config` with the probe list replaced and revalidated."""
    if max(probes) + config.h_sequence[0] > config.t_max * (1.0 + _GRID_TOL):
        raise ConfigInvalid("--probes", f"probe {max(probes)} does not fit in t_max {config.t_max:.6g}")
    return replace(config, t_probes=list(probes))
