"""Line-oriented experiment configuration.

The format is flat ``key = value`` with dotted keys for nesting and ``#``
comments, e.g.::

    experiment = example_2d_exact
    measure.kind = atoms
    measure.atoms = 0.2:3.0
    delta = 0.5
    horizon = 200
    n_paths = 100
    master_seed = 12345

Unknown keys, duplicate keys, type mismatches, and missing required fields
are rejected with the key and line number.
"""

import math
from dataclasses import dataclass, fields

from .errors import ParseError
from .measures import LevyMeasure

EXPERIMENTS = (
    "example_2d_exact",
    "example_2d_euler",
    "stable_1d",
    "doleans_1d",
    "flag_convergence",
    "backward_spectrum",
)

MEASURE_KINDS = ("none", "atoms", "power_law")


def _parse_atoms(text):
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        loc, _, rate = item.partition(":")
        pairs.append((float(loc), float(rate)))
    if not pairs:
        raise ValueError("empty atom list")
    return tuple(pairs)


@dataclass
class ExperimentConfig:
    """Validated experiment description; see the module docstring for the
    on-disk schema."""

    experiment: str
    measure_kind: str = "none"
    measure_atoms: tuple = ()
    measure_alpha: float = 1.5
    measure_c: float = 1.0
    measure_cutoff: float = 0.0       # 0 -> use delta
    delta: float = 0.5
    drift: float = 0.0                # 1d experiments
    horizon: float = 200.0
    dt: float = 0.1
    dt_int: float = 0.01
    between_jump_scheme: str = "euler"
    renorm_step: float = 1.0
    n_paths: int = 100
    master_seed: int = 12345
    group_tol: float = 0.0            # 0 -> 10/horizon
    threads: int = 0                  # 0 -> LEVY_MET_THREADS or serial
    output_dir: str = "out"
    frame_angle: float = 0.7
    fit_t_min: float = 10.0
    fit_t_max: float = 100.0
    fit_points: int = 10
    halvings: int = 4
    tol_spectrum_abs: float = 0.05
    tol_se_mult: float = 3.0
    tol_angle: float = 1e-3
    tol_residual: float = 1e-9
    tol_rel_exact: float = 1e-10
    tol_ratio_lo: float = 1.7
    tol_ratio_hi: float = 2.3
    tol_slope_slack: float = 0.5

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ParseError(f"unknown experiment {self.experiment!r}; "
                             f"choose one of {', '.join(EXPERIMENTS)}")
        if self.measure_kind not in MEASURE_KINDS:
            raise ParseError(f"measure.kind must be one of {MEASURE_KINDS}")
        if self.measure_kind == "atoms" and not self.measure_atoms:
            raise ParseError("measure.kind = atoms requires measure.atoms")
        if self.between_jump_scheme not in ("euler", "expm"):
            raise ParseError("between_jump_scheme must be 'euler' or 'expm'")
        if self.n_paths < 1:
            raise ParseError("n_paths must be >= 1")
        for name in ("delta", "horizon", "dt", "dt_int", "renorm_step"):
            if getattr(self, name) <= 0.0:
                raise ParseError(f"{name} must be > 0")
        for name in ("group_tol", "threads", "frame_angle"):
            if getattr(self, name) < 0:
                raise ParseError(f"{name} must be >= 0")
        if self.halvings < 1:
            raise ParseError("halvings must be >= 1")
        if self.fit_points < 2:
            raise ParseError("fit_points must be >= 2")
        if not self.fit_t_min < self.fit_t_max:
            raise ParseError("fit_t_min must be < fit_t_max")
        if self.experiment == "flag_convergence" and self.fit_t_max > self.horizon:
            raise ParseError("fit_t_max must not exceed horizon")
        if self.experiment == "example_2d_euler" and self.horizon > 100.0:
            raise ParseError("example_2d_euler needs horizon <= 100 "
                             "(plain matrices overflow past that)")

    def build_measure(self):
        if self.measure_kind == "none":
            return LevyMeasure.empty()
        if self.measure_kind == "atoms":
            return LevyMeasure.from_atoms(self.measure_atoms)
        cutoff = self.measure_cutoff if self.measure_cutoff > 0.0 else self.delta
        return LevyMeasure.power_law(self.measure_alpha, self.measure_c, cutoff)

    @property
    def effective_group_tol(self):
        return self.group_tol if self.group_tol > 0.0 else 10.0 / self.horizon

    def echo(self):
        """Canonical config text (round-trips through parse_config)."""
        lines = [f"experiment = {self.experiment}",
                 f"measure.kind = {self.measure_kind}"]
        if self.measure_kind == "atoms":
            atoms = ", ".join(f"{u}:{r}" for u, r in self.measure_atoms)
            lines.append(f"measure.atoms = {atoms}")
        if self.measure_kind == "power_law":
            lines += [f"measure.alpha = {self.measure_alpha}",
                      f"measure.c = {self.measure_c}",
                      f"measure.cutoff = {self.measure_cutoff}"]
        lines += [
            f"delta = {self.delta}",
            f"drift = {self.drift}",
            f"horizon = {self.horizon}",
            f"dt = {self.dt}",
            f"dt_int = {self.dt_int}",
            f"between_jump_scheme = {self.between_jump_scheme}",
            f"renorm_step = {self.renorm_step}",
            f"n_paths = {self.n_paths}",
            f"master_seed = {self.master_seed}",
            f"group_tol = {self.group_tol}",
            f"threads = {self.threads}",
            f"output_dir = {self.output_dir}",
            f"frame_angle = {self.frame_angle}",
            f"fit_t_min = {self.fit_t_min}",
            f"fit_t_max = {self.fit_t_max}",
            f"fit_points = {self.fit_points}",
            f"halvings = {self.halvings}",
            f"tol.spectrum_abs = {self.tol_spectrum_abs}",
            f"tol.se_mult = {self.tol_se_mult}",
            f"tol.angle = {self.tol_angle}",
            f"tol.residual = {self.tol_residual}",
            f"tol.rel_exact = {self.tol_rel_exact}",
            f"tol.ratio_lo = {self.tol_ratio_lo}",
            f"tol.ratio_hi = {self.tol_ratio_hi}",
            f"tol.slope_slack = {self.tol_slope_slack}",
        ]
        return "\n".join(lines) + "\n"


_KEY_TYPES = {
    "experiment": str,
    "measure.kind": str,
    "measure.atoms": _parse_atoms,
    "measure.alpha": float,
    "measure.c": float,
    "measure.cutoff": float,
    "delta": float,
    "drift": float,
    "horizon": float,
    "dt": float,
    "dt_int": float,
    "between_jump_scheme": str,
    "renorm_step": float,
    "n_paths": int,
    "master_seed": int,
    "group_tol": float,
    "threads": int,
    "output_dir": str,
    "frame_angle": float,
    "fit_t_min": float,
    "fit_t_max": float,
    "fit_points": int,
    "halvings": int,
    "tol.spectrum_abs": float,
    "tol.se_mult": float,
    "tol.angle": float,
    "tol.rel_exact": float,
    "tol.residual": float,
    "tol.ratio_lo": float,
    "tol.ratio_hi": float,
    "tol.slope_slack": float,
}


def _attr_name(key):
    return key.replace("tol.", "tol_").replace("measure.", "measure_")


def parse_config(text):
    """Parse config text into a validated :class:`ExperimentConfig`."""
    values = {}
    seen = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got "
                             f"{rawline.strip()!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KEY_TYPES:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ParseError(f"duplicate key {key!r} (lines {seen[key]} and "
                             f"{lineno})")
        seen[key] = lineno
        conv = _KEY_TYPES[key]
        try:
            if conv is int:
                value = int(raw)
            elif conv is float:
                value = float(raw)
                if not math.isfinite(value):
                    raise ValueError("non-finite value")
            elif conv is str:
                value = raw
            else:
                value = conv(raw)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad value for {key!r}: {exc}")
        values[_attr_name(key)] = value
    if "experiment" not in values:
        raise ParseError("missing required key 'experiment'")
    known = {f.name for f in fields(ExperimentConfig)}
    assert set(values) <= known
    return ExperimentConfig(**values)
