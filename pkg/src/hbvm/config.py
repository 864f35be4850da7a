"""Run configuration, validation, and experiment presets."""

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass

from .errors import ValidationError

PROBLEMS = ("linear-wave", "semilinear-wave")
STEPPERS = ("linear", "simplified-newton", "newton-krylov")
MATRIX_SOLVERS = ("poly", "extended")

OUTPUT_ROOT_ENV = "HBVM_OUTPUT_ROOT"


@dataclass
class RunConfig:
    """Fully-resolved configuration of a single integration run."""

    problem: str = "linear-wave"
    N: int = 256
    L: float = 1.0
    T: float = 1.0
    h0: float = None          # resolved to 1/N when omitted
    h_min: float = None       # resolved to h0 / 2**10
    h_max: float = None       # resolved to h0 (keeps the per-step regime)
    s: int = 2
    k: int = 3
    stepper: str = None       # resolved from the problem kind
    matrix_solver: str = "extended"
    matrix_tol: float = 1e-10
    newton_abs: float = 1e-8
    newton_rel: float = 1e-10
    max_newton: int = 100
    gamma: float = 0.9
    eta_max: float = 0.9
    snapshot_stride: int = 0
    output_dir: str = None
    seed: int = 0             # used by randomized tests only

    def resolved(self):
        """Copy with every defaultable field filled in."""
        cfg = dataclasses.replace(self)
        if cfg.h0 is None:
            cfg.h0 = 1.0 / cfg.N if cfg.N else None
        if cfg.h_min is None and cfg.h0 is not None:
            cfg.h_min = cfg.h0 / 2.0**10
        if cfg.h_max is None and cfg.h0 is not None:
            cfg.h_max = cfg.h0
        if cfg.stepper is None:
            cfg.stepper = "linear" if cfg.problem == "linear-wave" else "newton-krylov"
        if cfg.output_dir is None:
            root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
            cfg.output_dir = os.path.join(root, f"{cfg.problem}-{cfg.digest()}")
        return cfg

    def digest(self):
        """Short stable hash of everything but the output location."""
        payload = dataclasses.asdict(self)
        payload.pop("output_dir", None)
        blob = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:10]

    def violations(self):
        out = []
        if self.problem not in PROBLEMS:
            out.append(f"problem: must be one of {PROBLEMS}, got {self.problem!r}")
        if not isinstance(self.N, int) or self.N < 3:
            out.append(f"N: must be an integer >= 3, got {self.N!r}")
        if not self.L > 0:
            out.append(f"L: must be positive, got {self.L!r}")
        if not self.T > 0:
            out.append(f"T: must be positive, got {self.T!r}")
        if not (isinstance(self.s, int) and self.s >= 1):
            out.append(f"s: must be an integer >= 1, got {self.s!r}")
        if not (isinstance(self.k, int) and self.k >= self.s):
            out.append(f"k: must be an integer >= s={self.s}, got {self.k!r}")
        if self.h0 is not None and not self.h0 > 0:
            out.append(f"h0: must be positive, got {self.h0!r}")
        if self.h_min is not None and self.h0 is not None and not (0 < self.h_min <= self.h0):
            out.append(f"h_min: must satisfy 0 < h_min <= h0, got {self.h_min!r}")
        if self.h_max is not None and self.h0 is not None and not (self.h0 <= self.h_max):
            out.append(f"h_max: must satisfy h0 <= h_max, got {self.h_max!r}")
        if self.stepper is not None and self.stepper not in STEPPERS:
            out.append(f"stepper: must be one of {STEPPERS}, got {self.stepper!r}")
        if self.stepper == "linear" and self.problem == "semilinear-wave":
            out.append("stepper: the linear stepper cannot integrate semilinear-wave")
        if self.matrix_solver not in MATRIX_SOLVERS:
            out.append(f"matrix_solver: must be one of {MATRIX_SOLVERS}, got {self.matrix_solver!r}")
        for name in ("matrix_tol", "newton_abs", "newton_rel"):
            value = getattr(self, name)
            if not value > 0:
                out.append(f"{name}: must be positive, got {value!r}")
        if not (isinstance(self.max_newton, int) and self.max_newton >= 1):
            out.append(f"max_newton: must be an integer >= 1, got {self.max_newton!r}")
        if not (0 < self.gamma <= 1):
            out.append(f"gamma: must lie in (0, 1], got {self.gamma!r}")
        if not (0 < self.eta_max < 1):
            out.append(f"eta_max: must lie in (0, 1), got {self.eta_max!r}")
        if not (isinstance(self.snapshot_stride, int) and self.snapshot_stride >= 0):
            out.append(f"snapshot_stride: must be an integer >= 0, got {self.snapshot_stride!r}")
        return out

    def validate(self):
        """Resolve defaults and check every invariant; all failures at once."""
        cfg = self.resolved()
        problems = cfg.violations()
        if problems:
            raise ValidationError(problems)
        return cfg

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError([f"{name}: unknown configuration field" for name in sorted(unknown)])
        return cls(**data)


#: grid presets reproducing the experiment layouts; ``base`` holds shared
#: fields and ``grid`` the swept axes (k_offset means k = s + offset).
SWEEP_PRESETS = {
    "paper-5.1": {
        "base": {
            "problem": "linear-wave",
            "L": 1.0,
            "T": 1.0,
            "stepper": "linear",
            "matrix_solver": "extended",
            "matrix_tol": 1e-10,
        },
        "grid": {
            "N": [2**j for j in range(9, 15)],
            "s": list(range(2, 11)),
            "k_offset": list(range(1, 11)),
        },
    },
}

RUN_PRESETS = {
    "paper-5.2-case1": {
        "problem": "semilinear-wave",
        "N": 1024,
        "L": 1.0,
        "T": 1.0,
        "s": 2,
        "k": 3,
        "stepper": "newton-krylov",
        "matrix_solver": "extended",
        "newton_abs": 1e-8,
        "newton_rel": 1e-10,
        "max_newton": 100,
    },
    "paper-5.2-case2": {
        "problem": "semilinear-wave",
        "N": 1024,
        "L": 1.0,
        "T": 1.0,
        "s": 3,
        "k": 6,
        "stepper": "newton-krylov",
        "matrix_solver": "extended",
        "newton_abs": 1e-8,
        "newton_rel": 1e-10,
        "max_newton": 100,
    },
}


def parse_config(path=None, preset=None, overrides=None):
    """Build a validated RunConfig from preset, file, and flag overrides.

    Precedence: preset fields < JSON file values < explicit flags.
    """
    data = {}
    if preset is not None:
        if preset in RUN_PRESETS:
            data.update(RUN_PRESETS[preset])
        elif preset in SWEEP_PRESETS:
            raise ValidationError([f"preset: {preset!r} is a sweep preset; use the sweep verb"])
        else:
            known = sorted([*RUN_PRESETS, *SWEEP_PRESETS])
            raise ValidationError([f"preset: unknown preset {preset!r} (known: {known})"])
    if path is not None:
        with open(path) as fh:
            data.update(json.load(fh))
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return RunConfig.from_dict(data).validate()


def sweep_cells(preset=None, path=None, overrides=None):
    """Expand a sweep preset or sweep-config file into per-cell RunConfigs.

    Every cell owns its output subdirectory ``N_<n>__s_<s>__k_<k>`` under
    the sweep root.  Flag overrides restrict an axis to a single value.
    """
    if preset is not None:
        if preset not in SWEEP_PRESETS:
            if preset in RUN_PRESETS:
                spec = {"base": dict(RUN_PRESETS[preset]), "grid": {}}
            else:
                known = sorted([*RUN_PRESETS, *SWEEP_PRESETS])
                raise ValidationError([f"preset: unknown preset {preset!r} (known: {known})"])
        else:
            spec = SWEEP_PRESETS[preset]
    elif path is not None:
        with open(path) as fh:
            spec = json.load(fh)
        if "base" not in spec or "grid" not in spec:
            raise ValidationError(['sweep config: must contain "base" and "grid" objects'])
    else:
        raise ValidationError(["sweep: needs a preset or a sweep-config file"])

    base = dict(spec["base"])
    grid = {key: list(values) for key, values in spec["grid"].items()}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    root = overrides.pop("output_dir", None) or base.get("output_dir") or os.path.join(
        os.environ.get(OUTPUT_ROOT_ENV, "runs"), preset or "sweep"
    )
    for key, value in overrides.items():
        if key in grid:
            grid[key] = [value]
        else:
            base[key] = value

    axes = {"N": grid.get("N", [base.get("N", RunConfig.N)]),
            "s": grid.get("s", [base.get("s", RunConfig.s)])}
    k_axis = grid.get("k")
    k_offsets = grid.get("k_offset")
    if "k" in overrides:
        # an explicit k pins the axis even when the grid sweeps offsets
        k_axis, k_offsets = [overrides["k"]], None
    cells = []
    for N in axes["N"]:
        for s in axes["s"]:
            ks = k_axis if k_axis else [s + off for off in (k_offsets or [base.get("k", s + 1) - s])]
            for k in ks:
                data = dict(base)
                data.pop("output_dir", None)
                data.update(N=N, s=s, k=k)
                data["h0"] = data.get("h0") or 1.0 / N
                data["output_dir"] = os.path.join(root, f"N_{N}__s_{s}__k_{k}")
                cells.append(RunConfig.from_dict(data).validate())
    return root, cells
