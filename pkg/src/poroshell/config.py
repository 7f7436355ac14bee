"""Run configuration: flat INI-style key/value files with sections.

Grammar (configparser dialect, ``key = value``):

    [chart]
    kind = cylinder | plate | wavy | file
    radius = 1.1          ; cylinder: radius in units of the length scale
    angle = 2.0           ; cylinder: angular extent, strictly inside (0, 2*pi)
    axial_length = 1.0    ; cylinder: axial extent in scaled units
    width = 1.0           ; plate: sides of the parameter rectangle
    height = 1.0
    seed = 0              ; wavy benchmark chart
    amplitude = 0.15
    path = chart.txt      ; file: rows "y1 y2 X1 X2 X3" on a rectangular grid

    [material]            ; dimensional (SI); the run itself is dimensionless
    mu = 1e9
    lambda = 1e9
    alpha = 0.9
    beta_g = 5e-10
    permeability = 1e-14
    viscosity = 1e-3
    length = 1.0
    thickness = 0.01
    displacement = 1.0

    [discretization]
    n_elems = 16          ; per side (plate/wavy/file) or along the arc (cylinder)
    n_thickness = 33
    dt = 1e-3
    t_end = 0.1
    integrator = implicit_euler | crank_nicolson
    backend = reduced | multiplier
    quad_order = 0        ; 0 = backend default

    [loads]               ; zero data at t = 0 is required
    traction = zero | ramp <a1> <a2> <a3> | csv <path>
    flux = zero | ramp <rate> | csv <path>

    [output]
    directory = out
    cadence = 100         ; pressure/stress snapshots every N steps (final always written)

    [oracle]
    check = false
    modes = 200

Traction components are covariant; on the cylinder chart (y1 = axial, y2 =
angle) they relate to physical components by (P_z, P_t/R, -P_r).  CSV load
files carry a header row and columns ``t,v`` (flux) or ``t,p1,p2,p3``
(tractions) with linear interpolation between samples.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ConfigError", "RunConfig", "load_config"]


class ConfigError(ValueError):
    """Invalid run configuration; ``errors`` lists every failure found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.errors))


_CHART_KINDS = ("plate", "cylinder", "wavy", "file")
_BACKENDS = ("reduced", "multiplier")
_INTEGRATORS = ("implicit_euler", "crank_nicolson")


@dataclass
class RunConfig:
    chart_kind: str = "plate"
    chart_params: dict = field(default_factory=dict)
    material: dict = field(default_factory=dict)
    n_elems: int = 8
    n_thickness: int = 17
    dt: float = 1e-3
    t_end: float = 0.1
    integrator: str = "implicit_euler"
    backend: str = "reduced"
    quad_order: int = 0
    traction_spec: str = "zero"
    flux_spec: str = "zero"
    output_dir: str = "out"
    cadence: int = 100
    oracle_check: bool = False
    oracle_modes: int = 200
    source_path: str | None = None

    def validate(self):
        """Collect every validation failure; raise ConfigError listing all."""
        errs = []
        if self.chart_kind not in _CHART_KINDS:
            errs.append(f"chart kind must be one of {_CHART_KINDS}, got {self.chart_kind!r}")
        if self.chart_kind == "cylinder":
            r = self.chart_params.get("radius", 0.0)
            a = self.chart_params.get("angle", 0.0)
            if r <= 0:
                errs.append(f"cylinder radius must be positive, got {r}")
            if self.chart_params.get("axial_length", 1.0) <= 0:
                errs.append("cylinder axial length must be positive")
            if not 0 < a < 2 * math.pi:
                errs.append(
                    f"cylinder angle must lie strictly inside (0, 2*pi), got {a}: "
                    "the fully clamped closed cylinder has no inextensional bending "
                    "(generalized membrane regime)")
        if self.chart_kind == "file":
            path = self.chart_params.get("path", "")
            if not path or not os.path.exists(path):
                errs.append(f"chart table {path!r} does not exist")
        if self.chart_kind in ("wavy", "file") and self.backend == "reduced":
            errs.append(f"the reduced backend has no closed-form constrained basis on "
                        f"{self.chart_kind!r} charts; use backend = multiplier")
        if self.chart_kind == "cylinder" and self.backend == "multiplier":
            errs.append("the multiplier backend clamps the whole rectangle boundary, "
                        "which over-constrains the cylinder; use backend = reduced")

        required = ("mu", "lambda", "alpha", "beta_g", "permeability", "viscosity",
                    "length", "thickness")
        missing = [k for k in required if k not in self.material]
        if missing:
            errs.append(f"material section is missing {missing}")
        else:
            from .material import MaterialError, MaterialParams

            try:
                self.material_params()
            except MaterialError as exc:
                errs.append(f"material: {exc}")

        if self.n_elems < 1:
            errs.append(f"n_elems must be >= 1, got {self.n_elems}")
        if self.n_thickness < 3:
            errs.append(f"n_thickness must be >= 3, got {self.n_thickness}")
        if self.dt <= 0:
            errs.append(f"dt must be positive, got {self.dt}")
        if self.t_end < self.dt:
            errs.append(f"t_end ({self.t_end}) must be at least dt ({self.dt})")
        elif self.dt > 0:
            n = round(self.t_end / self.dt)
            if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
                errs.append(f"t_end ({self.t_end}) is not a multiple of dt ({self.dt})")
        if self.cadence < 1:
            errs.append(f"cadence must be >= 1, got {self.cadence}")
        if self.integrator not in _INTEGRATORS:
            errs.append(f"integrator must be one of {_INTEGRATORS}, got {self.integrator!r}")
        if self.backend not in _BACKENDS:
            errs.append(f"backend must be one of {_BACKENDS}, got {self.backend!r}")
        if self.oracle_modes < 1:
            errs.append(f"oracle modes must be >= 1, got {self.oracle_modes}")
        for name, spec in (("traction", self.traction_spec), ("flux", self.flux_spec)):
            err = _check_load_spec(name, spec)
            if err:
                errs.append(err)
            elif spec.split()[0] == "csv":
                errs.extend(_loads_from_specs(
                    self.traction_spec if name == "traction" else "zero",
                    self.flux_spec if name == "flux" else "zero",
                ).validate(np.array([[0.5, 0.5]])))
        if errs:
            raise ConfigError(errs)
        return self

    def material_params(self):
        from .material import MaterialParams

        m = self.material
        return MaterialParams(mu=m["mu"], lam=m["lambda"], alpha=m["alpha"],
                              beta_g=m["beta_g"], permeability=m["permeability"],
                              viscosity=m["viscosity"], length=m["length"],
                              thickness=m["thickness"],
                              displacement=m.get("displacement", 1.0))


def _check_load_spec(name, spec):
    parts = spec.split()
    if not parts:
        return f"{name} spec is empty"
    head = parts[0]
    if head == "zero":
        return None
    if head == "ramp":
        want = 3 if name == "traction" else 1
        if len(parts) != want + 1:
            return f"{name} ramp needs {want} coefficient(s), got {spec!r}"
        try:
            [float(x) for x in parts[1:]]
        except ValueError:
            return f"{name} ramp has non-numeric coefficients: {spec!r}"
        return None
    if head == "csv":
        if len(parts) != 2:
            return f"{name} csv spec needs a path, got {spec!r}"
        if not os.path.exists(parts[1]):
            return f"{name} csv file {parts[1]!r} does not exist"
        return None
    return f"unknown {name} spec {spec!r} (use zero | ramp | csv)"


def _loads_from_specs(traction_spec, flux_spec):
    from .solver import FluxTerm, LoadProgram, TimeSeries, TractionTerm

    tractions, fluxes = [], []
    parts = traction_spec.split()
    if parts[0] == "ramp":
        amps = np.array([float(x) for x in parts[1:4]])
        tractions.append(TractionTerm(time=lambda t: t, shape=amps))
    elif parts[0] == "csv":
        data = np.loadtxt(parts[1], delimiter=",", skiprows=1, ndmin=2)
        for c in range(3):
            e = np.zeros(3)
            e[c] = 1.0
            tractions.append(TractionTerm(time=TimeSeries(data[:, 0], data[:, 1 + c]),
                                          shape=e))
    parts = flux_spec.split()
    if parts[0] == "ramp":
        rate = float(parts[1])
        fluxes.append(FluxTerm(time=lambda t: rate * t, shape=1.0))
    elif parts[0] == "csv":
        data = np.loadtxt(parts[1], delimiter=",", skiprows=1, ndmin=2)
        fluxes.append(FluxTerm(time=TimeSeries(data[:, 0], data[:, 1]), shape=1.0))
    return LoadProgram(tractions=tractions, fluxes=fluxes)


def load_config(path):
    """Parse an INI run configuration (unvalidated; call .validate())."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError([f"config file {path!r} not found or unreadable"])
    cfg = RunConfig(source_path=str(path))

    if parser.has_section("chart"):
        sec = parser["chart"]
        cfg.chart_kind = sec.get("kind", cfg.chart_kind).strip()
        for key in ("radius", "angle", "axial_length", "width", "height", "amplitude"):
            if key in sec:
                cfg.chart_params[key] = sec.getfloat(key)
        if "seed" in sec:
            cfg.chart_params["seed"] = sec.getint("seed")
        if "path" in sec:
            cfg.chart_params["path"] = sec.get("path").strip()
    if parser.has_section("material"):
        for key, val in parser["material"].items():
            try:
                cfg.material[key] = float(val)
            except ValueError:
                raise ConfigError([f"material {key} is not a number: {val!r}"])
    if parser.has_section("discretization"):
        sec = parser["discretization"]
        cfg.n_elems = sec.getint("n_elems", cfg.n_elems)
        cfg.n_thickness = sec.getint("n_thickness", cfg.n_thickness)
        cfg.dt = sec.getfloat("dt", cfg.dt)
        cfg.t_end = sec.getfloat("t_end", cfg.t_end)
        cfg.integrator = sec.get("integrator", cfg.integrator).strip()
        cfg.backend = sec.get("backend", cfg.backend).strip()
        cfg.quad_order = sec.getint("quad_order", cfg.quad_order)
    if parser.has_section("loads"):
        sec = parser["loads"]
        cfg.traction_spec = sec.get("traction", cfg.traction_spec).strip()
        cfg.flux_spec = sec.get("flux", cfg.flux_spec).strip()
    if parser.has_section("output"):
        sec = parser["output"]
        cfg.output_dir = sec.get("directory", cfg.output_dir).strip()
        cfg.cadence = sec.getint("cadence", cfg.cadence)
    if parser.has_section("oracle"):
        sec = parser["oracle"]
        cfg.oracle_check = sec.getboolean("check", cfg.oracle_check)
        cfg.oracle_modes = sec.getint("modes", cfg.oracle_modes)
    return cfg


def build_loads(cfg: RunConfig):
    return _loads_from_specs(cfg.traction_spec, cfg.flux_spec)
