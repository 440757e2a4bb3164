"""Line-based ``key = value`` run configuration.

``#`` starts a comment, blank lines are ignored, keys are dot-namespaced and
every key may appear at most once. Numbers use a decimal point regardless of
locale. Unknown keys are errors.

Key table (``*`` marks required keys; ``-`` means "not set"):

====================== ============== ==================================================
key                    default        meaning
====================== ============== ==================================================
model.type             *              ``sh`` or ``pfc``
grid.dim               1              1 or 2
grid.topology          periodic       ``periodic`` or ``bounded``
grid.nx, grid.ny       * (ny in 2D)   node counts
grid.lx, grid.ly       -              box lengths (exclusive with ``grid.hx``/``grid.hy``)
grid.hx, grid.hy       -              node spacings
grid.x0, grid.y0       0              origin
params.lambda          *              ``lam > 0``
params.ell             *              ``ell > 0``
params.beta            * (sh)         viscosity ``beta > 0``
params.mobility        * (pfc)        ``M > 0``
params.g               0              quartic potential ``-(g/2) phi^2 + phi^4/4``
params.f               -              polynomial coefficients ``c0, c1, ...`` (replaces ``g``)
params.gamma           0              constant external microforce
params.source          0              constant species supply (pfc)
time.dt                *              step size
time.t_end             *              final time
time.stabilization     auto           splitting constant or ``auto``
ic.kind                constant       ``constant``, ``random``, ``mode`` or ``file``
ic.mean                0              background value
ic.amplitude           0              random half-width or mode amplitude
ic.seed                0              random seed
ic.rng                 pcg64          random generator algorithm
ic.kx, ic.ky           1, 0           mode wavevector
ic.path                -              snapshot path (``file``)
bc.<face>.kind         * (bounded)    ``natural``, ``essential``, ``mixed`` (sh);
                                      ``flux``, ``chempot``, ``mixedmass`` (pfc)
bc.<face>.<value>      0              ``xi_env``, ``sigma_env``, ``phi_env``, ``dphi_dn_env``,
                                      ``j_env``, ``mu_env``; ``a``, ``b``, ``c`` are * when used
output.dir             .              output directory
output.prefix          run            file name prefix
output.cadence         10             steps between diagnostic rows and snapshots
output.snapshots       true           write PFGT1 snapshots
output.csv             true           write the diagnostics CSV
output.pgm             false          write a PGM image of the final state
dispersion.k           -              comma-separated wavenumbers
dispersion.steps       1000           steps per mode
dispersion.amplitude   1e-4           initial mode amplitude
====================== ============== ==================================================

Faces are ``left``, ``right`` and, in 2D, ``bottom`` and ``top``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

from .boundary.closures import ChemPot, Essential, Flux, Mixed, MixedMass, Natural
from .constitutive import BulkPotential, PfcParams, ShParams
from .errors import ConfigError
from .evolution import RNG_ALGORITHMS, InitialCondition, SimConfig, check_commensurate
from .fields import Grid

FACES = ("left", "right", "bottom", "top")

_BC_KINDS = {
    "natural": (Natural, ("xi_env", "sigma_env"), (), "sh"),
    "essential": (Essential, ("phi_env", "dphi_dn_env"), (), "sh"),
    "mixed": (Mixed, ("phi_env", "dphi_dn_env"), ("a", "b"), "sh"),
    "flux": (Flux, ("j_env",), (), "pfc"),
    "chempot": (ChemPot, ("mu_env",), (), "pfc"),
    "mixedmass": (MixedMass, ("mu_env",), ("c",), "pfc"),
}
_BC_KIND_OF = {cls: name for name, (cls, _, _, _) in _BC_KINDS.items()}
_BC_VALUES = ("xi_env", "sigma_env", "phi_env", "dphi_dn_env", "j_env", "mu_env", "a", "b", "c")

_STATIC_KEYS = {
    "model.type",
    "grid.dim", "grid.topology", "grid.nx", "grid.ny", "grid.lx", "grid.ly", "grid.hx", "grid.hy", "grid.x0", "grid.y0",
    "params.lambda", "params.ell", "params.beta", "params.mobility", "params.g", "params.f", "params.gamma", "params.source",
    "time.dt", "time.t_end", "time.stabilization",
    "ic.kind", "ic.mean", "ic.amplitude", "ic.seed", "ic.rng", "ic.kx", "ic.ky", "ic.path",
    "output.dir", "output.prefix", "output.cadence", "output.snapshots", "output.csv", "output.pgm",
    "dispersion.k", "dispersion.steps", "dispersion.amplitude",
}  # fmt: skip

_LINE = re.compile(r"^\s*([A-Za-z0-9_.]+)\s*=\s*(.*?)\s*$")
_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_INTEGER = re.compile(r"^[+-]?\d+$")


def _known(key: str) -> bool:
    if key in _STATIC_KEYS:
        return True
    parts = key.split(".")
    return len(parts) == 3 and parts[0] == "bc" and parts[1] in FACES and (parts[2] == "kind" or parts[2] in _BC_VALUES)


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "."
    prefix: str = "run"
    snapshots: bool = True
    csv: bool = True
    pgm: bool = False


@dataclass(frozen=True)
class DispersionConfig:
    k: tuple[float, ...] = ()
    steps: int = 1000
    amplitude: float = 1e-4


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig
    output: OutputConfig = field(default_factory=OutputConfig)
    dispersion: DispersionConfig = field(default_factory=DispersionConfig)


class _Source:
    """Parsed ``key -> (value, line)`` with typed, line-aware accessors."""

    def __init__(self, text: str):
        self.entries: dict[str, tuple[str, int]] = {}
        self.used: set[str] = set()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0]
            if not line.strip():
                continue
            m = _LINE.match(line)
            if not m:
                raise ConfigError("", lineno, f"expected 'key = value', got {raw.strip()!r}")
            key, value = m.group(1), m.group(2)
            if not _known(key):
                raise ConfigError(key, lineno, "unknown key")
            if key in self.entries:
                raise ConfigError(key, lineno, f"duplicate key (first set on line {self.entries[key][1]})")
            if value == "":
                raise ConfigError(key, lineno, "empty value")
            self.entries[key] = (value, lineno)

    def has(self, key: str) -> bool:
        return key in self.entries

    def line(self, key: str) -> int | None:
        return self.entries[key][1] if key in self.entries else None

    def _raw(self, key: str, required: bool):
        if key not in self.entries:
            if required:
                raise ConfigError(key, None, "required key is missing")
            return None
        self.used.add(key)
        return self.entries[key]

    def text(self, key: str, default: str | None = None, required: bool = False, choices=None) -> str | None:
        got = self._raw(key, required)
        if got is None:
            return default
        value, line = got
        if choices is not None and value not in choices:
            raise ConfigError(key, line, f"must be one of {', '.join(choices)}; got {value!r}")
        return value

    def number(self, key: str, default: float | None = None, required: bool = False, check: Callable[[float], bool] | None = None, rule: str = "") -> float | None:
        got = self._raw(key, required)
        if got is None:
            return default
        value, line = got
        if not _NUMBER.match(value):
            raise ConfigError(key, line, f"not a decimal number: {value!r}")
        x = float(value)
        if check is not None and not check(x):
            raise ConfigError(key, line, rule or "value out of range")
        return x

    def integer(self, key: str, default: int | None = None, required: bool = False, check: Callable[[int], bool] | None = None, rule: str = "") -> int | None:
        got = self._raw(key, required)
        if got is None:
            return default
        value, line = got
        if not _INTEGER.match(value):
            raise ConfigError(key, line, f"not an integer: {value!r}")
        x = int(value)
        if check is not None and not check(x):
            raise ConfigError(key, line, rule or "value out of range")
        return x

    def boolean(self, key: str, default: bool) -> bool:
        value = self.text(key, None)
        if value is None:
            return default
        if value not in ("true", "false"):
            raise ConfigError(key, self.line(key), f"must be true or false; got {value!r}")
        return value == "true"

    def numbers(self, key: str) -> tuple[float, ...] | None:
        got = self._raw(key, False)
        if got is None:
            return None
        value, line = got
        items = [v.strip() for v in value.split(",")]
        if not all(_NUMBER.match(v) for v in items):
            raise ConfigError(key, line, f"expected comma-separated decimal numbers; got {value!r}")
        return tuple(float(v) for v in items)

    def forbid(self, key: str, reason: str) -> None:
        if key in self.entries:
            raise ConfigError(key, self.entries[key][1], reason)


def _positive(x) -> bool:
    return x > 0


def _grid(src: _Source) -> Grid:
    dim = src.integer("grid.dim", 1, check=lambda v: v in (1, 2), rule="must be 1 or 2")
    topology = src.text("grid.topology", "periodic", choices=("periodic", "bounded"))
    axes = ("x", "y")[:dim]
    if dim == 1:
        for key in ("grid.ny", "grid.ly", "grid.hy", "grid.y0"):
            src.forbid(key, "only valid when grid.dim = 2")
    n, h, origin = [], [], []
    for a in axes:
        na = src.integer(f"grid.n{a}", required=True, check=lambda v: v >= 8, rule="needs at least 8 nodes")
        if src.has(f"grid.l{a}") and src.has(f"grid.h{a}"):
            raise ConfigError(f"grid.h{a}", src.line(f"grid.h{a}"), f"give either grid.l{a} or grid.h{a}, not both")
        if src.has(f"grid.h{a}"):
            ha = src.number(f"grid.h{a}", check=_positive, rule="must be positive")
        else:
            la = src.number(f"grid.l{a}", required=True, check=_positive, rule="must be positive")
            ha = la / (na if topology == "periodic" else na - 1)
        n.append(na)
        h.append(ha)
        origin.append(src.number(f"grid.{a}0", 0.0))
    return Grid(dim, tuple(n), tuple(h), tuple(origin), topology)


def _params(src: _Source, model: str):
    lam = src.number("params.lambda", required=True, check=_positive, rule="must be positive")
    ell = src.number("params.ell", required=True, check=_positive, rule="must be positive")
    if src.has("params.f") and src.has("params.g"):
        raise ConfigError("params.f", src.line("params.f"), "give either params.f or params.g, not both")
    coeffs = src.numbers("params.f")
    if coeffs is not None:
        if len(coeffs) < 3:
            raise ConfigError("params.f", src.line("params.f"), "needs at least three coefficients")
        potential = BulkPotential(coeffs)
    else:
        potential = BulkPotential.quartic(src.number("params.g", 0.0))
    gamma = src.number("params.gamma", 0.0)
    if model == "sh":
        src.forbid("params.mobility", "not used by model sh")
        src.forbid("params.source", "not used by model sh")
        beta = src.number("params.beta", required=True, check=_positive, rule="must be positive")
        return ShParams(lam, ell, beta, potential, gamma)
    src.forbid("params.beta", "not used by model pfc")
    mobility = src.number("params.mobility", required=True, check=_positive, rule="must be positive")
    return PfcParams(lam, ell, mobility, potential, gamma, src.number("params.source", 0.0))


def _ic(src: _Source, grid: Grid) -> InitialCondition:
    kind = src.text("ic.kind", "constant", choices=("constant", "random", "mode", "file"))
    mean = src.number("ic.mean", 0.0)
    amplitude = src.number("ic.amplitude", 0.0, check=lambda v: v >= 0, rule="must be non-negative")
    seed = src.integer("ic.seed", 0, check=lambda v: v >= 0, rule="must be non-negative")
    rng = src.text("ic.rng", "pcg64", choices=RNG_ALGORITHMS)
    if grid.dim == 1:
        src.forbid("ic.ky", "only valid when grid.dim = 2")
    k = (src.number("ic.kx", 1.0),) + ((src.number("ic.ky", 0.0),) if grid.dim == 2 else ())
    path = src.text("ic.path")
    if kind == "file" and path is None:
        raise ConfigError("ic.path", None, "required when ic.kind = file")
    if kind == "mode" and grid.periodic:
        try:
            check_commensurate(grid, k)
        except ValueError as exc:
            raise ConfigError("ic.kx", src.line("ic.kx"), str(exc)) from None
    return InitialCondition(kind, mean, amplitude, seed, k, path, rng)


def _bcs(src: _Source, grid: Grid, model: str):
    faces = FACES[: 2 * grid.dim]
    present = [k for k in src.entries if k.startswith("bc.")]
    if grid.periodic:
        if present:
            raise ConfigError(present[0], src.line(present[0]), "boundary conditions need grid.topology = bounded")
        return None
    for key in present:
        if key.split(".")[1] not in faces:
            raise ConfigError(key, src.line(key), f"face not present in a {grid.dim}D grid")
    out = {}
    for face in faces:
        kinds = [k for k, v in _BC_KINDS.items() if v[3] == model]
        kind = src.text(f"bc.{face}.kind", required=True, choices=kinds)
        cls, values, coefficients, _ = _BC_KINDS[kind]
        allowed = set(values) | set(coefficients)
        for name in _BC_VALUES:
            if name not in allowed:
                src.forbid(f"bc.{face}.{name}", f"not used by a {kind} wall")
        kw = {name: src.number(f"bc.{face}.{name}", required=True, check=_positive, rule="must be positive") for name in coefficients}
        kw.update({name: src.number(f"bc.{face}.{name}", 0.0) for name in values})
        out[face] = cls(**kw)
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration, applying the default table."""
    src = _Source(text)
    model = src.text("model.type", required=True, choices=("sh", "pfc"))
    grid = _grid(src)
    params = _params(src, model)
    dt = src.number("time.dt", required=True, check=_positive, rule="must be positive")
    t_end = src.number("time.t_end", required=True, check=lambda v: v >= 0, rule="must be non-negative")
    stab_text = src.text("time.stabilization", "auto")
    if stab_text == "auto":
        stabilization = None
    else:
        if not _NUMBER.match(stab_text) or float(stab_text) < 0:
            raise ConfigError("time.stabilization", src.line("time.stabilization"), "must be 'auto' or a non-negative number")
        stabilization = float(stab_text)
    ic = _ic(src, grid)
    bcs = _bcs(src, grid, model)
    cadence = src.integer("output.cadence", 10, check=lambda v: v >= 1, rule="must be at least 1")
    output = OutputConfig(
        src.text("output.dir", "."),
        src.text("output.prefix", "run"),
        src.boolean("output.snapshots", True),
        src.boolean("output.csv", True),
        src.boolean("output.pgm", False),
    )
    dispersion = DispersionConfig(
        src.numbers("dispersion.k") or (),
        src.integer("dispersion.steps", 1000, check=lambda v: v >= 2, rule="needs at least 2 steps"),
        src.number("dispersion.amplitude", 1e-4, check=lambda v: 0 < v <= 1e-4, rule="must lie in (0, 1e-4]"),
    )
    try:
        sim = SimConfig(model, grid, params, dt, t_end, stabilization, ic, bcs, cadence)
    except ValueError as exc:
        raise ConfigError("", None, str(exc)) from None
    return RunConfig(sim, output, dispersion)


def _num(v: float) -> str:
    return repr(float(v))


def serialize_config(cfg: RunConfig) -> str:
    """Text form that :func:`parse_config` maps back to an equal config."""
    sim = cfg.sim
    grid, p = sim.grid, sim.params
    for name, value in (("params.gamma", p.gamma), ("params.source", getattr(p, "source", 0.0))):
        if callable(value):
            raise ValueError(f"{name} is a function and has no text form")
    lines = [f"model.type = {sim.model}", f"grid.dim = {grid.dim}", f"grid.topology = {grid.topology}"]
    for c, a in enumerate(("x", "y")[: grid.dim]):
        lines += [f"grid.n{a} = {grid.n[c]}", f"grid.h{a} = {_num(grid.h[c])}", f"grid.{a}0 = {_num(grid.origin[c])}"]
    lines += [f"params.lambda = {_num(p.lam)}", f"params.ell = {_num(p.ell)}"]
    if sim.model == "sh":
        lines.append(f"params.beta = {_num(p.beta)}")
    else:
        lines += [f"params.mobility = {_num(p.mobility)}", f"params.source = {_num(p.source)}"]
    lines.append("params.f = " + ", ".join(_num(c) for c in p.potential.coeffs))
    lines.append(f"params.gamma = {_num(p.gamma)}")
    lines += [
        f"time.dt = {_num(sim.dt)}",
        f"time.t_end = {_num(sim.t_end)}",
        "time.stabilization = " + ("auto" if sim.stabilization is None else _num(sim.stabilization)),
    ]
    ic = sim.ic
    lines += [
        f"ic.kind = {ic.kind}",
        f"ic.mean = {_num(ic.mean)}",
        f"ic.amplitude = {_num(ic.amplitude)}",
        f"ic.seed = {ic.seed}",
        f"ic.rng = {ic.rng}",
        f"ic.kx = {_num(ic.k[0])}",
    ]
    if grid.dim == 2:
        lines.append(f"ic.ky = {_num(ic.k[1] if len(ic.k) > 1 else 0.0)}")
    if ic.path is not None:
        lines.append(f"ic.path = {ic.path}")
    if sim.bcs:
        for face, bc in sim.bcs.items():
            kind = _BC_KIND_OF[type(bc)]
            _, values, coefficients, _ = _BC_KINDS[kind]
            lines.append(f"bc.{face}.kind = {kind}")
            for name in coefficients + values:
                value = getattr(bc, name)
                if callable(value):
                    raise ValueError(f"bc.{face}.{name} is a function and has no text form")
                lines.append(f"bc.{face}.{name} = {_num(value)}")
    o, d = cfg.output, cfg.dispersion
    lines += [
        f"output.dir = {o.dir}",
        f"output.prefix = {o.prefix}",
        f"output.cadence = {sim.cadence}",
        f"output.snapshots = {str(o.snapshots).lower()}",
        f"output.csv = {str(o.csv).lower()}",
        f"output.pgm = {str(o.pgm).lower()}",
        f"dispersion.steps = {d.steps}",
        f"dispersion.amplitude = {_num(d.amplitude)}",
    ]
    if d.k:
        lines.append("dispersion.k = " + ", ".join(_num(k) for k in d.k))
    return "\n".join(lines) + "\n"
