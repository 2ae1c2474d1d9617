"""INI run configuration shared by the command-line tools.

A run file collects everything one invocation needs::

    [mesh]
    nx = 25
    ny = 25
    extent = 0 20 0 20
    padding = 10

    [model]
    variant = L1
    b11 = 0.5
    b21 = 0.25
    b22 = 1.0
    h11 = 0.25
    h22 = 0.36
    noise1 = matern
    kappa_n1 = 0.5
    noise2 = oscillating
    kappa_n2 = 0.6
    omega2 = 0.95
    lock1 = true

    [observations]
    file = obs.csv
    noise_precision = 1e4

    [run]
    seed = 42
    count = 10

Optional sections: ``[priors]`` (entries like ``b21 = normal 0 100`` or
``kappa_n1 = flat``), ``[correlation]``, ``[spectra]``, ``[fit]`` and
``[predict]``.  Every lookup error is reported as a ConfigError naming the
section and option; referenced files are checked at load time.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .inference import PARAMETER_NAMES, PRIOR_FAMILIES, FitOptions, Prior, PriorSpec
from .mesh import Mesh, build_regular_mesh
from .models import NOISE_KINDS, VARIANTS, ModelSpec, NoiseSpec, OperatorSpec

__all__ = ["RunConfig", "load_config"]

_MISSING = object()


def _raw(cp: configparser.ConfigParser, section: str, option: str, default=_MISSING):
    try:
        return cp.get(section, option)
    except (configparser.NoSectionError, configparser.NoOptionError):
        if default is _MISSING:
            raise ConfigError(f"[{section}] is missing required option {option!r}") from None
        return default


def _typed(cp, section, option, conv, kind, default=_MISSING):
    raw = _raw(cp, section, option, default)
    if raw is default and default is not _MISSING:
        return default
    try:
        return conv(raw)
    except (TypeError, ValueError):
        raise ConfigError(
            f"[{section}] {option}: expected {kind}, got {raw!r}"
        ) from None


def _get_float(cp, section, option, default=_MISSING) -> float:
    return _typed(cp, section, option, float, "a number", default)


def _get_int(cp, section, option, default=_MISSING) -> int:
    return _typed(cp, section, option, int, "an integer", default)


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _get_bool(cp, section, option, default=_MISSING) -> bool:
    raw = _raw(cp, section, option, default)
    if raw is default and default is not _MISSING:
        return default
    key = str(raw).strip().lower()
    if key not in _BOOL:
        raise ConfigError(f"[{section}] {option}: expected a boolean, got {raw!r}")
    return _BOOL[key]


def _get_floats(cp, section, option, count, default=_MISSING):
    raw = _raw(cp, section, option, default)
    if raw is default and default is not _MISSING:
        return default
    parts = str(raw).split()
    if len(parts) != count:
        raise ConfigError(
            f"[{section}] {option}: expected {count} numbers, got {raw!r}"
        )
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(
            f"[{section}] {option}: expected {count} numbers, got {raw!r}"
        ) from None


def _parse_prior(name: str, raw: str) -> Prior:
    parts = raw.split()
    if not parts or parts[0] not in PRIOR_FAMILIES:
        raise ConfigError(
            f"[priors] {name}: family must be one of {PRIOR_FAMILIES}, got {raw!r}"
        )
    family = parts[0]
    if family == "flat":
        if len(parts) != 1:
            raise ConfigError(f"[priors] {name}: flat takes no arguments, got {raw!r}")
        return Prior("flat")
    if len(parts) != 3:
        raise ConfigError(
            f"[priors] {name}: expected '{family} <a> <b>', got {raw!r}"
        )
    try:
        a, b = float(parts[1]), float(parts[2])
    except ValueError:
        raise ConfigError(
            f"[priors] {name}: expected '{family} <a> <b>', got {raw!r}"
        ) from None
    prior = Prior(family, a, b)
    try:
        prior.validate()
    except Exception as exc:
        raise ConfigError(f"[priors] {name}: {exc}") from None
    return prior


@dataclass
class RunConfig:
    """Parsed and validated run file.

    Construction only checks what can be checked without heavy work: value
    syntax, parameter domains and that referenced files exist.  Meshes and
    observation sets are built on demand by the accessors.
    """

    path: str
    cp: configparser.ConfigParser
    base_dir: str

    # -- loading -------------------------------------------------------

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            with open(path, "r") as fh:
                cp.read_file(fh, source=path)
        except (configparser.Error, OSError, UnicodeDecodeError) as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from None
        cfg = cls(path=path, cp=cp, base_dir=os.path.dirname(os.path.abspath(path)))
        cfg.validate()
        return cfg

    def resolve(self, relpath: str) -> str:
        """Paths inside the config are taken relative to the config file."""
        return os.path.normpath(os.path.join(self.base_dir, relpath))

    def validate(self) -> None:
        if self.cp.has_section("mesh"):
            self.mesh_params()
        if self.cp.has_section("model"):
            self.model()
        if self.cp.has_section("priors"):
            self.priors()
        for section, option in (("observations", "file"), ("predict", "targets")):
            if self.cp.has_option(section, option):
                p = self.resolve(_raw(self.cp, section, option))
                if not os.path.isfile(p):
                    raise ConfigError(f"[{section}] {option}: file not found: {p}")

    # -- sections ------------------------------------------------------

    def mesh_params(self) -> dict:
        cp = self.cp
        if not cp.has_section("mesh"):
            raise ConfigError("config has no [mesh] section")
        nx = _get_int(cp, "mesh", "nx")
        ny = _get_int(cp, "mesh", "ny")
        if nx < 2 or ny < 2:
            raise ConfigError(f"[mesh] nx and ny must be at least 2, got {nx}x{ny}")
        extent = _get_floats(cp, "mesh", "extent", 4)
        if not (extent[1] > extent[0] and extent[3] > extent[2]):
            raise ConfigError(f"[mesh] extent must be x0 x1 y0 y1 with x1>x0, y1>y0, got {extent}")
        padding = _get_float(cp, "mesh", "padding", 0.0)
        if padding < 0:
            raise ConfigError(f"[mesh] padding must be nonnegative, got {padding}")
        return {"nx": nx, "ny": ny, "extent": extent, "padding": padding}

    def mesh(self) -> Mesh:
        return build_regular_mesh(**self.mesh_params())

    def model(self) -> ModelSpec:
        cp = self.cp
        if not cp.has_section("model"):
            raise ConfigError("config has no [model] section")
        variant = _raw(cp, "model", "variant", "L1").strip()
        if variant not in VARIANTS:
            raise ConfigError(f"[model] variant must be one of {VARIANTS}, got {variant!r}")
        op = OperatorSpec(
            variant=variant,
            b11=_get_float(cp, "model", "b11"),
            b21=_get_float(cp, "model", "b21", 0.0),
            b22=_get_float(cp, "model", "b22"),
            h11=_get_float(cp, "model", "h11"),
            h22=_get_float(cp, "model", "h22", 1.0),
            h21=_get_float(cp, "model", "h21", 0.0),
        )
        noises = []
        for i in (1, 2):
            kind = _raw(cp, "model", f"noise{i}", "white").strip()
            if kind not in NOISE_KINDS:
                raise ConfigError(
                    f"[model] noise{i} must be one of {NOISE_KINDS}, got {kind!r}"
                )
            noises.append(NoiseSpec(
                kind=kind,
                kappa_n=_get_float(cp, "model", f"kappa_n{i}", 0.0),
                omega=_get_float(cp, "model", f"omega{i}", 0.0),
            ))
        model = ModelSpec(
            operator=op,
            noise1=noises[0],
            noise2=noises[1],
            lock1=_get_bool(cp, "model", "lock1", True),
            lock2=_get_bool(cp, "model", "lock2", False),
        )
        try:
            model.validate()
        except Exception as exc:
            raise ConfigError(f"[model] invalid: {exc}") from None
        return model

    def priors(self) -> PriorSpec:
        if not self.cp.has_section("priors"):
            return PriorSpec()
        overrides = {}
        for name, raw in self.cp.items("priors"):
            if name not in PARAMETER_NAMES:
                raise ConfigError(
                    f"[priors] unknown parameter {name!r}; expected one of {PARAMETER_NAMES}"
                )
            overrides[name] = _parse_prior(name, raw)
        return PriorSpec(overrides=overrides)

    def observation_file(self) -> str:
        return self.resolve(_raw(self.cp, "observations", "file"))

    def noise_precision(self) -> tuple[float, float]:
        """Observation-noise precision for field 1 and field 2."""
        raw = _raw(self.cp, "observations", "noise_precision", "1e4")
        parts = str(raw).split()
        if len(parts) not in (1, 2):
            raise ConfigError(
                f"[observations] noise_precision: expected one or two numbers, got {raw!r}"
            )
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise ConfigError(
                f"[observations] noise_precision: expected one or two numbers, got {raw!r}"
            ) from None
        if len(vals) == 1:
            vals = vals * 2
        if not all(v > 0 for v in vals):
            raise ConfigError(
                f"[observations] noise_precision must be positive, got {raw!r}"
            )
        return vals[0], vals[1]

    def target_file(self) -> str | None:
        raw = _raw(self.cp, "predict", "targets", None)
        return None if raw is None else self.resolve(raw)

    def fit_options(self, ordering: str | None = None) -> FitOptions:
        cp = self.cp
        return FitOptions(
            maxiter=_get_int(cp, "fit", "maxiter", 200),
            gtol=_get_float(cp, "fit", "gtol", 1e-5),
            fd_step=_get_float(cp, "fit", "fd_step", 1e-5),
            hess_step=_get_float(cp, "fit", "hess_step", 1e-4),
            ordering=ordering or self.ordering(),
        )

    # -- run/diagnostic scalars ----------------------------------------

    def seed(self) -> int:
        return _get_int(self.cp, "run", "seed", 0)

    def draw_count(self) -> int:
        n = _get_int(self.cp, "run", "count", 1)
        if n < 1:
            raise ConfigError(f"[run] count must be at least 1, got {n}")
        return n

    def ordering(self) -> str:
        return _raw(self.cp, "run", "ordering", "mindeg").strip()

    def correlation_params(self) -> dict:
        cp = self.cp
        out: dict = {}
        ref = _raw(cp, "correlation", "reference", None)
        if ref is not None and str(ref).strip() != "center":
            out["reference"] = _get_int(cp, "correlation", "reference")
        md = _get_float(cp, "correlation", "max_distance", None)
        if md is not None:
            out["max_distance"] = md
        bw = _get_float(cp, "correlation", "bin_width", None)
        if bw is not None:
            out["bin_width"] = bw
        return out

    def spectra_params(self) -> tuple[float, int]:
        k_max = _get_float(self.cp, "spectra", "k_max", 3.0)
        k_count = _get_int(self.cp, "spectra", "k_count", 200)
        if k_max <= 0 or k_count < 2:
            raise ConfigError(
                f"[spectra] needs k_max > 0 and k_count >= 2, got {k_max}, {k_count}"
            )
        return k_max, k_count


def load_config(path: str) -> RunConfig:
    """Load and validate a run file (see module docstring for the format)."""
    return RunConfig.load(path)


def model_section(model: ModelSpec) -> str:
    """Serialize a model as a ``[model]`` section readable by load_config."""
    import math

    from .util import fmt

    op = model.operator
    lines = ["[model]", f"variant = {op.variant}"]
    for name in ("b11", "b21", "b22", "h11", "h22"):
        lines.append(f"{name} = {fmt(getattr(op, name))}")
    if op.variant == "L2":
        lines.append(f"h21 = {fmt(op.h21)}")
    for i, noise in ((1, model.effective_noise1), (2, model.effective_noise2)):
        lines.append(f"noise{i} = {noise.kind}")
        if noise.kind != "white":
            lines.append(f"kappa_n{i} = {fmt(math.sqrt(noise.kappa_sq))}")
        if noise.kind == "oscillating":
            lines.append(f"omega{i} = {fmt(noise.omega)}")
    lines.append(f"lock1 = {str(model.lock1).lower()}")
    lines.append(f"lock2 = {str(model.lock2).lower()}")
    return "\n".join(lines) + "\n"
