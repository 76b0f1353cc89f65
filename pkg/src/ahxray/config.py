"""Plain-text experiment configuration.

INI-style sections hold one block per module; numbered ``term.N`` /
``basis.N`` keys describe separable field terms.  Term values are
semicolon-separated ``key=value`` fields; matrices are row-major re,im
pairs.  Example::

    [experiment]
    seed = 42

    [model]
    kind = poincare_disk

    [connection]
    rank = 2
    decay = 3
    term.0 = dir=0; gen=0,0,0,1,0,-1,0,0; center=0.2,0.1; sigma=0.3

The fingerprint of a configuration is a hash of its canonical (sorted)
serialization; datasets and reports embed it so outputs can be traced back
to the exact inputs.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bundle import (ConnectionField, GaugeField, GaussBump, HiggsFieldData,
                     SeparableTerm)
from .errors import ConfigError
from .geometry import AHModel, ConformalBump, ModelKind
from .reconstruct import HiggsParameterization, ReconstructionConfig
from .spherebundle import SectionField, SphereBundleGrid
from .transport import TransportConfig
from .xray import FanSpec


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as err:
        raise ConfigError(f"expected numbers, got {text!r}") from err


def _complex_matrix(flat: list[float], rank: int,
                    where: str) -> np.ndarray:
    if len(flat) != 2 * rank * rank:
        raise ConfigError(
            f"{where}: matrix needs {2 * rank * rank} numbers "
            f"(row-major re,im pairs), got {len(flat)}")
    arr = np.asarray(flat)
    return (arr[0::2] + 1j * arr[1::2]).reshape(rank, rank)


def _parse_term(value: str, section: str, key: str) -> dict:
    fields = {}
    for part in value.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"malformed term field {part!r}",
                              section=section, key=key)
        name, _, val = part.partition("=")
        fields[name.strip()] = val.strip()
    return fields


def _numbered(section: dict, prefix: str) -> list[str]:
    keys = sorted(k for k in section if k.startswith(prefix + "."))
    return [section[k] for k in keys]


class ExperimentConfig:
    """Parsed configuration with builders for every module's objects."""

    def __init__(self, sections: dict[str, dict[str, str]]):
        self.sections = {name.lower(): {k.lower(): v for k, v in body.items()}
                         for name, body in sections.items()}
        if "experiment" not in self.sections \
                or "seed" not in self.sections["experiment"]:
            raise ConfigError("a seed is mandatory", section="experiment",
                              key="seed")
        self.seed = int(self.sections["experiment"]["seed"])

    def override_seed(self, seed: Optional[int]) -> None:
        if seed is not None:
            self.seed = int(seed)
            self.sections["experiment"]["seed"] = str(int(seed))

    def override_section(self, name: str, spec: Optional[str]) -> None:
        """Replace a section from an inline 'key=val; key=val' string."""
        if spec is None:
            return
        body = {}
        for part in spec.split(";"):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise ConfigError("inline section fields look like "
                                  f"key=value, got {part!r}", section=name)
            key, _, val = part.partition("=")
            body[key.strip().lower()] = val.strip()
        self.sections[name] = body

    def merge_section_from_file(self, name: str, path: Optional[str]) -> None:
        if path is None:
            return
        parser = configparser.ConfigParser()
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_string(fh.read())
        if name not in {s.lower() for s in parser.sections()}:
            raise ConfigError(f"{path} has no [{name}] section",
                              section=name)
        for section in parser.sections():
            if section.lower() == name:
                self.sections[name] = {k.lower(): v for k, v
                                       in parser[section].items()}

    # -- I/O ----------------------------------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as err:
            raise ConfigError(f"malformed config: {err}") from err
        return cls({name: dict(parser[name]) for name in parser.sections()})

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def canonical(self) -> str:
        buf = io.StringIO()
        for name in sorted(self.sections):
            buf.write(f"[{name}]\n")
            for key in sorted(self.sections[name]):
                buf.write(f"{key} = {self.sections[name][key]}\n")
        return buf.getvalue()

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    # -- accessors ------------------------------------------------------------

    def _section(self, name: str, required: bool = True) -> dict:
        body = self.sections.get(name)
        if body is None:
            if required:
                raise ConfigError("missing section", section=name)
            return {}
        return body

    def _get(self, section: str, key: str, cast, default=None):
        body = self._section(section, required=default is None)
        if key not in body:
            if default is not None:
                return default
            raise ConfigError("missing key", section=section, key=key)
        try:
            if cast is bool:
                return body[key].strip().lower() in ("1", "true", "yes", "on")
            return cast(body[key])
        except ValueError as err:
            raise ConfigError(f"bad value {body[key]!r}: {err}",
                              section=section, key=key) from err

    # -- builders ------------------------------------------------------------

    def build_model(self) -> AHModel:
        body = self._section("model")
        kind_name = body.get("kind", "poincare_disk")
        try:
            kind = ModelKind(kind_name)
        except ValueError:
            raise ConfigError(f"unknown model kind {kind_name!r}",
                              section="model", key="kind")
        bump = None
        if kind is ModelKind.CONFORMAL_PERTURBED:
            center = _floats(body.get("bump_center", ""))
            if len(center) != 2:
                raise ConfigError("bump_center needs two numbers",
                                  section="model", key="bump_center")
            bump = ConformalBump(center=(center[0], center[1]),
                                 radius=self._get("model", "bump_radius",
                                                  float),
                                 amplitude=self._get("model",
                                                     "bump_amplitude", float))
        eps0 = self._get("model", "epsilon0", float, default=0.1)
        return AHModel(kind, bump=bump, epsilon0=eps0)

    def build_transport(self, rho_cut: Optional[float] = None
                        ) -> TransportConfig:
        return TransportConfig(
            rho_cut=rho_cut if rho_cut is not None
            else self._get("transport", "rho_cut", float, default=1e-6),
            rtol=self._get("transport", "rtol", float, default=1e-10),
            atol=self._get("transport", "atol", float, default=1e-14),
            richardson=self._get("transport", "richardson", bool,
                                 default=False),
            n_steps=self._get("transport", "n_steps", int, default=2048))

    def _bundle_terms(self, section: str, rank: int, with_dir: bool):
        out = []
        for raw in _numbered(self._section(section), "term"):
            fields = _parse_term(raw, section, "term")
            if "gen" not in fields or "center" not in fields \
                    or "sigma" not in fields:
                raise ConfigError("term needs gen=, center=, sigma=",
                                  section=section, key="term")
            gen = _complex_matrix(_floats(fields["gen"]), rank,
                                  f"[{section}] term")
            center = _floats(fields["center"])
            bump = GaussBump(center=(center[0], center[1]),
                             sigma=float(fields["sigma"]))
            coeff = float(fields.get("coeff", 1.0))
            if with_dir:
                direction = int(fields.get("dir", 0))
                out.append(SeparableTerm(direction=direction,
                                         generator=coeff * gen, bump=bump))
            else:
                out.append((coeff * gen, bump))
        return out

    def build_connection(self) -> ConnectionField:
        if "connection" not in self.sections:
            rank = self._get("higgs", "rank", int, default=2)
            return ConnectionField.zero(rank)
        rank = self._get("connection", "rank", int)
        decay = self._get("connection", "decay", int, default=3)
        terms = self._bundle_terms("connection", rank, with_dir=True)
        if not terms:
            return ConnectionField.zero(rank)
        return ConnectionField.from_terms(rank, terms, decay)

    def build_higgs(self, rank: int) -> HiggsFieldData:
        if "higgs" not in self.sections:
            return HiggsFieldData.zero(rank)
        decay = self._get("higgs", "decay", int, default=4)
        terms = self._bundle_terms("higgs", rank, with_dir=False)
        if not terms:
            return HiggsFieldData.zero(rank)
        return HiggsFieldData.from_terms(rank, terms, decay)

    def build_gauge(self, rank: int) -> Optional[GaugeField]:
        if "gauge" not in self.sections:
            return None
        decay = self._get("gauge", "decay", int, default=4)
        terms = self._bundle_terms("gauge", rank, with_dir=False)
        return GaugeField(rank, terms, decay)

    def build_pair(self):
        """(model, connection, higgs) with an optional gauge applied."""
        from .bundle import gauge_transform

        model = self.build_model()
        conn = self.build_connection()
        higgs = self.build_higgs(conn.rank)
        gauge = self.build_gauge(conn.rank)
        if gauge is not None:
            conn, higgs = gauge_transform(conn, higgs, gauge)
        return model, conn, higgs

    def build_fan(self, count: Optional[int] = None) -> FanSpec:
        body = self._section("fan", required=False)
        mode = body.get("mode", "boundary_pairs")
        n = count or int(body.get("count", 100))
        if mode == "boundary_pairs":
            return FanSpec.uniform_pairs(
                n, n_openings=int(body.get("openings", 8)))
        if mode == "shooting":
            return FanSpec.uniform_shooting(
                n, n_eta=int(body.get("n_eta", 5)),
                eta_max=float(body.get("eta_max", 2.0)))
        raise ConfigError(f"unknown fan mode {mode!r}", section="fan",
                          key="mode")

    def build_grid(self, model: AHModel,
                   override: Optional[tuple[int, int]] = None
                   ) -> SphereBundleGrid:
        body = self._section("grid", required=False)
        nx = override[0] if override else int(body.get("nx", 64))
        ntheta = override[1] if override else int(body.get("ntheta", 64))
        rho_grid = float(body.get("rho_grid", 0.05))
        return SphereBundleGrid(model, nx=nx, n_theta=ntheta,
                                rho_grid=rho_grid)

    def build_section(self, grid: SphereBundleGrid, rank: int
                      ) -> SectionField:
        body = self._section("section", required=False)
        m = int(body.get("mode", 1))
        center = _floats(body.get("center", "0 0"))
        radius = float(body.get("radius", 0.7))
        power = int(body.get("power", 8))
        vec_raw = _floats(body.get("vector", "1 0"))
        vec = np.asarray(vec_raw[0::2]) + 1j * np.asarray(vec_raw[1::2])
        if vec.shape != (rank,):
            raise ConfigError(f"section vector must have {rank} complex "
                              "components (re,im pairs)",
                              section="section", key="vector")
        s2 = np.sum((grid.points - np.asarray(center)) ** 2, axis=-1) \
            / radius**2
        prof = np.zeros_like(s2)
        inside = s2 < 1.0
        prof[inside] = np.cos(0.5 * math.pi * np.sqrt(s2[inside])) ** power
        ang = np.exp(1j * m * grid.thetas)
        vals = prof[:, :, None, None] * ang[None, None, :, None] * vec
        return SectionField(values=vals, grid=grid, compact_support=True)

    def build_reconstruction(self) -> tuple[HiggsParameterization,
                                            ReconstructionConfig]:
        body = self._section("reconstruction")
        rank = int(body.get("rank", 2))
        decay = int(body.get("decay", 4))
        basis = []
        for raw in _numbered(body, "basis"):
            fields = _parse_term(raw, "reconstruction", "basis")
            gen = _complex_matrix(_floats(fields["gen"]), rank,
                                  "[reconstruction] basis")
            center = _floats(fields["center"])
            basis.append((gen, GaussBump(center=(center[0], center[1]),
                                         sigma=float(fields["sigma"]))))
        if not basis:
            raise ConfigError("reconstruction needs basis.N terms",
                              section="reconstruction", key="basis")
        params = HiggsParameterization(rank=rank, basis=basis,
                                       decay_N1=decay)
        cfg = ReconstructionConfig(
            tikhonov=float(body.get("tikhonov", 1e-10)),
            max_iter=int(body.get("max_iter", 30)),
            fd_step=float(body.get("fd_step", 1e-6)),
            transport=self.build_transport())
        return params, cfg
