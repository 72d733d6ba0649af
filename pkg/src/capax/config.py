"""JSON run configuration: channel documents, solver overrides, distribution files."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .channels import (
    GaussianAdditiveSpec,
    RayleighSpec,
    additive_channel,
    gaussian_channel,
    laplace_noise,
    rayleigh_channel,
    tabulated_noise,
    uniform_noise,
)
from .errors import CapaxError, InvalidInput
from .infodens import DiscreteInput
from .solver import SolveOptions

COMMANDS = ("solve", "certify", "sweep", "check-conditions")
DIST_SUM_TOL = 1e-9


class ConfigError(CapaxError, ValueError):
    pass


@dataclass
class RunConfig:
    channel: dict
    command: str
    solve_options: dict = field(default_factory=dict)
    output_path: Optional[str] = None
    format: str = "json"
    A_list: Optional[list] = None
    distribution: object = None
    x_grid_size: int = 100
    y_grid_size: int = 10_000
    base_dir: Path = Path(".")

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.format!r}")
        if not isinstance(self.channel, dict) or "kind" not in self.channel:
            raise ConfigError("config needs a 'channel' object with a 'kind'")
        if self.command == "sweep":
            A = self.A_list
            if not isinstance(A, list) or not A:
                raise ConfigError("sweep needs a nonempty 'A_list'")
            if not all(_positive(a) for a in A):
                raise ConfigError("every A in 'A_list' must be positive")
            if any(b <= a for a, b in zip(A, A[1:])):
                raise ConfigError("'A_list' must be strictly increasing")
        else:
            if not _positive(self.channel.get("peak")):
                raise ConfigError("channel 'peak' must be a positive number")
        if self.command == "certify" and self.distribution is None:
            raise ConfigError("certify needs a 'distribution' (file path or object)")


def _positive(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v > 0


def load_config(path, command, *, output_path=None, fmt=None, seed=None) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    opts = dict(doc.get("solve_options") or {})
    if seed is not None:
        opts["seed"] = seed
    return RunConfig(
        channel=doc.get("channel"),
        command=command,
        solve_options=opts,
        output_path=output_path or doc.get("output_path"),
        format=fmt or doc.get("format", "json"),
        A_list=doc.get("A_list"),
        distribution=doc.get("distribution"),
        x_grid_size=int(doc.get("x_grid_size", 100)),
        y_grid_size=int(doc.get("y_grid_size", 10_000)),
        base_dir=path.parent,
    )


def solve_options(overrides: dict) -> SolveOptions:
    known = {f.name for f in fields(SolveOptions)} - {"quad"}
    unknown = set(overrides) - known
    if unknown:
        raise ConfigError(f"unknown solve_options: {sorted(unknown)}")
    try:
        return SolveOptions(**overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def build_channel(doc: dict, peak: Optional[float] = None):
    """ChannelModel from a channel document; ``peak`` overrides the document's."""
    doc = dict(doc)
    if peak is not None:
        doc["peak"] = peak
    kind = doc.get("kind")
    A = doc.get("peak")
    try:
        if kind == "gaussian":
            return gaussian_channel(GaussianAdditiveSpec(float(doc.get("sigma", 1.0))), A)
        if kind == "rayleigh":
            gamma = doc.get("gamma")
            return rayleigh_channel(RayleighSpec(float(A), float(doc.get("c", 3.0)),
                                                 None if gamma is None else float(gamma)))
        if kind == "additive":
            return additive_channel(_noise_spec(doc, A), A)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"bad channel document: {exc}") from None
    raise ConfigError(f"unknown channel kind {kind!r}")


def _noise_spec(doc, A):
    noise = doc.get("noise")
    if not isinstance(noise, dict):
        raise ConfigError("additive channel needs a 'noise' object")
    family = noise.get("family", "tabulated")
    if family == "laplace":
        return laplace_noise(float(noise.get("scale", 1.0)), A)
    if family == "uniform":
        return uniform_noise(float(noise.get("width", 1.0)), A)
    if family != "tabulated":
        raise ConfigError(f"unknown noise family {family!r}")
    env = doc.get("envelopes")
    if not isinstance(env, dict) or not all(k in env for k in ("y", "q", "Q")):
        raise ConfigError("tabulated additive channel needs 'envelopes' with y, q and Q tables")
    return tabulated_noise(noise["y"], noise["density"], env["y"], env["q"], env["Q"],
                           env.get("K"))


def load_distribution(spec, base_dir: Path, peak: float) -> DiscreteInput:
    """Parse a distribution document (or a path to one) into a DiscreteInput.

    Accepted shapes: ``{"peak": A, "points": [{"x":..,"p":..}, ...]}`` or a
    bare array of ``{"x","p"}`` objects optionally containing ``{"peak": A}``.
    """
    if isinstance(spec, str):
        p = Path(spec)
        if not p.is_absolute():
            p = base_dir / p
        try:
            spec = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read distribution {p}: {exc}") from None
    dist_peak = None
    if isinstance(spec, dict):
        dist_peak = spec.get("peak")
        entries = spec.get("points")
    elif isinstance(spec, list):
        entries = []
        for e in spec:
            if isinstance(e, dict) and set(e) == {"peak"}:
                dist_peak = e["peak"]
            else:
                entries.append(e)
    else:
        raise ConfigError("distribution must be an object or an array")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("distribution has no points")
    try:
        xs = [float(e["x"]) for e in entries]
        ps = [float(e["p"]) for e in entries]
    except (TypeError, KeyError, ValueError):
        raise ConfigError("every point needs numeric 'x' and 'p'") from None
    if dist_peak is not None and abs(float(dist_peak) - peak) > 1e-12 * peak:
        raise ConfigError(f"distribution peak {dist_peak} differs from channel peak {peak}")
    if any(p < 0 for p in ps):
        raise ConfigError("negative probability in distribution")
    if abs(sum(ps) - 1.0) > DIST_SUM_TOL:
        raise ConfigError(f"probabilities sum to {sum(ps)!r}, not 1")
    if any(abs(x) > peak for x in xs):
        raise ConfigError(f"distribution has points outside [-{peak}, {peak}]")
    try:
        return DiscreteInput.from_points(xs, ps, peak)
    except InvalidInput as exc:
        raise ConfigError(str(exc)) from None
