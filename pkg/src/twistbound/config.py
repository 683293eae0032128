"""Run configuration: INI parsing with strict schema validation.

One self-contained file describes an experiment: shape, profile, bound
settings, and the optional direct 3D solve.  Unknown sections or keys
are rejected, and every error names the offending section.key.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .bound import BoundConfig
from .errors import ConfigError
from .geometry import Disc, Ellipse, PolygonWithHoles, Ribbon, ShapeSpec
from .profiles import TwistProfile

_KNOWN = {
    "shape": {"variant", "eps", "k", "eps_r", "outer", "holes"},
    "profile": {"beta0", "a", "s0"},
    "bound": {"sigma", "c", "n_q", "tol", "maxiter", "block", "resolutions",
              "neg_cap", "dense_cutoff"},
    "direct": {"enabled", "L_trunc", "n_s", "h", "cap"},
    "run": {"seed", "workers", "verbose"},
}


@dataclass(frozen=True)
class DirectConfig:
    enabled: bool = False
    L_trunc: float | None = None     # None: 3 * s0
    n_s: int | None = None           # None: ceil(2 L / h)
    h: float = 1 / 16
    cap: int = 64


@dataclass(frozen=True)
class RunConfig:
    shape: ShapeSpec
    profile: TwistProfile
    bound: BoundConfig
    direct: DirectConfig = field(default_factory=DirectConfig)
    seed: int = 42
    workers: int = 1
    verbose: bool = False


def _fraction(text: str, where: str) -> float:
    text = text.strip()
    try:
        if "/" in text:
            num, den = text.split("/")
            return float(num) / float(den)
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{where}: cannot parse number {text!r}") from exc


def _get(parser, section, key, conv, where, default=None, required=False):
    if not parser.has_option(section, key):
        if required:
            raise ConfigError(f"{section}.{key}: required key missing")
        return default
    raw = parser.get(section, key)
    try:
        return conv(raw)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"{section}.{key}: invalid value {raw!r}") from exc


def _parse_ring(text: str):
    pts = []
    for pair in text.split(";"):
        pair = pair.strip()
        if not pair:
            continue
        xy = pair.split()
        if len(xy) != 2:
            raise ValueError(f"vertex needs two coordinates, got {pair!r}")
        pts.append((float(xy[0]), float(xy[1])))
    return tuple(pts)


def _parse_shape(parser) -> ShapeSpec:
    variant = _get(parser, "shape", "variant", str.strip, "shape.variant",
                   required=True)
    if variant == "disc":
        return Disc()
    if variant == "ellipse":
        eps = _get(parser, "shape", "eps",
                   lambda t: _fraction(t, "shape.eps"), "shape.eps",
                   required=True)
        return Ellipse(eps=eps)
    if variant == "ribbon":
        k = _get(parser, "shape", "k", lambda t: int(t), "shape.k",
                 required=True)
        eps_r = _get(parser, "shape", "eps_r",
                     lambda t: _fraction(t, "shape.eps_r"), "shape.eps_r",
                     default=0.1)
        return Ribbon(k=k, eps_r=eps_r)
    if variant == "polygon":
        outer = _get(parser, "shape", "outer", _parse_ring, "shape.outer",
                     required=True)
        holes_text = _get(parser, "shape", "holes", str, "shape.holes",
                          default="")
        holes = tuple(_parse_ring(ring) for ring in holes_text.split("|")
                      if ring.strip()) if holes_text else ()
        return PolygonWithHoles(outer=outer, holes=holes)
    raise ConfigError(f"shape.variant: unknown variant {variant!r} "
                      "(expected disc, ellipse, ribbon, or polygon)")


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def load_config(path) -> RunConfig:
    """Parse and validate a config file; raises ConfigError with the
    offending section.key on any problem."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key.lower() not in {k.lower() for k in _KNOWN[section]}:
                raise ConfigError(f"{section}.{key}: unknown key")
    for required in ("shape", "profile"):
        if not parser.has_section(required):
            raise ConfigError(f"missing required section [{required}]")

    shape = _parse_shape(parser)
    try:
        from .geometry import validate_spec
        validate_spec(shape)
    except Exception as exc:
        raise ConfigError(f"shape: {exc}") from exc

    beta0 = _get(parser, "profile", "beta0",
                 lambda t: _fraction(t, "profile.beta0"), "profile.beta0",
                 required=True)
    a = _get(parser, "profile", "a", lambda t: _fraction(t, "profile.a"),
             "profile.a", required=True)
    s0 = _get(parser, "profile", "s0", lambda t: _fraction(t, "profile.s0"),
              "profile.s0", default=1.0)
    try:
        profile = TwistProfile(beta0=beta0, a=a, s0=s0)
    except ValueError as exc:
        raise ConfigError(f"profile: {exc}") from exc

    def bget(key, conv, default):
        return _get(parser, "bound", key, conv, f"bound.{key}", default=default) \
            if parser.has_section("bound") else default

    resolutions = bget("resolutions",
                       lambda t: tuple(_fraction(x, "bound.resolutions")
                                       for x in t.split(",")),
                       (1 / 32, 1 / 64))
    block_raw = bget("block", lambda t: int(t), None)
    c_raw = bget("c", lambda t: _fraction(t, "bound.c"), None)
    try:
        bound_cfg = BoundConfig(
            sigma=bget("sigma", lambda t: _fraction(t, "bound.sigma"), 1.5),
            c=c_raw,
            n_q=bget("n_q", lambda t: int(t), 33),
            tol=bget("tol", lambda t: float(t), 1e-9),
            maxiter=bget("maxiter", lambda t: int(t), 5000),
            block=block_raw,
            resolutions=resolutions,
            neg_cap=bget("neg_cap", lambda t: int(t), 64),
            dense_cutoff=bget("dense_cutoff", lambda t: int(t), 1000),
        )
    except Exception as exc:
        raise ConfigError(f"bound: {exc}") from exc

    def dget(key, conv, default):
        return _get(parser, "direct", key, conv, f"direct.{key}", default=default) \
            if parser.has_section("direct") else default

    direct_cfg = DirectConfig(
        enabled=dget("enabled", _parse_bool, False),
        L_trunc=dget("L_trunc", lambda t: _fraction(t, "direct.L_trunc"), None),
        n_s=dget("n_s", lambda t: int(t), None),
        h=dget("h", lambda t: _fraction(t, "direct.h"), 1 / 16),
        cap=dget("cap", lambda t: int(t), 64),
    )

    def rget(key, conv, default):
        return _get(parser, "run", key, conv, f"run.{key}", default=default) \
            if parser.has_section("run") else default

    seed = rget("seed", lambda t: int(t), 42)
    workers = rget("workers", lambda t: int(t), 1)
    verbose = rget("verbose", _parse_bool, False)
    if workers < 1:
        raise ConfigError(f"run.workers: must be >= 1, got {workers}")

    return RunConfig(shape=shape, profile=profile, bound=bound_cfg,
                     direct=direct_cfg, seed=seed, workers=workers,
                     verbose=verbose)
