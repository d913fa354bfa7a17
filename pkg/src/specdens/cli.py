"""Config-driven command line front end.

One subcommand surface: ``density --config run.toml`` with optional
``--mode``, ``--out``, ``--seed``, ``--trials`` and ``--workers``
overrides.  Configs are TOML; complex numbers are written as strings like
"1+2i" (plain numbers work for reals), diagonals as [value, multiplicity]
run pairs.  Profiles land in CSV with the resolved configuration echoed in
``#`` comments, so a result file is self-describing and byte-reproducible.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
3 statistical comparison failure (artifacts are still written).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as _toml

from .errors import InvalidInputError, SpecDensError
from .model import (
    GridScan,
    LineScan,
    RankOneNonNormalEnsemble,
    ScanGeometry,
    StructuredEnsemble,
    build_ensemble,
)
from .montecarlo import DensityProfile, analytic_profile, compare, empirical_density

__all__ = ["ConfigError", "RunConfig", "load_config", "build_run_config", "run", "main",
           "parse_complex", "write_profile", "read_profile"]

_MODES = ("analytic", "montecarlo", "compare")


class ConfigError(InvalidInputError):
    """Invalid configuration; the message names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"invalid config: {field}: {message}")
        self.field = field


def parse_complex(value, field: str) -> complex:
    """Accept TOML numbers directly and "a+bi" style strings."""
    if isinstance(value, bool):
        raise ConfigError(field, f"expected a number or complex string, got {value!r}")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, str):
        s = value.strip().replace(" ", "")
        if not s:
            raise ConfigError(field, "empty complex literal")
        s = s.replace("I", "i").replace("J", "i").replace("j", "i").replace("i", "j")
        s = re.sub(r"(?<![0-9.])j", "1j", s)
        try:
            return complex(s)
        except ValueError:
            raise ConfigError(field, f"cannot parse complex literal {value!r}")
    raise ConfigError(field, f"expected a number or complex string, got {value!r}")


def _fmt_complex(z: complex) -> str:
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def _parse_real(value, field: str) -> float:
    z = parse_complex(value, field)
    if z.imag != 0.0:
        raise ConfigError(field, f"must be real, got {value!r}")
    return z.real


def _get(section: dict, key: str, field: str, required: bool = True, default=None):
    if key in section:
        return section[key]
    if required:
        raise ConfigError(field, "required key is missing")
    return default


def _parse_int(value, field: str, low: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(field, f"expected an integer, got {value!r}")
    if value < low:
        raise ConfigError(field, f"must be >= {low}, got {value}")
    return value


def _parse_runs(raw, field: str):
    if not isinstance(raw, list) or not raw:
        raise ConfigError(field, "expected a nonempty list of [value, multiplicity] pairs")
    runs = []
    for idx, pair in enumerate(raw):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"{field}[{idx}]", f"expected [value, multiplicity], got {pair!r}")
        value = parse_complex(pair[0], f"{field}[{idx}]")
        mult = _parse_int(pair[1], f"{field}[{idx}]", 1)
        runs.append((value, mult))
    return runs


@dataclass(frozen=True)
class RunConfig:
    mode: str
    out: str
    model: object
    invert: bool
    geometry: ScanGeometry
    trials: int | None
    seed: int | None
    workers: int | None
    cell_average: bool
    echo: dict


def load_config(path) -> dict:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return _toml.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}")
    except _toml.TOMLDecodeError as exc:
        raise ConfigError("config", f"TOML parse error: {exc}")


def _build_model(section: dict):
    if not isinstance(section, dict):
        raise ConfigError("model", "expected a [model] table")
    kind = _get(section, "kind", "model.kind")
    n_raw = _get(section, "n_inv_var", "model.n_inv_var")
    n = _parse_real(n_raw, "model.n_inv_var")
    if n <= 0.0:
        raise ConfigError("model.n_inv_var", f"must be positive, got {n}")
    if kind == "normal":
        s_runs = _parse_runs(_get(section, "s_diag", "model.s_diag"), "model.s_diag")
        l_runs = [
            (_parse_real(v, "model.l_diag"), m)
            for v, m in _parse_runs(_get(section, "l_diag", "model.l_diag"), "model.l_diag")
        ]
        r_runs = [
            (_parse_real(v, "model.r_diag"), m)
            for v, m in _parse_runs(_get(section, "r_diag", "model.r_diag"), "model.r_diag")
        ]
        invert = _get(section, "invert", "model.invert", required=False, default=False)
        if not isinstance(invert, bool):
            raise ConfigError("model.invert", f"expected a boolean, got {invert!r}")
        try:
            model = build_ensemble(s_runs, l_runs, r_runs, n)
        except InvalidInputError as exc:
            raise ConfigError("model", str(exc))
        echo = {
            "kind": "normal",
            "n_inv_var": n,
            "s_diag": [[_fmt_complex(v), m] for v, m in s_runs],
            "l_diag": [[v, m] for v, m in l_runs],
            "r_diag": [[v, m] for v, m in r_runs],
            "invert": invert,
        }
        return model, invert, echo
    if kind == "nonnormal":
        size = _parse_int(_get(section, "size", "model.size"), "model.size", 2)
        alpha = parse_complex(_get(section, "alpha", "model.alpha"), "model.alpha")
        row = _parse_int(_get(section, "row", "model.row", required=False, default=1), "model.row", 1)
        col = _parse_int(_get(section, "col", "model.col", required=False, default=2), "model.col", 1)
        try:
            model = RankOneNonNormalEnsemble(size=size, alpha=alpha, n_inv_var=n, row=row, col=col)
        except InvalidInputError as exc:
            raise ConfigError("model", str(exc))
        echo = {
            "kind": "nonnormal",
            "n_inv_var": n,
            "size": size,
            "alpha": _fmt_complex(alpha),
            "row": row,
            "col": col,
        }
        return model, False, echo
    raise ConfigError("model.kind", f"expected 'normal' or 'nonnormal', got {kind!r}")


def _build_geometry(section: dict):
    if not isinstance(section, dict):
        raise ConfigError("scan", "expected a [scan] table")
    kind = _get(section, "kind", "scan.kind", required=False, default="line")
    cell_average = _get(section, "cell_average", "scan.cell_average", required=False, default=False)
    if not isinstance(cell_average, bool):
        raise ConfigError("scan.cell_average", f"expected a boolean, got {cell_average!r}")
    try:
        if kind == "line":
            start = parse_complex(_get(section, "start", "scan.start"), "scan.start")
            stop = parse_complex(_get(section, "stop", "scan.stop"), "scan.stop")
            points = _parse_int(_get(section, "points", "scan.points"), "scan.points", 2)
            shw = _parse_real(
                _get(section, "strip_half_width", "scan.strip_half_width", required=False, default=0.05),
                "scan.strip_half_width",
            )
            geom = LineScan(start, stop, points, shw)
            echo = {
                "kind": "line",
                "start": _fmt_complex(geom.start),
                "stop": _fmt_complex(geom.stop),
                "points": points,
                "strip_half_width": shw,
                "cell_average": cell_average,
            }
            return geom, echo, cell_average
        if kind == "grid":
            cmin = parse_complex(_get(section, "corner_min", "scan.corner_min"), "scan.corner_min")
            cmax = parse_complex(_get(section, "corner_max", "scan.corner_max"), "scan.corner_max")
            nx = _parse_int(_get(section, "nx", "scan.nx"), "scan.nx", 1)
            ny = _parse_int(_get(section, "ny", "scan.ny"), "scan.ny", 1)
            geom = GridScan(cmin, cmax, nx, ny)
            echo = {
                "kind": "grid",
                "corner_min": _fmt_complex(geom.corner_min),
                "corner_max": _fmt_complex(geom.corner_max),
                "nx": nx,
                "ny": ny,
                "cell_average": cell_average,
            }
            return geom, echo, cell_average
    except InvalidInputError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("scan", str(exc))
    raise ConfigError("scan.kind", f"expected 'line' or 'grid', got {kind!r}")


def build_run_config(raw: dict, overrides: dict | None = None) -> RunConfig:
    overrides = overrides or {}
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a table")
    mode = overrides.get("mode") or _get(raw, "mode", "mode", required=False, default="analytic")
    if mode not in _MODES:
        raise ConfigError("mode", f"expected one of {_MODES}, got {mode!r}")
    out = overrides.get("out") or _get(raw, "out", "out", required=False, default="density.csv")
    if not isinstance(out, str) or not out:
        raise ConfigError("out", f"expected a nonempty path, got {out!r}")

    model, invert, model_echo = _build_model(_get(raw, "model", "model"))
    geometry, scan_echo, cell_average = _build_geometry(_get(raw, "scan", "scan"))

    trials = seed = None
    mc_echo = {}
    if mode in ("montecarlo", "compare"):
        mc = _get(raw, "montecarlo", "montecarlo", required=False, default={})
        if not isinstance(mc, dict):
            raise ConfigError("montecarlo", "expected a [montecarlo] table")
        trials = overrides.get("trials")
        if trials is None:
            trials = _get(mc, "trials", "montecarlo.trials")
        trials = _parse_int(trials, "montecarlo.trials", 100)
        seed = overrides.get("seed")
        if seed is None:
            seed = _get(mc, "seed", "montecarlo.seed")
        seed = _parse_int(seed, "montecarlo.seed", 0)
        mc_echo = {"trials": trials, "seed": seed}

    workers = overrides.get("workers")
    if workers is None:
        workers = raw.get("workers")
    if workers is not None:
        workers = _parse_int(workers, "workers", 1)

    # workers deliberately left out of the echo: results must not depend on
    # (or record) how the work was split
    echo = {"mode": mode, "model": model_echo, "scan": scan_echo}
    if mc_echo:
        echo["montecarlo"] = mc_echo
    return RunConfig(
        mode=mode,
        out=out,
        model=model,
        invert=invert,
        geometry=geometry,
        trials=trials,
        seed=seed,
        workers=workers,
        cell_average=cell_average,
        echo=echo,
    )


def _geometry_dict(geom: ScanGeometry) -> dict:
    if isinstance(geom, LineScan):
        return {
            "kind": "line",
            "start": [geom.start.real, geom.start.imag],
            "stop": [geom.stop.real, geom.stop.imag],
            "points": geom.points,
            "strip_half_width": geom.strip_half_width,
        }
    if isinstance(geom, GridScan):
        return {
            "kind": "grid",
            "corner_min": [geom.corner_min.real, geom.corner_min.imag],
            "corner_max": [geom.corner_max.real, geom.corner_max.imag],
            "nx": geom.nx,
            "ny": geom.ny,
        }
    raise InvalidInputError(f"unsupported geometry {type(geom).__name__}")


def _geometry_from_dict(d: dict) -> ScanGeometry:
    if d.get("kind") == "line":
        return LineScan(
            complex(d["start"][0], d["start"][1]),
            complex(d["stop"][0], d["stop"][1]),
            d["points"],
            d["strip_half_width"],
        )
    if d.get("kind") == "grid":
        return GridScan(
            complex(d["corner_min"][0], d["corner_min"][1]),
            complex(d["corner_max"][0], d["corner_max"][1]),
            d["nx"],
            d["ny"],
        )
    raise InvalidInputError(f"unsupported geometry payload {d!r}")


def write_profile(path, profile: DensityProfile, echo: dict) -> None:
    """CSV with the resolved config echoed; floats use shortest round-trip."""
    lines = [
        "# density profile",
        f"# config = {json.dumps(echo, sort_keys=True)}",
        f"# provenance = {profile.provenance}",
        f"# count_norm = {profile.count_norm!r}",
        f"# accepted = {profile.accepted}",
        f"# discarded = {profile.discarded}",
        f"# geometry = {json.dumps(_geometry_dict(profile.geometry), sort_keys=True)}",
        "re_z,im_z,rho,stderr,provenance",
    ]
    for p, rho, err in zip(profile.points, profile.rho, profile.stderr):
        lines.append(f"{p.real!r},{p.imag!r},{rho!r},{err!r},{profile.provenance}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_profile(path) -> DensityProfile:
    """Rebuild a DensityProfile from its CSV; exact for files we wrote."""
    text = Path(path).read_text(encoding="ascii")
    meta = {}
    points, rho, stderr, provenance = [], [], [], "analytic"
    header_seen = False
    for line in text.splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if " = " in body:
                key, _, value = body.partition(" = ")
                meta[key.strip()] = value.strip()
            continue
        if not line.strip():
            continue
        if not header_seen:
            if line.strip() != "re_z,im_z,rho,stderr,provenance":
                raise InvalidInputError(f"unexpected CSV header {line!r} in {path}")
            header_seen = True
            continue
        parts = line.split(",", 4)  # provenance itself may contain commas
        if len(parts) != 5:
            raise InvalidInputError(f"malformed CSV row {line!r} in {path}")
        points.append(complex(float(parts[0]), float(parts[1])))
        rho.append(float(parts[2]))
        stderr.append(float(parts[3]))
        provenance = parts[4]
    for key in ("geometry", "count_norm", "accepted", "discarded"):
        if key not in meta:
            raise InvalidInputError(f"missing '# {key} = ...' comment in {path}")
    geometry = _geometry_from_dict(json.loads(meta["geometry"]))
    return DensityProfile(
        geometry=geometry,
        points=tuple(points),
        rho=tuple(rho),
        stderr=tuple(stderr),
        provenance=provenance,
        count_norm=float(meta["count_norm"]),
        accepted=int(meta["accepted"]),
        discarded=int(meta["discarded"]),
    )


def run(rc: RunConfig) -> int:
    """Execute a run; returns the process exit code."""
    if rc.mode == "analytic":
        profile = analytic_profile(
            rc.model, rc.geometry, invert=rc.invert, workers=rc.workers,
            cell_average=rc.cell_average,
        )
        write_profile(rc.out, profile, rc.echo)
        print(f"wrote {rc.out} ({len(profile.points)} points, analytic)")
        return 0
    if rc.mode == "montecarlo":
        profile = empirical_density(
            rc.model, rc.geometry, rc.trials, rc.seed, invert=rc.invert, workers=rc.workers
        )
        write_profile(rc.out, profile, rc.echo)
        print(
            f"wrote {rc.out} ({len(profile.points)} points, "
            f"{profile.accepted} trials kept, {profile.discarded} discarded)"
        )
        return 0
    # compare
    base = rc.out[:-4] if rc.out.endswith(".csv") else rc.out
    ana = analytic_profile(
        rc.model, rc.geometry, invert=rc.invert, workers=rc.workers,
        cell_average=rc.cell_average,
    )
    emp = empirical_density(
        rc.model, rc.geometry, rc.trials, rc.seed, invert=rc.invert, workers=rc.workers
    )
    report = compare(ana, emp)
    write_profile(f"{base}.analytic.csv", ana, rc.echo)
    write_profile(f"{base}.empirical.csv", emp, rc.echo)
    Path(f"{base}.report.txt").write_text(report.render(), encoding="ascii")
    print(report.render())
    print(f"wrote {base}.analytic.csv, {base}.empirical.csv, {base}.report.txt")
    return 0 if report.passed else 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="density",
        description="Spectral densities of structured non-Hermitian random matrices.",
    )
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--mode", choices=_MODES, help="override the config's mode")
    parser.add_argument("--out", help="override the output path")
    parser.add_argument("--seed", type=int, help="override the sampling seed")
    parser.add_argument("--trials", type=int, help="override the trial count")
    parser.add_argument("--workers", type=int, help="worker count (default: DENSITY_WORKERS or auto)")
    args = parser.parse_args(argv)

    overrides = {
        "mode": args.mode,
        "out": args.out,
        "seed": args.seed,
        "trials": args.trials,
        "workers": args.workers,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        rc = build_run_config(load_config(args.config), overrides)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    try:
        return run(rc)
    except SpecDensError as exc:
        detail = getattr(exc, "diagnostics", None)
        print(f"numerical failure: {exc}" + (f" (diagnostics: {detail})" if detail else ""), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
