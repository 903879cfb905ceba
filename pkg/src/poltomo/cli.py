"""Command-line front end.

Subcommands evaluate characteristic functions and quasi-probability surfaces
on grids, simulate photocount tomograms, reconstruct distributions, and sweep
the negativity volume.  Every run merges an optional JSON config file with
command-line overrides, rejects unknown config keys, writes CSV bodies with a
one-line header, and pairs each output with a JSON sidecar holding the fully
resolved config, the package version, and error estimates.

Exit codes: 0 success, 2 config error, 3 numerical-convergence failure,
4 coverage or precondition failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, charfn, measure, pqpd, reconstruct
from .charfn import CharPoint, HighlightedState
from .numerics import QuadratureConvergenceError, centered_axis
from .pqpd import GridCoverageError, Sqz1Family
from .reconstruct import CoverageError, WindowingError
from .states import (
    Coherent,
    DetectorModel,
    Fock,
    LinearPolarizedState,
    SqueezedFock1,
    SqueezedVacuum,
    Vacuum,
    lp_photon_probs,
)

OUTDIR_ENV = "POLTOMO_OUTDIR"


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def write_sidecar(path: Path, config: dict, estimates: dict) -> None:
    payload = {"version": __version__, "resolved_config": config,
               "estimates": estimates}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="ascii")


def _merge_config(args: argparse.Namespace, allowed: dict) -> dict:
    config = {}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        for key in loaded:
            if key not in allowed:
                raise ConfigError(f"unknown config key: {key!r}")
        config.update(loaded)
    for key in allowed:
        flag = getattr(args, key, None)
        if flag is not None:
            config[key] = flag
    for key, default in allowed.items():
        if key not in config:
            if default is _REQUIRED:
                raise ConfigError(f"missing required config key: {key!r}")
            config[key] = default
    return config


_REQUIRED = object()


def _outdir(config: dict) -> Path:
    base = config.get("output_dir") or os.environ.get(OUTDIR_ENV) or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parse_state(spec) -> object:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("state specs are objects with a 'kind'")
    kind = spec["kind"]
    try:
        if kind == "vacuum":
            return Vacuum()
        if kind == "fock":
            return Fock(int(spec["n"]))
        if kind == "coherent":
            return Coherent(complex(spec.get("alpha_re", 0.0),
                                    spec.get("alpha_im", 0.0)))
        if kind == "squeezed_vacuum":
            return SqueezedVacuum(float(spec["r"]))
        if kind == "squeezed_fock1":
            return SqueezedFock1(float(spec["r"]))
        if kind == "highlighted":
            return HighlightedState(
                _parse_state(spec["signal"]),
                complex(spec.get("alpha0_re", 0.0), spec.get("alpha0_im", 0.0)))
    except KeyError as exc:
        raise ConfigError(f"state spec for {kind!r} is missing {exc}")
    raise ConfigError(f"unknown state kind: {kind!r}")


def _axis(spec, name: str) -> np.ndarray:
    if (not isinstance(spec, (list, tuple)) or len(spec) != 3
            or int(spec[2]) < 2):
        raise ConfigError(f"axis {name!r} must be [lo, hi, count>=2]")
    return np.linspace(float(spec[0]), float(spec[1]), int(spec[2]))


def _lp_state(config: dict) -> LinearPolarizedState:
    if config.get("probs") is not None:
        return LinearPolarizedState(tuple(float(p) for p in config["probs"]))
    state = _parse_state(config["state"])
    return lp_photon_probs(state, config["eta"])


# ---------------------------------------------------------------- charfn ---

_CHARFN_KEYS = {
    "function": _REQUIRED, "state": None, "probs": None, "n": None,
    "alpha_re": 0.0, "alpha_im": 0.0, "alpha0_re": None, "alpha0_im": 0.0,
    "r": 0.0, "eta": 1.0, "sigma": 0.0, "u1": None, "u2": _REQUIRED,
    "u3": _REQUIRED, "output": "charfn", "output_dir": None,
}


def cmd_charfn(args) -> int:
    config = _merge_config(args, _CHARFN_KEYS)
    outdir = _outdir(config)
    u2 = _axis(config["u2"], "u2")
    u3 = _axis(config["u3"], "u3")
    fn = config["function"]
    needs_u1 = fn in ("lp", "fock_lp", "two_mode_coherent")
    if needs_u1:
        if config["u1"] is None:
            raise ConfigError(f"function {fn!r} needs a u1 axis")
        u1 = _axis(config["u1"], "u1")
        U1, U2, U3 = np.meshgrid(u1, u2, u3, indexing="ij")
        point = CharPoint(U1, U2, U3)
    else:
        u1 = None
        U2, U3 = np.meshgrid(u2, u3, indexing="ij")
        point = None

    alpha0 = (complex(config["alpha0_re"] or 0.0, config["alpha0_im"])
              if config["alpha0_re"] is not None else None)
    estimates: dict = {}
    if fn == "lp":
        vals = charfn.chi_lp(_lp_state(config), point)
    elif fn == "fock_lp":
        if config["n"] is None:
            raise ConfigError("fock_lp needs 'n'")
        vals = charfn.chi_fock_lp(point, int(config["n"]))
    elif fn == "two_mode_coherent":
        alpha = complex(config["alpha_re"], config["alpha_im"])
        vals = charfn.chi_two_mode_coherent(point, alpha, alpha0 or 0.0)
    elif fn == "highlighted_asymptotic":
        hs = HighlightedState(_parse_state(config["state"]), alpha0)
        det = DetectorModel(config["eta"], config["sigma"])
        vals = charfn.chi_highlighted_asymptotic((U2, U3), hs, det)
    elif fn in ("highlighted_exact", "sqz0_exact", "sqz1_exact"):
        vals = np.empty(U2.shape, dtype=complex)
        worst_err = 0.0
        for idx in np.ndindex(U2.shape):
            p2 = (U2[idx], U3[idx])
            if fn == "sqz0_exact":
                vals[idx] = charfn.chi_sqz0_exact(p2, config["r"],
                                                  config["eta"], alpha0)
            elif fn == "sqz1_exact":
                vals[idx] = charfn.chi_sqz1_exact(p2, config["r"],
                                                  config["eta"], alpha0)
            else:
                from .states import apply_loss
                signal = _parse_state(config["state"])
                lossy = (apply_loss(signal, config["eta"])
                         if config["eta"] < 1.0 else signal)
                vals[idx], err = charfn.chi_highlighted_exact(
                    p2, lossy, alpha0, return_error=True)
                worst_err = max(worst_err, err)
        estimates["quadrature_error"] = worst_err
    else:
        raise ConfigError(f"unknown characteristic function: {fn!r}")

    if config["sigma"] and fn not in ("highlighted_asymptotic",):
        lam = (np.sqrt(U2**2 + U3**2) if point is None else point.lam)
        vals = charfn.smooth_char(vals, lam, config["sigma"])

    stem = outdir / config["output"]
    if needs_u1:
        rows = ((u1[i], u2[j], u3[k], vals[i, j, k].real, vals[i, j, k].imag)
                for i in range(len(u1)) for j in range(len(u2))
                for k in range(len(u3)))
        write_csv(stem.with_suffix(".csv"),
                  "u1,u2,u3,chi_re,chi_im", rows)
    else:
        rows = ((u2[j], u3[k], vals[j, k].real, vals[j, k].imag)
                for j in range(len(u2)) for k in range(len(u3)))
        write_csv(stem.with_suffix(".csv"), "u2,u3,chi_re,chi_im", rows)
    write_sidecar(stem.with_suffix(".json"), config, estimates)
    _write_resolved(stem, config)
    return 0


# ------------------------------------------------------------------ pqpd ---

_PQPD_KEYS = {
    "surface": _REQUIRED, "m": 1, "gamma": 1e-3, "state": None, "probs": None,
    "eta": 1.0, "sigma": None, "r": 0.0, "eps2": 0.0, "s1": None, "s2": None,
    "s3": None, "s23": None, "x": None, "p": None, "output": "pqpd",
    "output_dir": None,
}


def cmd_pqpd(args) -> int:
    config = _merge_config(args, _PQPD_KEYS)
    outdir = _outdir(config)
    stem = outdir / config["output"]
    surface = config["surface"]
    estimates: dict = {}
    if surface == "w_m":
        if config["s23"] is not None:
            s23 = _axis(config["s23"], "s23")
            vals = pqpd.w_m(config["m"], s23, config["gamma"])
            write_csv(stem.with_suffix(".csv"), "s23,value",
                      zip(s23, vals))
        else:
            s2 = _axis(config["s2"], "s2")
            s3 = _axis(config["s3"], "s3")
            vals = pqpd.w_m(config["m"], np.hypot(s2[:, None], s3[None, :]),
                            config["gamma"])
            write_csv(stem.with_suffix(".csv"), "s2,s3,value",
                      ((s2[i], s3[j], vals[i, j])
                       for i in range(len(s2)) for j in range(len(s3))))
    elif surface == "marginal_w23":
        state = _lp_state(config)
        if config["s23"] is not None:
            s23 = _axis(config["s23"], "s23")
            vals = pqpd.marginal_w23_profile(state, s23, config["gamma"])
            write_csv(stem.with_suffix(".csv"), "s23,value", zip(s23, vals))
        else:
            grid = pqpd.marginal_w23_lp(
                state, (_axis(config["s2"], "s2"), _axis(config["s3"], "s3")),
                config["gamma"])
            estimates["mass"] = grid.meta["mass"]
            _write_grid_csv(stem, ("s2", "s3"), grid)
    elif surface == "smoothed_lp":
        state = _lp_state(config)
        s1 = _axis(config["s1"], "s1")
        s2 = _axis(config["s2"], "s2")
        s3 = _axis(config["s3"], "s3")
        vals = pqpd.smoothed_pqpd_lp(state, config["sigma"], s1[:, None, None],
                                     s2[None, :, None], s3[None, None, :])
        write_csv(stem.with_suffix(".csv"), "s1,s2,s3,value",
                  ((s1[i], s2[j], s3[k], vals[i, j, k])
                   for i in range(len(s1)) for j in range(len(s2))
                   for k in range(len(s3))))
    elif surface == "wigner":
        state = _parse_state(config["state"])
        grid = pqpd.wigner(state,
                           _axis(config["x"], "x") if config["x"] else None,
                           _axis(config["p"], "p") if config["p"] else None)
        estimates.update({k: grid.meta[k]
                          for k in ("mass", "mass_error", "imag_residual")})
        _write_grid_csv(stem, ("x", "p"), grid)
    elif surface in ("sqz0", "sqz1"):
        s2 = _axis(config["s2"], "s2")
        s3 = _axis(config["s3"], "s3")
        fn = (pqpd.w23_highlighted_sqz0 if surface == "sqz0"
              else pqpd.w23_highlighted_sqz1)
        vals = fn((s2[:, None], s3[None, :]), config["r"], config["eps2"])
        estimates["min"] = float(np.min(vals))
        estimates["max"] = float(np.max(vals))
        write_csv(stem.with_suffix(".csv"), "s2,s3,value",
                  ((s2[i], s3[j], vals[i, j])
                   for i in range(len(s2)) for j in range(len(s3))))
    else:
        raise ConfigError(f"unknown surface: {surface!r}")
    write_sidecar(stem.with_suffix(".json"), config, estimates)
    _write_resolved(stem, config)
    return 0


def _write_grid_csv(stem: Path, names, grid: pqpd.QpdGrid) -> None:
    axes = grid.axes
    if len(axes) == 2:
        rows = ((axes[0][i], axes[1][j], grid.values[i, j])
                for i in range(len(axes[0])) for j in range(len(axes[1])))
        write_csv(stem.with_suffix(".csv"), f"{names[0]},{names[1]},value", rows)
    else:
        rows = ((axes[0][i], axes[1][j], axes[2][k], grid.values[i, j, k])
                for i in range(len(axes[0])) for j in range(len(axes[1]))
                for k in range(len(axes[2])))
        write_csv(stem.with_suffix(".csv"),
                  f"{names[0]},{names[1]},{names[2]},value", rows)


# -------------------------------------------------------------- simulate ---

_SIMULATE_KEYS = {
    "source": _REQUIRED, "eta": _REQUIRED, "sigma": 0.0, "mode": "exact",
    "theta": None, "phi": None, "phi_count": None, "settings": None,
    "shots": 100000, "seed": 0, "n_max": None, "output": "tomograms",
    "output_dir": None,
}


def _parse_settings(config: dict) -> list[measure.WaveplateSetting]:
    if config["settings"] is not None:
        return [measure.WaveplateSetting(float(t), float(p))
                for t, p in config["settings"]]
    theta = config["theta"]
    if theta is None:
        raise ConfigError("provide 'settings' or 'theta' (+ 'phi'/'phi_count')")
    if config["phi_count"] is not None:
        phis = np.arange(int(config["phi_count"])) * np.pi / int(config["phi_count"])
        return [measure.WaveplateSetting(float(theta), float(p)) for p in phis]
    return [measure.WaveplateSetting(float(theta), float(config["phi"] or 0.0))]


def cmd_simulate(args) -> int:
    config = _merge_config(args, _SIMULATE_KEYS)
    outdir = _outdir(config)
    stem = outdir / config["output"]
    source = _parse_state(config["source"])
    settings = _parse_settings(config)
    estimates: dict = {}
    if config["mode"] == "exact":
        tomograms = [measure.count_pmf(source, s, config["eta"],
                                       n_max=config["n_max"],
                                       sigma=config["sigma"])
                     for s in settings]
        rows = []
        for i, t in enumerate(tomograms):
            for n, p in zip(t.support, t.pmf):
                rows.append((i, t.setting.theta, t.setting.phi, int(n), p))
        write_csv(stem.with_suffix(".csv"),
                  "setting_index,theta,phi,n,probability", rows)
        estimates["pmf_mass_defect"] = max(
            abs(1.0 - float(np.sum(t.pmf))) for t in tomograms)
    elif config["mode"] == "sample":
        tomograms = measure.sample(source, settings, int(config["shots"]),
                                   config["sigma"], int(config["seed"]),
                                   config["eta"])
    else:
        raise ConfigError(f"unknown simulate mode: {config['mode']!r}")
    measure.save_tomograms(stem.with_suffix(".npz"), tomograms, header=config)
    write_sidecar(stem.with_suffix(".json"), config, estimates)
    _write_resolved(stem, config)
    return 0


# ----------------------------------------------------------- reconstruct ---

_RECONSTRUCT_KEYS = {
    "input": _REQUIRED, "dimension": 2, "u_max": _REQUIRED, "n_grid": 64,
    "n_radial": 129, "window": False, "negativity": False,
    "coordinate_system": "stokes", "output": "qpd", "output_dir": None,
}


def cmd_reconstruct(args) -> int:
    config = _merge_config(args, _RECONSTRUCT_KEYS)
    outdir = _outdir(config)
    stem = outdir / config["output"]
    tomograms, _run = measure.load_tomograms(config["input"])
    n = int(config["n_grid"])
    ax = centered_axis(n, 2.0 * float(config["u_max"]) / n)
    if int(config["dimension"]) == 2:
        cg = reconstruct.assemble_2d(tomograms, (ax, ax),
                                     n_radial=int(config["n_radial"]))
        grid = reconstruct.invert_2d(cg, config["coordinate_system"],
                                     window=bool(config["window"]))
        names = ("S2", "S3")
    else:
        cg = reconstruct.assemble_3d(tomograms, (ax, ax, ax),
                                     n_radial=int(config["n_radial"]))
        grid = reconstruct.invert_3d(cg, config["coordinate_system"],
                                     window=bool(config["window"]))
        names = ("S1", "S2", "S3")
    estimates = {"mass": grid.meta["mass"],
                 "imag_residual": grid.meta["imag_residual"],
                 "noise_std": grid.meta["noise_std"],
                 "interp_error_est": grid.meta.get("interp_error_est"),
                 "max": float(grid.values.max()),
                 "min": float(grid.values.min()),
                 "worst_gap": cg.meta["worst_gap"]}
    if config["negativity"]:
        estimates["negativity_volume"] = pqpd.negativity_volume(grid)
    _write_grid_csv(stem, names, grid)
    write_sidecar(stem.with_suffix(".json"), config, estimates)
    _write_resolved(stem, config)
    return 0


# ------------------------------------------------------------ negativity ---

_NEGATIVITY_KEYS = {
    "r_values": (0.0,), "eps2_start": 0.0, "eps2_stop": 1.0,
    "eps2_count": 11, "output": "negativity", "output_dir": None,
}


def cmd_negativity(args) -> int:
    config = _merge_config(args, _NEGATIVITY_KEYS)
    outdir = _outdir(config)
    stem = outdir / config["output"]
    eps2_grid = np.linspace(float(config["eps2_start"]),
                            float(config["eps2_stop"]),
                            int(config["eps2_count"]))
    report = []
    rows = []
    for r in config["r_values"]:
        curve = []
        for eps2 in eps2_grid:
            v = pqpd.negativity_volume(Sqz1Family(float(r), float(eps2)))
            curve.append({"eps2": float(eps2), "negativity_volume": v,
                          "negative_region":
                              bool(pqpd.negativity_condition(float(eps2)))})
            rows.append((float(r), float(eps2), v))
        report.append({"r": float(r), "squeeze_factor": math.exp(float(r)),
                       "curve": curve})
    write_csv(stem.with_suffix(".csv"), "r,eps2,negativity_volume", rows)
    payload = {"version": __version__, "resolved_config": config,
               "sweeps": report}
    stem.with_suffix(".report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="ascii")
    write_sidecar(stem.with_suffix(".json"), config, {})
    _write_resolved(stem, config)
    return 0


# --------------------------------------------------------------- figures ---

_FIGURES_KEYS = {"output_dir": None}


def cmd_figures(args) -> int:
    """Run the pinned end-to-end data recipes behind the standard plots."""
    config = _merge_config(args, _FIGURES_KEYS)
    outdir = _outdir(config)

    # singular ring kernel: radial profile and 2-d map, regularized
    s23 = np.linspace(0.0, 2.5, 501)
    write_csv(outdir / "ring_kernel_profile.csv", "s23,value",
              zip(s23, pqpd.w_m(1, s23, 1e-3)))
    ax = np.linspace(-1.6, 1.6, 201)
    vals = pqpd.w_m(1, np.hypot(ax[:, None], ax[None, :]), 1e-3)
    write_csv(outdir / "ring_kernel_map.csv", "s2,s3,value",
              ((ax[i], ax[j], vals[i, j])
               for i in range(len(ax)) for j in range(len(ax))))

    # count distributions at eta = 0.6, theta = pi/2
    setting = measure.WaveplateSetting(math.pi / 2.0, 0.0)
    for name, source in (("single_photon", Fock(1)),
                         ("coherent", Coherent(1.0 + 0.0j))):
        t = measure.count_pmf(source, setting, 0.6)
        write_csv(outdir / f"count_pmf_{name}.csv", "n,probability",
                  ((int(n), p) for n, p in zip(t.support, t.pmf)))

    # highlighted squeezed-single-photon contours
    s = np.linspace(-4.0, 4.0, 161)
    for er, r in ((1, 0.0), (2, math.log(2.0))):
        for eps2 in (0.0, 0.7):
            vals = pqpd.w23_highlighted_sqz1((s[:, None], s[None, :]), r, eps2)
            tag = f"er{er}_eps2{str(eps2).replace('.', 'p')}"
            write_csv(outdir / f"highlighted_sqz1_{tag}.csv", "s2,s3,value",
                      ((s[i], s[j], vals[i, j])
                       for i in range(len(s)) for j in range(len(s))))

    # negativity-volume sweep over the inefficiency
    rows = []
    for er in (1.0, 2.0, math.sqrt(10.0)):
        r = math.log(er)
        for eps2 in np.linspace(0.0, 1.0, 21):
            rows.append((r, float(eps2),
                         pqpd.negativity_volume(Sqz1Family(r, float(eps2)))))
    write_csv(outdir / "negativity_volume_sweep.csv",
              "r,eps2,negativity_volume", rows)
    write_sidecar(outdir / "figures.json", config, {})
    return 0


def _write_resolved(stem: Path, config: dict) -> None:
    Path(str(stem) + ".config.json").write_text(
        json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="ascii")


# ------------------------------------------------------------------ main ---

def _add_common(sub: argparse.ArgumentParser, keys: dict) -> None:
    sub.add_argument("--config", help="JSON config file")
    for key, default in keys.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(default, bool):
            sub.add_argument(flag, type=lambda s: s.lower() in ("1", "true", "yes"),
                             default=None, metavar="BOOL")
        elif key in ("state", "source", "probs", "settings", "u1", "u2", "u3",
                     "s1", "s2", "s3", "s23", "x", "p", "r_values"):
            sub.add_argument(flag, type=json.loads, default=None,
                             help="JSON value")
        elif isinstance(default, int) and not isinstance(default, bool):
            sub.add_argument(flag, type=int, default=None)
        elif isinstance(default, float):
            sub.add_argument(flag, type=float, default=None)
        else:
            sub.add_argument(flag, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poltomo",
        description="Polarization tomography simulation and reconstruction")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)
    for name, keys, fn in (
            ("charfn", _CHARFN_KEYS, cmd_charfn),
            ("pqpd", _PQPD_KEYS, cmd_pqpd),
            ("simulate", _SIMULATE_KEYS, cmd_simulate),
            ("reconstruct", _RECONSTRUCT_KEYS, cmd_reconstruct),
            ("negativity", _NEGATIVITY_KEYS, cmd_negativity),
            ("figures", _FIGURES_KEYS, cmd_figures)):
        sub = subs.add_parser(name)
        _add_common(sub, keys)
        sub.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureConvergenceError, WindowingError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (CoverageError, GridCoverageError) as exc:
        print(f"coverage failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
