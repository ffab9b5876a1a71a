"""``esterle`` command line: set -> rho -> omega -> u_n -> delta_n -> reports."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
from filelock import FileLock, Timeout

from . import __version__, reports
from .config import DEFAULTS, SCHEMA_VERSION, ConfigError, load_config
from .inner import (
    DeltaGrid,
    GridParams,
    InnerEval,
    atom_measure_for,
    delta_sweep,
    measure_from_dict,
    verify_theorem,
)
from .majorant import OMEGA_SCHEMA, MajorantOmega, RhoCurve, RuleParams, build_omega, verify_liminf_condition
from .removability import Contour, removability_test, test_function_from_dict
from .sequence import u_sequence
from .thinsets import standard_families, thin_set_from_dict

LOCK_NAME = ".esterle.lock"


class VerificationFailed(Exception):
    def __init__(self, paths):
        super().__init__("verification failed")
        self.paths = paths


# -- argument parsing -----------------------------------------------------


def _json_arg(value: str):
    """A JSON literal, a path to a JSON file, or a built-in family name."""
    fams = standard_families()
    if value in fams:
        return fams[value].to_dict()
    p = Path(value)
    if p.suffix == ".json" and p.exists():
        return json.loads(p.read_text())
    try:
        return json.loads(value)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"not JSON, a JSON file or a family name: {value!r}") from exc


def _measure_arg(value: str):
    if value == "atom":
        return None
    if value.startswith("snapped:"):
        return {"variant": "cantor", "depth": int(value.split(":", 1)[1])}
    return _json_arg(value)


def _version_text() -> str:
    rp = DEFAULTS["rule_params"]
    lines = [
        f"esterle {__version__}",
        f"config schema_version {SCHEMA_VERSION}",
        f"omega schema {OMEGA_SCHEMA}",
        f"rule growth {rp['growth']} min_increment {rp['min_increment']} max_halvings {rp['max_halvings']}",
        f"root_rel_tol {DEFAULTS['root_rel_tol']}",
        f"slack {DEFAULTS['slack']}",
        f"omega_t_min {DEFAULTS['omega_t_min']}",
    ]
    return "\n".join(lines)


class _VersionAction(argparse.Action):
    def __init__(self, option_strings, dest, **kw):
        super().__init__(option_strings, dest, nargs=0, help="print schema and tolerance defaults")

    def __call__(self, parser, namespace, values, option_string=None):
        print(_version_text())
        parser.exit(0)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (JSON)")
    common.add_argument("--threads", type=int, help="bound on worker threads")
    common.add_argument("--figures", action="store_true", default=None, help="also write PNG figures")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--set", dest="set", type=_json_arg, help="set descriptor or family name")

    p = argparse.ArgumentParser(prog="esterle", description=__doc__)
    p.add_argument("--version", action=_VersionAction)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("measure-curve", parents=[common], help="|E_t|, rho and rho1 table")
    s = sub.add_parser("omega", parents=[common], help="majorant knots and liminf bounds")
    s.add_argument("--t-min", dest="omega_t_min", type=float)
    s = sub.add_parser("u-seq", parents=[common], help="roots t_n and u_n")
    s.add_argument("--n-max", dest="n_max", type=int)
    s = sub.add_parser("delta", parents=[common], help="delta_n for a singular inner function")
    s.add_argument("--measure", type=_measure_arg)
    s.add_argument("--n", dest="n_max", type=int)
    s = sub.add_parser("verify", parents=[common], help="u_n^2 delta_n witness check")
    s.add_argument("--measure", type=_measure_arg)
    s.add_argument("--n-max", dest="n_max", type=int)
    s.add_argument("--slack", type=float)
    s = sub.add_parser("removability", parents=[common], help="classify a test function")
    s.add_argument("--function", type=_json_arg, required=False)
    s.add_argument("--omega", type=Path, help="omega JSON from the omega subcommand")
    s.add_argument("--etas", type=float, nargs="+")
    sub.add_parser("all", parents=[common], help="full pipeline from a config")
    return p


def _overrides(ns: argparse.Namespace) -> dict:
    out = {}
    for key in ("threads", "figures", "output_dir", "set", "n_max", "omega_t_min", "slack"):
        if getattr(ns, key, None) is not None:
            out[key] = getattr(ns, key)
    if getattr(ns, "measure", None) is not None:
        out["measure"] = ns.measure
    func = getattr(ns, "function", None)
    etas = getattr(ns, "etas", None)
    if func is not None or etas is not None:
        rem = {}
        if func is not None:
            rem["function"] = func
        if etas is not None:
            rem["etas"] = etas
        out["removability"] = rem
    return out


# -- pipeline stages --------------------------------------------------------


class Run:
    """One pipeline run; stages are computed lazily and shared."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.out = Path(cfg["output_dir"])
        self.threads = cfg["threads"]
        self.E = thin_set_from_dict(cfg["set"])
        self.curve = RhoCurve(self.E)
        self._omega = None
        self._useq = None
        self.written: list[Path] = []

    def _path(self, name: str) -> Path:
        return self.out / name

    def _record(self, path: Path) -> Path:
        self.written.append(path)
        return path

    @property
    def figures(self) -> bool:
        return bool(self.cfg["figures"])

    def omega(self, omega_path: Path | None = None) -> MajorantOmega:
        if self._omega is None:
            if omega_path is not None:
                data = json.loads(Path(omega_path).read_text())
                self._omega = MajorantOmega.from_dict(data)
            else:
                self._omega = build_omega(self.curve, self.cfg["t_start"], RuleParams(**self.cfg["rule_params"]),
                                          self.cfg["omega_t_min"])
        return self._omega

    def useq(self, N: int):
        if self._useq is None or self._useq.N < N:
            self._useq = u_sequence(self.omega(), N, self.cfg["root_rel_tol"], self.threads)
        return self._useq

    def measure(self):
        m = self.cfg["measure"]
        if m is None:
            return atom_measure_for(self.E)
        if m.get("variant") == "cantor" and "set" not in m:
            m = dict(m, set=self.cfg["set"])
        return measure_from_dict(m)

    def grid_params(self) -> GridParams:
        g = dict(self.cfg["grid"])
        if "offsets" in g:
            g["offsets"] = tuple(g["offsets"])
        return GridParams(**g)

    # stages

    def measure_curve(self):
        c = self.cfg["curve"]
        ts = np.geomspace(c["t_min"], c["t_max"], c["points"])
        rows = list(reports.measure_rows(self.curve, ts))
        self._record(reports.write_csv(self._path("measure_curve.csv"), reports.MEASURE_HEADER, rows))
        if self.figures:
            from . import figures
            self._record(figures.plot_measure_curve(rows, self._path("measure_curve.png")))

    def omega_stage(self):
        om = self.omega()
        om.validate()
        self._record(reports.write_csv(self._path("knots.csv"), reports.KNOT_HEADER, reports.knot_rows(om)))
        self._record(reports.write_json(self._path("omega.json"), om.to_dict()))
        bounds = verify_liminf_condition(om)
        self._record(reports.write_csv(self._path("liminf.csv"), reports.LIMINF_HEADER, bounds))
        if self.figures:
            from . import figures
            self._record(figures.plot_omega(om, self._path("omega.png")))
            self._record(figures.plot_liminf(bounds, self._path("liminf.png")))

    def useq_stage(self):
        seq = self.useq(self.cfg["n_max"])
        rows = [r for r in seq.rows() if r[0] <= self.cfg["n_max"]]
        self._record(reports.write_csv(self._path("useq.csv"), reports.USEQ_HEADER, rows))
        if self.figures:
            from . import figures
            self._record(figures.plot_useq(seq, self._path("useq.png")))

    def delta_stage(self):
        ie = InnerEval(self.measure())
        grid = DeltaGrid.build(ie, self.grid_params(), self.threads)
        reps = delta_sweep(ie, range(1, self.cfg["n_max"] + 1), grid, self.threads)
        rows = [(r.n, r.log_delta, r.log_delta_exterior, r.grid_log_delta) for r in reps]
        self._record(reports.write_csv(self._path("delta.csv"),
                                       ("n", "log_delta_n", "log_delta_n_exterior", "grid_log_delta_n"), rows))

    def verify_stage(self):
        N = self.cfg["n_max"]
        ie = InnerEval(self.measure())
        grid = DeltaGrid.build(ie, self.grid_params(), self.threads)
        rep = verify_theorem(ie, self.useq(N), N, grid, self.cfg["slack"], self.threads)
        csv_path = self._record(reports.write_csv(self._path("verification.csv"), reports.DELTA_HEADER,
                                                  reports.delta_rows(rep)))
        warned = sorted({w for r in rep.reports for w in r.warnings})
        summary = {
            "success": rep.success,
            "n_max": N,
            "slack": rep.slack,
            "witnesses": rep.witnesses,
            "improvements": rep.improvements,
            "min_log_u_delta": min(rep.running_min),
            "max_duality_gap": max(abs(r.log_delta - r.log_delta_exterior) for r in rep.reports),
            "measure": ie.measure.to_dict(),
            "warnings": warned,
            "diagnostics": rep.diagnostics,
        }
        json_path = self._record(reports.write_json(self._path("verification.json"), summary))
        if self.figures:
            from . import figures
            self._record(figures.plot_verification(rep, self._path("verification.png")))
        if not rep.success:
            raise VerificationFailed([csv_path, json_path])

    def removability_stage(self, omega_path: Path | None = None):
        rc = dict(self.cfg["removability"] or {})
        if "function" not in rc:
            raise ConfigError("removability needs a function descriptor")
        fd = dict(rc["function"])
        if fd.get("tag", "").lower() in ("reflected_inner", "reflectedinner") and "measure" not in fd:
            fd["measure"] = self.measure()
        elif isinstance(fd.get("measure"), dict):
            fd["measure"] = measure_from_dict(fd["measure"])
        f = test_function_from_dict(fd)
        contour = Contour.around(self.E, rc.get("M", 512))
        etas = rc.get("etas", [0.1, 0.03, 0.01, 0.003, 0.001])
        rep = removability_test(f, self.E, contour, self.omega(omega_path), etas)
        data = rep.to_dict()
        data["function"] = f.to_dict()
        data["contour"] = {"center": [contour.center.real, contour.center.imag],
                           "radius": contour.radius, "M": contour.M}
        self._record(reports.write_json(self._path("removability.json"), data))
        return rep


def _execute(command: str, run: Run, ns: argparse.Namespace) -> None:
    if command == "measure-curve":
        run.measure_curve()
    elif command == "omega":
        run.omega_stage()
    elif command == "u-seq":
        run.useq_stage()
    elif command == "delta":
        run.delta_stage()
    elif command == "verify":
        run.verify_stage()
    elif command == "removability":
        run.removability_stage(getattr(ns, "omega", None))
    elif command == "all":
        run.measure_curve()
        run.omega_stage()
        run.useq_stage()
        failure = None
        try:
            run.verify_stage()
        except VerificationFailed as exc:
            failure = exc
        if run.cfg["removability"] is not None:
            run.removability_stage()
        if failure is not None:
            raise failure


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = load_config(ns.config, _overrides(ns))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    run = Run(cfg)
    run.out.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(run.out / LOCK_NAME))
    try:
        with lock.acquire(timeout=0):
            try:
                _execute(ns.command, run, ns)
            except ConfigError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 2
            except VerificationFailed as exc:
                print("verification failed; see:", file=sys.stderr)
                for p in exc.paths:
                    print(f"  {p}", file=sys.stderr)
                return 1
    except Timeout:
        print(f"error: another run holds {run.out / LOCK_NAME}", file=sys.stderr)
        return 2
    finally:
        Path(run.out / LOCK_NAME).unlink(missing_ok=True)
    for p in run.written:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
