"""greedylab command line: seeded batch experiments, trace validation
against rate guarantees, and decay-rate reports with figures.

Subcommands:
    run       execute a config's targets x algorithms cross product
    validate  check one trace against one target certificate
    rate      fit decay rates and emit plot data plus a rendered figure

Exit codes: 0 success, 1 usage/config error, 2 rate-bound violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, greedy
from .dictionary import Dictionary, build_orthonormal, build_random_unit, build_union_bases
from .greedy import (
    A1Target,
    RunTrace,
    WeaknessSequence,
    make_a1_target,
    target_from_coeffs,
    target_from_json,
    target_to_json,
)
from .spaces import hilbert, lp, norm

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2

ENV_SEED = "GREEDYLAB_SEED"

_LABEL_RE = re.compile(r"^[A-Za-z0-9_.-]+$")
_ALGORITHM_NAMES = ("rpga", "wrpga", "pga", "oga", "rga")
_HILBERT_ONLY = ("pga", "oga", "rga")


class ConfigError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.config_path = path


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def _mix_seed(*parts: int) -> int:
    """Counter-based seed splitting: derive an independent stream seed
    from the top-level seed and per-section counters."""
    ss = np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# config parsing


@dataclass
class AlgorithmSpec:
    name: str
    label: str
    variant: str
    ls_tol: float
    ts: WeaknessSequence | None


@dataclass
class ExperimentConfig:
    seed: int
    geometry_kind: str
    p: float | None
    dict_generator: str
    dict_n: int | None
    dict_K: int | None
    dict_count: int | None
    dict_seed: int | None
    dict_path: str | None
    targets_explicit: list[dict[int, float]] | None
    targets_count: int | None
    targets_sparsity: int | None
    targets_M: float | None
    targets_seed: int | None
    algorithms: list[AlgorithmSpec]
    m_max: int
    eps: float
    out_dir: str
    formats: tuple[str, ...]


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(where, f"missing required key '{key}'")
    return obj[key]


def _no_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(where, f"unknown key(s) {unknown}; allowed: {sorted(allowed)}")


def _as_int(value, where: str, minimum: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(where, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(where, f"must be >= {minimum}, got {value}")
    return value


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a number, got {value!r}")
    return float(value)


def _parse_ts(obj, where: str) -> WeaknessSequence:
    if not isinstance(obj, dict):
        raise ConfigError(where, "ts must be an object")
    try:
        return WeaknessSequence.from_json(obj)
    except (KeyError, ValueError) as exc:
        raise ConfigError(where, f"invalid weakness sequence: {exc}") from exc


def _parse_algorithm(entry, index: int) -> AlgorithmSpec:
    where = f"algorithms[{index}]"
    if not isinstance(entry, dict):
        raise ConfigError(where, "each algorithm must be an object")
    _no_unknown(entry, {"name", "params", "ts", "label"}, where)
    name = _need(entry, "name", where)
    if name not in _ALGORITHM_NAMES:
        raise ConfigError(where, f"unknown algorithm {name!r}; known: {list(_ALGORITHM_NAMES)}")
    params = entry.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(where, "params must be an object")
    variant = "classic"
    ls_tol = 1e-12
    if name == "rga":
        _no_unknown(params, {"variant"}, f"{where}.params")
        variant = params.get("variant", "classic")
        if variant not in ("classic", "optimized"):
            raise ConfigError(where, f"rga variant must be 'classic' or 'optimized', got {variant!r}")
    elif name in ("rpga", "wrpga"):
        _no_unknown(params, {"ls_tol"}, f"{where}.params")
        if "ls_tol" in params:
            ls_tol = _as_number(params["ls_tol"], f"{where}.params.ls_tol")
            if ls_tol <= 0.0:
                raise ConfigError(where, f"ls_tol must be positive, got {ls_tol}")
    else:
        _no_unknown(params, set(), f"{where}.params")
    ts = None
    if name == "wrpga":
        ts = _parse_ts(_need(entry, "ts", where), f"{where}.ts")
    elif "ts" in entry:
        raise ConfigError(where, f"'ts' is only valid for wrpga, not {name!r}")
    label = entry.get("label", name)
    if not (isinstance(label, str) and _LABEL_RE.match(label)):
        raise ConfigError(where, f"label must match {_LABEL_RE.pattern}, got {label!r}")
    return AlgorithmSpec(name, label, variant, ls_tol, ts)


def parse_config(obj) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config", "top level must be an object")
    _no_unknown(
        obj,
        {"seed", "geometry", "dictionary", "targets", "algorithms", "m_max", "eps", "output"},
        "config",
    )
    seed = _as_int(obj.get("seed", 0), "config.seed")

    geo = _need(obj, "geometry", "config")
    if not isinstance(geo, dict):
        raise ConfigError("config.geometry", "must be an object")
    _no_unknown(geo, {"kind", "p"}, "config.geometry")
    kind = _need(geo, "kind", "config.geometry")
    if kind == "hilbert":
        if "p" in geo and geo["p"] is not None:
            raise ConfigError("config.geometry", "'p' is not valid for hilbert geometry")
        p = None
    elif kind == "lp":
        p = _as_number(_need(geo, "p", "config.geometry"), "config.geometry.p")
        if not p > 1.0:
            raise ConfigError("config.geometry", f"p must be > 1, got {p}")
    else:
        raise ConfigError("config.geometry", f"kind must be 'hilbert' or 'lp', got {kind!r}")

    dic = _need(obj, "dictionary", "config")
    if not isinstance(dic, dict):
        raise ConfigError("config.dictionary", "must be an object")
    generator = _need(dic, "generator", "config.dictionary")
    d_n = d_K = d_count = d_seed = d_path = None
    if generator == "orthonormal":
        _no_unknown(dic, {"generator", "n"}, "config.dictionary")
        d_n = _as_int(_need(dic, "n", "config.dictionary"), "config.dictionary.n", 1)
    elif generator == "random_unit":
        _no_unknown(dic, {"generator", "n", "K", "seed"}, "config.dictionary")
        d_n = _as_int(_need(dic, "n", "config.dictionary"), "config.dictionary.n", 1)
        d_K = _as_int(_need(dic, "K", "config.dictionary"), "config.dictionary.K", 1)
        d_seed = _as_int(_need(dic, "seed", "config.dictionary"), "config.dictionary.seed")
        if d_K < d_n:
            raise ConfigError("config.dictionary", f"K must be >= n, got K={d_K} < n={d_n}")
    elif generator == "union_bases":
        _no_unknown(dic, {"generator", "n", "count", "seed"}, "config.dictionary")
        d_n = _as_int(_need(dic, "n", "config.dictionary"), "config.dictionary.n", 1)
        d_count = _as_int(_need(dic, "count", "config.dictionary"), "config.dictionary.count", 1)
        d_seed = _as_int(_need(dic, "seed", "config.dictionary"), "config.dictionary.seed")
    elif generator == "file":
        _no_unknown(dic, {"generator", "path"}, "config.dictionary")
        d_path = _need(dic, "path", "config.dictionary")
        if not isinstance(d_path, str):
            raise ConfigError("config.dictionary", "path must be a string")
    else:
        raise ConfigError(
            "config.dictionary",
            f"unknown generator {generator!r}; known: orthonormal, random_unit, union_bases, file",
        )

    tgt = _need(obj, "targets", "config")
    if not isinstance(tgt, dict):
        raise ConfigError("config.targets", "must be an object")
    t_explicit = None
    t_count = t_sparsity = t_M = t_seed = None
    if "explicit" in tgt:
        _no_unknown(tgt, {"explicit"}, "config.targets")
        entries = tgt["explicit"]
        if not isinstance(entries, list) or not entries:
            raise ConfigError("config.targets.explicit", "must be a nonempty list")
        t_explicit = []
        for i, entry in enumerate(entries):
            where = f"config.targets.explicit[{i}]"
            if not isinstance(entry, dict):
                raise ConfigError(where, "must be an object")
            _no_unknown(entry, {"coeffs"}, where)
            pairs = _need(entry, "coeffs", where)
            if not isinstance(pairs, list) or not pairs:
                raise ConfigError(where, "coeffs must be a nonempty list of [index, value] pairs")
            coeffs: dict[int, float] = {}
            for pair in pairs:
                if not (isinstance(pair, list) and len(pair) == 2):
                    raise ConfigError(where, f"bad coefficient entry {pair!r}")
                coeffs[_as_int(pair[0], where, 0)] = _as_number(pair[1], where)
            t_explicit.append(coeffs)
    else:
        _no_unknown(tgt, {"count", "sparsity", "M", "seed"}, "config.targets")
        t_count = _as_int(_need(tgt, "count", "config.targets"), "config.targets.count", 1)
        t_sparsity = _as_int(_need(tgt, "sparsity", "config.targets"), "config.targets.sparsity", 1)
        t_M = _as_number(_need(tgt, "M", "config.targets"), "config.targets.M")
        if t_M <= 0.0:
            raise ConfigError("config.targets", f"M must be positive, got {t_M}")
        t_seed = _as_int(_need(tgt, "seed", "config.targets"), "config.targets.seed")

    algs_obj = _need(obj, "algorithms", "config")
    if not isinstance(algs_obj, list) or not algs_obj:
        raise ConfigError("config.algorithms", "must be a nonempty list")
    algorithms = [_parse_algorithm(entry, i) for i, entry in enumerate(algs_obj)]
    labels = [a.label for a in algorithms]
    if len(set(labels)) != len(labels):
        raise ConfigError("config.algorithms", "labels must be unique; set 'label' explicitly")
    if kind == "lp":
        for a in algorithms:
            if a.name in _HILBERT_ONLY:
                raise ConfigError("config.algorithms", f"{a.name} requires hilbert geometry")

    m_max = _as_int(_need(obj, "m_max", "config"), "config.m_max", 1)
    eps = _as_number(obj.get("eps", 0.0), "config.eps")
    if eps < 0.0:
        raise ConfigError("config.eps", f"must be >= 0, got {eps}")

    out = obj.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("config.output", "must be an object")
    _no_unknown(out, {"dir", "formats"}, "config.output")
    out_dir = out.get("dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("config.output.dir", "must be a nonempty string")
    formats = out.get("formats", ["json", "csv"])
    if (
        not isinstance(formats, list)
        or not formats
        or any(f not in ("json", "csv") for f in formats)
    ):
        raise ConfigError("config.output.formats", "must be a nonempty subset of ['csv', 'json']")

    return ExperimentConfig(
        seed=seed,
        geometry_kind=kind,
        p=p,
        dict_generator=generator,
        dict_n=d_n,
        dict_K=d_K,
        dict_count=d_count,
        dict_seed=d_seed,
        dict_path=d_path,
        targets_explicit=t_explicit,
        targets_count=t_count,
        targets_sparsity=t_sparsity,
        targets_M=t_M,
        targets_seed=t_seed,
        algorithms=algorithms,
        m_max=m_max,
        eps=eps,
        out_dir=out_dir,
        formats=tuple(dict.fromkeys(formats)),
    )


# ---------------------------------------------------------------------------
# run


def _build_dictionary(cfg: ExperimentConfig, config_dir: Path) -> Dictionary:
    if cfg.dict_generator == "file":
        path = Path(cfg.dict_path)
        if not path.is_absolute():
            path = config_dir / path
        dictionary = Dictionary.load(path)
        if dictionary.geometry.kind != cfg.geometry_kind or (
            cfg.p is not None and dictionary.geometry.p != cfg.p
        ):
            raise ConfigError("config.dictionary", "file geometry does not match config geometry")
        return dictionary
    n = cfg.dict_n
    geometry = hilbert(n) if cfg.geometry_kind == "hilbert" else lp(cfg.p, n)
    if cfg.dict_generator == "orthonormal":
        return build_orthonormal(n, geometry)
    if cfg.dict_generator == "random_unit":
        return build_random_unit(n, cfg.dict_K, _mix_seed(cfg.seed, cfg.dict_seed), geometry)
    return build_union_bases(n, cfg.dict_count, _mix_seed(cfg.seed, cfg.dict_seed), geometry)


def _build_targets(cfg: ExperimentConfig, dictionary: Dictionary) -> list[tuple[str, A1Target]]:
    targets = []
    if cfg.targets_explicit is not None:
        for i, coeffs in enumerate(cfg.targets_explicit):
            targets.append((f"t{i:03d}", target_from_coeffs(dictionary, coeffs)))
    else:
        for i in range(cfg.targets_count):
            seed_i = _mix_seed(cfg.seed, cfg.targets_seed, i)
            targets.append(
                (f"t{i:03d}", make_a1_target(dictionary, cfg.targets_sparsity, cfg.targets_M, seed_i))
            )
    return targets


def _run_algorithm(spec: AlgorithmSpec, target: A1Target, dictionary: Dictionary, m_max: int, eps: float) -> RunTrace:
    f = target.f
    if f.geometry.is_hilbert:
        if spec.name == "rpga":
            return greedy.rpga_hilbert(f, dictionary, m_max, eps)
        if spec.name == "wrpga":
            return greedy.wrpga_hilbert(f, dictionary, spec.ts, m_max, eps)
        if spec.name == "pga":
            return greedy.pga_hilbert(f, dictionary, m_max, eps)
        if spec.name == "oga":
            return greedy.oga_hilbert(f, dictionary, m_max, eps)
        return greedy.rga_hilbert(f, dictionary, m_max, spec.variant)
    if spec.name == "rpga":
        return greedy.rpga_banach(f, dictionary, m_max, eps, spec.ls_tol)
    return greedy.wrpga_banach(f, dictionary, spec.ts, m_max, eps, spec.ls_tol)


@dataclass
class RunResult:
    target_id: str
    label: str
    trace: RunTrace
    report: analysis.BoundReport | None
    fit: analysis.RateFit | None


def _execute_one(task) -> RunResult:
    target_id, target, spec, dictionary, m_max, eps = task
    trace = _run_algorithm(spec, target, dictionary, m_max, eps)
    trace.target_id = target_id
    trace.target_m = target.M
    report = None
    if spec.name in ("rpga", "wrpga"):
        report = analysis.check_bound(trace, target, spec.ts)
    try:
        fit = analysis.fit_rate(trace)
    except analysis.InsufficientDataError:
        fit = None
    return RunResult(target_id, spec.label, trace, report, fit)


def _summary_csv(results: list[RunResult], targets: dict[str, A1Target]) -> str:
    lines = ["target_id,algorithm,geometry,m_final,error_final,bound_ok,slope"]
    for res in results:
        records = res.trace.records
        m_final = records[-1].m if records else 0
        error_final = records[-1].error if records else norm(targets[res.target_id].f)
        bound_ok = "" if res.report is None else ("true" if res.report.satisfied else "false")
        slope = "" if res.fit is None else _g17(res.fit.slope)
        lines.append(
            ",".join(
                [
                    res.target_id,
                    res.label,
                    res.trace.geometry.describe(),
                    str(m_final),
                    _g17(error_final),
                    bound_ok,
                    slope,
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _cmd_run(args) -> int:
    config_path = Path(args.config)
    try:
        text = config_path.read_text()
    except OSError as exc:
        print(f"{config_path}: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        print(f"{config_path}:{exc.lineno}: invalid JSON: {exc.msg}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = parse_config(obj)
    except ConfigError as exc:
        print(f"{config_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE

    env_seed = os.environ.get(ENV_SEED)
    if env_seed:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            print(f"{ENV_SEED}={env_seed!r} is not an integer", file=sys.stderr)
            return EXIT_USAGE

    try:
        dictionary = _build_dictionary(cfg, config_path.parent)
        targets = _build_targets(cfg, dictionary)
    except (ConfigError, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"{config_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out_dir = Path(args.out) if args.out else Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = [
        (tid, target, spec, dictionary, cfg.m_max, cfg.eps)
        for tid, target in targets
        for spec in cfg.algorithms
    ]
    jobs = max(1, args.jobs)
    if jobs == 1:
        results = [_execute_one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute_one, tasks))
    results.sort(key=lambda r: (r.target_id, r.label))

    _write_atomic(out_dir / "dictionary.json", json.dumps(dictionary.to_json(), indent=2) + "\n")
    target_map = dict(targets)
    for tid, target in targets:
        _write_atomic(
            out_dir / f"{tid}.target.json", json.dumps(target_to_json(target, tid), indent=2) + "\n"
        )
    for res in results:
        stem = f"{res.target_id}__{res.label}"
        if "json" in cfg.formats:
            _write_atomic(out_dir / f"{stem}.trace.json", json.dumps(res.trace.to_json(), indent=2) + "\n")
        if "csv" in cfg.formats:
            _write_atomic(out_dir / f"{stem}.trace.csv", res.trace.to_csv())
    _write_atomic(out_dir / "summary.csv", _summary_csv(results, target_map))

    violations = [r for r in results if r.report is not None and not r.report.satisfied]
    print(f"ran {len(results)} run(s) over {len(targets)} target(s); output in {out_dir}")
    if violations:
        for res in violations:
            print(
                f"BOUND VIOLATION: {res.target_id} {res.label} "
                f"{res.report.theorem} margin={res.report.margin:.3e} at m={res.report.worst_m}",
                file=sys.stderr,
            )
        return EXIT_VIOLATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc


def _cmd_validate(args) -> int:
    try:
        trace = RunTrace.from_json(_load_json(args.trace))
        target, target_id = target_from_json(_load_json(args.target))
    except (ValueError, KeyError, TypeError) as exc:
        print(f"validate: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if trace.target_id is not None and target_id is not None and trace.target_id != target_id:
        print(
            f"validate: trace was produced from target {trace.target_id!r}, "
            f"file certifies {target_id!r}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    try:
        report = analysis.check_bound(trace, target)
    except ValueError as exc:
        print(f"validate: {exc}", file=sys.stderr)
        return EXIT_USAGE
    status = "satisfied" if report.satisfied else "VIOLATED"
    print(
        f"{report.theorem}: {status} margin={report.margin:.6e} "
        f"worst_m={report.worst_m} slack={report.slack:g}"
    )
    return EXIT_OK if report.satisfied else EXIT_VIOLATION


# ---------------------------------------------------------------------------
# rate


def _cmd_rate(args) -> int:
    loaded: list[tuple[str, RunTrace]] = []
    seen: set[str] = set()
    for path in args.traces:
        try:
            trace = RunTrace.from_json(_load_json(path))
        except (ValueError, KeyError, TypeError) as exc:
            print(f"rate: skipping {path}: {exc}", file=sys.stderr)
            continue
        stem = Path(path).stem
        while stem in seen:  # same file name from different directories
            stem += "+"
        seen.add(stem)
        loaded.append((stem, trace))
    if not loaded:
        print("rate: no parseable traces", file=sys.stderr)
        return EXIT_USAGE

    fits: dict[str, analysis.RateFit] = {}
    for stem, trace in loaded:
        try:
            fits[stem] = analysis.fit_rate(trace, args.m_min)
        except analysis.InsufficientDataError as exc:
            print(f"rate: {stem}: {exc}", file=sys.stderr)
    if not fits:
        print("rate: no trace has enough usable records", file=sys.stderr)
        return EXIT_USAGE

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    series = []
    csv_lines = ["algorithm,m,error,bound"]
    for stem, trace in loaded:
        bounds = None
        if trace.target_m is not None:
            try:
                theorem = analysis.applicable_theorem(trace)
                bounds = analysis.theorem_bounds(
                    theorem, trace.ms(), trace.target_m, trace.geometry, trace.weakness
                )
            except ValueError:
                bounds = None
        for i, rec in enumerate(trace.records):
            bound_txt = ""
            if bounds is not None and math.isfinite(bounds[i]):
                bound_txt = _g17(bounds[i])
            csv_lines.append(f"{trace.algorithm},{rec.m},{_g17(rec.error)},{bound_txt}")
        fit = fits.get(stem)
        label = f"{stem} [{trace.algorithm}]"
        if fit is not None:
            label += f" slope={fit.slope:.3f}"
        series.append(
            {
                "label": label,
                "m": trace.ms(),
                "error": trace.errors(),
                "bound": bounds,
                "fit": None if fit is None else (fit.slope, fit.intercept),
            }
        )

    _write_atomic(out_dir / "rate_data.csv", "\n".join(csv_lines) + "\n")
    _write_atomic(
        out_dir / "rate_fits.json",
        json.dumps({stem: fit.to_json() for stem, fit in fits.items()}, indent=2) + "\n",
    )
    from .plots import render_error_decay  # heavy import, only needed here

    render_error_decay(series, out_dir / "rate_plot.png")
    for stem, fit in fits.items():
        print(f"{stem}: slope={fit.slope:.6f} r2={fit.r2:.6f} m_range={fit.m_range}")
    print(f"wrote {out_dir / 'rate_data.csv'}, {out_dir / 'rate_fits.json'}, {out_dir / 'rate_plot.png'}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="greedylab",
        description="Greedy sparse-approximation experiments with rate verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config's targets x algorithms cross product")
    p_run.add_argument("config", help="path to the experiment config JSON")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel runs (default 1)")
    p_run.add_argument("--out", default=None, help="output directory (overrides config)")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a trace against a target certificate")
    p_val.add_argument("trace", help="trace JSON file")
    p_val.add_argument("target", help="target certificate JSON file")
    p_val.set_defaults(func=_cmd_validate)

    p_rate = sub.add_parser("rate", help="fit decay rates; emit plot data and a figure")
    p_rate.add_argument("traces", nargs="+", help="trace JSON files")
    p_rate.add_argument("--m-min", type=int, default=1, help="first iteration used in the fit")
    p_rate.add_argument("--out", default=".", help="output directory (default: cwd)")
    p_rate.set_defaults(func=_cmd_rate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map onto the documented contract
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
