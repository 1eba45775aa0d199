"""Command-line front end: ``fracpme run`` and ``fracpme list-presets``.

Exit status: 0 when every enabled check passes, 1 when a check fails,
2 on configuration or runtime (e.g. nonlinear solver) errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema

from .experiments import ExperimentResult, apply_seed_override, run_experiment
from .presets import PRESETS, get_preset, list_presets
from .solver import SolverError

__all__ = ["main", "load_config", "validate_config", "ConfigError", "write_outputs", "load_schema"]

log = logging.getLogger("fracpme")

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
DEFAULT_OUT = "fracpme-out"


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration."""


def load_schema() -> dict:
    text = resources.files("fracpme").joinpath("data/config.schema.json").read_text()
    return json.loads(text)


def validate_config(cfg: dict, source: str = "config") -> dict:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for e in errors[:5]:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            msgs.append(f"{source}: at '{where}': {e.message}")
        raise ConfigError("\n".join(msgs))
    return cfg


def load_config(path: str | os.PathLike) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config ({exc.strerror})") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}:{exc.lineno}:{exc.colno}: JSON parse error: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{p}: top-level value must be an object")
    cfg.setdefault("name", p.stem)
    return validate_config(cfg, str(p))


def _atomic_write(path: Path, data: str | bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        if isinstance(data, bytes):
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
        else:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outputs(result: ExperimentResult, root: Path) -> Path:
    out = root / result.name
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(result.artifacts.items()):
        _atomic_write(out / name, text)
    _atomic_write(out / "report.json", json.dumps(result.report(), indent=2, sort_keys=True) + "\n")
    return out


def _resolve_out(arg: str | None, cfg: dict) -> Path:
    root = arg or os.environ.get("FRACPME_OUT_DIR") or cfg.get("output", {}).get("dir") or DEFAULT_OUT
    return Path(root)


def _run_one(cfg: dict, out_arg: str | None, threads: int) -> tuple[str, int, ExperimentResult | None, str]:
    name = cfg.get("name", cfg["kind"])
    try:
        result = run_experiment(cfg, threads)
    except SolverError as exc:
        return name, EXIT_ERROR, None, f"solver failure: {exc}"
    except (ValueError, KeyError, TypeError) as exc:
        return name, EXIT_ERROR, None, f"runtime error: {exc}"
    out = write_outputs(result, _resolve_out(out_arg, cfg))
    return name, EXIT_PASS if result.passed else EXIT_FAIL, result, str(out)


def _cmd_run(args) -> int:
    configs: list[dict] = []
    try:
        for path in args.config or []:
            configs.append(load_config(path))
        for name in args.preset or []:
            names = list(PRESETS) if name == "all" else [name]
            for n in names:
                configs.append(validate_config(get_preset(n), f"preset {n}"))
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if not configs:
        print("config error: nothing to run (use --config or --preset)", file=sys.stderr)
        return EXIT_ERROR
    if args.seed_override is not None:
        configs = [apply_seed_override(c, args.seed_override) for c in configs]
    threads = max(1, args.threads)
    outer = min(threads, len(configs))
    inner = max(1, threads // outer)
    with ThreadPoolExecutor(max_workers=outer) as pool:
        results = list(pool.map(lambda c: _run_one(c, args.out_dir, inner), configs))
    status = EXIT_PASS
    for name, code, result, info in results:
        if result is None:
            print(f"ERROR {name}: {info}")
        else:
            for c in result.checks:
                tag = {True: "PASS", False: "FAIL", None: "INFO"}[c.passed]
                print(f"{tag} {name}: {c.name}")
            print(f"{'PASS' if result.passed else 'FAIL'} {name} -> {info}")
        status = max(status, code)
    return status


def _cmd_list(args) -> int:
    for name, desc in list_presets():
        print(f"{name}\n    {desc}")
    return EXIT_PASS


def _cmd_show(args) -> int:
    try:
        print(json.dumps(get_preset(args.name), indent=2))
    except KeyError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_PASS


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracpme", description="Fractional porous medium experiments on flat tori.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", help="run experiment configs and/or presets")
    r.add_argument("--config", action="append", metavar="PATH", help="JSON experiment config (repeatable)")
    r.add_argument("--preset", action="append", metavar="NAME", help="named preset, or 'all' (repeatable)")
    r.add_argument("--out-dir", default=None, help="output root (default: $FRACPME_OUT_DIR or ./fracpme-out)")
    r.add_argument("--seed-override", type=int, default=None, help="replace every seed in the config")
    r.add_argument("--threads", type=int, default=1, help="worker threads for independent runs")
    r.set_defaults(func=_cmd_run)
    ls = sub.add_parser("list-presets", help="list the preset catalog")
    ls.set_defaults(func=_cmd_list)
    sh = sub.add_parser("show-preset", help="print a preset as JSON")
    sh.add_argument("name")
    sh.set_defaults(func=_cmd_show)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("--") and argv[0] not in ("--help", "--verbose"):
        argv = ["run"] + argv
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_help()
        return EXIT_ERROR
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
