"""Command-line entry point: ``rhombform {generate,run,batch,metrics,render}``.

Exit codes: 0 success, 1 usage or input error, 2 runtime fault, 3 validation violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import configuration as C
from . import engine, metrics, render

EXIT_OK, EXIT_USAGE, EXIT_FAULT, EXIT_VIOLATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------- batch specs


@dataclass(frozen=True)
class BatchRow:
    generator: C.GeneratorSpec
    variants: tuple[str, ...]
    repetitions: int = 1
    max_rounds: int | None = None

    @property
    def label(self) -> str:
        """Generator column value; carries the parameters that are not their own column."""
        g = self.generator
        parts = [g.kind]
        for name in ("width", "height", "percent"):
            value = getattr(g, name)
            if value is not None:
                parts.append(f"{name}={value}")
        return ":".join(parts)


@dataclass
class BatchSpec:
    rows: list[BatchRow] = field(default_factory=list)
    output: str = "results.csv"

    @classmethod
    def from_json(cls, data: dict, base: Path | None = None) -> "BatchSpec":
        rows = []
        for raw in data.get("rows", []):
            raw = dict(raw)
            variants = raw.pop("variants", list(engine.VARIANTS))
            reps = int(raw.pop("repetitions", 1))
            max_rounds = raw.pop("max_rounds", None)
            sizes = raw.pop("n_values", None)
            bad = set(variants) - set(engine.VARIANTS)
            if bad:
                raise UsageError(f"unknown variants {sorted(bad)}")
            if reps < 1:
                raise UsageError("repetitions must be at least 1")
            try:
                gens = [C.GeneratorSpec(**raw)] if sizes is None else [C.GeneratorSpec(**raw, n=k) for k in sizes]
            except TypeError as exc:
                raise UsageError(f"bad generator fields: {exc}") from None
            rows.extend(BatchRow(g, tuple(variants), reps, max_rounds) for g in gens)
        output = data.get("output", "results.csv")
        if base is not None and not os.path.isabs(output):
            output = str(base / output)
        return cls(rows, output)


def _read_done(path: str) -> list[dict]:
    if not os.path.exists(path):
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write_atomic(path: str, rows: list[dict]) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".batch-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=metrics.CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def run_batch(spec: BatchSpec, log=None) -> int:
    """Run every missing (row, repetition, variant) of ``spec``; returns the number of new rows."""
    done = _read_done(spec.output)
    keys = {(r["generator"], r["n"], r["seed"], r["variant"]) for r in done}
    added = 0
    for row in spec.rows:
        for rep in range(row.repetitions):
            gen = C.GeneratorSpec(**{**row.generator.__dict__, "seed": row.generator.seed + rep})
            config = gen.build()
            record = None
            for variant in row.variants:
                key = (row.label, str(len(config)), str(gen.seed), variant)
                if key in keys:
                    continue
                if record is None:
                    record = metrics.summarize(config)
                result = engine.run(config, variant, max_rounds=row.max_rounds)
                done.append(metrics.csv_row(row.label, gen.seed, variant, result.rounds,
                                            result.terminated and result.shape_ok, record))
                keys.add(key)
                added += 1
                _write_atomic(spec.output, done)
                if log is not None:
                    log(f"{row.label} n={len(config)} seed={gen.seed} {variant}: rounds={result.rounds}")
    if not os.path.exists(spec.output):
        _write_atomic(spec.output, done)
    return added


# --------------------------------------------------------------------------- commands


def _load(path: str) -> C.Configuration:
    try:
        return C.parse(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except C.ConfigFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_generate(args) -> int:
    spec = C.GeneratorSpec(args.shape, n=args.n, width=args.width, height=args.height,
                           percent=args.percent, seed=args.seed)
    try:
        config = spec.build()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _output(C.serialize(config), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    config = _load(args.config)
    trace = open(args.trace, "w") if args.trace else None
    try:
        result = engine.run(config, args.variant, "strict" if args.strict else "fast",
                            max_rounds=args.max_rounds, trace=trace)
    finally:
        if trace is not None:
            trace.close()
    ok = result.terminated and result.shape_ok
    print(f"rounds={result.rounds} terminated={str(result.terminated).lower()} shape_ok={str(result.shape_ok).lower()}")
    if result.violations:
        for v in result.violations:
            print(f"violation round={v.round} kind={v.kind}: {v.detail}", file=sys.stderr)
        return EXIT_VIOLATION
    if result.fault:
        print(f"fault: {result.fault}", file=sys.stderr)
        return EXIT_FAULT
    return EXIT_OK if ok else EXIT_FAULT


def cmd_batch(args) -> int:
    path = Path(args.spec)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: {exc}") from None
    spec = BatchSpec.from_json(data, base=path.parent)
    if args.out:
        spec.output = args.out
    log = (lambda m: print(m, file=sys.stderr)) if args.verbose else None
    added = run_batch(spec, log)
    print(f"{added} new rows in {spec.output}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    record = metrics.summarize(_load(args.config))
    for name, value in record.as_dict().items():
        print(f"{name}={float(value):.6g}" if name == "closeness" else f"{name}={value}")
    return EXIT_OK


def cmd_render(args) -> int:
    config = _load(args.config)
    states = config.states
    if args.trace:
        try:
            with open(args.trace) as fh:
                records = [json.loads(line) for line in fh if line.strip()]
        except OSError as exc:
            raise UsageError(f"cannot read {args.trace}: {exc.strerror}") from None
        upto = args.round if args.round is not None else records[-1]["round"] if records else 0
        try:
            states = engine.replay(config, records, upto)
        except (ValueError, KeyError) as exc:
            raise UsageError(str(exc)) from None
    elif args.round is not None:
        raise UsageError("--round needs --trace")
    if args.format == "svg":
        _output(render.svg(states, config.leader), args.out)
    else:
        _output(render.ascii_art(states), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rhombform", description="Rhombus formation for sliding-square modular robots.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a generated configuration")
    g.add_argument("--shape", required=True, choices=["line", "spiral", "chain", "rect-random", "perlin"])
    g.add_argument("--n", type=int)
    g.add_argument("--width", type=int)
    g.add_argument("--height", type=int)
    g.add_argument("--percent", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="simulate one configuration")
    r.add_argument("config")
    r.add_argument("--variant", choices=engine.VARIANTS, default="seq")
    r.add_argument("--strict", action="store_true", help="validate every round")
    r.add_argument("--trace", help="write one JSON round record per line")
    r.add_argument("--max-rounds", type=int)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="run an experiment grid into a CSV")
    b.add_argument("spec", help="JSON batch description")
    b.add_argument("--out", help="override the output path")
    b.add_argument("-v", "--verbose", action="store_true")
    b.set_defaults(func=cmd_batch)

    m = sub.add_parser("metrics", help="print configuration statistics")
    m.add_argument("config")
    m.set_defaults(func=cmd_metrics)

    d = sub.add_parser("render", help="draw a configuration, optionally at a trace round")
    d.add_argument("config")
    d.add_argument("--trace")
    d.add_argument("--round", type=int)
    d.add_argument("--format", choices=["ascii", "svg"], default="ascii")
    d.add_argument("--out")
    d.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"rhombform: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
