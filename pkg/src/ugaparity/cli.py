"""Command-line front end: simulate, learn, stats, schema-effect.

Exit codes: 0 success, 1 I/O failure, 2 invalid arguments, 3 capability exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .chromo import bits_to_str, in_band
from .errors import CapabilityError
from .learner import PRESETS, STANDARD, approx_learn, is_validated_regime
from .oracle import OracleSpec
from .schema import IndexSet, parity_table, partition_effect
from .stats import EmpiricalDistribution, locus_null_tests, symmetry_test
from .uga import GaConfig, run_batch

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_CAPABILITY = 0, 1, 2, 3
SEED_SPLITTING = "run r of master seed s draws from Philox4x64 keyed by (s, r)"
CSV_HEADER = ("run_id", "generation", "locus", "ones_count", "m")


class UsageError(ValueError):
    pass


def parse_index_list(text: str) -> tuple[int, ...]:
    """'1..7', '1,2,4' or a mix such as '1..3,8'."""
    out: list[int] = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        lo, sep, hi = part.partition("..")
        try:
            out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
        except ValueError:
            raise UsageError(f"bad index list {text!r}") from None
    return tuple(out)


def read_config(path: str | None) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment; keys use '-' or '_'."""
    if not path:
        return {}
    kv = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"malformed config line: {line!r}")
        kv[key.strip().replace("-", "_")] = value.strip()
    return kv


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    """Flag values override config values, which override defaults."""
    conf = read_config(args.config)
    unknown = set(conf) - set(defaults)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key, (conv, default) in defaults.items():
        raw = getattr(args, key, None)
        if raw is None:
            raw = conf.get(key, default)
        try:
            out[key] = None if raw is None else conv(raw)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad value for {key}: {raw!r} ({exc})") from None
    return out


def _fraction(x) -> Fraction:
    return Fraction(str(x))


def _oracle(c: dict) -> OracleSpec:
    K = c["K"] if c["K"] is not None else tuple(range(1, c["n"]))
    k = c.get("k")
    return OracleSpec(n=c["n"], K=K, eta=c["eta"], k=len(K) if k is None else k)


def _dump(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- simulate

SIMULATE_KEYS = {
    "n": (int, 8),
    "k": (int, None),
    "K": (parse_index_list, None),
    "eta": (_fraction, "1/5"),
    "pop_size": (int, 1500),
    "generations": (int, 800),
    "mutation_rate": (float, 0.004),
    "runs": (int, 1),
    "seed": (int, 0),
    "track_loci": (parse_index_list, None),
    "out": (str, None),
    "summary": (str, None),
    "jobs": (int, 1),
    "batch": (int, 25),
}


def _simulate_chunk(spec, cfg, indices, tracked):
    results = run_batch(spec, cfg, indices, tracked_loci=tracked)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    gens = np.arange(1, cfg.tau + 1)
    for r in results:
        for g, row in zip(gens, r.ones.tolist()):
            w.writerows((r.run_index, g, l, c, cfg.m) for l, c in zip(tracked, row))
    finals = np.array([r.ones[-1] for r in results], dtype=np.int64).reshape(len(results), len(tracked))
    return buf.getvalue(), finals, sum(r.queries for r in results)


def simulate(c: dict) -> dict:
    spec = _oracle(c)
    cfg = GaConfig(m=c["pop_size"], n=c["n"], tau=c["generations"], p_m=c["mutation_rate"], seed=c["seed"])
    if c["runs"] < 1:
        raise UsageError("runs must be at least 1")
    if c["batch"] < 1 or c["jobs"] < 1:
        raise UsageError("batch and jobs must be positive")
    tracked = c["track_loci"] if c["track_loci"] is not None else tuple(range(1, c["n"] + 1))
    for l in tracked:
        if not 1 <= l <= c["n"]:
            raise UsageError(f"tracked locus {l} outside 1..{c['n']}")
    chunks = [list(range(i, min(i + c["batch"], c["runs"]))) for i in range(0, c["runs"], c["batch"])]
    out_path = c["out"]
    sink = open(out_path, "w", newline="") if out_path and out_path != "-" else sys.stdout
    finals, queries = [], 0
    try:
        sink.write(",".join(CSV_HEADER) + "\n")
        args = ([spec] * len(chunks), [cfg] * len(chunks), chunks, [tracked] * len(chunks))
        if c["jobs"] > 1:
            with ProcessPoolExecutor(max_workers=c["jobs"]) as pool:
                # map yields in submission order, so rows stay in run order
                for text, fin, q in pool.map(_simulate_chunk, *args):
                    sink.write(text)
                    finals.append(fin)
                    queries += q
        else:
            for chunk_args in zip(*args):
                text, fin, q = _simulate_chunk(*chunk_args)
                sink.write(text)
                finals.append(fin)
                queries += q
    finally:
        if sink is not sys.stdout:
            sink.close()
    finals = np.concatenate(finals)
    bands = {}
    for t, l in enumerate(tracked):
        inside = int(in_band(finals[:, t], cfg.m).sum())
        bands[str(l)] = {"inside": inside, "outside": int(len(finals) - inside), "essential": l in spec.K}
    preset_like = cfg.m == 1500 and cfg.tau == 800 and cfg.p_m == 0.004
    summary = {
        "command": "simulate",
        "config": _jsonable(c),
        "master_seed": c["seed"],
        "seed_splitting": SEED_SPLITTING,
        "queries": queries,
        "final_generation": cfg.tau,
        "band_counts": bands,
        "validated_regime": bool(preset_like and is_validated_regime(spec, STANDARD)),
    }
    summary_path = c["summary"] or (f"{out_path}.summary.json" if out_path and out_path != "-" else None)
    if summary_path:
        _dump(summary, summary_path)
    return summary


def _jsonable(c: dict) -> dict:
    out = {}
    for k, v in c.items():
        if isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


# ---------------------------------------------------------------- learn

LEARN_KEYS = {
    "n": (int, 8),
    "k": (int, None),
    "K": (parse_index_list, None),
    "eta": (_fraction, "1/5"),
    "epsilon": (_fraction, "1/8"),
    "seed": (int, 0),
    "preset": (str, "paper"),
    "out": (str, None),
    "jobs": (int, 1),
}


def learn(c: dict) -> dict:
    spec = _oracle(c)
    if c["preset"] not in PRESETS:
        raise UsageError(f"unknown preset {c['preset']!r}; choose from {sorted(PRESETS)}")
    preset = PRESETS[c["preset"]]
    t0 = time.perf_counter()
    res = approx_learn(spec, c["epsilon"], c["seed"], preset=preset, jobs=c["jobs"])
    wall = time.perf_counter() - t0
    target = bits_to_str(np.isin(np.arange(1, spec.n + 1), spec.K))
    hyp = bits_to_str(res.hypothesis)
    report = {
        "command": "learn",
        "config": _jsonable(c),
        "master_seed": c["seed"],
        "seed_splitting": SEED_SPLITTING,
        "hypothesis": hyp,
        "target": target,
        "match": hyp == target,
        "queries": res.queries,
        "ell": res.plan.ell,
        "runs": res.plan.runs,
        "wall_time_s": round(wall, 3),
        "validated_regime": is_validated_regime(spec, preset),
    }
    _dump(report, c["out"])
    return report


# ---------------------------------------------------------------- stats

STATS_KEYS = {
    "input": (str, None),
    "alpha": (float, 0.01),
    "essential_loci": (parse_index_list, None),
    "nonessential_loci": (parse_index_list, None),
    "generation": (int, None),
    "out": (str, None),
}


def read_trace(path: str):
    """ones[(locus, generation)] -> {run_id: count}, plus m."""
    table: dict[tuple[int, int], dict[int, int]] = defaultdict(dict)
    m = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise UsageError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for row in reader:
            run_id, gen, locus, ones, mm = map(int, row)
            if m is None:
                m = mm
            elif mm != m:
                raise UsageError(f"{path}: mixed population sizes {m} and {mm}")
            table[(locus, gen)][run_id] = ones
    if m is None:
        raise UsageError(f"{path}: no trace rows")
    return table, m


def stats(c: dict) -> dict:
    if not c["input"]:
        raise UsageError("stats needs --input")
    table, m = read_trace(c["input"])
    gens = sorted({g for _, g in table})
    loci = sorted({l for l, _ in table})
    gen = c["generation"] if c["generation"] is not None else gens[-1]
    if gen not in gens:
        raise UsageError(f"generation {gen} not in trace")
    ess = c["essential_loci"] or ()
    non = c["nonessential_loci"] or ()
    missing = set(ess) | set(non)
    missing -= set(loci)
    if missing:
        raise UsageError(f"loci {sorted(missing)} not in trace")

    def dist(l, g):
        return EmpiricalDistribution.from_observations(table[(l, g)].values(), m)

    reports = locus_null_tests({l: dist(l, gen) for l in ess}, {l: dist(l, gen) for l in non}, c["alpha"])
    symmetry = []
    for group in (ess, non):
        for a, b in zip(group, group[1:]):
            try:
                r = symmetry_test(dist(a, gen), dist(b, gen), c["alpha"])
                symmetry.append({"loci": [a, b], **r.to_dict()})
            except CapabilityError as exc:
                symmetry.append({"loci": [a, b], "skipped": str(exc)})
    bands = {}
    for l in loci:
        series = []
        for g in gens:
            vals = np.fromiter(table[(l, g)].values(), dtype=np.int64)
            series.append(
                {"generation": g, "inside": int(in_band(vals, m).sum()), "runs": int(vals.size),
                 "mean_frequency": float(vals.mean() / m)}
            )
        bands[str(l)] = series
    out = {
        "command": "stats",
        "config": _jsonable(c),
        "generation": gen,
        "m": m,
        "tests": {str(l): r.to_dict() for l, r in sorted(reports.items())},
        "symmetry": symmetry,
        "band_summary": bands,
    }
    _dump(out, c["out"])
    return out


# ---------------------------------------------------------------- schema-effect

SCHEMA_KEYS = {
    "n": (int, None),
    "function": (str, "parity"),
    "K": (parse_index_list, None),
    "index_set": (parse_index_list, None),
    "eta": (_fraction, None),
    "out": (str, None),
}


def load_table(path: str) -> np.ndarray:
    """Whitespace-separated fitness values, 2**n of them, locus 1 as the high bit."""
    return np.loadtxt(path, dtype=np.float64, ndmin=1).ravel()


def schema_effect(c: dict) -> dict:
    n = c["n"]
    if n is None:
        raise UsageError("schema-effect needs --n")
    if c["function"] == "parity":
        table = parity_table(n, c["K"])
    else:
        table = load_table(c["function"])
        if table.size != 2**n:
            raise UsageError(f"table has {table.size} values, expected 2**{n}")
    idx = c["index_set"] if c["index_set"] is not None else tuple(range(1, n + 1))
    pe = partition_effect(table, IndexSet(idx), c["eta"])
    out = {
        "command": "schema-effect",
        "config": _jsonable(c),
        "index_set": list(pe.index_set.indices),
        "effect": pe.effect,
        "schema_means": pe.schema_means,
    }
    _dump(out, c["out"])
    return out


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ugaparity", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key = value file; flags override it")
        sp.add_argument("--out", help="output path (default: stdout)")

    def oracle_flags(sp):
        sp.add_argument("--n", type=int)
        sp.add_argument("--k", type=int)
        sp.add_argument("--K", help="essential loci, e.g. 1..7 or 1,2,4 (default 1..n-1)")
        sp.add_argument("--eta", help="noise rate as a fraction, e.g. 1/5")

    s = sub.add_parser("simulate", help="seeded UGA runs to a trace CSV")
    common(s)
    oracle_flags(s)
    s.add_argument("--pop-size", type=int)
    s.add_argument("--generations", type=int)
    s.add_argument("--mutation-rate", type=float)
    s.add_argument("--runs", type=int)
    s.add_argument("--seed", type=int, help="master seed")
    s.add_argument("--track-loci", help="loci to trace (default all)")
    s.add_argument("--summary", help="summary JSON path (default OUT.summary.json)")
    s.add_argument("--jobs", type=int)
    s.add_argument("--batch", type=int, help="runs advanced together per worker task")

    l = sub.add_parser("learn", help="boosted learner; prints a JSON report")
    common(l)
    oracle_flags(l)
    l.add_argument("--epsilon")
    l.add_argument("--seed", type=int)
    l.add_argument("--preset", choices=sorted(PRESETS))
    l.add_argument("--jobs", type=int)

    t = sub.add_parser("stats", help="band null tests and homogeneity tests on a trace CSV")
    common(t)
    t.add_argument("--input", help="trace CSV written by simulate")
    t.add_argument("--alpha", type=float)
    t.add_argument("--essential-loci")
    t.add_argument("--nonessential-loci")
    t.add_argument("--generation", type=int, help="snapshot generation (default last)")

    e = sub.add_parser("schema-effect", help="exhaustive schema-partition effect")
    common(e)
    e.add_argument("--n", type=int)
    e.add_argument("--function", help="'parity' or a fitness table file")
    e.add_argument("--K", help="parity loci (default all)")
    e.add_argument("--index-set")
    e.add_argument("--eta")
    return p


COMMANDS = {
    "simulate": (simulate, SIMULATE_KEYS),
    "learn": (learn, LEARN_KEYS),
    "stats": (stats, STATS_KEYS),
    "schema-effect": (schema_effect, SCHEMA_KEYS),
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    fn, keys = COMMANDS[args.command]
    try:
        fn(_merged(args, keys))
    except CapabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (UsageError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
