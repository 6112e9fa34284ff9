"""Command-line front end.

Subcommands::

    partdpp sample        --input A.csv [--kind features|kernel] (--partition p.json | --k K)
                          [--n N] [--seed S] [--out samples.jsonl]
    partdpp map           --input A.csv --k K [--eps 0.1]
    partdpp partition-fn  --input K.csv --kind kernel --partition p.json
    partdpp bench         (--grid grid.json | --parts 15,15 --quotas 3,3) [--seed S]
    partdpp gram          --input A.csv --out K.csv

Matrices are comma-separated text, one row per line, no header. A partition
file is JSON ``{"part_of": [1-based part label per item], "quotas": [...]}``.
A bench grid file is a JSON list of ``{"parts": [...], "quotas": [...]}``.

Every output record is one JSON object per line with floats written to 17
significant digits. Subsets are 1-based and sorted.

Sample ``j`` of a multi-sample run uses a fresh generator seeded with
``seed XOR (j * 0x9E3779B97F4A7C15) mod 2**64``, so samples are independent of
each other and of how many run concurrently. ``DPP_THREADS`` caps the number
of samples drawn concurrently.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterator, Sequence

import numpy as np

from .charpoly import signed_partition_coefficient
from .errors import InputError, NumericalError
from .map_inference import local_search_map
from .matrix_core import PartitionSpec, as_features, as_kernel, factor_kernel, gram
from .sampler import sample_kdpp, sample_partition_dpp

EXIT_INPUT = 2
EXIT_NUMERICAL = 3
SEED_SPLIT = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


class CLIError(InputError):
    pass


def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def dumps(obj) -> str:
    """Single-line JSON with 17-significant-digit floats."""
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    return format_number(obj)


def read_matrix(path: str) -> np.ndarray:
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise CLIError(f"cannot read matrix from {path}: {exc}") from exc
    if M.size == 0:
        raise CLIError(f"{path} holds no matrix entries")
    return M


def write_matrix(M: np.ndarray, out: IO[str]) -> None:
    for row in M:
        out.write(",".join(format_number(x) for x in row) + "\n")


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise CLIError(f"expected comma-separated integers, got {text!r}") from exc


def read_partition(path: str, quotas: Sequence[int] | None = None) -> PartitionSpec:
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CLIError(f"cannot read partition from {path}: {exc}") from exc
    if not isinstance(spec, dict) or "part_of" not in spec:
        raise CLIError(f"{path}: expected an object with 'part_of' and 'quotas'")
    labels = spec["part_of"]
    if quotas is None:
        if "quotas" not in spec:
            raise CLIError(f"{path}: no 'quotas' given and none on the command line")
        quotas = spec["quotas"]
    if not all(isinstance(x, int) and x >= 1 for x in labels):
        raise CLIError("part labels must be integers >= 1")
    return PartitionSpec(tuple(x - 1 for x in labels), tuple(int(q) for q in quotas))


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    kind: str = "features"
    partition: str | None = None
    quotas: list[int] | None = None
    k: int | None = None
    eps: float = 0.1
    seed: int = 0
    num_samples: int = 1
    out: str | None = None
    grid: str | None = None
    parts: list[int] | None = None

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        cfg = cls(command=ns.command)
        for name in ("input", "kind", "partition", "k", "eps", "seed", "out", "grid"):
            if hasattr(ns, name) and getattr(ns, name) is not None:
                setattr(cfg, name, getattr(ns, name))
        if getattr(ns, "n", None) is not None:
            cfg.num_samples = ns.n
        if getattr(ns, "quotas", None):
            cfg.quotas = _parse_ints(ns.quotas)
        if getattr(ns, "parts", None):
            cfg.parts = _parse_ints(ns.parts)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.num_samples < 1:
            raise CLIError("--n must be at least 1")
        if self.seed < 0 or self.seed > _MASK64:
            raise CLIError("--seed must be a 64-bit unsigned integer")
        if self.command == "sample" and (self.partition is None) == (self.k is None):
            raise CLIError("sample needs exactly one of --partition or --k")
        if self.command == "partition-fn" and self.partition is None:
            raise CLIError("partition-fn needs --partition")
        if self.command == "map":
            if self.k is None:
                raise CLIError("map needs --k")
            if self.eps <= 0:
                raise CLIError("--eps must be positive")
        if self.command == "bench" and (self.grid is None) == (self.parts is None):
            raise CLIError("bench needs exactly one of --grid or --parts/--quotas")
        if self.command == "bench" and self.parts is not None and self.quotas is None:
            raise CLIError("--parts needs --quotas")

    def features(self) -> np.ndarray:
        M = read_matrix(self.input)
        if self.kind == "kernel":
            return factor_kernel(M)
        return as_features(M)

    def kernel(self) -> np.ndarray:
        M = read_matrix(self.input)
        if self.kind == "kernel":
            return as_kernel(M)
        return gram(M)

    def partition_spec(self) -> PartitionSpec:
        return read_partition(self.partition, self.quotas)


def sample_seed(seed: int, j: int) -> int:
    return (seed ^ (j * SEED_SPLIT)) & _MASK64


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DPP_THREADS", "1")))
    except ValueError:
        return 1


def _log_det(K: np.ndarray, S: Sequence[int]) -> float:
    sign, ld = np.linalg.slogdet(K[np.ix_(S, S)])
    return float(ld) if sign > 0 else -math.inf


def cmd_sample(cfg: RunConfig) -> Iterator[dict]:
    A = cfg.features()
    m = A.shape[0]
    P = cfg.partition_spec() if cfg.partition else PartitionSpec.single(m, cfg.k)
    if P.m != m:
        raise CLIError(f"partition covers {P.m} items but the matrix has {m} rows")
    K = gram(A)

    def one(j: int) -> dict:
        rng = np.random.default_rng(sample_seed(cfg.seed, j))
        if cfg.partition:
            S = sample_partition_dpp(A, P, rng)
        else:
            S = sample_kdpp(A, cfg.k, rng)
        S = sorted(S)
        return {
            "sample_index": j,
            "subset": [i + 1 for i in S],
            "log_det": _log_det(K, S),
            "part_counts": list(P.counts(S)),
        }

    threads = min(_threads(), cfg.num_samples)
    if threads == 1:
        yield from map(one, range(cfg.num_samples))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            yield from pool.map(one, range(cfg.num_samples))


def cmd_map(cfg: RunConfig) -> dict:
    A = cfg.features()
    res = local_search_map(A, cfg.k, cfg.eps)
    return {
        "subset": sorted(i + 1 for i in res.subset),
        "log_det_greedy": res.log_det_greedy,
        "log_det_final": res.log_det,
        "swaps": res.swaps_performed,
        "kappa": res.kappa,
        "eps": cfg.eps,
    }


def cmd_partition_fn(cfg: RunConfig) -> dict:
    K = cfg.kernel()
    P = cfg.partition_spec()
    if P.m != K.shape[0]:
        raise CLIError(f"partition covers {P.m} items but the kernel is {K.shape[0]}x{K.shape[0]}")
    coeff, Z = signed_partition_coefficient(K, P)
    return {
        "Z": Z,
        "log_Z": math.log(Z) if Z > 0 else None,
        "coeff_index": [m_l - k_l for m_l, k_l in zip(P.part_sizes, P.quotas)],
        "sign": int(np.sign(coeff)) if Z > 0 else 0,
    }


def bench_grid(cfg: RunConfig) -> list[tuple[list[int], list[int]]]:
    if cfg.parts is not None:
        return [(cfg.parts, cfg.quotas)]
    try:
        with open(cfg.grid) as fh:
            grid = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CLIError(f"cannot read grid from {cfg.grid}: {exc}") from exc
    if isinstance(grid, dict):
        grid = grid.get("grid", [])
    try:
        return [(list(map(int, g["parts"])), list(map(int, g["quotas"]))) for g in grid]
    except (KeyError, TypeError, ValueError) as exc:
        raise CLIError(f"{cfg.grid}: each grid entry needs 'parts' and 'quotas'") from exc


def cmd_bench(cfg: RunConfig) -> Iterator[dict]:
    """Time one draw of each method per grid configuration on random features."""
    for parts, quotas in bench_grid(cfg):
        P = PartitionSpec.from_sizes(parts, quotas)
        rng = np.random.default_rng(cfg.seed)
        A = rng.standard_normal((P.m, P.m))
        starts = np.cumsum([0] + parts)

        def independent():
            out = []
            for l, k_l in enumerate(quotas):
                if k_l:
                    blk = sample_kdpp(A[starts[l]:starts[l + 1]], k_l, rng)
                    out.extend(int(starts[l]) + i for i in blk)
            return out

        methods = [
            ("k-DPP", lambda: sample_kdpp(A, P.k, rng)),
            ("k_i-DPPs", independent),
            ("Partition-DPP", lambda: sample_partition_dpp(A, P, rng)),
        ]
        for name, run in methods:
            t0 = time.perf_counter()
            S = run()
            elapsed = time.perf_counter() - t0
            yield {
                "parts": parts,
                "quotas": quotas,
                "method": name,
                "seconds": elapsed,
                "part_counts": list(P.counts(S)),
            }


def cmd_gram(cfg: RunConfig, out: IO[str]) -> None:
    write_matrix(gram(read_matrix(cfg.input)), out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partdpp", description="Exact (partition-)DPP sampling and k-DPP MAP inference.")
    sub = parser.add_subparsers(dest="command", required=True)

    def matrix_args(p, required=True):
        p.add_argument("--input", required=required, help="CSV matrix, one row per line")
        p.add_argument("--kind", choices=("features", "kernel"), default="features")

    p = sub.add_parser("sample", help="draw subsets")
    matrix_args(p)
    p.add_argument("--partition", help="partition JSON file")
    p.add_argument("--quotas", help="comma-separated quotas overriding the file's")
    p.add_argument("--k", type=int, help="subset size for an unconstrained k-DPP")
    p.add_argument("--n", type=int, default=1, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("map", help="greedy + local-search MAP for a k-DPP")
    matrix_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--out")

    p = sub.add_parser("partition-fn", help="constrained partition function")
    matrix_args(p)
    p.add_argument("--partition", required=True)
    p.add_argument("--quotas")
    p.add_argument("--out")

    p = sub.add_parser("bench", help="time k-DPP, independent k_i-DPPs and Partition-DPP")
    p.add_argument("--grid", help="JSON list of {parts, quotas}")
    p.add_argument("--parts", help="comma-separated part sizes")
    p.add_argument("--quotas", help="comma-separated quotas")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("gram", help="write the kernel A A^T of a feature CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    return parser


def _emit(records, out: IO[str]) -> None:
    for rec in records:
        out.write(dumps(rec) + "\n")
        out.flush()


def run(cfg: RunConfig, out: IO[str]) -> None:
    if cfg.command == "sample":
        _emit(cmd_sample(cfg), out)
    elif cfg.command == "map":
        _emit([cmd_map(cfg)], out)
    elif cfg.command == "partition-fn":
        _emit([cmd_partition_fn(cfg)], out)
    elif cfg.command == "bench":
        _emit(cmd_bench(cfg), out)
    elif cfg.command == "gram":
        cmd_gram(cfg, out)


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_args(ns)
        if cfg.out:
            with open(cfg.out, "w") as out:
                run(cfg, out)
        else:
            run(cfg, sys.stdout)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
