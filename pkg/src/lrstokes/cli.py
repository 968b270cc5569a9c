"""Command-line experiment runner.

    python -m lrstokes sine --n 64,128,256 --mode both --out sine.csv --trace trace.csv
    python -m lrstokes cavity --n 256 --mode both --out cavity.csv
    python -m lrstokes bench-inverse --n 1024 --rank 30 --eps 1e-7 --out bench.csv
    python -m lrstokes spectrum --n 8,12,16 --out spectrum.csv
    python -m lrstokes poisson --n 256,1024 --rank 4 --out poisson.csv

Exit status is 0 on success, 2 if a solver did not converge (rows written so
far are kept) and 1 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import lowrank
from .lowrank import LowRankMatrix
from .poisson import bench_inverse, solve_poisson_cross
from .problems import cavity_problem, pressure_error, sine_pressure, sine_problem
from .refsolver import dense_stokes, schur_spectrum
from .stokes import GmresConfig, uzawa_solve

log = logging.getLogger("lrstokes")

EXPERIMENTS = ("sine", "cavity", "poisson", "bench-inverse", "spectrum")
MODES = ("lowrank", "full", "both")

EXIT_OK, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2


@dataclass
class RunConfig:
    experiment: str
    n_list: list[int]
    eps: float = lowrank.DEFAULT_EPS
    mode: str = "both"
    seed: int = 0
    out: Path | None = None
    trace: Path | None = None
    markdown: Path | None = None
    rank: int | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (0 < self.eps < 1e-2):
            raise ValueError(f"eps must lie in (0, 1e-2), got {self.eps}")
        if not self.n_list:
            raise ValueError("need at least one n")
        for n in self.n_list:
            if self.experiment == "spectrum":
                if not 4 <= n <= 24:
                    raise ValueError(f"spectrum needs 4 <= n <= 24, got {n}")
            elif n < 8 or n & (n - 1):
                raise ValueError(f"n must be a power of two >= 8, got {n}")
        if self.rank is None:
            self.rank = 30 if self.experiment == "bench-inverse" else 4
        if self.rank < 1:
            raise ValueError("rank must be positive")

    @property
    def modes(self) -> list[str]:
        return ["lowrank", "full"] if self.mode == "both" else [self.mode]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if np.isnan(v) else f"{float(v):.8e}"
    return str(v)


class CsvSink:
    """Writes rows as they arrive so a failed run keeps its partial output."""

    def __init__(self, path: Path | None, columns: list[str]):
        self.columns = columns
        self.rows: list[dict] = []
        self._fh = None
        if path is not None:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(path, "w", newline="")
            self._w = csv.writer(self._fh)
            self._w.writerow(columns)
            self._fh.flush()

    def write(self, row: dict):
        self.rows.append(row)
        if self._fh is not None:
            self._w.writerow([_fmt(row[c]) for c in self.columns])
            self._fh.flush()

    def close(self):
        if self._fh is not None:
            self._fh.close()


STOKES_COLUMNS = ["n", "mode", "time_s", "iters", "max_rank", "rel_err_p"]
CAVITY_COLUMNS = ["n", "mode", "time_s", "iters", "max_rank", "rel_diff"]
TRACE_COLUMNS = ["n", "mode", "iter", "residual", "krylov_rank", "matvec_eps"]
POISSON_COLUMNS = ["n", "rank_in", "rank_freq", "rank_out", "evaluator_calls", "time_s", "residual"]
BENCH_COLUMNS = [
    "n", "rank", "eps", "nterms", "time_cross", "time_expsum", "speedup",
    "rank_cross", "rank_expsum", "err_cross", "err_expsum",
]
SPECTRUM_COLUMNS = ["n", "n_eigs", "n_zero", "n_one", "min_nonzero", "max_eig"]


def _gmres_cfg(eps):
    return GmresConfig(tol=eps, base_eps=eps)


def _stokes_job(args):
    """One (experiment, n) unit of work; returns rows, trace rows and a convergence flag."""
    experiment, n, eps, modes = args
    prob = sine_problem(n) if experiment == "sine" else cavity_problem(n)
    cfg = _gmres_cfg(eps)
    rows, trace, ok = [], [], True
    solutions = {}
    for mode in modes:
        if mode == "lowrank":
            p, _, _, rep = uzawa_solve(prob, cfg)
            max_rank = rep.max_rank
            trace.extend({"n": n, "mode": mode, **r} for r in rep.trace_rows())
        else:
            p, _, rep = dense_stokes(prob, cfg)
            max_rank = n
        ok &= rep.converged
        solutions[mode] = p
        row = {"n": n, "mode": mode, "time_s": rep.wall_time, "iters": rep.iterations,
               "max_rank": max_rank}
        if experiment == "sine":
            p_phys = p * prob.p_scale
            row["rel_err_p"] = pressure_error(p_phys, sine_pressure(n))
        rows.append(row)
    if experiment == "cavity":
        diff = float("nan")
        if len(solutions) == 2:
            diff = pressure_error(solutions["lowrank"], solutions["full"])
        for row in rows:
            row["rel_diff"] = diff
    return rows, trace, ok


def _smooth_rhs(n, rank, seed):
    rng = np.random.default_rng(seed)
    x = np.arange(1, n) / n
    k = rng.integers(1, 5, size=(2, rank))
    c = rng.standard_normal((2, rank))
    U = np.sin(np.pi * np.outer(x, k[0])) * c[0] + np.outer(x * (1 - x), np.ones(rank))
    V = np.cos(np.pi * np.outer(x, k[1])) * c[1]
    return LowRankMatrix(U, V)


def write_markdown(path: Path, rows: list[dict]):
    """Table with ``Time (LR/full)`` and ``Rel. error in p (LR/full)`` columns."""
    by_n: dict[int, dict] = {}
    for r in rows:
        by_n.setdefault(r["n"], {})[r["mode"]] = r
    key = "rel_err_p" if any("rel_err_p" in r for r in rows) else "rel_diff"

    def pair(d, col, fmt):
        return "/".join(fmt(d[m][col]) if m in d else "-" for m in ("lowrank", "full"))

    lines = [
        f"| n | Time (LR/full) | {'Rel. error in p' if key == 'rel_err_p' else 'Rel. diff'} (LR/full) |",
        "|---:|---|---|",
    ]
    for n in sorted(by_n):
        d = by_n[n]
        lines.append(
            f"| {n} | {pair(d, 'time_s', lambda v: f'{v:.2g}')} | {pair(d, key, lambda v: f'{v:.1e}')} |"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def run(config: RunConfig) -> int:
    """Run one experiment; returns the process exit status."""
    exp = config.experiment
    ok = True
    if exp in ("sine", "cavity"):
        sink = CsvSink(config.out, STOKES_COLUMNS if exp == "sine" else CAVITY_COLUMNS)
        tsink = CsvSink(config.trace, TRACE_COLUMNS)
        jobs = [(exp, n, config.eps, config.modes) for n in config.n_list]
        if config.jobs > 1:
            with ProcessPoolExecutor(config.jobs) as pool:
                results = list(pool.map(_stokes_job, jobs))
        else:
            results = map(_stokes_job, jobs)
        for rows, trace, conv in results:
            for r in rows:
                sink.write(r)
                log.info("%s", {k: r[k] for k in sink.columns})
            for t in trace:
                tsink.write(t)
            ok &= conv
        sink.close()
        tsink.close()
        if config.markdown is not None:
            write_markdown(config.markdown, sink.rows)
    elif exp == "poisson":
        sink = CsvSink(config.out, POISSON_COLUMNS)
        for n in config.n_list:
            g = _smooth_rhs(n, config.rank, config.seed)
            f, st = solve_poisson_cross(g, config.eps, seed=config.seed)
            ok &= st.converged
            sink.write({"n": n, "rank_in": st.rank_in, "rank_freq": st.rank_freq,
                        "rank_out": st.rank_out, "evaluator_calls": st.evaluator_calls,
                        "time_s": st.elapsed, "residual": st.residual})
        sink.close()
    elif exp == "bench-inverse":
        sink = CsvSink(config.out, BENCH_COLUMNS)
        for n in config.n_list:
            b = bench_inverse(n, config.rank, config.eps, seed=config.seed)
            row = {c: getattr(b, c) for c in BENCH_COLUMNS}
            sink.write(row)
            log.info("n=%d cross %.3fs expsum %.3fs speedup %.1f", n, b.time_cross,
                     b.time_expsum, b.speedup)
        sink.close()
    elif exp == "spectrum":
        sink = CsvSink(config.out, SPECTRUM_COLUMNS)
        for n in config.n_list:
            ev = schur_spectrum(n)
            nz = ev[np.abs(ev) > 1e-10]
            sink.write({"n": n, "n_eigs": ev.size, "n_zero": int(np.sum(np.abs(ev) <= 1e-10)),
                        "n_one": int(np.sum(np.abs(ev - 1) <= 1e-10)),
                        "min_nonzero": float(nz.min()), "max_eig": float(ev.max())})
        sink.close()
    if config.out is None:
        _print_rows(sink)
    return EXIT_OK if ok else EXIT_NOCONV


def _print_rows(sink: CsvSink):
    w = csv.writer(sys.stdout)
    w.writerow(sink.columns)
    for r in sink.rows:
        w.writerow([_fmt(r[c]) for c in sink.columns])


def _n_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lrstokes", description=__doc__.split("\n")[0])
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--n", type=_n_list, required=True, help="grid sizes, e.g. 64,128,256")
    p.add_argument("--eps", type=float, default=None,
                   help="truncation / solver tolerance (default 5e-9; 1e-7 for bench-inverse)")
    p.add_argument("--mode", choices=MODES, default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rank", type=int, default=None,
                   help="input rank for bench-inverse (default 30) / poisson (default 4)")
    p.add_argument("--out", type=Path, default=None, help="CSV output (stdout if omitted)")
    p.add_argument("--trace", type=Path, default=None, help="per-iteration GMRES trace CSV")
    p.add_argument("--markdown", type=Path, default=None, help="markdown table output")
    p.add_argument("--jobs", type=int, default=1, help="run n-values in parallel processes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    eps = args.eps
    if eps is None:
        eps = 1e-7 if args.experiment == "bench-inverse" else lowrank.DEFAULT_EPS
    try:
        config = RunConfig(experiment=args.experiment, n_list=args.n, eps=eps, mode=args.mode,
                           seed=args.seed, out=args.out, trace=args.trace,
                           markdown=args.markdown, rank=args.rank, jobs=args.jobs)
    except ValueError as e:
        print(f"lrstokes: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
