"""Text file formats: problem documents, direction caches, residual traces.

Both the problem and the cache format are line-oriented UTF-8 text with
named fields, written at 17 significant digits so a write/load round
trip is exact. ``#`` starts a comment; blank lines are ignored. Numeric
blocks are token streams, so line breaks inside a block are free-form
(the writer uses one row per matrix row).

Problem document::

    name <optional label>
    n <int>
    m <int>
    P            # n*n values
    ...
    q            # n values
    A            # m*n values
    l            # m values; -inf allowed
    u            # m values; inf allowed

Cache document::

    n <int>
    m <int>
    sigma <float>
    strategy <pencil|combined>
    fingerprint <hex>
    rho_base     # m values
    directions   # n*n values, one direction per row
    t1           # n values
    t2           # n values

Trace files are plain CSV with header ``k,r_prim_2,r_dual_2,scale`` and
one row per completed outer iteration (k starts at 1).
"""

from __future__ import annotations

import csv

import numpy as np

from .offline import AugmentationMatrix, ConjugateDirectionSet
from .problem import QpProblem, validate
from .solver import SolveResult

FMT = "%.17g"


class ParseError(ValueError):
    """Malformed document; the message carries the line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class _Tokens:
    """Token stream over a text file with line tracking."""

    def __init__(self, text: str):
        self.items: list[tuple[str, int]] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0]
            for tok in body.split():
                self.items.append((tok, lineno))
        self.pos = 0
        self.last_line = 1

    def done(self) -> bool:
        return self.pos >= len(self.items)

    def next(self, what: str) -> str:
        if self.done():
            raise ParseError(f"unexpected end of file while reading {what}", self.last_line)
        tok, line = self.items[self.pos]
        self.pos += 1
        self.last_line = line
        return tok

    def next_float(self, what: str) -> float:
        tok = self.next(what)
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"expected a number for {what}, got {tok!r}", self.last_line) from None

    def next_int(self, what: str) -> int:
        tok = self.next(what)
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"expected an integer for {what}, got {tok!r}", self.last_line) from None

    def block(self, what: str, count: int) -> np.ndarray:
        return np.array([self.next_float(what) for _ in range(count)])


def _format_vector(v: np.ndarray) -> str:
    return " ".join(FMT % x for x in v)


def write_problem(path, problem: QpProblem) -> None:
    lines = []
    if problem.name:
        lines.append(f"name {problem.name}")
    lines.append(f"n {problem.n}")
    lines.append(f"m {problem.m}")
    lines.append("P")
    lines.extend(_format_vector(row) for row in problem.P)
    lines.append("q")
    lines.append(_format_vector(problem.q))
    lines.append("A")
    lines.extend(_format_vector(row) for row in problem.A)
    lines.append("l")
    lines.append(_format_vector(problem.l))
    lines.append("u")
    lines.append(_format_vector(problem.u))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_problem(path) -> QpProblem:
    """Parse and validate a problem document.

    Raises :class:`ParseError` with a line number on malformed input and
    propagates :class:`~cdqp.problem.ValidationError` on bad data.
    """
    with open(path, "r", encoding="utf-8") as fh:
        toks = _Tokens(fh.read())

    name = ""
    n = m = None
    fields: dict[str, np.ndarray] = {}
    while not toks.done():
        key = toks.next("field name")
        line = toks.last_line
        if key == "name":
            name = toks.next("name value")
        elif key == "n":
            n = toks.next_int("n")
        elif key == "m":
            m = toks.next_int("m")
        elif key in ("P", "q", "A", "l", "u"):
            if n is None or m is None:
                raise ParseError(f"block {key!r} before n and m are set", line)
            counts = {"P": n * n, "q": n, "A": m * n, "l": m, "u": m}
            if key in fields:
                raise ParseError(f"duplicate block {key!r}", line)
            fields[key] = toks.block(f"entry of {key}", counts[key])
        else:
            raise ParseError(f"unknown field {key!r}", line)

    if n is None or m is None:
        raise ParseError("missing n or m", toks.last_line)
    missing = [k for k in ("P", "q", "A", "l", "u") if k not in fields]
    if missing:
        raise ParseError(f"missing blocks: {', '.join(missing)}", toks.last_line)
    return validate(
        QpProblem(
            P=fields["P"].reshape(n, n),
            q=fields["q"],
            A=fields["A"].reshape(m, n),
            l=fields["l"],
            u=fields["u"],
            name=name,
        )
    )


def write_cache(path, dirs: ConjugateDirectionSet, rho: AugmentationMatrix, sigma: float) -> None:
    n = dirs.n
    lines = [
        f"n {n}",
        f"m {rho.m}",
        "sigma " + (FMT % sigma),
        f"strategy {dirs.strategy}",
        f"fingerprint {dirs.fingerprint}",
        "rho_base",
        _format_vector(rho.rho_base),
        "directions",
    ]
    lines.extend(_format_vector(row) for row in dirs.directions)
    lines.append("t1")
    lines.append(_format_vector(dirs.t1))
    lines.append("t2")
    lines.append(_format_vector(dirs.t2))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_cache(path) -> tuple[ConjugateDirectionSet, AugmentationMatrix, float]:
    with open(path, "r", encoding="utf-8") as fh:
        toks = _Tokens(fh.read())

    n = m = None
    sigma = None
    strategy = None
    fingerprint = None
    rho_base = directions = t1 = t2 = None
    while not toks.done():
        key = toks.next("field name")
        line = toks.last_line
        if key == "n":
            n = toks.next_int("n")
        elif key == "m":
            m = toks.next_int("m")
        elif key == "sigma":
            sigma = toks.next_float("sigma")
        elif key == "strategy":
            strategy = toks.next("strategy")
        elif key == "fingerprint":
            fingerprint = toks.next("fingerprint")
        elif key == "rho_base":
            if m is None:
                raise ParseError("rho_base before m is set", line)
            rho_base = toks.block("entry of rho_base", m)
        elif key == "directions":
            if n is None:
                raise ParseError("directions before n is set", line)
            directions = toks.block("entry of directions", n * n).reshape(n, n)
        elif key == "t1":
            if n is None:
                raise ParseError("t1 before n is set", line)
            t1 = toks.block("entry of t1", n)
        elif key == "t2":
            if n is None:
                raise ParseError("t2 before n is set", line)
            t2 = toks.block("entry of t2", n)
        else:
            raise ParseError(f"unknown field {key!r}", line)

    for label, value in (
        ("n", n), ("m", m), ("sigma", sigma), ("strategy", strategy),
        ("fingerprint", fingerprint), ("rho_base", rho_base),
        ("directions", directions), ("t1", t1), ("t2", t2),
    ):
        if value is None:
            raise ParseError(f"missing field {label}", toks.last_line)

    dirs = ConjugateDirectionSet(
        directions=directions, t1=t1, t2=t2, fingerprint=fingerprint, strategy=strategy
    )
    return dirs, AugmentationMatrix(rho_base, 1.0), sigma


def write_trace(path, result: SolveResult) -> None:
    """One CSV row per completed outer iteration."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "r_prim_2", "r_dual_2", "scale"])
        for i in range(result.outer_iterations):
            prim2, dual2 = result.residual_history[i, 0], result.residual_history[i, 1]
            writer.writerow(
                [i + 1, FMT % prim2, FMT % dual2, FMT % result.rho_scale_history[i]]
            )
