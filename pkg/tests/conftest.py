import pathlib
import random

import numpy as np
import pytest

from cdlsem import has_errors, normalize_model, parse_model
from cdlsem.sat import Cnf

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def brute_cnf_status(cnf: Cnf) -> str:
    """Truth-table satisfiability via vectorized clause masks (<= ~20 vars)."""
    n = cnf.num_vars
    if n == 0:
        return "unsat" if any(len(c) == 0 for c in cnf.clauses) else "sat"
    assigns = np.arange(1 << n, dtype=np.uint32)
    ok = np.ones(1 << n, dtype=bool)
    for cl in cnf.clauses:
        pos = np.uint32(0)
        neg = np.uint32(0)
        for l in cl:
            if l > 0:
                pos |= np.uint32(1 << (l - 1))
            else:
                neg |= np.uint32(1 << (-l - 1))
        ok &= ((assigns & pos) != 0) | ((~assigns & neg) != 0)
        if not ok.any():
            return "unsat"
    return "sat"


def random_cnf(rng: random.Random, max_vars: int = 15, max_clauses: int = 60) -> Cnf:
    n = rng.randint(1, max_vars)
    clauses = []
    for _ in range(rng.randint(0, max_clauses)):
        if rng.random() < 0.01:
            clauses.append(())  # occasional empty clause
            continue
        width = rng.randint(1, 4)
        lits = set()
        for _ in range(width):
            v = rng.randint(1, n)
            lits.add(v if rng.random() < 0.5 else -v)
        clauses.append(tuple(sorted(lits, key=lambda l: (abs(l), l < 0))))
    return Cnf(n, tuple(clauses), tuple(f"x{i}" for i in range(1, n + 1)))


def pigeonhole_cnf(pigeons: int, holes: int) -> Cnf:
    """Every pigeon in a hole, no hole shared; unsat when pigeons > holes."""
    var = lambda i, j: i * holes + j + 1
    clauses = [tuple(var(i, j) for j in range(holes)) for i in range(pigeons)]
    for j in range(holes):
        for i1 in range(pigeons):
            for i2 in range(i1 + 1, pigeons):
                clauses.append((-var(i1, j), -var(i2, j)))
    names = tuple(f"p{i}h{j}" for i in range(pigeons) for j in range(holes))
    return Cnf(pigeons * holes, tuple(clauses), names)


def mk_model(source: str, name: str = "<test>"):
    """Parse and normalize inline CDL source, failing the test on errors."""
    nodes, diagnostics = parse_model(source, name)
    assert not has_errors(diagnostics), diagnostics
    return normalize_model(nodes)


def load_model(path: pathlib.Path):
    nodes, diagnostics = parse_model(path.read_text(), str(path))
    assert not has_errors(diagnostics), diagnostics
    return normalize_model(nodes)


def fixture_paths(*groups: str) -> list[pathlib.Path]:
    out: list[pathlib.Path] = []
    for group in groups:
        out.extend(sorted((FIXTURES / group).glob("*.cdl")))
    return out


@pytest.fixture(scope="session")
def sound_models():
    """The soundness corpus: path -> normalized model."""
    return {p: load_model(p) for p in fixture_paths("sound")}


@pytest.fixture(scope="session")
def family_models():
    return {p: load_model(p) for p in fixture_paths("family")}


@pytest.fixture(scope="session")
def analysis_models():
    return {p: load_model(p) for p in fixture_paths("analysis")}
