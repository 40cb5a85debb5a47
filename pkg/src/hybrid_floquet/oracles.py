"""Exact-arithmetic checks of two rank facts about matrix powers and cyclic products.

All ranks here are computed over the rationals by fraction-free (Bareiss)
elimination on integer matrices, so no tolerance is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

IntMatrix = list[list[int]]


def exact_rank(A: Sequence[Sequence[int]]) -> int:
    """Rank over Q of an integer matrix."""
    M = [list(map(int, row)) for row in A]
    if not M or not M[0]:
        return 0
    rows, cols = len(M), len(M[0])
    rank = 0
    prev = 1
    for c in range(cols):
        pivot = next((r for r in range(rank, rows) if M[r][c] != 0), None)
        if pivot is None:
            continue
        M[rank], M[pivot] = M[pivot], M[rank]
        p = M[rank][c]
        for r in range(rank + 1, rows):
            for cc in range(c + 1, cols):
                M[r][cc] = (p * M[r][cc] - M[r][c] * M[rank][cc]) // prev
            M[r][c] = 0
        prev = p
        rank += 1
        if rank == rows:
            break
    return rank


def matmul(A: IntMatrix, B: IntMatrix) -> IntMatrix:
    Bt = list(zip(*B))
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matpow(A: IntMatrix, s: int) -> IntMatrix:
    out = identity(len(A))
    for _ in range(s):
        out = matmul(out, A)
    return out


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    # per-trial stream so serial and parallel runs draw identical matrices
    return np.random.default_rng([seed, trial])


@dataclass
class OracleReport:
    name: str
    trials: int
    violations: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "violations": self.violations,
            "passed": self.passed,
        }


def power_ranks(A: IntMatrix, s_max: int) -> list[int]:
    """[rank A^1, ..., rank A^s_max]."""
    ranks = []
    P = identity(len(A))
    for _ in range(s_max):
        P = matmul(P, A)
        ranks.append(exact_rank(P))
    return ranks


def check_power_stabilization(A: IntMatrix) -> dict | None:
    """rank(A^s) == rank(A^(r+1)) for r+1 <= s <= 2m, r = rank A. None if it holds."""
    m = len(A)
    r = exact_rank(A)
    ranks = power_ranks(A, max(2 * m, r + 1))
    ref = ranks[r]  # A^(r+1)
    for s in range(r + 1, 2 * m + 1):
        if ranks[s - 1] != ref:
            return {"matrix": A, "rank": r, "s": s, "ranks": ranks}
    return None


def prop1_oracle(trials: int = 1000, max_dim: int = 6, seed: int = 0, lo: int = -3, hi: int = 3) -> OracleReport:
    """Random integer matrices: ranks of powers are constant from A^(rank A + 1) on."""
    report = OracleReport("power_rank_stabilization", trials)
    for t in range(trials):
        rng = trial_rng(seed, t)
        m = int(rng.integers(1, max_dim + 1))
        A = rng.integers(lo, hi + 1, size=(m, m))
        if rng.random() < 0.5:
            A = A * (rng.random(size=A.shape) < 0.3)
        bad = check_power_stabilization(A.tolist())
        if bad is not None:
            bad["trial"] = t
            report.violations.append(bad)
    return report


def literal_power_claim_counterexample() -> dict:
    """The unqualified claim rank A <= n => rank A^(2n) == rank A^n fails for
    the 2x2 nilpotent Jordan block with n = 1.
    """
    J = [[0, 1], [0, 0]]
    n = exact_rank(J)
    return {
        "matrix": J,
        "n": n,
        "rank_A^n": exact_rank(matpow(J, n)),
        "rank_A^2n": exact_rank(matpow(J, 2 * n)),
    }


def cyclic_products(chain: Sequence[IntMatrix]) -> list[IntMatrix]:
    """B_j = A_{j-1} ... A_1 A_k ... A_j for a cyclic chain A_j: R^{n_j} -> R^{n_{j+1}}.

    ``chain[j]`` holds A_{j+1}; the result lists B_1 .. B_k.
    """
    k = len(chain)
    out = []
    for j in range(k):
        B = identity(len(chain[j][0]))
        for step in range(k):
            B = matmul(chain[(j + step) % k], B)
        out.append(B)
    return out


def check_cyclic_chain(chain: Sequence[IntMatrix], n: int, literal: bool = False) -> dict | None:
    """Rank identities for the cyclic products of ``chain`` at exponent ``n``.

    Always checked: every B_l^(n+1) has the same rank, B_j^(n+1) and
    B_j^(n+2) agree for every j, and B_j^n agrees with B_j^(n+1) at a node
    of minimal dimension. With ``literal`` the last equality is demanded at
    every node, which fails when a longer path feeds a nilpotent loop (see
    ``literal_cyclic_claim_counterexample``). Returns None when all hold.
    """
    Bs = cyclic_products(chain)
    dims = [len(B) for B in Bs]
    r_n = [exact_rank(matpow(B, n)) for B in Bs]
    r_n1 = [exact_rank(matpow(B, n + 1)) for B in Bs]
    r_n2 = [exact_rank(matpow(B, n + 2)) for B in Bs]
    j_min = dims.index(min(dims))
    ok = len(set(r_n1)) == 1 and r_n1 == r_n2 and r_n[j_min] == r_n1[j_min]
    if literal:
        ok = ok and r_n == r_n1
    if ok:
        return None
    return {
        "chain": [list(map(list, A)) for A in chain],
        "n": n,
        "rank_n": r_n,
        "rank_n+1": r_n1,
        "rank_n+2": r_n2,
    }


def literal_cyclic_claim_counterexample() -> dict:
    """A 2-factor chain where rank B_1^(n+1) != rank B_1^n with n = min n_j = 1.

    A_1 is 1x5 and A_2 is 5x1 with A_1 A_2 = 0, so B_1 = A_2 A_1 has rank 1
    while B_1^2 = A_2 (A_1 A_2) A_1 = 0.
    """
    chain = [[[1, 2, 1, 0, -1]], [[3], [-1], [2], [1], [3]]]
    B1, B2 = cyclic_products(chain)
    return {
        "chain": chain,
        "n": 1,
        "rank_B1": exact_rank(B1),
        "rank_B1^2": exact_rank(matpow(B1, 2)),
        "rank_B2^2": exact_rank(matpow(B2, 2)),
    }


def random_chain(rng: np.random.Generator, max_factors: int = 5, max_dim: int = 6, lo: int = -3, hi: int = 3):
    k = int(rng.integers(1, max_factors + 1))
    dims = [int(v) for v in rng.integers(1, max_dim + 1, size=k)]
    chain = []
    for j in range(k):
        rows, cols = dims[(j + 1) % k], dims[j]
        A = rng.integers(lo, hi + 1, size=(rows, cols))
        # sparsify some factors so low-rank chains are common
        if rng.random() < 0.5:
            A = A * (rng.random(size=A.shape) < 0.4)
        chain.append(A.tolist())
    return chain, dims


def prop2_oracle(
    trials: int = 500,
    seed: int = 0,
    max_factors: int = 5,
    max_dim: int = 6,
    literal: bool = False,
) -> OracleReport:
    """Random cyclic chains checked with ``check_cyclic_chain`` for n = min n_j and min n_j + 1."""
    report = OracleReport("cyclic_product_rank" + ("_literal" if literal else ""), trials)
    for t in range(trials):
        rng = trial_rng(seed, t)
        chain, dims = random_chain(rng, max_factors, max_dim)
        for n in (min(dims), min(dims) + 1):
            bad = check_cyclic_chain(chain, n, literal)
            if bad is not None:
                bad["trial"] = t
                report.violations.append(bad)
                break
    return report
