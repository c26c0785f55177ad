"""Method-of-types machinery on finite alphabets embedded in R^d.

Counting is exact: type counts are Python integers, cycle rounding runs in
rational arithmetic, and only entropies and Monte Carlo estimates live in
floats. The simulation side draws random codebooks from a type class and
tracks the best inner product against an independent draw from another type
class, streaming so the codebook is never materialized beyond a chunk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    CodebookTooLarge,
    DimensionMismatch,
    MarginalNotInteger,
    Overflow,
    TypeMismatch,
)
from .measures import DiscreteMeasure

_FACTORIAL_GUARD = 100_000
DEFAULT_L_CAP = 10**6


def _as_alphabet(points) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(points, dtype=float))
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TypeSpec:
    """Exact count vector over a finite alphabet, summing to N."""

    alphabet: np.ndarray
    counts: tuple
    N: int

    def __post_init__(self):
        alphabet = _as_alphabet(self.alphabet)
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != alphabet.shape[0]:
            raise TypeMismatch(
                f"{len(counts)} counts for {alphabet.shape[0]} alphabet symbols"
            )
        if any(c < 0 for c in counts):
            raise TypeMismatch("counts must be nonnegative")
        if sum(counts) != self.N or self.N <= 0:
            raise TypeMismatch(f"counts sum {sum(counts)} != N = {self.N}")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "N", int(self.N))

    @property
    def dim(self) -> int:
        return self.alphabet.shape[1]

    def mean_point(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) @ self.alphabet / self.N


@dataclass(frozen=True)
class JointTypeSpec:
    """Exact joint count table with derivable marginal count vectors."""

    row_alphabet: np.ndarray
    col_alphabet: np.ndarray
    counts: tuple
    N: int

    def __post_init__(self):
        rows = _as_alphabet(self.row_alphabet)
        cols = _as_alphabet(self.col_alphabet)
        counts = tuple(tuple(int(c) for c in row) for row in self.counts)
        if len(counts) != rows.shape[0] or any(len(r) != cols.shape[0] for r in counts):
            raise TypeMismatch("joint count table does not match alphabets")
        if any(c < 0 for row in counts for c in row):
            raise TypeMismatch("joint counts must be nonnegative")
        if sum(c for row in counts for c in row) != self.N or self.N <= 0:
            raise TypeMismatch("joint counts must sum to N")
        object.__setattr__(self, "row_alphabet", rows)
        object.__setattr__(self, "col_alphabet", cols)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "N", int(self.N))

    def row_counts(self) -> tuple:
        return tuple(sum(row) for row in self.counts)

    def col_counts(self) -> tuple:
        k = len(self.counts[0])
        return tuple(sum(row[j] for row in self.counts) for j in range(k))

    def mutual_information(self) -> float:
        """I of the joint type in nats, from exact counts."""
        n = self.N
        rows = self.row_counts()
        cols = self.col_counts()
        total = 0.0
        for i, row in enumerate(self.counts):
            for j, c in enumerate(row):
                if c > 0:
                    total += (c / n) * math.log(c * n / (rows[i] * cols[j]))
        return max(total, 0.0)


def is_rational(mu: DiscreteMeasure, N: int):
    """Whether N * weights is integer within 1e-9; the exact counts if so."""
    if N <= 0:
        raise ValueError("N must be positive")
    scaled = np.asarray(mu.weights) * N
    rounded = np.rint(scaled)
    if np.abs(scaled - rounded).max() > 1e-9:
        return False, None
    counts = tuple(int(c) for c in rounded)
    return True, TypeSpec(alphabet=mu.points, counts=counts, N=N)


def type_class_size(t: TypeSpec) -> int:
    """Number of sequences with the given type: N! / prod(counts!)."""
    if t.N > _FACTORIAL_GUARD:
        raise Overflow(f"N = {t.N} exceeds the factorial guard {_FACTORIAL_GUARD}")
    size = math.factorial(t.N)
    for c in t.counts:
        size //= math.factorial(c)
    return size


def sample_type_sequence(t: TypeSpec, seed) -> np.ndarray:
    """Uniform draw from the type class, as indices into the alphabet."""
    rng = np.random.default_rng(seed)
    base = np.repeat(np.arange(len(t.counts)), t.counts)
    return rng.permutation(base)


def conditional_type_count(j: JointTypeSpec, x_seq) -> tuple[int, dict]:
    """Exact number of y-sequences forming the joint type against x_seq.

    Also returns the joint type's mutual information, the column type-class
    size, and the two polynomial-factor brackets that the ratio
    count / class_size must satisfy; the bracket check is asserted.
    """
    x_seq = np.asarray(x_seq, dtype=int)
    if x_seq.shape != (j.N,):
        raise TypeMismatch(f"x sequence must have length {j.N}")
    rows = j.row_counts()
    observed = np.bincount(x_seq, minlength=len(rows))
    if tuple(int(c) for c in observed) != rows:
        raise TypeMismatch("x sequence does not have the joint type's row type")
    count = 1
    for i, row in enumerate(j.counts):
        block = math.factorial(rows[i])
        for c in row:
            block //= math.factorial(c)
        count *= block
    col_spec = TypeSpec(alphabet=j.col_alphabet, counts=j.col_counts(), N=j.N)
    class_size = type_class_size(col_spec)
    info = j.mutual_information()
    n_x = j.row_alphabet.shape[0]
    n_y = j.col_alphabet.shape[0]
    log_ratio = math.log(count) - math.log(class_size)
    log_lower = -n_x * n_y * math.log(j.N + 1) - j.N * info
    log_upper = n_y * math.log(j.N + 1) - j.N * info
    assert log_lower <= log_ratio <= log_upper, (
        f"count ratio {log_ratio} escaped [{log_lower}, {log_upper}]"
    )
    return count, {
        "class_size": class_size,
        "mutual_info": info,
        "log_ratio": log_ratio,
        "log_lower": log_lower,
        "log_upper": log_upper,
    }


# -- cycle rounding ------------------------------------------------------------

def _exact_table(P, N: int):
    """N*P as exact Fractions with exactly integer marginals.

    Float inputs are taken at their exact binary values; sub-1e-9 marginal
    residues are absorbed into the largest entries so the cancellation below
    can terminate with an all-integer table.
    """
    if hasattr(P, "shape"):
        rows = [[x for x in row] for row in np.asarray(P)]
    else:
        rows = [list(row) for row in P]
    table = [[Fraction(x) * N for x in row] for row in rows]
    m = len(table)
    k = len(table[0])
    for i in range(m):
        total = sum(table[i])
        target = Fraction(round(total))
        if abs(total - target) > Fraction(1, 10**9):
            raise MarginalNotInteger(f"row {i} sum {float(total)} is not integer")
        if total != target:
            jmax = max(range(k), key=lambda j: table[i][j])
            table[i][jmax] -= total - target
    residues = []
    for jcol in range(k):
        total = sum(table[i][jcol] for i in range(m))
        target = Fraction(round(total))
        if abs(total - target) > Fraction(m, 10**9):
            raise MarginalNotInteger(f"column {jcol} sum {float(total)} is not integer")
        residues.append(total - target)
    if any(residues):
        # residues sum to zero exactly, so dumping them all into one row
        # keeps that row's total intact
        istar = max(range(m), key=lambda i: min(table[i]))
        for jcol, res in enumerate(residues):
            table[istar][jcol] -= res
    if any(x < 0 for row in table for x in row):
        raise MarginalNotInteger("marginal repair drove an entry negative")
    return table


def _find_cycle(frac_cells):
    """Deterministic cycle in the bipartite fractional support graph.

    Rows and columns are nodes, fractional cells are edges; every incident
    node has degree >= 2 (its fractional mass sums to a positive integer),
    so a cycle exists. DFS starts at the lexicographically first cell and
    visits neighbors in sorted order. Returns the cycle as a cell list in
    which alternating +/- pushes preserve both marginals.
    """
    by_row: dict = {}
    by_col: dict = {}
    for i, jcol in sorted(frac_cells):
        by_row.setdefault(i, []).append(jcol)
        by_col.setdefault(jcol, []).append(i)

    def neighbors(node):
        kind, idx = node
        if kind == "r":
            return [("c", j) for j in by_row[idx]]
        return [("r", i) for i in by_col[idx]]

    start = ("r", min(frac_cells)[0])
    path = [start]
    pos = {start: 0}
    iters = [iter(neighbors(start))]
    visited = {start}
    while path:
        try:
            nxt = next(iters[-1])
        except StopIteration:
            pos.pop(path.pop())
            iters.pop()
            continue
        if len(path) >= 2 and nxt == path[-2]:
            continue  # the edge we came in on
        if nxt in pos:
            nodes = path[pos[nxt] :]
            cells = []
            for t, node in enumerate(nodes):
                a = node
                b = nodes[(t + 1) % len(nodes)]
                cells.append((a[1], b[1]) if a[0] == "r" else (b[1], a[1]))
            return cells
        if nxt in visited:
            continue
        visited.add(nxt)
        pos[nxt] = len(path)
        path.append(nxt)
        iters.append(iter(neighbors(nxt)))
    raise AssertionError("fractional support graph must contain a cycle")


def cycle_round(P, N: int, row_alphabet=None, col_alphabet=None) -> JointTypeSpec:
    """Round a coupling with integer scaled marginals to an exact joint type.

    Fractional mass is cancelled around cycles of the bipartite support
    graph until every entry is integer; marginal count vectors are preserved
    exactly and no entry moves by 1/N or more.
    """
    table = _exact_table(P, N)
    m = len(table)
    k = len(table[0])
    base = [[math.floor(x) for x in row] for row in table]
    frac = [[table[i][j] - base[i][j] for j in range(k)] for i in range(m)]
    cells = {(i, j) for i in range(m) for j in range(k) if frac[i][j] != 0}
    while cells:
        cycle = _find_cycle(cells)
        plus = cycle[0::2]
        minus = cycle[1::2]
        delta = min(
            min(1 - frac[i][j] for i, j in plus),
            min(frac[i][j] for i, j in minus),
        )
        for i, j in plus:
            frac[i][j] += delta
        for i, j in minus:
            frac[i][j] -= delta
        for i, j in cycle:
            if frac[i][j] == 0:
                cells.discard((i, j))
            elif frac[i][j] == 1:
                base[i][j] += 1
                frac[i][j] = Fraction(0)
                cells.discard((i, j))
    counts = tuple(tuple(base[i][j] for j in range(k)) for i in range(m))
    if row_alphabet is None:
        row_alphabet = np.arange(m, dtype=float).reshape(-1, 1)
    if col_alphabet is None:
        col_alphabet = np.arange(k, dtype=float).reshape(-1, 1)
    return JointTypeSpec(
        row_alphabet=row_alphabet, col_alphabet=col_alphabet, counts=counts, N=N
    )


def chernoff_binomial_bound(p: float, L: int, t: float) -> float:
    """Poisson-style tail bound exp(-m) (e m / t)^t with m = L p.

    Valid for the upper tail when t >= m and the lower tail when t <= m;
    the caller selects the side.
    """
    if not 0 <= p <= 1:
        raise ValueError("p must be a probability")
    if L < 0 or t <= 0:
        raise ValueError("need L >= 0 and t > 0")
    mean = L * p
    if mean == 0:
        return 0.0
    exponent = -mean + t * (1.0 + math.log(mean) - math.log(t))
    if exponent > 700:
        return math.inf
    return math.exp(exponent)


@dataclass(frozen=True)
class LiftingEstimate:
    """Monte Carlo estimate of the best codebook inner product."""

    N: int
    R: float
    L: int
    trials: int
    mean: float
    std_error: float

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")
        if self.L != int(math.floor(math.exp(self.N * self.R))):
            raise ValueError("L must equal floor(exp(N R))")


def simulate_lifting(
    gamma_t: TypeSpec,
    mu_t: TypeSpec,
    R: float,
    trials: int = 1000,
    seed: int = 0,
    l_cap: int = DEFAULT_L_CAP,
    chunk: int = 10_000,
) -> LiftingEstimate:
    """Estimate E[max over a random codebook of the normalized inner product].

    Each trial draws one sequence uniformly from gamma's type class and
    floor(exp(N R)) codewords with replacement from mu's type class, then
    records the best inner product per symbol. Codewords are scored in
    chunks and never stored. Deterministic given (seed, trial index).
    """
    if R < 0:
        raise ValueError("R must be nonnegative")
    if gamma_t.N != mu_t.N:
        raise DimensionMismatch(f"block lengths differ: {gamma_t.N} vs {mu_t.N}")
    if gamma_t.dim != mu_t.dim:
        raise DimensionMismatch(f"point dims differ: {gamma_t.dim} vs {mu_t.dim}")
    n = gamma_t.N
    if n * R > math.log(l_cap) + 1e-9:
        raise CodebookTooLarge(f"floor(exp({n * R:.3f})) exceeds cap {l_cap}")
    codebook_size = int(math.floor(math.exp(n * R)))
    if codebook_size > l_cap:
        raise CodebookTooLarge(f"L = {codebook_size} exceeds cap {l_cap}")

    gram = gamma_t.alphabet @ mu_t.alphabet.T
    base_mu = np.repeat(np.arange(len(mu_t.counts)), mu_t.counts)
    values = np.empty(trials)
    for trial in range(trials):
        rng = np.random.default_rng((int(seed), trial))
        y_idx = rng.permutation(np.repeat(np.arange(len(gamma_t.counts)), gamma_t.counts))
        gy = gram[y_idx]  # (N, |mu alphabet|)
        pos = np.arange(n)[None, :]
        best = -np.inf
        remaining = codebook_size
        while remaining > 0:
            rows = min(chunk, remaining)
            z_idx = rng.permuted(np.tile(base_mu, (rows, 1)), axis=1)
            scores = gy[pos, z_idx].sum(axis=1)
            best = max(best, float(scores.max()))
            remaining -= rows
        values[trial] = best / n
    mean = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return LiftingEstimate(
        N=n, R=R, L=codebook_size, trials=trials, mean=mean, std_error=std_error
    )
