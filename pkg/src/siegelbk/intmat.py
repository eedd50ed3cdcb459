"""Small exact integer linear algebra: row Hermite normal form with the
transforming matrix, and completion of coprime symmetric pairs."""

from __future__ import annotations

from math import gcd
from typing import Sequence

Matrix = list[list[int]]


def _copy(M: Sequence[Sequence[int]]) -> Matrix:
    return [[int(x) for x in r] for r in M]


def eye(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> Matrix:
    return [[sum(A[i][l] * B[l][j] for l in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def transpose(A: Sequence[Sequence[int]]) -> Matrix:
    return [list(r) for r in zip(*A)]


def det_int(A: Sequence[Sequence[int]]) -> int:
    n = len(A)
    if n == 0:
        return 1
    if n == 1:
        return A[0][0]
    if n == 2:
        return A[0][0] * A[1][1] - A[0][1] * A[1][0]
    return sum((-1) ** j * A[0][j] * det_int([r[:j] + r[j + 1:] for r in A[1:]]) for j in range(n))


def hnf_rows(M: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix]:
    """Row-style Hermite normal form: returns (H, V) with V unimodular and H = V M.

    Pivots are positive, entries above a pivot are reduced into [0, pivot), and
    zero rows sit at the bottom.
    """
    H = _copy(M)
    m = len(H)
    ncols = len(H[0]) if m else 0
    V = eye(m)
    row = 0
    for col in range(ncols):
        if row >= m:
            break
        # Euclid on column col among rows >= row
        while True:
            nz = [r for r in range(row, m) if H[r][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda r: abs(H[r][col]))
            H[row], H[piv] = H[piv], H[row]
            V[row], V[piv] = V[piv], V[row]
            done = True
            for r in range(row + 1, m):
                q = H[r][col] // H[row][col]
                if q:
                    H[r] = [a - q * b for a, b in zip(H[r], H[row])]
                    V[r] = [a - q * b for a, b in zip(V[r], V[row])]
                if H[r][col]:
                    done = False
            if done:
                break
        if H[row][col] == 0:
            continue
        if H[row][col] < 0:
            H[row] = [-a for a in H[row]]
            V[row] = [-a for a in V[row]]
        p = H[row][col]
        for r in range(row):
            q = H[r][col] // p
            if q:
                H[r] = [a - q * b for a, b in zip(H[r], H[row])]
                V[r] = [a - q * b for a, b in zip(V[r], V[row])]
        row += 1
    return H, V


def hnf_key(M: Sequence[Sequence[int]]) -> tuple:
    H, _ = hnf_rows(M)
    return tuple(tuple(r) for r in H)


def minors_gcd_2xN(M: Sequence[Sequence[int]]) -> int:
    """gcd of all maximal minors of an n x 2n integer matrix (n <= 2)."""
    n = len(M)
    if n == 1:
        g = 0
        for x in M[0]:
            g = gcd(g, x)
        return g
    g = 0
    cols = len(M[0])
    for i in range(cols):
        for j in range(i + 1, cols):
            g = gcd(g, M[0][i] * M[1][j] - M[0][j] * M[1][i])
    return g


def is_coprime_symmetric(C: Sequence[Sequence[int]], D: Sequence[Sequence[int]]) -> bool:
    CDt = matmul(C, transpose(D))
    if CDt != transpose(CDt):
        return False
    rows = [list(C[i]) + list(D[i]) for i in range(len(C))]
    return minors_gcd_2xN(rows) == 1


def complete_pair(C: Sequence[Sequence[int]], D: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix]:
    """Integer (A, B) making (A B; C D) symplectic, for a coprime symmetric pair.

    Solve A tD - B tC = 1 through the HNF of N = (tD; -tC), then fix the
    symmetry of A tB with A -> A + K C, B -> B + K D.
    """
    C, D = _copy(C), _copy(D)
    n = len(C)
    if not is_coprime_symmetric(C, D):
        raise ValueError("(C, D) is not a coprime symmetric pair")
    N = transpose(D) + [[-x for x in r] for r in transpose(C)]
    H, V = hnf_rows(N)
    top = [r[:] for r in H[:n]]
    if abs(det_int(top)) != 1:
        raise ValueError("pair is not primitive")
    # top is upper triangular unimodular; invert exactly
    Hi = _inv_unimodular(top)
    X = matmul(Hi, [r[:] for r in V[:n]])
    A0 = [r[:n] for r in X]
    B0 = [r[n:] for r in X]
    E = matmul(A0, transpose(B0))
    K = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            K[i][j] = E[i][j] - E[j][i]
    A = [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A0, matmul(K, C))]
    B = [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(B0, matmul(K, D))]
    return A, B


def _inv_unimodular(M: Matrix) -> Matrix:
    n = len(M)
    d = det_int(M)
    if n == 1:
        return [[d]]
    if n == 2:
        return [[M[1][1] * d, -M[0][1] * d], [-M[1][0] * d, M[0][0] * d]]
    raise ValueError("only n <= 2")


def is_symplectic(M: Sequence[Sequence[int]], mu: int = 1) -> bool:
    n = len(M) // 2
    J = [[0] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        J[i][n + i] = 1
        J[n + i][i] = -1
    lhs = matmul(matmul(transpose(M), J), M)
    return lhs == [[mu * x for x in r] for r in J]


def blocks_to_matrix(A, B, C, D) -> Matrix:
    return [list(a) + list(b) for a, b in zip(A, B)] + [list(c) + list(d) for c, d in zip(C, D)]
