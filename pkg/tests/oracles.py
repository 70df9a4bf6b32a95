"""Independent oracles used to freeze expected values in the tests.

Everything here is implemented from first principles (matrix arithmetic,
brute-force search) without calling the package internals, so agreement is
meaningful.
"""

from __future__ import annotations

from fractions import Fraction


# -- unitriangular matrix model of the discrete Heisenberg group -------------
#
# (a, b, c)  <->  [[1, a, c], [0, 1, b], [0, 0, 1]]


def heis_to_matrix(x):
    a, b, c = x
    return ((1, a, c), (0, 1, b), (0, 0, 1))


def heis_from_matrix(M):
    return (M[0][1], M[1][2], M[0][2])


def mat_mul(A, B):
    n = len(A)
    return tuple(
        tuple(sum(A[i][k] * B[k][j] for k in range(n)) for j in range(n))
        for i in range(n)
    )


def heis_multiply(x, y):
    return heis_from_matrix(mat_mul(heis_to_matrix(x), heis_to_matrix(y)))


def heis_inverse(x):
    a, b, c = x
    return (-a, -b, a * b - c)


def heis_log(x):
    """Lie-algebra coordinates of the matrix logarithm: log(I+A) = A - A^2/2
    for strictly-upper-triangular A."""
    a, b, c = (Fraction(t) for t in x)
    return (a, b, c - a * b / 2)


# -- brute-force graph search ------------------------------------------------


def bfs_ball_counts_from(identity, gens, mul, r):
    """Ball sizes by plain BFS from the identity with a caller-supplied
    product; gens must be symmetric."""
    dist = {identity: 0}
    frontier = [identity]
    counts = [1]
    for level in range(1, r + 1):
        nxt = []
        for x in frontier:
            for g in gens:
                z = mul(x, g)
                if z not in dist:
                    dist[z] = level
                    nxt.append(z)
        counts.append(len(dist))
        frontier = nxt
    return counts, dist


def dfs_components(n, edges):
    """Component labels by explicit depth-first search (no union-find)."""
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    labels = [-1] * n
    lab = 0
    for s in range(n):
        if labels[s] != -1:
            continue
        stack = [s]
        labels[s] = lab
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if labels[y] == -1:
                    labels[y] = lab
                    stack.append(y)
        lab += 1
    return labels


def component_sizes(n, edges):
    labels = dfs_components(n, edges)
    sizes = {}
    for lab in labels:
        sizes[lab] = sizes.get(lab, 0) + 1
    return sorted(sizes.values(), reverse=True)


# -- closed-form lattice counts ----------------------------------------------


def aniso_box_count(weights, r):
    """#(delta_{1/r}(Z^d) cap [0,1]^d) with weights s: prod (floor(r^s)+1)."""
    out = 1
    for s in weights:
        out *= int(r**s) + 1
    return out


def z2_beta(r):
    """Ball size of Z^2 with standard generators: 2r^2 + 2r + 1."""
    return 2 * r * r + 2 * r + 1


def z1_beta(r):
    return 2 * r + 1
