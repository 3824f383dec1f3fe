"""Shared helpers for the test suite: small builders and a random
generator of valid twisted complexes.

The generator works column by column up the total degree: each new
generator's total boundary is sampled from the kernel of the previous
total differential intersected with the pieces its structure maps are
allowed to hit (index at most its own). The result satisfies D.D = 0
by construction, for any coefficient ring.
"""

from __future__ import annotations

import random

import numpy as np

from mbflow import _fplinalg
from mbflow.homalg import (
    CoefficientRing,
    GradedChainComplex,
    IntegerMatrix,
    complex_from_ranks,
    smith_normal_form,
)
from mbflow.twisted import TwistedComplex, twisted_from_parts


def mat(rows, cols=None):
    return IntegerMatrix.from_rows(rows, cols)


def point_complex(ring) -> GradedChainComplex:
    return complex_from_ranks(ring, {0: 1})


def circle_complex(ring) -> GradedChainComplex:
    return complex_from_ranks(ring, {0: 1, 1: 1})


def _integer_kernel_basis(m: IntegerMatrix) -> list[list[int]]:
    dec = smith_normal_form(m, with_transforms=True)
    cols = []
    v = dec.v.to_rows()
    for j in range(dec.rank, m.cols):
        cols.append([v[i][j] for i in range(m.cols)])
    return cols


def random_twisted(rng: random.Random, ring: CoefficientRing,
                   max_generators: int = 12,
                   max_pieces: int = 4) -> TwistedComplex:
    """A random valid twisted complex with at most max_generators cells.

    Generators are scattered over piece indices 0..max_pieces-1 and
    small internal degrees; boundaries are sampled inside the kernel of
    the differential built so far, restricted to the pieces a structure
    map may reach.
    """
    n_gens = rng.randint(1, max_generators)
    gens = []  # (piece, internal degree)
    for _ in range(n_gens):
        piece = rng.randrange(max_pieces)
        internal = rng.randrange(3)
        gens.append((piece, internal))

    # group by total degree; process ascending so boundaries are known
    by_total: dict[int, list[tuple[int, int]]] = {}
    for piece, internal in gens:
        by_total.setdefault(piece + internal, []).append((piece, internal))
    for lst in by_total.values():
        lst.sort()

    # per total degree: ordered basis (piece asc, position within piece)
    basis: dict[int, list[tuple[int, int]]] = {
        n: list(lst) for n, lst in by_total.items()}
    columns: dict[int, list[list[int]]] = {}  # total degree -> D_n columns

    def kernel_columns(n: int, piece_bound: int) -> list[list[int]]:
        """Kernel of D_{n} restricted to columns of pieces <= bound."""
        rows_basis = basis.get(n - 1, [])
        cols_basis = [g for g in basis.get(n, []) if g[0] <= piece_bound]
        if not cols_basis:
            return []
        dn = columns.get(n, [])
        sub = []
        for j, g in enumerate(basis.get(n, [])):
            if g[0] <= piece_bound:
                sub.append(dn[j] if j < len(dn) else [0] * len(rows_basis))
        a = [[sub[j][i] for j in range(len(sub))]
             for i in range(len(rows_basis))]
        if not rows_basis:
            return [[1 if i == j else 0 for i in range(len(cols_basis))]
                    for j in range(len(cols_basis))]
        if ring.is_field:
            arr = np.array(a, dtype=np.int64).reshape(len(rows_basis),
                                                      len(cols_basis))
            null = _fplinalg.null_space(arr, ring.p)
            return [null[:, j].tolist() for j in range(null.shape[1])]
        return _integer_kernel_basis(mat(a, len(cols_basis)))

    for n in sorted(basis):
        cols_here: list[list[int]] = []
        below = basis.get(n - 1, [])
        for piece, _ in basis[n]:
            if not below:
                cols_here.append([])
                continue
            kern = kernel_columns(n - 1, piece)
            target = [0] * len(below)
            for kcol in kern:
                if rng.random() < 0.5:
                    continue
                coeff = 1 if ring.is_field else rng.choice((-1, 1))
                # kernel vectors live on the prefix of pieces <= piece
                idx = 0
                for i, g in enumerate(below):
                    if g[0] <= piece:
                        target[i] += coeff * kcol[idx]
                        idx += 1
            cols_here.append(target)
        columns[n] = cols_here

    # split the assembled total differential into pieces and deltas
    ranks: dict[int, dict[int, int]] = {}
    for piece, internal in gens:
        ranks.setdefault(piece, {})
        ranks[piece][internal] = ranks[piece].get(internal, 0) + 1
    pieces = {i: complex_from_ranks(ring, r) for i, r in ranks.items()}

    position: dict[int, dict[tuple[int, int], list[int]]] = {}
    for n, lst in basis.items():
        position[n] = {}
        for idx, g in enumerate(lst):
            position[n].setdefault(g, []).append(idx)

    diff_blocks: dict[int, dict[int, dict[tuple[int, int], int]]] = {}
    delta_blocks: dict[tuple[int, int], dict[int, dict[tuple[int, int], int]]]
    delta_blocks = {}
    for n, cols_here in columns.items():
        below = basis.get(n - 1, [])
        for col_idx, (pi, mi) in enumerate(basis[n]):
            col = cols_here[col_idx]
            col_pos = position[n][(pi, mi)].index(col_idx)
            for row_idx, val in enumerate(col):
                if not val:
                    continue
                pj, mj = below[row_idx]
                row_pos = position[n - 1][(pj, mj)].index(row_idx)
                if pj == pi:
                    blk = diff_blocks.setdefault(pi, {}).setdefault(mi, {})
                    blk[(row_pos, col_pos)] = val
                else:
                    fam = delta_blocks.setdefault((pi, pj), {}).setdefault(
                        mi, {})
                    fam[(row_pos, col_pos)] = val

    full_pieces = {}
    for i, c in pieces.items():
        diffs = {}
        for m, entries in diff_blocks.get(i, {}).items():
            diffs[m] = IntegerMatrix(c.dim(m - 1), c.dim(m), entries)
        full_pieces[i] = complex_from_ranks(ring, dict(c.rank), diffs)

    structure = {}
    for (i, j), fams in delta_blocks.items():
        out = {}
        for m, entries in fams.items():
            out[m] = IntegerMatrix(full_pieces[j].dim(m + i - j - 1),
                                   full_pieces[i].dim(m), entries)
        structure[(i, j)] = out

    return twisted_from_parts(ring, full_pieces, structure)
