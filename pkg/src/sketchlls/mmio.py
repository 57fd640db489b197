"""Matrix Market reading and writing.

Coordinate files load as CSR, array files as dense arrays. Only real,
integer and pattern fields with general or symmetric storage are accepted.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class MatrixMarketError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class MtxHeader:
    object: str
    format: str
    field: str
    symmetry: str


def _parse_header(line: str, lineno: int) -> MtxHeader:
    parts = line.split()
    if len(parts) != 5 or parts[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("malformed MatrixMarket banner", lineno)
    obj, fmt, field, sym = (p.lower() for p in parts[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}", lineno)
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unsupported format {fmt!r}", lineno)
    if field not in ("real", "integer", "pattern"):
        raise MatrixMarketError(f"unsupported field {field!r}", lineno)
    if sym not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {sym!r}", lineno)
    if fmt == "array" and field == "pattern":
        raise MatrixMarketError("pattern field requires coordinate format", lineno)
    return MtxHeader(obj, fmt, field, sym)


def _numbers(tokens, lineno: int, kinds) -> list:
    try:
        return [kind(tok) for kind, tok in zip(kinds, tokens)]
    except ValueError:
        raise MatrixMarketError(f"non-numeric entry {' '.join(tokens)!r}", lineno) from None


def read_header(path) -> MtxHeader:
    with open(path) as fh:
        return _parse_header(fh.readline(), 1)


def read_matrix_market(path, transpose_underdetermined: bool = True):
    """Load a Matrix Market file.

    Duplicate coordinate entries are summed and symmetric storage is expanded.
    A matrix with fewer rows than columns is transposed so the result is
    always overdetermined, unless ``transpose_underdetermined`` is false.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    header = _parse_header(lines[0], 1)
    body = ((i + 1, ln) for i, ln in enumerate(lines) if i > 0)
    body = ((i, ln) for i, ln in body if ln.strip() and not ln.lstrip().startswith("%"))

    try:
        size_no, size_line = next(body)
    except StopIteration:
        raise MatrixMarketError("missing size line", len(lines)) from None
    size_tokens = size_line.split()
    expected = 3 if header.format == "coordinate" else 2
    if len(size_tokens) != expected:
        raise MatrixMarketError("malformed size line", size_no)
    dims = _numbers(size_tokens, size_no, [int] * expected)
    n, d = dims[0], dims[1]
    if n < 1 or d < 1:
        raise MatrixMarketError("matrix dimensions must be positive", size_no)

    if header.format == "coordinate":
        A = _read_coordinate(header, body, n, d, dims[2])
    else:
        A = _read_array(header, body, n, d)
    if transpose_underdetermined and A.shape[0] < A.shape[1]:
        A = A.T.tocsr() if sp.issparse(A) else np.ascontiguousarray(A.T)
    return A


def _read_coordinate(header: MtxHeader, body, n: int, d: int, count: int) -> sp.csr_array:
    pattern = header.field == "pattern"
    width = 2 if pattern else 3
    rows, cols, vals = [], [], []
    last = 1
    nread = 0
    for lineno, line in body:
        last = lineno
        nread += 1
        tokens = line.split()
        if len(tokens) != width:
            raise MatrixMarketError(f"expected {width} fields, got {len(tokens)}", lineno)
        kinds = [int, int] if pattern else [int, int, float]
        parsed = _numbers(tokens, lineno, kinds)
        i, j = parsed[0], parsed[1]
        if not (1 <= i <= n and 1 <= j <= d):
            raise MatrixMarketError(f"index ({i}, {j}) outside {n} x {d}", lineno)
        v = 1.0 if pattern else parsed[2]
        if not np.isfinite(v):
            raise MatrixMarketError("non-finite entry", lineno)
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        if header.symmetry == "symmetric" and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(v)
    if nread != count:
        raise MatrixMarketError(f"expected {count} entries, found {nread}", last)
    if header.symmetry == "symmetric" and n != d:
        raise MatrixMarketError("symmetric matrix must be square")
    A = sp.coo_array((vals, (rows, cols)), shape=(n, d)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def _read_array(header: MtxHeader, body, n: int, d: int) -> np.ndarray:
    symmetric = header.symmetry == "symmetric"
    if symmetric and n != d:
        raise MatrixMarketError("symmetric matrix must be square")
    # column-major; symmetric storage lists the lower triangle only
    slots = [(i, j) for j in range(d) for i in range(n) if not symmetric or i >= j]
    A = np.zeros((n, d))
    k = 0
    for lineno, line in body:
        tokens = line.split()
        if len(tokens) != 1:
            raise MatrixMarketError(f"expected 1 field, got {len(tokens)}", lineno)
        if k >= len(slots):
            raise MatrixMarketError("too many entries", lineno)
        (v,) = _numbers(tokens, lineno, [float])
        if not np.isfinite(v):
            raise MatrixMarketError("non-finite entry", lineno)
        i, j = slots[k]
        A[i, j] = v
        if symmetric:
            A[j, i] = v
        k += 1
    if k != len(slots):
        raise MatrixMarketError(f"expected {len(slots)} entries, found {k}")
    return A


def write_matrix_market(path, A, comment: str | None = None) -> None:
    """Write ``A`` in general storage with 17 significant digits."""
    path = Path(path)
    n, d = A.shape
    with path.open("w") as fh:
        if sp.issparse(A):
            C = sp.coo_array(A)
            C.sum_duplicates()
            fh.write("%%MatrixMarket matrix coordinate real general\n")
            if comment:
                fh.write(f"% {comment}\n")
            fh.write(f"{n} {d} {C.nnz}\n")
            order = np.lexsort((C.row, C.col))
            for i, j, v in zip(C.row[order], C.col[order], C.data[order]):
                fh.write(f"{i + 1} {j + 1} {v:.17g}\n")
        else:
            A = np.asarray(A, dtype=np.float64)
            fh.write("%%MatrixMarket matrix array real general\n")
            if comment:
                fh.write(f"% {comment}\n")
            fh.write(f"{n} {d}\n")
            for v in A.ravel(order="F"):
                fh.write(f"{v:.17g}\n")
