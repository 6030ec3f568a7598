"""Block-wise spectra of large structured self-adjoint matrices."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import NumericalGuardError

ASYMMETRY_TOL = 1e-12


def hermitian_part(A, tol: float = ASYMMETRY_TOL):
    """``(A + A^dag)/2``, refusing matrices whose asymmetry exceeds ``tol``."""
    diff = A - A.conj().T
    dev = abs(diff).max() if sp.issparse(diff) else (np.max(np.abs(diff)) if diff.size else 0.0)
    if dev > tol:
        raise NumericalGuardError(f"matrix asymmetry {dev:.3e} exceeds {tol:.1e}")
    return (A + A.conj().T) * 0.5


def block_eigvalsh(A, rel_threshold: float = 1e-15, tol: float = ASYMMETRY_TOL) -> np.ndarray:
    """Sorted eigenvalues of a self-adjoint matrix, one connected block at a time.

    Entries below ``rel_threshold`` times the largest magnitude are treated
    as structural zeros when finding the blocks.
    """
    A = hermitian_part(A, tol)
    S = sp.csr_matrix(A)
    n = S.shape[0]
    if S.nnz == 0:
        return np.zeros(n)
    cut = rel_threshold * abs(S).max()
    pattern = abs(S) > cut
    ncomp, labels = connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(ncomp + 1))
    vals = []
    for c in range(ncomp):
        idx = order[bounds[c] : bounds[c + 1]]
        block = S[idx][:, idx].toarray()
        vals.append(np.linalg.eigvalsh(block))
    return np.sort(np.concatenate(vals))
