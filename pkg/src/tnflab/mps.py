"""Matrix product state utilities shared by the lattice and circuit solvers.

An MPS is a list of rank-3 arrays ``(left, phys, right)`` with extent-1 outer
bonds. An MPO site is rank-4 ``(left, out, in, right)``; applying an MPO to an
MPS contracts ``in`` with the state's physical leg.

Compression follows one fixed recipe everywhere: a left-to-right QR
canonicalization followed by a right-to-left truncation sweep using the
gauge-fixed :func:`tnflab.tensor.svd_split`. The sweep is a deterministic
function of the input chain, which is what fixed-schedule contractions need.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import DimensionError
from .tensor import renormalize, svd_split

__all__ = [
    "product_mps",
    "mps_dims",
    "apply_mpo",
    "compress",
    "contract_mps_chain",
    "overlap_with_product",
    "mps_amplitude",
    "mps_to_dense",
    "mpo_to_dense",
    "schmidt_values",
]


def product_mps(vectors: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Bond-1 MPS from one local vector per site."""
    return [np.asarray(v, dtype=complex).reshape(1, -1, 1) for v in vectors]


def mps_dims(sites: Sequence[np.ndarray]) -> list[int]:
    """Internal bond extents (length ``len(sites) - 1``)."""
    return [s.shape[2] for s in sites[:-1]]


def apply_mpo(sites: Sequence[np.ndarray], mpo: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Exact MPO application; bond extents multiply."""
    if len(sites) != len(mpo):
        raise DimensionError(f"length mismatch: mps {len(sites)} vs mpo {len(mpo)}")
    out = []
    for m, w in zip(sites, mpo):
        if w.shape[2] != m.shape[1]:
            raise DimensionError(
                f"mpo input extent {w.shape[2]} does not match mps physical extent {m.shape[1]}"
            )
        # (l, p, r) x (wl, out, in=p, wr) -> (l, r, wl, out, wr)
        c = np.tensordot(m, w, axes=([1], [2]))
        c = c.transpose(0, 2, 3, 1, 4)  # (l, wl, out, r, wr)
        l, wl, p, r, wr = c.shape
        out.append(np.ascontiguousarray(c.reshape(l * wl, p, r * wr)))
    return out


def compress(
    sites: Sequence[np.ndarray], chi: int | None, stats: dict | None = None
) -> tuple[list[np.ndarray], float]:
    """Compress internal bonds to at most ``chi`` and rescale sites.

    Returns the new chain and the accumulated log of the factors taken out
    while rescaling each site to unit max-abs entry. ``chi=None`` still
    canonicalizes (trimming exact-rank excess) but never truncates below the
    numerical rank. A chain with an exactly-zero site represents the value 0;
    it is returned unswept with log factor 0.
    """
    sites = [np.asarray(s, dtype=complex) for s in sites]
    n = len(sites)
    log_factor = 0.0
    if n == 1:
        t, lf, zero = renormalize(sites[0])
        return [t], (0.0 if zero else lf)

    # Left-to-right QR canonicalization.
    for i in range(n - 1):
        l, p, r = sites[i].shape
        q, rmat = np.linalg.qr(sites[i].reshape(l * p, r))
        k = q.shape[1]
        sites[i] = q.reshape(l, p, k)
        sites[i + 1] = np.tensordot(rmat, sites[i + 1], axes=([1], [0]))

    # Right-to-left truncation sweep.
    for i in range(n - 1, 0, -1):
        t, lf, zero = renormalize(sites[i])
        if zero:
            return sites, 0.0
        log_factor += lf
        sites[i] = t
        l, p, r = sites[i].shape
        cap = chi if chi is not None else l * p
        split = svd_split(sites[i], [0], min(cap, min(l, p * r)))
        if stats is not None:
            stats["max_discarded"] = max(stats.get("max_discarded", 0.0), split.discarded_weight)
        k = split.singulars.size
        sites[i] = split.right.reshape(k, p, r)
        carry = split.isometry * split.singulars  # (l, k)
        sites[i - 1] = np.tensordot(sites[i - 1], carry, axes=([2], [0]))

    t, lf, zero = renormalize(sites[0])
    if not zero:
        sites[0] = t
        log_factor += lf
    return sites, log_factor


def contract_mps_chain(sites: Sequence[np.ndarray]) -> complex:
    """Collapse a chain whose physical extents are all 1 to a scalar."""
    vec = sites[0].reshape(sites[0].shape[0], -1)
    for s in sites[1:]:
        vec = vec @ s.reshape(s.shape[0], -1)
    return complex(vec.reshape(-1)[0])


def overlap_with_product(
    sites: Sequence[np.ndarray], vectors: Sequence[np.ndarray]
) -> complex:
    """<v| mps> for a product state given as per-site vectors (conjugated here)."""
    mat = None
    for s, v in zip(sites, vectors):
        m = np.tensordot(np.conj(v), s, axes=([0], [1]))  # (l, r)
        mat = m if mat is None else mat @ m
    return complex(mat[0, 0])


def mps_amplitude(sites: Sequence[np.ndarray], config: Sequence[int]) -> complex:
    """<config| mps> for a computational-basis configuration."""
    mat = None
    for s, c in zip(sites, config):
        m = s[:, int(c), :]
        mat = m if mat is None else mat @ m
    return complex(mat[0, 0])


def mps_to_dense(sites: Sequence[np.ndarray]) -> np.ndarray:
    """Dense state vector with site 0 the most significant index."""
    out = sites[0]
    for s in sites[1:]:
        out = np.tensordot(out, s, axes=([out.ndim - 1], [0]))
    return out.reshape(-1)


def mpo_to_dense(mpo: Sequence[np.ndarray]) -> np.ndarray:
    """Dense operator matrix (out x in), site 0 most significant."""
    out = mpo[0]
    for w in mpo[1:]:
        out = np.tensordot(out, w, axes=([out.ndim - 1], [0]))
    # axes: (l, o1, i1, o2, i2, ..., r)
    n = (out.ndim - 2) // 2
    perm = [0] + [1 + 2 * k for k in range(n)] + [2 + 2 * k for k in range(n)] + [out.ndim - 1]
    out = out.transpose(perm)
    d_out = int(np.prod(out.shape[1 : 1 + n]))
    d_in = int(np.prod(out.shape[1 + n : 1 + 2 * n]))
    return out.reshape(d_out, d_in)


def schmidt_values(sites: Sequence[np.ndarray], cut: int) -> np.ndarray:
    """Schmidt values across the bond between sites ``cut-1`` and ``cut``.

    The chain is canonicalized from both ends toward the cut, so the result
    is the exact spectrum of the state the chain represents (not of any
    particular gauge).
    """
    sites = [np.asarray(s, dtype=complex) for s in sites]
    n = len(sites)
    if not 0 < cut < n:
        raise ValueError(f"cut must be internal, got {cut} for {n} sites")
    for i in range(cut):
        l, p, r = sites[i].shape
        q, rmat = np.linalg.qr(sites[i].reshape(l * p, r))
        sites[i] = q.reshape(l, p, q.shape[1])
        if i + 1 < n:
            sites[i + 1] = np.tensordot(rmat, sites[i + 1], axes=([1], [0]))
    carry = None
    for i in range(n - 1, cut - 1, -1):
        t = sites[i] if carry is None else np.tensordot(sites[i], carry, axes=([2], [0]))
        l, p, r = t.shape
        _, rmat = np.linalg.qr(t.transpose(0, 2, 1).reshape(l, p * r).T)
        carry = rmat.T  # (l, k)
    s = np.linalg.svd(carry, compute_uv=False)
    norm = math.sqrt(float(np.sum(s**2)))
    return s / norm if norm > 0 else s
