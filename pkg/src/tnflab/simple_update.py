"""Simple-update imaginary time evolution for PEPS.

Bond gates ``exp(-tau c S_i.S_j)`` are applied bond by bond with the usual
per-bond singular-value environment weights, truncating each bond back to the
state's bond dimension. This yields states close to the ground state, good
starting points for gradient optimization; the bond weights are a mean-field
environment, not variationally optimal.

Gate order within one step: all horizontal bonds row-major, then all
vertical bonds. Only couplings on lattice edges are supported.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .models import Model, spin_coupling_matrix
from .peps import Peps
from .tensor import svd_split

__all__ = ["simple_update"]

# Entry magnitude that triggers a site rescale; ratios are scale invariant,
# so dropping a global factor only matters if a caller compares raw
# amplitudes across runs with different step counts.
_RESCALE_THRESHOLD = 1e50
_WEIGHT_CUTOFF = 1e-14


def _edge_kind(model: Model, i: int, j: int) -> tuple[str, int, int]:
    """Classify coupling (i, j) as a horizontal or vertical lattice edge."""
    cols, rows = model.cols, model.rows
    ri, ci = divmod(i, cols)
    rj, cj = divmod(j, cols)
    if ri == rj and (cj == ci + 1 or (model.boundary == "pbc" and ci == cols - 1 and cj == 0)):
        return "h", ri, ci
    if ci == cj and (rj == ri + 1 or (model.boundary == "pbc" and ri == rows - 1 and rj == 0)):
        return "v", ri, ci
    raise ValueError(f"coupling ({i},{j}) is not a lattice edge; simple update needs NN bonds")


def _inv_weights(w: np.ndarray) -> np.ndarray:
    cut = _WEIGHT_CUTOFF * float(np.max(w)) if w.size else 0.0
    return np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)


def simple_update(peps: Peps, model: Model, tau: float, steps: int) -> Peps:
    """Evolve by ``steps`` applications of the bond-gate sweep; returns a new
    state truncated to the input bond dimension."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if (model.rows, model.cols) != (peps.rows, peps.cols):
        raise ValueError("model lattice does not match the state")
    rows, cols = peps.rows, peps.cols
    d = peps.phys_dim
    dmax = peps.bond_dim
    sites = [[t.astype(complex).copy() for t in row] for row in peps.sites]

    # Bond weight vectors, sized from the actual bond extents.
    lam_h = {}
    lam_v = {}
    bonds = []  # (kind, r, c, coupling) in sweep order
    edges = {}
    for i, j, c in model.couplings:
        kind, r, cc = _edge_kind(model, i, j)
        edges[(kind, r, cc)] = c
    for r in range(rows):
        for c in range(cols):
            if ("h", r, c) in edges:
                bonds.append(("h", r, c, edges[("h", r, c)]))
                lam_h[(r, c)] = np.ones(sites[r][c].shape[3])
    for r in range(rows):
        for c in range(cols):
            if ("v", r, c) in edges:
                bonds.append(("v", r, c, edges[("v", r, c)]))
                lam_v[(r, c)] = np.ones(sites[r][c].shape[2])

    ss = spin_coupling_matrix()

    def weight(kind, r, c, extent):
        table = lam_h if kind == "h" else lam_v
        return table.get((r, c), np.ones(extent))

    def gate(coupling):
        g = scipy.linalg.expm(-tau * coupling * ss)
        return g.reshape(d, d, d, d)  # (pi', pj', pi, pj)

    gates = {}

    def apply_h(r, c, coupling):
        c2 = (c + 1) % cols
        a = sites[r][c]
        b = sites[r][c2]
        wu_a = weight("v", (r - 1) % rows, c, a.shape[0]) if _has_v(r - 1, c) else np.ones(a.shape[0])
        wl_a = weight("h", r, (c - 1) % cols, a.shape[1]) if _has_h(r, c - 1) else np.ones(a.shape[1])
        wd_a = weight("v", r, c, a.shape[2]) if _has_v(r, c) else np.ones(a.shape[2])
        wu_b = weight("v", (r - 1) % rows, c2, b.shape[0]) if _has_v(r - 1, c2) else np.ones(b.shape[0])
        wd_b = weight("v", r, c2, b.shape[2]) if _has_v(r, c2) else np.ones(b.shape[2])
        wr_b = weight("h", r, c2, b.shape[3]) if _has_h(r, c2) else np.ones(b.shape[3])
        lam = lam_h[(r, c)]

        aw = a * wu_a[:, None, None, None, None] * wl_a[None, :, None, None, None]
        aw = aw * wd_a[None, None, :, None, None] * lam[None, None, None, :, None]
        bw = b * wu_b[:, None, None, None, None] * wd_b[None, None, :, None, None]
        bw = bw * wr_b[None, None, None, :, None]

        theta = np.tensordot(aw, bw, axes=([3], [1]))  # (u,l,d,p1, u2,d2,r2,p2)
        theta = np.tensordot(theta, gates[coupling], axes=([3, 7], [2, 3]))
        # -> (u,l,d,u2,d2,r2, p1', p2')
        theta = theta.transpose(0, 1, 2, 6, 3, 4, 5, 7)
        split = svd_split(theta, [0, 1, 2, 3], dmax)
        k = split.singulars.size
        lam_h[(r, c)] = split.singulars

        iu, il, idn = _inv_weights(wu_a), _inv_weights(wl_a), _inv_weights(wd_a)
        anew = split.isometry.transpose(0, 1, 2, 4, 3)  # (u,l,d,k,p)
        anew = anew * iu[:, None, None, None, None] * il[None, :, None, None, None]
        anew = anew * idn[None, None, :, None, None]
        sites[r][c] = np.ascontiguousarray(anew)

        iu2, id2, ir2 = _inv_weights(wu_b), _inv_weights(wd_b), _inv_weights(wr_b)
        bnew = split.right.transpose(1, 0, 2, 3, 4)  # (u2,k,d2,r2,p)
        bnew = bnew * iu2[:, None, None, None, None] * id2[None, None, :, None, None]
        bnew = bnew * ir2[None, None, None, :, None]
        sites[r][c2] = np.ascontiguousarray(bnew)

    def apply_v(r, c, coupling):
        r2 = (r + 1) % rows
        a = sites[r][c]
        b = sites[r2][c]
        wu_a = weight("v", (r - 1) % rows, c, a.shape[0]) if _has_v(r - 1, c) else np.ones(a.shape[0])
        wl_a = weight("h", r, (c - 1) % cols, a.shape[1]) if _has_h(r, c - 1) else np.ones(a.shape[1])
        wr_a = weight("h", r, c, a.shape[3]) if _has_h(r, c) else np.ones(a.shape[3])
        wl_b = weight("h", r2, (c - 1) % cols, b.shape[1]) if _has_h(r2, c - 1) else np.ones(b.shape[1])
        wd_b = weight("v", r2, c, b.shape[2]) if _has_v(r2, c) else np.ones(b.shape[2])
        wr_b = weight("h", r2, c, b.shape[3]) if _has_h(r2, c) else np.ones(b.shape[3])
        lam = lam_v[(r, c)]

        aw = a * wu_a[:, None, None, None, None] * wl_a[None, :, None, None, None]
        aw = aw * lam[None, None, :, None, None] * wr_a[None, None, None, :, None]
        bw = b * wl_b[None, :, None, None, None] * wd_b[None, None, :, None, None]
        bw = bw * wr_b[None, None, None, :, None]

        theta = np.tensordot(aw, bw, axes=([2], [0]))  # (u,l,r,p1, l2,d2,r2,p2)
        theta = np.tensordot(theta, gates[coupling], axes=([3, 7], [2, 3]))
        # -> (u,l,r,l2,d2,r2, p1', p2')
        theta = theta.transpose(0, 1, 2, 6, 3, 4, 5, 7)
        split = svd_split(theta, [0, 1, 2, 3], dmax)
        lam_v[(r, c)] = split.singulars

        iu, il, ir = _inv_weights(wu_a), _inv_weights(wl_a), _inv_weights(wr_a)
        anew = split.isometry.transpose(0, 1, 4, 2, 3)  # (u,l,k,r,p)
        anew = anew * iu[:, None, None, None, None] * il[None, :, None, None, None]
        anew = anew * ir[None, None, None, :, None]
        sites[r][c] = np.ascontiguousarray(anew)

        il2, id2, ir2 = _inv_weights(wl_b), _inv_weights(wd_b), _inv_weights(wr_b)
        bnew = split.right  # (k, l2, d2, r2, p)
        bnew = bnew * il2[None, :, None, None, None] * id2[None, None, :, None, None]
        bnew = bnew * ir2[None, None, None, :, None]
        sites[r2][c] = np.ascontiguousarray(bnew)

    def _has_h(r, c):
        return ("h", r % rows, c % cols) in lam_h

    def _has_v(r, c):
        return ("v", r % rows, c % cols) in lam_v

    for _kind, _r, _c, coupling in bonds:
        if coupling not in gates:
            gates[coupling] = gate(coupling)

    for _ in range(steps):
        for kind, r, c, coupling in bonds:
            if kind == "h":
                apply_h(r, c, coupling)
            else:
                apply_v(r, c, coupling)
        for r in range(rows):
            for c in range(cols):
                m = float(np.max(np.abs(sites[r][c])))
                if m > _RESCALE_THRESHOLD:
                    sites[r][c] = sites[r][c] / m

    # Fold the bond weights back into the sites, square roots to each side.
    for (r, c), lam in lam_h.items():
        s = np.sqrt(lam)
        sites[r][c] = sites[r][c] * s[None, None, None, :, None]
        sites[r][(c + 1) % cols] = sites[r][(c + 1) % cols] * s[None, :, None, None, None]
    for (r, c), lam in lam_v.items():
        s = np.sqrt(lam)
        sites[r][c] = sites[r][c] * s[None, None, :, None, None]
        sites[(r + 1) % rows][c] = sites[(r + 1) % rows][c] * s[:, None, None, None, None]

    new_bond = max(
        max((t.shape[0] for row in sites for t in row), default=1),
        max((t.shape[3] for row in sites for t in row), default=1),
    )
    return Peps(rows, cols, d, max(new_bond, 1), sites, peps.boundary)
