"""Kicked-Ising Floquet dynamics as a (1+1)D tensor network.

One period applies the Ising phase layer (bond ZZ rotations and the
longitudinal field, all diagonal) followed by the transverse kick. The
period operator is held as an exact MPO (bond dimension at most 4, in
practice 2) built by SVD-splitting the two-qubit gates with the singular
values shared as square roots between the sites.

Amplitudes ``<n| F^t |0...0>`` come from four contraction routes:

* :func:`exact_evolve` - dense state vector, the benchmark (L <= 14).
* :func:`evolve_conventional` - MPS compressed to ``chi`` after every
  period (contraction along the time direction).
* :func:`tnf_amplitude_transverse` - fixed column-by-column contraction
  along the spatial direction; the boundary runs along the time axis and is
  compressed to ``chi`` after each column.
* :func:`tnf_amplitude_inverse_time` - the bra ``<n|`` absorbs period
  layers from the final step backward, compressed to ``chi`` per layer.
* :func:`mpo_mpo_inverse` - compresses ``F^t`` itself as an MPO
  (amplitude-independent isometries), then sandwiches ``<n| M |0>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimitError
from .mps import apply_mpo, compress, contract_mps_chain, mps_amplitude, product_mps
from .peps import BoundaryMps, _init_boundary, boundary_absorb
from .tensor import AmplitudeValue, svd_split

__all__ = [
    "FloquetParams",
    "PRESETS",
    "build_floquet_mpo",
    "exact_evolve",
    "evolve_conventional",
    "tnf_amplitude_transverse",
    "tnf_amplitude_inverse_time",
    "mpo_mpo_inverse",
    "mpo_amplitude",
    "config_index",
]

_MAX_DENSE_SITES = 14


@dataclass(frozen=True)
class FloquetParams:
    """Chain length, couplings (Ising J, kick g, longitudinal h), and the
    number of periods a dynamics run covers."""

    n_sites: int
    j: float
    g: float
    h: float
    t_max: int = 0

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("need at least two sites")
        if self.t_max < 0:
            raise ValueError("t_max must be nonnegative")


PRESETS = {
    "maximally_chaotic": {"j": math.pi / 4, "g": math.pi / 4, "h": 0.5},
    "less_chaotic": {"j": 0.7, "g": 0.5, "h": 0.5},
}


def _single_site_rotation(params: FloquetParams) -> np.ndarray:
    """exp(i g X) exp(i h Z): the kick after the longitudinal phase."""
    rz = np.diag([np.exp(1j * params.h), np.exp(-1j * params.h)])
    rx = math.cos(params.g) * np.eye(2) + 1j * math.sin(params.g) * np.array([[0, 1], [1, 0]])
    return rx @ rz


def _zz_gate(j: float) -> np.ndarray:
    """exp(i J Z.Z) as (out1, in1, out2, in2)."""
    z = np.array([1.0, -1.0])
    phases = np.exp(1j * j * np.outer(z, z))  # (s1, s2)
    g = np.zeros((2, 2, 2, 2), dtype=complex)
    for s1 in range(2):
        for s2 in range(2):
            g[s1, s1, s2, s2] = phases[s1, s2]
    return g


def _split_zz(j: float) -> tuple[np.ndarray, np.ndarray]:
    """SVD split of the two-qubit gate, square roots of the singular values
    absorbed symmetrically. Left piece (out, in, k), right piece (k, out, in)."""
    split = svd_split(_zz_gate(j), [0, 1], 4)
    root = np.sqrt(split.singulars)
    left = split.isometry * root[None, None, :]
    right = root[:, None, None] * split.right
    return left, right


def build_floquet_mpo(params: FloquetParams) -> list[np.ndarray]:
    """Exact one-period MPO, site tensors ``(left, out, in, right)``.

    Bond gates live on even links (0-indexed) and odd links; every internal
    link is covered by exactly one gate, so the bond dimension equals the
    gate's operator rank (2 for generic J, 1 for J=0).
    """
    n = params.n_sites
    left_piece, right_piece = _split_zz(params.j)
    k = left_piece.shape[2]
    rot = _single_site_rotation(params)
    sites = []
    for c in range(n):
        has_left = c >= 1
        has_right = c + 1 <= n - 1
        if has_left and has_right:
            # (kl, o, m) x (m, i, kr) summed over the shared physical leg;
            # the left-link piece acts after the right-link piece (both are
            # diagonal, so the order is conventional).
            w = np.einsum("aom,mib->aoib", right_piece, left_piece)
        elif has_right:
            w = left_piece.transpose(0, 1, 2)[None, :, :, :]  # (1, o, i, kr)
        elif has_left:
            w = right_piece[:, :, :, None]  # (kl, o, i, 1)
        else:
            w = np.eye(2, dtype=complex)[None, :, :, None]
        w = np.einsum("om,amib->aoib", rot, w)
        sites.append(np.ascontiguousarray(w))
    return sites


def config_index(n) -> int:
    """Dense index of a configuration, site 0 most significant."""
    idx = 0
    for v in np.asarray(n, dtype=np.int64).reshape(-1):
        idx = (idx << 1) | int(v)
    return idx


def _check_dense(n_sites: int):
    if n_sites > _MAX_DENSE_SITES:
        raise ResourceLimitError(
            f"dense simulation guarded to {_MAX_DENSE_SITES} sites, got {n_sites}"
        )


def _diagonal_phases(params: FloquetParams) -> np.ndarray:
    """exp(i J sum z z') over all configurations, shaped (2,)*L.

    Only the bond part: the longitudinal field is carried by the per-site
    rotation, exactly as in the MPO construction.
    """
    n = params.n_sites
    z = np.array([1.0, -1.0])
    phase = np.zeros((2,) * n)
    for c in range(n - 1):
        shape = [1] * n
        shape[c] = 2
        shape[c + 1] = 2
        phase = phase + params.j * np.multiply.outer(z, z).reshape(shape)
    return np.exp(1j * phase)


def exact_evolve(params: FloquetParams, t: int) -> np.ndarray:
    """|psi(t)> = F^t |0...0> by dense gate application, normalized."""
    _check_dense(params.n_sites)
    n = params.n_sites
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    phases = _diagonal_phases(params)
    rot = _single_site_rotation(params)
    for _ in range(t):
        psi = psi * phases
        for c in range(n):
            psi = np.moveaxis(np.tensordot(rot, psi, axes=([1], [c])), 0, c)
    return psi.reshape(-1)


def evolve_conventional(
    params: FloquetParams, chi: int, t: int
) -> tuple[list[np.ndarray], float]:
    """MPS after t periods of MPO application with compression to ``chi``.

    Returns the chain and the accumulated log norm factor; amplitudes are
    ``mps_amplitude(sites, n) * exp(log)``.
    """
    n = params.n_sites
    e0 = np.array([1.0, 0.0], dtype=complex)
    sites = product_mps([e0] * n)
    log = 0.0
    mpo = build_floquet_mpo(params)
    for _ in range(t):
        sites = apply_mpo(sites, mpo)
        sites, lf = compress(sites, chi)
        log += lf
    return sites, log


def _as_bits(n, n_sites: int) -> np.ndarray:
    cfg = np.asarray(n, dtype=np.int64).reshape(-1)
    if cfg.size != n_sites:
        raise ValueError(f"configuration has {cfg.size} entries for {n_sites} sites")
    if np.any((cfg < 0) | (cfg > 1)):
        raise ValueError("configuration entries must be bits")
    return cfg


def _delta_amplitude(cfg: np.ndarray) -> AmplitudeValue:
    return AmplitudeValue.from_parts(1.0) if not np.any(cfg) else AmplitudeValue.zero()


def _column_tensors(
    mpo: list[np.ndarray], cfg: np.ndarray, c: int, t: int
) -> list[np.ndarray]:
    """Column ``c`` of the (1+1)D network as absorb-ready rank-4 tensors.

    The chain runs along the time axis, capped by |0> below and <n_c| above;
    tensor legs are (toward absorbed columns, earlier time, toward remaining
    columns, later time).
    """
    w = mpo[c]  # (l, o, i, r)
    e0 = np.array([1.0, 0.0], dtype=complex)
    cap = np.zeros(2, dtype=complex)
    cap[cfg[c]] = 1.0
    out = []
    for tau in range(t):
        x = w
        if tau == 0:
            x = np.tensordot(x, e0, axes=([2], [0]))  # (l, o, r)
            if t == 1:
                x = np.tensordot(x, cap, axes=([1], [0]))  # (l, r)
                out.append(x.reshape(x.shape[0], 1, x.shape[1], 1))
            else:
                out.append(x.transpose(0, 2, 1)[:, None, :, :])  # (l, 1, r, o)
        elif tau == t - 1:
            x = np.tensordot(x, cap, axes=([1], [0]))  # (l, i, r)
            out.append(x[:, :, :, None])  # (l, i, r, 1)
        else:
            out.append(np.ascontiguousarray(x.transpose(0, 2, 3, 1)))  # (l, i, r, o)
    return out


def tnf_amplitude_transverse(
    params: FloquetParams, n, chi: int, t: int
) -> AmplitudeValue:
    """<n| F^t |0...0> by column-by-column contraction along space.

    A deterministic fixed schedule: the time-axis boundary is compressed to
    ``chi`` after each column, the final column is absorbed exactly and the
    chain collapsed. The isometries depend on ``n`` through the bra caps but
    their positions never do.
    """
    cfg = _as_bits(n, params.n_sites)
    if t == 0:
        return _delta_amplitude(cfg)
    mpo = build_floquet_mpo(params)
    boundary = _init_boundary(_column_tensors(mpo, cfg, 0, t), "top", chi)
    for c in range(1, params.n_sites - 1):
        boundary = boundary_absorb(boundary, _column_tensors(mpo, cfg, c, t), chi, "top")
    boundary = boundary_absorb(
        boundary, _column_tensors(mpo, cfg, params.n_sites - 1, t), None, "top"
    )
    val = contract_mps_chain(boundary.sites)
    return AmplitudeValue.from_parts(val, boundary.log_scale)


def tnf_amplitude_inverse_time(
    params: FloquetParams, n, chi: int, t: int
) -> AmplitudeValue:
    """<n| F^t |0...0> absorbing period layers from the final step backward.

    The bra configuration seeds the boundary, so the isometry entries are
    amplitude dependent; the schedule itself is fixed.
    """
    cfg = _as_bits(n, params.n_sites)
    if t == 0:
        return _delta_amplitude(cfg)
    mpo = build_floquet_mpo(params)
    bra_mpo = [w.transpose(0, 2, 1, 3) for w in mpo]  # act on the bra side
    caps = []
    for c in range(params.n_sites):
        v = np.zeros(2, dtype=complex)
        v[cfg[c]] = 1.0
        caps.append(v)
    bra = product_mps(caps)
    log = 0.0
    for _ in range(t):
        bra = apply_mpo(bra, bra_mpo)
        bra, lf = compress(bra, chi)
        log += lf
    val = mps_amplitude(bra, [0] * params.n_sites)
    return AmplitudeValue.from_parts(val, log)


def mpo_mpo_inverse(params: FloquetParams, chi: int, t: int) -> tuple[list[np.ndarray], float]:
    """Compress F^t as an MPO, absorbing layers from the final step backward.

    The isometries are amplitude independent: the operator is compressed
    before any configuration is attached. Returns (sites, log_scale); use
    :func:`mpo_amplitude` to evaluate configurations.
    """
    n = params.n_sites
    if t == 0:
        ident = [np.eye(2, dtype=complex)[None, :, :, None] for _ in range(n)]
        return ident, 0.0
    mpo = build_floquet_mpo(params)
    acc = [w.copy() for w in mpo]
    log = 0.0
    for _ in range(t - 1):
        nxt = []
        for m, w in zip(acc, mpo):
            # earlier layer attaches on the input side: contract acc.in with w.out
            x = np.tensordot(m, w, axes=([2], [1]))  # (l, o, r, l2, i2, r2)
            x = x.transpose(0, 3, 1, 4, 2, 5)
            l, l2, o, i2, r, r2 = x.shape
            nxt.append(np.ascontiguousarray(x.reshape(l * l2, o, i2, r * r2)))
        flat = [x.reshape(x.shape[0], 4, x.shape[3]) for x in nxt]
        flat, lf = compress(flat, chi)
        log += lf
        acc = [x.reshape(x.shape[0], 2, 2, x.shape[2]) for x in flat]
    return acc, log


def mpo_amplitude(sites: list[np.ndarray], log_scale: float, n) -> AmplitudeValue:
    """<n| M |0...0> for a compressed evolution operator."""
    cfg = _as_bits(n, len(sites))
    mat = None
    for w, b in zip(sites, cfg):
        m = w[:, int(b), 0, :]
        mat = m if mat is None else mat @ m
    return AmplitudeValue.from_parts(complex(mat[0, 0]), log_scale)
