"""Kicked-Ising period operator and amplitude contraction routes."""
import math

import numpy as np
import pytest
import scipy.linalg

from tnflab.errors import ResourceLimitError
from tnflab.floquet import (
    PRESETS,
    FloquetParams,
    build_floquet_mpo,
    config_index,
    evolve_conventional,
    exact_evolve,
    mpo_amplitude,
    mpo_mpo_inverse,
    tnf_amplitude_inverse_time,
    tnf_amplitude_transverse,
)
from tnflab.mps import apply_mpo, compress, mps_amplitude, mps_to_dense, mpo_to_dense, product_mps

Z = np.diag([1.0, -1.0])
X = np.array([[0.0, 1.0], [1.0, 0.0]])


def dense_period_operator(params):
    """Direct product of the gate sequence: bond phases, longitudinal
    rotations, then the transverse kick."""
    n = params.n_sites
    dim = 2**n
    op = np.eye(dim, dtype=complex)

    def embed(mat, sites):
        mats = [np.eye(2, dtype=complex)] * n
        total = None
        if len(sites) == 1:
            mats[sites[0]] = mat
        else:
            pass
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    # two-site ZZ phases
    for j in range(n - 1):
        mats = [np.eye(2, dtype=complex)] * n
        zz = scipy.linalg.expm(1j * params.j * np.kron(Z, Z))
        left = np.eye(2**j)
        right = np.eye(2 ** (n - j - 2))
        op = np.kron(np.kron(left, zz), right) @ op
    for j in range(n):
        op = embed(scipy.linalg.expm(1j * params.h * Z), [j]) @ op
    for j in range(n):
        op = embed(scipy.linalg.expm(1j * params.g * X), [j]) @ op
    return op


class TestMpo:
    def test_identity_at_zero_couplings(self):
        for n in (2, 4, 6):
            p = FloquetParams(n, 0.0, 0.0, 0.0)
            dense = mpo_to_dense(build_floquet_mpo(p))
            assert np.allclose(dense, np.eye(2**n), atol=1e-14)

    def test_zero_j_is_bond_one(self):
        p = FloquetParams(5, 0.0, 0.5, 0.3)
        mpo = build_floquet_mpo(p)
        assert all(w.shape[0] == 1 and w.shape[3] == 1 for w in mpo)

    def test_l2_against_gate_product(self):
        p = FloquetParams(2, 0.7, 0.5, 0.5)
        dense = mpo_to_dense(build_floquet_mpo(p))
        want = dense_period_operator(p)
        assert np.max(np.abs(dense - want)) < 1e-12

    def test_l5_against_gate_product(self):
        p = FloquetParams(5, **PRESETS["maximally_chaotic"])
        dense = mpo_to_dense(build_floquet_mpo(p))
        want = dense_period_operator(p)
        assert np.max(np.abs(dense - want)) < 1e-12

    def test_bond_dimension_bound(self):
        p = FloquetParams(8, **PRESETS["less_chaotic"])
        mpo = build_floquet_mpo(p)
        assert all(max(w.shape[0], w.shape[3]) <= 4 for w in mpo)

    def test_unitarity(self):
        p = FloquetParams(6, **PRESETS["maximally_chaotic"])
        dense = mpo_to_dense(build_floquet_mpo(p))
        assert np.max(np.abs(dense @ dense.conj().T - np.eye(64))) < 1e-12


class TestExactEvolve:
    def test_t0_initial_state(self):
        p = FloquetParams(6, **PRESETS["maximally_chaotic"])
        psi = exact_evolve(p, 0)
        want = np.zeros(64)
        want[0] = 1.0
        assert np.allclose(psi, want)

    def test_norm_preserved(self):
        p = FloquetParams(8, **PRESETS["less_chaotic"])
        assert abs(np.linalg.norm(exact_evolve(p, 20)) - 1) < 1e-12

    def test_norm_drift_90_steps(self):
        p = FloquetParams(10, **PRESETS["less_chaotic"])
        assert abs(np.linalg.norm(exact_evolve(p, 90)) - 1) < 1e-12

    def test_against_dense_mpo_powers(self):
        p = FloquetParams(10, **PRESETS["maximally_chaotic"])
        m = mpo_to_dense(build_floquet_mpo(p))
        psi_ref = np.zeros(1024, dtype=complex)
        psi_ref[0] = 1.0
        for _ in range(5):
            psi_ref = m @ psi_ref
        assert np.max(np.abs(exact_evolve(p, 5) - psi_ref)) < 1e-12

    def test_site_guard(self):
        with pytest.raises(ResourceLimitError):
            exact_evolve(FloquetParams(15, 0.1, 0.1, 0.1), 1)


class TestConventionalMps:
    def test_lossless_chi(self):
        p = FloquetParams(8, **PRESETS["maximally_chaotic"])
        sites, log = evolve_conventional(p, 16, 6)
        v = mps_to_dense(sites) * math.exp(log)
        psi = exact_evolve(p, 6)
        fid = abs(np.vdot(v, psi)) / np.linalg.norm(v)
        assert abs(1 - fid) < 1e-8

    def test_zero_j_chi1_exact(self):
        p = FloquetParams(8, 0.0, 0.5, 0.7)
        sites, log = evolve_conventional(p, 1, 10)
        v = mps_to_dense(sites) * math.exp(log)
        psi = exact_evolve(p, 10)
        fid = abs(np.vdot(v, psi)) / np.linalg.norm(v)
        assert abs(1 - fid) < 1e-10

    def test_truncated_run_regression(self):
        # self-consistency fixture: frozen lower bound for this chi=4 run
        # (measured 0.8504 once, then fixed as the regression floor)
        p = FloquetParams(10, **PRESETS["less_chaotic"])
        sites, log = evolve_conventional(p, 4, 8)
        v = mps_to_dense(sites) * math.exp(log)
        psi = exact_evolve(p, 8)
        fid = abs(np.vdot(v, psi)) / np.linalg.norm(v)
        assert fid > 0.84


def transverse_oracle(params, n, chi, t):
    """Second implementation of the transverse schedule: columns as explicit
    time-axis chains, absorbed left to right with the shared compressor."""
    mpo = build_floquet_mpo(params)
    e0 = np.array([1.0, 0.0], dtype=complex)
    L = params.n_sites

    def column(c):
        cap = np.zeros(2, dtype=complex)
        cap[n[c]] = 1.0
        site = mpo[c]
        col = []
        for tau in range(t):
            x = site
            if tau == 0:
                x = np.tensordot(x, e0, axes=([2], [0]))  # (l, o, r)
                if t == 1:
                    x = np.tensordot(x, cap, axes=([1], [0]))
                    col.append(x.reshape(x.shape[0], 1, x.shape[1], 1))
                else:
                    col.append(x.transpose(0, 2, 1)[:, None, :, :])
            elif tau == t - 1:
                x = np.tensordot(x, cap, axes=([1], [0]))
                col.append(x[:, :, :, None])
            else:
                col.append(x.transpose(0, 2, 3, 1))
        return col

    boundary = None
    log = 0.0
    for c in range(L):
        col = column(c)
        if boundary is None:
            chain = [w[0].reshape(w.shape[1], w.shape[2], w.shape[3]) for w in col]
        else:
            chain = []
            for s, w in zip(boundary, col):
                m = np.tensordot(s, w, axes=([1], [0]))  # (l, r, l2, d, r2)
                m = m.transpose(0, 2, 3, 1, 4)
                l, l2, d, r, r2 = m.shape
                chain.append(m.reshape(l * l2, d, r * r2))
        cap = chi if c < L - 1 else None
        chain, lf = compress(chain, cap)
        log += lf
        boundary = chain
    mat = None
    for s in boundary:
        m = s[:, 0, :]
        mat = m if mat is None else mat @ m
    return complex(mat[0, 0]) * math.exp(log)


class TestTnfTransverse:
    def test_t0_delta(self):
        p = FloquetParams(6, **PRESETS["maximally_chaotic"])
        assert abs(tnf_amplitude_transverse(p, [0] * 6, 4, 0).value - 1) < 1e-14
        assert tnf_amplitude_transverse(p, [1, 0, 0, 0, 0, 0], 4, 0).is_zero

    def test_exact_limit(self):
        p = FloquetParams(10, **PRESETS["maximally_chaotic"])
        psi = exact_evolve(p, 4)
        rng = np.random.default_rng(0)
        for _ in range(6):
            n = rng.integers(0, 2, size=10)
            got = tnf_amplitude_transverse(p, n, 64, 4)
            want = psi[config_index(n)]
            assert abs(got.value - want) / abs(want) < 1e-8

    def test_matches_independent_schedule_oracle(self):
        p = FloquetParams(10, **PRESETS["maximally_chaotic"])
        rng = np.random.default_rng(1)
        for _ in range(4):
            n = rng.integers(0, 2, size=10)
            got = tnf_amplitude_transverse(p, n, 2, 5)
            want = transverse_oracle(p, n, 2, 5)
            assert abs(got.value - want) / abs(want) < 1e-10


class TestTnfInverseTime:
    def test_t0_delta(self):
        p = FloquetParams(6, **PRESETS["less_chaotic"])
        assert abs(tnf_amplitude_inverse_time(p, [0] * 6, 4, 0).value - 1) < 1e-14
        assert tnf_amplitude_inverse_time(p, [0, 1, 0, 0, 0, 0], 4, 0).is_zero

    def test_exact_limit(self):
        p = FloquetParams(10, **PRESETS["maximally_chaotic"])
        psi = exact_evolve(p, 4)
        rng = np.random.default_rng(2)
        for _ in range(6):
            n = rng.integers(0, 2, size=10)
            got = tnf_amplitude_inverse_time(p, n, 64, 4)
            want = psi[config_index(n)]
            assert abs(got.value - want) / abs(want) < 1e-8

    def test_matches_independent_layer_oracle(self):
        """Layer-by-layer bra absorption written out with raw numpy."""
        p = FloquetParams(8, **PRESETS["maximally_chaotic"])
        mpo = build_floquet_mpo(p)
        rng = np.random.default_rng(3)
        for _ in range(4):
            n = rng.integers(0, 2, size=8)
            caps = []
            for c in range(8):
                v = np.zeros(2, dtype=complex)
                v[n[c]] = 1.0
                caps.append(v)
            bra = product_mps(caps)
            log = 0.0
            for _layer in range(5):
                bra = apply_mpo(bra, [w.transpose(0, 2, 1, 3) for w in mpo])
                bra, lf = compress(bra, 2)
                log += lf
            want = mps_amplitude(bra, [0] * 8) * math.exp(log)
            got = tnf_amplitude_inverse_time(p, n, 2, 5)
            assert abs(got.value - want) / max(abs(want), 1e-300) < 1e-10


class TestMpoMpo:
    def test_identity_at_t0(self):
        p = FloquetParams(6, **PRESETS["less_chaotic"])
        sites, log = mpo_mpo_inverse(p, 4, 0)
        assert abs(mpo_amplitude(sites, log, [0] * 6).value - 1) < 1e-14
        assert mpo_amplitude(sites, log, [1] + [0] * 5).is_zero

    def test_exact_limit(self):
        p = FloquetParams(10, **PRESETS["maximally_chaotic"])
        psi = exact_evolve(p, 4)
        sites, log = mpo_mpo_inverse(p, 64, 4)
        rng = np.random.default_rng(4)
        for _ in range(6):
            n = rng.integers(0, 2, size=10)
            got = mpo_amplitude(sites, log, n)
            want = psi[config_index(n)]
            assert abs(got.value - want) / abs(want) < 1e-8

    def test_isometries_amplitude_independent(self):
        # the compressed operator is built once; amplitudes are read off it
        p = FloquetParams(8, **PRESETS["less_chaotic"])
        sites, log = mpo_mpo_inverse(p, 4, 6)
        a = mpo_amplitude(sites, log, [0] * 8)
        b = mpo_amplitude(sites, log, [1, 0, 1, 0, 1, 0, 1, 0])
        c = mpo_amplitude(sites, log, [0] * 8)
        assert (a.mantissa, a.log_scale) == (c.mantissa, c.log_scale)
        assert not np.array_equal(a.mantissa, b.mantissa)
