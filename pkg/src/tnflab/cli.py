"""Config-driven experiment runner (``tnf-lab``).

Four experiment kinds: ``vmc`` (energy grids over bond dimensions and
contraction modes), ``floquet`` (entanglement dynamics per method),
``pareto`` (cost-versus-accuracy sweeps), and ``circuit`` (arithmetic and
network-compilation checks). Configs are versioned JSON validated before any
computation; data files are deterministic for a fixed (config, seed, thread
count), with wall-clock timings confined to the run manifest and files named
``timing_*``.

Exit codes: 0 success, 2 config error, 3 resource-guard error, 4 numerical
abort.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .ed import ground_energy
from .entanglement import METHODS, entanglement_dynamics
from .errors import ConfigError, NumericalAbortError, ResourceLimitError
from .floquet import FloquetParams, PRESETS
from .models import heisenberg, j1j2, neel_config
from .peps import FixedEvaluator, FixedPlan, Peps, load_peps, random_peps, save_peps
from .simple_update import simple_update
from .vmc import estimate_energy, sgd_optimize

CONFIG_VERSION = 1


# ---------------------------------------------------------------------------
# Validation helpers (field-path error messages)


def _need(cfg: dict, key: str, kind, path: str):
    if key not in cfg:
        raise ConfigError(f"{path}.{key}: required field missing")
    val = cfg[key]
    if kind is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ConfigError(f"{path}.{key}: expected a number, got {type(val).__name__}")
        return float(val)
    if kind is int:
        if not isinstance(val, int) or isinstance(val, bool):
            raise ConfigError(f"{path}.{key}: expected an integer, got {type(val).__name__}")
        return val
    if not isinstance(val, kind):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def _opt(cfg: dict, key: str, kind, path: str, default):
    if key not in cfg:
        return default
    return _need(cfg, key, kind, path)


def _int_list(cfg: dict, key: str, path: str) -> list[int]:
    val = _need(cfg, key, list, path)
    if not val or not all(isinstance(v, int) and not isinstance(v, bool) for v in val):
        raise ConfigError(f"{path}.{key}: expected a nonempty list of integers")
    return val


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config: expected a JSON object")
    version = _need(cfg, "version", int, "config")
    if version != CONFIG_VERSION:
        raise ConfigError(f"config.version: unsupported version {version}")
    kind = _need(cfg, "kind", str, "config")
    if kind not in ("vmc", "floquet", "pareto", "circuit"):
        raise ConfigError(f"config.kind: unknown experiment kind {kind!r}")
    _need(cfg, "seed", int, "config")
    return cfg


# ---------------------------------------------------------------------------
# Output helpers


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def _write_manifest(out_dir: Path, config: dict, timings: dict, files: list[str]) -> None:
    manifest = {
        "artifact_version": __version__,
        "config": config,
        "timings_seconds": timings,
        "files": sorted(files),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out_dir, suffix=".manifest")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
        os.replace(tmp, out_dir / "manifest.json")
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# vmc


def _parse_lattice(cfg: dict, path: str, max_sites: int) -> tuple[int, int, str]:
    lat = _need(cfg, "lattice", dict, path)
    rows = _need(lat, "rows", int, f"{path}.lattice")
    cols = _need(lat, "cols", int, f"{path}.lattice")
    boundary = _opt(lat, "boundary", str, f"{path}.lattice", "obc")
    if boundary not in ("obc", "pbc"):
        raise ConfigError(f"{path}.lattice.boundary: expected 'obc' or 'pbc'")
    if rows < 1 or cols < 1:
        raise ConfigError(f"{path}.lattice: extents must be positive")
    if rows * cols > max_sites:
        raise ResourceLimitError(f"lattice {rows}x{cols} exceeds the {max_sites}-site guard")
    return rows, cols, boundary


def _parse_model(cfg: dict, rows: int, cols: int, boundary: str, path: str):
    mc = _need(cfg, "model", dict, path)
    name = _need(mc, "name", str, f"{path}.model")
    if name == "heisenberg":
        return heisenberg(rows, cols, boundary)
    if name == "j1j2":
        return j1j2(rows, cols, _need(mc, "j2", float, f"{path}.model"), boundary)
    raise ConfigError(f"{path}.model.name: unknown model {name!r}")


def _initial_peps(cfg: dict, model, bond_dim: int, seed: int, path: str) -> Peps:
    init = _opt(cfg, "init", dict, path, {"method": "simple_update"})
    method = _opt(init, "method", str, f"{path}.init", "simple_update")
    if method == "file":
        return load_peps(_need(init, "path", str, f"{path}.init"))
    p = random_peps(model.rows, model.cols, 2, bond_dim, seed=seed, boundary=model.boundary)
    if method == "random":
        return p
    if method == "simple_update":
        tau = _opt(init, "tau", float, f"{path}.init", 0.05)
        steps = _opt(init, "steps", int, f"{path}.init", 200)
        if tau <= 0:
            raise ConfigError(f"{path}.init.tau: must be positive")
        return simple_update(p, model, tau=tau, steps=steps)
    raise ConfigError(f"{path}.init.method: unknown method {method!r}")


def run_vmc(cfg: dict, out_dir: Path, threads: int) -> list[str]:
    rows, cols, boundary = _parse_lattice(cfg, "config", 64)
    model = _parse_model(cfg, rows, cols, boundary, "config")
    seed = cfg["seed"]
    grid = _need(cfg, "grid", dict, "config")
    bond_dims = _int_list(grid, "bond_dims", "config.grid")
    chis = _int_list(grid, "chis", "config.grid")
    modes = _need(grid, "modes", list, "config.grid")
    for m in modes:
        if m not in ("fixed", "dynamic"):
            raise ConfigError(f"config.grid.modes: unknown mode {m!r}")
    if not modes:
        raise ConfigError("config.grid.modes: expected a nonempty list")
    sweeps = _need(cfg, "sweeps", int, "config")
    if sweeps < 1:
        raise ConfigError("config.sweeps: must be positive")
    warmup = _opt(cfg, "warmup", int, "config", None)
    chains = _opt(cfg, "chains", int, "config", 1)
    want_ed = _opt(cfg, "ed_reference", bool, "config", rows * cols <= 16)
    if want_ed and rows * cols > 16:
        raise ResourceLimitError("ed_reference limited to lattices of at most 16 sites")

    out_dir.mkdir(parents=True, exist_ok=True)
    files: list[str] = []
    ed_energy = ground_energy(model) if want_ed else None
    summary_rows = []
    for bond_dim in bond_dims:
        peps = _initial_peps(cfg, model, bond_dim, seed, "config")
        ckpt = out_dir / f"peps_D{bond_dim}.tnp"
        save_peps(peps, ckpt)
        files.append(ckpt.name)
        for mode in modes:
            for chi in chis:
                est = estimate_energy(
                    peps,
                    model,
                    mode,
                    chi,
                    n_sweeps=sweeps,
                    n_warmup=warmup,
                    n_chains=chains,
                    seed=seed,
                    n_threads=threads,
                )
                tag = f"D{bond_dim}_chi{chi}_{mode}"
                series_rows = []
                for chain_idx, series in enumerate(est.series):
                    running = np.cumsum(series) / np.arange(1, series.size + 1)
                    for s_i, (e, rm) in enumerate(zip(series, running)):
                        series_rows.append([chain_idx, s_i, float(e), float(rm), est.acceptance])
                _write_csv(
                    out_dir / f"vmc_{tag}.csv",
                    ["chain", "sweep", "energy", "running_mean", "acceptance_rate"],
                    series_rows,
                )
                files.append(f"vmc_{tag}.csv")
                summary = {
                    "model": model.name,
                    "lattice": [rows, cols, boundary],
                    "bond_dim": bond_dim,
                    "chi": chi,
                    "mode": mode,
                    "seed": seed,
                    "e_mean": est.mean,
                    "e_stderr": est.stderr,
                    "e_per_site": est.per_site,
                    "n_samples": est.n_samples,
                    "acceptance": est.acceptance,
                    "warnings": est.warnings,
                    "ed_energy": ed_energy,
                }
                _write_text(out_dir / f"vmc_{tag}.json", json.dumps(summary, indent=2, sort_keys=True))
                files.append(f"vmc_{tag}.json")
                summary_rows.append(
                    [
                        bond_dim,
                        chi,
                        mode,
                        est.mean,
                        est.stderr,
                        est.per_site,
                        est.acceptance,
                        est.n_samples,
                    ]
                    + ([ed_energy] if ed_energy is not None else [])
                )
    header = ["bond_dim", "chi", "mode", "e_mean", "e_stderr", "e_per_site", "acceptance", "n_samples"]
    if ed_energy is not None:
        header.append("ed_energy")
    _write_csv(out_dir / "energies.csv", header, summary_rows)
    files.append("energies.csv")
    return files


# ---------------------------------------------------------------------------
# floquet


def run_floquet(cfg: dict, out_dir: Path, threads: int) -> list[str]:
    del threads  # enumeration is sequential; methods are deterministic
    n_sites = _need(cfg, "sites", int, "config")
    if n_sites > 14:
        raise ResourceLimitError("floquet runs are guarded to 14 sites")
    t_max = _need(cfg, "t_max", int, "config")
    if t_max < 0:
        raise ConfigError("config.t_max: must be nonnegative")
    if "preset" in cfg:
        preset = _need(cfg, "preset", str, "config")
        if preset not in PRESETS:
            raise ConfigError(f"config.preset: unknown preset {preset!r}")
        pars = PRESETS[preset]
        params = FloquetParams(n_sites, pars["j"], pars["g"], pars["h"], t_max)
    else:
        pc = _need(cfg, "params", dict, "config")
        params = FloquetParams(
            n_sites,
            _need(pc, "j", float, "config.params"),
            _need(pc, "g", float, "config.params"),
            _need(pc, "h", float, "config.params"),
            t_max,
        )
    methods = _need(cfg, "methods", list, "config")
    if not methods:
        raise ConfigError("config.methods: expected a nonempty list")
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"config.methods: unknown method {m!r}")
    chis = _int_list(cfg, "chis", "config") if "chis" in cfg else [2]

    exact = entanglement_dynamics(params, "exact")
    files: list[str] = []
    rows = []
    for method in methods:
        for chi in chis if method != "exact" else [0]:
            data = (
                exact
                if method == "exact"
                else entanglement_dynamics(params, method, chi=chi)
            )
            spec_rows = []
            for t, s, spec in zip(data.times, data.entropies, data.spectra):
                rows.append([t, exact.entropies[t], s, chi, method])
                for alpha, lam in enumerate(spec):
                    spec_rows.append([t, alpha, float(np.real(lam))])
            tag = method if method == "exact" else f"{method}_chi{chi}"
            _write_csv(out_dir / f"spectrum_{tag}.csv", ["t", "alpha", "lambda2"], spec_rows)
            files.append(f"spectrum_{tag}.csv")
            if method == "exact":
                break
    _write_csv(out_dir / "entropy.csv", ["t", "s_exact", "s_method", "chi", "method"], rows)
    files.append("entropy.csv")
    return files


# ---------------------------------------------------------------------------
# pareto


def run_pareto(cfg: dict, out_dir: Path, threads: int) -> list[str]:
    rows, cols, boundary = _parse_lattice(cfg, "config", 36)
    model = _parse_model(cfg, rows, cols, boundary, "config")
    seed = cfg["seed"]
    grid = _need(cfg, "grid", dict, "config")
    bond_dims = _int_list(grid, "bond_dims", "config.grid")
    chis = _int_list(grid, "chis", "config.grid")
    sgd = _opt(cfg, "sgd", dict, "config", {})
    iterations = _opt(sgd, "iterations", int, "config.sgd", 10)
    sgd_sweeps = _opt(sgd, "sweeps", int, "config.sgd", 100)
    lr = _opt(sgd, "learning_rate", float, "config.sgd", 0.05)
    eval_sweeps = _opt(cfg, "sweeps", int, "config", 500)
    timing_reps = _opt(cfg, "timing_amplitudes", int, "config", 50)

    ed_energy = ground_energy(model) if rows * cols <= 16 else None
    results = []
    for bond_dim in bond_dims:
        base = _initial_peps(cfg, model, bond_dim, seed, "config")
        for chi in chis:
            best, _trace = sgd_optimize(
                base,
                model,
                chi,
                learning_rate=lr,
                iterations=iterations,
                seed=seed,
                n_sweeps=sgd_sweeps,
            )
            est = estimate_energy(
                best, model, "fixed", chi, n_sweeps=eval_sweeps, seed=seed, n_threads=threads
            )
            evaluator = FixedEvaluator(best, FixedPlan.for_lattice(rows, cols, chi))
            cfg0 = neel_config(rows, cols)
            t0 = time.perf_counter()
            for rep in range(timing_reps):
                evaluator._amps.clear()  # time full contractions, not lookups
                evaluator._tops.clear()
                evaluator._bottoms.clear()
                evaluator.amplitude(cfg0)
            amp_seconds = (time.perf_counter() - t0) / timing_reps
            results.append(
                {
                    "bond_dim": bond_dim,
                    "chi": chi,
                    "energy": est.mean,
                    "stderr": est.stderr,
                    "acceptance": est.acceptance,
                    "amp_seconds": amp_seconds,
                }
            )
    reference = ed_energy if ed_energy is not None else min(r["energy"] for r in results)
    for r in results:
        r["accuracy"] = abs(r["energy"] - reference) / abs(reference)
    # Pareto frontier in (time, accuracy): points no other point dominates.
    for r in results:
        r["frontier"] = int(
            not any(
                (o["amp_seconds"] < r["amp_seconds"] and o["accuracy"] <= r["accuracy"])
                or (o["amp_seconds"] <= r["amp_seconds"] and o["accuracy"] < r["accuracy"])
                for o in results
            )
        )
    files = []
    _write_csv(
        out_dir / "pareto.csv",
        ["bond_dim", "chi", "energy", "stderr", "accuracy", "acceptance"],
        [
            [r["bond_dim"], r["chi"], r["energy"], r["stderr"], r["accuracy"], r["acceptance"]]
            for r in results
        ],
    )
    files.append("pareto.csv")
    _write_csv(
        out_dir / "timing_pareto.csv",
        ["bond_dim", "chi", "amp_seconds", "frontier"],
        [[r["bond_dim"], r["chi"], r["amp_seconds"], r["frontier"]] for r in results],
    )
    files.append("timing_pareto.csv")
    return files


# ---------------------------------------------------------------------------
# circuit


def run_circuit(cfg: dict, out_dir: Path, threads: int) -> list[str]:
    del threads
    from .circuit import (
        BitVec,
        FnnSpec,
        build_adder,
        build_multiplier,
        build_square,
        compile_fnn,
        eval_amp_circuit,
        eval_binary,
    )

    suites = _need(cfg, "suites", list, "config")
    if not suites:
        raise ConfigError("config.suites: expected a nonempty list")
    known = {"adder", "multiplier", "square", "fnn", "memo"}
    for s in suites:
        if s not in known:
            raise ConfigError(f"config.suites: unknown suite {s!r}")
    widths = _opt(cfg, "max_bits", dict, "config", {})
    adder_bits = _opt(widths, "adder", int, "config.max_bits", 6)
    mult_bits = _opt(widths, "multiplier", int, "config.max_bits", 5)
    square_bits = _opt(widths, "square", int, "config.max_bits", 5)
    for name, w in (("adder", adder_bits), ("multiplier", mult_bits), ("square", square_bits)):
        if w > 8:
            raise ResourceLimitError(f"exhaustive {name} suite guarded to 8 bits, got {w}")
    seed = cfg["seed"]

    results: dict[str, dict] = {}
    if "adder" in suites:
        g = build_adder(adder_bits)
        failures = sum(
            eval_binary(g, [BitVec.from_int(x, adder_bits), BitVec.from_int(y, adder_bits)])[0].to_int()
            != x + y
            for x in range(1 << adder_bits)
            for y in range(1 << adder_bits)
        )
        results["adder"] = {"cases": (1 << adder_bits) ** 2, "failures": int(failures)}
    if "multiplier" in suites:
        g = build_multiplier(mult_bits, mult_bits)
        failures = sum(
            eval_binary(g, [BitVec.from_int(x, mult_bits), BitVec.from_int(y, mult_bits)])[0].to_int()
            != x * y
            for x in range(1 << mult_bits)
            for y in range(1 << mult_bits)
        )
        results["multiplier"] = {"cases": (1 << mult_bits) ** 2, "failures": int(failures)}
    if "square" in suites:
        g = build_square(square_bits)
        failures = sum(
            eval_binary(g, [BitVec.from_int(x, square_bits)])[0].to_int() != x * x
            for x in range(1 << square_bits)
        )
        results["square"] = {"cases": 1 << square_bits, "failures": int(failures)}
    if "fnn" in suites:
        fc = _opt(cfg, "fnn", dict, "config", {})
        widths_list = _opt(fc, "widths", list, "config.fnn", [2, 4, 1])
        n_inputs = _opt(fc, "n_inputs", int, "config.fnn", 100)
        rng = np.random.default_rng(seed)
        weights = [
            rng.standard_normal((widths_list[k + 1], widths_list[k]))
            for k in range(len(widths_list) - 1)
        ]
        biases = [rng.standard_normal(widths_list[k + 1]) for k in range(len(widths_list) - 1)]
        acts = [[0.1, 0.3, 0.0, 0.5]] * (len(widths_list) - 2) + [[0.0, 1.0]]
        spec = FnnSpec(list(widths_list), weights, biases, acts)
        graph = compile_fnn(spec)
        max_err = 0.0
        for _ in range(n_inputs):
            x = rng.standard_normal(widths_list[0])
            vals, _stats = eval_amp_circuit(graph, list(x))
            ref = spec.forward(x)
            max_err = max(max_err, float(np.max(np.abs(np.array(vals) - ref))))
        results["fnn"] = {"cases": n_inputs, "max_abs_error": max_err, "failures": int(max_err > 1e-12)}
    if "memo" in suites:
        fc = _opt(cfg, "fnn", dict, "config", {})
        widths_list = _opt(fc, "widths", list, "config.fnn", [2, 4, 1])
        rng = np.random.default_rng(seed)
        weights = [
            rng.standard_normal((widths_list[k + 1], widths_list[k]))
            for k in range(len(widths_list) - 1)
        ]
        biases = [rng.standard_normal(widths_list[k + 1]) for k in range(len(widths_list) - 1)]
        acts = [[0.1, 0.3, 0.0, 0.5]] * (len(widths_list) - 2) + [[0.0, 1.0]]
        graph = compile_fnn(FnnSpec(list(widths_list), weights, biases, acts))
        x = list(rng.standard_normal(widths_list[0]))
        vals_on, st_on = eval_amp_circuit(graph, x, memo=True)
        vals_off, st_off = eval_amp_circuit(graph, x, memo=False)
        results["memo"] = {
            "identical": vals_on == vals_off,
            "memo_contractions": st_on.contractions,
            "naive_contractions": st_off.contractions,
            "nodes": len(graph.nodes),
            "failures": int(vals_on != vals_off or st_on.contractions > len(graph.nodes)),
        }

    passed = all(r.get("failures", 0) == 0 for r in results.values())
    payload = {"passed": passed, "suites": results}
    _write_text(out_dir / "results.json", json.dumps(payload, indent=2, sort_keys=True))
    return ["results.json"]


# ---------------------------------------------------------------------------
# Entry point


_RUNNERS = {"vmc": run_vmc, "floquet": run_floquet, "pareto": run_pareto, "circuit": run_circuit}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tnf-lab", description="tensor network function experiments"
    )
    parser.add_argument("kind", choices=sorted(_RUNNERS))
    parser.add_argument("--config", required=True, help="path to a JSON experiment config")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if cfg["kind"] != args.kind:
            raise ConfigError(
                f"config.kind: config says {cfg['kind']!r} but the command line says {args.kind!r}"
            )
        if args.seed is not None:
            cfg["seed"] = args.seed
        out_dir = Path(args.out)
        t0 = time.perf_counter()
        files = _RUNNERS[args.kind](cfg, out_dir, max(1, args.threads))
        timings = {"total": time.perf_counter() - t0}
        _write_manifest(out_dir, cfg, timings, files)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return 3
    except NumericalAbortError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
