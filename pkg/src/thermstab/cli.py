"""``thermstab`` command line: channel reports, sweeps, memory runs, oracle checks."""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .channels import (
    BathSpec,
    ThermalParams,
    equilibrium_excitation,
    negativity,
    pta_thermal,
    qpd_thermal,
    reset_approximation,
)
from .config import DEVICE_PRESETS, ConfigError, ExperimentConfig, build_circuit, parse_config
from .decoder import make_decoder
from .experiments import build_surface_memory, format_detection_events, instrument_noise, write_detector_model
from .codes import SurfaceSpec
from . import oracle

EXIT_INVALID = 2
EXIT_FAILED = 1


class GridError(ValueError):
    pass


def _number(token: str) -> float:
    token = token.strip()
    if token.endswith("pi"):
        head = token[:-2].rstrip("*")
        return (float(head) if head else 1.0) * math.pi
    return float(token)


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:num`` (inclusive linspace) or a comma-separated list."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise GridError(f"grid {text!r} must be start:stop:num")
            start, stop, num = _number(parts[0]), _number(parts[1]), int(parts[2])
            if num < 1:
                raise GridError(f"grid {text!r} needs at least one point")
            return np.linspace(start, stop, num)
        values = [_number(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        if isinstance(exc, GridError):
            raise
        raise GridError(f"malformed grid {text!r}: {exc}") from None
    if not values:
        raise GridError(f"grid {text!r} is empty")
    return np.array(values)


# ---------------------------------------------------------------- channel


def _channel_params(args: argparse.Namespace) -> ThermalParams:
    t1, t2 = args.t1, args.t2
    if args.preset is not None:
        if args.preset not in DEVICE_PRESETS:
            raise ValueError(f"unknown preset {args.preset!r}; choose from {', '.join(DEVICE_PRESETS)}")
        p_t1, p_t2 = DEVICE_PRESETS[args.preset]
        t1 = p_t1 if t1 is None else t1
        t2 = p_t2 if t2 is None else t2
    t1 = 1.0 if t1 is None else t1
    t2 = t1 if t2 is None else t2
    # measurement window of T1/100 unless given
    tau = t1 / 100 if args.tau is None else args.tau
    p1 = args.p1
    if args.bath_temperature is not None:
        p1 = equilibrium_excitation(BathSpec(args.qubit_frequency, args.bath_temperature))
    return ThermalParams(t1, t2, tau, p1)


def cmd_channel(args: argparse.Namespace) -> int:
    params = _channel_params(args)
    exact = qpd_thermal(params)
    pta = pta_thermal(params)
    approx = reset_approximation(params)
    kraus = oracle.kraus_thermal(params)
    target = oracle.choi_state(kraus)
    f_pta = oracle.state_fidelity(target, oracle.choi_state(oracle.pauli_twirl(kraus)))
    f_reset = oracle.state_fidelity(target, oracle.choi_state(approx))
    gamma = negativity(exact)
    print(f"t1={params.t1!r} t2={params.t2!r} tau={params.tau!r} p1={params.p1!r}")
    print("exact decomposition:")
    for name, q in zip(("q_I", "q_Z", "q_R0", "q_R1"), exact.as_array()[:4]):
        print(f"  {name:5s} {q: .9f}")
    print(f"  Gamma {gamma:.9f}")
    print(f"PTA: p_x={pta.p_x:.9f} p_y={pta.p_y:.9f} p_z={pta.p_z:.9f}")
    print(
        "reset approximation: "
        f"q_I={approx.q_identity:.9f} q_R0={approx.q_reset0:.9f} q_R1={approx.q_reset1:.9f}"
    )
    print(f"fidelity exact vs pta:   {f_pta:.12f}")
    print(f"fidelity exact vs reset: {f_reset:.12f}")
    if args.csv:
        header = ["t1", "t2", "tau", "p1", "q_I", "q_Z", "q_R0", "q_R1", "gamma",
                  "pta_x", "pta_y", "pta_z", "reset_I", "reset_R0", "reset_R1", "f_pta", "f_reset"]
        row = [params.t1, params.t2, params.tau, params.p1, *exact.as_array()[:4], gamma,
               pta.p_x, pta.p_y, pta.p_z, approx.q_identity, approx.q_reset0, approx.q_reset1, f_pta, f_reset]
        oracle.write_csv(args.csv, header, [row])
    return 0


# ---------------------------------------------------------------- sweeps


def _sweep_delta_d(args: argparse.Namespace) -> tuple[list[str], list]:
    params = ThermalParams(1.0, args.t2_ratio, args.tau_ratio, args.p1)
    theta = parse_grid(args.theta) if args.theta else np.linspace(0.0, math.pi, 721)
    rows = oracle.delta_d_sweep(theta, params)
    values = np.array([r[1] for r in rows])
    flips = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
    for k in flips:
        (a, fa), (b, fb) = rows[k], rows[k + 1]
        print(f"crossover near theta={a - fa * (b - a) / (fb - fa):.6f}")
    return ["theta", "delta_d"], rows


def _sweep_delta_f(args: argparse.Namespace) -> tuple[list[str], list]:
    tau = parse_grid(args.tau_ratios or "0.02:1:50")
    if args.p1_grid:
        p1s = parse_grid(args.p1_grid)
        rows = [
            (float(p), float(t), oracle.delta_f(ThermalParams(1.0, args.t2_ratio, t, p)))
            for p in p1s
            for t in tau
        ]
        header = ["p1", "tau_ratio", "delta_f"]
    else:
        t2 = parse_grid(args.t2_ratios or "1.02:2:50")
        rows = oracle.delta_f_grid(t2, tau, p1=args.p1)
        header = ["t2_ratio", "tau_ratio", "delta_f"]
    print(f"min delta_f={min(r[2] for r in rows):.6g}")
    return header, rows


def _sweep_overhead(args: argparse.Namespace) -> tuple[list[str], list]:
    t2 = parse_grid(args.t2_ratios or "0.1:2:39")
    base = build_surface_memory(SurfaceSpec(args.distance), args.rounds)
    rows = []
    for r in t2:
        params = ThermalParams(1.0, float(r), args.tau_ratio, args.p1)
        c = instrument_noise(base, params)
        gamma = negativity(qpd_thermal(params))
        n_c = len(c.noise_sites())
        total = c.gamma_total
        rows.append((float(r), gamma, n_c, total, total**2))
    return ["t2_ratio", "gamma_site", "n_c", "gamma_total", "variance_factor"], rows


SWEEPS = {"delta_d": _sweep_delta_d, "delta_f": _sweep_delta_f, "overhead": _sweep_overhead}


def cmd_sweep(args: argparse.Namespace) -> int:
    header, rows = SWEEPS[args.kind](args)
    out = Path(args.out or f"{args.kind}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    oracle.write_csv(out, header, rows)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


# ---------------------------------------------------------------- memory

_MEMORY_FLAGS = {
    "code": str, "distance": int, "state": str, "rounds": int, "t1": float, "t2": float,
    "tau": float, "p1": float, "channel_model": str, "noise_policy": str, "shots": int,
    "master_seed": int, "decoder": str, "output_dir": str,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_memory_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> dict:
    """Run ``cfg`` and write every artifact into its output directory."""
    from .experiments import run_memory

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    circuit = build_circuit(cfg)
    compiled = circuit.compile()
    decoder = make_decoder(cfg.decoder, circuit)
    start = time.perf_counter()
    result = run_memory(compiled, cfg.shots, cfg.master_seed, decoder, threads=threads)
    wall = time.perf_counter() - start

    (out / "config.ini").write_text(cfg.to_text())
    (out / "events.txt").write_text(format_detection_events(result.records))
    write_detector_model(out / "detector_model.txt", compiled)
    summary = dict(result.summary)
    summary["ci95"] = summary.pop("ler_ci95")
    summary["wall_time"] = wall
    summary["channel_model"] = cfg.channel_model
    summary["decoder"] = cfg.decoder
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    manifest = {
        "config_sha256": cfg.digest(),
        "master_seed": cfg.master_seed,
        "version": __version__,
        "numpy": np.__version__,
        "files": {p: _sha256(out / p) for p in ("config.ini", "events.txt", "detector_model.txt")},
        "reproduce": f"thermstab memory {out / 'config.ini'}",
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return summary


def cmd_memory(args: argparse.Namespace) -> int:
    overrides = {k: getattr(args, k) for k in _MEMORY_FLAGS if getattr(args, k) is not None}
    if args.no_final_layer_noise:
        overrides["final_layer_noise"] = False
    text = Path(args.config).read_text() if args.config else ""
    cfg = parse_config(text, overrides)
    summary = run_memory_experiment(cfg, args.threads)
    print(
        f"ler={summary['ler']:.6g} ci95=[{summary['ci95'][0]:.6g}, {summary['ci95'][1]:.6g}] "
        f"gamma_total={summary['gamma_total']:.6g} fallbacks={summary['fallback_count']} "
        f"wall_time={summary['wall_time']:.2f}s"
    )
    print(f"artifacts in {cfg.output_dir}")
    return 0


# ---------------------------------------------------------------- oracle check


def _random_params(rng: np.random.Generator) -> ThermalParams:
    t1 = rng.uniform(0.1, 10.0)
    return ThermalParams(t1, rng.uniform(0.01, 2.0) * t1, rng.uniform(0.0, 2.0) * t1, rng.uniform(0.0, 0.5))


def oracle_suites(draws: int = 200, seed: int = 0) -> dict[str, float]:
    """Worst deviation per suite; all should sit at round-off."""
    rng = np.random.default_rng(seed)
    worst = {"ptm_qpd_vs_kraus": 0.0, "ptm_twirl_vs_pta": 0.0, "tomography": 0.0, "master_equation": 0.0}
    for k in range(draws):
        params = _random_params(rng)
        kraus = oracle.kraus_thermal(params)
        ptm_k = oracle.pauli_transfer_matrix(kraus)
        worst["ptm_qpd_vs_kraus"] = max(
            worst["ptm_qpd_vs_kraus"], np.abs(oracle.pauli_transfer_matrix(qpd_thermal(params)) - ptm_k).max()
        )
        twirl = oracle.pauli_twirl(kraus)
        pta = pta_thermal(params)
        worst["ptm_twirl_vs_pta"] = max(
            worst["ptm_twirl_vs_pta"],
            abs(twirl.p_x - pta.p_x), abs(twirl.p_y - pta.p_y), abs(twirl.p_z - pta.p_z),
        )
        for rho in oracle.CARDINAL_STATES.values():
            diff = oracle.apply_decomposition(rho, qpd_thermal(params)) - kraus(rho)
            worst["tomography"] = max(worst["tomography"], np.abs(diff).max())
        if k < 20:
            rho = oracle.CARDINAL_STATES["+"]
            diff = oracle.integrate_master_equation(rho, params, steps=2_000) - kraus(rho)
            worst["master_equation"] = max(worst["master_equation"], np.abs(diff).max())
    return {k: float(v) for k, v in worst.items()}


ORACLE_TOL = {"ptm_qpd_vs_kraus": 1e-10, "ptm_twirl_vs_pta": 1e-10, "tomography": 1e-10, "master_equation": 1e-8}


def cmd_oracle_check(args: argparse.Namespace) -> int:
    worst = oracle_suites(args.draws, args.seed)
    ok = True
    for name, err in worst.items():
        passed = err <= ORACLE_TOL[name]
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: max deviation {err:.3e} (tol {ORACLE_TOL[name]:.0e})")
    return 0 if ok else EXIT_FAILED


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermstab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ch = sub.add_parser("channel", help="decompositions, negativity and fidelities of one channel")
    ch.add_argument("--t1", type=float)
    ch.add_argument("--t2", type=float)
    ch.add_argument("--tau", type=float, help="noise window (default t1/100)")
    ch.add_argument("--p1", type=float, default=0.0)
    ch.add_argument("--preset", help=f"device coherence times in us: {', '.join(DEVICE_PRESETS)}")
    ch.add_argument("--qubit-frequency", type=float, default=5e9, help="Hz, used with --bath-temperature")
    ch.add_argument("--bath-temperature", type=float, help="kelvin; sets p1 from the Bose occupation")
    ch.add_argument("--csv")
    ch.set_defaults(func=cmd_channel)

    sw = sub.add_parser("sweep", help="write plot-ready CSV grids")
    sw.add_argument("kind", choices=sorted(SWEEPS))
    sw.add_argument("--out")
    sw.add_argument("--t2-ratio", type=float, default=1.5)
    sw.add_argument("--tau-ratio", type=float, default=None)
    sw.add_argument("--p1", type=float, default=0.0)
    sw.add_argument("--theta", help="grid, e.g. 0:pi:721")
    sw.add_argument("--t2-ratios")
    sw.add_argument("--tau-ratios")
    sw.add_argument("--p1-grid", help="delta_f against p1 at fixed --t2-ratio")
    sw.add_argument("--distance", type=int, default=3)
    sw.add_argument("--rounds", type=int, default=3)
    sw.set_defaults(func=cmd_sweep)

    mem = sub.add_parser("memory", help="run a memory experiment from a config file and/or flags")
    mem.add_argument("config", nargs="?")
    for name, kind in _MEMORY_FLAGS.items():
        flag = "--seed" if name == "master_seed" else "--" + name.replace("_", "-")
        mem.add_argument(flag, dest=name, type=kind)
    mem.add_argument("--no-final-layer-noise", action="store_true")
    mem.add_argument("--threads", type=int, help="worker cap (also THERMSTAB_THREADS)")
    mem.set_defaults(func=cmd_memory)

    oc = sub.add_parser("oracle-check", help="PTM equality and tomography suites")
    oc.add_argument("--draws", type=int, default=200)
    oc.add_argument("--seed", type=int, default=0)
    oc.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "kind", None) is not None and args.tau_ratio is None:
        args.tau_ratio = 1.0 if args.kind == "delta_d" else 0.01
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
