"""Command line interface.

Subcommands::

    anqs run          -c run.toml            optimize, write trace + summary
    anqs ed           -c run.toml            exact ground energy of the sector
    anqs count-sector -c run.toml            sector sizes with/without Z-strings
    anqs discover-z2  --hamiltonian h.json   Z-type symmetries of a Hamiltonian
    anqs sample       -c run.toml --n 1000   emit sampling statistics as JSON lines

All outputs are machine readable (JSON / CSV).  The environment variable
ANQS_THREADS overrides the configured worker thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .bits import format_bits
from .config import ConfigError, RunConfig
from .ed import SectorBasis, ground_energy
from .engine import run as engine_run
from .fermion import hf_state, jordan_wigner, load_fcidump
from .masking import MaskingContext, PruneStrategy
from .network import ANQSModel, load_checkpoint
from .pauli import discover_z2, load_hamiltonian_json, mask_to_zstring
from .physicality import PhysicalityOracle, count_sector
from .sampler import sample_statistics
from .symmetry import MULTIPLICATIVE, SymmetryEnsemble, check_hamiltonian_compatibility


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def summary_payload(cfg: RunConfig, trace) -> dict:
    import math

    reached_any = math.isfinite(trace.min_energy)
    return {
        "min_energy": trace.min_energy if reached_any else None,
        "iteration_of_min": trace.iteration_of_min if reached_any else None,
        "iterations_run": trace.n_iterations,
        "aborted": trace.aborted,
        "abort_reason": trace.abort_reason,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "version": __version__,
    }


def cmd_run(args) -> int:
    cfg = RunConfig.load(args.config)
    engine_cfg = cfg.build_engine_config()
    if cfg.run["check_compatibility"]:
        check_hamiltonian_compatibility(engine_cfg.hamiltonian, engine_cfg.ensemble,
                                        seed=engine_cfg.seed)
    trace = engine_run(engine_cfg)
    summary = summary_payload(cfg, trace)
    if engine_cfg.output_dir is not None:
        path = os.path.join(engine_cfg.output_dir, "summary.json")
        with open(path, "w") as f:
            json.dump(summary, f, sort_keys=True, indent=1)
            f.write("\n")
    _emit(summary)
    return 1 if trace.aborted else 0


def cmd_ed(args) -> int:
    cfg = RunConfig.load(args.config)
    h, n_electrons = cfg.build_hamiltonian()
    ensemble = cfg.build_ensemble(h, n_electrons)
    energy = ground_energy(h, ensemble)
    _emit({
        "energy": energy,
        "sector_dimension": len(SectorBasis.from_ensemble(ensemble)),
    })
    return 0


def cmd_count_sector(args) -> int:
    cfg = RunConfig.load(args.config)
    h, n_electrons = cfg.build_hamiltonian()
    ensemble = cfg.build_ensemble(h, n_electrons)
    with_z2 = count_sector(ensemble)
    additive = [d for d in ensemble.descriptors if d.kind != MULTIPLICATIVE]
    if additive:
        refs = [r for d, r in zip(ensemble.descriptors, ensemble.s_ref)
                if d.kind != MULTIPLICATIVE]
        without_z2 = count_sector(SymmetryEnsemble(additive, tuple(refs)))
    else:
        without_z2 = 2**h.n_qubits
    _emit({"with_z2": with_z2, "without_z2": without_z2})
    return 0


def cmd_discover_z2(args) -> int:
    if (args.hamiltonian is None) == (args.fcidump is None):
        raise ConfigError("give exactly one of --hamiltonian or --fcidump")
    n_electrons = args.n_electrons
    if args.fcidump is not None:
        ints = load_fcidump(args.fcidump)
        h = jordan_wigner(ints)
        if n_electrons is None:
            n_electrons = ints.n_electrons
    else:
        h = load_hamiltonian_json(args.hamiltonian)
    masks = discover_z2(h)
    payload = {
        "n_qubits": h.n_qubits,
        "count": len(masks),
        "masks": [mask_to_zstring(m, h.n_qubits) for m in masks],
    }
    if n_electrons is not None:
        x_hf = hf_state(h.n_qubits, n_electrons)
        payload["hf_state"] = format_bits(x_hf, h.n_qubits)
        payload["hf_eigenvalues"] = [
            1 if bin(m & x_hf).count("1") % 2 == 0 else -1 for m in masks
        ]
    _emit(payload)
    return 0


def cmd_sample(args) -> int:
    cfg = RunConfig.load(args.config)
    h, n_electrons = cfg.build_hamiltonian()
    ensemble = cfg.build_ensemble(h, n_electrons)
    oracle = PhysicalityOracle(ensemble)
    ctx = MaskingContext(oracle, PruneStrategy.parse(cfg.strategy))
    if args.checkpoint:
        model = load_checkpoint(args.checkpoint)
        if model.n_qubits != h.n_qubits:
            raise ConfigError("checkpoint qubit count does not match the Hamiltonian")
    else:
        model = ANQSModel(h.n_qubits, hidden=int(cfg.network["hidden"]), seed=cfg.seed,
                          negative_slope=float(cfg.network["negative_slope"]))
    stats = sample_statistics(model, ctx, args.n,
                              np.random.SeedSequence((cfg.seed, 0x5A, 0)))
    for x, count in zip(stats.configurations, stats.counts):
        print(json.dumps({"x": format_bits(int(x), h.n_qubits), "n": int(count)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anqs",
        description="Symmetry-constrained autoregressive neural quantum state optimizer",
    )
    parser.add_argument("--version", action="version", version=f"anqs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="variational optimization from a TOML config")
    p_run.add_argument("-c", "--config", required=True)
    p_run.set_defaults(func=cmd_run)

    p_ed = sub.add_parser("ed", help="exact ground energy in the configured sector")
    p_ed.add_argument("-c", "--config", required=True)
    p_ed.set_defaults(func=cmd_ed)

    p_cs = sub.add_parser("count-sector", help="sector sizes with and without Z-strings")
    p_cs.add_argument("-c", "--config", required=True)
    p_cs.set_defaults(func=cmd_count_sector)

    p_z2 = sub.add_parser("discover-z2", help="Z-type symmetries of a Hamiltonian")
    p_z2.add_argument("--hamiltonian", help="Pauli-JSON Hamiltonian path")
    p_z2.add_argument("--fcidump", help="FCIDUMP path (encoded on the fly)")
    p_z2.add_argument("--n-electrons", type=int, default=None)
    p_z2.set_defaults(func=cmd_discover_z2)

    p_s = sub.add_parser("sample", help="emit sampling statistics as JSON lines")
    p_s.add_argument("-c", "--config", required=True)
    p_s.add_argument("--n", type=int, required=True, help="requested sample total")
    p_s.add_argument("--checkpoint", default=None, help="sample a trained model")
    p_s.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
