"""TOML run configuration: parsing, validation, object assembly.

A run file names exactly one Hamiltonian source (FCIDUMP path, Pauli-JSON
path, or a builtin model), the symmetry list, the pruning strategy, the
batch-size schedule and the optimizer/network settings.  Symmetries use
compact strings::

    symmetries = ["particle_number:2", "spin_projection:0", "z2:auto"]

``z2:auto`` discovers all independent Z-strings commuting with the
Hamiltonian and pins each one's eigenvalue on the reference determinant
(which requires the electron count); explicit forms ``z2:<IZ-string>`` and
``z2:<IZ-string>:<+1|-1>`` are also accepted, the former pinning on the
reference determinant as well.  Additive symmetries always carry their
target eigenvalue explicitly, which doubles as the override for systems
where the reference determinant lies in the wrong sector.
"""

from __future__ import annotations

import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .ed import build_heisenberg
from .engine import BatchSchedule, EngineConfig
from .fermion import hf_state, jordan_wigner, load_fcidump
from .masking import PruneStrategy
from .pauli import QubitHamiltonian, discover_z2, load_hamiltonian_json, zstring_to_mask
from .symmetry import (
    SymmetryDescriptor,
    SymmetryEnsemble,
    magnetization,
    particle_number,
    spin_projection,
    z2_descriptor,
)


class ConfigError(ValueError):
    pass


_HAMILTONIAN_SOURCES = ("fcidump", "pauli_json", "builtin")


@dataclass
class RunConfig:
    """Validated, normalized run settings (independent of file paths)."""

    hamiltonian: dict[str, Any]
    symmetries: list[str]
    strategy: str = "mu-0"
    seed: int = 0
    schedule: dict[str, Any] = field(default_factory=lambda: {"preset": "desk"})
    network: dict[str, Any] = field(default_factory=lambda: {"hidden": 64,
                                                             "negative_slope": -0.01})
    optimizer: dict[str, Any] = field(default_factory=lambda: {
        "learning_rate": 1e-3, "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8})
    run: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        sources = [k for k in _HAMILTONIAN_SOURCES if k in self.hamiltonian]
        if len(sources) != 1:
            raise ConfigError(
                f"exactly one Hamiltonian source of {_HAMILTONIAN_SOURCES} required, "
                f"got {sources or 'none'}"
            )
        if not self.symmetries:
            raise ConfigError("at least one symmetry is required")
        PruneStrategy.parse(self.strategy)
        self.run = {
            "iterations": 1000,
            "output_dir": None,
            "checkpoint_every": 0,
            "stop_below_energy": None,
            "max_empty_iterations": 100,
            "threads": 1,
            "check_compatibility": True,
            **self.run,
        }
        self.network = {"hidden": 64, "negative_slope": -0.01, **self.network}
        self.optimizer = {"learning_rate": 1e-3, "beta1": 0.9, "beta2": 0.999,
                          "epsilon": 1e-8, **self.optimizer}

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {"hamiltonian", "symmetries", "strategy", "seed", "schedule",
                 "network", "optimizer", "run"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if "hamiltonian" not in data or "symmetries" not in data:
            raise ConfigError("configuration requires 'hamiltonian' and 'symmetries'")
        return cls(**{k: data[k] for k in known if k in data})

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "rb") as f:
            data = tomllib.load(f)
        cfg = cls.from_dict(data)
        cfg._base_dir = os.path.dirname(os.path.abspath(path))
        return cfg

    def _resolve(self, p: str) -> str:
        # Hamiltonian paths are relative to the config file; output_dir is
        # left relative to the working directory.
        return p if os.path.isabs(p) else os.path.join(getattr(self, "_base_dir", "."), p)

    # -- object assembly ----------------------------------------------------

    def build_hamiltonian(self) -> tuple[QubitHamiltonian, int | None]:
        """Hamiltonian plus the electron count when one is known."""
        spec = self.hamiltonian
        n_electrons = spec.get("n_electrons")
        if "fcidump" in spec:
            ints = load_fcidump(self._resolve(spec["fcidump"]))
            if n_electrons is None:
                n_electrons = ints.n_electrons
            return jordan_wigner(ints), n_electrons
        if "pauli_json" in spec:
            return load_hamiltonian_json(self._resolve(spec["pauli_json"])), n_electrons
        name = spec["builtin"]
        if name == "heisenberg":
            return build_heisenberg(
                int(spec.get("n", 8)),
                float(spec.get("coupling", 1.0)),
                bool(spec.get("periodic", False)),
            ), n_electrons
        raise ConfigError(f"unknown builtin model {name!r}")

    def build_ensemble(self, h: QubitHamiltonian,
                       n_electrons: int | None) -> SymmetryEnsemble:
        n = h.n_qubits
        x_ref = hf_state(n, n_electrons) if n_electrons is not None else None
        descriptors: list[SymmetryDescriptor] = []
        for text in self.symmetries:
            descriptors.extend(self._parse_symmetry(text, h, n, x_ref))
        return SymmetryEnsemble(descriptors)

    def _parse_symmetry(self, text: str, h: QubitHamiltonian, n: int,
                        x_ref: int | None) -> list[SymmetryDescriptor]:
        parts = text.strip().split(":")
        kind = parts[0]
        if kind == "particle_number":
            if len(parts) != 2:
                raise ConfigError(f"{text!r}: expected particle_number:<count>")
            return [particle_number(n, int(parts[1]))]
        if kind == "spin_projection":
            if len(parts) != 2:
                raise ConfigError(f"{text!r}: expected spin_projection:<2*Sz>")
            return [spin_projection(n, ref=int(parts[1]))]
        if kind == "magnetization":
            if len(parts) != 2:
                raise ConfigError(f"{text!r}: expected magnetization:<2*M>")
            return [magnetization(n, ref=int(parts[1]))]
        if kind == "z2":
            if len(parts) == 2 and parts[1] == "auto":
                if x_ref is None:
                    raise ConfigError(
                        "z2:auto needs the electron count (FCIDUMP NELEC or "
                        "hamiltonian.n_electrons) to fix the reference determinant"
                    )
                out = []
                for mask in discover_z2(h):
                    d = z2_descriptor(mask, n)
                    d.ref = d.eval_full(x_ref)
                    out.append(d)
                if not out:
                    raise ConfigError("z2:auto found no Z-type symmetries")
                return out
            if len(parts) in (2, 3):
                mask = zstring_to_mask(parts[1])
                d = z2_descriptor(mask, n)
                if len(parts) == 3:
                    eig = int(parts[2])
                    if eig not in (1, -1):
                        raise ConfigError(f"{text!r}: Z-string eigenvalue must be +1 or -1")
                    d.ref = 0 if eig == 1 else 1
                else:
                    if x_ref is None:
                        raise ConfigError(
                            f"{text!r}: eigenvalue omitted and no reference determinant known"
                        )
                    d.ref = d.eval_full(x_ref)
                return [d]
        raise ConfigError(f"cannot parse symmetry {text!r}")

    def build_schedule(self) -> BatchSchedule:
        spec = self.schedule
        if "preset" in spec:
            preset = spec["preset"]
            if preset == "desk":
                return BatchSchedule.desk()
            if preset == "full":
                return BatchSchedule.full()
            raise ConfigError(f"unknown schedule preset {preset!r}")
        if "constant" in spec:
            return BatchSchedule.constant(int(spec["constant"]))
        if "steps" in spec:
            steps = [(int(b), int(ns)) for b, ns in spec["steps"]]
            tail = spec.get("tail")
            if tail is None:
                raise ConfigError("custom schedules need a 'tail' sample total")
            return BatchSchedule([*steps, (None, int(tail))])
        raise ConfigError("schedule needs 'preset', 'constant' or 'steps'+'tail'")

    def build_engine_config(self) -> EngineConfig:
        h, n_electrons = self.build_hamiltonian()
        ensemble = self.build_ensemble(h, n_electrons)
        threads = self.run["threads"]
        env = os.environ.get("ANQS_THREADS")
        if env:
            threads = int(env)
        return EngineConfig(
            hamiltonian=h,
            ensemble=ensemble,
            strategy=PruneStrategy.parse(self.strategy),
            iterations=int(self.run["iterations"]),
            seed=int(self.seed),
            hidden=int(self.network["hidden"]),
            negative_slope=float(self.network["negative_slope"]),
            schedule=self.build_schedule(),
            learning_rate=float(self.optimizer["learning_rate"]),
            beta1=float(self.optimizer["beta1"]),
            beta2=float(self.optimizer["beta2"]),
            epsilon=float(self.optimizer["epsilon"]),
            output_dir=self.run["output_dir"],
            checkpoint_every=int(self.run["checkpoint_every"]),
            stop_below_energy=self.run["stop_below_energy"],
            max_empty_iterations=int(self.run["max_empty_iterations"]),
            threads=int(threads),
        )


__all__ = ["ConfigError", "RunConfig"]
