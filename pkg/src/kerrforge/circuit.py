"""Cavities, superconducting devices and the coupling graph between them.

All frequencies are ordinary frequencies in GHz. A :class:`Circuit` is an
immutable value; every Hamiltonian, perturbative estimate and design in the
package is derived from one.

Device models
-------------
``TwoLevel``
    An ideal qubit, ``(w/2) sigma_z``.
``Duffing``
    A weakly anharmonic oscillator, ``w b^dag b + (chi/2) b^dag b^dag b b``.
    The level energies are ``w n + chi n (n - 1) / 2``, so ``chi`` is the
    anharmonicity ``E_2 - 2 E_1``.
``Multilevel``
    Arbitrary level energies with a symmetric matrix of relative transition
    weights (a fluxonium, for example).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import ConfigError

SCHEMA_VERSION = 1

#: g/|Delta| below this is classified as dispersive.
DISPERSIVE_RATIO = 0.15
#: g/|Delta| below this (and above DISPERSIVE_RATIO) is marginal.
MARGINAL_RATIO = 0.3
#: |Delta| >= RWA_FRACTION * (w_c + w_q) flags the rotating-wave approximation.
RWA_FRACTION = 0.2
#: Denominators smaller than this (GHz) count as degenerate.
POLE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class CavitySpec:
    label: str
    frequency: float
    fock_dim: int = 10

    def __post_init__(self):
        if not self.frequency > 0:
            raise ConfigError(f"cavity {self.label!r}: frequency must be positive")
        if int(self.fock_dim) != self.fock_dim or self.fock_dim < 2:
            raise ConfigError(f"cavity {self.label!r}: fock_dim must be an integer >= 2")
        object.__setattr__(self, "fock_dim", int(self.fock_dim))

    @property
    def dim(self) -> int:
        return self.fock_dim


@dataclass(frozen=True)
class TwoLevel:
    label: str
    frequency: float

    kind = "two_level"

    def __post_init__(self):
        if not self.frequency > 0:
            raise ConfigError(f"device {self.label!r}: frequency must be positive")

    @property
    def dim(self) -> int:
        return 2

    @property
    def level_energies(self) -> np.ndarray:
        return np.array([-self.frequency / 2, self.frequency / 2])

    @property
    def raising(self) -> np.ndarray:
        return np.array([[0.0, 0.0], [1.0, 0.0]])

    @property
    def excitations(self) -> np.ndarray:
        return np.arange(2)

    @property
    def truncated(self) -> bool:
        return False

    @property
    def counter_rotating(self) -> bool:
        return True


@dataclass(frozen=True)
class Duffing:
    label: str
    frequency: float
    anharmonicity: float
    levels: int = 4

    kind = "duffing"

    def __post_init__(self):
        if not self.frequency > 0:
            raise ConfigError(f"device {self.label!r}: frequency must be positive")
        if int(self.levels) != self.levels or self.levels < 3:
            raise ConfigError(f"device {self.label!r}: Duffing levels must be >= 3")
        if not math.isfinite(self.anharmonicity):
            raise ConfigError(f"device {self.label!r}: anharmonicity must be finite")
        object.__setattr__(self, "levels", int(self.levels))

    @property
    def dim(self) -> int:
        return self.levels

    @property
    def level_energies(self) -> np.ndarray:
        n = np.arange(self.levels, dtype=float)
        return self.frequency * n + 0.5 * self.anharmonicity * n * (n - 1)

    @property
    def raising(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.levels, dtype=float)), -1)

    @property
    def excitations(self) -> np.ndarray:
        return np.arange(self.levels)

    @property
    def truncated(self) -> bool:
        return True

    @property
    def counter_rotating(self) -> bool:
        return True


@dataclass(frozen=True)
class Multilevel:
    """Generic device given by its level energies and transition weights.

    ``coupling_weights[j][k]`` (symmetric, ``j != k``) scales the cavity
    coupling of the ``j <-> k`` transition. When omitted, only adjacent
    levels couple, with harmonic-ladder weights ``sqrt(j + 1)``.
    """

    label: str
    level_energies: tuple
    coupling_weights: tuple | None = None

    kind = "multilevel"

    def __post_init__(self):
        energies = tuple(float(e) for e in self.level_energies)
        if len(energies) < 2:
            raise ConfigError(f"device {self.label!r}: need at least two levels")
        if energies[0] != 0.0:
            raise ConfigError(f"device {self.label!r}: level_energies must start at 0")
        if any(b <= a for a, b in zip(energies, energies[1:])):
            raise ConfigError(f"device {self.label!r}: level_energies must be strictly increasing")
        object.__setattr__(self, "level_energies", energies)
        if self.coupling_weights is None:
            w = np.zeros((len(energies), len(energies)))
            for j in range(len(energies) - 1):
                w[j, j + 1] = w[j + 1, j] = math.sqrt(j + 1)
        else:
            w = np.array(self.coupling_weights, dtype=float)
            if w.shape != (len(energies),) * 2:
                raise ConfigError(f"device {self.label!r}: coupling_weights has wrong shape")
            if not np.all(np.isfinite(w)):
                raise ConfigError(f"device {self.label!r}: coupling_weights must be finite")
            if not np.allclose(w, w.T, atol=1e-12):
                raise ConfigError(f"device {self.label!r}: coupling_weights must be symmetric")
        object.__setattr__(self, "coupling_weights", tuple(tuple(row) for row in w))

    @property
    def frequency(self) -> float:
        return self.level_energies[1] - self.level_energies[0]

    @property
    def dim(self) -> int:
        return len(self.level_energies)

    @property
    def weights(self) -> np.ndarray:
        return np.array(self.coupling_weights)

    @property
    def raising(self) -> np.ndarray:
        # |k><j| for k > j carries weight lambda_jk
        return np.tril(self.weights, -1)

    @property
    def excitations(self) -> np.ndarray:
        return np.arange(self.dim)

    @property
    def nearest_neighbour(self) -> bool:
        w = self.weights
        far = np.abs(np.subtract.outer(np.arange(self.dim), np.arange(self.dim))) > 1
        return not np.any(w[far])

    @property
    def truncated(self) -> bool:
        return False

    @property
    def counter_rotating(self) -> bool:
        return False


DeviceSpec = Union[TwoLevel, Duffing, Multilevel]


@dataclass(frozen=True)
class Coupling:
    cavity: str
    device: str
    g: float

    def __post_init__(self):
        if not (self.g >= 0 and math.isfinite(self.g)):
            raise ConfigError(f"coupling {self.cavity}-{self.device}: strength must be >= 0")


@dataclass(frozen=True)
class Circuit:
    cavities: tuple = ()
    devices: tuple = ()
    couplings: tuple = ()
    rwa: bool = True

    def __post_init__(self):
        object.__setattr__(self, "cavities", tuple(self.cavities))
        object.__setattr__(self, "devices", tuple(self.devices))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        labels = [c.label for c in self.cavities] + [d.label for d in self.devices]
        dupes = {l for l in labels if labels.count(l) > 1}
        if dupes:
            raise ConfigError(f"duplicate labels: {sorted(dupes)}")
        cav = {c.label for c in self.cavities}
        dev = {d.label for d in self.devices}
        seen = set()
        for cp in self.couplings:
            if cp.cavity not in cav:
                if cp.cavity in dev:
                    raise ConfigError(f"coupling {cp.cavity}-{cp.device}: device-device couplings are not allowed")
                raise ConfigError(f"coupling references unknown cavity {cp.cavity!r}")
            if cp.device not in dev:
                if cp.device in cav:
                    raise ConfigError(f"coupling {cp.cavity}-{cp.device}: cavity-cavity couplings are not allowed")
                raise ConfigError(f"coupling references unknown device {cp.device!r}")
            key = (cp.cavity, cp.device)
            if key in seen:
                raise ConfigError(f"duplicate coupling {key}")
            seen.add(key)

    # lookups

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.cavities] + [d.label for d in self.devices]

    def cavity(self, label: str) -> CavitySpec:
        for c in self.cavities:
            if c.label == label:
                return c
        raise ConfigError(f"unknown cavity {label!r}")

    def device(self, label: str) -> DeviceSpec:
        for d in self.devices:
            if d.label == label:
                return d
        raise ConfigError(f"unknown device {label!r}")

    def coupling(self, cavity: str, device: str) -> float:
        for cp in self.couplings:
            if cp.cavity == cavity and cp.device == device:
                return cp.g
        return 0.0

    def couplings_of(self, label: str) -> list[Coupling]:
        return [cp for cp in self.couplings if label in (cp.cavity, cp.device)]

    # derived circuits

    def replace_device(self, label: str, **changes) -> "Circuit":
        devices = tuple(replace(d, **changes) if d.label == label else d for d in self.devices)
        self.device(label)
        return replace(self, devices=devices)

    def set_coupling(self, cavity: str, device: str, g: float) -> "Circuit":
        rest = [cp for cp in self.couplings if (cp.cavity, cp.device) != (cavity, device)]
        return replace(self, couplings=tuple(rest) + (Coupling(cavity, device, g),))

    def without_coupling(self, cavity: str, device: str) -> "Circuit":
        rest = tuple(cp for cp in self.couplings if (cp.cavity, cp.device) != (cavity, device))
        return replace(self, couplings=rest)

    def without_device(self, label: str) -> "Circuit":
        self.device(label)
        return replace(
            self,
            devices=tuple(d for d in self.devices if d.label != label),
            couplings=tuple(cp for cp in self.couplings if cp.device != label),
        )

    def with_fock_dims(self, fock_dim: int) -> "Circuit":
        return replace(self, cavities=tuple(replace(c, fock_dim=fock_dim) for c in self.cavities))

    def relabel(self, mapping: Mapping[str, str]) -> "Circuit":
        m = lambda l: mapping.get(l, l)  # noqa: E731
        return Circuit(
            cavities=tuple(replace(c, label=m(c.label)) for c in self.cavities),
            devices=tuple(replace(d, label=m(d.label)) for d in self.devices),
            couplings=tuple(Coupling(m(cp.cavity), m(cp.device), cp.g) for cp in self.couplings),
            rwa=self.rwa,
        )

    # serialization

    def to_dict(self) -> dict:
        return circuit_to_dict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Circuit":
        return circuit_from_dict(data)


def detuning(circuit: Circuit, cavity_label: str, device_label: str) -> float:
    """Cavity frequency minus the device's first transition frequency (GHz)."""
    return circuit.cavity(cavity_label).frequency - circuit.device(device_label).frequency


def default_fock_dim(alpha: complex) -> int:
    """Truncation that holds a coherent state of amplitude ``alpha``."""
    r = abs(alpha)
    return int(math.ceil(r**2 + 5 * r + 10))


# dispersive diagnostics

@dataclass(frozen=True)
class Diagnostic:
    cavity: str
    device: str
    g: float
    detuning: float
    ratio: float
    classification: str
    rwa_strained: bool = False
    warnings: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "cavity": self.cavity,
            "device": self.device,
            "g": self.g,
            "detuning": self.detuning,
            "ratio": self.ratio,
            "classification": self.classification,
            "rwa_strained": self.rwa_strained,
            "warnings": list(self.warnings),
        }


CLASSIFICATION_ORDER = ("dispersive", "marginal", "non_dispersive")


def classify_ratio(ratio: float) -> str:
    if ratio < DISPERSIVE_RATIO:
        return "dispersive"
    if ratio < MARGINAL_RATIO:
        return "marginal"
    return "non_dispersive"


def _transitions(device: DeviceSpec) -> list[tuple[float, float]]:
    """(transition frequency, relative weight) for every coupled upward transition."""
    if isinstance(device, Multilevel):
        e = device.level_energies
        w = device.weights
        return [
            (e[k] - e[j], abs(w[j, k]))
            for j in range(device.dim)
            for k in range(j + 1, device.dim)
            if w[j, k] != 0
        ]
    return [(device.frequency, 1.0)]


def validate_dispersive(circuit: Circuit) -> list[Diagnostic]:
    """Classify every coupling of ``circuit`` by its distance from resonance.

    Each coupling gets one :class:`Diagnostic`. The worst ratio
    ``g * weight / |Delta|`` over the device's coupled transitions decides the
    classification. Exact resonances and the fourth-order poles
    ``2 Delta - chi = 0`` (one cavity) and ``Delta_a + Delta_b - chi = 0``
    (a Duffing device shared by two cavities) are reported as warnings.
    """
    out = []
    for cp in circuit.couplings:
        cav = circuit.cavity(cp.cavity)
        dev = circuit.device(cp.device)
        warnings = []
        ratio = 0.0
        delta = cav.frequency - dev.frequency
        for freq, weight in _transitions(dev):
            d = cav.frequency - freq
            if abs(d) < POLE_TOLERANCE:
                warnings.append(f"resonance: cavity {cav.label} degenerate with a {dev.label} transition")
                ratio = math.inf if cp.g > 0 else ratio
            elif cp.g > 0:
                ratio = max(ratio, cp.g * weight / abs(d))
        if isinstance(dev, Duffing):
            if abs(2 * delta - dev.anharmonicity) < POLE_TOLERANCE:
                warnings.append("pole: 2*Delta - chi = 0")
            for other in circuit.couplings_of(dev.label):
                if other.cavity == cav.label:
                    continue
                d2 = circuit.cavity(other.cavity).frequency - dev.frequency
                if abs(delta + d2 - dev.anharmonicity) < POLE_TOLERANCE:
                    warnings.append(f"pole: Delta_({cav.label}) + Delta_({other.cavity}) - chi = 0")
        strained = abs(delta) >= RWA_FRACTION * (cav.frequency + dev.frequency)
        if cp.g == 0:
            cls = "dispersive"
            ratio = 0.0
        else:
            cls = classify_ratio(ratio)
        out.append(Diagnostic(cp.cavity, cp.device, cp.g, delta, ratio, cls, strained, tuple(warnings)))
    return out


# JSON schema

def _device_to_dict(d: DeviceSpec) -> dict:
    if isinstance(d, TwoLevel):
        return {"label": d.label, "kind": d.kind, "frequency": d.frequency}
    if isinstance(d, Duffing):
        return {
            "label": d.label,
            "kind": d.kind,
            "frequency": d.frequency,
            "anharmonicity": d.anharmonicity,
            "levels": d.levels,
        }
    return {
        "label": d.label,
        "kind": d.kind,
        "level_energies": list(d.level_energies),
        "coupling_weights": [list(r) for r in d.coupling_weights],
    }


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "rwa": circuit.rwa,
        "cavities": [
            {"label": c.label, "frequency": c.frequency, "fock_dim": c.fock_dim}
            for c in circuit.cavities
        ],
        "devices": [_device_to_dict(d) for d in circuit.devices],
        "couplings": [{"cavity": cp.cavity, "device": cp.device, "g": cp.g} for cp in circuit.couplings],
    }


def _require(entry: Mapping, key: str, where: str):
    try:
        return entry[key]
    except (KeyError, TypeError):
        raise ConfigError(f"{where}: missing field {key!r}") from None


def _device_from_dict(entry: Mapping) -> DeviceSpec:
    label = _require(entry, "label", "device")
    kind = entry.get("kind", "duffing")
    where = f"device {label!r}"
    try:
        if kind == "two_level":
            return TwoLevel(label, float(_require(entry, "frequency", where)))
        if kind == "duffing":
            return Duffing(
                label,
                float(_require(entry, "frequency", where)),
                float(_require(entry, "anharmonicity", where)),
                int(entry.get("levels", 4)),
            )
        if kind == "multilevel":
            weights = entry.get("coupling_weights")
            return Multilevel(
                label,
                tuple(_require(entry, "level_energies", where)),
                None if weights is None else tuple(tuple(r) for r in weights),
            )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown kind {kind!r}")


def circuit_from_dict(data: Mapping) -> Circuit:
    if not isinstance(data, Mapping):
        raise ConfigError("circuit config must be a JSON object")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}")
    try:
        cavities = [
            CavitySpec(
                _require(c, "label", "cavity"),
                float(_require(c, "frequency", "cavity")),
                int(c.get("fock_dim", 10)),
            )
            for c in data.get("cavities", [])
        ]
        couplings = [
            Coupling(
                _require(c, "cavity", "coupling"),
                _require(c, "device", "coupling"),
                float(_require(c, "g", "coupling")),
            )
            for c in data.get("couplings", [])
        ]
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    devices = [_device_from_dict(d) for d in data.get("devices", [])]
    return Circuit(cavities, devices, couplings, bool(data.get("rwa", True)))


def load_circuit(path: Union[str, Path]) -> Circuit:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return circuit_from_dict(data)


def dump_circuit(circuit: Circuit, path: Union[str, Path, None] = None, extra: Mapping | None = None) -> str:
    data = circuit_to_dict(circuit)
    if extra:
        data.update(extra)
    text = json.dumps(data, indent=2, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def iter_pairs(items: Iterable):
    items = list(items)
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            yield items[i], items[j]
