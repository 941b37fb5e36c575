"""Per-device randomized-measurement datasets."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..qsim import QuantumState, sample_bitstrings
from ..rng import GENERATOR_ID, make_rng
from .settings import MeasurementSetting


@dataclass
class RandMeasDataset:
    device_id: str
    state_label: str
    num_qubits: int
    settings: list[MeasurementSetting]
    counts: list[dict[str, int]]
    shots_per_setting: int
    provenance: dict = field(default_factory=dict)

    def validate(self) -> None:
        if len(self.settings) != len(self.counts):
            raise ValueError("one counts map per setting required")
        ids = [s.setting_id for s in self.settings]
        if len(set(ids)) != len(ids):
            raise ValueError("setting ids must be unique")
        for s in self.settings:
            if s.num_qubits != self.num_qubits:
                raise ValueError("setting width does not match qubit count")
        for c in self.counts:
            total = 0
            for bits, n in c.items():
                if len(bits) != self.num_qubits or set(bits) - {"0", "1"}:
                    raise ValueError(f"malformed bitstring {bits!r}")
                if n < 0:
                    raise ValueError("negative count")
                total += n
            if total != self.shots_per_setting:
                raise ValueError(
                    f"counts sum {total} != shots_per_setting {self.shots_per_setting}"
                )

    @property
    def n_settings(self) -> int:
        return len(self.settings)


def collect(
    state: QuantumState,
    settings: list[MeasurementSetting],
    shots_per_setting: int,
    seed: int,
    device_id: str = "device",
    state_label: str = "state",
) -> RandMeasDataset:
    """Rotate by each setting and record computational-basis counts."""
    if not settings:
        raise ValueError("settings must be non-empty")
    if shots_per_setting < 1:
        raise ValueError("need at least one shot per setting")
    counts = []
    for u, setting in enumerate(settings):
        rotated = state.rotated(setting.unitaries())
        counts.append(sample_bitstrings(rotated, shots_per_setting, make_rng(seed, "measure", u)))
    ds = RandMeasDataset(
        device_id=device_id,
        state_label=state_label,
        num_qubits=state.num_qubits,
        settings=list(settings),
        counts=counts,
        shots_per_setting=shots_per_setting,
        provenance={"seed": seed, "generator": GENERATOR_ID, "stream": "measure"},
    )
    ds.validate()
    return ds
