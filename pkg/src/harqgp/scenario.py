"""Problem instances: HARQ scenario, fading family, power schedule, JSON I/O."""
from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import IO, Sequence

import jsonschema


class ParseError(ValueError):
    """Config text is not valid JSON or does not match the schema."""


class ValidationError(ValueError):
    """A scenario invariant is violated; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class HarqType(str, enum.Enum):
    INCREMENTAL_REDUNDANCY = "incremental_redundancy"
    CHASE_COMBINING = "chase_combining"


class FadingFamily(str, enum.Enum):
    RAYLEIGH = "rayleigh"
    NAKAGAMI = "nakagami"
    RICIAN = "rician"
    DIVERSITY = "diversity"


@dataclass(frozen=True)
class FadingModel:
    """Block fading law of the channel power gain |z|^2.

    Every family is a Gamma(shape, rate) law on the fading power:
    Rayleigh (1, 1), Nakagami-kappa (kappa, kappa), M-branch diversity (M, 1).
    Rician-mu is carried through the Nakagami moment match
    kappa = (mu+1)^2 / (2mu+1).
    """

    family: FadingFamily = FadingFamily.RAYLEIGH
    kappa: float | None = None
    mu: float | None = None
    antennas: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", FadingFamily(self.family))
        fam = self.family
        if fam is FadingFamily.NAKAGAMI:
            if self.kappa is None or not self.kappa > 0.5:
                raise ValidationError("fading.kappa", f"Nakagami needs kappa > 1/2, got {self.kappa}")
        elif fam is FadingFamily.RICIAN:
            if self.mu is None or not self.mu >= 0.0:
                raise ValidationError("fading.mu", f"Rician needs mu >= 0, got {self.mu}")
        elif fam is FadingFamily.DIVERSITY:
            if self.antennas is None or int(self.antennas) != self.antennas or self.antennas < 1:
                raise ValidationError("fading.antennas", f"diversity needs integer M >= 1, got {self.antennas}")
            object.__setattr__(self, "antennas", int(self.antennas))

    @classmethod
    def rayleigh(cls) -> "FadingModel":
        return cls(FadingFamily.RAYLEIGH)

    @classmethod
    def nakagami(cls, kappa: float) -> "FadingModel":
        return cls(FadingFamily.NAKAGAMI, kappa=float(kappa))

    @classmethod
    def rician(cls, mu: float) -> "FadingModel":
        return cls(FadingFamily.RICIAN, mu=float(mu))

    @classmethod
    def diversity(cls, antennas: int) -> "FadingModel":
        return cls(FadingFamily.DIVERSITY, antennas=antennas)

    @property
    def shape(self) -> float:
        """Gamma shape of the fading power; also the power exponent in the bounds."""
        fam = self.family
        if fam is FadingFamily.RAYLEIGH:
            return 1.0
        if fam is FadingFamily.NAKAGAMI:
            return float(self.kappa)
        if fam is FadingFamily.RICIAN:
            mu = float(self.mu)
            return (mu + 1.0) ** 2 / (2.0 * mu + 1.0)
        return float(self.antennas)

    @property
    def rate(self) -> float:
        """Gamma rate of the fading power (unit-mean per branch)."""
        if self.family in (FadingFamily.NAKAGAMI, FadingFamily.RICIAN):
            return self.shape
        return 1.0

    def to_dict(self) -> dict:
        d: dict = {"family": self.family.value}
        if self.family is FadingFamily.NAKAGAMI:
            d["kappa"] = self.kappa
        elif self.family is FadingFamily.RICIAN:
            d["mu"] = self.mu
        elif self.family is FadingFamily.DIVERSITY:
            d["antennas"] = self.antennas
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FadingModel":
        return cls(d["family"], kappa=d.get("kappa"), mu=d.get("mu"), antennas=d.get("antennas"))


@dataclass(frozen=True)
class Receiver:
    snr: float
    fading: FadingModel = field(default_factory=FadingModel.rayleigh)

    def __post_init__(self):
        if not self.snr > 0.0:
            raise ValidationError("receivers.snr", f"must be > 0, got {self.snr}")


@dataclass(frozen=True)
class PowerSchedule:
    powers: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))

    def __len__(self):
        return len(self.powers)

    def __getitem__(self, i):
        return self.powers[i]

    def __iter__(self):
        return iter(self.powers)

    @classmethod
    def uniform(cls, p: float, n: int) -> "PowerSchedule":
        return cls((p,) * n)

    def check(self, cfg: "ScenarioConfig") -> "PowerSchedule":
        if len(self.powers) != cfg.n_blocks:
            raise ValidationError("powers", f"expected {cfg.n_blocks} entries, got {len(self.powers)}")
        for p in self.powers:
            if not (0.0 < p <= cfg.max_power * (1.0 + 1e-12)):
                raise ValidationError("powers", f"each power must lie in (0, {cfg.max_power}], got {p}")
        return self


@dataclass(frozen=True)
class ScenarioConfig:
    n_blocks: int
    block_lengths: tuple[float, ...]
    snr: float
    max_power: float
    message_bits: float
    outage_target: float
    latency_target: float
    feedback_delay_mean: float = 0.0
    harq_type: HarqType = HarqType.INCREMENTAL_REDUNDANCY
    fading: FadingModel = field(default_factory=FadingModel.rayleigh)
    receivers: tuple[Receiver, ...] = ()
    grid_points: int = 4096

    def __post_init__(self):
        object.__setattr__(self, "block_lengths", tuple(float(x) for x in self.block_lengths))
        object.__setattr__(self, "harq_type", HarqType(self.harq_type))
        object.__setattr__(self, "receivers", tuple(self.receivers))
        self._validate()

    def _validate(self):
        if int(self.n_blocks) != self.n_blocks or self.n_blocks < 1:
            raise ValidationError("n_blocks", f"must be a positive integer, got {self.n_blocks}")
        if len(self.block_lengths) != self.n_blocks:
            raise ValidationError("block_lengths", f"need {self.n_blocks} entries, got {len(self.block_lengths)}")
        if any(not (x > 0.0 and math.isfinite(x)) for x in self.block_lengths):
            raise ValidationError("block_lengths", "all block lengths must be positive")
        if self.harq_type is HarqType.CHASE_COMBINING and len(set(self.block_lengths)) > 1:
            raise ValidationError("block_lengths", "Chase combining repeats the packet, lengths must be equal")
        for name in ("snr", "max_power", "message_bits"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValidationError(name, f"must be positive, got {v}")
        if not 0.0 < self.outage_target < 1.0:
            raise ValidationError("outage_target", f"must lie in (0, 1), got {self.outage_target}")
        if not self.latency_target >= self.block_lengths[0]:
            raise ValidationError("latency_target", "must be at least the first block length")
        if not self.feedback_delay_mean >= 0.0:
            raise ValidationError("feedback_delay_mean", f"must be >= 0, got {self.feedback_delay_mean}")
        if len(self.receivers) == 1:
            raise ValidationError("receivers", "broadcast needs K >= 2 receivers (leave empty for point-to-point)")
        if int(self.grid_points) != self.grid_points or self.grid_points < 1:
            raise ValidationError("grid_points", f"must be a positive integer, got {self.grid_points}")

    @property
    def is_broadcast(self) -> bool:
        return len(self.receivers) > 0

    @property
    def links(self) -> tuple[Receiver, ...]:
        """Receivers whose outage counts; the single link for point-to-point."""
        if self.receivers:
            return self.receivers
        return (Receiver(self.snr, self.fading),)

    @property
    def equal_blocks(self) -> bool:
        return len(set(self.block_lengths)) == 1

    def with_(self, **changes) -> "ScenarioConfig":
        """Copy with fields replaced; ``snr`` also rewrites every receiver's S."""
        if "snr" in changes and self.receivers and "receivers" not in changes:
            changes["receivers"] = tuple(replace(r, snr=changes["snr"]) for r in self.receivers)
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "n_blocks": self.n_blocks,
            "block_lengths": list(self.block_lengths),
            "snr": self.snr,
            "max_power": self.max_power,
            "message_bits": self.message_bits,
            "outage_target": self.outage_target,
            "latency_target": self.latency_target,
            "feedback_delay_mean": self.feedback_delay_mean,
            "harq_type": self.harq_type.value,
            "fading": self.fading.to_dict(),
            "receivers": [{"snr": r.snr, "fading": r.fading.to_dict()} for r in self.receivers],
            "grid_points": self.grid_points,
        }

    def digest(self) -> str:
        """sha256 of the canonical JSON form, for provenance lines in outputs."""
        return hashlib.sha256(dumps(self).encode()).hexdigest()


def _schema() -> dict:
    text = resources.files("harqgp").joinpath("scenario.schema.json").read_text()
    return json.loads(text)


def from_dict(d: dict) -> ScenarioConfig:
    try:
        jsonschema.validate(d, _schema())
    except jsonschema.ValidationError as exc:
        raise ParseError(f"config does not match schema: {exc.message}") from exc
    return ScenarioConfig(
        n_blocks=d["n_blocks"],
        block_lengths=d["block_lengths"],
        snr=d["snr"],
        max_power=d["max_power"],
        message_bits=d["message_bits"],
        outage_target=d["outage_target"],
        latency_target=d["latency_target"],
        feedback_delay_mean=d.get("feedback_delay_mean", 0.0),
        harq_type=d["harq_type"],
        fading=FadingModel.from_dict(d["fading"]),
        receivers=tuple(Receiver(r["snr"], FadingModel.from_dict(r["fading"])) for r in d.get("receivers", [])),
        grid_points=d.get("grid_points", 4096),
    )


def load_scenario(source: bytes | str | IO) -> ScenarioConfig:
    """Parse and validate a JSON scenario from bytes, text, or a readable stream."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        d = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ParseError("config must be a JSON object")
    return from_dict(d)


def dumps(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2)


def reference_scenario(snr: float, *, n_blocks: int = 5, antennas: int = 1,
                       receivers: int = 1, grid_points: int = 4096) -> ScenarioConfig:
    """The reference setting: N=5 unit blocks, t=4 bits, eps=1e-5, delta=3, P=1, no feedback delay.

    ``antennas > 1`` switches every link to M-branch diversity; ``receivers > 1``
    builds a broadcast instance of identical receivers sharing ``snr``.
    """
    if not snr > 0.0:
        raise ValueError(f"snr must be positive, got {snr}")
    fading = FadingModel.rayleigh() if antennas == 1 else FadingModel.diversity(antennas)
    rx: Sequence[Receiver] = ()
    if receivers > 1:
        rx = tuple(Receiver(snr, fading) for _ in range(receivers))
    return ScenarioConfig(
        n_blocks=n_blocks,
        block_lengths=(1.0,) * n_blocks,
        snr=float(snr),
        max_power=1.0,
        message_bits=4.0,
        outage_target=1e-5,
        latency_target=3.0,
        feedback_delay_mean=0.0,
        harq_type=HarqType.INCREMENTAL_REDUNDANCY,
        fading=fading,
        receivers=tuple(rx),
        grid_points=grid_points,
    )
