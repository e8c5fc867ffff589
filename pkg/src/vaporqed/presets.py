"""Named cavity presets loaded from a ``name.key = number`` config file."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from .core import CavityParams, ModeShape, from_paper_units
from .exceptions import ParameterDomainError

_LINE = re.compile(r"^\s*([A-Za-z_][\w]*)\.([A-Za-z_][\w]*)\s*=\s*(\S+)\s*$")
_REQUIRED = ("g", "kappa_ex", "kappa_i", "two_gamma", "T")

TABLE1_ROWS = ("cavity1a", "cavity1b", "cavity1c", "cavity2a", "cavity2b", "cavity3", "cavity4")
TABLE2_ROWS = ("cavity5", "cavity6", "cavity7")
COOLING_ROWS = ("zeeman", "mot", "dipole_trap")


@dataclass(frozen=True)
class Preset:
    name: str
    g: float
    kappa_ex: float
    kappa_i: float
    two_gamma: float
    T: float
    tau: Optional[float] = None
    case: int = 1
    reference: Mapping[str, float] = field(default_factory=dict)

    @property
    def params(self) -> CavityParams:
        return from_paper_units(self.g, self.kappa_ex, self.kappa_i, self.two_gamma)

    def mode(self) -> ModeShape:
        return ModeShape.sine_squared(self.T)

    def ref(self, key: str) -> Optional[float]:
        return self.reference.get(key)


def parse_presets(text: str) -> dict[str, Preset]:
    """Parse config text; raises :class:`ParameterDomainError` on malformed lines."""
    table: dict[str, dict[str, float]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _LINE.match(line)
        if match is None:
            raise ParameterDomainError(f"line {lineno}: expected `name.key = number`, got {raw!r}")
        name, key, value = match.groups()
        try:
            number = float(value)
        except ValueError as exc:
            raise ParameterDomainError(f"line {lineno}: {value!r} is not a number") from exc
        if not math.isfinite(number):
            raise ParameterDomainError(f"line {lineno}: value must be finite")
        table.setdefault(name, {})[key] = number
    table.pop("meta", None)

    presets = {}
    for name, entries in table.items():
        missing = [k for k in _REQUIRED if k not in entries]
        if missing:
            raise ParameterDomainError(f"preset {name!r} lacks keys {missing}")
        reference = {k[4:]: v for k, v in entries.items() if k.startswith("ref_")}
        presets[name] = Preset(
            name=name,
            g=entries["g"],
            kappa_ex=entries["kappa_ex"],
            kappa_i=entries["kappa_i"],
            two_gamma=entries["two_gamma"],
            T=entries["T"],
            tau=entries.get("tau"),
            case=int(entries.get("case", 1)),
            reference=reference,
        )
    return presets


@lru_cache(maxsize=None)
def _bundled() -> dict[str, Preset]:
    text = resources.files("vaporqed").joinpath("data/presets.cfg").read_text(encoding="utf-8")
    return parse_presets(text)


def load_presets(path: Optional[Path] = None) -> dict[str, Preset]:
    """Return bundled presets, or those in ``path`` if given."""
    if path is None:
        return dict(_bundled())
    return parse_presets(Path(path).read_text(encoding="utf-8"))


def get_preset(name: str) -> Preset:
    presets = _bundled()
    try:
        return presets[name]
    except KeyError:
        raise ParameterDomainError(f"unknown preset {name!r}; choose from {sorted(presets)}") from None


def preset_names() -> list[str]:
    return sorted(_bundled())
