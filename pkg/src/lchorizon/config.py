"""Scenario files: INI sections with unit-tagged quantities.

Every physical value is written as ``<number> <unit>``.  In simulation units
the tag is ``sim``; in SI mode it is one of the units listed in ``UNITS`` for
the expected kind of quantity.  Counts and ratios carry no tag.
"""

from __future__ import annotations

import configparser
import re
from pathlib import Path

import numpy as np

from .errors import ConfigError

UNITS = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15},
    "rate": {"1/s": 1.0, "rad/s": 1.0, "1/ns": 1e9, "1/ps": 1e12},
    "speed": {"m/s": 1.0},
    "wavenumber": {"1/m": 1.0, "1/mm": 1e3, "1/um": 1e6},
    "inductance": {"H": 1.0, "uH": 1e-6, "nH": 1e-9, "pH": 1e-12},
    "capacitance": {"F": 1.0, "nF": 1e-9, "pF": 1e-12, "fF": 1e-15},
    "temperature": {"K": 1.0, "mK": 1e-3},
    "permittivity": {"F/m": 1.0},
    "permeability": {"H/m": 1.0},
    "density": {"1/m^3": 1.0},
    "current": {"A": 1.0, "mA": 1e-3, "uA": 1e-6},
    "charge": {"C": 1.0},
    "field": {"V/m": 1.0},
    "coupling": {"m/(V*s)": 1.0},
}

_MISSING = object()
_SECTION = re.compile(r"^\s*\[([^\]]+)\]")
_KEY = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


class Scenario:
    """Parsed scenario file with unit-checked accessors."""

    def __init__(self, path, units=None, seed=None):
        self.path = str(path)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read scenario {self.path}: {exc}") from exc
        self.parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            self.parser.read_string(text, source=self.path)
        except configparser.Error as exc:
            raise ConfigError(f"{self.path}: {exc}".replace("\n", " ")) from exc
        self._lines = {}
        section = None
        for i, line in enumerate(text.splitlines(), 1):
            m = _SECTION.match(line)
            if m:
                section = m.group(1).strip()
                self._lines[(section, None)] = i
                continue
            m = _KEY.match(line)
            if m and section is not None:
                self._lines[(section, m.group(1).strip().lower())] = i
        declared = self.text("scenario", "units", None)
        if declared is not None and declared not in ("sim", "si"):
            raise self.error("scenario", "units", f"expected 'sim' or 'si', got {declared!r}")
        if units is not None and declared is not None and units != declared:
            raise self.error("scenario", "units", f"file declares {declared!r} but --units {units!r} was given")
        self.units = units or declared or "sim"
        self.seed = int(seed) if seed is not None else self.integer("scenario", "seed", 0)

    # ------------------------------------------------------------ diagnostics

    def where(self, section, key=None) -> str:
        line = self._lines.get((section, key.lower() if key else None))
        loc = f"{self.path}:{line}" if line else self.path
        return f"{loc}: [{section}]" + (f" {key}" if key else "")

    def error(self, section, key, msg) -> ConfigError:
        return ConfigError(f"{self.where(section, key)}: {msg}")

    # ------------------------------------------------------------ accessors

    def has(self, section) -> bool:
        return self.parser.has_section(section)

    def require(self, section):
        if not self.has(section):
            raise ConfigError(f"{self.path}: missing section [{section}]")

    def _raw(self, section, key, default):
        if not self.parser.has_option(section, key):
            if default is _MISSING:
                if not self.has(section):
                    raise ConfigError(f"{self.path}: missing section [{section}]")
                raise self.error(section, key, "required field is missing")
            return None
        return self.parser.get(section, key).strip()

    def text(self, section, key, default=_MISSING):
        raw = self._raw(section, key, default)
        return default if raw is None else raw

    def number(self, section, key, default=_MISSING) -> float:
        raw = self._raw(section, key, default)
        if raw is None:
            return default
        try:
            val = float(raw)
        except ValueError:
            raise self.error(section, key, f"expected a plain number, got {raw!r}") from None
        if not np.isfinite(val):
            raise self.error(section, key, "value must be finite")
        return val

    def integer(self, section, key, default=_MISSING) -> int:
        raw = self._raw(section, key, default)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise self.error(section, key, f"expected an integer, got {raw!r}") from None

    def quantity(self, section, key, kind, default=_MISSING) -> float:
        """Value of a unit-tagged physical quantity, converted to SI or simulation units."""
        raw = self._raw(section, key, default)
        if raw is None:
            return default
        val, unit = self._split(section, key, raw)
        return val * self._factor(section, key, kind, unit)

    def quantities(self, section, key, kind, default=_MISSING):
        """Whitespace-separated list of numbers sharing one trailing unit tag."""
        raw = self._raw(section, key, default)
        if raw is None:
            return default
        parts = raw.split()
        if len(parts) < 2:
            raise self.error(section, key, "expected numbers followed by a unit tag")
        try:
            vals = np.array([float(p) for p in parts[:-1]])
        except ValueError:
            raise self.error(section, key, f"malformed number list {raw!r}") from None
        return vals * self._factor(section, key, kind, parts[-1])

    def _split(self, section, key, raw):
        parts = raw.split()
        if len(parts) != 2:
            raise self.error(section, key, f"expected '<number> <unit>', got {raw!r}")
        try:
            val = float(parts[0])
        except ValueError:
            raise self.error(section, key, f"malformed number {parts[0]!r}") from None
        if not np.isfinite(val):
            raise self.error(section, key, "value must be finite")
        return val, parts[1]

    def _factor(self, section, key, kind, unit):
        if self.units == "sim":
            if unit != "sim":
                raise self.error(section, key, f"simulation-unit scenario needs the 'sim' tag, got {unit!r}")
            return 1.0
        table = UNITS[kind]
        if unit not in table:
            raise self.error(section, key, f"unit {unit!r} is not a {kind} unit (use one of {sorted(table)})")
        return table[unit]
