"""Macroscopic record labels attached to branches of the global state."""
from __future__ import annotations

from dataclasses import dataclass

DETECTOR_VALUES = ("Cold", "Hot")
ARROW_VALUES = ("Left", "Right")
CAT_VALUES = ("SawL", "SawR", "EyesClosedL", "EyesClosedR")


@dataclass(frozen=True, order=True)
class MacroLabel:
    detector: str | None = None
    arrow: str | None = None
    cat: str | None = None

    def __post_init__(self):
        from .errors import ConfigError

        for value, allowed in (
            (self.detector, DETECTOR_VALUES),
            (self.arrow, ARROW_VALUES),
            (self.cat, CAT_VALUES),
        ):
            if value is not None and value not in allowed:
                raise ConfigError(f"label value {value!r} not in {allowed}")
        if self.cat is not None and self.arrow is None:
            raise ConfigError("a cat label requires an arrow label")

    def matches(self, query: MacroLabel) -> bool:
        """True when every field set on ``query`` agrees with this label."""
        return all(
            q is None or q == v
            for q, v in (
                (query.detector, self.detector),
                (query.arrow, self.arrow),
                (query.cat, self.cat),
            )
        )

    @property
    def text(self) -> str:
        parts = [p for p in (self.detector, self.arrow, self.cat) if p is not None]
        return "/".join(parts) if parts else "none"

    @classmethod
    def parse(cls, text: str) -> MacroLabel:
        if text == "none":
            return cls()
        fields: dict[str, str] = {}
        for part in text.split("/"):
            if part in DETECTOR_VALUES:
                fields["detector"] = part
            elif part in ARROW_VALUES:
                fields["arrow"] = part
            elif part in CAT_VALUES:
                fields["cat"] = part
            else:
                from .errors import ConfigError

                raise ConfigError(f"unknown label component {part!r}")
        return cls(**fields)

    def __str__(self) -> str:
        return self.text


COLD = MacroLabel("Cold")
HOT = MacroLabel("Hot")
