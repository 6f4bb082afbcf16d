"""JSON case files: ``{"vars": [...], "f": "...", "r": 1, "h": "..." | "g": "..."}``."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .germ import CaseError, GermCase, build_g
from .poly import DimensionError, PolySyntaxError, parse_poly


class CaseFileError(ValueError):
    """Malformed or inconsistent case file."""


@dataclass
class CaseFile:
    vars: list
    f: str
    r: int
    h: Optional[str] = None
    g: Optional[str] = None
    id: str = ""
    radius: Optional[float] = None
    grid: Optional[int] = None
    flow: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict, default_id: str = "") -> "CaseFile":
        if not isinstance(data, dict):
            raise CaseFileError("case file must contain a JSON object")
        missing = [k for k in ("vars", "f", "r") if k not in data]
        if missing:
            raise CaseFileError(f"missing required field(s): {', '.join(missing)}")
        if "h" not in data and "g" not in data:
            raise CaseFileError("one of 'h' or 'g' is required")
        vars_ = data["vars"]
        if not isinstance(vars_, list) or not all(isinstance(v, str) for v in vars_) or not vars_:
            raise CaseFileError("'vars' must be a non-empty list of names")
        r = data["r"]
        if isinstance(r, bool) or not isinstance(r, int) or r < 1:
            raise CaseFileError("'r' must be a positive integer")
        for key in ("f", "h", "g"):
            if key in data and not isinstance(data[key], str):
                raise CaseFileError(f"'{key}' must be a polynomial string")
        flow = data.get("flow", {})
        if not isinstance(flow, dict):
            raise CaseFileError("'flow' must be an object")
        return cls(
            vars=vars_,
            f=data["f"],
            r=r,
            h=data.get("h"),
            g=data.get("g"),
            id=str(data.get("id", default_id)),
            radius=data.get("radius"),
            grid=data.get("grid"),
            flow=flow,
        )

    def to_case(self) -> GermCase:
        try:
            f = parse_poly(self.f, self.vars)
            h = parse_poly(self.h, self.vars) if self.h is not None else None
            g = parse_poly(self.g, self.vars) if self.g is not None else None
            if g is None:
                g = build_g(f, h, self.r)
            return GermCase(f=f, g=g, r=self.r, h=h, vars=tuple(self.vars), label=self.id)
        except PolySyntaxError as exc:
            raise CaseFileError(f"polynomial syntax error: {exc}") from exc
        except (CaseError, DimensionError, ValueError) as exc:
            raise CaseFileError(str(exc)) from exc


def load_json(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CaseFileError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseFileError(f"invalid JSON in {path}: {exc}") from exc


def load_case(path: str | Path) -> tuple[CaseFile, GermCase]:
    cf = CaseFile.from_dict(load_json(path), default_id=Path(path).stem)
    return cf, cf.to_case()
