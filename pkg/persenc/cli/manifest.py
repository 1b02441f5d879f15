"""
Manifest files: named posets, maps, sets, encodings, modules, morphisms and
sample plans, plus the commands to run on them. References between entries are
by name and resolved lazily by a Workspace.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from persenc.cli import serialize
from persenc.config import DEFAULT_FIELD_CHAR, FieldConfig
from persenc.errors import ParseError, PersencError, UnresolvedReference
from persenc.geometry.encoding import Encoding, upset_encoding, validate_encoding
from persenc.geometry.staircase import CellSet, Grid
from persenc.modules.persistence import PfdModule
from persenc.modules.pipeline import EncodedModule, PhiSpec, encode_interval_module, encoded_direct_sum
from persenc.oracle.oracle import SamplePlan, plan_from_json
from persenc.order.poset import FinitePoset, MonotoneMap

logger = logging.getLogger(__name__)


class CommandSpec(BaseModel):
    command: str
    args: Dict[str, Any] = Field(default_factory=dict)


class Manifest(BaseModel):
    field_char: int = DEFAULT_FIELD_CHAR
    posets: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    maps: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    grids: Dict[str, List[List[Union[str, int]]]] = Field(default_factory=dict)
    sets: Dict[str, Any] = Field(default_factory=dict)
    encodings: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    modules: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    encoded: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    morphisms: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    plans: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    commands: List[CommandSpec] = Field(default_factory=list)

    @field_validator("field_char")
    @classmethod
    def _prime(cls, v: int) -> int:
        FieldConfig(v)
        return v


def load_manifest(path: Union[str, Path]) -> Manifest:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ParseError(f"Manifest not found: {path}", {"path": str(path)}) from e
    except json.JSONDecodeError as e:
        raise ParseError(f"Manifest is not valid JSON: {e.msg}", {"line": e.lineno, "column": e.colno}) from e
    return parse_manifest(raw)


def parse_manifest(raw: Any) -> Manifest:
    try:
        return Manifest.model_validate(raw)
    except ValidationError as e:
        raise ParseError("Manifest does not match the schema", {"errors": json.loads(e.json())}) from e


class Workspace:
    """Resolves manifest names to domain objects, building each at most once."""

    def __init__(self, manifest: Manifest, field_char: Optional[int] = None):
        self.manifest = manifest
        self.p = FieldConfig(field_char or manifest.field_char).p
        self._cache: Dict[tuple, Any] = {}

    def _section(self, kind: str) -> Dict[str, Any]:
        return getattr(self.manifest, kind)

    def _raw(self, kind: str, name: str) -> Any:
        section = self._section(kind)
        if name not in section:
            raise UnresolvedReference(f"No {kind[:-1]} named {name!r}", {"kind": kind, "name": name, "known": sorted(section)})
        return section[name]

    def _cached(self, kind: str, name: str, build) -> Any:
        key = (kind, name)
        if key not in self._cache:
            logger.debug("building %s %s", kind, name)
            raw = self._raw(kind, name)
            try:
                self._cache[key] = build(raw)
            except PersencError:
                raise
            except KeyError as e:
                raise ParseError(
                    f"{kind[:-1].capitalize()} {name!r} is missing {e.args[0]!r}", {"kind": kind, "name": name, "missing": e.args[0]}
                ) from e
            except (TypeError, ValueError) as e:
                raise ParseError(f"{kind[:-1].capitalize()} {name!r} is malformed: {e}", {"kind": kind, "name": name}) from e
        return self._cache[key]

    def default(self, kind: str) -> str:
        section = self._section(kind)
        if not section:
            raise UnresolvedReference(f"Manifest has no {kind}", {"kind": kind})
        return next(iter(section))

    def names(self, kind: str) -> List[str]:
        return list(self._section(kind))

    # --- resolvers ---

    def poset(self, name: str) -> FinitePoset:
        return self._cached("posets", name, serialize.poset_from_json)

    def map(self, name: str) -> MonotoneMap:
        return self._cached(
            "maps",
            name,
            lambda d: serialize.map_from_json(d, self.poset(d["source"]), self.poset(d["target"])),
        )

    def grid(self, name: str) -> Grid:
        return self._cached("grids", name, serialize.grid_from_json)

    def _grid_ref(self, ref: Any) -> Optional[Grid]:
        if ref is None:
            return None
        return self.grid(ref) if isinstance(ref, str) else serialize.grid_from_json(ref)

    def cellset(self, name: str) -> CellSet:
        def build(d: Any) -> CellSet:
            if isinstance(d, dict) and "expr" in d:
                return serialize.cellset_from_json(d["expr"], grid=self._grid_ref(d.get("grid")), dim=d.get("dim"))
            return serialize.cellset_from_json(d)

        return self._cached("sets", name, build)

    def set_or_expr(self, ref: Any) -> CellSet:
        if isinstance(ref, str):
            return self.cellset(ref)
        return serialize.cellset_from_json(ref)

    def encoding(self, name: str) -> Encoding:
        def build(d: Dict[str, Any]) -> Encoding:
            if "upset" in d:
                return upset_encoding(self.set_or_expr(d["upset"]))
            target = self.poset(d["poset"]) if isinstance(d.get("poset"), str) else serialize.poset_from_json(d["poset"])
            grid = serialize.grid_to_json(self.grid(d["grid"])) if isinstance(d.get("grid"), str) else d["grid"]
            return serialize.encoding_from_json({**d, "grid": grid}, target)

        return self._cached("encodings", name, build)

    def module(self, name: str) -> PfdModule:
        def build(d: Dict[str, Any]) -> PfdModule:
            ref = d.get("poset")
            if isinstance(ref, str):
                P = self.poset(ref)
            elif "encoding" in d:
                P = self.encoding(d["encoding"]).target
            else:
                P = serialize.poset_from_json(ref)
            return serialize.module_from_json(d, P, self.p)

        return self._cached("modules", name, build)

    def encoded(self, name: str) -> EncodedModule:
        def build(d: Dict[str, Any]) -> EncodedModule:
            if "interval" in d:
                spec = d["interval"]
                upper = self.set_or_expr(spec["upper"])
                lower = self.set_or_expr(spec["lower"]) if spec.get("lower") is not None else CellSet.empty(Grid.trivial(upper.grid.dim))
                return encode_interval_module(upper, lower, self.p)
            if "sum" in d:
                return encoded_direct_sum(*(self.encoded(n) for n in d["sum"]))
            e = self.encoding(d["encoding"])
            M = self.module(d["module"])
            _, dropped = validate_encoding(e)
            if dropped:
                raise ParseError(f"Encoding {d['encoding']!r} has elements with empty fibers", {"elements": [repr(x) for x in dropped]})
            return EncodedModule(e, M)

        return self._cached("encoded", name, build)

    def morphism(self, name: str) -> tuple[EncodedModule, EncodedModule, PhiSpec]:
        def build(d: Dict[str, Any]):
            a, b = self.encoded(d["source"]), self.encoded(d["target"])
            if d.get("identity"):
                spec = PhiSpec.identity()
            elif "hom" in d:
                spec = PhiSpec.from_hom(d["hom"])
            elif "components" in d:
                spec = PhiSpec.from_components(
                    {serialize.element_from_json(x): m for x, m in d["components"]}
                )
            else:
                raise ParseError(f"Morphism {name!r} needs 'identity', 'hom' or 'components'")
            return a, b, spec

        return self._cached("morphisms", name, build)

    def plan(self, name: str) -> SamplePlan:
        return self._cached("plans", name, plan_from_json)


def resolve_or_default(ws: Workspace, args: Dict[str, Any], key: str, kind: str) -> str:
    name = args.get(key)
    return name if name is not None else ws.default(kind)


__all__ = [
    "CommandSpec",
    "Manifest",
    "Workspace",
    "load_manifest",
    "parse_manifest",
    "resolve_or_default",
]
