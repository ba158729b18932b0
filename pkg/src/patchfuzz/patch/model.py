"""Patches ⟨location, replacement statement⟩ and detour tables."""
from __future__ import annotations

import hashlib
from collections.abc import Mapping
from dataclasses import dataclass, field

from ..lang.ast import PATCHABLE, Decl, SourceLoc
from ..lang.validate import check_simple_stmt
from . import flat

MAX_LINEAGE = 0xFFFF


class UnpatchableLocation(ValueError):
    pass


class UnknownStmtId(ValueError):
    pass


class DuplicateDetour(ValueError):
    pass


def _digest(loc: SourceLoc, stmt) -> str:
    return hashlib.sha256(flat.encode(loc.stmt_id, 0, stmt)).hexdigest()


@dataclass(frozen=True)
class Patch:
    loc: SourceLoc
    stmt: object
    lineage: int = 0
    digest: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        if self.stmt.sid != self.loc.stmt_id:
            raise ValueError(f"statement id {self.stmt.sid} does not match location {self.loc.stmt_id}")
        if not 0 <= self.lineage <= MAX_LINEAGE:
            object.__setattr__(self, "lineage", max(0, min(self.lineage, MAX_LINEAGE)))
        object.__setattr__(self, "digest", _digest(self.loc, self.stmt))

    @property
    def sid(self) -> int:
        return self.loc.stmt_id

    def derive(self, stmt, steps: int = 1) -> "Patch":
        return Patch(self.loc, stmt, min(self.lineage + steps, MAX_LINEAGE))

    def __str__(self):
        from ..lang.printer import format_stmt
        return f"@{self.loc.stmt_id}: {format_stmt(self.stmt).strip()}"


def patch_findings(stmt, bytecode) -> list:
    """Reasons ``stmt`` cannot replace the statement with the same id."""
    sid = stmt.sid
    if sid not in bytecode.bindings:
        return [f"unknown statement id {sid}"]
    original = bytecode.program.stmt(sid)
    if not isinstance(original, PATCHABLE):
        return [f"statement {sid} is not patchable"]
    if type(stmt) is not type(original):
        return [f"kind {type(stmt).__name__} differs from {type(original).__name__}"]
    if isinstance(stmt, Decl) and (stmt.name != original.name or stmt.is_array != original.is_array):
        return ["declaration must keep its name and kind"]
    scope = bytecode.bindings[sid].types()
    return [f.message for f in check_simple_stmt(stmt, scope, bytecode.int_min, bytecode.int_max)]


def is_well_bounded(patch_or_stmt, bytecode) -> bool:
    stmt = getattr(patch_or_stmt, "stmt", patch_or_stmt)
    return not patch_findings(stmt, bytecode)


class DetourTable(Mapping):
    """StmtId -> replacement statement, at most one entry per id."""

    def __init__(self, patches=()):
        self._stmts = {}
        self.digests = {}
        for p in patches:
            self.add(p)

    def add(self, patch: Patch):
        if patch.sid in self._stmts:
            raise DuplicateDetour(f"statement {patch.sid} already detoured")
        self._stmts[patch.sid] = patch.stmt
        self.digests[patch.sid] = patch.digest

    def __getitem__(self, sid):
        return self._stmts[sid]

    def __iter__(self):
        return iter(self._stmts)

    def __len__(self):
        return len(self._stmts)


def build_detours(patch: Patch, bytecode=None) -> DetourTable:
    if not isinstance(patch.stmt, PATCHABLE):
        raise UnpatchableLocation(f"{type(patch.stmt).__name__} statements cannot be patched")
    if bytecode is not None:
        problems = patch_findings(patch.stmt, bytecode)
        if problems:
            raise UnpatchableLocation("; ".join(problems))
    return DetourTable([patch])


def default_seed_patches(program, locations) -> list:
    """⟨L, original statement at L⟩ for each location."""
    seeds = []
    for loc in locations:
        if not program.has_stmt(loc.stmt_id):
            raise UnpatchableLocation(f"no statement {loc.stmt_id}")
        stmt = program.stmt(loc.stmt_id)
        if not isinstance(stmt, PATCHABLE):
            raise UnpatchableLocation(f"statement {loc.stmt_id} is a {type(stmt).__name__}")
        seeds.append(Patch(SourceLoc(loc.stmt_id, program.function_of(loc.stmt_id)), stmt, 0))
    return seeds


def serialize_patch(patch: Patch) -> bytes:
    return flat.encode(patch.loc.stmt_id, patch.lineage, patch.stmt)


def flat_digest(data: bytes) -> str:
    """Digest of FlatPatch bytes; the lineage field does not take part."""
    data = bytearray(data)
    data[flat.LINEAGE_OFFSET:flat.LINEAGE_OFFSET + 2] = b"\0\0"
    return hashlib.sha256(bytes(data)).hexdigest()


def deserialize_patch(data: bytes, bytecode=None) -> Patch:
    """Inverse of serialize_patch.

    With ``bytecode`` the id must exist (UnknownStmtId) and the statement
    must be well-bounded there (FormatError otherwise).
    """
    sid, lineage, stmt = flat.decode(data)
    function = "main"
    if bytecode is not None:
        if sid not in bytecode.bindings:
            raise UnknownStmtId(f"statement {sid} not in program")
        problems = patch_findings(stmt, bytecode)
        if problems:
            raise flat.FormatError("; ".join(problems))
        function = bytecode.bindings[sid].function
    return Patch(SourceLoc(sid, function), stmt, lineage)


__all__ = [
    "DetourTable", "DuplicateDetour", "Patch", "UnknownStmtId",
    "UnpatchableLocation", "build_detours", "default_seed_patches", "deserialize_patch",
    "flat_digest", "is_well_bounded", "patch_findings", "serialize_patch",
]
