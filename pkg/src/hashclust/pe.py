"""Minimal, defensive PE import-table parser and import hashing.

Only walks the pieces needed to recover the ordered import sequence:
MZ/PE headers, the optional header (PE32 and PE32+), the section table
for RVA translation, and the import directory. Every offset is
bounds-checked; hostile input raises typed errors, never crashes.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

from .errors import EmptyTable, NoImportTable, NotPe, TruncatedFile

_STRIP_EXTENSIONS = (".dll", ".ocx", ".sys")

_IMAGE_DIRECTORY_ENTRY_IMPORT = 1
_ORDINAL_FLAG32 = 0x80000000
_ORDINAL_FLAG64 = 0x8000000000000000


@dataclass(frozen=True)
class ImportEntry:
    dll: str
    symbol: str

    def joined(self) -> str:
        return f"{self.dll}.{self.symbol}"


@dataclass(frozen=True)
class ImportTable:
    entries: tuple[ImportEntry, ...]


@dataclass(frozen=True)
class ImpHash:
    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 16:
            raise ValueError("ImpHash digest must be 16 bytes")

    def __str__(self):
        return self.digest.hex()


def _u16(data: bytes, off: int) -> int:
    if off + 2 > len(data):
        raise TruncatedFile(f"u16 read at {off:#x} past end")
    return struct.unpack_from("<H", data, off)[0]


def _u32(data: bytes, off: int) -> int:
    if off + 4 > len(data):
        raise TruncatedFile(f"u32 read at {off:#x} past end")
    return struct.unpack_from("<I", data, off)[0]


def _u64(data: bytes, off: int) -> int:
    if off + 8 > len(data):
        raise TruncatedFile(f"u64 read at {off:#x} past end")
    return struct.unpack_from("<Q", data, off)[0]


def _cstring(data: bytes, off: int, limit: int = 256) -> str:
    if off >= len(data):
        raise TruncatedFile(f"string read at {off:#x} past end")
    end = data.find(b"\x00", off, off + limit)
    if end < 0:
        end = min(off + limit, len(data))
    return data[off:end].decode("latin-1")


def _normalize_dll(name: str) -> str:
    name = name.lower().replace(",", "")
    for ext in _STRIP_EXTENSIONS:
        if name.endswith(ext):
            return name[: -len(ext)]
    return name


def _normalize_symbol(name: str) -> str:
    return name.lower().replace(",", "")


class _Sections:
    """RVA to file-offset translation via the section table."""

    def __init__(self, spans):
        self.spans = spans  # (virt_addr, virt_size, raw_ptr, raw_size)

    def to_offset(self, rva: int) -> int:
        for virt_addr, virt_size, raw_ptr, raw_size in self.spans:
            span = max(virt_size, raw_size)
            if virt_addr <= rva < virt_addr + span:
                return raw_ptr + (rva - virt_addr)
        # Headers are mapped 1:1 before the first section.
        if self.spans and rva < min(s[0] for s in self.spans):
            return rva
        raise TruncatedFile(f"rva {rva:#x} maps to no section")


def parse_imports(data: bytes) -> ImportTable:
    if len(data) < 0x40 or data[:2] != b"MZ":
        raise NotPe("missing MZ magic")
    pe_off = _u32(data, 0x3C)
    if pe_off + 4 > len(data) or data[pe_off:pe_off + 4] != b"PE\x00\x00":
        raise NotPe("missing PE signature")

    coff = pe_off + 4
    n_sections = _u16(data, coff + 2)
    opt_size = _u16(data, coff + 16)
    opt = coff + 20
    if opt_size < 2:
        raise NotPe("optional header missing")
    magic = _u16(data, opt)
    if magic == 0x10B:  # PE32
        thunk_size = 4
        ordinal_flag = _ORDINAL_FLAG32
        n_dirs_off = opt + 92
    elif magic == 0x20B:  # PE32+
        thunk_size = 8
        ordinal_flag = _ORDINAL_FLAG64
        n_dirs_off = opt + 108
    else:
        raise NotPe(f"unknown optional-header magic {magic:#x}")

    n_dirs = _u32(data, n_dirs_off)
    if n_dirs <= _IMAGE_DIRECTORY_ENTRY_IMPORT:
        raise NoImportTable("no import data directory")
    dir_off = n_dirs_off + 4 + 8 * _IMAGE_DIRECTORY_ENTRY_IMPORT
    import_rva = _u32(data, dir_off)
    import_size = _u32(data, dir_off + 4)
    if import_rva == 0 or import_size == 0:
        raise NoImportTable("empty import data directory")

    sect_off = opt + opt_size
    spans = []
    for i in range(n_sections):
        base = sect_off + 40 * i
        if base + 40 > len(data):
            raise TruncatedFile("section table past end of file")
        virt_size = _u32(data, base + 8)
        virt_addr = _u32(data, base + 12)
        raw_size = _u32(data, base + 16)
        raw_ptr = _u32(data, base + 20)
        spans.append((virt_addr, virt_size, raw_ptr, raw_size))
    sections = _Sections(spans)

    entries: list[ImportEntry] = []
    desc = sections.to_offset(import_rva)
    while True:
        if desc + 20 > len(data):
            raise TruncatedFile("import descriptor past end of file")
        original_first_thunk = _u32(data, desc)
        name_rva = _u32(data, desc + 12)
        first_thunk = _u32(data, desc + 16)
        if original_first_thunk == 0 and name_rva == 0 and first_thunk == 0:
            break
        dll = _normalize_dll(_cstring(data, sections.to_offset(name_rva)))
        thunk_rva = original_first_thunk or first_thunk
        thunk = sections.to_offset(thunk_rva)
        while True:
            value = _u64(data, thunk) if thunk_size == 8 else _u32(data, thunk)
            if value == 0:
                break
            if value & ordinal_flag:
                symbol = f"ord{value & 0xFFFF}"
            else:
                name_off = sections.to_offset(value & 0x7FFFFFFF)
                symbol = _normalize_symbol(_cstring(data, name_off + 2))
            entries.append(ImportEntry(dll, symbol))
            thunk += thunk_size
        desc += 20

    if not entries:
        raise NoImportTable("import directory resolves to no entries")
    return ImportTable(tuple(entries))


def imphash(table: ImportTable) -> ImpHash:
    if not table.entries:
        raise EmptyTable("cannot hash an empty import table")
    joined = ",".join(e.joined() for e in table.entries)
    return ImpHash(hashlib.md5(joined.encode("ascii")).digest())


def import_set(table: ImportTable) -> set[str]:
    if not table.entries:
        raise EmptyTable("cannot build a set from an empty import table")
    return {e.joined() for e in table.entries}
