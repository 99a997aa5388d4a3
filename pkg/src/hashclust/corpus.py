"""Dataset plumbing: metadata CSV ingestion, directory digesting, the
SHA-256 join with completeness filtering, family/month reporting, and a
synthetic PE corpus generator with planted family structure.

Generated files are inert: valid headers and import tables around random
payload bytes, no executable logic.
"""

from __future__ import annotations

import csv
import hashlib
import io
import struct
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from . import pe, ssdeep, tlsh
from .errors import (
    DegenerateInput,
    HashclustError,
    MalformedRow,
    MissingColumn,
    TooShort,
)

METADATA_COLUMNS = ("sha256", "family", "first_seen", "last_seen")
UNIFIED_COLUMNS = ("sha256", "family", "first_seen", "last_seen", "size",
                   "ssdeep", "tlsh", "imphash")

DROP_UNMATCHED = "unmatched"
DROP_TOO_SMALL = "too-small"
DROP_NO_IMPORTS = "no-import-table"
DROP_NO_TLSH = "no-tlsh"


@dataclass(frozen=True)
class SampleRecord:
    sha256: str
    family: str
    first_seen: date
    last_seen: date
    path: str | None = None


@dataclass(frozen=True)
class DigestRow:
    sha256: str
    size: int
    ssdeep: ssdeep.SsdeepDigest
    tlsh: tlsh.TlshDigest | None
    imphash: pe.ImpHash | None
    path: str | None = None


@dataclass(frozen=True)
class UnifiedRecord:
    sha256: str
    family: str
    first_seen: date
    last_seen: date
    size: int
    ssdeep: ssdeep.SsdeepDigest
    tlsh: tlsh.TlshDigest
    imphash: pe.ImpHash


def _is_sha256(text: str) -> bool:
    return len(text) == 64 and all(c in "0123456789abcdef" for c in text)


def ingest_metadata(data: bytes | str) -> list[SampleRecord]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.DictReader(io.StringIO(data))
    header = reader.fieldnames or []
    for col in METADATA_COLUMNS:
        if col not in header:
            raise MissingColumn(f"metadata CSV lacks column {col!r}")
    records = []
    for row_number, row in enumerate(reader, start=2):
        sha = (row["sha256"] or "").strip().lower()
        if not _is_sha256(sha):
            raise MalformedRow(row_number, f"bad sha256 {row['sha256']!r}")
        try:
            first_seen = date.fromisoformat(row["first_seen"].strip())
            last_seen = date.fromisoformat(row["last_seen"].strip())
        except (ValueError, AttributeError) as exc:
            raise MalformedRow(row_number, f"bad date: {exc}") from None
        if first_seen > last_seen:
            raise MalformedRow(row_number, "first_seen after last_seen")
        records.append(SampleRecord(sha, row["family"].strip(),
                                    first_seen, last_seen,
                                    path=row.get("path")))
    return records


def digest_bytes(data: bytes, path: str | None = None) -> DigestRow:
    """All digests of one sample; TLSH/IMPHash failures record as absent."""
    sha = hashlib.sha256(data).hexdigest()
    ssd = ssdeep.ssdeep_hash(data)
    try:
        tl = tlsh.tlsh_hash(data)
    except (TooShort, DegenerateInput):
        tl = None
    try:
        imp = pe.imphash(pe.parse_imports(data))
    except HashclustError:
        imp = None
    return DigestRow(sha, len(data), ssd, tl, imp, path=path)


def hash_directory(directory) -> tuple[list[DigestRow], list[tuple[str, str]]]:
    """Digest every regular file under `directory` (non-recursive).

    Returns rows sorted by sha256 plus a list of (path, error) pairs for
    files that could not be read or were empty.
    """
    rows = []
    errors = []
    for entry in sorted(Path(directory).iterdir()):
        if not entry.is_file():
            continue
        try:
            data = entry.read_bytes()
            rows.append(digest_bytes(data, path=str(entry)))
        except (OSError, HashclustError) as exc:
            errors.append((str(entry), str(exc)))
    rows.sort(key=lambda r: r.sha256)
    return rows, errors


def join_and_filter(metadata, digests) -> tuple[list[UnifiedRecord], dict[str, int]]:
    """Inner join on sha256, keeping only fully-digested records >= 50 bytes.

    Drops are counted by reason, never raised.
    """
    by_sha = {row.sha256: row for row in digests}
    drops = {DROP_UNMATCHED: 0, DROP_TOO_SMALL: 0,
             DROP_NO_IMPORTS: 0, DROP_NO_TLSH: 0}
    unified = []
    for rec in metadata:
        row = by_sha.get(rec.sha256)
        if row is None:
            drops[DROP_UNMATCHED] += 1
        elif row.size < tlsh.MIN_INPUT_LENGTH:
            drops[DROP_TOO_SMALL] += 1
        elif row.imphash is None:
            drops[DROP_NO_IMPORTS] += 1
        elif row.tlsh is None:
            drops[DROP_NO_TLSH] += 1
        else:
            unified.append(UnifiedRecord(
                rec.sha256, rec.family, rec.first_seen, rec.last_seen,
                row.size, row.ssdeep, row.tlsh, row.imphash))
    return unified, {k: v for k, v in drops.items() if v}


def family_distribution(records) -> dict[tuple[str, str], int]:
    """Counts keyed by (family, first_seen month "YYYY-MM"), sorted keys."""
    counts: dict[tuple[str, str], int] = {}
    for rec in records:
        key = (rec.family, rec.first_seen.strftime("%Y-%m"))
        counts[key] = counts.get(key, 0) + 1
    return dict(sorted(counts.items()))


# --- unified table persistence ---

def write_unified_csv(records, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(UNIFIED_COLUMNS)
    for r in records:
        writer.writerow([r.sha256, r.family, r.first_seen.isoformat(),
                         r.last_seen.isoformat(), r.size,
                         str(r.ssdeep), str(r.tlsh), str(r.imphash)])


def read_unified_csv(data: bytes | str) -> list[UnifiedRecord]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.DictReader(io.StringIO(data))
    for col in UNIFIED_COLUMNS:
        if col not in (reader.fieldnames or []):
            raise MissingColumn(f"unified CSV lacks column {col!r}")
    records = []
    for row_number, row in enumerate(reader, start=2):
        if not _is_sha256(row["sha256"]):
            raise MalformedRow(row_number, f"bad sha256 {row['sha256']!r}")
        records.append(UnifiedRecord(
            row["sha256"], row["family"],
            date.fromisoformat(row["first_seen"]),
            date.fromisoformat(row["last_seen"]),
            int(row["size"]),
            ssdeep.parse_digest(row["ssdeep"]),
            tlsh.parse_digest(row["tlsh"]),
            pe.ImpHash(bytes.fromhex(row["imphash"])),
        ))
    return records


# --- synthetic corpus ---

_IMPORT_POOL = [
    ("kernel32.dll", ["CreateFileW", "ReadFile", "WriteFile", "CloseHandle",
                      "GetProcAddress", "LoadLibraryA", "ExitProcess",
                      "VirtualAlloc", "GetModuleHandleA", "Sleep"]),
    ("user32.dll", ["MessageBoxA", "FindWindowA", "GetForegroundWindow",
                    "ShowWindow", "RegisterClassExA"]),
    ("advapi32.dll", ["RegOpenKeyExA", "RegSetValueExA", "RegCloseKey",
                      "CryptAcquireContextA", "OpenProcessToken"]),
    ("ws2_32.dll", ["WSAStartup", "socket", "connect", "send", "recv",
                    "closesocket"]),
    ("wininet.dll", ["InternetOpenA", "InternetOpenUrlA",
                     "InternetReadFile", "InternetCloseHandle"]),
    ("shell32.dll", ["ShellExecuteA", "SHGetFolderPathA"]),
    ("ole32.dll", ["CoInitialize", "CoCreateInstance", "CoUninitialize"]),
    ("crypt32.dll", ["CryptStringToBinaryA", "CertOpenStore"]),
]


@dataclass
class SynthConfig:
    families: int = 6
    samples_per_family: int = 20
    mutation_rate: float = 0.02
    import_profiles: list[list[tuple[str, list[str]]]] | None = None
    seed: int = 0
    payload_size: int = 6144

    def __post_init__(self):
        if self.families < 2:
            raise ValueError("need at least 2 families")
        if self.samples_per_family < 2:
            raise ValueError("need at least 2 samples per family")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        if self.payload_size < 4096:
            raise ValueError("payload_size must be at least 4 KiB")


def _align(value: int, boundary: int) -> int:
    return (value + boundary - 1) & ~(boundary - 1)


def build_pe(payload: bytes, imports=None, timestamp: int = 0,
             plus: bool = False) -> bytes:
    """Assemble a minimal PE image around `payload` (PE32, or PE32+ when
    `plus` is set).

    `imports` is a list of (dll_name, [function, ...]) pairs; None or an
    empty list yields a valid PE without an import directory.
    """
    file_align = 0x200
    sect_align = 0x1000
    text_rva = 0x1000
    text_raw = 0x200
    thunk_size = 8 if plus else 4
    text_size = _align(max(len(payload), 1), file_align)
    idata_rva = text_rva + _align(max(len(payload), 1), sect_align)
    idata_raw = text_raw + text_size

    idata = b""
    import_dir_size = 0
    if imports:
        ndlls = len(imports)
        desc_size = (ndlls + 1) * 20
        import_dir_size = desc_size
        thunk_offsets = []  # (ilt_off, iat_off) per dll
        cursor = desc_size
        for _, funcs in imports:
            ilt = cursor
            cursor += (len(funcs) + 1) * thunk_size
            iat = cursor
            cursor += (len(funcs) + 1) * thunk_size
            thunk_offsets.append((ilt, iat))
        names_off = cursor
        name_blob = bytearray()
        hint_rvas = []  # per dll: list of hint/name rvas
        dll_name_rvas = []
        for dll, funcs in imports:
            rvas = []
            for func in funcs:
                rvas.append(idata_rva + names_off + len(name_blob))
                name_blob += struct.pack("<H", 0) + func.encode("ascii") + b"\x00"
            hint_rvas.append(rvas)
            dll_name_rvas.append(idata_rva + names_off + len(name_blob))
            name_blob += dll.encode("ascii") + b"\x00"

        blob = bytearray(names_off) + name_blob
        thunk_fmt = "<Q" if plus else "<I"
        for i, (dll, funcs) in enumerate(imports):
            ilt, iat = thunk_offsets[i]
            struct.pack_into("<IIIII", blob, i * 20,
                             idata_rva + ilt, 0, 0,
                             dll_name_rvas[i], idata_rva + iat)
            for j, rva in enumerate(hint_rvas[i]):
                struct.pack_into(thunk_fmt, blob, ilt + thunk_size * j, rva)
                struct.pack_into(thunk_fmt, blob, iat + thunk_size * j, rva)
        idata = bytes(blob)

    idata_size = _align(max(len(idata), 1), file_align)
    image_size = idata_rva + _align(max(len(idata), 1), sect_align)

    dos = bytearray(0x40)
    dos[:2] = b"MZ"
    struct.pack_into("<I", dos, 0x3C, 0x40)

    opt_size = 0xF0 if plus else 0xE0
    coff = struct.pack("<HHIIIHH",
                       0x8664 if plus else 0x14C,
                       2,            # sections
                       timestamp,
                       0, 0,
                       opt_size,
                       0x0002 if plus else 0x0102)

    opt = bytearray(opt_size)
    struct.pack_into("<H", opt, 0, 0x20B if plus else 0x10B)
    struct.pack_into("<I", opt, 16, text_rva)      # entry point
    if plus:
        struct.pack_into("<Q", opt, 24, 0x140000000)   # image base
    else:
        struct.pack_into("<I", opt, 28, 0x400000)
    struct.pack_into("<I", opt, 32, sect_align)
    struct.pack_into("<I", opt, 36, file_align)
    struct.pack_into("<H", opt, 48, 4)             # major subsystem version
    struct.pack_into("<I", opt, 56, image_size)
    struct.pack_into("<I", opt, 60, 0x200)         # size of headers
    struct.pack_into("<H", opt, 68, 3)             # console subsystem
    n_dirs_off = 108 if plus else 92
    struct.pack_into("<I", opt, n_dirs_off, 16)    # data directory count
    if imports:
        struct.pack_into("<II", opt, n_dirs_off + 4 + 8 * 1,
                         idata_rva, import_dir_size)

    def section(name, vsize, vaddr, rsize, rptr, flags):
        return struct.pack("<8sIIIIIIHHI", name, vsize, vaddr, rsize, rptr,
                           0, 0, 0, 0, flags)

    sections = (
        section(b".text", max(len(payload), 1), text_rva, text_size,
                text_raw, 0x60000020) +
        section(b".idata", max(len(idata), 1), idata_rva, idata_size,
                idata_raw, 0xC0000040)
    )

    header = bytes(dos) + b"PE\x00\x00" + coff + bytes(opt) + sections
    out = bytearray(header.ljust(text_raw, b"\x00"))
    out += payload.ljust(text_size, b"\x00")
    out += idata.ljust(idata_size, b"\x00")
    return bytes(out)


def _default_profiles(families: int, rng) -> list[list[tuple[str, list[str]]]]:
    """One distinct dll/function template per family, deterministic."""
    profiles = []
    seen = set()
    while len(profiles) < families:
        n_dlls = int(rng.integers(2, min(5, len(_IMPORT_POOL)) + 1))
        picks = rng.choice(len(_IMPORT_POOL), size=n_dlls, replace=False)
        template = []
        for idx in picks:
            dll, funcs = _IMPORT_POOL[int(idx)]
            n_funcs = int(rng.integers(2, len(funcs) + 1))
            chosen = rng.choice(len(funcs), size=n_funcs, replace=False)
            template.append((dll, [funcs[int(i)] for i in chosen]))
        key = tuple((d, tuple(f)) for d, f in template)
        if key in seen:
            continue
        seen.add(key)
        profiles.append(template)
    return profiles


def generate_samples(cfg: SynthConfig) -> list[tuple[str, bytes, date]]:
    """Planted-family samples as (family_name, file_bytes, first_seen)."""
    rng = np.random.default_rng(cfg.seed)
    profiles = cfg.import_profiles or _default_profiles(cfg.families, rng)
    if len(profiles) < cfg.families:
        raise ValueError("fewer import profiles than families")
    epoch = date(2024, 1, 1)
    samples = []
    index = 0
    for fam in range(cfg.families):
        family = f"family{fam:02d}"
        base = rng.integers(0, 256, size=cfg.payload_size, dtype=np.uint8)
        for _ in range(cfg.samples_per_family):
            payload = base.copy()
            n_mut = int(round(cfg.mutation_rate * cfg.payload_size))
            if n_mut:
                pos = rng.choice(cfg.payload_size, size=n_mut, replace=False)
                payload[pos] = rng.integers(0, 256, size=n_mut, dtype=np.uint8)
            # Distinct timestamp keeps sha256 unique even at mutation rate 0.
            data = build_pe(payload.tobytes(), imports=profiles[fam],
                            timestamp=0x65000000 + index)
            first_seen = epoch + timedelta(days=int(rng.integers(0, 90)))
            samples.append((family, data, first_seen))
            index += 1
    return samples


def synth_corpus(cfg: SynthConfig, out_dir) -> list[SampleRecord]:
    """Write the synthetic corpus plus its ground-truth manifest.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for family, data, first_seen in generate_samples(cfg):
        sha = hashlib.sha256(data).hexdigest()
        path = out / f"{sha}.bin"
        path.write_bytes(data)
        records.append(SampleRecord(sha, family, first_seen, first_seen,
                                    path=str(path)))
    with open(out / "manifest.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METADATA_COLUMNS)
        for r in records:
            writer.writerow([r.sha256, r.family, r.first_seen.isoformat(),
                             r.last_seen.isoformat()])
    return records
