"""Similarity-hash digests and K-Means family clustering for PE corpora."""

__version__ = "0.1.0"

from .pe import ImpHash, ImportEntry, ImportTable, imphash, import_set, parse_imports
from .ssdeep import SsdeepDigest, ssdeep_compare, ssdeep_hash
from .tlsh import TlshDigest, tlsh_distance, tlsh_hash

__all__ = [
    "ImpHash",
    "ImportEntry",
    "ImportTable",
    "SsdeepDigest",
    "TlshDigest",
    "imphash",
    "import_set",
    "parse_imports",
    "ssdeep_compare",
    "ssdeep_hash",
    "tlsh_distance",
    "tlsh_hash",
    "__version__",
]
