"""
Computes SHA-256 content hashes for cached artifacts and golden fixtures
"""
import hashlib
import logging
import os
from typing import Dict, List


def sha256_str(text: str) -> str:
    """
    Hex digest of the utf8 encoding of a string

    Params
    --
    text [str] content

    Returns
    --
    [str] 64 hexadecimal characters
    """
    return hashlib.sha256(text.encode("utf8")).hexdigest()


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def read_checksums(path: str) -> Dict[str, str]:
    """Reads a file in `sha256sum` format into {file name: digest}."""
    sums = {}
    with open(path, encoding="utf8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            digest, _, name = line.partition(" ")
            sums[name.strip().lstrip("*")] = digest
    return sums


def verify_checksums(path: str) -> List[str]:
    """
    Checks every file listed in a `sha256sum` file next to it

    Returns
    --
    [list] names of missing or modified files; empty when everything matches
    """
    log = logging.getLogger(__name__)
    base = os.path.dirname(os.path.abspath(path))
    bad = []
    for name, digest in sorted(read_checksums(path).items()):
        target = os.path.join(base, name)
        if not os.path.exists(target):
            log.error("Checksummed file %s is missing", name)
            bad.append(name)
        elif sha256_file(target) != digest:
            log.error("Checksum mismatch for %s", name)
            bad.append(name)
    return bad
