"""
@file test_checksum.py
@Description: SHA-256 helpers and the fixture checksum file
@Author: Saito SDK developers
Copyright 2024
"""
import os
import shutil

from saito_sdk.checksum import read_checksums, sha256_file, sha256_str, verify_checksums
from saito_sdk.saito_message import FIXTURE_DIR

SUMS = os.path.join(FIXTURE_DIR, "SHA256SUMS")


def test_sha256_str():
    assert sha256_str("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert sha256_str("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


def test_sha256_file_matches_str(tmp_path):
    path = tmp_path / "x.poly"
    path.write_bytes(b"u6+u2^3\n")
    assert sha256_file(str(path)) == sha256_str("u6+u2^3\n")


def test_shipped_fixtures_verify():
    assert sorted(read_checksums(SUMS)) == ["E6.ini", "E7.ini", "E8.ini"]
    assert verify_checksums(SUMS) == []


def test_tampered_and_missing_files(tmp_path):
    for name in ("SHA256SUMS", "E6.ini", "E7.ini"):
        shutil.copy(os.path.join(FIXTURE_DIR, name), str(tmp_path / name))
    with open(str(tmp_path / "E6.ini"), "a", encoding="utf8") as fh:
        fh.write("\n# edited\n")
    assert verify_checksums(str(tmp_path / "SHA256SUMS")) == ["E6.ini", "E8.ini"]
