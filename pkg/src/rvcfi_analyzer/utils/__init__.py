from __future__ import annotations

from .io import dump_json, read_jsonl, write_csv, write_failure, write_json, write_jsonl

__all__ = ["dump_json", "read_jsonl", "write_csv", "write_failure", "write_json", "write_jsonl"]
