import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence

import numpy as np
import yaml

PRESET_DIR = Path(__file__).parent / "presets"


def load_preset(preset_name: str) -> Dict[str, Any]:
    """Load a YAML preset shipped with the package"""
    preset_path = PRESET_DIR / f"{preset_name}.yaml"
    with open(preset_path, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)


def load_yaml_file(file_path: str | Path) -> Dict[str, Any]:
    with open(file_path, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f) or {}


def to_jsonable(value: Any) -> Any:
    """Convert numpy containers and non-finite floats into JSON-safe values"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return None
        if value.is_integer() and abs(value) < 2**53:
            return int(value)
        return value
    return value


def save_json_result(data: Dict[str, Any], file_path: str | Path) -> None:
    """Save result data as JSON file; key order is fixed so reruns are byte-identical"""
    with open(file_path, 'w', encoding='utf-8') as f:
        json.dump(to_jsonable(data), f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def load_json_file(file_path: str | Path) -> Dict[str, Any]:
    with open(file_path, 'r', encoding='utf-8') as f:
        return json.load(f)


def bits_to_hex(bits: Sequence[int]) -> str:
    """Hex image of a bitstring, first bit most significant"""
    value = 0
    for bit in bits:
        value = (value << 1) | int(bit)
    width = max(1, math.ceil(len(bits) / 4))
    return f"{value:0{width}x}"


def hex_to_bits(text: str, n: int) -> np.ndarray:
    value = int(text, 16)
    return np.array([(value >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.int8)


def parse_bitstring(text: str) -> np.ndarray:
    """Accepts '0101...' or a comma separated list of 0/1"""
    cleaned = text.replace(",", "").replace(" ", "")
    if not cleaned or set(cleaned) - {"0", "1"}:
        raise ValueError(f"not a bitstring: {text!r}")
    return np.array([int(c) for c in cleaned], dtype=np.int8)


def derive_seed(*parts: int | str) -> int:
    """Deterministic 63-bit child seed from a root seed and labels"""
    words = []
    for part in parts:
        if isinstance(part, str):
            words.extend(part.encode("utf-8"))
        else:
            words.append(int(part) & 0xFFFFFFFF)
            words.append((int(part) >> 32) & 0xFFFFFFFF)
    state = np.random.SeedSequence(words).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & ((1 << 63) - 1)


def parse_float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def chunked(items: Sequence[Any], size: int) -> Iterable[Sequence[Any]]:
    for start in range(0, len(items), size):
        yield items[start:start + size]
