"""On-disk formats: binary sketches, stream files, matrices and DISJ instances.

Binary sketch layout (all little-endian)::

    magic   4s   b"OSSK"
    version u16
    algo    u8   see ALGO_TAGS
    n       u64
    p       f64
    eps     f64
    k       u32
    t       u32
    seed    u64
    payload      algorithm specific
    crc32   u32  over every preceding byte
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from io import StringIO
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .classic import CountMinSketch, CountSketch
from .core import INSERTION, MODELS, STRICT_TURNSTILE, HashFamily, StreamUpdate
from .detpq import DetPQSketch, IncoherentMatrix
from .noover import NoOverSketch
from .nounder import NoUnderSketch
from .protocol import NO, YES, DisjInstance

MAGIC = b"OSSK"
VERSION = 1
ALGO_TAGS = {"cm": 1, "cs": 2, "nounder": 3, "nounder-q": 4, "noover": 5, "detpq": 6}
TAG_NAMES = {v: k for k, v in ALGO_TAGS.items()}

_HEADER = struct.Struct("<4sHB")
_PARAMS = struct.Struct("<QddIIQ")
_FIELD = struct.Struct("<IId")


class FormatError(ValueError):
    """Malformed or corrupted input file."""


def _dtype_flag(a: np.ndarray) -> int:
    return 1 if a.dtype == np.float64 else 0


def _dtype_of(flag: int):
    if flag not in (0, 1):
        raise FormatError(f"bad counter dtype flag {flag}")
    return np.dtype("<f8") if flag else np.dtype("<i8")


def _eps_or_nan(eps) -> float:
    return float("nan") if eps is None else float(eps)


def dumps_sketch(sk) -> bytes:
    fam = getattr(sk, "family", None)
    if fam is not None and fam.pinned:
        raise ValueError("sketches with a pinned hash table cannot be serialized")
    parts: list[bytes] = []
    if isinstance(sk, NoUnderSketch):
        algo = "nounder-q" if sk.quantized else "nounder"
        parts.append(_PARAMS.pack(sk.n, sk.p, sk.eps, sk.k, sk.t, sk.seed))
        if sk.quantized:
            parts.append(struct.pack("<d", sk.quant_base))
            parts.append(sk.exponents.astype("<i4").tobytes())
        else:
            parts.append(struct.pack("<B", _dtype_flag(sk.counters)))
            parts.append(sk.counters.astype(_dtype_of(_dtype_flag(sk.counters))).tobytes())
    elif isinstance(sk, (CountMinSketch, CountSketch)):
        algo = sk.algo
        parts.append(_PARAMS.pack(sk.n, 1.0, _eps_or_nan(sk.eps), sk.k, sk.t, sk.seed))
        flag = _dtype_flag(sk.counters)
        parts.append(struct.pack("<B", flag))
        parts.append(sk.counters.astype(_dtype_of(flag)).tobytes())
    elif isinstance(sk, NoOverSketch):
        algo = "noover"
        mat = sk.matrix
        parts.append(_PARAMS.pack(sk.n, sk.p, sk.eps, sk.k, sk.t, sk.seed))
        parts.append(_FIELD.pack(mat.q, mat.d, mat.mu_target))
        flag = _dtype_flag(sk.counts)
        parts.append(struct.pack("<B", flag))
        parts.append(sk.mass.astype(_dtype_of(flag)).tobytes())
        parts.append(sk.counts.astype(_dtype_of(flag)).tobytes())
    elif isinstance(sk, DetPQSketch):
        algo = "detpq"
        mat = sk.matrix
        parts.append(_PARAMS.pack(mat.n, 1.0, mat.mu_target, mat.m, 1, 0))
        parts.append(_FIELD.pack(mat.q, mat.d, mat.mu_target))
        flag = _dtype_flag(sk.counts)
        dt = _dtype_of(flag)
        parts.append(struct.pack("<B", flag))
        parts.append(np.array([sk.mass], dtype=dt).tobytes())
        parts.append(sk.counts.astype(dt).tobytes())
    else:
        raise TypeError(f"cannot serialize {type(sk).__name__}")
    body = _HEADER.pack(MAGIC, VERSION, ALGO_TAGS[algo]) + b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def unpack(self, st: Union[struct.Struct, str]):
        st = struct.Struct(st) if isinstance(st, str) else st
        if self.pos + st.size > len(self.buf):
            raise FormatError("truncated sketch")
        out = st.unpack_from(self.buf, self.pos)
        self.pos += st.size
        return out

    def array(self, dtype, count: int) -> np.ndarray:
        size = np.dtype(dtype).itemsize * count
        if self.pos + size > len(self.buf):
            raise FormatError("truncated sketch")
        out = np.frombuffer(self.buf, dtype=dtype, count=count, offset=self.pos).copy()
        self.pos += size
        return out


def loads_sketch(data: bytes):
    if len(data) < _HEADER.size + 4:
        raise FormatError("file too short for a sketch")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise FormatError("checksum mismatch")
    rd = _Reader(body)
    magic, version, tag = rd.unpack(_HEADER)
    if magic != MAGIC:
        raise FormatError("not a sketch file (bad magic)")
    if version != VERSION:
        raise FormatError(f"unsupported sketch version {version}")
    if tag not in TAG_NAMES:
        raise FormatError(f"unknown algorithm tag {tag}")
    algo = TAG_NAMES[tag]
    n, p, eps, k, t, seed = rd.unpack(_PARAMS)
    eps_opt = None if math.isnan(eps) else eps

    if algo in ("cm", "cs"):
        cls = CountMinSketch if algo == "cm" else CountSketch
        sk = cls(n, k, t, seed, eps=eps_opt)
        (flag,) = rd.unpack("<B")
        sk.counters = rd.array(_dtype_of(flag), t * k).astype(np.float64 if flag else np.int64).reshape(t, k)
    elif algo == "nounder":
        sk = NoUnderSketch(n, p, eps, seed, k=k, t=t)
        (flag,) = rd.unpack("<B")
        sk.counters = rd.array(_dtype_of(flag), t * k).astype(np.float64 if flag else np.int64).reshape(t, k)
    elif algo == "nounder-q":
        from .nounder import exponent_values

        sk = NoUnderSketch(n, p, eps, seed, k=k, t=t)
        (base,) = rd.unpack("<d")
        e = rd.array("<i4", t * k).astype(np.int64).reshape(t, k)
        sk.quant_base = base
        sk.exponents = e
        sk.counters = exponent_values(e, base)
    elif algo == "noover":
        q, d, mu = rd.unpack(_FIELD)
        mat = IncoherentMatrix(max(n, 2), q, d, mu)
        sk = NoOverSketch(n, p, eps, seed, k=k, t=t, matrix=mat)
        (flag,) = rd.unpack("<B")
        dt = _dtype_of(flag)
        native = np.float64 if flag else np.int64
        sk.mass = rd.array(dt, t * k).astype(native).reshape(t, k)
        sk.counts = rd.array(dt, t * k * q * q).astype(native).reshape(t, k, q, q)
    else:
        q, d, mu = rd.unpack(_FIELD)
        mat = IncoherentMatrix(n, q, d, mu)
        (flag,) = rd.unpack("<B")
        dt = _dtype_of(flag)
        native = np.float64 if flag else np.int64
        mass = rd.array(dt, 1).astype(native)[0].item()
        counts = rd.array(dt, q * q).astype(native).reshape(q, q)
        sk = DetPQSketch(mat, counts, mass)
    if rd.pos != len(body):
        raise FormatError("trailing bytes after sketch payload")
    return sk


def save_sketch(sk, path) -> None:
    Path(path).write_bytes(dumps_sketch(sk))


def load_sketch(path):
    return loads_sketch(Path(path).read_bytes())


# stream files ---------------------------------------------------------------

def format_stream(n: int, updates: Iterable[StreamUpdate], model: str = INSERTION) -> str:
    if model not in MODELS:
        raise ValueError(f"unknown stream model {model!r}")
    lines = [f"# n={n} model={model}"]
    for u in updates:
        if not isinstance(u, StreamUpdate):
            u = StreamUpdate(*u)
        lines.append(f"{u.item} {u.delta}")
    return "\n".join(lines) + "\n"


def parse_stream(text: str) -> tuple[int, str, list[StreamUpdate]]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise FormatError("stream file must start with '# n=<n> model=<model>'")
    fields = dict(tok.split("=", 1) for tok in lines[0][1:].split() if "=" in tok)
    try:
        n = int(fields["n"])
        model = fields.get("model", STRICT_TURNSTILE)
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad stream header: {lines[0]!r}") from exc
    if model not in MODELS:
        raise FormatError(f"unknown stream model {model!r}")
    updates = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 'item delta'")
        try:
            u = StreamUpdate(int(parts[0]), int(parts[1]))
        except ValueError as exc:
            raise FormatError(f"line {lineno}: non-integer field") from exc
        try:
            u.check(n, model)
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
        updates.append(u)
    return n, model, updates


def read_stream(path):
    return parse_stream(Path(path).read_text(encoding="utf-8"))


def write_stream(path, n: int, updates, model: str = INSERTION) -> None:
    Path(path).write_text(format_stream(n, updates, model), encoding="utf-8")


def stream_from_vector(x) -> list[StreamUpdate]:
    return [StreamUpdate(int(i), int(c)) for i, c in enumerate(np.asarray(x)) if c]


# matrices and certificates ---------------------------------------------------

def format_matrix(A) -> str:
    buf = StringIO()
    np.savetxt(buf, np.atleast_2d(np.asarray(A, dtype=np.float64)), delimiter=",", fmt="%.17g")
    return buf.getvalue()


def parse_matrix(text: str) -> np.ndarray:
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise FormatError("empty matrix")
    try:
        A = np.array([[float(v) for v in ln.split(",")] for ln in rows])
    except ValueError as exc:
        raise FormatError("matrix entries must be decimal numbers") from exc
    if A.ndim != 2:
        raise FormatError("ragged matrix rows")
    if not np.all(np.isfinite(A)):
        raise FormatError("matrix has non-finite entries")
    return A


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text(encoding="utf-8"))


def write_matrix(path, A) -> None:
    Path(path).write_text(format_matrix(A), encoding="utf-8")


def format_records(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


# DISJ instances ---------------------------------------------------------------

def format_instance(inst: DisjInstance) -> str:
    lines = [f"{inst.n} {inst.k} {inst.l} {inst.case}"]
    lines += ["".join(str(int(b)) for b in row) for row in inst.X]
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> DisjInstance:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty instance file")
    head = lines[0].split()
    if len(head) != 4 or head[3] not in (YES, NO):
        raise FormatError("instance header must be 'n k l YES|NO'")
    n, k, l = (int(v) for v in head[:3])
    rows = lines[1:]
    if len(rows) != k or any(len(r) != n or set(r) - {"0", "1"} for r in rows):
        raise FormatError(f"expected {k} rows of {n} bits")
    X = np.array([[int(ch) for ch in r] for r in rows], dtype=np.int8)
    inst = DisjInstance(n, k, l, head[3], X)
    inst.validate()
    return inst
