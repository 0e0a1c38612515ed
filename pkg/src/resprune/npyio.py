"""Array file I/O and the validated container types the selector operates on.

File contract
-------------
Arrays travel as NPY version 1.0 files, restricted to what this package
actually produces and consumes:

* magic ``\\x93NUMPY``, version bytes ``\\x01\\x00``
* little-endian ``<H`` header length, ASCII dict header
* ``descr`` is ``'<f4'`` (canonical) or ``'<f8'`` (accepted on read)
* ``fortran_order`` is ``False``
* shape is 1-D or 2-D

Anything else is rejected with :class:`FormatError`.  The writer emits the
same bytes ``numpy.save`` would for a C-order ``float32`` array, including
the 64-byte header alignment, so files are interchangeable with plain numpy
tooling.  Storage precision is ``float32``; every in-memory container holds
``float64`` so downstream accumulation is done in double precision.

Selection results are serialized as JSON with a fixed field set (see
:func:`save_result`).
"""

import ast
import json
import struct
from dataclasses import dataclass

import numpy as np

_MAGIC = b"\x93NUMPY"
_VERSION = (1, 0)
_HEADER_ALIGN = 64
_SUPPORTED_DESCRS = ("<f4", "<f8")
_MAX_ELEMENTS = 2**32


class FormatError(ValueError):
    """An array file violates the NPY subset this package accepts."""


def _fail(name, reason):
    raise FormatError(f"{name}: {reason}")


def parse_npy_bytes(blob, name="<bytes>"):
    """Decode one NPY v1.0 payload from ``blob``, strictly.

    Args:
        blob: raw file contents.
        name: label used in error messages (usually the file path).

    Returns:
        A read-only ndarray in the stored dtype (float32 or float64),
        C-order, 1-D or 2-D.

    Raises:
        FormatError: on any deviation from the documented subset.
    """
    if len(blob) < 10:
        _fail(name, f"file too short for an NPY header ({len(blob)} bytes)")
    if blob[:6] != _MAGIC:
        _fail(name, "bad magic string, not an NPY file")
    version = (blob[6], blob[7])
    if version != _VERSION:
        _fail(name, f"unsupported NPY version {version[0]}.{version[1]}, only 1.0 is accepted")
    (header_len,) = struct.unpack("<H", blob[8:10])
    if len(blob) < 10 + header_len:
        _fail(name, "header length field exceeds file size")
    try:
        header = blob[10 : 10 + header_len].decode("ascii")
    except UnicodeDecodeError:
        _fail(name, "header is not ASCII")
    if not header.endswith("\n"):
        _fail(name, "header is not newline-terminated")
    try:
        meta = ast.literal_eval(header)
    except (ValueError, SyntaxError):
        _fail(name, "header is not a Python dict literal")
    if not isinstance(meta, dict) or set(meta) != {"descr", "fortran_order", "shape"}:
        _fail(name, "header must be a dict with exactly descr, fortran_order, shape")
    descr = meta["descr"]
    if descr not in _SUPPORTED_DESCRS:
        _fail(name, f"unsupported dtype descr {descr!r}, expected one of {_SUPPORTED_DESCRS}")
    if meta["fortran_order"] is not False:
        _fail(name, "fortran_order must be False, arrays are C-order")
    shape = meta["shape"]
    if not isinstance(shape, tuple) or not all(isinstance(s, int) and s >= 0 for s in shape):
        _fail(name, "shape must be a tuple of non-negative ints")
    if len(shape) not in (1, 2):
        _fail(name, f"payload must be 1-D or 2-D, got {len(shape)}-D")
    count = 1
    for extent in shape:
        count *= extent
    if count > _MAX_ELEMENTS:
        _fail(name, f"element count {count} exceeds the supported limit")
    dtype = np.dtype(descr)
    payload = blob[10 + header_len :]
    expected = count * dtype.itemsize
    if len(payload) != expected:
        _fail(name, f"payload is {len(payload)} bytes, header implies {expected}")
    array = np.frombuffer(payload, dtype=dtype).reshape(shape)
    return array


def read_npy(path):
    """Read an NPY v1.0 file from ``path`` via :func:`parse_npy_bytes`."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read array file {path}: {exc}") from exc
    return parse_npy_bytes(blob, name=str(path))


def _header_bytes(shape, descr):
    # Mirror numpy's writer: sorted keys, one trailing ", " per entry, the
    # whole header space-padded plus final newline to a 64-byte boundary.
    meta = {"descr": descr, "fortran_order": False, "shape": shape}
    body = "{" + "".join(f"'{key}': {meta[key]!r}, " for key in sorted(meta)) + "}"
    encoded = body.encode("ascii")
    raw_len = len(encoded) + 1
    pad = _HEADER_ALIGN - ((10 + raw_len) % _HEADER_ALIGN)
    return encoded + b" " * pad + b"\n"


def write_npy(path, array):
    """Write ``array`` to ``path`` as NPY v1.0, ``<f4``, C-order.

    The output is byte-identical to ``numpy.save`` of the equivalent
    float32 array.  Raises ``FormatError`` for non-1-D/2-D input and for
    values that are not finite after the float32 cast.
    """
    arr = np.ascontiguousarray(np.asarray(array), dtype="<f4")
    if arr.ndim not in (1, 2):
        raise FormatError(f"{path}: only 1-D and 2-D arrays are written, got {arr.ndim}-D")
    if not np.isfinite(arr).all():
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise FormatError(f"{path}: non-finite value at index {tuple(int(i) for i in bad)}")
    header = _header_bytes(arr.shape, "<f4")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(bytes(_VERSION))
        fh.write(struct.pack("<H", len(header)))
        fh.write(header)
        fh.write(arr.tobytes(order="C"))


def _check_finite(data, name):
    mask = np.isfinite(data)
    if not mask.all():
        bad = np.argwhere(~mask)[0]
        coords = tuple(int(i) for i in bad)
        raise FormatError(f"{name}: non-finite value at index {coords}")


def _as_readonly_f64(data):
    out = np.ascontiguousarray(data, dtype=np.float64)
    if out is data:
        out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class TokenMatrix:
    """Row-major stack of token embeddings, one row per token.

    ``grid`` optionally records the (rows, cols) spatial layout of the
    tokens; when present the product must equal the row count.  The held
    array is float64 and marked read-only.
    """

    data: np.ndarray
    grid: tuple | None = None

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise FormatError(f"token matrix must be 2-D, got {arr.ndim}-D")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise FormatError(f"token matrix must be non-empty, got shape {arr.shape}")
        _check_finite(arr, "token matrix")
        object.__setattr__(self, "data", _as_readonly_f64(arr))
        if self.grid is not None:
            rows, cols = self.grid
            if rows < 1 or cols < 1 or rows * cols != arr.shape[0]:
                raise FormatError(
                    f"grid {rows}x{cols} does not tile {arr.shape[0]} tokens"
                )
            object.__setattr__(self, "grid", (int(rows), int(cols)))

    @property
    def count(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class TextMatrix:
    """Stack of text-side embeddings; may be empty (zero rows).

    ``keep_mask`` optionally marks which rows participate in relevance
    scoring; masked-out rows are ignored by every consumer.
    """

    data: np.ndarray
    keep_mask: np.ndarray | None = None

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise FormatError(f"text matrix must be 2-D, got {arr.ndim}-D")
        _check_finite(arr, "text matrix")
        object.__setattr__(self, "data", _as_readonly_f64(arr))
        if self.keep_mask is not None:
            mask = np.asarray(self.keep_mask, dtype=bool)
            if mask.shape != (arr.shape[0],):
                raise FormatError(
                    f"keep mask length {mask.shape} does not match {arr.shape[0]} text rows"
                )
            mask = mask.copy()
            mask.flags.writeable = False
            object.__setattr__(self, "keep_mask", mask)

    @property
    def count(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]

    def effective_rows(self):
        """Rows that survive the keep mask (all rows when no mask is set)."""
        if self.keep_mask is None:
            return self.data
        return self.data[self.keep_mask]


@dataclass(frozen=True)
class ScoreVector:
    """Per-token external scores, e.g. attention mass from an upstream model."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 1:
            raise FormatError(f"score vector must be 1-D, got {arr.ndim}-D")
        if arr.shape[0] < 1:
            raise FormatError("score vector must be non-empty")
        _check_finite(arr, "score vector")
        object.__setattr__(self, "data", _as_readonly_f64(arr))

    @property
    def count(self):
        return self.data.shape[0]


def load_token_matrix(path, grid=None):
    """Load a 2-D NPY file as a :class:`TokenMatrix`."""
    arr = read_npy(path)
    if arr.ndim != 2:
        raise FormatError(f"{path}: token matrix must be 2-D, got {arr.ndim}-D")
    try:
        return TokenMatrix(arr, grid=grid)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def load_text_matrix(path, keep_mask=None):
    """Load a 2-D NPY file as a :class:`TextMatrix`."""
    arr = read_npy(path)
    if arr.ndim != 2:
        raise FormatError(f"{path}: text matrix must be 2-D, got {arr.ndim}-D")
    try:
        return TextMatrix(arr, keep_mask=keep_mask)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def load_score_vector(path):
    """Load a 1-D NPY file as a :class:`ScoreVector`."""
    arr = read_npy(path)
    if arr.ndim != 1:
        raise FormatError(f"{path}: score vector must be 1-D, got {arr.ndim}-D")
    try:
        return ScoreVector(arr)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def load_keep_mask(path):
    """Read a row mask file: one ``0`` or ``1`` per line, blanks ignored.

    Returns a boolean ndarray aligned with the text-matrix rows.
    """
    values = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            token = line.strip()
            if not token:
                continue
            if token not in ("0", "1"):
                raise FormatError(f"{path}:{lineno}: expected 0 or 1, got {token!r}")
            values.append(token == "1")
    return np.array(values, dtype=bool)


_RESULT_FIELDS = ("indices", "raw_energy", "gated_energy", "weights", "recon_error", "config")


def result_to_json(result):
    """Serialize a selection result (or its dict form) to a JSON string."""
    payload = result.as_dict() if hasattr(result, "as_dict") else dict(result)
    missing = [key for key in _RESULT_FIELDS if key not in payload]
    if missing:
        raise ValueError(f"result payload is missing fields: {missing}")
    return json.dumps(payload, indent=2) + "\n"


def save_result(result, path):
    """Write a selection result as JSON with the fixed field set."""
    text = result_to_json(result)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)


def load_result(path):
    """Read back a result JSON file, checking the field set is intact."""
    with open(path, "r", encoding="ascii") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise FormatError(f"{path}: result file must hold a JSON object")
    missing = [key for key in _RESULT_FIELDS if key not in payload]
    if missing:
        raise FormatError(f"{path}: result file is missing fields: {missing}")
    return payload
