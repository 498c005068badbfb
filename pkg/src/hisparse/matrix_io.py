"""Plain-text matrix fixtures and scalar formatting.

Format: first line `rows cols field` with field R (real) or C (complex),
then row-major entries separated by whitespace. Complex entries are written
like `1.5-2.25i` (no spaces inside a number).
"""

import numpy as np

__all__ = ["parse_scalar", "format_scalar", "read_matrix", "write_matrix",
           "loads_matrix", "dumps_matrix"]


def parse_scalar(token):
    """A real float, or a complex number written with a trailing `i` part."""
    token = token.strip()
    if "i" in token or "j" in token:
        try:
            return complex(token.replace("i", "j"))
        except ValueError as exc:
            raise ValueError(f"bad complex entry {token!r}") from exc
    try:
        return float(token)
    except ValueError as exc:
        raise ValueError(f"bad real entry {token!r}") from exc


def format_scalar(value):
    if isinstance(value, complex) or np.iscomplexobj(value):
        z = complex(value)
        return f"{z.real!r}{z.imag:+}i"
    return repr(float(value))


def loads_matrix(text):
    lines = text.strip().splitlines()
    if not lines:
        raise ValueError("empty matrix text")
    head = lines[0].split()
    if len(head) != 3 or head[2] not in ("R", "C"):
        raise ValueError(
            f"header must be 'rows cols R|C', got {lines[0]!r}"
        )
    rows, cols = int(head[0]), int(head[1])
    tokens = " ".join(lines[1:]).split()
    if len(tokens) != rows * cols:
        raise ValueError(
            f"expected {rows * cols} entries, found {len(tokens)}"
        )
    vals = [parse_scalar(t) for t in tokens]
    dtype = np.complex128 if head[2] == "C" else np.float64
    return np.asarray(vals, dtype=dtype).reshape(rows, cols)


def dumps_matrix(A):
    A = np.asarray(A)
    field = "C" if np.iscomplexobj(A) else "R"
    lines = [f"{A.shape[0]} {A.shape[1]} {field}"]
    for row in A:
        lines.append(" ".join(format_scalar(v) for v in row))
    return "\n".join(lines) + "\n"


def read_matrix(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads_matrix(fh.read())


def write_matrix(path, A):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_matrix(A))
