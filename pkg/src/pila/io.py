"""Serialization: JSON states, the state-spec mini-grammar and run configuration files."""
from __future__ import annotations

import hashlib
import json
import re
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .errors import InvalidArgument, TruncationWarning
from .fock import FockState, StateSpec


class ParseError(InvalidArgument):
    """Malformed textual input; ``position`` is a 0-based character offset."""

    def __init__(self, text, position, expected):
        self.text = text
        self.position = position
        self.expected = expected
        pointer = " " * position + "^"
        super().__init__(f"at position {position}: expected {expected}\n  {text}\n  {pointer}")


# JSON states ---------------------------------------------------------------------


def state_to_dict(s: FockState) -> dict:
    return {
        "cutoff": s.cutoff,
        "rho_re": s.rho.real.tolist(),
        "rho_im": s.rho.imag.tolist(),
        "trace_deficit": s.trace_deficit,
        "regular_order": s.regular_order,
    }


def state_from_dict(d: dict) -> FockState:
    try:
        re_part = np.asarray(d["rho_re"], dtype=float)
        im_part = np.asarray(d["rho_im"], dtype=float)
        cutoff = int(d["cutoff"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgument(f"malformed state record: {exc}") from exc
    if re_part.shape != (cutoff + 1, cutoff + 1) or im_part.shape != re_part.shape:
        raise InvalidArgument(f"matrix shape {re_part.shape} does not match cutoff {cutoff}")
    order = float(d.get("regular_order", 0.0))
    return FockState(re_part + 1j * im_part, order)


def dump_state(s: FockState) -> str:
    return json.dumps(state_to_dict(s), allow_nan=False)


def save_state(s: FockState, path) -> None:
    with open(path, "w") as fh:
        fh.write(dump_state(s))


def load_state(path) -> FockState:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.doc, exc.pos, f"valid JSON ({exc.msg})") from exc
    return state_from_dict(d)


# State-spec mini-grammar --------------------------------------------------------------
#
#   spec     := family ":" params
#   fock     := INT
#   coherent := COMPLEX
#   cat      := COMPLEX [":" ("odd" | "even")]
#   squeezed := REAL
#   thermal  := REAL
#   COMPLEX  := REAL [("+" | "-") UREAL "i"] | REAL "i"

_REAL = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_UREAL = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_INT = re.compile(r"\d+")
_FAMILY = re.compile(r"[a-z]+")


class _Scanner:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def match(self, pattern, expected):
        m = pattern.match(self.text, self.pos)
        if not m:
            raise ParseError(self.text, self.pos, expected)
        self.pos = m.end()
        return m.group(0)

    def peek(self, s):
        return self.text.startswith(s, self.pos)

    def expect(self, s):
        if not self.peek(s):
            raise ParseError(self.text, self.pos, repr(s))
        self.pos += len(s)

    def done(self):
        return self.pos == len(self.text)

    def finish(self):
        if not self.done():
            raise ParseError(self.text, self.pos, "end of input")


def _complex(sc: _Scanner) -> complex:
    first = float(sc.match(_REAL, "a real number"))
    if sc.peek("i"):
        sc.pos += 1
        return complex(0.0, first)
    if sc.peek("+") or sc.peek("-"):
        sign = 1.0 if sc.text[sc.pos] == "+" else -1.0
        sc.pos += 1
        imag = float(sc.match(_UREAL, "an unsigned real number"))
        sc.expect("i")
        return complex(first, sign * imag)
    return complex(first, 0.0)


def parse_complex(text: str) -> complex:
    """Parse ``a``, ``bi`` or ``a+bi`` (scientific notation allowed)."""
    sc = _Scanner(text.strip())
    z = _complex(sc)
    sc.finish()
    return z


def parse_state_spec(text: str) -> StateSpec:
    """Parse a state spec such as ``fock:1``, ``coherent:1+0.5i`` or ``cat:2:even``.

    ``cat`` defaults to odd parity.  Errors carry the offending position and
    the expected token.
    """
    sc = _Scanner(text.strip())
    family = sc.match(_FAMILY, "a state family (fock, coherent, cat, squeezed, thermal)")
    if family not in ("fock", "coherent", "cat", "squeezed", "thermal"):
        raise ParseError(sc.text, 0, "one of fock, coherent, cat, squeezed, thermal")
    sc.expect(":")
    if family == "fock":
        spec = StateSpec("fock", n=int(sc.match(_INT, "a non-negative integer")))
    elif family == "coherent":
        spec = StateSpec("coherent", alpha=_complex(sc))
    elif family == "cat":
        alpha = _complex(sc)
        sign = -1
        if sc.peek(":"):
            sc.pos += 1
            word = sc.match(re.compile(r"(?:odd|even)(?![a-z])"), "'odd' or 'even'")
            sign = -1 if word == "odd" else 1
        if sign == -1 and alpha == 0:
            raise ParseError(sc.text, sc.pos, "a nonzero amplitude for an odd cat")
        spec = StateSpec("cat", alpha=alpha, sign=sign)
    else:
        start = sc.pos
        val = float(sc.match(_REAL, "a real number"))
        if val < 0:
            raise ParseError(sc.text, start, "a non-negative real number")
        spec = StateSpec("squeezed", r=val) if family == "squeezed" else StateSpec("thermal", nbar=val)
    sc.finish()
    return spec


def auto_input_cutoff(spec: StateSpec, tail: float = 1e-14, start: int = 8) -> int:
    """Smallest power-of-two-style cutoff whose construction loses less than ``tail``."""
    if spec.family == "fock":
        return max(spec.n, 1)
    cut = start
    while True:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            s = spec.build(cut)
        if s.trace_deficit < tail:
            return cut
        if cut > 4000:
            raise InvalidArgument(f"state {spec} needs a cutoff above {cut}")
        cut = int(cut * 1.5) + 1


# Run configuration ----------------------------------------------------------------


@dataclass
class RunConfig:
    """Settings shared by all subcommands.

    ``cutoff`` fixes the input cutoff (``None`` picks one automatically);
    ``grid_extent`` of ``None`` picks a grid from the state's mean photon
    number.
    """

    cutoff: int | None = None
    deficit_bound: float = 1e-8
    grid_points: int = 201
    grid_extent: float | None = None
    tol: float = 1e-7
    output_format: str = "csv"
    parallelism: int = 1

    def __post_init__(self):
        if self.output_format not in ("csv", "json"):
            raise InvalidArgument(f"output_format must be csv or json, got {self.output_format!r}")
        if self.parallelism < 1:
            raise InvalidArgument("parallelism must be >= 1")
        if not 0 < self.deficit_bound < 1:
            raise InvalidArgument("deficit_bound must lie in (0, 1)")

    def canonical(self) -> str:
        return "\n".join(f"{f.name}={getattr(self, f.name)!r}" for f in fields(self))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]


_CONFIG_TYPES = {"cutoff": int, "deficit_bound": float, "grid_points": int, "grid_extent": float, "tol": float, "output_format": str, "parallelism": int}


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment, ``none`` clears optional keys."""
    out = {}
    offset = 0
    for line in text.splitlines(keepends=True):
        body = line.split("#", 1)[0]
        if body.strip():
            if "=" not in body:
                raise ParseError(text, offset + len(body) - len(body.lstrip()), "'key = value'")
            key, value = (p.strip() for p in body.split("=", 1))
            if key not in _CONFIG_TYPES:
                raise ParseError(text, offset + body.index(key), f"one of {', '.join(sorted(_CONFIG_TYPES))}")
            if value.lower() == "none" and key in ("cutoff", "grid_extent"):
                out[key] = None
            else:
                try:
                    out[key] = _CONFIG_TYPES[key](value)
                except ValueError:
                    raise ParseError(text, offset + body.index(value), f"a {_CONFIG_TYPES[key].__name__} for {key}") from None
        offset += len(line)
    return out


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    values = {}
    if path is not None:
        with open(path) as fh:
            values.update(parse_config(fh.read()))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return RunConfig(**values)
