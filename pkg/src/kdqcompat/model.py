"""Hamiltonian text grammar, partitions, and structure classification.

Grammar (ASCII, whitespace-insensitive, newlines allowed)::

    sum    := ['+'|'-'] term (('+'|'-') term)*
    term   := NUMBER ['*'] letter* | letter+
    letter := ('X'|'Y'|'Z') DIGITS

``NUMBER`` is decimal or scientific notation. A trailing ``j`` or ``i`` marks an
imaginary coefficient, which is rejected because it makes the sum non-Hermitian.
"""
import json
import re
from dataclasses import dataclass, field

from .errors import ParseError, PreconditionError, ShapeError, ValidationError
from .pauli import PauliString, PauliSum, hs_inner, mul, site_mask

#: Bucket label for the inaccessible remainder of a partition.
REMAINDER = "_C"

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?[ji]?)"
    r"|(?P<pauli>[XYZ]\d+)"
    r"|(?P<op>[+\-*])"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _line_col(text, pos):
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            line, col = _line_col(text, pos)
            raise ParseError(f"unexpected character {text[pos]!r}", line, col, text)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    return tokens


def parse_hamiltonian(text, n_sites):
    """Parse ``text`` into a canonical Hermitian :class:`PauliSum`.

    >>> parse_hamiltonian("1.0*Z1 + Z1", 1).labelled()
    {'Z': (2+0j)}
    """
    if n_sites < 1:
        raise ShapeError("n_sites must be positive")
    tokens = _tokenize(text)
    terms = {}
    i = 0
    n_tok = len(tokens)

    def fail(msg, tok=None):
        pos = tok.pos if tok is not None else len(text)
        line, col = _line_col(text, pos)
        raise ParseError(msg, line, col, text)

    if n_tok == 0:
        fail("empty Hamiltonian")

    first = True
    while i < n_tok:
        sign = 1.0
        tok = tokens[i]
        if tok.kind == "op" and tok.text in "+-":
            sign = -1.0 if tok.text == "-" else 1.0
            i += 1
        elif not first:
            fail(f"expected '+' or '-', got {tok.text!r}", tok)
        first = False
        if i >= n_tok:
            fail("expected a term")

        coeff = complex(sign)
        start = tokens[i]
        has_number = False
        if tokens[i].kind == "num":
            num = tokens[i].text
            if num[-1] in "ji":
                coeff *= complex(0, float(num[:-1]))
            else:
                coeff *= float(num)
            has_number = True
            i += 1
            if i < n_tok and tokens[i].kind == "op" and tokens[i].text == "*":
                i += 1
                if i >= n_tok or tokens[i].kind != "pauli":
                    fail("expected a Pauli letter after '*'", tokens[i] if i < n_tok else None)

        phase = 1 + 0j
        string = PauliString.identity(n_sites)
        n_letters = 0
        while i < n_tok and tokens[i].kind == "pauli":
            tok = tokens[i]
            site = int(tok.text[1:])
            if not 1 <= site <= n_sites:
                fail(f"site index {site} out of range 1..{n_sites}", tok)
            factor = PauliString.single(n_sites, tok.text[0], site)
            p, string = mul(string, factor)
            phase *= p
            n_letters += 1
            i += 1

        if not has_number and n_letters == 0:
            fail(f"expected a coefficient or Pauli letter, got {start.text!r}", start)
        if i < n_tok and tokens[i].kind == "num":
            fail("coefficient must precede the Pauli letters", tokens[i])
        if i < n_tok and tokens[i].text == "*":
            fail("unexpected '*'", tokens[i])
        terms[string] = terms.get(string, 0j) + coeff * phase

    h = PauliSum(n_sites, terms)
    bad = [f"{s.label()}: {c}" for s, c in h.items() if c.imag != 0.0]
    if bad:
        raise ValidationError([f"non-Hermitian term (complex coefficient) {b}" for b in bad])
    return h


def _format_coeff(c):
    return repr(float(c.real))


def format_hamiltonian(h):
    """Inverse of :func:`parse_hamiltonian` for Hermitian sums."""
    if h.is_zero():
        return "0"
    parts = []
    for s, c in sorted(h.items(), key=lambda kv: (kv[0].weight, sorted(kv[0].support), kv[0].letters)):
        if c.imag != 0:
            raise ValidationError(f"cannot format non-Hermitian term {s.label()}")
        value = c.real
        sign = "-" if value < 0 else "+"
        body = _format_coeff(abs(value))
        if not s.is_identity():
            body += "*" + s.label()
        parts.append((sign, body))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


@dataclass(frozen=True)
class Partition:
    """Named accessible blocks of sites; unlisted sites form the remainder."""

    n_sites: int
    blocks: dict

    def __post_init__(self):
        failures = []
        if self.n_sites < 1:
            failures.append("n_sites must be positive")
        if not self.blocks:
            failures.append("at least one named block is required")
        seen = {}
        clean = {}
        for name, sites in self.blocks.items():
            if not isinstance(name, str) or not name or name.startswith("_"):
                failures.append(f"invalid block name {name!r}")
            sites = frozenset(int(s) for s in sites)
            if not sites:
                failures.append(f"block {name!r} is empty")
            for s in sites:
                if not 1 <= s <= self.n_sites:
                    failures.append(f"block {name!r}: site {s} out of range 1..{self.n_sites}")
                if s in seen:
                    failures.append(f"site {s} in both {seen[s]!r} and {name!r}")
                seen[s] = name
            clean[name] = sites
        if failures:
            raise ValidationError(failures)
        object.__setattr__(self, "blocks", clean)

    @property
    def names(self):
        return list(self.blocks)

    @property
    def remainder(self):
        used = set().union(*self.blocks.values())
        return frozenset(s for s in range(1, self.n_sites + 1) if s not in used)

    def owner(self, site):
        for name, sites in self.blocks.items():
            if site in sites:
                return name
        return REMAINDER

    def block_sites(self, name):
        if name == REMAINDER:
            return self.remainder
        return self.blocks[name]

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(int(data["n_sites"]), {k: list(v) for k, v in data["blocks"].items()})
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed partition: {exc}") from None

    def to_dict(self):
        return {"n_sites": self.n_sites,
                "blocks": {k: sorted(v) for k, v in self.blocks.items()}}

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Model:
    hamiltonian: PauliSum
    partition: Partition
    name: str = ""
    description: str = ""

    def __post_init__(self):
        if self.hamiltonian.n_sites != self.partition.n_sites:
            raise ShapeError(
                f"Hamiltonian has {self.hamiltonian.n_sites} sites, partition {self.partition.n_sites}")

    @classmethod
    def from_dict(cls, data):
        if "partition" not in data or "hamiltonian" not in data:
            raise ValidationError("model needs 'hamiltonian' and 'partition'")
        partition = Partition.from_dict(data["partition"])
        h = parse_hamiltonian(data["hamiltonian"], partition.n_sites)
        return cls(h, partition, data.get("name", ""), data.get("description", ""))

    @classmethod
    def from_text(cls, text, partition):
        return cls(parse_hamiltonian(text, partition.n_sites), partition)

    def to_dict(self):
        out = {"hamiltonian": format_hamiltonian(self.hamiltonian),
               "partition": self.partition.to_dict()}
        if self.name:
            out["name"] = self.name
        if self.description:
            out["description"] = self.description
        return out


@dataclass(frozen=True)
class StructureReport:
    hamiltonian: PauliSum
    partition: Partition
    buckets: dict
    hform_ok: bool
    offending_terms: list = field(default_factory=list)

    def bucket(self, *names):
        return self.buckets.get(frozenset(names), PauliSum.zero(self.partition.n_sites))

    @property
    def h_remainder(self):
        """The purely inaccessible part of the Hamiltonian."""
        return self.bucket(REMAINDER)

    def to_dict(self):
        buckets = []
        for key, h in sorted(self.buckets.items(), key=lambda kv: sorted(kv[0])):
            buckets.append({
                "subsystems": sorted(key),
                "terms": [[s.label(), c.real] for s, c in sorted(h.items())],
            })
        return {
            "hform_ok": self.hform_ok,
            "buckets": buckets,
            "offending_terms": [
                {"term": s.label(), "coefficient": c.real, "subsystems": sorted(names)}
                for s, c, names in self.offending_terms
            ],
            "remainder_label": REMAINDER,
            "remainder_sites": sorted(self.partition.remainder),
        }


def classify(h, partition):
    """Bucket every term by the set of subsystems its support touches."""
    if h.n_sites != partition.n_sites:
        raise ShapeError(f"Hamiltonian has {h.n_sites} sites, partition {partition.n_sites}")
    n = h.n_sites
    masks = {name: site_mask(n, sites) for name, sites in partition.blocks.items()}
    rest = site_mask(n, partition.remainder)
    grouped = {}
    offending = []
    for s, c in h.items():
        occupied = s.x | s.z
        names = {name for name, m in masks.items() if occupied & m}
        if occupied & rest:
            names.add(REMAINDER)
        key = frozenset(names)
        grouped.setdefault(key, {})[s] = c
        if len(names - {REMAINDER}) >= 2:
            offending.append((s, c, key))
    buckets = {k: PauliSum(n, terms, rtol=0.0) for k, terms in grouped.items()}
    offending.sort(key=lambda item: item[0])
    return StructureReport(h, partition, buckets, not offending, offending)


@dataclass(frozen=True)
class InteractionDecomposition:
    """``H^{XC} = sum_a V_a (x) S_a`` with pairwise orthogonal ``V_a``.

    ``pairs`` holds ``(V, S)`` as full-register :class:`PauliSum` objects,
    ``V`` supported on the block and ``S`` on the remainder.
    """

    subsystem: str
    pairs: list

    @property
    def couplings(self):
        return [s for _, s in self.pairs]

    def reconstruct(self, n_sites):
        total = PauliSum.zero(n_sites)
        for v, s in self.pairs:
            total = total + v * s
        return total


def interaction_decomposition(report, subsystem):
    """Group the ``{X, C}`` bucket by each term's Pauli restriction to block X.

    Distinct restrictions are orthogonal Pauli strings, so the ``V_a`` are
    orthogonal by construction. The grouping is unique only relative to the
    Pauli basis.
    """
    if not report.hform_ok:
        raise PreconditionError("Hamiltonian violates the allowed structure; no decomposition")
    if subsystem not in report.partition.blocks:
        raise KeyError(f"unknown subsystem {subsystem!r}")
    n = report.partition.n_sites
    block = report.partition.blocks[subsystem]
    rest = report.partition.remainder
    grouped = {}
    for s, c in report.bucket(subsystem, REMAINDER).items():
        v = s.restrict(block)
        grouped.setdefault(v, {})
        env = s.restrict(rest)
        grouped[v][env] = grouped[v].get(env, 0j) + c
    pairs = [(PauliSum.from_string(v), PauliSum(n, envs, rtol=0.0))
             for v, envs in sorted(grouped.items())]
    return InteractionDecomposition(subsystem, pairs)


def check_orthogonal(decomposition):
    vs = [v for v, _ in decomposition.pairs]
    return all(hs_inner(vs[i], vs[j]) == 0 for i in range(len(vs)) for j in range(i + 1, len(vs)))
