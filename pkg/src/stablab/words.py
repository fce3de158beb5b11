"""Finitely presented groups: words, presentations, certificates, Tietze moves.

Words live in the free group on the presentation's generators and are stored
as flat tuples of nonzero signed indices: letter ``+(i+1)`` is generator ``i``,
``-(i+1)`` is its inverse.  Every ``Word`` is freely reduced on construction,
so equality of words is equality in the free group.

Text grammar (whitespace insignificant)::

    presentation := "<" gen-list "|" relator-list ">"
    gen-list     := name ("," name)*
    relator-list := (word ("," word)*)?
    word         := factor ("*" factor)*
    factor       := name ("^" integer)?
                  | "[" word "," word "]"
                  | "(" word ")" ("^" integer)?

``[x,y]`` expands to ``x*y*x^-1*y^-1``; exponent 0 yields the empty factor.
Names start with a letter and continue with letters, digits or underscores.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .errors import CertificateError, ParseError

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


def _normalize_letters(letters: Iterable) -> tuple[int, ...]:
    """Accept signed letters or (index, sign) pairs; return signed letters."""
    out = []
    for item in letters:
        if isinstance(item, (tuple, list)):
            index, sign = item
            if sign not in (1, -1):
                raise ValueError(f"letter sign must be +1 or -1, got {sign}")
            if index < 0:
                raise ValueError(f"negative generator index {index}")
            out.append((index + 1) * sign)
        else:
            x = int(item)
            if x == 0:
                raise ValueError("0 is not a valid signed letter")
            out.append(x)
    return tuple(out)


def _reduce(letters: Sequence[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


@dataclass(frozen=True)
class Word:
    """A freely reduced word; ``letters`` holds signed 1-based indices."""

    letters: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _reduce(_normalize_letters(self.letters)))

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        """Letters as (generator index, sign) pairs."""
        return tuple((abs(x) - 1, 1 if x > 0 else -1) for x in self.letters)

    def inverse(self) -> "Word":
        return Word(tuple(-x for x in reversed(self.letters)))

    def max_index(self) -> int:
        """Largest generator index used, or -1 for the empty word."""
        return max((abs(x) - 1 for x in self.letters), default=-1)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)


EMPTY_WORD = Word()


def free_reduce(letters: Iterable) -> Word:
    """Freely reduce a raw letter list (signed ints or (index, sign) pairs)."""
    return Word(tuple(letters))


def inverse_word(w: Word) -> Word:
    return w.inverse()


def concat_reduced(u: Word, v: Word) -> Word:
    return u * v


def word_length(w: Word) -> int:
    return len(w)


def substitute(w: Word, images: Sequence[Word]) -> Word:
    """Replace each generator letter by its image word, then reduce."""
    letters: list[int] = []
    for x in w.letters:
        image = images[abs(x) - 1]
        letters.extend(image.letters if x > 0 else image.inverse().letters)
    return Word(tuple(letters))


def commutator(u: Word, v: Word) -> Word:
    return u * v * u.inverse() * v.inverse()


# ---------------------------------------------------------------------------
# Parsing


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, char: str):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != char:
            raise ParseError(f"expected '{char}'", self.pos)
        self.pos += 1

    def try_char(self, char: str) -> bool:
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == char:
            self.pos += 1
            return True
        return False

    def name(self) -> str:
        self.skip_ws()
        m = _NAME_RE.match(self.text, self.pos)
        if not m:
            raise ParseError("expected a generator name", self.pos)
        self.pos = m.end()
        return m.group()

    def integer(self) -> int:
        self.skip_ws()
        m = re.compile(r"-?\d+").match(self.text, self.pos)
        if not m:
            raise ParseError("malformed exponent", self.pos)
        self.pos = m.end()
        return int(m.group())

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)


def _parse_factor(sc: _Scanner, index_of: dict[str, int]) -> list[int]:
    if sc.try_char("["):
        left = _parse_word_letters(sc, index_of)
        sc.expect(",")
        right = _parse_word_letters(sc, index_of)
        sc.expect("]")
        return left + right + [-x for x in reversed(left)] + [-x for x in reversed(right)]
    if sc.try_char("("):
        inner = _parse_word_letters(sc, index_of)
        sc.expect(")")
        exponent = sc.integer() if sc.try_char("^") else 1
        return _power(inner, exponent)
    start = sc.pos
    name = sc.name()
    if name not in index_of:
        raise ParseError(f"unknown generator '{name}'", start)
    letter = index_of[name] + 1
    exponent = sc.integer() if sc.try_char("^") else 1
    return _power([letter], exponent)


def _power(letters: list[int], exponent: int) -> list[int]:
    if exponent >= 0:
        return letters * exponent
    return [-x for x in reversed(letters)] * (-exponent)


def _parse_word_letters(sc: _Scanner, index_of: dict[str, int]) -> list[int]:
    letters = _parse_factor(sc, index_of)
    while sc.try_char("*"):
        letters.extend(_parse_factor(sc, index_of))
    return letters


def parse_word(text: str, generators: Sequence[str]) -> Word:
    """Parse a word over the given generator names (grammar above)."""
    sc = _Scanner(text)
    index_of = {name: i for i, name in enumerate(generators)}
    letters = _parse_word_letters(sc, index_of)
    if not sc.at_end():
        raise ParseError("unexpected trailing input", sc.pos)
    return Word(tuple(letters))


def word_to_text(w: Word, generators: Sequence[str]) -> str:
    """Print a word in the grammar; inverse of :func:`parse_word`.

    The empty word is printed as ``<first generator>^0``, which is the
    grammar's only way to spell it.
    """
    if not w.letters:
        if not generators:
            raise ValueError("cannot print the empty word over an empty alphabet")
        return f"{generators[0]}^0"
    parts = []
    run_letter, run_len = w.letters[0], 1
    for x in list(w.letters[1:]) + [0]:
        if x == run_letter:
            run_len += 1
            continue
        name = generators[abs(run_letter) - 1]
        exp = run_len if run_letter > 0 else -run_len
        parts.append(name if exp == 1 else f"{name}^{exp}")
        run_letter, run_len = x, 1
    return "*".join(parts)


def _check_generator_names(names: Sequence[str]):
    if not names:
        raise ValueError("a presentation needs at least one generator")
    seen = set()
    for name in names:
        if not _NAME_RE.fullmatch(name):
            raise ValueError(f"invalid generator name '{name}'")
        if name in seen:
            raise ValueError(f"duplicate generator name '{name}'")
        seen.add(name)


@dataclass(frozen=True)
class Presentation:
    """A finite presentation: generator names plus freely reduced relators."""

    generators: tuple[str, ...]
    relators: tuple[Word, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "relators", tuple(self.relators))
        _check_generator_names(self.generators)
        for r in self.relators:
            if not isinstance(r, Word):
                raise TypeError("relators must be Word instances")
            if not r:
                raise ValueError("empty-word relators are not allowed")
            if r.max_index() >= len(self.generators):
                raise ValueError("relator refers to a generator outside the presentation")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def to_text(self) -> str:
        gens = ", ".join(self.generators)
        rels = ", ".join(word_to_text(r, self.generators) for r in self.relators)
        return f"<{gens} | {rels}>"

    def to_json(self) -> dict:
        return {
            "generators": list(self.generators),
            "relators": [word_to_text(r, self.generators) for r in self.relators],
        }

    @staticmethod
    def from_json(data: dict) -> "Presentation":
        generators = tuple(data["generators"])
        _check_generator_names(generators)
        relators = tuple(parse_word(text, generators) for text in data["relators"])
        for r in relators:
            if not r:
                raise ParseError("relator reduces to the empty word")
        return Presentation(generators, relators)


def parse_presentation(text: str) -> Presentation:
    """Parse ``<a, b | w1, w2, ...>``; relators may be omitted but not empty."""
    sc = _Scanner(text)
    sc.expect("<")
    names = [sc.name()]
    while sc.try_char(","):
        names.append(sc.name())
    seen = set()
    for name in names:
        if name in seen:
            raise ParseError(f"duplicate generator name '{name}'", sc.pos)
        seen.add(name)
    sc.expect("|")
    index_of = {name: i for i, name in enumerate(names)}
    relators = []
    if sc.peek() != ">":
        while True:
            start = sc.pos
            w = Word(tuple(_parse_word_letters(sc, index_of)))
            if not w:
                raise ParseError("relator reduces to the empty word", start)
            relators.append(w)
            if not sc.try_char(","):
                break
    sc.expect(">")
    if not sc.at_end():
        raise ParseError("unexpected trailing input", sc.pos)
    return Presentation(tuple(names), tuple(relators))


# ---------------------------------------------------------------------------
# Normal-closure certificates


@dataclass(frozen=True)
class NormalClosureCertificate:
    """Witness that a word lies in the normal closure of the relators.

    ``factors`` is a sequence of (conjugator, relator index, sign); the
    certified product is ``prod_i  u_i * r_{k_i}^{s_i} * u_i^-1``.
    """

    factors: tuple[tuple[Word, int, int], ...]

    def __post_init__(self):
        factors = tuple((Word(u.letters), int(k), int(s)) for u, k, s in self.factors)
        object.__setattr__(self, "factors", factors)
        for _, _, s in factors:
            if s not in (1, -1):
                raise CertificateError(f"certificate sign must be +1 or -1, got {s}")


def certificate_product(cert: NormalClosureCertificate, presentation: Presentation) -> Word:
    """Freely reduced product of the certificate's conjugated relators."""
    out = EMPTY_WORD
    for conjugator, index, sign in cert.factors:
        if not 0 <= index < len(presentation.relators):
            raise CertificateError(f"invalid relator index {index}")
        r = presentation.relators[index]
        if sign < 0:
            r = r.inverse()
        out = out * conjugator * r * conjugator.inverse()
    return out


def verify_certificate(
    cert: NormalClosureCertificate, target: Word, presentation: Presentation
) -> bool:
    """True iff the certificate product equals ``target`` letter for letter."""
    return certificate_product(cert, presentation) == target


# ---------------------------------------------------------------------------
# Tietze moves and transports


@dataclass(frozen=True)
class AddRelator:
    word: Word
    certificate: NormalClosureCertificate


@dataclass(frozen=True)
class RemoveRelator:
    index: int
    certificate: NormalClosureCertificate


@dataclass(frozen=True)
class AddGenerator:
    name: str
    word: Word  # defining word over the existing generators


@dataclass(frozen=True)
class RemoveGenerator:
    generator: int
    relator: int  # index of the defining relator g * w^-1


TietzeMove = Union[AddRelator, RemoveRelator, AddGenerator, RemoveGenerator]


@dataclass(frozen=True)
class TransportMap:
    """For each generator of a target presentation, a word over the source.

    Applying a transport to a generator assignment on the source presentation
    (see ``stablab.core.transport_hom``) evaluates these words to produce an
    assignment on the target presentation.
    """

    words: tuple[Word, ...]
    source_rank: int

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        for w in self.words:
            if w.max_index() >= self.source_rank:
                raise ValueError("transport word refers outside the source presentation")


def identity_transport(rank: int) -> TransportMap:
    return TransportMap(tuple(Word((i + 1,)) for i in range(rank)), rank)


def compose_transports(first: TransportMap, second: TransportMap) -> TransportMap:
    """Transport along ``first`` (p1 to p2) then ``second`` (p2 to p3)."""
    if second.source_rank != len(first.words):
        raise ValueError("transport ranks do not match")
    words = tuple(substitute(w, first.words) for w in second.words)
    return TransportMap(words, first.source_rank)


def _shift_word(w: Word, removed_index: int) -> Word:
    """Reindex a word after deleting one generator (which must not occur)."""
    letters = []
    for x in w.letters:
        i = abs(x) - 1
        if i == removed_index:
            raise ValueError("word uses the removed generator")
        j = i if i < removed_index else i - 1
        letters.append((j + 1) * (1 if x > 0 else -1))
    return Word(tuple(letters))


def apply_tietze(
    p: Presentation, move: TietzeMove
) -> tuple[Presentation, TransportMap, TransportMap]:
    """Apply a Tietze move; returns (new presentation, forward, backward).

    ``forward`` maps generators of the new presentation to words over ``p``
    (use it to transport assignments defined on ``p``); ``backward`` goes the
    other way.  AddRelator/RemoveRelator demand a verifying certificate, so
    every move provably preserves the presented group.
    """
    if isinstance(move, AddRelator):
        if move.word.max_index() >= p.rank:
            raise CertificateError("relator refers outside the presentation")
        if not move.word:
            raise CertificateError("cannot add an empty relator")
        if not verify_certificate(move.certificate, move.word, p):
            raise CertificateError("certificate does not prove the added relator")
        new_p = Presentation(p.generators, p.relators + (move.word,))
        return new_p, identity_transport(p.rank), identity_transport(p.rank)

    if isinstance(move, RemoveRelator):
        if not 0 <= move.index < len(p.relators):
            raise CertificateError(f"invalid relator index {move.index}")
        remaining = tuple(r for i, r in enumerate(p.relators) if i != move.index)
        rest = Presentation(p.generators, remaining)
        if not verify_certificate(move.certificate, p.relators[move.index], rest):
            raise CertificateError("certificate does not derive the removed relator")
        return rest, identity_transport(p.rank), identity_transport(p.rank)

    if isinstance(move, AddGenerator):
        _check_generator_names(list(p.generators) + [move.name])
        if move.word.max_index() >= p.rank:
            raise ValueError("defining word refers outside the presentation")
        new_letter = p.rank + 1
        defining = Word((new_letter,)) * move.word.inverse()
        new_p = Presentation(p.generators + (move.name,), p.relators + (defining,))
        forward = TransportMap(
            tuple(Word((i + 1,)) for i in range(p.rank)) + (move.word,), p.rank
        )
        backward = TransportMap(tuple(Word((i + 1,)) for i in range(p.rank)), new_p.rank)
        return new_p, forward, backward

    if isinstance(move, RemoveGenerator):
        g, r = move.generator, move.relator
        if not 0 <= g < p.rank:
            raise ValueError(f"invalid generator index {g}")
        if not 0 <= r < len(p.relators):
            raise ValueError(f"invalid relator index {r}")
        relator = p.relators[r]
        letter = g + 1
        if not relator.letters or relator.letters[0] != letter:
            raise ValueError("defining relator must have the form g * w^-1")
        if any(abs(x) == letter for x in relator.letters[1:]):
            raise ValueError("generator occurs more than once in its defining relator")
        for i, other in enumerate(p.relators):
            if i != r and any(abs(x) == letter for x in other.letters):
                raise ValueError("generator occurs outside its defining relator")
        defining_word = Word(relator.letters[1:]).inverse()  # relator = g * w^-1
        new_gens = tuple(name for i, name in enumerate(p.generators) if i != g)
        new_relators = tuple(
            _shift_word(rel, g) for i, rel in enumerate(p.relators) if i != r
        )
        new_p = Presentation(new_gens, new_relators)
        surviving = [i for i in range(p.rank) if i != g]
        forward = TransportMap(tuple(Word((i + 1,)) for i in surviving), p.rank)
        backward_words = []
        for i in range(p.rank):
            if i == g:
                backward_words.append(_shift_word(defining_word, g))
            else:
                j = i if i < g else i - 1
                backward_words.append(Word((j + 1,)))
        backward = TransportMap(tuple(backward_words), new_p.rank)
        return new_p, forward, backward

    raise TypeError(f"unknown Tietze move {move!r}")
