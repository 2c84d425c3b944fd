"""Words in the standard generators of a closed surface group.

A letter is a nonzero int: ``2i - 1`` is ``a_i`` and ``2i`` is ``b_i``, a
negative value is the inverse. Words are plain tuples of letters.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field

Word = tuple  # tuple[int, ...]

_TOKEN = re.compile(r"([aAbB])(\d+)")


class WordParseError(ValueError):
    pass


def letter_name(letter: int) -> str:
    idx = abs(letter)
    base = "a" if idx % 2 == 1 else "b"
    name = f"{base}{(idx + 1) // 2}"
    return name if letter > 0 else name.upper()


def parse_word(text: str, genus: int = 2) -> Word:
    """Parse ``"a1 b1 A1 B1"`` (uppercase = inverse) into a letter tuple."""
    letters = []
    for token in text.split():
        pos = 0
        while pos < len(token):
            m = _TOKEN.match(token, pos)
            if m is None:
                raise WordParseError(f"bad token {token!r}")
            kind, num = m.group(1), int(m.group(2))
            if not 1 <= num <= genus:
                raise WordParseError(f"bad token {m.group(0)!r}: generator index out of range")
            idx = 2 * num - 1 if kind.lower() == "a" else 2 * num
            letters.append(idx if kind.islower() else -idx)
            pos = m.end()
    return tuple(letters)


def format_word(w: Word) -> str:
    return " ".join(letter_name(x) for x in w)


def inverse(w: Word) -> Word:
    return tuple(-x for x in reversed(w))


def free_reduce(w) -> Word:
    out: list[int] = []
    for x in w:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def multiply(*words) -> Word:
    return free_reduce(x for w in words for x in w)


def power(w: Word, n: int) -> Word:
    if n < 0:
        return power(inverse(w), -n)
    return free_reduce(tuple(w) * n)


def cyclic_reduce(w: Word) -> tuple[Word, Word]:
    """Return ``(c, core)`` with ``w = c core c^-1`` and ``core`` cyclically reduced."""
    w = free_reduce(w)
    i, j = 0, len(w)
    while j - i >= 2 and w[i] == -w[j - 1]:
        i += 1
        j -= 1
    return w[:i], w[i:j]


def letter_key(letter: int) -> int:
    # a1 < A1 < b1 < B1 < a2 < ...
    return 2 * (abs(letter) - 1) + (0 if letter > 0 else 1)


def shortlex_key(w: Word) -> tuple:
    return (len(w), tuple(letter_key(x) for x in w))


def alphabet(genus: int) -> tuple[int, ...]:
    """All 4g letters in shortlex order."""
    return tuple(sorted((s * i for i in range(1, 2 * genus + 1) for s in (1, -1)), key=letter_key))


def random_word(length: int, seed: int, genus: int = 2) -> Word:
    """Uniform freely reduced word of the given length, deterministic in ``seed``."""
    rng = random.Random(seed)
    letters = alphabet(genus)
    out: list[int] = []
    while len(out) < length:
        x = rng.choice(letters)
        if out and x == -out[-1]:
            continue
        out.append(x)
    return tuple(out)


@dataclass(frozen=True)
class CyclicWord:
    """Conjugacy-class handle: cyclically reduced, least rotation in shortlex."""

    letters: Word

    @classmethod
    def from_word(cls, w: Word) -> "CyclicWord":
        _, core = cyclic_reduce(w)
        if not core:
            return cls(())
        rots = [core[i:] + core[:i] for i in range(len(core))]
        return cls(min(rots, key=shortlex_key))

    def __len__(self) -> int:
        return len(self.letters)


@dataclass(frozen=True)
class SurfacePresentation:
    genus: int = 2
    relator: Word = field(init=False)
    relator_cyclings: tuple[Word, ...] = field(init=False)

    def __post_init__(self):
        if self.genus < 2:
            raise ValueError("genus must be at least 2")
        rel: list[int] = []
        for i in range(1, self.genus + 1):
            a, b = 2 * i - 1, 2 * i
            rel += [a, b, -a, -b]
        rel_t = tuple(rel)
        cyc = []
        for r in (rel_t, inverse(rel_t)):
            cyc += [r[k:] + r[:k] for k in range(len(r))]
        object.__setattr__(self, "relator", rel_t)
        object.__setattr__(self, "relator_cyclings", tuple(cyc))

    @property
    def alphabet(self) -> tuple[int, ...]:
        return alphabet(self.genus)

    def dehn_reduce(self, w: Word) -> Word:
        return dehn_reduce(w, self)


def dehn_reduce(w: Word, pres: SurfacePresentation | None = None) -> Word:
    """Dehn's algorithm: empty output iff ``w`` is trivial in the group.

    Any subword that is strictly more than half of a relator cycling is
    replaced by the inverse of the complementary piece.
    """
    pres = pres or SurfacePresentation()
    rlen = len(pres.relator)
    half = rlen // 2
    # index cyclings by first letter
    by_first: dict[int, list[Word]] = {}
    for c in pres.relator_cyclings:
        by_first.setdefault(c[0], []).append(c)
    cur = list(free_reduce(w))
    changed = True
    while changed:
        changed = False
        for i in range(len(cur)):
            for c in by_first.get(cur[i], ()):
                n = 0
                while n < rlen and i + n < len(cur) and cur[i + n] == c[n]:
                    n += 1
                if n > half:
                    repl = list(inverse(c[n:]))
                    cur = list(free_reduce(cur[:i] + repl + cur[i + n:]))
                    changed = True
                    break
            if changed:
                break
    return tuple(cur)
