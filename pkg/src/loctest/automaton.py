"""DFA data model, word actions, validation, and the text file format.

The transition function may be partial: ``delta[state, letter]`` is either a
target state or ``UNDEFINED``.  All downstream graph constructions define
edges only where delta is defined.  Initial and accepting states are not
modeled; the file parser skips such annotations for interoperability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError

UNDEFINED = -1

_ANNOTATION_KEYS = ("initial:", "accepting:", "final:", "start:")


@dataclass(frozen=True, eq=False)
class Dfa:
    """Deterministic finite automaton over dense 0-based state and letter
    indices.  Immutable after construction; all operations are pure."""

    state_count: int
    alphabet_size: int
    delta: np.ndarray
    letter_names: tuple[str, ...] | None = None

    def __post_init__(self):
        delta = np.ascontiguousarray(np.asarray(self.delta, dtype=np.int32))
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)
        if self.letter_names is not None:
            object.__setattr__(self, "letter_names", tuple(self.letter_names))

    def letter_label(self, a: int) -> str:
        if self.letter_names is not None:
            return self.letter_names[a]
        return str(a)

    def step(self, p: int, a: int) -> int | None:
        t = int(self.delta[p, a])
        return None if t == UNDEFINED else t


def dfa_from_triples(state_count, alphabet_size, triples, letter_names=None) -> Dfa:
    """Build a Dfa from (state, letter, target) triples."""
    delta = np.full((state_count, alphabet_size), UNDEFINED, dtype=np.int32)
    for s, a, t in triples:
        delta[s, a] = t
    return Dfa(state_count, alphabet_size, delta, letter_names)


def apply(d: Dfa, p: int, word) -> int | None:
    """Act on state ``p`` with a nonempty word, left to right.

    Returns the resulting state, or None as soon as any step is undefined.
    """
    word = list(word)
    if not word:
        raise ValueError("word must be nonempty")
    if not 0 <= p < d.state_count:
        raise ValueError(f"state {p} out of range")
    cur = p
    for a in word:
        if not 0 <= a < d.alphabet_size:
            raise ValueError(f"letter {a} out of range")
        cur = int(d.delta[cur, a])
        if cur == UNDEFINED:
            return None
    return cur


def validate_dfa(d: Dfa) -> list[str]:
    """Return every invariant violation of the Dfa value (empty list = ok).

    Determinism is structural here: the dense delta array can hold at most
    one target per (state, letter), so only range and name invariants can
    be violated on an already-constructed value.
    """
    violations = []
    if d.state_count < 1:
        violations.append("state_count must be positive")
    if d.alphabet_size < 1:
        violations.append("alphabet_size must be positive")
    if d.delta.shape != (d.state_count, d.alphabet_size):
        violations.append(
            f"delta shape {d.delta.shape} does not match "
            f"(states, letters) = ({d.state_count}, {d.alphabet_size})"
        )
    else:
        bad = (d.delta != UNDEFINED) & ((d.delta < 0) | (d.delta >= d.state_count))
        for s, a in zip(*np.nonzero(bad)):
            violations.append(
                f"target out of range: delta({int(s)}, {int(a)}) = {int(d.delta[s, a])}"
            )
    if d.letter_names is not None:
        if len(d.letter_names) != d.alphabet_size:
            violations.append(
                f"letter_names has length {len(d.letter_names)}, "
                f"expected {d.alphabet_size}"
            )
        seen = set()
        for name in d.letter_names:
            if name in seen:
                violations.append(f"duplicate letter name {name!r}")
            seen.add(name)
    return violations


def _content_lines(text):
    """Yield (line_number, stripped_content) for nonblank non-comment lines."""
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def parse_dfa(text) -> Dfa:
    """Parse the DFA text format.

    Format: line 1 ``dfa``; line 2 ``states: <n>``; line 3 ``letters: <m>``
    or ``letters: <name>...``; then ``<state> <letter> <state>`` triples,
    letter by index or name.  ``#`` starts a comment; blank lines and
    ``initial:``/``accepting:``/``final:`` annotations are ignored; missing
    (state, letter) pairs are undefined transitions.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = list(_content_lines(text))
    if not lines or lines[0][1] != "dfa":
        lineno = lines[0][0] if lines else 1
        raise FormatError("expected 'dfa' header", line=lineno)

    def parse_count(idx, key):
        if len(lines) <= idx:
            raise FormatError(f"missing '{key}' line", line=lines[-1][0])
        no, line = lines[idx]
        tokens = line.split()
        if tokens[0] != key:
            raise FormatError(f"expected '{key} ...', got {line!r}", line=no)
        return no, tokens[1:]

    no, tokens = parse_count(1, "states:")
    if len(tokens) != 1 or not tokens[0].isdigit() or int(tokens[0]) < 1:
        raise FormatError("'states:' needs one positive integer", line=no)
    state_count = int(tokens[0])

    no, tokens = parse_count(2, "letters:")
    if not tokens:
        raise FormatError("'letters:' needs a count or letter names", line=no)
    letter_names = None
    if len(tokens) == 1 and tokens[0].isdigit():
        alphabet_size = int(tokens[0])
        if alphabet_size < 1:
            raise FormatError("letter count must be positive", line=no)
    else:
        for t in tokens:
            if t.isdigit():
                raise FormatError(f"letter name {t!r} must not be numeric", line=no)
        if len(set(tokens)) != len(tokens):
            raise FormatError("duplicate letter name", line=no)
        letter_names = tuple(tokens)
        alphabet_size = len(letter_names)
    name_index = {nm: i for i, nm in enumerate(letter_names)} if letter_names else {}

    delta = np.full((state_count, alphabet_size), UNDEFINED, dtype=np.int32)
    for no, line in lines[3:]:
        tokens = line.split()
        if tokens[0] in _ANNOTATION_KEYS:
            continue
        if len(tokens) != 3:
            raise FormatError(f"expected '<state> <letter> <state>', got {line!r}", line=no)
        src_t, let_t, dst_t = tokens
        try:
            src = int(src_t)
            dst = int(dst_t)
        except ValueError:
            raise FormatError(f"state indices must be integers in {line!r}", line=no)
        if let_t in name_index:
            letter = name_index[let_t]
        else:
            try:
                letter = int(let_t)
            except ValueError:
                raise FormatError(f"unknown letter {let_t!r}", line=no)
        if not 0 <= src < state_count:
            raise FormatError(f"state {src} out of range", line=no)
        if not 0 <= dst < state_count:
            raise FormatError(f"state {dst} out of range", line=no)
        if not 0 <= letter < alphabet_size:
            raise FormatError(f"letter {letter} out of range", line=no)
        if delta[src, letter] != UNDEFINED:
            raise FormatError(f"duplicate transition for ({src}, {letter})", line=no)
        delta[src, letter] = dst

    d = Dfa(state_count, alphabet_size, delta, letter_names)
    violations = validate_dfa(d)
    if violations:
        raise FormatError("; ".join(violations))
    return d


def serialize_dfa(d: Dfa) -> str:
    """Emit the DFA text format with transitions sorted by (state, letter)."""
    out = ["dfa", f"states: {d.state_count}"]
    if d.letter_names is not None:
        out.append("letters: " + " ".join(d.letter_names))
    else:
        out.append(f"letters: {d.alphabet_size}")
    for s in range(d.state_count):
        for a in range(d.alphabet_size):
            t = d.delta[s, a]
            if t != UNDEFINED:
                out.append(f"{s} {d.letter_label(a)} {int(t)}")
    return "\n".join(out) + "\n"
