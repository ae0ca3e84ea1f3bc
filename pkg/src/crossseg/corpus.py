"""Sentences, BMES tag sequences, datasets and corpus file IO.

A sentence is a plain str of characters with no internal whitespace. A tag
sequence is a str over the alphabet {B, M, E, S} of the same length. A
segmented sentence is a list of non-empty words whose concatenation equals
the sentence. All objects here are immutable values; sharing them across
threads is safe.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DecodeError

TAGS = "BMES"
TAG_INDEX = {t: i for i, t in enumerate(TAGS)}


def words_to_tags(words: list[str]) -> str:
    """Map a segmentation to its BMES tag string.

    A single-character word becomes S; a longer word becomes B, then M for
    every interior character, then E.
    """
    if not words:
        raise ValueError("empty segmentation")
    out: list[str] = []
    for w in words:
        if not w:
            raise ValueError("empty word in segmentation")
        if len(w) == 1:
            out.append("S")
        else:
            out.append("B" + "M" * (len(w) - 2) + "E")
    return "".join(out)


def tags_to_words(sentence: str, tags: str) -> list[str]:
    """Cut a sentence according to a BMES tag string.

    Well-formed input ((S | B M* E)*) is inverted exactly. Ill-formed input
    is repaired greedily: a new word starts at every B or S and at any tag
    that cannot legally continue the open word (M or E with no open word).
    The concatenation of the result always equals the sentence.
    """
    if len(sentence) != len(tags):
        raise ValueError(
            f"length mismatch: {len(sentence)} chars vs {len(tags)} tags")
    if not sentence:
        raise ValueError("empty sentence")
    words: list[str] = []
    cur = ""
    open_word = False
    for ch, tag in zip(sentence, tags):
        if tag not in TAG_INDEX:
            raise ValueError(f"unknown tag {tag!r}")
        if tag in ("B", "S"):
            if cur:
                words.append(cur)
            cur = ch
            open_word = tag == "B"
            if tag == "S":
                words.append(cur)
                cur = ""
        else:  # M or E
            if open_word:
                cur += ch
            else:
                if cur:
                    words.append(cur)
                cur = ch
            if tag == "E":
                words.append(cur)
                cur = ""
                open_word = False
            else:
                open_word = True
    if cur:
        words.append(cur)
    return words


def is_well_formed(tags: str) -> bool:
    """True iff tags matches (S | B M* E)*."""
    state = 0  # 0: outside a word, 1: inside
    for t in tags:
        if state == 0:
            if t == "S":
                continue
            if t == "B":
                state = 1
            else:
                return False
        else:
            if t == "M":
                continue
            if t == "E":
                state = 0
            else:
                return False
    return state == 0


@dataclass(frozen=True)
class LabeledDataset:
    """Tagged sentences from one domain.

    items holds (sentence, tags) pairs; provenance marks, per item, whether
    the tags are human gold or produced by distant annotation.
    """
    items: tuple[tuple[str, str], ...]
    domain: str
    provenance: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.domain not in ("source", "target"):
            raise ValueError(f"unknown domain {self.domain!r}")
        prov = self.provenance
        if len(prov) == 1 and len(self.items) != 1:
            prov = prov * len(self.items)
            object.__setattr__(self, "provenance", prov)
        if len(prov) != len(self.items):
            raise ValueError("provenance not aligned with items")
        for p in prov:
            if p not in ("gold", "distant"):
                raise ValueError(f"unknown provenance {p!r}")
        for s, t in self.items:
            if len(s) != len(t):
                raise ValueError("sentence and tags differ in length")

    def __len__(self) -> int:
        return len(self.items)


def dataset_from_segmented(segs: list[list[str]], domain: str,
                           provenance: str = "gold") -> LabeledDataset:
    items = tuple(("".join(ws), words_to_tags(ws)) for ws in segs)
    return LabeledDataset(items, domain, (provenance,) * len(items))


def _decode_lines(path: str) -> list[str]:
    with open(path, "rb") as f:
        blob = f.read()
    lines: list[str] = []
    for i, raw in enumerate(blob.split(b"\n"), start=1):
        raw = raw.rstrip(b"\r")
        try:
            lines.append(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise DecodeError(f"{path}: line {i}: invalid UTF-8 ({exc})") from None
    return lines


def load_raw(path: str) -> list[str]:
    """Read a raw corpus, one sentence per line.

    Whitespace is not part of any sentence, so all whitespace characters are
    dropped from each line; lines empty after that are skipped. Invalid
    UTF-8 raises DecodeError naming the line.
    """
    out = []
    for line in _decode_lines(path):
        s = "".join(line.split())
        if s:
            out.append(s)
    return out


def load_segmented(path: str) -> list[list[str]]:
    """Read a segmented corpus, words separated by ASCII spaces.

    Runs of spaces are tolerated; empty lines are skipped. A token with
    internal whitespace raises DecodeError naming the line.
    """
    out = []
    for i, line in enumerate(_decode_lines(path), start=1):
        line = line.strip()
        if not line:
            continue
        words = [w for w in line.split(" ") if w]
        for w in words:
            if any(c.isspace() for c in w):
                raise DecodeError(f"{path}: line {i}: whitespace inside token")
        out.append(words)
    return out


def save_segmented(path: str, segs: list[list[str]]) -> None:
    """Write a segmented corpus with single spaces between words."""
    with open(path, "wb") as f:
        for ws in segs:
            f.write(" ".join(ws).encode("utf-8"))
            f.write(b"\n")


def vocabulary_of(segs: list[list[str]]) -> set[str]:
    """Set of distinct words of a segmented corpus."""
    vocab: set[str] = set()
    for ws in segs:
        vocab.update(ws)
    return vocab


def oov_rate(train_vocab: set[str], test_segs: list[list[str]]) -> float:
    """Fraction of test word tokens absent from train_vocab."""
    total = sum(len(ws) for ws in test_segs)
    if total == 0:
        raise ValueError("empty test corpus")
    oov = sum(1 for ws in test_segs for w in ws if w not in train_vocab)
    return oov / total
