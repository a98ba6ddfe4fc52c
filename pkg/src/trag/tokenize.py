"""Tokenizer contract and the default word tokenizer.

The same analyzer backs segmentation budgets and the sparse index:
lowercase, split on anything that is not alphanumeric, no stemming, no
stopwords. Any object with the same three methods can be plugged in.
"""
from __future__ import annotations

import re
from typing import Protocol, runtime_checkable

# Unicode-aware alphanumeric runs; underscore is a separator.
_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


@runtime_checkable
class Tokenizer(Protocol):
    def tokens(self, text: str) -> list[str]: ...

    def spans(self, text: str) -> list[tuple[int, int]]: ...

    def count(self, text: str) -> int: ...


class WordTokenizer:
    """Lowercased alphanumeric-run tokenizer with character offsets."""

    def tokens(self, text: str) -> list[str]:
        return [m.group(0).lower() for m in _WORD_RE.finditer(text)]

    def spans(self, text: str) -> list[tuple[int, int]]:
        # Offsets refer to the original (uncased) string so callers can
        # split it at token boundaries.
        return [m.span() for m in _WORD_RE.finditer(text)]

    def count(self, text: str) -> int:
        return sum(1 for _ in _WORD_RE.finditer(text))


DEFAULT_TOKENIZER = WordTokenizer()
