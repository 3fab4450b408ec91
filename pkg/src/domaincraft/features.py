"""Text featurization for the domain classifier.

Tokenization is lowercase + Unicode whitespace split. Unigrams index into a
min-count vocabulary; word n-grams (n >= 2) hash into a fixed bucket range
appended after the vocabulary, fastText style. The n-gram hash is FNV-1a
32-bit over the UTF-8 bytes of the space-joined tokens; the hash choice is
part of the model file format and must not change.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

FNV1A_OFFSET = 0x811C9DC5
FNV1A_PRIME = 0x01000193
HASH_NAME = "fnv1a-32"


def fnv1a_32(data: bytes) -> int:
    """FNV-1a 32-bit hash of ``data``.

    Reference vectors: b"" -> 0x811c9dc5, b"a" -> 0xe40c292c,
    b"foobar" -> 0xbf9cf968.
    """
    h = FNV1A_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV1A_PRIME) & 0xFFFFFFFF
    return h


def tokenize(text: str) -> list[str]:
    """Lowercase and split on Unicode whitespace. Empty text -> []."""
    return text.lower().split()


@dataclass(frozen=True)
class Vocabulary:
    """Unigram index plus the hashed n-gram bucket configuration.

    ``index`` maps word -> dense id in [0, word_count). Bucket ids occupy
    [word_count, word_count + bucket_count) in the embedding table.
    """

    index: dict[str, int]
    bucket_count: int
    hash_name: str = HASH_NAME

    def __post_init__(self) -> None:
        if self.bucket_count <= 0:
            raise ValueError("bucket_count must be positive")

    @property
    def word_count(self) -> int:
        return len(self.index)

    @property
    def total_rows(self) -> int:
        return self.word_count + self.bucket_count

    def words(self) -> list[str]:
        """Vocabulary words in index order (the persistence order)."""
        out = [""] * len(self.index)
        for word, idx in self.index.items():
            out[idx] = word
        return out

    @classmethod
    def build(
        cls,
        texts: Iterable[str],
        min_count: int,
        bucket_count: int,
    ) -> "Vocabulary":
        """Build the unigram vocabulary from a pass over ``texts``.

        Words seen fewer than ``min_count`` times are dropped. Ids are
        assigned by descending count, ties broken by the word itself, so
        the mapping is independent of input order.
        """
        if min_count < 1:
            raise ValueError("min_count must be >= 1")
        counts: Counter[str] = Counter()
        for text in texts:
            counts.update(tokenize(text))
        kept = [w for w, c in counts.items() if c >= min_count]
        kept.sort(key=lambda w: (-counts[w], w))
        return cls(index={w: i for i, w in enumerate(kept)}, bucket_count=bucket_count)


def ngram_bucket(tokens: list[str], vocab: Vocabulary) -> int:
    """Embedding row for a word n-gram: hash of the space-joined tokens."""
    joined = " ".join(tokens)
    return vocab.word_count + fnv1a_32(joined.encode("utf-8")) % vocab.bucket_count


def featurize(text: str, vocab: Vocabulary, max_word_ngram: int) -> list[int]:
    """Embedding row indices for ``text``.

    Emission order: in-vocabulary unigrams in token order, then n-grams for
    each n in [2, max_word_ngram] in position order. N-grams are formed over
    the original token sequence, including tokens absent from the vocabulary;
    only the unigram emission drops out-of-vocabulary tokens.
    """
    if max_word_ngram < 1:
        raise ValueError("max_word_ngram must be >= 1")
    tokens = tokenize(text)
    features = [vocab.index[t] for t in tokens if t in vocab.index]
    for n in range(2, max_word_ngram + 1):
        for i in range(len(tokens) - n + 1):
            features.append(ngram_bucket(tokens[i : i + n], vocab))
    return features
