"""Token and context encoders.

Every word is represented by the concatenation of a word-level vector
and a character-level CNN vector.  The word-level part comes from one of
two providers: a trainable embedding table over the corpus vocabulary,
or a frozen external provider looked up by surface form.  Dialogue
context tokens are then contextualized with a single-layer biGRU whose
input also carries role embeddings and exact-match features.
"""
from __future__ import annotations

import hashlib

import numpy as np
import torch
import torch.nn as nn

from .corpus import UNK_TOKEN, Vocabulary
from .errors import ShapeError
from .text import tokenize


class CharVocabulary:
    """Character -> id table; 0 is padding, 1 is the unknown character."""

    PAD = 0
    UNK = 1

    def __init__(self, tokens):
        chars = sorted({ch for token in tokens for ch in token})
        self._ids = {ch: i + 2 for i, ch in enumerate(chars)}

    def __len__(self):
        return len(self._ids) + 2

    def encode(self, token: str) -> list[int]:
        return [self._ids.get(ch, self.UNK) for ch in token]

    def to_dict(self) -> dict[str, int]:
        return dict(self._ids)

    @classmethod
    def from_dict(cls, mapping: dict[str, int]) -> "CharVocabulary":
        vocab = cls([])
        vocab._ids = dict(mapping)
        return vocab


class CharCnn(nn.Module):
    """Character-level word encoding: embed characters, convolve, then
    max over time.  Same-padding keeps single-character words valid."""

    def __init__(self, n_chars, char_dim=16, n_filters=32, kernel=5):
        super().__init__()
        self.emb = nn.Embedding(n_chars, char_dim, padding_idx=CharVocabulary.PAD)
        self.conv = nn.Conv1d(char_dim, n_filters, kernel, padding=kernel // 2)
        self.n_filters = n_filters

    def forward(self, char_ids):
        # char_ids: (L, W) long
        x = self.emb(char_ids)              # (L, W, C)
        x = self.conv(x.transpose(1, 2))    # (L, F, W)
        return x.max(dim=2).values          # (L, F)


class HashedWordProvider:
    """Frozen word vectors derived deterministically from the token's
    hash.  Stands in for an external pretrained lookup: out-of-vocabulary
    words still get stable, distinct vectors, and nothing here trains.
    """

    def __init__(self, dim: int = 48):
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, tokens: list[str]) -> torch.Tensor:
        rows = []
        for token in tokens:
            vec = self._cache.get(token)
            if vec is None:
                seed = int.from_bytes(hashlib.sha1(token.encode()).digest()[:4], "big")
                vec = np.random.RandomState(seed).standard_normal(self.dim) / np.sqrt(self.dim)
                self._cache[token] = vec
            rows.append(vec)
        return torch.from_numpy(np.stack(rows))


class TokenEncoder(nn.Module):
    """Word-level + character-level embedding of a token sequence.

    Args:
        vocabulary: corpus vocabulary (used only by the trainable table).
        char_vocab: character table shared by both provider paths.
        word_dim: size of the trainable word embedding.
        provider: frozen word-vector provider; when given, it replaces
            the trainable table and ``word_dim`` is ignored.
        word_dropout: probability of replacing a token's word lookup
            with the unknown token (training mode only); the char path
            always sees the surface form.
    """

    def __init__(
        self,
        vocabulary: Vocabulary,
        char_vocab: CharVocabulary,
        word_dim=64,
        char_dim=16,
        char_filters=16,
        char_kernel=5,
        provider: HashedWordProvider | None = None,
        word_dropout=0.1,
    ):
        super().__init__()
        self.vocabulary = vocabulary
        self.char_vocab = char_vocab
        self.provider = provider
        self.word_dropout = word_dropout
        if provider is None:
            self.word_emb = nn.Embedding(len(vocabulary), word_dim)
            word_part = word_dim
        else:
            self.word_emb = None
            word_part = provider.dim
        self.char_cnn = CharCnn(len(char_vocab), char_dim, char_filters, char_kernel)
        self.dim = word_part + char_filters

    def _char_ids(self, tokens, device):
        width = max(len(t) for t in tokens)
        ids = torch.full((len(tokens), width), CharVocabulary.PAD, dtype=torch.long, device=device)
        for i, token in enumerate(tokens):
            encoded = self.char_vocab.encode(token)
            ids[i, : len(encoded)] = torch.tensor(encoded, dtype=torch.long, device=device)
        return ids

    def forward(self, tokens: list[str], drop: bool | None = None) -> torch.Tensor:
        if not tokens:
            raise ShapeError("cannot encode an empty token sequence")
        drop = self.training if drop is None else drop
        word_tokens = tokens
        if drop and self.word_dropout > 0:
            # the word lookup is dropped to the unknown token, the char
            # path keeps the surface form: rare words then train the
            # same char-matching route that out-of-vocabulary candidate
            # values rely on at inference time
            mask = torch.rand(len(tokens))
            word_tokens = [
                UNK_TOKEN if mask[i].item() < self.word_dropout else token
                for i, token in enumerate(tokens)
            ]
        dtype = self.char_cnn.conv.weight.dtype
        device = self.char_cnn.conv.weight.device
        if self.provider is not None:
            word = self.provider.embed(word_tokens).to(device=device, dtype=dtype)
        else:
            ids = torch.tensor(self.vocabulary.ids(word_tokens), dtype=torch.long, device=device)
            word = self.word_emb(ids)
        chars = self.char_cnn(self._char_ids(tokens, device))
        return torch.cat([word, chars], dim=1)

    def embed_text(self, text: str) -> torch.Tensor:
        """Mean of the token embeddings of ``text``; used for question
        elements (domain names, slot names, candidate values)."""
        return self.forward(tokenize(text), drop=False).mean(dim=0)


class ContextEncoder(nn.Module):
    """biGRU over [token embedding; role embedding; exact-match row].

    The per-direction hidden size is half the token embedding size, so
    the output keeps the token embedding width.
    """

    def __init__(self, token_dim, feature_dim, role_dim=16, dropout=0.5):
        super().__init__()
        if token_dim % 2 != 0:
            raise ShapeError(f"token embedding size must be even, got {token_dim}")
        self.role_emb = nn.Embedding(2, role_dim)
        self.drop = nn.Dropout(dropout)
        self.gru = nn.GRU(
            token_dim + role_dim + feature_dim,
            token_dim // 2,
            num_layers=1,
            bidirectional=True,
            batch_first=True,
        )

    def forward(self, token_vecs, roles, features):
        # token_vecs (L, D), roles (L,) long, features (L, 2P)
        if token_vecs.shape[0] != roles.shape[0] or token_vecs.shape[0] != features.shape[0]:
            raise ShapeError(
                f"misaligned context inputs: {token_vecs.shape[0]} tokens, "
                f"{roles.shape[0]} roles, {features.shape[0]} feature rows"
            )
        x = torch.cat([token_vecs, self.role_emb(roles), features.to(token_vecs.dtype)], dim=1)
        x = self.drop(x)
        out, _ = self.gru(x.unsqueeze(0))
        return out.squeeze(0)
