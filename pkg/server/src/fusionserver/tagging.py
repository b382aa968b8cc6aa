"""Word-level edit-tagging fusion model.

A fused sentence is predicted as one tag per source token: KEEP or DELETE,
optionally carrying a phrase to insert before the token. A sentinel token
appended to the source gives trailing insertions somewhere to attach. The
label set is closed over a phrase vocabulary fixed at training time, which
is what makes the tagger fast and hard to lead astray; text it cannot reach
with those labels it simply never produces.
"""

import math
import re
from dataclasses import dataclass

import torch
from torch import nn

SENTINEL = "<eos>"
PAD_ID = 0
UNK_ID = 1

_TOKEN_RE = re.compile(r'[.,;:!?"()]|[^\s.,;:!?"()]+')
_SPACE_BEFORE = re.compile(r"\s+([.,;:!?)])")
_SPACE_AFTER_OPEN = re.compile(r"\(\s+")

KEEP = "KEEP"
DELETE = "DELETE"


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def detokenize(tokens: list[str]) -> str:
    text = " ".join(tokens)
    text = _SPACE_BEFORE.sub(r"\1", text)
    return _SPACE_AFTER_OPEN.sub("(", text)


def _lcs_matches(source: list[str], target: list[str]) -> list[tuple[int, int]]:
    """One maximal monotone alignment between two token lists."""
    n, m = len(source), len(target)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if source[i] == target[j]:
                table[i][j] = table[i + 1][j + 1] + 1
            else:
                table[i][j] = max(table[i + 1][j], table[i][j + 1])
    matches = []
    i = j = 0
    while i < n and j < m:
        if source[i] == target[j]:
            matches.append((i, j))
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return matches


def convert(source: str, target: str) -> list[tuple[str, str]]:
    """Tags turning source into target, one per source token plus sentinel.

    Each tag is (op, phrase); the phrase (possibly empty) is inserted before
    the token the tag sits on. Unmatched target tokens pool into the phrase
    of the next matched source position, or the sentinel at the end.
    """
    src = tokenize(source)
    tgt = tokenize(target)
    matched = dict(_lcs_matches(src, tgt))
    tags = []
    cursor = 0
    for i in range(len(src)):
        if i in matched:
            j = matched[i]
            tags.append((KEEP, " ".join(tgt[cursor:j])))
            cursor = j + 1
        else:
            tags.append((DELETE, ""))
    tags.append((KEEP, " ".join(tgt[cursor:])))
    return tags


def apply_tags(tags: list[tuple[str, str]], source: str) -> str:
    tokens = tokenize(source) + [SENTINEL]
    if len(tags) != len(tokens):
        raise ValueError(f"expected {len(tokens)} tags, got {len(tags)}")
    out = []
    for (op, phrase), token in zip(tags, tokens):
        if phrase:
            out.extend(phrase.split(" "))
        if op == KEEP and token != SENTINEL:
            out.append(token)
    return detokenize(out)


def insertion_phrases(source: str, target: str) -> list[str]:
    """The non-empty phrases a pair needs, in tag order."""
    return [phrase for _, phrase in convert(source, target) if phrase]


class TaggerNet(nn.Module):
    """Token embeddings, a bidirectional GRU, and a per-token label head."""

    def __init__(self, n_tokens: int, n_labels: int, dim: int = 64):
        super().__init__()
        self.embed = nn.Embedding(n_tokens, dim, padding_idx=PAD_ID)
        self.rnn = nn.GRU(dim, dim, batch_first=True, bidirectional=True)
        self.head = nn.Linear(2 * dim, n_labels)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        hidden, _ = self.rnn(self.embed(ids))
        return self.head(hidden)


@dataclass(frozen=True)
class FusedHypothesis:
    text: str
    score: float


class FusionTagger:
    """Inference wrapper: tokenize, tag with a beam, apply, dedupe."""

    def __init__(self, net: TaggerNet, token_vocab: dict, labels: list, max_length: int = 512):
        self.net = net
        self.net.eval()
        self.token_vocab = token_vocab
        self.labels = [tuple(label) for label in labels]
        self.max_length = max_length

    def _encode(self, words: list[str]) -> torch.Tensor:
        ids = [self.token_vocab.get(w, UNK_ID) for w in words]
        return torch.tensor([ids], dtype=torch.long)

    def fuse(self, text: str, beam_size: int) -> list[FusedHypothesis]:
        """Up to beam_size fused candidates, best model score first.

        Scores are the exponential of the raw label-sequence log-probability.
        Candidates whose edits erase the whole text are dropped, so fewer
        than beam_size hypotheses can come back.
        """
        if beam_size < 1:
            raise ValueError("beam size must be at least 1")
        words = tokenize(text)
        if not words:
            raise ValueError("empty text cannot be fused")
        if len(words) > self.max_length:
            raise OverLengthInput(len(words), self.max_length)
        words = words + [SENTINEL]
        with torch.no_grad():
            logits = self.net(self._encode(words))[0]
        log_probs = torch.log_softmax(logits.double(), dim=-1)

        beams: list[tuple[float, list[int]]] = [(0.0, [])]
        k = min(beam_size, log_probs.shape[1])
        for position in range(len(words)):
            top = torch.topk(log_probs[position], k)
            extended = [
                (score + lp.item(), seq + [label.item()])
                for score, seq in beams
                for lp, label in zip(top.values, top.indices)
            ]
            extended.sort(key=lambda item: -item[0])
            beams = extended[:beam_size]

        source = detokenize(words[:-1])
        seen = set()
        out = []
        for total, seq in beams:
            tags = [self.labels[label] for label in seq]
            fused = apply_tags(tags, source)
            if not fused.strip() or fused in seen:
                continue
            seen.add(fused)
            out.append(FusedHypothesis(fused, math.exp(max(total, -700.0))))
        return out

    def save(self, path: str) -> None:
        torch.save(
            {
                "state_dict": self.net.state_dict(),
                "token_vocab": self.token_vocab,
                "labels": [list(label) for label in self.labels],
                "dim": self.net.rnn.hidden_size,
                "max_length": self.max_length,
            },
            path,
        )


class OverLengthInput(ValueError):
    """Fusion input exceeds the configured token limit."""

    def __init__(self, length: int, limit: int):
        super().__init__(f"text of {length} tokens exceeds the {limit}-token limit")
        self.length = length
        self.limit = limit


def load_tagger(path: str) -> FusionTagger:
    payload = torch.load(path, weights_only=True)
    labels = [tuple(label) for label in payload["labels"]]
    net = TaggerNet(len(payload["token_vocab"]), len(labels), payload["dim"])
    net.load_state_dict(payload["state_dict"])
    return FusionTagger(net, payload["token_vocab"], labels, payload["max_length"])
