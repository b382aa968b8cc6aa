"""Finetuning entry point for the fusion tagger.

Training data is the mined-pairs JSONL produced by the generation pipeline
({"source", "target", ...} per line). Pairs are converted to tag sequences,
the insertion-phrase vocabulary is fixed from the most frequent phrases, and
pairs whose phrases fall outside it are dropped before training. Everything
about the run lands in a JSON log next to the checkpoint.
"""

import json
from collections import Counter

import torch
from torch import nn

from .tagging import (
    DELETE,
    KEEP,
    PAD_ID,
    SENTINEL,
    UNK_ID,
    FusionTagger,
    TaggerNet,
    convert,
    insertion_phrases,
    tokenize,
)

LOSS_IGNORE = -100


class TrainingError(RuntimeError):
    pass


def load_pairs(path: str) -> list[tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                pairs.append((str(obj["source"]), str(obj["target"])))
            except (json.JSONDecodeError, KeyError) as exc:
                raise TrainingError(f"malformed pair on line {lineno} of {path}") from exc
    return pairs


def build_phrase_vocabulary(pairs: list[tuple[str, str]], capacity: int) -> list[str]:
    """The capacity most frequent insertion phrases, deterministically.

    Ties break toward shorter, then lexicographically smaller phrases, so a
    capacity cut never depends on iteration order.
    """
    counts = Counter()
    for source, target in pairs:
        counts.update(insertion_phrases(source, target))
    ranked = sorted(counts.items(), key=lambda item: (-item[1], len(item[0]), item[0]))
    return [phrase for phrase, _ in ranked[:capacity]]


def _feasible(pairs, phrase_vocab):
    allowed = set(phrase_vocab)
    kept, dropped = [], 0
    for source, target in pairs:
        if all(phrase in allowed for phrase in insertion_phrases(source, target)):
            kept.append((source, target))
        else:
            dropped += 1
    return kept, dropped


def _build_token_vocab(pairs):
    vocab = {"<pad>": PAD_ID, "<unk>": UNK_ID, SENTINEL: 2}
    for source, target in pairs:
        for word in tokenize(source) + tokenize(target):
            vocab.setdefault(word, len(vocab))
    return vocab


def train_fusion(
    pairs_path: str,
    out_path: str,
    vocab_size: int = 100,
    updates: int = 10000,
    batch_size: int = 32,
    learning_rate: float = 2e-5,
    seed: int = 0,
    hidden_dim: int = 64,
    max_length: int = 512,
    log_path: str | None = None,
) -> dict:
    """Train the tagger and save a checkpoint loadable by the server.

    Returns the training log (also written as JSON to `log_path`, defaulting
    to the checkpoint path plus ".log.json").
    """
    pairs = load_pairs(pairs_path)
    phrase_vocab = build_phrase_vocabulary(pairs, vocab_size)
    feasible, dropped = _feasible(pairs, phrase_vocab)
    if not feasible:
        raise TrainingError(
            f"no feasible examples after vocabulary filtering "
            f"({len(pairs)} pairs, {dropped} dropped, vocabulary size {vocab_size})"
        )

    labels = [(KEEP, ""), (DELETE, "")] + [(KEEP, phrase) for phrase in phrase_vocab]
    label_ids = {label: i for i, label in enumerate(labels)}
    token_vocab = _build_token_vocab(feasible)

    encoded = []
    for source, target in feasible:
        words = tokenize(source) + [SENTINEL]
        tags = convert(source, target)
        encoded.append((
            [token_vocab.get(w, UNK_ID) for w in words],
            [label_ids[tag] for tag in tags],
        ))

    torch.manual_seed(seed)
    net = TaggerNet(len(token_vocab), len(labels), hidden_dim)
    net.train()
    optimizer = torch.optim.Adam(net.parameters(), lr=learning_rate)
    criterion = nn.CrossEntropyLoss(ignore_index=LOSS_IGNORE)

    loss_curve = []
    sample_every = max(1, updates // 100)
    cursor = 0
    for step in range(1, updates + 1):
        batch = []
        for _ in range(batch_size):
            batch.append(encoded[cursor % len(encoded)])
            cursor += 1
        width = max(len(ids) for ids, _ in batch)
        ids = torch.full((len(batch), width), PAD_ID, dtype=torch.long)
        gold = torch.full((len(batch), width), LOSS_IGNORE, dtype=torch.long)
        for row, (tokens, tags) in enumerate(batch):
            ids[row, : len(tokens)] = torch.tensor(tokens)
            gold[row, : len(tags)] = torch.tensor(tags)

        optimizer.zero_grad()
        logits = net(ids)
        loss = criterion(logits.reshape(-1, len(labels)), gold.reshape(-1))
        loss.backward()
        optimizer.step()
        if step % sample_every == 0 or step == updates:
            loss_curve.append([step, round(loss.item(), 6)])

    tagger = FusionTagger(net, token_vocab, labels, max_length)
    tagger.save(out_path)

    log = {
        "updates": updates,
        "batch_size": batch_size,
        "learning_rate": learning_rate,
        "vocab_size": vocab_size,
        "phrase_vocab_used": len(phrase_vocab),
        "label_count": len(labels),
        "token_vocab_size": len(token_vocab),
        "feasible_examples": len(feasible),
        "dropped_examples": dropped,
        "final_loss": loss_curve[-1][1] if loss_curve else None,
        "loss_curve": loss_curve,
    }
    destination = log_path or out_path + ".log.json"
    with open(destination, "w", encoding="utf-8") as handle:
        json.dump(log, handle, indent=2)
        handle.write("\n")
    return log
