"""Fluency scoring over a causal language model.

The score of a text is the geometric mean of its token probabilities under
the model, computed over the model's own tokens. Texts are scored one at a
time on purpose: no padding or batching artifact can make a text's score
depend on what else arrived in the same request.
"""

import math

import torch


class OverLengthError(ValueError):
    """Input exceeds the configured token limit."""

    def __init__(self, length: int, limit: int):
        super().__init__(f"text of {length} tokens exceeds the {limit}-token limit")
        self.length = length
        self.limit = limit


_BYTE_BOS = 256  # one id past the byte range
_TINY_SEED = 1234


def _build_tiny_model(max_length: int):
    """A small byte-level GPT-2 with seeded random weights.

    Not a trained model; it exists so the server runs deterministically
    without downloading weights. Swap in a real model identifier for
    meaningful fluency scores.
    """
    from transformers import GPT2Config, GPT2LMHeadModel

    torch.manual_seed(_TINY_SEED)
    config = GPT2Config(
        vocab_size=_BYTE_BOS + 1,
        n_positions=max_length + 8,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=_BYTE_BOS,
        eos_token_id=_BYTE_BOS,
    )
    model = GPT2LMHeadModel(config)
    model.eval()
    return model


class CausalScorer:
    """Geometric-mean token-probability scorer.

    With the built-in byte-level model every real token conditions on a
    beginning-of-text marker, so all of them contribute a probability. A
    loaded tokenizer without a BOS token loses its first token to
    unconditioned position; such texts need at least two tokens.
    """

    def __init__(self, model_id: str = "tiny-char", max_length: int = 512):
        self.model_id = model_id
        self.max_length = max_length
        if model_id == "tiny-char":
            self._model = _build_tiny_model(max_length)
            self._tokenizer = None
        else:
            from transformers import AutoModelForCausalLM, AutoTokenizer

            self._tokenizer = AutoTokenizer.from_pretrained(model_id)
            self._model = AutoModelForCausalLM.from_pretrained(model_id)
            self._model.eval()

    def _encode(self, text: str) -> list[int]:
        """Model token ids with a BOS prepended when the model has one."""
        if self._tokenizer is None:
            ids = [_BYTE_BOS] + list(text.encode("utf-8"))
            real = len(ids) - 1
        else:
            ids = self._tokenizer(text, add_special_tokens=False)["input_ids"]
            bos = self._tokenizer.bos_token_id
            real = len(ids)
            if bos is not None and (not ids or ids[0] != bos):
                ids = [bos] + ids
        if real < 1:
            raise ValueError("empty text cannot be scored")
        if real > self.max_length:
            raise OverLengthError(real, self.max_length)
        if len(ids) < 2:
            raise ValueError("text too short to score without a BOS token")
        return ids

    def score(self, text: str) -> float:
        ids = self._encode(text)
        tensor = torch.tensor([ids], dtype=torch.long)
        with torch.no_grad():
            logits = self._model(tensor).logits[0]
        log_probs = torch.log_softmax(logits[:-1].double(), dim=-1)
        token_log_probs = log_probs[range(len(ids) - 1), ids[1:]]
        mean = token_log_probs.mean().item()
        return min(math.exp(max(mean, -700.0)), 1.0)

    def score_batch(self, texts: list[str]) -> list[float]:
        return [self.score(text) for text in texts]
