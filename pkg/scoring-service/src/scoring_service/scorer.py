"""Answer-choice scoring over a seq2seq model.

For each (input, choice) pair the scorer sums the model's conditional
log-probabilities of the choice's tokens given the input and divides by the
choice's token count, so multi-token answers compete on equal footing with
single-token ones.  Scoring only; nothing is sampled or generated, so
identical requests always return identical numbers.
"""

from __future__ import annotations

import threading
from typing import Protocol, Sequence

import torch
import torch.nn.functional as F


class Scorer(Protocol):
    def score_choices(self, input: str, choices: Sequence[str]) -> list: ...


class Seq2SeqScorer:
    """Length-normalized choice scoring with a Hugging Face seq2seq model.

    The model runs in eval mode on a single device behind a lock; concurrent
    requests serialize onto it.  ``batch_size`` caps how many (input, choice)
    pairs go through one forward pass.
    """

    def __init__(self, model_name_or_path: str, batch_size: int = 8, device: str = "cpu"):
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.model_name = model_name_or_path
        self.batch_size = batch_size
        self.device = torch.device(device)
        self.tokenizer = AutoTokenizer.from_pretrained(model_name_or_path)
        self.model = AutoModelForSeq2SeqLM.from_pretrained(model_name_or_path)
        self.model.to(self.device)
        self.model.eval()
        self._lock = threading.Lock()

    def score_choices(self, input: str, choices: Sequence[str]) -> list:
        pairs = [(input, choice) for choice in choices]
        return self.score_pairs(pairs)

    def score_pairs(self, pairs: Sequence[tuple]) -> list:
        scores: list = []
        with self._lock:
            for start in range(0, len(pairs), self.batch_size):
                scores.extend(self._score_batch(pairs[start : start + self.batch_size]))
        return scores

    @torch.no_grad()
    def _score_batch(self, pairs: Sequence[tuple]) -> list:
        inputs = [src for src, _ in pairs]
        targets = [tgt for _, tgt in pairs]
        enc = self.tokenizer(
            inputs, return_tensors="pt", padding=True, truncation=True
        ).to(self.device)
        tgt = self.tokenizer(
            targets, return_tensors="pt", padding=True, truncation=True
        ).to(self.device)
        labels = tgt.input_ids.masked_fill(tgt.attention_mask == 0, -100)
        logits = self.model(
            input_ids=enc.input_ids, attention_mask=enc.attention_mask, labels=labels
        ).logits
        log_probs = F.log_softmax(logits.float(), dim=-1)
        token_ids = tgt.input_ids.clamp_min(0).unsqueeze(-1)
        picked = log_probs.gather(-1, token_ids).squeeze(-1)
        mask = tgt.attention_mask.to(picked.dtype)
        summed = (picked * mask).sum(dim=-1)
        lengths = mask.sum(dim=-1).clamp_min(1.0)
        return (summed / lengths).tolist()
