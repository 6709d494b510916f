"""Fine-tuning loop with the two-term combined objective.

Per batch the loss is the mean cross-entropy over the human-labelled
rows plus the mean cross-entropy over the inferred rows, each side
averaged separately and an absent side contributing zero. The learning
rate warms up linearly over the first fraction of total steps, then
stays constant; the epoch snapshot with the lowest full-train loss is
the one served (the wire format carries no dev set).
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F


@dataclass
class TrainSettings:
    batch_size: int = 128
    max_tokens: int = 128
    learning_rate: float = 1e-5
    warmup_fraction: float = 0.15
    weight_decay: float = 0.001
    epochs: int = 20
    dropout_rate: float = 0.10
    seed: int = 0
    model: str = "tiny"

    @classmethod
    def from_payload(cls, payload: dict) -> "TrainSettings":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in payload.items() if k in known})


@dataclass
class TrainOutcome:
    selected_epoch: int
    train_loss: float
    history: list[float] = field(default_factory=list)


def _encode(tokenizer, texts: list[str], max_tokens: int):
    return tokenizer(texts, padding=True, truncation=True,
                     max_length=max_tokens, return_tensors="pt")


def _combined_batch_loss(logits: torch.Tensor, labels: torch.Tensor,
                         is_labelled: torch.Tensor) -> torch.Tensor:
    per_example = F.cross_entropy(logits, labels, reduction="none")
    loss = logits.new_zeros(())
    if bool(is_labelled.any()):
        loss = loss + per_example[is_labelled].mean()
    if bool((~is_labelled).any()):
        loss = loss + per_example[~is_labelled].mean()
    return loss


def finetune(model, tokenizer, labelled: list[dict], inferred: list[dict],
             settings: TrainSettings, device: str = "cpu") -> TrainOutcome:
    torch.manual_seed(settings.seed)
    model.to(device)

    rows = [(ex["text"], int(ex["label"]), True) for ex in labelled]
    rows += [(ex["text"], int(ex["label"]), False) for ex in inferred]
    encoded = _encode(tokenizer, [r[0] for r in rows], settings.max_tokens)
    input_ids = encoded["input_ids"].to(device)
    attention_mask = encoded["attention_mask"].to(device)
    labels = torch.tensor([r[1] for r in rows], device=device)
    is_labelled = torch.tensor([r[2] for r in rows], device=device)

    n = len(rows)
    batches_per_epoch = math.ceil(n / settings.batch_size)
    total_steps = settings.epochs * batches_per_epoch
    warmup_steps = int(settings.warmup_fraction * total_steps)

    optimizer = torch.optim.AdamW(model.parameters(), lr=settings.learning_rate,
                                  weight_decay=settings.weight_decay)
    schedule = torch.optim.lr_scheduler.LambdaLR(
        optimizer,
        lambda step: min(1.0, (step + 1) / warmup_steps) if warmup_steps else 1.0)

    generator = torch.Generator().manual_seed(settings.seed)
    history: list[float] = []
    best: tuple[float, int, dict] | None = None

    for epoch in range(1, settings.epochs + 1):
        model.train()
        order = torch.randperm(n, generator=generator)
        for start in range(0, n, settings.batch_size):
            rows_idx = order[start : start + settings.batch_size]
            logits = model(input_ids=input_ids[rows_idx],
                           attention_mask=attention_mask[rows_idx]).logits
            loss = _combined_batch_loss(logits, labels[rows_idx], is_labelled[rows_idx])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            schedule.step()

        model.eval()
        with torch.no_grad():
            ce_chunks = []
            for start in range(0, n, settings.batch_size):
                sl = slice(start, start + settings.batch_size)
                logits = model(input_ids=input_ids[sl],
                               attention_mask=attention_mask[sl]).logits
                ce_chunks.append(F.cross_entropy(logits, labels[sl], reduction="none"))
            ce = torch.cat(ce_chunks)
            epoch_loss = 0.0
            if bool(is_labelled.any()):
                epoch_loss += float(ce[is_labelled].mean())
            if bool((~is_labelled).any()):
                epoch_loss += float(ce[~is_labelled].mean())
        history.append(epoch_loss)
        if best is None or epoch_loss < best[0]:
            best = (epoch_loss, epoch,
                    {k: v.detach().clone() for k, v in model.state_dict().items()})

    assert best is not None
    loss, epoch, state = best
    model.load_state_dict(state)
    model.eval()
    return TrainOutcome(selected_epoch=epoch, train_loss=loss, history=history)


@torch.no_grad()
def predict_probs(model, tokenizer, texts: list[str], max_tokens: int,
                  batch_size: int = 128, device: str = "cpu") -> list[list[float]]:
    if not texts:
        return []
    model.eval()
    out: list[list[float]] = []
    for start in range(0, len(texts), batch_size):
        encoded = _encode(tokenizer, texts[start : start + batch_size], max_tokens)
        logits = model(input_ids=encoded["input_ids"].to(device),
                       attention_mask=encoded["attention_mask"].to(device)).logits
        probs = torch.softmax(logits.double(), dim=-1)
        probs = probs / probs.sum(dim=-1, keepdim=True)  # exact renormalization
        out.extend(row.tolist() for row in probs.cpu())
    return out
