"""Fine-tuning on an annotated i2b2 XML corpus.

IO labeling at token level via the tokenizer's offset mapping, seeded 80/20
document split, and a classification report in the shared JSON format written
next to the checkpoint.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

import torch
from torch.utils.data import DataLoader, Dataset
from transformers import AutoModelForTokenClassification, AutoTokenizer

from .corpus import AnnotatedLetter, char_tag, load_corpus, sentences_with_offsets
from .labels import IGNORE_INDEX, TAG2ID, TAGS
from .server import resolve_model_dir


@dataclass
class TrainConfig:
    base_model: str  # alias (clinicalbert/biobert) or checkpoint path
    corpus_dir: str
    output_dir: str
    learning_rate: float = 3e-5
    batch_size: int = 32
    epochs: int = 15
    train_split: float = 0.8
    max_length: int = 128
    seed: int = 13

    def __post_init__(self):
        if not 0.0 < self.train_split < 1.0:
            raise ValueError("train_split must be in (0,1)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def split_documents(letters: list[AnnotatedLetter], ratio: float, seed: int):
    ordered = sorted(letters, key=lambda l: l.doc_id)
    random.Random(seed).shuffle(ordered)
    cut = max(1, round(len(ordered) * ratio)) if len(ordered) > 1 else 1
    return ordered[:cut], ordered[cut:]


class SentenceDataset(Dataset):
    def __init__(self, letters: list[AnnotatedLetter], tokenizer, max_length: int):
        self.examples = []
        for letter in letters:
            for text, offset in sentences_with_offsets(letter.text):
                relative = tuple(
                    (s - offset, e - offset, tag)
                    for s, e, tag in letter.spans
                    if s >= offset and e <= offset + len(text)
                )
                self.examples.append((text, relative))
        self.tokenizer = tokenizer
        self.max_length = max_length

    def __len__(self):
        return len(self.examples)

    def __getitem__(self, idx):
        text, spans = self.examples[idx]
        encoded = self.tokenizer(
            text,
            truncation=True,
            max_length=self.max_length,
            padding="max_length",
            return_offsets_mapping=True,
            return_special_tokens_mask=True,
        )
        labels = []
        for (start, end), special in zip(
            encoded["offset_mapping"], encoded["special_tokens_mask"]
        ):
            if special == 1 or start == end:
                labels.append(IGNORE_INDEX)
            else:
                labels.append(TAG2ID[char_tag(spans, start, end)])
        return {
            "input_ids": torch.tensor(encoded["input_ids"]),
            "attention_mask": torch.tensor(encoded["attention_mask"]),
            "labels": torch.tensor(labels),
        }


def _metrics_row(tp: int, fp: int, fn: int) -> dict:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1, "support": tp + fn}


def evaluate(model, loader, device) -> dict:
    """Token-level classification report over the entity tags."""
    counts = {tag: [0, 0, 0] for tag in TAGS if tag not in ("O", "PAD")}
    model.eval()
    with torch.no_grad():
        for batch in loader:
            logits = model(
                input_ids=batch["input_ids"].to(device),
                attention_mask=batch["attention_mask"].to(device),
            ).logits
            predicted = logits.argmax(dim=-1).cpu()
            for pred_row, gold_row in zip(predicted, batch["labels"]):
                for p, g in zip(pred_row.tolist(), gold_row.tolist()):
                    if g == IGNORE_INDEX:
                        continue
                    p_tag, g_tag = TAGS[p], TAGS[g]
                    if g_tag == p_tag and g_tag in counts:
                        counts[g_tag][0] += 1
                    else:
                        if p_tag in counts:
                            counts[p_tag][1] += 1
                        if g_tag in counts:
                            counts[g_tag][2] += 1
    per_type = {tag: _metrics_row(*c) for tag, c in counts.items()}
    pooled = [sum(c[i] for c in counts.values()) for i in range(3)]
    support = sum(row["support"] for row in per_type.values())
    n = len(per_type)
    macro = {
        key: sum(row[key] for row in per_type.values()) / n
        for key in ("precision", "recall", "f1")
    }
    weighted = {
        key: (
            sum(row[key] * row["support"] for row in per_type.values()) / support
            if support else 0.0
        )
        for key in ("precision", "recall", "f1")
    }
    return {
        "per_type": per_type,
        "micro_avg": _metrics_row(*pooled),
        "macro_avg": {**macro, "support": support},
        "weighted_avg": {**weighted, "support": support},
    }


def train(config: TrainConfig) -> dict:
    torch.manual_seed(config.seed)
    letters = load_corpus(Path(config.corpus_dir))
    train_letters, test_letters = split_documents(letters, config.train_split, config.seed)
    if not test_letters:
        test_letters = train_letters[-1:]

    checkpoint = resolve_model_dir(None, config.base_model)
    tokenizer = AutoTokenizer.from_pretrained(checkpoint)
    model = AutoModelForTokenClassification.from_pretrained(
        checkpoint,
        num_labels=len(TAGS),
        id2label={i: tag for i, tag in enumerate(TAGS)},
        label2id=dict(TAG2ID),
        ignore_mismatched_sizes=True,
    )
    device = torch.device("cuda" if torch.cuda.is_available() else "cpu")
    model.to(device)

    train_data = SentenceDataset(train_letters, tokenizer, config.max_length)
    test_data = SentenceDataset(test_letters, tokenizer, config.max_length)
    train_loader = DataLoader(train_data, batch_size=config.batch_size, shuffle=True,
                              generator=torch.Generator().manual_seed(config.seed))
    test_loader = DataLoader(test_data, batch_size=config.batch_size)

    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    model.train()
    for epoch in range(config.epochs):
        total = 0.0
        for batch in train_loader:
            optimizer.zero_grad()
            out = model(
                input_ids=batch["input_ids"].to(device),
                attention_mask=batch["attention_mask"].to(device),
                labels=batch["labels"].to(device),
            )
            out.loss.backward()
            optimizer.step()
            total += float(out.loss.detach())
        print(f"epoch {epoch + 1}/{config.epochs} loss {total / max(1, len(train_loader)):.4f}")

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    report = evaluate(model, test_loader, device)
    report["split"] = {
        "train_docs": [l.doc_id for l in train_letters],
        "test_docs": [l.doc_id for l in test_letters],
        "seed": config.seed,
    }
    (out_dir / "classification_report.json").write_text(json.dumps(report, indent=2))
    return report
