"""Model server implementing the token-classification wire protocol.

The sidecar owns subword/character alignment: every returned token carries
sentence-relative character offsets from the tokenizer's offset mapping, so
clients never re-align text. PAD and special tokens are filtered here.
"""
from __future__ import annotations

from pathlib import Path

import torch
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from transformers import AutoModelForTokenClassification, AutoTokenizer

from .labels import ID2TAG

WIRE_VERSION = "1"
WIRE_VERSION_HEADER = "X-Deid-Wire-Version"

# model alias -> checkpoint; deployments override via --base-model or config
BASE_CHECKPOINTS = {
    "clinicalbert": "emilyalsentzer/Bio_ClinicalBERT",
    "biobert": "dmis-lab/biobert-base-cased-v1.2",
}


class SentenceIn(BaseModel):
    text: str
    offset: int = 0


class PredictRequest(BaseModel):
    sentences: list[SentenceIn]
    model: str | None = None


class ModelBundle:
    def __init__(self, model_dir: str | Path):
        self.tokenizer = AutoTokenizer.from_pretrained(str(model_dir))
        self.model = AutoModelForTokenClassification.from_pretrained(str(model_dir))
        self.model.eval()
        self.max_length = min(
            getattr(self.model.config, "max_position_embeddings", 512), 512
        )
        id2label = getattr(self.model.config, "id2label", None)
        self.id2tag = (
            {int(i): str(tag) for i, tag in id2label.items()} if id2label else dict(ID2TAG)
        )

    def predict_sentences(self, texts: list[str]) -> list[list[dict]]:
        if not texts:
            return []
        encoded = self.tokenizer(
            texts,
            return_offsets_mapping=True,
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
            return_special_tokens_mask=True,
        )
        offset_mapping = encoded.pop("offset_mapping")
        special_mask = encoded.pop("special_tokens_mask")
        with torch.no_grad():
            logits = self.model(
                input_ids=encoded["input_ids"],
                attention_mask=encoded["attention_mask"],
            ).logits
        predicted = logits.argmax(dim=-1)
        out: list[list[dict]] = []
        for row in range(len(texts)):
            tokens = self.tokenizer.convert_ids_to_tokens(encoded["input_ids"][row])
            preds = []
            for col, token in enumerate(tokens):
                if special_mask[row][col].item() == 1:
                    continue
                if encoded["attention_mask"][row][col].item() == 0:
                    continue
                start, end = (int(x) for x in offset_mapping[row][col])
                if start == end:
                    continue
                tag = self.id2tag.get(int(predicted[row][col]), "O")
                if tag == "PAD":
                    tag = "O"  # PAD must never reach the wire
                preds.append({"token": token, "start": start, "end": end, "tag": tag})
            out.append(preds)
        return out

    def token_count(self, text: str) -> int:
        return len(self.tokenizer(text)["input_ids"])


def resolve_model_dir(model_dir: str | None, base_model: str | None) -> str:
    """Prefer a fine-tuned checkpoint directory; fall back to base weights."""
    if model_dir and Path(model_dir, "config.json").exists():
        return model_dir
    if base_model:
        return BASE_CHECKPOINTS.get(base_model, base_model)
    raise FileNotFoundError(
        f"no model checkpoint at {model_dir!r} and no base model configured"
    )


def create_app(model_dir: str | Path, chunking_disabled: bool = False) -> FastAPI:
    bundle = ModelBundle(model_dir)
    app = FastAPI(title="deid ner sidecar")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "max_length": bundle.max_length}

    @app.post("/predict")
    def predict(request: PredictRequest):
        texts = [s.text for s in request.sentences]
        if chunking_disabled:
            for s in request.sentences:
                if bundle.token_count(s.text) > bundle.max_length:
                    return JSONResponse(
                        {"error": f"sentence exceeds {bundle.max_length} tokens"},
                        status_code=422,
                    )
        predictions = bundle.predict_sentences(texts)
        return JSONResponse(
            {"predictions": predictions},
            headers={WIRE_VERSION_HEADER: WIRE_VERSION},
        )

    return app
