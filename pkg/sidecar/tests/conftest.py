import json
import re
from pathlib import Path

import pytest
import torch
from transformers import AutoTokenizer, BertConfig, BertForTokenClassification

from ner_sidecar.labels import TAG2ID, TAGS

# names kept OUT of the vocab whole so wordpiece must split them
SUBWORD_NAMES = ["beverly", "clarkfield", "thiel", "okonkwo", "marisol"]
SUBWORD_PIECES = [
    "be", "##ve", "##rly", "cl", "##ark", "##field", "th", "##iel",
    "ok", "##on", "##kwo", "ma", "##ri", "##sol",
]

BASE_WORDS = """
record date dr saw the patient a yo carpenter from admitted for observation
cancer screening arranged next review with seen on stable since plan follow
up in was here visit note old years clinic signed off mother by is an at
presented scheduled librarian baker florist welder age street city young
""".split()


def build_tiny_model(target: Path, extra_words=()) -> Path:
    digits = [str(n) for n in range(100)] + ["2071", "2023", "1971", "08", "13", "15"]
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab += sorted(set(BASE_WORDS) | set(extra_words)) + SUBWORD_PIECES + digits
    vocab += [".", ",", ":", ";", "-", "/", "(", ")"]
    target.mkdir(parents=True, exist_ok=True)
    (target / "vocab.txt").write_text("\n".join(vocab) + "\n")
    (target / "tokenizer_config.json").write_text(
        json.dumps({"tokenizer_class": "BertTokenizerFast", "do_lower_case": True})
    )
    torch.manual_seed(7)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=128,
        num_labels=len(TAGS),
        id2label={i: tag for i, tag in enumerate(TAGS)},
        label2id=dict(TAG2ID),
    )
    model = BertForTokenClassification(config)
    model.save_pretrained(target)
    return target


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> Path:
    return build_tiny_model(tmp_path_factory.mktemp("tiny-model"))


LETTER_TEMPLATE = """<deIdi2b2><TEXT><![CDATA[{text}]]></TEXT><TAGS>{tags}</TAGS></deIdi2b2>"""

NAMES = ["Beverly", "Thiel", "Okonkwo", "Marisol", "Clarkfield"]


def synthetic_corpus(directory: Path, letters: int = 20) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for i in range(letters):
        name = NAMES[i % len(NAMES)]
        age = 20 + (i * 3) % 60
        text = (
            f"Record date: 2071-01-{(i % 27) + 1:02d}\n"
            f"Dr. {name} saw the patient, a {age} yo carpenter from Clarkfield.\n"
            f"Next review with {name} in 2071.\n"
        )
        tags = []
        for m in re.finditer(re.escape(name), text):
            tags.append(f'<NAME start="{m.start()}" end="{m.end()}" text="{name}" TYPE="DOCTOR"/>')
        date = text[13:23]
        tags.append(f'<DATE start="13" end="23" text="{date}" TYPE="DATE"/>')
        for m in re.finditer(rf"{age} yo", text):
            tags.append(f'<AGE start="{m.start()}" end="{m.end()}" text="{age} yo" TYPE="AGE"/>')
        for m in re.finditer("Clarkfield", text):
            tags.append(
                f'<LOCATION start="{m.start()}" end="{m.end()}" text="Clarkfield" TYPE="CITY"/>'
            )
        (directory / f"letter{i:02d}.xml").write_text(
            LETTER_TEMPLATE.format(text=text, tags="".join(tags))
        )
    return directory


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    return synthetic_corpus(tmp_path_factory.mktemp("corpus"))
