"""Headless front-end: batch de-identification, evaluation, and risk reports.

Exit codes: 0 full success, 1 configuration error, 2 partial success with
per-file errors listed on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace as dc_replace
from importlib import resources
from pathlib import Path

from .evaluation import MatchMode, render_text, report, score
from .ingestion import (
    Lexicon,
    load_gold_annotations,
    load_letter_text,
    load_letter_xml,
    load_lexicon_csv,
    load_lexicon_txt,
)
from .masking import SurrogateSources
from .pipeline import PipelineConfig, run_batch
from .risk import assess, extract_contexts
from .types import (
    DeidError,
    Document,
    EntityType,
    masked_doc_from_dict,
    masked_doc_to_dict,
    settings_from_dict,
    span_from_dict,
)


def _load_lexicon_file(path: Path, etype: EntityType) -> Lexicon:
    data = path.read_bytes()
    if path.suffix.lower() == ".csv":
        return load_lexicon_csv(data, etype)
    return load_lexicon_txt(data, etype)


def load_default_surrogates() -> SurrogateSources:
    data = resources.files("deidkit.data")
    return SurrogateSources(
        surnames=load_lexicon_csv(data.joinpath("surnames.csv").read_bytes(), EntityType.NAME),
        full_names=load_lexicon_csv(data.joinpath("full_names.csv").read_bytes(), EntityType.NAME),
        locations=load_lexicon_csv(data.joinpath("locations.csv").read_bytes(), EntityType.LOCATION),
        professions=load_lexicon_csv(data.joinpath("professions.csv").read_bytes(), EntityType.PROFESSION),
    )


def load_surrogates_dir(directory: Path) -> SurrogateSources:
    def pick(stem: str, etype: EntityType) -> Lexicon | None:
        for ext in (".csv", ".txt"):
            path = directory / (stem + ext)
            if path.exists():
                return _load_lexicon_file(path, etype)
        return None

    defaults = load_default_surrogates()
    return SurrogateSources(
        surnames=pick("surnames", EntityType.NAME) or defaults.surnames,
        full_names=pick("full_names", EntityType.NAME) or defaults.full_names,
        locations=pick("locations", EntityType.LOCATION) or defaults.locations,
        professions=pick("professions", EntityType.PROFESSION) or defaults.professions,
    )


_LEXICON_PREFIXES = (
    ("name", EntityType.NAME),
    ("surname", EntityType.NAME),
    ("location", EntityType.LOCATION),
    ("profession", EntityType.PROFESSION),
)


def load_recognition_lexicons(directory: Path) -> dict[EntityType, Lexicon]:
    """Files are assigned by stem prefix: name*, surname*, location*, profession*."""
    merged: dict[EntityType, list[str]] = {}
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() not in (".csv", ".txt"):
            continue
        stem = path.stem.lower()
        for prefix, etype in _LEXICON_PREFIXES:
            if stem.startswith(prefix):
                merged.setdefault(etype, []).extend(_load_lexicon_file(path, etype).entries)
                break
    from .ingestion import make_lexicon

    return {etype: make_lexicon(etype, entries) for etype, entries in merged.items()}


def _read_letter(path: Path) -> Document:
    data = path.read_bytes()
    if path.suffix.lower() == ".xml":
        return load_letter_xml(data, doc_id=path.stem)
    return load_letter_text(data, doc_id=path.stem)


def _iter_letters(directory: Path):
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() in (".txt", ".xml"):
            yield path


def cmd_deid(args) -> int:
    try:
        settings = settings_from_dict(json.loads(Path(args.settings).read_text()))
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot load settings: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        settings = dc_replace(settings, rng_seed=args.seed)

    in_dir = Path(getattr(args, "in"))
    out_dir = Path(args.out)
    if not in_dir.is_dir():
        print(f"error: input directory {in_dir} not found", file=sys.stderr)
        return 1

    docs: list[Document] = []
    failures: list[tuple[str, str]] = []
    for path in _iter_letters(in_dir):
        try:
            docs.append(_read_letter(path))
        except DeidError as exc:
            failures.append((path.name, str(exc)))
    if not docs and not failures:
        print("error: no inputs", file=sys.stderr)
        return 1

    config = PipelineConfig(
        settings=settings,
        base_lexicons=load_recognition_lexicons(Path(args.lexicons)) if args.lexicons else {},
        sources=load_surrogates_dir(Path(args.surrogates)) if args.surrogates else load_default_surrogates(),
        remote_url=args.model_url,
        legacy_compat=args.compat,
    )
    result = run_batch(docs, config, jobs=args.jobs)

    out_dir.mkdir(parents=True, exist_ok=True)
    for masked in result.masked:
        (out_dir / f"{masked.doc_id}.masked.txt").write_text(masked.masked_text)
        (out_dir / f"{masked.doc_id}.spans.json").write_text(
            json.dumps(masked_doc_to_dict(masked), indent=2, sort_keys=True)
        )
    if result.risk is not None:
        (out_dir / "risk.json").write_text(json.dumps(result.risk.to_dict(), indent=2, sort_keys=True))

    summary = {
        "documents": len(result.masked),
        "errors": [{"file": name, "message": message} for name, message in failures],
        "risk_report": result.risk is not None,
    }
    if args.format == "json":
        print(json.dumps(summary, indent=2))
    else:
        print(f"masked {len(result.masked)} document(s) into {out_dir}")
    for name, message in failures:
        print(f"error: {name}: {message}", file=sys.stderr)
    return 2 if failures else 0


def _load_predictions(directory: Path) -> dict[str, list]:
    predictions = {}
    for path in sorted(directory.glob("*.json")):
        raw = json.loads(path.read_text())
        if "span_map" in raw:
            masked = masked_doc_from_dict(raw)
            predictions[masked.doc_id] = [row.original for row in masked.span_map]
        else:
            predictions[raw["doc_id"]] = [span_from_dict(d) for d in raw.get("spans", [])]
    return predictions


def cmd_eval(args) -> int:
    pred_dir, gold_dir = Path(args.pred), Path(args.gold)
    predictions = _load_predictions(pred_dir)
    gold: dict[str, list] = {}
    for path in sorted(gold_dir.glob("*.xml")):
        data = path.read_bytes()
        doc = load_letter_xml(data, doc_id=path.stem)
        gold[doc.id] = list(load_gold_annotations(data, doc).spans)
    if set(predictions) != set(gold):
        missing = sorted(set(gold) ^ set(predictions))
        print(f"error: document ids do not match across dirs: {missing}", file=sys.stderr)
        return 1
    counts = score(predictions, gold, MatchMode(args.mode))
    rep = report(counts)
    if args.format == "json":
        print(json.dumps(rep.to_dict(), indent=2, sort_keys=True))
    else:
        print(render_text(rep))
    return 0


def cmd_risk(args) -> int:
    in_dir = Path(getattr(args, "in"))
    masked = []
    for path in sorted(in_dir.glob("*.spans.json")):
        masked.append(masked_doc_from_dict(json.loads(path.read_text())))
    if not masked:
        print("error: no .spans.json inputs", file=sys.stderr)
        return 1
    windows = extract_contexts(masked, args.radius)
    rep = assess(windows, args.threshold)
    print(json.dumps(rep.to_dict(), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deidkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    deid = sub.add_parser("deid", help="de-identify a directory of letters")
    deid.add_argument("--settings", required=True, help="settings JSON file")
    deid.add_argument("--in", required=True, help="input directory of .txt/.xml letters")
    deid.add_argument("--out", required=True, help="output directory")
    deid.add_argument("--seed", type=int, default=None, help="override the settings RNG seed")
    deid.add_argument("--jobs", type=int, default=1, help="parallel recognition workers")
    deid.add_argument("--lexicons", default=None, help="directory of recognition lexicons")
    deid.add_argument("--surrogates", default=None, help="directory of replacement lexicons")
    deid.add_argument("--model-url", default=None, help="sidecar URL for remote models")
    deid.add_argument("--compat", action="store_true", help="reproduce legacy fragmenting/duplication")
    deid.add_argument("--format", choices=("text", "json"), default="text")
    deid.set_defaults(func=cmd_deid)

    ev = sub.add_parser("eval", help="score predicted spans against gold XML")
    ev.add_argument("--pred", required=True, help="directory of span JSON files")
    ev.add_argument("--gold", required=True, help="directory of gold i2b2 XML files")
    ev.add_argument("--mode", choices=[m.value for m in MatchMode], default=MatchMode.EXACT.value)
    ev.add_argument("--format", choices=("text", "json"), default="text")
    ev.set_defaults(func=cmd_eval)

    risk = sub.add_parser("risk", help="re-run risk assessment over masked outputs")
    risk.add_argument("--in", required=True, help="directory of .spans.json files")
    risk.add_argument("--threshold", type=float, default=0.5)
    risk.add_argument("--radius", type=int, default=5)
    risk.set_defaults(func=cmd_risk)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
