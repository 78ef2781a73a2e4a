"""Sidecar entry points: serve the wire protocol, or fine-tune on a corpus."""
from __future__ import annotations

import argparse
import sys


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app, resolve_model_dir

    model_dir = resolve_model_dir(args.model_dir, args.base_model)
    app = create_app(model_dir, chunking_disabled=args.no_chunking)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_train(args) -> int:
    from .training import TrainConfig, train

    config = TrainConfig(
        base_model=args.base_model,
        corpus_dir=args.corpus,
        output_dir=args.out,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        epochs=args.epochs,
        train_split=args.split,
        max_length=args.max_length,
        seed=args.seed,
    )
    report = train(config)
    print(f"weighted F1 {report['weighted_avg']['f1']:.4f} "
          f"over {int(report['weighted_avg']['support'])} tokens")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ner-sidecar")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="serve predictions over the wire protocol")
    serve.add_argument("--model-dir", default=None, help="fine-tuned checkpoint directory")
    serve.add_argument("--base-model", default="clinicalbert",
                       help="fallback when no checkpoint exists (clinicalbert|biobert|path)")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=9000)
    serve.add_argument("--no-chunking", action="store_true",
                       help="reject oversize sentences with 422 instead of truncating")
    serve.set_defaults(func=cmd_serve)

    train = sub.add_parser("train", help="fine-tune on an annotated i2b2 XML corpus")
    train.add_argument("--corpus", required=True)
    train.add_argument("--base-model", required=True)
    train.add_argument("--out", required=True)
    train.add_argument("--learning-rate", type=float, default=3e-5)
    train.add_argument("--batch-size", type=int, default=32)
    train.add_argument("--epochs", type=int, default=15)
    train.add_argument("--split", type=float, default=0.8)
    train.add_argument("--max-length", type=int, default=128)
    train.add_argument("--seed", type=int, default=13)
    train.set_defaults(func=cmd_train)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
