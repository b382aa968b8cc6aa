"""Command-line entry points: serve the backend, train the fusion model."""

import argparse
import sys

from .config import ServerConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fusionserver")
    commands = parser.add_subparsers(dest="command", metavar="command", required=True)

    serve = commands.add_parser("serve", help="serve /score, /fuse, and /healthz")
    serve.add_argument("--checkpoint", required=True, help="fusion model checkpoint")
    serve.add_argument("--scorer", default="tiny-char",
                       help="scorer model: 'tiny-char' or a transformers identifier")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--beam-cap", type=int, default=10)
    serve.add_argument("--max-length", type=int, default=512)

    train = commands.add_parser("train", help="finetune the fusion tagger on mined pairs")
    train.add_argument("--pairs", required=True, help="mined fusion pairs (JSONL)")
    train.add_argument("--out", required=True, help="checkpoint destination")
    train.add_argument("--vocab-size", type=int, default=100)
    train.add_argument("--updates", type=int, default=10000)
    train.add_argument("--batch-size", type=int, default=32)
    train.add_argument("--learning-rate", type=float, default=2e-5)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--log", help="training log destination (default: <out>.log.json)")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .app import build_app

        config = ServerConfig(
            host=args.host,
            port=args.port,
            scorer_model=args.scorer,
            fusion_checkpoint=args.checkpoint,
            beam_cap=args.beam_cap,
            max_length=args.max_length,
        )
        uvicorn.run(build_app(config), host=config.host, port=config.port, log_level="warning")
        return 0

    from .training import TrainingError, train_fusion

    try:
        log = train_fusion(
            args.pairs,
            args.out,
            vocab_size=args.vocab_size,
            updates=args.updates,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            seed=args.seed,
            log_path=args.log,
        )
    except (TrainingError, OSError) as exc:
        print(f"fusionserver: error: {exc}", file=sys.stderr)
        return 1
    print(
        f"trained {log['updates']} updates on {log['feasible_examples']} feasible pairs "
        f"({log['dropped_examples']} dropped), final loss {log['final_loss']} -> {args.out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
