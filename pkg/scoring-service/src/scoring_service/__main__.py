"""Run the scoring service: scoring-service --model NAME [--port P]."""

from __future__ import annotations

import argparse


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="scoring-service")
    parser.add_argument("--model", required=True, help="model name or local path")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)

    import uvicorn

    from scoring_service.app import create_app
    from scoring_service.scorer import Seq2SeqScorer

    scorer = Seq2SeqScorer(args.model, batch_size=args.batch_size, device=args.device)
    app = create_app(scorer, model_name=args.model)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
