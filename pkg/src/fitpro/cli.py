"""Command-line entry points: ingest, search, interact, bench, serve."""

from __future__ import annotations

import argparse
import json
import sys

from .config import load_config
from .errors import FitProError, NotFoundError, SessionClosedError
from .evaluation import run_benchmark
from .index import build_index, load_index, save_index
from .ingest import load_manifest
from .qhr import FusionWeights
from .session import Engine
from .service import create_app, encoder_from_config, engine_from_config


def _engine_for_index(index_dir, config) -> Engine:
    index = load_index(index_dir)
    return Engine(
        index,
        encoder_from_config(config),
        weights=config.weights,
        top_n=config.retrieval.top_n,
    )


def cmd_ingest(args, config) -> int:
    manifest = load_manifest(args.manifest, mode=args.mode)
    index = build_index(manifest, encoder_from_config(config))
    save_index(index, args.out)
    print(f"indexed {len(index.candidates)} entries into {args.out}")
    return 0


def cmd_search(args, config) -> int:
    engine = _engine_for_index(args.index, config)
    if not engine.index.candidates:
        print("[]")
        return 0
    session = engine.start_session(args.query)
    ranking = session.rankings[-1][: args.top_k]
    engine.close_session(session.session_id)
    print(
        json.dumps(
            [
                {"rank": sc.rank, "image_key": sc.image_key,
                 "score": sc.s_final}
                for sc in ranking
            ],
            indent=1,
        )
    )
    return 0


def cmd_interact(args, config) -> int:
    engine = _engine_for_index(args.index, config)
    print("initial description (slot-delimited, e.g. 'Upper: red jacket'):")
    q0 = input("> ").strip()
    session = engine.start_session(q0)
    while True:
        for sc in session.rankings[-1][:10]:
            print(f"  #{sc.rank:>2} {sc.image_key}  score={sc.s_final:.4f}")
        line = input("refine (empty to quit)> ").strip()
        if not line:
            break
        try:
            session = engine.submit_feedback(session.session_id, line)
        except FitProError as exc:
            print(f"error: {exc}")
    engine.close_session(session.session_id)
    return 0


def cmd_bench(args, config) -> int:
    manifest = load_manifest(args.manifest, mode=args.mode)
    result = run_benchmark(
        manifest,
        rounds=args.rounds,
        weights=config.weights,
        seed=args.seed,
        encoder=encoder_from_config(config),
    )
    result.write_report(args.report)
    if args.curve_csv:
        result.write_curve_csv(args.curve_csv)
    final = result.final()
    print(
        f"rounds={result.rounds - 1} "
        f"rank1={final['rank_k']['1']:.2f} map={final['map']:.2f} "
        f"-> {args.report}"
    )
    return 0


def cmd_serve(args, config) -> int:
    import uvicorn

    app = create_app(engine_from_config(config))
    host, _, port = args.addr.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fitpro")
    parser.add_argument("--config", help="engine config file (YAML)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build an index from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", default="cropped", choices=["cropped", "scene"])
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("search", help="one-shot text query against an index")
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--top-k", type=int, default=10)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("interact", help="terminal refinement loop")
    p.add_argument("--index", required=True)
    p.set_defaults(func=cmd_interact)

    p = sub.add_parser("bench", help="scripted-user benchmark")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", default="cropped", choices=["cropped", "scene"])
    p.add_argument("--rounds", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", required=True)
    p.add_argument("--curve-csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--addr", default="127.0.0.1:8321")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = load_config(args.config)
    try:
        return args.func(args, config)
    except FitProError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
