"""Command line: ``syncst {gen-corpus,simulate,evaluate,sweep,oracle-check}``.

Every subcommand accepts ``--config FILE``, a JSON object whose keys are flag
names (dashes or underscores); values from the file act as defaults and
explicit flags win. Exit status is 0 on success, 1 when a produced trace or
oracle suite violates an invariant, and 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .core import ConfigError, JointScoreWeights
from .corpus import CorpusConfig, generate, read_corpus, write_corpus
from .harness import report_json, rows_to_csv, simulate_corpus, sweep, violations, \
    write_traces
from .metrics import evaluate
from .oracles import SUITES
from .simul_st import TIMING_MODES, SessionConfig
from .trace import SessionTrace

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _int_pair(text: str) -> tuple[int, int]:
    parts = [int(p) for p in str(text).split(",")]
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected MIN,MAX")
    return parts[0], parts[1]


def _k(text) -> float:
    if str(text).lower() in ("inf", "infinity"):
        return math.inf
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid k {text!r}") from None


def _list(conv):
    def parse(text):
        if isinstance(text, list):
            return [conv(t) for t in text]
        return [conv(t) for t in str(text).split(",") if t]
    return parse


def _weights(text) -> JointScoreWeights:
    vals = text if isinstance(text, list) else [float(x) for x in str(text).split(",")]
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("expected CTC,ATT,LM")
    return JointScoreWeights(*map(float, vals))


def _session_flags(p, sweepable: bool = False):
    if sweepable:
        p.add_argument("--k", type=_list(_k), default=[1, 3, 5, 7], help="wait values, e.g. 1,3,5,inf")
        p.add_argument("--policy", type=_list(str), default=["lcp", "sh"], help="policies, e.g. lcp,sh")
        p.add_argument("--chunk-frames", type=_list(int), default=[48], help="chunk sizes w in frames")
    else:
        p.add_argument("--k", type=_k, default=3, help="wait value or inf (default 3)")
        p.add_argument("--policy", choices=["lcp", "sh"], default="sh")
        p.add_argument("--chunk-frames", type=int, default=48, help="chunk size w in frames (default 48)")
    p.add_argument("--beam", type=int, default=5, help="ASR beam width b (default 5)")
    p.add_argument("--downsample", type=int, default=4, help="frames per encoder state r (default 4)")
    p.add_argument("--lookahead", type=int, default=10, help="encoder lookahead L in frames (default 10)")
    p.add_argument("--weights", type=_weights, default=JointScoreWeights(),
                   help="lambda_ctc,lambda_att,lambda_lm (default 0.3,0.7,0.3)")
    p.add_argument("--alpha", type=float, default=1.5, help="target cap factor (default 1.5)")
    p.add_argument("--beta", type=int, default=10, help="target cap offset (default 10)")
    p.add_argument("--timing", choices=TIMING_MODES, default="model",
                   help="compute-time accounting (default model, deterministic)")
    p.add_argument("--model", choices=["prototype", "oracle"], default="prototype")
    p.add_argument("--lm", choices=["bigram", "uniform"], default="bigram")
    p.add_argument("--corpus", help="corpus directory; a default corpus is generated when omitted")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="syncst", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-corpus", help="write a synthetic corpus")
    g.add_argument("--out", required=True, help="output directory")
    d = CorpusConfig()
    g.add_argument("--n-utts", type=int, default=d.n_utts)
    g.add_argument("--vocab-size", type=int, default=d.vocab_size)
    g.add_argument("--frame-dim", type=int, default=d.frame_dim)
    g.add_argument("--tokens-range", type=_int_pair, default=d.tokens_range)
    g.add_argument("--duration-range", type=_int_pair, default=d.duration_range)
    g.add_argument("--silence-prob", type=float, default=d.silence_prob)
    g.add_argument("--silence-range", type=_int_pair, default=d.silence_range)
    g.add_argument("--noise", type=float, default=d.noise)
    g.add_argument("--reorder-prob", type=float, default=d.reorder_prob)
    g.add_argument("--reorder-span", type=_int_pair, default=d.reorder_span)
    g.add_argument("--branching", type=int, default=d.branching)
    g.add_argument("--seed", type=int, default=d.seed)

    s = sub.add_parser("simulate", help="run streaming sessions and write traces")
    _session_flags(s)
    s.add_argument("--utt", action="append", help="utterance id to run (repeatable; default all)")
    s.add_argument("--out", help="trace directory; traces go to stdout when omitted")

    e = sub.add_parser("evaluate", help="latency and quality report from traces")
    e.add_argument("traces", nargs="+", help="trace files or directories")
    e.add_argument("--corpus", required=True, help="corpus directory holding the references")
    e.add_argument("--out", help="report path (default stdout)")

    w = sub.add_parser("sweep", help="cross product of k, policy and chunk size as CSV")
    _session_flags(w, sweepable=True)
    w.add_argument("--out", help="CSV path (default stdout)")
    w.add_argument("--traces-dir", help="also write every trace under this directory")

    o = sub.add_parser("oracle-check", help="run the brute-force reference suites")
    o.add_argument("--suite", action="append", choices=sorted(SUITES), help="suite to run (default all)")
    o.add_argument("--seed", type=int, default=0)

    for p in (g, s, e, w, o):
        p.add_argument("--config", help="JSON file of flag defaults")
    return parser


def _subparser(parser, command):
    return parser._subparsers._group_actions[0].choices[command]


def _parse(parser: argparse.ArgumentParser, argv):
    args, extra = parser.parse_known_args(argv)
    if extra:
        # name the subcommand's own flags rather than the top-level usage
        sub = _subparser(parser, args.command)
        sub.print_usage(sys.stderr)
        sub.exit(EXIT_USAGE, f"{sub.prog}: error: unrecognized arguments: {' '.join(extra)}\n")
    return args


def _apply_config(parser: argparse.ArgumentParser, argv):
    args = _parse(parser, argv)
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    sub = _subparser(parser, args.command)
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}; valid keys: "
                             + ", ".join(sorted(k for k in actions if k not in ("config", "help"))))
        act = actions[dest]
        if act.type is not None and value is not None and not isinstance(value, bool):
            try:
                value = act.type(value if isinstance(value, list) else str(value))
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return _parse(parser, argv)


def _session_config(args, **override) -> SessionConfig:
    fields = dict(k=args.k, policy=args.policy, w=args.chunk_frames, r=args.downsample, b=args.beam,
                  weights=args.weights, lookahead=args.lookahead, alpha=args.alpha, beta=args.beta,
                  seed=args.seed, timing=args.timing)
    fields.update(override)
    return SessionConfig(**fields)


def _load_corpus(args, n_default: int):
    if args.corpus:
        return read_corpus(args.corpus)
    return generate(CorpusConfig(n_utts=n_default, seed=args.seed))


def _report_violations(bad: dict, out) -> int:
    for utt, errs in bad.items():
        for err in errs:
            print(f"invariant violation in {utt}: {err}", file=out)
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_gen_corpus(args) -> int:
    cfg = CorpusConfig(n_utts=args.n_utts, vocab_size=args.vocab_size, frame_dim=args.frame_dim,
                       tokens_range=args.tokens_range, duration_range=args.duration_range,
                       silence_prob=args.silence_prob, silence_range=args.silence_range, noise=args.noise,
                       reorder_prob=args.reorder_prob, reorder_span=args.reorder_span,
                       branching=args.branching, seed=args.seed)
    manifest = write_corpus(generate(cfg), args.out)
    print(manifest)
    return EXIT_OK


def cmd_simulate(args) -> int:
    corpus = _load_corpus(args, n_default=1)
    if args.utt:
        wanted = set(args.utt)
        missing = wanted - {u.utt_id for u in corpus.utterances}
        if missing:
            raise UsageError(f"unknown utterance ids: {', '.join(sorted(missing))}")
        corpus.utterances = [u for u in corpus.utterances if u.utt_id in wanted]
    traces = simulate_corpus(corpus, _session_config(args), args.model, args.lm)
    if args.out:
        for path in write_traces(traces, args.out):
            print(path)
    else:
        for tr in traces:
            sys.stdout.write(tr.dumps())
    return _report_violations(violations(traces), sys.stderr)


def _trace_paths(items):
    paths = []
    for item in items:
        p = Path(item)
        if p.is_dir():
            paths += sorted(p.glob("*.jsonl"))
        elif p.exists():
            paths.append(p)
        else:
            raise UsageError(f"no such trace file or directory: {item}")
    return paths


def cmd_evaluate(args) -> int:
    corpus = read_corpus(args.corpus)
    refs = {u.utt_id: u.translation for u in corpus.utterances}
    traces = [SessionTrace.read(p) for p in _trace_paths(args.traces)]
    try:
        references = [refs[t.header["utt_id"]] for t in traces]
    except KeyError as exc:
        raise UsageError(f"trace for unknown utterance {exc.args[0]}") from None
    text = report_json(evaluate(traces, references))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return _report_violations(violations(traces), sys.stderr)


def cmd_sweep(args) -> int:
    corpus = _load_corpus(args, n_default=CorpusConfig().n_utts)
    base = _session_config(args, k=3, policy="sh", w=48)
    # checked up front so a bad combination is a usage error, not a crash midway
    for w in args.chunk_frames:
        for k in args.k:
            SessionConfig(**{**base.__dict__, "k": k, "w": w})
    rows, traces = sweep(corpus, base, args.k, args.policy, args.chunk_frames, args.model, args.lm,
                         keep_traces=bool(args.traces_dir))
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    bad = {}
    for (policy, k, w), value in traces.items():
        if args.traces_dir:
            write_traces(value, Path(args.traces_dir) / f"{policy}_k{k}_w{w}")
            value = violations(value)
        bad.update({f"{policy}/k{k}/w{w}/{u}": e for u, e in value.items()})
    return _report_violations(bad, sys.stderr)


def cmd_oracle_check(args) -> int:
    names = args.suite or list(SUITES)
    ok = True
    for name in names:
        res = SUITES[name](seed=args.seed)
        print(json.dumps(res.to_json(), sort_keys=True))
        ok &= res.passed
    return EXIT_OK if ok else EXIT_VIOLATION


COMMANDS = {"gen-corpus": cmd_gen_corpus, "simulate": cmd_simulate, "evaluate": cmd_evaluate,
            "sweep": cmd_sweep, "oracle-check": cmd_oracle_check}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 for --help
        return int(exc.code or 0)
    except (UsageError, ConfigError, ValueError, OSError) as exc:
        print(f"syncst: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
