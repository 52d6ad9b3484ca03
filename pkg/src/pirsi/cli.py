"""Command-line front end.

Every command prints ``key=value`` lines followed by a human-readable table
and exits 0; failures print one line to stderr and exit 1.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import audit, bounds, mds, net, partition, sun_jafar
from .core import Database, DemandSpec, ParameterError, PirError, as_rng, sample_demand


def _emit(pairs, table=()):
    for k, v in pairs:
        print(f"{k}={v}")
    if table:
        print()
        width = max(len(str(k)) for k, _ in table)
        for k, v in table:
            print(f"  {str(k):<{width}}  {v}")


def _index_list(text):
    if text is None or text.strip() == "":
        return []
    return [int(x) for x in text.split(",")]


def cmd_gen_db(args):
    db = Database.random(args.k, args.t, args.seed)
    db.save(args.out)
    _emit([("path", args.out), ("K", db.K), ("t", db.t)],
          [("file bytes", len(db.to_bytes())), ("seed", args.seed)])


def cmd_serve(args):
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    listen = args.listen or net.default_listen()
    db = Database.load(args.db)
    print(f"listen={listen}\nK={db.K}\nt={db.t}", flush=True)
    net.serve(args.db, listen)


def _session(args) -> net.SessionConfig:
    base = {}
    if args.config:
        base = vars(net.SessionConfig.from_text(Path(args.config).read_text()))
    over = {"scheme": args.scheme, "K": args.k, "M": args.m, "N": args.n, "t": args.t,
            "seed": args.seed, "servers": _index_list_str(args.servers)}
    for key, value in over.items():
        if value not in (None, []):
            base[key] = value
    base.setdefault("scheme", "partition")
    if base["scheme"] == "multiserver" and base.get("N", 1) == 1:
        base["scheme"] = "partition"
    return net.SessionConfig(**base)


def _index_list_str(text):
    return [s.strip() for s in text.split(",") if s.strip()] if text else []


def cmd_fetch(args):
    cfg = _session(args)
    rng = as_rng(cfg.seed)
    if args.db:
        db = Database.load(args.db)
    elif cfg.servers:
        raise ParameterError("--db is required to supply side information when fetching from servers")
    else:
        if cfg.K is None:
            raise ParameterError("give --db or --k to generate a database")
        t = cfg.t
        if t is None:
            t = cfg.N ** (cfg.K // (cfg.M + 1)) if cfg.scheme == "multiserver" else 8
        db = Database.random(cfg.K, t, rng)
    if args.sample or args.w is None:
        spec = sample_demand(db.K, cfg.M, rng)
    else:
        spec = DemandSpec(args.w, frozenset(_index_list(args.s)))
    if spec.M != cfg.M:
        if args.m is not None:
            raise ParameterError(f"--s lists {spec.M} indices but --m is {args.m}")
        cfg.M = spec.M
    if cfg.servers:
        result = net.fetch(cfg, spec, db.side_values(spec.S), rng)
    else:
        result = net.fetch_loopback(db, cfg, spec, rng)
    if args.transcript:
        result.transcript.save(args.transcript)
    ok = result.message == db.messages[spec.W]
    rep = result.rate
    _emit(
        [("scheme", cfg.scheme), ("W", spec.W), ("S", ",".join(map(str, sorted(spec.S)))),
         ("downloaded_bits", rep.total_answer_bits), ("rate", rep.rate),
         ("message", f"{result.message:0{(db.t + 3) // 4}x}"), ("correct", str(ok).lower())],
        [("servers", cfg.N), ("K", db.K), ("M", spec.M), ("t", db.t),
         ("per-server bits", " ".join(map(str, rep.per_server_bits))),
         ("upload bytes", result.transcript.upload_bytes())],
    )
    if not ok:
        raise PirError("decoded message does not match the database")


EXACT_SCHEMES = {
    "partition": partition.enumerate_queries,
    "partition-unshuffled": partition.enumerate_unshuffled_queries,
    "mds": mds.enumerate_queries,
    "full-download": audit.full_download_queries,
}


def cmd_audit(args):
    if args.statistical:
        return _audit_statistical(args)
    scheme = EXACT_SCHEMES.get(args.scheme)
    if scheme is None:
        raise ParameterError(f"no exact audit for scheme {args.scheme!r}")
    privacy = args.privacy or ("ws" if args.scheme == "mds" else "w")
    fn = audit.audit_ws if privacy == "ws" else audit.audit_w
    rep = fn(scheme, args.k, args.m)
    _emit([("scheme", args.scheme), ("privacy", privacy), ("max_deviation", rep.max_posterior_deviation),
           ("queries", rep.query_count), ("private", str(rep.private).lower())])
    if args.table:
        print()
        print(rep.to_table())
    else:
        print()
        print(rep.summary())


def _audit_statistical(args):
    rng = as_rng(args.seed)
    if args.scheme == "sun-jafar":
        g = args.k // (args.m + 1)
        sampler = sun_jafar.shape_sampler(args.n, g)
        hyps = range(g)
    elif args.scheme in ("partition", "partition-unshuffled"):
        shuffle = args.scheme == "partition"
        sampler = audit.w_hypothesis_sampler(
            lambda spec, K, r: partition.sample_query_ordered(spec, K, r, shuffle=shuffle), args.k, args.m)
        hyps = range(args.k)
    else:
        raise ParameterError(f"no statistical sampler for scheme {args.scheme!r}")
    rep = audit.audit_statistical(sampler, hyps, args.samples, rng)
    _emit([("scheme", args.scheme), ("samples", rep.samples), ("max_tv", f"{rep.max_tv:.4f}"),
           ("min_p", f"{rep.min_p:.4g}"), ("status", rep.status)],
          [(f"{p.a} vs {p.b}", f"tv={p.tv:.4f} p={p.p_value:.4g}") for p in rep.pairs])


def cmd_bounds(args):
    pairs = [("capacity_w", bounds.capacity_w(args.k, args.m)),
             ("capacity_ws", bounds.capacity_ws(args.k, args.m))]
    if args.n is not None:
        # the multi-server construction only exists when (M+1) | K
        lb = bounds.multiserver_rate_lb(args.n, args.k, args.m) if args.k % (args.m + 1) == 0 else "n/a"
        pairs.append(("multiserver_rate_lb", lb))
    g = -(-args.k // (args.m + 1))
    _emit(pairs, [("W-private download (messages)", g),
                  ("(W,S)-private download (messages)", args.k - args.m),
                  ("no side information (messages)", args.k)])


def cmd_rate_report(args):
    tr = net.Transcript.load(args.transcript)
    rep = net.rate_report(tr)
    _emit([("scheme", tr.scheme), ("downloaded_bits", rep.total_answer_bits), ("rate", rep.rate)],
          [("K", tr.K), ("M", tr.M), ("N", tr.N), ("t", tr.t),
           ("per-server bits", " ".join(map(str, rep.per_server_bits))),
           ("upload bytes", tr.upload_bytes()), ("exchanges", len(tr.exchanges))])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pirsi", description="PIR with side information")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-db", help="write a random database file")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--t", type=int, required=True)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", "--path", dest="out", required=True)
    g.set_defaults(func=cmd_gen_db)

    s = sub.add_parser("serve", help="run a server over a database file")
    s.add_argument("--db", required=True)
    s.add_argument("--listen", default=None, help=f"host:port (default ${net.LISTEN_ENV} or {net.DEFAULT_LISTEN})")
    s.set_defaults(func=cmd_serve)

    f = sub.add_parser("fetch", help="retrieve one message")
    f.add_argument("--scheme", choices=net.SCHEMES, default=None)
    f.add_argument("--config", default=None, help="key=value session file")
    f.add_argument("--db", default=None, help="local copy used for side information")
    f.add_argument("--servers", default=None, help="comma-separated host:port list")
    f.add_argument("--k", type=int, default=None)
    f.add_argument("--m", type=int, default=None)
    f.add_argument("--n", type=int, default=None)
    f.add_argument("--t", type=int, default=None)
    f.add_argument("--w", type=int, default=None)
    f.add_argument("--s", default=None, help="comma-separated side-information indices")
    f.add_argument("--sample", action="store_true", help="draw (W, S) from the uniform prior")
    f.add_argument("--seed", type=int, default=None)
    f.add_argument("--transcript", default=None, help="write the transcript as JSON")
    f.set_defaults(func=cmd_fetch)

    a = sub.add_parser("audit", help="privacy audit")
    a.add_argument("--scheme", required=True,
                   choices=sorted(EXACT_SCHEMES) + ["sun-jafar"])
    a.add_argument("--k", type=int, required=True)
    a.add_argument("--m", type=int, required=True)
    a.add_argument("--n", type=int, default=2)
    a.add_argument("--privacy", choices=("w", "ws"), default=None)
    a.add_argument("--table", action="store_true", help="print every posterior row")
    a.add_argument("--statistical", action="store_true")
    a.add_argument("--samples", type=int, default=10_000)
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_audit)

    b = sub.add_parser("bounds", help="capacity formulas")
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--n", type=int, default=None)
    b.set_defaults(func=cmd_bounds)

    r = sub.add_parser("rate-report", help="measure rate from a saved transcript")
    r.add_argument("transcript")
    r.set_defaults(func=cmd_rate_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (PirError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
