"""Command line client.

Engine-backed commands (query, view, stats, graph, profile, facts,
institutions, jobs, and storing ingests) are thin wrappers over the
HTTP API: with --server (or LISTSTAND_SERVER) they talk to a running
service, otherwise they run the same app in-process against --data
(or LISTSTAND_DATA), so one-shot workflows need no daemon.

File-to-file commands (ingest --out, entities, threads, discussions,
export) are pure local pipelines over JSON-lines dumps and never touch
a server.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx

from liststand.analytics import RankedTable, SocialGraph
from liststand.errors import ListstandError
from liststand.export import to_csv, to_dot, to_graphml, to_jsonl, to_pajek
from liststand.identity import InstitutionMap, ResolveConfig, map_institution, resolve_entities
from liststand.ingest.model import MailboxSource, Message
from liststand.ingest.sources import load_sources
from liststand.threads import build_threads, discussions

DEFAULT_DATA = "liststand-data"


class CliError(Exception):
    pass


def _client(args) -> httpx.Client:
    server = getattr(args, "server", None) or os.environ.get("LISTSTAND_SERVER")
    if server:
        return httpx.Client(base_url=server, timeout=60.0)
    from fastapi.testclient import TestClient  # sync in-process ASGI bridge
    from liststand.service import create_app

    data = getattr(args, "data", None) or os.environ.get("LISTSTAND_DATA", DEFAULT_DATA)
    return TestClient(create_app(data_dir=data))


def _check(resp: httpx.Response) -> httpx.Response:
    if resp.status_code >= 400:
        try:
            err = resp.json()["error"]
            raise CliError(f"{err['code']}: {err['message']}")
        except (KeyError, ValueError):
            raise CliError(f"HTTP {resp.status_code}: {resp.text}") from None
    return resp


def _write_out(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_messages(path: str) -> list[Message]:
    messages = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            messages.append(Message.from_json_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise CliError(f"{path}:{lineno}: {exc}") from None
    return messages


def _imap_from(path: str | None) -> InstitutionMap | None:
    if not path:
        return None
    with open(path) as fp:
        return InstitutionMap.from_csv(fp)


# -- local pipeline commands ----------------------------------------------


def cmd_ingest(args) -> int:
    sources = [
        MailboxSource(source_id=uri, kind=args.kind, uri=uri)
        for uri in args.source
    ]
    tags = frozenset(args.list_tag) if args.list_tag else None
    if args.out:
        result = load_sources(sources, list_tags=tags)
        for err in result.errors:
            print(f"warning: {err.source_id}: {err.error}", file=sys.stderr)
        _write_out(to_jsonl(result.messages), args.out)
        print(f"wrote {len(result.messages)} messages", file=sys.stderr)
        return 0
    with _client(args) as client:
        body = {
            "sources": [{"source_id": s.source_id, "kind": s.kind, "uri": s.uri} for s in sources],
            "collection": args.collection,
            "background": args.background,
        }
        if tags:
            body["list_tags"] = sorted(tags)
        job = _check(client.post("/ingest", json=body)).json()
    print(json.dumps(job, indent=2))
    return 0


def cmd_entities(args) -> int:
    messages = _read_messages(args.infile)
    imap = _imap_from(args.institutions)
    config = ResolveConfig.from_rule_names(args.rules.split(","), institution_map=imap)
    catalog = resolve_entities(messages, config)
    entities = []
    for entity in sorted(catalog.entities, key=lambda e: e.entity_id):
        addresses = sorted(str(a) for a in entity.addresses)
        record = {
            "entity_id": entity.entity_id,
            "label": catalog.label(entity.entity_id),
            "canonical_name": entity.canonical_name,
            "addresses": addresses,
        }
        if imap is not None:
            domain = addresses[0].rsplit("@", 1)[1]
            record["institution"] = map_institution(domain, imap)
        entities.append(record)
    _write_out(json.dumps({"entities": entities}, indent=2) + "\n", args.out)
    return 0


def cmd_threads(args) -> int:
    messages = _read_messages(args.infile)
    forest = build_threads(messages, subject_fallback=args.subject_fallback == "on")
    label_of = {}
    if args.entities:
        data = json.loads(Path(args.entities).read_text())
        label_of = {
            addr: entry["label"]
            for entry in data["entities"]
            for addr in entry["addresses"]
        }
    nodes = {}
    for mid, node in sorted(forest.nodes.items()):
        record = {
            "parent": node.parent,
            "children": node.children,
            "thread": forest.thread_of[mid],
        }
        if label_of:
            record["entity"] = label_of.get(node.message.from_address)
        nodes[mid] = record
    out = {
        "roots": forest.roots,
        "flagged": sorted(forest.flagged),
        "nodes": nodes,
    }
    _write_out(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def cmd_discussions(args) -> int:
    messages = _read_messages(args.infile)
    forest = build_threads(messages, subject_fallback=args.subject_fallback == "on")
    catalog = resolve_entities(messages)
    by_id = {m.message_id: m for m in messages}
    pairs = discussions(
        forest,
        lambda mid: catalog.entity_of_message(by_id[mid]),
        threshold=args.threshold,
        scope=args.scope,
    )
    out = [
        {
            "a": p.a,
            "a_label": catalog.label(p.a),
            "b": p.b,
            "b_label": catalog.label(p.b),
            "edges_ab": p.edges_ab,
            "edges_ba": p.edges_ba,
            "threads": sorted(p.threads),
        }
        for p in pairs
    ]
    _write_out(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def cmd_export(args) -> int:
    data = json.loads(Path(args.infile).read_text())
    if args.format == "csv":
        try:
            table = RankedTable(
                tuple((row["key"], tuple(row["values"])) for row in data["rows"]),
                tuple(data["value_names"]),
            )
        except (KeyError, TypeError) as exc:
            raise CliError(f"{args.infile}: not a stats JSON dump ({exc})") from None
        _write_out(to_csv(table), args.out)
        return 0
    try:
        graph = SocialGraph(
            tuple((n["entity_id"], n["label"], n.get("institution")) for n in data["nodes"]),
            tuple((e["a"], e["b"], e["weight"]) for e in data["edges"]),
        )
    except (KeyError, TypeError) as exc:
        raise CliError(f"{args.infile}: not a graph JSON dump ({exc})") from None
    writer = {"graphml": to_graphml, "dot": to_dot, "pajek": to_pajek}[args.format]
    _write_out(writer(graph), args.out)
    return 0


# -- service-backed commands ----------------------------------------------


def cmd_query(args) -> int:
    spec = json.loads(Path(args.spec).read_text())
    with _client(args) as client:
        body = _check(client.post("/query", json={"spec": spec})).json()
    _write_out("".join(doc + "\n" for doc in body["documents"]), args.out)
    if args.schema_out:
        Path(args.schema_out).write_text(json.dumps(body["result_schema"], indent=2) + "\n")
    if body.get("schema_error"):
        print(f"note: no result schema: {body['schema_error']}", file=sys.stderr)
    return 0


def cmd_view(args) -> int:
    with _client(args) as client:
        if args.view_cmd == "create":
            spec = json.loads(Path(args.spec).read_text())
            body = {"name": args.name, "spec": spec, "materialized": args.materialized}
            view = _check(client.post("/views", json=body)).json()
            print(json.dumps(view, indent=2))
        elif args.view_cmd == "list":
            views = _check(client.get("/views")).json()
            for view in views:
                flags = "materialized" if view["materialized"] else "virtual"
                stale = " stale" if view["stale"] else ""
                print(f"{view['name']}\t{flags}{stale}\tsource={view['source']}")
        else:
            view = _check(client.post(f"/views/{args.name}/refresh")).json()
            print(json.dumps(view, indent=2))
    return 0


def cmd_stats(args) -> int:
    params = {"kind": args.kind, "collection": args.collection, "format": "json" if args.json else "csv"}
    if args.top is not None:
        params["top"] = args.top
    if args.anonymize:
        params["anonymize"] = "true"
    with _client(args) as client:
        resp = _check(client.get("/stats", params=params))
    _write_out(resp.text if not args.json else resp.text + "\n", args.out)
    return 0


def cmd_graph(args) -> int:
    params = {
        "kind": args.kind,
        "collection": args.collection,
        "min_weight": args.min_weight,
        "weighting": args.weighting,
        "format": args.format,
    }
    with _client(args) as client:
        resp = _check(client.get("/graph", params=params))
    text = resp.text if args.format != "json" else json.dumps(resp.json(), indent=2) + "\n"
    _write_out(text, args.out)
    return 0


def cmd_profile(args) -> int:
    with _client(args) as client:
        body = _check(client.get(f"/profile/{args.entity}", params={"collection": args.collection})).json()
    lines = ["other,label,replies_to_other,replies_from_other"]
    for row in body["rows"]:
        label = row["label"].replace('"', '""')
        quoted = f'"{label}"' if "," in row["label"] or '"' in row["label"] else row["label"]
        lines.append(f"{row['other']},{quoted},{row['replies_to_other']},{row['replies_from_other']}")
    _write_out("".join(line + "\n" for line in lines), args.out)
    return 0


def cmd_facts(args) -> int:
    with _client(args) as client:
        if args.facts_cmd == "assert":
            text = Path(args.infile).read_text()
            body = _check(client.post("/facts/bulk", content=text)).json()
            print(f"asserted {len(body['fact_ids'])} facts")
        else:
            params = {}
            if args.agent:
                params["agent"] = args.agent
            if args.as_of:
                params["as_of"] = args.as_of
            if args.via:
                params["via"] = args.via
            found = _check(client.get("/facts", params=params)).json()
            for sourced in found:
                print(json.dumps(sourced, sort_keys=True))
    return 0


def cmd_institutions(args) -> int:
    with _client(args) as client:
        if args.inst_cmd == "set":
            text = Path(args.file).read_text()
            body = _check(client.put("/institutions", content=text)).json()
            print(f"{len(body['rules'])} rules")
        else:
            body = _check(client.get("/institutions")).json()
            for pattern, institution in body["rules"]:
                print(f"{pattern},{institution}")
    return 0


def cmd_jobs(args) -> int:
    with _client(args) as client:
        print(json.dumps(_check(client.get(f"/jobs/{args.job_id}")).json(), indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from liststand.service import create_app

    data = args.data or os.environ.get("LISTSTAND_DATA", DEFAULT_DATA)
    uvicorn.run(create_app(data_dir=data), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liststand")
    parser.add_argument("--server", help="service base URL (default: LISTSTAND_SERVER or in-process)")
    parser.add_argument("--data", help="data directory for in-process mode (default: LISTSTAND_DATA)")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("ingest", help="parse mailboxes into a dump or a collection")
    p.add_argument("--source", action="append", required=True, help="uri, repeatable")
    p.add_argument("--kind", default="mbox_file", choices=["mbox_file", "archive_dir", "url_list"])
    p.add_argument("--list-tag", action="append", help="subject tag to strip, repeatable")
    p.add_argument("--out", help="write a JSON-lines dump instead of storing")
    p.add_argument("--collection", default="messages")
    p.add_argument("--background", action="store_true")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("entities", help="resolve entities over a message dump")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--rules", default="r1,r2")
    p.add_argument("--institutions")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_entities)

    p = sub.add_parser("threads", help="build the reply forest from a message dump")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--entities")
    p.add_argument("--subject-fallback", choices=["on", "off"], default="off")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_threads)

    p = sub.add_parser("discussions", help="sustained two-way exchanges")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--threshold", type=int, default=2)
    p.add_argument("--scope", choices=["per_thread", "corpus"], default="per_thread")
    p.add_argument("--subject-fallback", choices=["on", "off"], default="off")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_discussions)

    p = sub.add_parser("export", help="convert JSON dumps to graph or table formats")
    p.add_argument("--format", required=True, choices=["graphml", "dot", "pajek", "csv"])
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("query", help="run a query spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    p.add_argument("--schema-out")
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("view", help="manage views")
    vsub = p.add_subparsers(dest="view_cmd", required=True)
    v = vsub.add_parser("create")
    v.add_argument("--name", required=True)
    v.add_argument("--spec", required=True)
    v.add_argument("--materialized", action="store_true")
    v = vsub.add_parser("list")
    v = vsub.add_parser("refresh")
    v.add_argument("--name", required=True)
    p.set_defaults(fn=cmd_view)

    p = sub.add_parser("stats", help="ranked tables")
    p.add_argument("--kind", required=True,
                   choices=["posts_per_entity", "posts_per_domain", "posters_per_domain", "recommendation"])
    p.add_argument("--collection", default="messages")
    p.add_argument("--top", type=int)
    p.add_argument("--anonymize", action="store_true")
    p.add_argument("--json", action="store_true", help="JSON instead of CSV")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("graph", help="social graphs")
    p.add_argument("--kind", default="coparticipation")
    p.add_argument("--collection", default="messages")
    p.add_argument("--min-weight", type=int, default=1)
    p.add_argument("--weighting", choices=["threads", "pairs"], default="threads")
    p.add_argument("--format", choices=["json", "graphml", "dot", "pajek"], default="graphml")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_graph)

    p = sub.add_parser("profile", help="answering profile of one entity")
    p.add_argument("--entity", type=int, required=True)
    p.add_argument("--collection", default="messages")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_profile)

    p = sub.add_parser("facts", help="assert and query provenance facts")
    fsub = p.add_subparsers(dest="facts_cmd", required=True)
    f = fsub.add_parser("assert")
    f.add_argument("--in", dest="infile", required=True)
    f = fsub.add_parser("query")
    f.add_argument("--agent")
    f.add_argument("--as-of", dest="as_of")
    f.add_argument("--via")
    p.set_defaults(fn=cmd_facts)

    p = sub.add_parser("institutions", help="manage the domain-to-institution map")
    isub = p.add_subparsers(dest="inst_cmd", required=True)
    i = isub.add_parser("set")
    i.add_argument("--file", required=True)
    i = isub.add_parser("show")
    p.set_defaults(fn=cmd_institutions)

    p = sub.add_parser("jobs", help="poll a background job")
    p.add_argument("job_id")
    p.set_defaults(fn=cmd_jobs)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8746)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ListstandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
