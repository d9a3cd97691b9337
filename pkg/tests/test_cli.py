"""End-to-end command line flows over a temporary data directory."""

import json

import pytest

from liststand.cli import main

from helpers import SERVICE_ENTRIES, service_mbox_bytes

COUNT_SPEC = {
    "source": "messages",
    "bindings": [{"var": "$m", "path": "message"}],
    "template": "<n>{count($m)}</n>",
}


@pytest.fixture
def env(tmp_path, monkeypatch):
    monkeypatch.setenv("LISTSTAND_DATA", str(tmp_path / "data"))
    monkeypatch.delenv("LISTSTAND_SERVER", raising=False)
    mbox = tmp_path / "corpus.mbox"
    mbox.write_bytes(service_mbox_bytes(SERVICE_ENTRIES))
    return tmp_path, mbox


def run(*argv):
    return main(list(argv))


def test_ingest_dump_and_local_pipeline(env, capsys):
    tmp_path, mbox = env
    dump = tmp_path / "messages.jsonl"
    assert run("ingest", "--source", str(mbox), "--out", str(dump)) == 0
    lines = dump.read_text().splitlines()
    assert len(lines) == 5
    assert json.loads(lines[0])["message_id"] == "m1@x"

    entities_file = tmp_path / "entities.json"
    assert run("entities", "--in", str(dump), "--out", str(entities_file)) == 0
    entities = json.loads(entities_file.read_text())["entities"]
    assert [e["label"] for e in entities] == ["alice@alpha.com", "bob@beta.org", "carla@gamma.edu"]

    forest_file = tmp_path / "forest.json"
    assert run("threads", "--in", str(dump), "--entities", str(entities_file),
               "--out", str(forest_file)) == 0
    forest = json.loads(forest_file.read_text())
    assert set(forest["roots"]) == {"m1@x", "m4@x"}
    assert forest["nodes"]["m2@x"]["parent"] == "m1@x"
    assert forest["nodes"]["m2@x"]["entity"] == "bob@beta.org"

    assert run("discussions", "--in", str(dump), "--threshold", "1") == 0
    pairs = json.loads(capsys.readouterr().out)
    assert all({"a_label", "b_label", "edges_ab"} <= set(p) for p in pairs)


def test_store_stats_graph_profile(env, capsys):
    tmp_path, mbox = env
    assert run("ingest", "--source", str(mbox)) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["detail"]["stored"] == 5

    assert run("stats", "--kind", "posts_per_entity") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "key,posts"
    assert lines[1].startswith("alice@alpha.com,2")

    assert run("stats", "--kind", "posts_per_entity", "--anonymize", "--top", "1") == 0
    assert capsys.readouterr().out.splitlines()[1] == "1.,2"

    assert run("graph", "--format", "pajek") == 0
    assert capsys.readouterr().out.startswith("*Vertices 3")

    assert run("profile", "--entity", "0") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "other,label,replies_to_other,replies_from_other"
    assert len(out) > 1


def test_query_and_views(env, capsys, tmp_path):
    _, mbox = env
    assert run("ingest", "--source", str(mbox)) == 0
    capsys.readouterr()

    spec_file = tmp_path / "count.json"
    spec_file.write_text(json.dumps(COUNT_SPEC))
    assert run("query", "--spec", str(spec_file)) == 0
    assert capsys.readouterr().out == "<n>5</n>\n"

    assert run("view", "create", "--name", "total", "--spec", str(spec_file), "--materialized") == 0
    created = json.loads(capsys.readouterr().out)
    assert created["materialized"] is True

    assert run("view", "list") == 0
    listing = capsys.readouterr().out
    assert "total\tmaterialized" in listing

    assert run("view", "refresh", "--name", "total") == 0
    refreshed = json.loads(capsys.readouterr().out)
    assert refreshed["stale"] is False


def test_export_from_json_dumps(env, capsys, tmp_path):
    _, mbox = env
    assert run("ingest", "--source", str(mbox)) == 0
    capsys.readouterr()

    graph_json = tmp_path / "graph.json"
    assert run("graph", "--format", "json", "--out", str(graph_json)) == 0
    graphml_file = tmp_path / "graph.graphml"
    assert run("export", "--format", "graphml", "--in", str(graph_json),
               "--out", str(graphml_file)) == 0
    assert graphml_file.read_text().startswith('<?xml version="1.0"')

    assert run("export", "--format", "dot", "--in", str(graph_json)) == 0
    assert capsys.readouterr().out.startswith("graph coparticipation {")

    stats_json = tmp_path / "stats.json"
    assert run("stats", "--kind", "posts_per_entity", "--json", "--out", str(stats_json)) == 0
    assert run("export", "--format", "csv", "--in", str(stats_json)) == 0
    assert capsys.readouterr().out.splitlines()[0] == "key,posts"


def test_facts_and_institutions(env, capsys, tmp_path):
    facts_file = tmp_path / "facts.jsonl"
    facts_file.write_text(
        "\n".join(
            json.dumps({
                "fact": {"subject": s, "predicate": p, "object": o},
                "chain": [{"agent": "curator", "kind": "observed", "time": "2002-04-01T12:00:00Z"}],
            })
            for s, p, o in [
                ("ann", "affiliated_with", "IBM"),
                ("ann", "authored", "REC:XQuery"),
            ]
        )
    )
    assert run("facts", "assert", "--in", str(facts_file)) == 0
    assert "asserted 2 facts" in capsys.readouterr().out

    assert run("facts", "query") == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])["fact"]["predicate"] == "affiliated_with"

    imap_file = tmp_path / "map.csv"
    imap_file.write_text("ibm.com,IBM\n")
    assert run("institutions", "set", "--file", str(imap_file)) == 0
    assert "1 rules" in capsys.readouterr().out
    assert run("institutions", "show") == 0
    assert capsys.readouterr().out == "ibm.com,IBM\n"

    assert run("stats", "--kind", "recommendation") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "institution,type,individuals,rec,notes,drafts"
    assert out[1] == "IBM,n.a.,1,1,0,0"


def test_cli_error_paths(env, capsys, tmp_path):
    _, mbox = env
    spec_file = tmp_path / "bad.json"
    spec_file.write_text(json.dumps(dict(COUNT_SPEC, source="nowhere")))
    assert run("query", "--spec", str(spec_file)) == 1
    err = capsys.readouterr().err
    assert "not_found" in err

    assert run("export", "--format", "csv", "--in", str(spec_file)) == 1
    assert "not a stats JSON dump" in capsys.readouterr().err
