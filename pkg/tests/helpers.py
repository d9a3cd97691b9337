"""Shared fixtures builders: synthetic messages and corpora."""

import random
from datetime import datetime, timedelta, timezone

from liststand.ingest.model import Message

BASE_DATE = datetime(2002, 4, 1, 12, 0, 0, tzinfo=timezone.utc)


def make_message(
    mid,
    date=None,
    in_reply_to=None,
    references=(),
    from_address="a@example.com",
    from_display=None,
    subject="topic",
    subject_norm=None,
    body="body",
    source_id="fixture",
    offset=0,
):
    return Message(
        message_id=mid,
        in_reply_to=in_reply_to,
        references=list(references),
        from_display=from_display,
        from_address=from_address,
        date=date or BASE_DATE,
        subject_raw=subject,
        subject_norm=subject_norm if subject_norm is not None else subject.lower(),
        body_text=body,
        source_id=source_id,
        offset=offset,
        flags=[],
    )


def make_corpus(rng, size, entities=6, reply_rate=0.7, dangling_rate=0.1, via_references_rate=0.3):
    """Random reply corpus; all links point at earlier messages, so it is acyclic.

    Dates strictly increase with position and senders are drawn from a
    small pool, giving dense reply-back-and-forth for discussion tests.
    """
    messages = []
    for index in range(size):
        mid = f"m{index}@x"
        sender = f"p{rng.randrange(entities)}@example.com"
        in_reply_to = None
        references = []
        if index > 0 and rng.random() < reply_rate:
            target = f"m{rng.randrange(index)}@x"
            if rng.random() < via_references_rate:
                references = [f"junk{rng.randrange(1000)}@y", target]
                if rng.random() < 0.5:
                    in_reply_to = f"gone{rng.randrange(1000)}@y"  # dangling, ref must win
            else:
                in_reply_to = target
                if rng.random() < 0.3:
                    references = [f"m{rng.randrange(index)}@x", target]
        elif rng.random() < dangling_rate:
            in_reply_to = f"gone{rng.randrange(1000)}@y"
        messages.append(
            make_message(
                mid,
                date=BASE_DATE + timedelta(minutes=index),
                in_reply_to=in_reply_to,
                references=references,
                from_address=sender,
                subject=f"t{rng.randrange(max(2, size // 4))}",
                offset=index,
            )
        )
    return messages


def expected_parents(messages):
    """Independent parent choice for acyclic corpora: precedence rules only."""
    ids = {message.message_id for message in messages}
    parents = {}
    for message in messages:
        pid = None
        if message.in_reply_to in ids:
            pid = message.in_reply_to
        else:
            existing = [ref for ref in message.references if ref in ids]
            if existing:
                pid = existing[-1]
        parents[message.message_id] = pid
    return parents


QUERY_SENDERS = ["a@x", "b@x", "c@x"]
QUERY_SUBJECTS = ["plan", "re: plan", "minutes"]
QUERY_TAGS = ["xml", "web", "meta"]


def query_message_schema():
    """Schema for the synthetic corpus the query tests run over."""
    from liststand.warehouse.schema import ElementDef, SchemaDef

    return SchemaDef(
        root="message",
        elements={
            "message": ElementDef(
                attrs=[("id", "string"), ("date", "date"), ("size", "int")],
                children=[
                    ("from", "one"),
                    ("subject", "optional"),
                    ("tags", "optional"),
                ],
            ),
            "from": ElementDef(content="string"),
            "subject": ElementDef(content="string"),
            "tags": ElementDef(children=[("tag", "many")]),
            "tag": ElementDef(content="string"),
        },
    )


def query_corpus(rng, size=None):
    """Random documents that satisfy query_message_schema()."""
    from liststand.warehouse.tree import TreeNode

    if size is None:
        size = rng.randrange(0, 7)
    docs = []
    for index in range(size):
        kids = [TreeNode("from", text=rng.choice(QUERY_SENDERS))]
        if rng.random() < 0.7:
            kids.append(TreeNode("subject", text=rng.choice(QUERY_SUBJECTS)))
        tag_count = rng.randrange(0, 3)
        if tag_count:
            kids.append(
                TreeNode(
                    "tags",
                    children=[
                        TreeNode("tag", text=rng.choice(QUERY_TAGS))
                        for _ in range(tag_count)
                    ],
                )
            )
        docs.append(
            TreeNode(
                "message",
                {
                    "id": f"m{index}",
                    "date": f"2002-04-{(index % 27) + 1:02d}T10:00:00Z",
                    "size": str(rng.randrange(0, 31)),
                },
                children=kids,
            )
        )
    return docs


def random_query_case(rng):
    """One (documents, query dict) pair drawn from a broad family.

    The family covers per-tuple, grouped, and whole-set templates,
    chained and predicated bindings, and each filter shape, so a sweep
    over seeds exercises every instantiation mode.
    """
    docs = query_corpus(rng)

    bindings = [{"var": "$m", "relative_to": "source", "path": "message"}]
    roll = rng.random()
    if roll < 0.2:
        bindings[0]["path"] = f"message[@size>{rng.randrange(0, 25)}]"
    elif roll < 0.3:
        bindings[0]["path"] = "message[subject contains 'plan']"
    extra = rng.random()
    if extra < 0.25:
        bindings.append({"var": "$t", "relative_to": "$m", "path": "tags/tag"})
    elif extra < 0.45:
        bindings.append({"var": "$f", "relative_to": "$m", "path": "from"})
    elif extra < 0.6:
        bindings.append({"var": "$s", "relative_to": "$m", "path": "subject"})
    have = {entry["var"] for entry in bindings}

    filters = None
    roll = rng.random()
    if roll < 0.25:
        filters = {
            "op": "cmp",
            "left": "$m@size",
            "cmp": rng.choice(["<", "<=", ">", ">=", "=", "!="]),
            "right": {"lit": rng.randrange(0, 31)},
        }
    elif roll < 0.4:
        filters = {
            "op": "cmp",
            "left": "$m/from",
            "cmp": "contains",
            "right": {"lit": rng.choice(["a@", "b@", "@x"])},
        }
    elif roll < 0.5:
        filters = {
            "op": "and",
            "args": [
                {"op": "cmp", "left": "$m@size", "cmp": ">=", "right": {"lit": 5}},
                {
                    "op": "not",
                    "arg": {
                        "op": "cmp",
                        "left": "$m@id",
                        "cmp": "=",
                        "right": {"lit": "m0"},
                    },
                },
            ],
        }

    group_by = []
    shape = rng.randrange(4)
    if shape == 0:
        parts = ["<id>{$m@id}</id>", "<addr>{$m/from}</addr>"]
        if "$f" in have:
            parts.append("<w>{$f}</w>")
        if "$s" in have:
            parts.append("<subj>{$s@missing}</subj>")
        if "$t" in have:
            parts.append("<tag>{$t}</tag>")
        template = "<row>" + "".join(parts) + "</row>"
    elif shape == 1:
        group_by = [rng.choice(["$m/from", "$m@size", "$m/subject"])]
        parts = ["<k>{key(1)}</k>", "<n>{count($m)}</n>"]
        if rng.random() < 0.5:
            parts.append("<lo>{min($m@date)}</lo>")
        if rng.random() < 0.5:
            parts.append("<total>{sum($m@size)}</total>")
        if rng.random() < 0.3:
            parts.append("<addr>{$m/from}</addr>")
        template = "<row>" + "".join(parts) + "</row>"
    elif shape == 2:
        parts = ["<n>{count($m)}</n>", "<total>{sum($m@size)}</total>"]
        if rng.random() < 0.5:
            parts.append("<hi>{max($m@id)}</hi>")
        if rng.random() < 0.5:
            parts.append("<addr>{$m/from}</addr>")
        template = "<t>" + "".join(parts) + "</t>"
    else:
        template = "<copy>{$m}</copy>"

    data = {
        "source": "m",
        "bindings": bindings,
        "filters": filters,
        "group_by": group_by,
        "template": template,
    }
    return docs, data


def service_mbox_bytes(entries):
    """Tiny mbox: entries are (message_id, sender, subject, parent_or_None)."""
    chunks = []
    for i, (mid, sender, subject, parent) in enumerate(entries):
        reply = f"In-Reply-To: <{parent}>\n" if parent else ""
        chunks.append(
            f"From {sender} Mon Apr  1 12:{i:02d}:00 2002\n"
            f"Message-ID: <{mid}>\n"
            f"From: {sender}\n"
            f"Date: Mon, 1 Apr 2002 12:{i:02d}:00 +0000\n"
            f"Subject: {subject}\n"
            f"{reply}\n"
            f"body {i}\n\n"
        )
    return "".join(chunks).encode()


SERVICE_ENTRIES = [
    ("m1@x", "alice@alpha.com", "plan", None),
    ("m2@x", "bob@beta.org", "Re: plan", "m1@x"),
    ("m3@x", "alice@alpha.com", "Re: plan", "m2@x"),
    ("m4@x", "carla@gamma.edu", "minutes", None),
    ("m5@x", "bob@beta.org", "Re: minutes", "m4@x"),
]
