"""Writers for graph and table formats used by external analysis tools.

Every writer is a pure function from an in-memory value to text, and
deterministic: equal inputs produce byte-equal outputs. Graph writers
accept SocialGraph (undirected by construction), to_csv accepts
RankedTable, to_jsonl accepts messages, and to_canonical_xml accepts
any document tree.

Format notes:

* GraphML nodes are id "n<entity_id>" with label and optional
  institution data keys; edges carry an integer weight key.
* Pajek renumbers vertices 1..N in entity-id order, since the format
  wants contiguous ids; labels are quoted and the *Edges section keeps
  the weights. Institutions do not fit the basic vertex line and are
  dropped.
* dot emits an undirected graph with label/institution node attributes
  and weight edge attributes.
"""

from __future__ import annotations

import csv
import io
import json
from xml.sax.saxutils import escape

from liststand.analytics import RankedTable, SocialGraph
from liststand.ingest.model import Message
from liststand.warehouse.tree import TreeNode, serialize_tree

__all__ = [
    "to_canonical_xml",
    "to_csv",
    "to_dot",
    "to_graphml",
    "to_jsonl",
    "to_pajek",
]

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


def to_graphml(g: SocialGraph) -> str:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<graphml xmlns="{GRAPHML_NS}">',
        '  <key id="label" for="node" attr.name="label" attr.type="string"/>',
        '  <key id="institution" for="node" attr.name="institution" attr.type="string"/>',
        '  <key id="weight" for="edge" attr.name="weight" attr.type="int"/>',
        '  <graph id="G" edgedefault="undirected">',
    ]
    for eid, label, institution in sorted(g.nodes):
        lines.append(f'    <node id="n{eid}">')
        lines.append(f'      <data key="label">{escape(label)}</data>')
        if institution is not None:
            lines.append(f'      <data key="institution">{escape(institution)}</data>')
        lines.append("    </node>")
    for a, b, weight in sorted(g.edges):
        lines.append(f'    <edge source="n{a}" target="n{b}">')
        lines.append(f'      <data key="weight">{weight}</data>')
        lines.append("    </edge>")
    lines.append("  </graph>")
    lines.append("</graphml>")
    return "\n".join(lines) + "\n"


def _dot_quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: SocialGraph) -> str:
    lines = ["graph coparticipation {"]
    for eid, label, institution in sorted(g.nodes):
        attrs = [f"label={_dot_quote(label)}"]
        if institution is not None:
            attrs.append(f"institution={_dot_quote(institution)}")
        lines.append(f'  n{eid} [{", ".join(attrs)}];')
    for a, b, weight in sorted(g.edges):
        lines.append(f"  n{a} -- n{b} [weight={weight}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_pajek(g: SocialGraph) -> str:
    order = sorted(g.nodes)
    position = {eid: i for i, (eid, _, _) in enumerate(order, start=1)}
    lines = [f"*Vertices {len(order)}"]
    for eid, label, _ in order:
        # the format has no escape sequence, so inner quotes become apostrophes
        lines.append(f'{position[eid]} "{label.replace(chr(34), chr(39))}"')
    lines.append("*Edges")
    for a, b, weight in sorted(g.edges):
        lines.append(f"{position[a]} {position[b]} {weight}")
    return "\n".join(lines) + "\n"


def to_csv(t: RankedTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out)  # RFC 4180: CRLF rows, minimal quoting
    writer.writerow(("key",) + t.value_names)
    for key, values in t.rows:
        writer.writerow((key,) + values)
    return out.getvalue()


def to_jsonl(messages: list[Message]) -> str:
    return "".join(json.dumps(m.to_json_dict(), sort_keys=True) + "\n" for m in messages)


def to_canonical_xml(node: TreeNode) -> str:
    return serialize_tree(node) + "\n"
