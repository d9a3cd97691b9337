/**
 * Shared fixtures: the message data schema as the service serves it,
 * and the ten golden canvas states frozen in test/golden/.
 */

import type { SchemaWire } from "../src/api.js";
import type { MappingCanvas, SkeletonNode } from "../src/canvas.js";

export function messageSchema(): SchemaWire {
  return {
    root: "message",
    elements: {
      message: {
        attrs: [
          ["date", "date"],
          ["id", "string"],
          ["offset", "int"],
          ["source", "string"],
        ],
        children: [
          ["from", "one"],
          ["in_reply_to", "optional"],
          ["references", "optional"],
          ["subject", "one"],
          ["subject_norm", "one"],
          ["body", "one"],
          ["flags", "optional"],
        ],
        content: null,
      },
      from: { attrs: [["display", "string"]], children: [], content: "string" },
      in_reply_to: { attrs: [], children: [], content: "string" },
      references: { attrs: [], children: [["ref", "many"]], content: null },
      ref: { attrs: [], children: [], content: "string" },
      subject: { attrs: [], children: [], content: "string" },
      subject_norm: { attrs: [], children: [], content: "string" },
      body: { attrs: [], children: [], content: "string" },
      flags: { attrs: [], children: [["flag", "many"]], content: null },
      flag: { attrs: [], children: [], content: "string" },
    },
  };
}

function leaf(tag: string): SkeletonNode {
  return { tag, children: [] };
}

function tree(tag: string, ...children: SkeletonNode[]): SkeletonNode {
  return { tag, children };
}

function canvas(skeleton: SkeletonNode, mappings: MappingCanvas["mappings"]): MappingCanvas {
  return { source: "messages", dataSchema: messageSchema(), skeleton, mappings };
}

export interface GoldenCase {
  name: string;
  canvas: MappingCanvas;
}

export function goldenCases(): GoldenCase[] {
  return [
    {
      // the documented starter: count of from values, whole-set template
      name: "g01-count-of-senders",
      canvas: canvas(tree("summary", leaf("senders")), [
        {
          dataPath: "message/from",
          leaf: ["summary", "senders"],
          annotations: [{ kind: "aggregate", func: "count" }],
        },
      ]),
    },
    {
      name: "g02-sender-rows",
      canvas: canvas(tree("row", leaf("sender")), [
        { dataPath: "message/from", leaf: ["row", "sender"], annotations: [] },
      ]),
    },
    {
      name: "g03-attrs-and-display",
      canvas: canvas(tree("row", leaf("id"), leaf("when"), leaf("writer")), [
        { dataPath: "message@id", leaf: ["row", "id"], annotations: [] },
        { dataPath: "message@date", leaf: ["row", "when"], annotations: [] },
        { dataPath: "message/from@display", leaf: ["row", "writer"], annotations: [] },
      ]),
    },
    {
      name: "g04-tally-by-sender",
      canvas: canvas(tree("row", leaf("sender"), leaf("n")), [
        { dataPath: "message/from", leaf: ["row", "sender"], annotations: [{ kind: "group" }] },
        {
          dataPath: "message",
          leaf: ["row", "n"],
          annotations: [{ kind: "aggregate", func: "count" }],
        },
      ]),
    },
    {
      name: "g05-total-offset",
      canvas: canvas(tree("t", leaf("total")), [
        {
          dataPath: "message@offset",
          leaf: ["t", "total"],
          annotations: [{ kind: "aggregate", func: "sum" }],
        },
      ]),
    },
    {
      name: "g06-filtered-offsets",
      canvas: canvas(tree("row", leaf("id"), leaf("pos")), [
        { dataPath: "message@id", leaf: ["row", "id"], annotations: [] },
        {
          dataPath: "message@offset",
          leaf: ["row", "pos"],
          annotations: [{ kind: "filter", cmp: ">", value: 10 }],
        },
      ]),
    },
    {
      name: "g07-subject-search",
      canvas: canvas(tree("row", leaf("sender"), leaf("subject")), [
        { dataPath: "message/from", leaf: ["row", "sender"], annotations: [] },
        {
          dataPath: "message/subject",
          leaf: ["row", "subject"],
          annotations: [{ kind: "filter", cmp: "contains", value: "plan" }],
        },
      ]),
    },
    {
      name: "g08-reference-list",
      canvas: canvas(tree("row", leaf("id"), leaf("r")), [
        { dataPath: "message@id", leaf: ["row", "id"], annotations: [] },
        { dataPath: "message/references/ref", leaf: ["row", "r"], annotations: [] },
      ]),
    },
    {
      name: "g09-chained-bindings",
      canvas: canvas(tree("row", leaf("f"), leaf("r"), leaf("d")), [
        { dataPath: "message/flags/flag", leaf: ["row", "f"], annotations: [] },
        { dataPath: "message/references/ref", leaf: ["row", "r"], annotations: [] },
        { dataPath: "message@date", leaf: ["row", "d"], annotations: [] },
      ]),
    },
    {
      name: "g10-extremes",
      canvas: canvas(tree("stats", leaf("first"), leaf("last"), leaf("posts")), [
        {
          dataPath: "message@date",
          leaf: ["stats", "first"],
          annotations: [{ kind: "aggregate", func: "min" }],
        },
        {
          dataPath: "message@id",
          leaf: ["stats", "last"],
          annotations: [{ kind: "aggregate", func: "max" }],
        },
        {
          dataPath: "message",
          leaf: ["stats", "posts"],
          annotations: [{ kind: "aggregate", func: "count" }],
        },
      ]),
    },
  ];
}
