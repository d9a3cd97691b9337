/**
 * Result documents (canonical XML strings) into a flat display table:
 * one row per document, one column per attribute or leaf path, in
 * first-seen order. Values are shown exactly as the service sent them.
 */

import { parseXml, XmlNode } from "./xml.js";

export interface ResultTable {
  columns: string[];
  rows: string[][];
}

function collect(node: XmlNode, prefix: string, into: Map<string, string[]>): void {
  const base = prefix ? `${prefix}/${node.tag}` : node.tag;
  for (const [name, value] of Object.entries(node.attrs)) {
    const column = `${base}@${name}`;
    const bucket = into.get(column) ?? [];
    bucket.push(value);
    into.set(column, bucket);
  }
  if (node.children.length > 0) {
    for (const child of node.children) {
      collect(child, base, into);
    }
  } else {
    const bucket = into.get(base) ?? [];
    bucket.push(node.text ?? "");
    into.set(base, bucket);
  }
}

export function resultTable(documents: string[]): ResultTable {
  const columns: string[] = [];
  const perDocument: Map<string, string[]>[] = [];
  for (const text of documents) {
    const cells = new Map<string, string[]>();
    collect(parseXml(text), "", cells);
    for (const column of cells.keys()) {
      if (!columns.includes(column)) {
        columns.push(column);
      }
    }
    perDocument.push(cells);
  }
  const rows = perDocument.map((cells) =>
    columns.map((column) => (cells.get(column) ?? []).join("; ")),
  );
  return { columns, rows };
}
