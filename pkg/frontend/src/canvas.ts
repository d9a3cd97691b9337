/**
 * The mapping canvas: a user-built result skeleton, plus mappings that
 * drag data-schema paths onto its leaves, with optional per-mapping
 * annotations (aggregate, group, filter).
 *
 * buildQuerySpec is a pure function of canvas state: the same canvas
 * always serializes to byte-identical query-spec JSON. Translation
 * rules, in order of application:
 *
 *   - each mapping's data path is anchored to a binding: the element
 *     spine of the path, minus a trailing text-content segment, which
 *     rides in the value expression instead
 *   - anchors bind their whole ancestor chain, one binding per element,
 *     each relative_to its parent, so two mappings under the same
 *     element share its binding and join per element; variables are
 *     named $v1, $v2, ... in order of introduction (canvas order)
 *   - group annotations append the mapping's value expression to
 *     group_by (canvas order) and render the leaf as key(i)
 *   - sum, min, and max wrap the value expression; count instead binds
 *     the mapped element itself and counts that variable, because it
 *     counts occurrences rather than values
 *   - filter annotations append comparisons in canvas order; two or
 *     more are joined under one "and"
 *   - the skeleton serializes depth-first into the template
 */

import type { SchemaWire } from "./api.js";
import { parseXml, XmlNode } from "./xml.js";

export type AggregateFunc = "count" | "sum" | "min" | "max";
export type CompareOp = "<" | "<=" | ">" | ">=" | "=" | "!=" | "contains";

export type Annotation =
  | { kind: "aggregate"; func: AggregateFunc }
  | { kind: "group" }
  | { kind: "filter"; cmp: CompareOp; value: string | number };

export interface SkeletonNode {
  tag: string;
  children: SkeletonNode[];
}

export interface Mapping {
  /** "message/from", "message@date", "message/references/ref"; "" while unset */
  dataPath: string;
  /** tag path from the skeleton root to the target leaf */
  leaf: string[];
  annotations: Annotation[];
}

export interface MappingCanvas {
  source: string;
  dataSchema: SchemaWire;
  skeleton: SkeletonNode;
  mappings: Mapping[];
}

export interface BindingJson {
  var: string;
  relative_to: string;
  path: string;
}

export type FilterJson =
  | { op: "cmp"; left: string; cmp: CompareOp; right: { lit: string | number } }
  | { op: "and"; args: FilterJson[] }
  | { op: "not"; arg: FilterJson };

export interface QuerySpecJson {
  source: string;
  bindings: BindingJson[];
  filters: FilterJson | null;
  group_by: string[];
  template: string;
}

export class CanvasError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CanvasError";
  }
}

interface ParsedPath {
  segments: string[];
  attr: string | null;
}

export function parseDataPath(text: string): ParsedPath {
  const at = text.indexOf("@");
  const elementPart = at < 0 ? text : text.slice(0, at);
  const attr = at < 0 ? null : text.slice(at + 1);
  const segments = elementPart.split("/").filter((s) => s.length > 0);
  if (segments.length === 0) {
    throw new CanvasError(`data path ${JSON.stringify(text)} has no element`);
  }
  if (attr !== null && attr.length === 0) {
    throw new CanvasError(`data path ${JSON.stringify(text)} has an empty attribute`);
  }
  return { segments, attr };
}

/** Walk the path against the schema; returns the terminal element name. */
function checkPath(schema: SchemaWire, parsed: ParsedPath, raw: string): string {
  let current = parsed.segments[0];
  if (current !== schema.root) {
    throw new CanvasError(`data path ${JSON.stringify(raw)} must start at ${JSON.stringify(schema.root)}`);
  }
  for (const segment of parsed.segments.slice(1)) {
    const element = schema.elements[current];
    if (!element || !element.children.some(([name]) => name === segment)) {
      throw new CanvasError(`${JSON.stringify(segment)} is not a child of ${JSON.stringify(current)}`);
    }
    current = segment;
  }
  if (parsed.attr !== null) {
    const element = schema.elements[current];
    if (!element || !element.attrs.some(([name]) => name === parsed.attr)) {
      throw new CanvasError(`${JSON.stringify(current)} has no attribute ${JSON.stringify(parsed.attr)}`);
    }
  }
  return current;
}

function hasContent(schema: SchemaWire, name: string): boolean {
  const element = schema.elements[name];
  return element !== undefined && element.content !== null;
}

interface Anchored {
  /** full element path of the binding anchor */
  anchor: string[];
  /** "@attr", "/segment", or "" for a bare node reference */
  valueSuffix: string;
}

function anchorOf(schema: SchemaWire, parsed: ParsedPath): Anchored {
  if (parsed.attr !== null) {
    return { anchor: parsed.segments, valueSuffix: `@${parsed.attr}` };
  }
  const last = parsed.segments[parsed.segments.length - 1];
  if (parsed.segments.length > 1 && hasContent(schema, last)) {
    return { anchor: parsed.segments.slice(0, -1), valueSuffix: `/${last}` };
  }
  return { anchor: parsed.segments, valueSuffix: "" };
}

function leafKey(leaf: string[]): string {
  return leaf.join("/");
}

/** "Build" stays disabled until the canvas has at least one mapping. */
export function canBuild(canvas: MappingCanvas): boolean {
  return canvas.mappings.length > 0;
}

export function buildQuerySpec(canvas: MappingCanvas): QuerySpecJson {
  if (canvas.mappings.length === 0) {
    throw new CanvasError("canvas has no mappings");
  }

  const bindings: BindingJson[] = [];
  const varByAnchor = new Map<string, string>();

  function bindAnchor(anchor: string[]): string {
    const key = anchor.join("/");
    const existing = varByAnchor.get(key);
    if (existing !== undefined) {
      return existing;
    }
    const relativeTo = anchor.length > 1 ? bindAnchor(anchor.slice(0, -1)) : "source";
    const name = `$v${bindings.length + 1}`;
    bindings.push({
      var: name,
      relative_to: relativeTo,
      path: anchor[anchor.length - 1],
    });
    varByAnchor.set(key, name);
    return name;
  }

  const skeletonLeaves = new Set<string>();
  collectLeaves(canvas.skeleton, [], skeletonLeaves);

  const groupBy: string[] = [];
  const filterClauses: FilterJson[] = [];
  const exprByLeaf = new Map<string, string>();

  for (const mapping of canvas.mappings) {
    const where = leafKey(mapping.leaf);
    if (!skeletonLeaves.has(where)) {
      throw new CanvasError(`skeleton has no leaf ${JSON.stringify(where)}`);
    }
    const aggregates = mapping.annotations.filter((a) => a.kind === "aggregate");
    const groups = mapping.annotations.filter((a) => a.kind === "group");
    if (mapping.dataPath === "") {
      if (aggregates.length > 0) {
        throw new CanvasError(`aggregate leaf ${JSON.stringify(where)} has no mapped data path`);
      }
      throw new CanvasError(`leaf ${JSON.stringify(where)} has no mapped data path`);
    }
    if (aggregates.length > 1 || (aggregates.length > 0 && groups.length > 0)) {
      throw new CanvasError(`leaf ${JSON.stringify(where)} mixes aggregate and group annotations`);
    }
    if (exprByLeaf.has(where)) {
      throw new CanvasError(`leaf ${JSON.stringify(where)} is mapped twice`);
    }

    const parsed = parseDataPath(mapping.dataPath);
    checkPath(canvas.dataSchema, parsed, mapping.dataPath);
    const { anchor, valueSuffix } = anchorOf(canvas.dataSchema, parsed);
    const variable = bindAnchor(anchor);
    const expr = `${variable}${valueSuffix}`;

    for (const annotation of mapping.annotations) {
      if (annotation.kind === "filter") {
        filterClauses.push({
          op: "cmp",
          left: expr,
          cmp: annotation.cmp,
          right: { lit: annotation.value },
        });
      }
    }

    if (groups.length > 0) {
      let index = groupBy.indexOf(expr);
      if (index < 0) {
        groupBy.push(expr);
        index = groupBy.length - 1;
      }
      exprByLeaf.set(where, `key(${index + 1})`);
    } else if (aggregates.length > 0) {
      const agg = aggregates[0] as { kind: "aggregate"; func: AggregateFunc };
      if (agg.func === "count") {
        // count counts occurrences, so it takes the element's own variable
        exprByLeaf.set(where, `count(${bindAnchor(parsed.segments)})`);
      } else {
        exprByLeaf.set(where, `${agg.func}(${expr})`);
      }
    } else {
      exprByLeaf.set(where, expr);
    }
  }

  const template = renderSkeleton(canvas.skeleton, [], exprByLeaf);

  let filters: FilterJson | null = null;
  if (filterClauses.length === 1) {
    filters = filterClauses[0];
  } else if (filterClauses.length > 1) {
    filters = { op: "and", args: filterClauses };
  }

  return {
    source: canvas.source,
    bindings,
    filters,
    group_by: groupBy,
    template,
  };
}

function collectLeaves(node: SkeletonNode, prefix: string[], into: Set<string>): void {
  const path = [...prefix, node.tag];
  if (node.children.length === 0) {
    into.add(leafKey(path));
  } else {
    for (const child of node.children) {
      collectLeaves(child, path, into);
    }
  }
}

function renderSkeleton(node: SkeletonNode, prefix: string[], exprByLeaf: Map<string, string>): string {
  const path = [...prefix, node.tag];
  if (node.children.length > 0) {
    const inner = node.children.map((child) => renderSkeleton(child, path, exprByLeaf)).join("");
    return `<${node.tag}>${inner}</${node.tag}>`;
  }
  const expr = exprByLeaf.get(leafKey(path));
  if (expr === undefined) {
    throw new CanvasError(`leaf ${JSON.stringify(leafKey(path))} has no mapping`);
  }
  return `<${node.tag}>{${expr}}</${node.tag}>`;
}

/** The byte-exact serialization committed to golden files. */
export function specToJson(spec: QuerySpecJson): string {
  return JSON.stringify(spec, null, 2) + "\n";
}

export function buildQuerySpecJson(canvas: MappingCanvas): string {
  return specToJson(buildQuerySpec(canvas));
}

// --- reopening a saved spec into the canvas -----------------------------

const AGG_EXPR_RE = /^(count|sum|min|max)\((.+)\)$/;
const KEY_EXPR_RE = /^key\((\d+)\)$/;

function absoluteAnchors(bindings: BindingJson[]): Map<string, string[]> {
  const anchors = new Map<string, string[]>();
  for (const binding of bindings) {
    const steps = binding.path.split("/").filter((s) => s.length > 0);
    if (binding.relative_to === "source") {
      anchors.set(binding.var, steps);
    } else {
      const base = anchors.get(binding.relative_to);
      if (!base) {
        throw new CanvasError(`binding ${binding.var} refers to unknown ${binding.relative_to}`);
      }
      anchors.set(binding.var, [...base, ...steps]);
    }
  }
  return anchors;
}

function exprToDataPath(expr: string, anchors: Map<string, string[]>): string {
  const match = /^(\$[A-Za-z_][A-Za-z0-9_]*)(@[A-Za-z_][A-Za-z0-9_.-]*|\/[A-Za-z_][A-Za-z0-9_.-]*)?$/.exec(expr);
  if (!match) {
    throw new CanvasError(`cannot reopen value expression ${JSON.stringify(expr)}`);
  }
  const anchor = anchors.get(match[1]);
  if (!anchor) {
    throw new CanvasError(`value expression ${JSON.stringify(expr)} uses an unknown variable`);
  }
  const suffix = match[2] ?? "";
  if (suffix.startsWith("@")) {
    return `${anchor.join("/")}${suffix}`;
  }
  if (suffix.startsWith("/")) {
    return `${anchor.join("/")}${suffix}`;
  }
  return anchor.join("/");
}

function flattenFilters(filters: FilterJson | null): { left: string; cmp: CompareOp; value: string | number }[] {
  if (filters === null) {
    return [];
  }
  if (filters.op === "cmp") {
    return [{ left: filters.left, cmp: filters.cmp, value: filters.right.lit }];
  }
  if (filters.op === "and") {
    return filters.args.flatMap((arg) => flattenFilters(arg));
  }
  throw new CanvasError(`cannot reopen a ${JSON.stringify(filters.op)} filter into the canvas`);
}

/**
 * Best-effort inverse of buildQuerySpec for the query-spec family this canvas
 * emits; anything outside it (literal template content, "not" filters,
 * filters on unmapped expressions) is rejected with a CanvasError.
 * Mappings come back in template order, so a reopened canvas may
 * renumber variables while keeping the meaning intact.
 */
export function specToCanvas(spec: QuerySpecJson, dataSchema: SchemaWire): MappingCanvas {
  const anchors = absoluteAnchors(spec.bindings);
  const mappings: Mapping[] = [];

  function toSkeleton(node: XmlNode, prefix: string[]): SkeletonNode {
    const path = [...prefix, node.tag];
    if (node.children.length > 0) {
      return { tag: node.tag, children: node.children.map((child) => toSkeleton(child, path)) };
    }
    const raw = (node.text ?? "").trim();
    const inner = /^\{(.*)\}$/.exec(raw);
    if (!inner) {
      throw new CanvasError(`template leaf <${node.tag}> has no {placeholder}`);
    }
    const body = inner[1].trim();
    const key = KEY_EXPR_RE.exec(body);
    const agg = AGG_EXPR_RE.exec(body);
    if (key) {
      const index = parseInt(key[1], 10) - 1;
      const expr = spec.group_by[index];
      if (expr === undefined) {
        throw new CanvasError(`key(${key[1]}) is outside group_by`);
      }
      mappings.push({
        dataPath: exprToDataPath(expr, anchors),
        leaf: path,
        annotations: [{ kind: "group" }],
      });
    } else if (agg) {
      mappings.push({
        dataPath: exprToDataPath(agg[2].trim(), anchors),
        leaf: path,
        annotations: [{ kind: "aggregate", func: agg[1] as AggregateFunc }],
      });
    } else {
      mappings.push({ dataPath: exprToDataPath(body, anchors), leaf: path, annotations: [] });
    }
    return { tag: node.tag, children: [] };
  }

  const skeleton = toSkeleton(parseXml(spec.template), []);

  for (const clause of flattenFilters(spec.filters)) {
    const dataPath = exprToDataPath(clause.left, anchors);
    const target = mappings.find((m) => m.dataPath === dataPath);
    if (!target) {
      throw new CanvasError(`filter on ${JSON.stringify(dataPath)} has no mapped leaf to attach to`);
    }
    target.annotations.push({ kind: "filter", cmp: clause.cmp, value: clause.value });
  }

  const canvas: MappingCanvas = { source: spec.source, dataSchema, skeleton, mappings };
  buildQuerySpec(canvas); // reject anything the builder itself would not accept
  return canvas;
}
