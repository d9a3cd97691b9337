/**
 * Browser shell: a QBE-style two-panel query builder (data schema on
 * the left, result skeleton on the right), result tables, the view
 * list, and the graph explorer. All analysis comes from the service;
 * this file only renders state and forwards actions.
 */

import { ApiError, Client, QueryResponseWire, SchemaWire } from "./api.js";
import {
  Annotation,
  CanvasError,
  CompareOp,
  MappingCanvas,
  QuerySpecJson,
  SkeletonNode,
  buildQuerySpec,
  buildQuerySpecJson,
  canBuild,
  specToCanvas,
} from "./canvas.js";
import { GraphExplorer, edgeWidth, institutionColor, layoutGraph } from "./graph.js";
import { resultTable } from "./table.js";
import { ViewsPane, badgesFor, canRefresh } from "./views.js";

type Tab = "query" | "views" | "graph";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function button(label: string, onClick: () => void, disabled = false): HTMLButtonElement {
  const node = el("button", "btn", label);
  node.disabled = disabled;
  node.addEventListener("click", onClick);
  return node;
}

export class App {
  private readonly client: Client;
  private tab: Tab = "query";
  private collection = "messages";
  private schema: SchemaWire | null = null;
  private canvas: MappingCanvas | null = null;
  private selectedPath: string | null = null;
  private response: QueryResponseWire | null = null;
  private status = "";
  private showSpec = false;
  private readonly viewsPane: ViewsPane;
  private readonly explorer: GraphExplorer;

  constructor(private readonly root: HTMLElement, baseUrl = "") {
    this.client = new Client(baseUrl);
    this.viewsPane = new ViewsPane(this.client);
    this.explorer = new GraphExplorer(this.client);
  }

  async init(): Promise<void> {
    try {
      const collections = await this.client.listCollections();
      if (collections.length > 0) {
        this.collection = collections[0].name;
      }
      await this.loadSchema();
    } catch (err) {
      this.report(err);
    }
    this.render();
  }

  private async loadSchema(): Promise<void> {
    const out = await this.client.getSchema(this.collection);
    this.schema = out.schema;
    if (this.schema) {
      this.canvas = {
        source: this.collection,
        dataSchema: this.schema,
        skeleton: { tag: "row", children: [] },
        mappings: [],
      };
    }
    this.selectedPath = null;
    this.response = null;
  }

  private report(err: unknown): void {
    if (err instanceof ApiError) {
      this.status = `${err.code}: ${err.message}`;
    } else if (err instanceof Error) {
      this.status = err.message;
    } else {
      this.status = String(err);
    }
  }

  // --- actions ----------------------------------------------------------

  private async runQuery(): Promise<void> {
    if (!this.canvas) {
      return;
    }
    let spec: QuerySpecJson;
    try {
      spec = buildQuerySpec(this.canvas);
    } catch (err) {
      this.report(err); // inline validation; no request sent
      this.render();
      return;
    }
    try {
      this.response = await this.client.query(spec);
      this.status = this.response.schema_error
        ? `schema note: ${this.response.schema_error}`
        : `${this.response.documents.length} result documents`;
    } catch (err) {
      this.report(err);
    }
    this.render();
  }

  private async saveView(): Promise<void> {
    if (!this.canvas) {
      return;
    }
    const name = window.prompt("View name?");
    if (!name) {
      return;
    }
    const materialized = window.confirm("Materialize this view? (cancel keeps it virtual)");
    try {
      const spec = buildQuerySpec(this.canvas);
      const view = await this.client.createView(name, spec, materialized);
      this.status = `saved view ${view.name}`;
    } catch (err) {
      this.report(err);
    }
    this.render();
  }

  private async openView(name: string): Promise<void> {
    try {
      const detail = await this.client.getView(name);
      const schemaOut = await this.client.getSchema(detail.source);
      if (!schemaOut.schema) {
        this.status = `source ${detail.source} has no schema to map against`;
      } else {
        this.canvas = specToCanvas(detail.spec as QuerySpecJson, schemaOut.schema);
        this.schema = schemaOut.schema;
        this.collection = detail.source;
        this.tab = "query";
        this.status = `opened view ${name} into the canvas`;
      }
    } catch (err) {
      this.report(err);
    }
    this.render();
  }

  private mapSelection(leaf: string[]): void {
    if (!this.canvas || this.selectedPath === null) {
      return;
    }
    this.canvas.mappings = this.canvas.mappings.filter((m) => m.leaf.join("/") !== leaf.join("/"));
    this.canvas.mappings.push({ dataPath: this.selectedPath, leaf, annotations: [] });
    this.status = `mapped ${this.selectedPath} onto ${leaf.join("/")}`;
    this.render();
  }

  private annotate(leaf: string[], annotation: Annotation | null): void {
    if (!this.canvas) {
      return;
    }
    const mapping = this.canvas.mappings.find((m) => m.leaf.join("/") === leaf.join("/"));
    if (!mapping) {
      return;
    }
    if (annotation === null) {
      mapping.annotations = [];
    } else if (annotation.kind === "filter") {
      mapping.annotations.push(annotation);
    } else {
      mapping.annotations = mapping.annotations.filter((a) => a.kind === "filter");
      mapping.annotations.push(annotation);
    }
    this.render();
  }

  private promptFilter(leaf: string[]): void {
    const cmp = window.prompt("Comparison (one of < <= > >= = != contains)?", "=");
    if (!cmp || !["<", "<=", ">", ">=", "=", "!=", "contains"].includes(cmp)) {
      return;
    }
    const raw = window.prompt("Literal value?");
    if (raw === null) {
      return;
    }
    const asNumber = Number(raw);
    const value = raw.trim() !== "" && Number.isFinite(asNumber) ? asNumber : raw;
    this.annotate(leaf, { kind: "filter", cmp: cmp as CompareOp, value });
  }

  // --- rendering --------------------------------------------------------

  private render(): void {
    this.root.replaceChildren();
    this.root.appendChild(this.renderHeader());
    const status = el("div", "status", this.status);
    this.root.appendChild(status);
    if (this.tab === "query") {
      this.root.appendChild(this.renderQueryTab());
    } else if (this.tab === "views") {
      this.root.appendChild(this.renderViewsTab());
    } else {
      this.root.appendChild(this.renderGraphTab());
    }
  }

  private renderHeader(): HTMLElement {
    const header = el("header", "header");
    header.appendChild(el("h1", "title", "liststand"));
    const tabs = el("nav", "tabs");
    const entries: [Tab, string][] = [
      ["query", "Query"],
      ["views", "Views"],
      ["graph", "Graph"],
    ];
    for (const [tab, label] of entries) {
      const node = button(label, async () => {
        this.tab = tab;
        if (tab === "views") {
          await this.viewsPane.load();
        }
        if (tab === "graph" && !this.explorer.graph) {
          await this.explorer.reload();
        }
        this.render();
      });
      if (tab === this.tab) {
        node.classList.add("active");
      }
      tabs.appendChild(node);
    }
    header.appendChild(tabs);

    const picker = el("div", "collection");
    const input = el("input") as HTMLInputElement;
    input.value = this.collection;
    picker.appendChild(input);
    picker.appendChild(
      button("Load schema", async () => {
        this.collection = input.value.trim();
        try {
          await this.loadSchema();
          this.status = `schema of ${this.collection} loaded`;
        } catch (err) {
          this.report(err);
        }
        this.render();
      }),
    );
    header.appendChild(picker);
    return header;
  }

  private renderQueryTab(): HTMLElement {
    const wrap = el("div", "query-tab");
    const panels = el("div", "panels");
    panels.appendChild(this.renderSchemaPanel());
    panels.appendChild(this.renderSkeletonPanel());
    wrap.appendChild(panels);
    wrap.appendChild(this.renderToolbar());
    if (this.showSpec && this.canvas && canBuild(this.canvas)) {
      try {
        wrap.appendChild(el("pre", "spec-preview", buildQuerySpecJson(this.canvas)));
      } catch (err) {
        if (err instanceof CanvasError) {
          wrap.appendChild(el("pre", "spec-preview error", err.message));
        }
      }
    }
    if (this.response) {
      wrap.appendChild(this.renderResults(this.response));
    }
    return wrap;
  }

  private renderSchemaPanel(): HTMLElement {
    const panel = el("section", "panel schema-panel");
    panel.appendChild(el("h2", "panel-title", "Data schema"));
    if (!this.schema) {
      panel.appendChild(el("p", "empty", "No schema loaded."));
      return panel;
    }
    panel.appendChild(this.renderSchemaNode(this.schema, this.schema.root, [this.schema.root]));
    return panel;
  }

  private renderSchemaNode(schema: SchemaWire, name: string, path: string[]): HTMLElement {
    const item = el("div", "schema-node");
    const pathText = path.join("/");
    const label = button(name, () => {
      this.selectedPath = pathText;
      this.status = `selected ${pathText}`;
      this.render();
    });
    label.classList.add("schema-name");
    if (this.selectedPath === pathText) {
      label.classList.add("selected");
    }
    item.appendChild(label);

    const element = schema.elements[name];
    if (!element) {
      return item;
    }
    const kids = el("div", "schema-children");
    for (const [attr] of element.attrs) {
      const attrPath = `${pathText}@${attr}`;
      const attrNode = button(`@${attr}`, () => {
        this.selectedPath = attrPath;
        this.status = `selected ${attrPath}`;
        this.render();
      });
      attrNode.classList.add("schema-attr");
      if (this.selectedPath === attrPath) {
        attrNode.classList.add("selected");
      }
      kids.appendChild(attrNode);
    }
    for (const [child, kind] of element.children) {
      if (path.includes(child)) {
        kids.appendChild(el("div", "schema-cycle", `${child} (recursive)`));
        continue;
      }
      const childNode = this.renderSchemaNode(schema, child, [...path, child]);
      childNode.appendChild(el("span", "kind", kind));
      kids.appendChild(childNode);
    }
    item.appendChild(kids);
    return item;
  }

  private renderSkeletonPanel(): HTMLElement {
    const panel = el("section", "panel skeleton-panel");
    panel.appendChild(el("h2", "panel-title", "Result skeleton"));
    if (!this.canvas) {
      panel.appendChild(el("p", "empty", "Load a schema first."));
      return panel;
    }
    panel.appendChild(this.renderSkeletonNode(this.canvas.skeleton, []));
    return panel;
  }

  private renderSkeletonNode(node: SkeletonNode, prefix: string[]): HTMLElement {
    const path = [...prefix, node.tag];
    const item = el("div", "skeleton-node");
    const row = el("div", "skeleton-row");
    row.appendChild(el("span", "tag", `<${node.tag}>`));

    row.appendChild(
      button("+ child", () => {
        const tag = window.prompt("Child element tag?");
        if (tag && /^[A-Za-z_][A-Za-z0-9_.-]*$/.test(tag)) {
          node.children.push({ tag, children: [] });
          if (this.canvas) {
            // the node stops being a leaf, so its mapping no longer applies
            this.canvas.mappings = this.canvas.mappings.filter(
              (m) => m.leaf.join("/") !== path.join("/"),
            );
          }
          this.render();
        }
      }),
    );
    if (prefix.length > 0) {
      row.appendChild(
        button("remove", () => {
          this.removeSkeletonNode(path);
          this.render();
        }),
      );
    }

    if (node.children.length === 0 && this.canvas) {
      const mapping = this.canvas.mappings.find((m) => m.leaf.join("/") === path.join("/"));
      if (mapping) {
        const chips = el("span", "chips");
        chips.appendChild(el("span", "chip", mapping.dataPath));
        for (const annotation of mapping.annotations) {
          if (annotation.kind === "aggregate") {
            chips.appendChild(el("span", "chip agg", annotation.func));
          } else if (annotation.kind === "group") {
            chips.appendChild(el("span", "chip group", "group"));
          } else {
            chips.appendChild(el("span", "chip filter", `${annotation.cmp} ${annotation.value}`));
          }
        }
        row.appendChild(chips);
        const select = el("select") as HTMLSelectElement;
        for (const option of ["value", "count", "sum", "min", "max", "group"]) {
          const opt = el("option", undefined, option) as HTMLOptionElement;
          opt.value = option;
          select.appendChild(opt);
        }
        const current = mapping.annotations.find((a) => a.kind !== "filter");
        select.value = current ? (current.kind === "group" ? "group" : current.func) : "value";
        select.addEventListener("change", () => {
          if (select.value === "value") {
            this.annotate(path, null);
          } else if (select.value === "group") {
            this.annotate(path, { kind: "group" });
          } else {
            this.annotate(path, { kind: "aggregate", func: select.value as never });
          }
        });
        row.appendChild(select);
        row.appendChild(button("filter…", () => this.promptFilter(path)));
        row.appendChild(
          button("unmap", () => {
            if (this.canvas) {
              this.canvas.mappings = this.canvas.mappings.filter((m) => m !== mapping);
              this.render();
            }
          }),
        );
      } else if (this.selectedPath !== null) {
        row.appendChild(button(`map ${this.selectedPath}`, () => this.mapSelection(path)));
      } else {
        row.appendChild(el("span", "hint", "select a data path, then map it here"));
      }
    }

    item.appendChild(row);
    for (const child of node.children) {
      item.appendChild(this.renderSkeletonNode(child, path));
    }
    return item;
  }

  private removeSkeletonNode(path: string[]): void {
    if (!this.canvas || path.length < 2) {
      return;
    }
    const walk = (node: SkeletonNode, at: number): void => {
      if (at === path.length - 1) {
        node.children = node.children.filter((child) => child.tag !== path[at]);
        return;
      }
      const next = node.children.find((child) => child.tag === path[at]);
      if (next) {
        walk(next, at + 1);
      }
    };
    walk(this.canvas.skeleton, 1);
    const gone = path.join("/");
    this.canvas.mappings = this.canvas.mappings.filter(
      (m) => !m.leaf.join("/").startsWith(gone),
    );
  }

  private renderToolbar(): HTMLElement {
    const bar = el("div", "toolbar");
    const buildable = this.canvas !== null && canBuild(this.canvas);
    bar.appendChild(button("Run", () => void this.runQuery(), !buildable));
    bar.appendChild(button("Save as view", () => void this.saveView(), !buildable));
    bar.appendChild(
      button(this.showSpec ? "Hide spec" : "Show spec", () => {
        this.showSpec = !this.showSpec;
        this.render();
      }),
    );
    return bar;
  }

  private renderResults(response: QueryResponseWire): HTMLElement {
    const section = el("section", "results");
    section.appendChild(el("h2", "panel-title", "Results"));
    if (response.documents.length === 0) {
      section.appendChild(el("p", "empty", "No result documents."));
      return section;
    }
    const { columns, rows } = resultTable(response.documents);
    const table = el("table", "result-table");
    const head = el("tr");
    for (const column of columns) {
      head.appendChild(el("th", undefined, column));
    }
    table.appendChild(head);
    for (const row of rows) {
      const tr = el("tr");
      for (const cell of row) {
        tr.appendChild(el("td", undefined, cell));
      }
      table.appendChild(tr);
    }
    const scroll = el("div", "table-scroll");
    scroll.appendChild(table);
    section.appendChild(scroll);
    return section;
  }

  private renderViewsTab(): HTMLElement {
    const section = el("section", "views-tab");
    section.appendChild(el("h2", "panel-title", "Views"));
    if (this.viewsPane.error) {
      section.appendChild(el("p", "error", this.viewsPane.error));
    }
    if (this.viewsPane.views.length === 0) {
      section.appendChild(el("p", "empty", "No views registered."));
      return section;
    }
    const list = el("ul", "view-list");
    for (const view of this.viewsPane.views) {
      const row = el("li", "view-row");
      row.appendChild(el("span", "view-name", view.name));
      for (const badge of badgesFor(view)) {
        row.appendChild(el("span", `badge ${badge}`, badge));
      }
      row.appendChild(el("span", "view-source", `over ${view.source}`));
      if (canRefresh(view)) {
        row.appendChild(
          button("refresh", async () => {
            await this.viewsPane.refresh(view.name);
            this.render();
          }),
        );
      }
      row.appendChild(button("open in canvas", () => void this.openView(view.name)));
      list.appendChild(row);
    }
    section.appendChild(list);
    return section;
  }

  private renderGraphTab(): HTMLElement {
    const section = el("section", "graph-tab");
    section.appendChild(el("h2", "panel-title", "Coparticipation graph"));

    const controls = el("div", "graph-controls");
    controls.appendChild(el("label", undefined, `min weight: ${this.explorer.settings.minWeight}`));
    const slider = el("input") as HTMLInputElement;
    slider.type = "range";
    slider.min = "1";
    slider.max = "10";
    slider.value = String(this.explorer.settings.minWeight);
    slider.addEventListener("change", async () => {
      await this.explorer.setMinWeight(parseInt(slider.value, 10));
      this.render();
    });
    controls.appendChild(slider);

    const weighting = el("select") as HTMLSelectElement;
    for (const mode of ["threads", "pairs"]) {
      const opt = el("option", undefined, mode) as HTMLOptionElement;
      opt.value = mode;
      weighting.appendChild(opt);
    }
    weighting.value = this.explorer.settings.weighting;
    weighting.addEventListener("change", async () => {
      await this.explorer.setWeighting(weighting.value as "threads" | "pairs");
      this.render();
    });
    controls.appendChild(weighting);
    section.appendChild(controls);

    if (this.explorer.error) {
      section.appendChild(el("p", "error", this.explorer.error));
      return section;
    }
    const graph = this.explorer.graph;
    if (!graph || graph.nodes.length === 0) {
      section.appendChild(el("p", "empty", "No graph to show."));
      return section;
    }

    const width = 760;
    const height = 520;
    const positions = layoutGraph(graph, width, height);
    const heaviest = Math.max(...graph.edges.map((e) => e.weight), 0);
    const svgNs = "http://www.w3.org/2000/svg";
    const svg = document.createElementNS(svgNs, "svg");
    svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
    svg.setAttribute("class", "graph-svg");

    for (const edge of this.explorer.displayedEdges()) {
      const a = positions.get(edge.a);
      const b = positions.get(edge.b);
      if (!a || !b) {
        continue;
      }
      const line = document.createElementNS(svgNs, "line");
      line.setAttribute("x1", a.x.toFixed(1));
      line.setAttribute("y1", a.y.toFixed(1));
      line.setAttribute("x2", b.x.toFixed(1));
      line.setAttribute("y2", b.y.toFixed(1));
      line.setAttribute("stroke", "#667");
      line.setAttribute("stroke-width", edgeWidth(edge.weight, heaviest).toFixed(2));
      const title = document.createElementNS(svgNs, "title");
      title.textContent = `weight ${edge.weight}`;
      line.appendChild(title);
      svg.appendChild(line);
    }
    for (const node of graph.nodes) {
      const point = positions.get(node.entity_id);
      if (!point) {
        continue;
      }
      const circle = document.createElementNS(svgNs, "circle");
      circle.setAttribute("cx", point.x.toFixed(1));
      circle.setAttribute("cy", point.y.toFixed(1));
      circle.setAttribute("r", "7");
      circle.setAttribute("fill", institutionColor(node.institution));
      const title = document.createElementNS(svgNs, "title");
      title.textContent = node.institution ? `${node.label} (${node.institution})` : node.label;
      circle.appendChild(title);
      svg.appendChild(circle);
      const text = document.createElementNS(svgNs, "text");
      text.setAttribute("x", (point.x + 9).toFixed(1));
      text.setAttribute("y", (point.y + 3).toFixed(1));
      text.setAttribute("class", "node-label");
      text.textContent = node.label;
      svg.appendChild(text);
    }
    section.appendChild(svg);

    const institutions = [...new Set(graph.nodes.map((n) => n.institution))];
    const legend = el("div", "legend");
    for (const institution of institutions) {
      const entry = el("span", "legend-entry", institution ?? "unaffiliated");
      entry.style.borderLeft = `12px solid ${institutionColor(institution)}`;
      legend.appendChild(entry);
    }
    section.appendChild(legend);
    return section;
  }
}

const mount = typeof document !== "undefined" ? document.getElementById("app") : null;
if (mount) {
  const app = new App(mount);
  void app.init();
}
