/**
 * Parser for the service's canonical document text: one-line XML with
 * sorted double-quoted attributes, entity escapes, and either text
 * content or child elements (never mixed). No prologs, comments,
 * namespaces, or CDATA ever appear, so none are handled.
 */

export interface XmlNode {
  tag: string;
  attrs: Record<string, string>;
  text: string | null;
  children: XmlNode[];
}

export class XmlError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "XmlError";
  }
}

const NAME_RE = /[A-Za-z_][A-Za-z0-9_.:-]*/y;

function unescapeXml(raw: string): string {
  return raw.replace(/&(#x?[0-9A-Fa-f]+|[a-z]+);/g, (whole, body: string) => {
    if (body === "amp") return "&";
    if (body === "lt") return "<";
    if (body === "gt") return ">";
    if (body === "quot") return '"';
    if (body === "apos") return "'";
    if (body.startsWith("#x") || body.startsWith("#X")) {
      return String.fromCodePoint(parseInt(body.slice(2), 16));
    }
    if (body.startsWith("#")) {
      return String.fromCodePoint(parseInt(body.slice(1), 10));
    }
    throw new XmlError(`unknown entity ${JSON.stringify(whole)}`);
  });
}

class Cursor {
  pos = 0;

  constructor(readonly text: string) {}

  peek(): string {
    return this.text[this.pos] ?? "";
  }

  take(expected: string): void {
    if (!this.text.startsWith(expected, this.pos)) {
      throw new XmlError(`expected ${JSON.stringify(expected)} at offset ${this.pos}`);
    }
    this.pos += expected.length;
  }

  skipSpace(): void {
    while (this.pos < this.text.length && /\s/.test(this.text[this.pos])) {
      this.pos += 1;
    }
  }

  name(): string {
    NAME_RE.lastIndex = this.pos;
    const match = NAME_RE.exec(this.text);
    if (!match) {
      throw new XmlError(`expected a name at offset ${this.pos}`);
    }
    this.pos = NAME_RE.lastIndex;
    return match[0];
  }

  until(stop: string): string {
    const end = this.text.indexOf(stop, this.pos);
    if (end < 0) {
      throw new XmlError(`unterminated section from offset ${this.pos}`);
    }
    const piece = this.text.slice(this.pos, end);
    this.pos = end;
    return piece;
  }
}

function parseElement(cursor: Cursor): XmlNode {
  cursor.take("<");
  const tag = cursor.name();
  const attrs: Record<string, string> = {};
  for (;;) {
    cursor.skipSpace();
    const ch = cursor.peek();
    if (ch === "/" || ch === ">") {
      break;
    }
    const attrName = cursor.name();
    cursor.take("=");
    cursor.take('"');
    attrs[attrName] = unescapeXml(cursor.until('"'));
    cursor.take('"');
  }
  if (cursor.peek() === "/") {
    cursor.take("/>");
    return { tag, attrs, text: null, children: [] };
  }
  cursor.take(">");

  const children: XmlNode[] = [];
  let text: string | null = null;
  for (;;) {
    if (cursor.peek() === "<") {
      if (cursor.text.startsWith("</", cursor.pos)) {
        break;
      }
      children.push(parseElement(cursor));
    } else {
      const raw = cursor.until("<");
      if (children.length === 0 && text === null) {
        text = unescapeXml(raw);
      } else if (raw.trim() !== "") {
        throw new XmlError(`mixed content inside <${tag}>`);
      }
    }
  }
  cursor.take(`</${tag}>`);
  if (children.length > 0 && text !== null && text.trim() !== "") {
    throw new XmlError(`mixed content inside <${tag}>`);
  }
  return { tag, attrs, text: children.length > 0 ? null : text, children };
}

export function parseXml(text: string): XmlNode {
  const cursor = new Cursor(text.trim());
  const root = parseElement(cursor);
  cursor.skipSpace();
  if (cursor.pos !== cursor.text.length) {
    throw new XmlError(`trailing content at offset ${cursor.pos}`);
  }
  return root;
}
