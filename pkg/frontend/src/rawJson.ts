/**
 * JSON parser that keeps the raw text of every number literal.
 *
 * The service serializes monetary fields with exactly four decimal
 * places. The console must display those digits verbatim rather than
 * re-format a parsed double, so every number node carries both the
 * numeric value (for comparisons) and the untouched source text (for
 * display). This is also what guarantees the console performs no risk
 * math of its own: what you see is what the API sent.
 */

export type Json =
  | { kind: "object"; entries: Map<string, Json> }
  | { kind: "array"; items: Json[] }
  | { kind: "number"; value: number; raw: string }
  | { kind: "string"; value: string }
  | { kind: "boolean"; value: boolean }
  | { kind: "null" };

const NUMBER_RE = /-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][+-]?\d+)?/y;
const WS = new Set([" ", "\t", "\n", "\r"]);

class Parser {
  pos = 0;

  constructor(private readonly text: string) {}

  parse(): Json {
    const value = this.value();
    this.skipWs();
    if (this.pos !== this.text.length) {
      throw new SyntaxError(`trailing characters at offset ${this.pos}`);
    }
    return value;
  }

  private skipWs(): void {
    while (this.pos < this.text.length && WS.has(this.text[this.pos]!)) {
      this.pos++;
    }
  }

  private value(): Json {
    this.skipWs();
    const c = this.text[this.pos];
    if (c === undefined) throw new SyntaxError("unexpected end of input");
    if (c === "{") return this.object();
    if (c === "[") return this.array();
    if (c === '"') return { kind: "string", value: this.string() };
    if (this.text.startsWith("true", this.pos)) {
      this.pos += 4;
      return { kind: "boolean", value: true };
    }
    if (this.text.startsWith("false", this.pos)) {
      this.pos += 5;
      return { kind: "boolean", value: false };
    }
    if (this.text.startsWith("null", this.pos)) {
      this.pos += 4;
      return { kind: "null" };
    }
    return this.number();
  }

  private number(): Json {
    NUMBER_RE.lastIndex = this.pos;
    const m = NUMBER_RE.exec(this.text);
    if (!m || m.index !== this.pos) {
      throw new SyntaxError(`invalid token at offset ${this.pos}`);
    }
    this.pos = NUMBER_RE.lastIndex;
    return { kind: "number", value: Number(m[0]), raw: m[0] };
  }

  private string(): string {
    // this.text[this.pos] === '"'
    let out = "";
    this.pos++;
    for (;;) {
      const c = this.text[this.pos];
      if (c === undefined) throw new SyntaxError("unterminated string");
      if (c === '"') {
        this.pos++;
        return out;
      }
      if (c === "\\") {
        const esc = this.text[this.pos + 1];
        this.pos += 2;
        switch (esc) {
          case '"': out += '"'; break;
          case "\\": out += "\\"; break;
          case "/": out += "/"; break;
          case "b": out += "\b"; break;
          case "f": out += "\f"; break;
          case "n": out += "\n"; break;
          case "r": out += "\r"; break;
          case "t": out += "\t"; break;
          case "u": {
            const hex = this.text.slice(this.pos, this.pos + 4);
            if (!/^[0-9a-fA-F]{4}$/.test(hex)) {
              throw new SyntaxError("bad \\u escape");
            }
            out += String.fromCharCode(parseInt(hex, 16));
            this.pos += 4;
            break;
          }
          default:
            throw new SyntaxError(`bad escape \\${esc}`);
        }
        continue;
      }
      out += c;
      this.pos++;
    }
  }

  private object(): Json {
    const entries = new Map<string, Json>();
    this.pos++; // {
    this.skipWs();
    if (this.text[this.pos] === "}") {
      this.pos++;
      return { kind: "object", entries };
    }
    for (;;) {
      this.skipWs();
      const key = this.string();
      this.skipWs();
      if (this.text[this.pos] !== ":") {
        throw new SyntaxError(`expected ':' at offset ${this.pos}`);
      }
      this.pos++;
      entries.set(key, this.value());
      this.skipWs();
      const c = this.text[this.pos];
      if (c === ",") {
        this.pos++;
        continue;
      }
      if (c === "}") {
        this.pos++;
        return { kind: "object", entries };
      }
      throw new SyntaxError(`expected ',' or '}' at offset ${this.pos}`);
    }
  }

  private array(): Json {
    const items: Json[] = [];
    this.pos++; // [
    this.skipWs();
    if (this.text[this.pos] === "]") {
      this.pos++;
      return { kind: "array", items };
    }
    for (;;) {
      items.push(this.value());
      this.skipWs();
      const c = this.text[this.pos];
      if (c === ",") {
        this.pos++;
        continue;
      }
      if (c === "]") {
        this.pos++;
        return { kind: "array", items };
      }
      throw new SyntaxError(`expected ',' or ']' at offset ${this.pos}`);
    }
  }
}

/** Parse JSON text, preserving each number's source text. */
export function parseRaw(text: string): Json {
  return new Parser(text).parse();
}

/** Walk object keys / array indices; undefined when the path is absent. */
export function get(node: Json, ...path: (string | number)[]): Json | undefined {
  let cur: Json | undefined = node;
  for (const step of path) {
    if (cur === undefined) return undefined;
    if (typeof step === "number") {
      cur = cur.kind === "array" ? cur.items[step] : undefined;
    } else {
      cur = cur.kind === "object" ? cur.entries.get(step) : undefined;
    }
  }
  return cur;
}

/** The server's exact text for a leaf (numbers keep all their digits). */
export function rawText(node: Json | undefined): string {
  if (node === undefined) return "";
  switch (node.kind) {
    case "number": return node.raw;
    case "string": return node.value;
    case "boolean": return node.value ? "true" : "false";
    case "null": return "null";
    default: throw new TypeError(`no raw text for a ${node.kind}`);
  }
}

/** Numeric value of a number node (for comparisons, never for display). */
export function numberOf(node: Json | undefined): number {
  if (node === undefined || node.kind !== "number") {
    throw new TypeError("expected a number node");
  }
  return node.value;
}

/** Boolean value of a boolean node. */
export function booleanOf(node: Json | undefined): boolean {
  if (node === undefined || node.kind !== "boolean") {
    throw new TypeError("expected a boolean node");
  }
  return node.value;
}
