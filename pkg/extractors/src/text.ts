import * as fs from "fs";
import Papa from "papaparse";

export const TEXT_DIM = 384;

export interface Utterance {
  sessionId: string;
  speaker: string;
  start: number;
  end: number;
  text: string;
}

/**
 * Read a transcript table with header `session_id,speaker,start,end,text`.
 * One row per utterance; text cells may contain commas and quotes.
 */
export function readTranscripts(file: string): Utterance[] {
  const parsed = Papa.parse<string[]>(fs.readFileSync(file, "utf8").trim(), {
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`${file}: ${parsed.errors[0].message} (row ${parsed.errors[0].row})`);
  }
  const rows = parsed.data;
  if (rows.length === 0) throw new Error(`${file}: empty transcript file`);
  const expected = ["session_id", "speaker", "start", "end", "text"];
  if (rows[0].length < 5 || expected.some((h, i) => rows[0][i].trim() !== h)) {
    throw new Error(`${file}: header must be ${expected.join(",")}`);
  }
  const utterances: Utterance[] = [];
  for (let r = 1; r < rows.length; r++) {
    const row = rows[r];
    if (row.length < 5) throw new Error(`${file}: row ${r + 1} has ${row.length} fields, expected 5`);
    const start = Number(row[2]);
    const end = Number(row[3]);
    if (!Number.isFinite(start) || !Number.isFinite(end) || end < start) {
      throw new Error(`${file}: row ${r + 1} has a bad time span [${row[2]}, ${row[3]}]`);
    }
    utterances.push({ sessionId: row[0], speaker: row[1], start, end, text: row[4] });
  }
  return utterances;
}

/**
 * Build the text of one clip: utterances overlapping the span, in
 * chronological order, each rendered as a "Speaker X: [text]" line.
 */
export function buildClipText(
  utterances: Utterance[],
  sessionId: string,
  start: number,
  end: number
): string {
  const inSpan = utterances.filter(
    (u) => u.sessionId === sessionId && u.start < end && u.end > start
  );
  inSpan.sort((a, b) => a.start - b.start);
  return inSpan.map((u) => `Speaker ${u.speaker}: ${u.text}`).join("\n");
}

/** FNV-1a 32-bit hash of a token's UTF-8 bytes. */
function fnv1a(token: string): number {
  let h = 0x811c9dc5;
  const bytes = Buffer.from(token, "utf8");
  for (const b of bytes) {
    h ^= b;
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h;
}

/**
 * Hash a clip's text into a fixed 384-dim bag-of-words vector.
 *
 * Tokens are lowercase runs of [a-z0-9']; each token adds +-1 (sign from the
 * hash's top bit) to bucket hash mod dim, and the result is L2-normalized.
 * Returns null when the text has no tokens, so the caller can omit the row.
 */
export function hashTextVector(text: string, dim = TEXT_DIM): Float64Array | null {
  const tokens = text.toLowerCase().match(/[a-z0-9']+/g);
  if (tokens === null || tokens.length === 0) return null;
  const vec = new Float64Array(dim);
  for (const tok of tokens) {
    const h = fnv1a(tok);
    vec[h % dim] += h & 0x80000000 ? -1 : 1;
  }
  let norm = 0;
  for (let i = 0; i < dim; i++) norm += vec[i] * vec[i];
  norm = Math.sqrt(norm);
  if (norm > 0) {
    for (let i = 0; i < dim; i++) vec[i] /= norm;
  }
  return vec;
}
