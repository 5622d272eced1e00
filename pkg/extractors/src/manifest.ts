import * as fs from "fs";

export const CLIP_KINDS = new Set(["gap", "overlap", "non_targeted"]);

export interface Clip {
  clipId: string;
  sessionId: string;
  markTime: number;
  start: number;
  end: number;
  kind: string;
}

/** Read a clip manifest: one JSON object per line. */
export function readManifest(file: string): Clip[] {
  const clips: Clip[] = [];
  const seen = new Set<string>();
  const lines = fs.readFileSync(file, "utf8").split("\n");
  lines.forEach((line, idx) => {
    if (line.trim() === "") return;
    let rec: Record<string, unknown>;
    try {
      rec = JSON.parse(line);
    } catch (exc) {
      throw new Error(`${file}:${idx + 1}: unparsable manifest line (${exc})`);
    }
    const clip: Clip = {
      clipId: String(rec.clip_id),
      sessionId: String(rec.session_id),
      markTime: Number(rec.mark_time),
      start: Number(rec.start),
      end: Number(rec.end),
      kind: String(rec.kind),
    };
    for (const key of ["clip_id", "session_id", "mark_time", "start", "end", "kind"]) {
      if (!(key in rec)) throw new Error(`${file}:${idx + 1}: missing field ${key}`);
    }
    if (!Number.isFinite(clip.start) || !Number.isFinite(clip.end) || clip.end <= clip.start) {
      throw new Error(`${file}:${idx + 1}: bad clip span [${rec.start}, ${rec.end}]`);
    }
    if (!CLIP_KINDS.has(clip.kind)) throw new Error(`${file}:${idx + 1}: unknown clip kind "${clip.kind}"`);
    if (seen.has(clip.clipId)) throw new Error(`${file}:${idx + 1}: duplicate clip_id "${clip.clipId}"`);
    seen.add(clip.clipId);
    clips.push(clip);
  });
  return clips;
}
