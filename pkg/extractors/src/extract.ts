import * as fs from "fs";
import * as path from "path";
import { audioClipRow } from "./audio";
import { AuSeries, auClipStats, readSessionAuSeries } from "./face";
import { Utterance, buildClipText, hashTextVector, readTranscripts } from "./text";
import { readManifest } from "./manifest";
import { mixTracks, readSessionTracks } from "./wav";
import { VERSIONS } from "./versions";

export const MODALITIES = ["audio", "face", "text"] as const;
export type Modality = (typeof MODALITIES)[number];

export interface ExtractionJob {
  manifest: string;
  mediaRoot: string;
  /** Required when "text" is among the modalities. */
  transcripts?: string;
  modalities: Modality[];
  /** Audio rows: pre-pooled 128-dim mean instead of concatenated frames. */
  pool?: boolean;
}

export interface EmbeddingRow {
  clipId: string;
  modality: Modality;
  values: Float64Array;
}

interface SessionMedia {
  mix: Float64Array | null;
  sampleRate: number;
  auSeries: AuSeries[];
}

function loadSessionMedia(dir: string, job: ExtractionJob): SessionMedia {
  let mix: Float64Array | null = null;
  let sampleRate = 0;
  if (job.modalities.includes("audio")) {
    const tracks = readSessionTracks(dir);
    mix = mixTracks(tracks.tracks);
    sampleRate = tracks.sampleRate;
  }
  const auSeries = job.modalities.includes("face") ? readSessionAuSeries(dir) : [];
  return { mix, sampleRate, auSeries };
}

/**
 * Run the selected extractors over every clip in the manifest.
 *
 * Per clip the output holds at most one audio row (frame embeddings
 * concatenated, or pooled), one face row per participant with frames in the
 * clip span, and one text row (omitted when no utterance text overlaps the
 * span).  Rows follow manifest order; sessions are loaded once each.
 */
export function extract(job: ExtractionJob): EmbeddingRow[] {
  for (const m of job.modalities) {
    if (!MODALITIES.includes(m)) throw new Error(`unknown modality "${m}"`);
  }
  if (job.modalities.length === 0) throw new Error("no modalities selected");
  const clips = readManifest(job.manifest);
  const wantText = job.modalities.includes("text");
  if (wantText && !job.transcripts) {
    throw new Error("text extraction needs --transcripts");
  }
  const utterances: Utterance[] = wantText ? readTranscripts(job.transcripts as string) : [];
  const media = new Map<string, SessionMedia>();
  const rows: EmbeddingRow[] = [];
  for (const clip of clips) {
    let m = media.get(clip.sessionId);
    if (m === undefined) {
      m = loadSessionMedia(path.join(job.mediaRoot, clip.sessionId), job);
      media.set(clip.sessionId, m);
    }
    if (m.mix !== null) {
      const row = audioClipRow(m.mix, m.sampleRate, clip.start, clip.end, { pool: job.pool });
      if (row !== null) rows.push({ clipId: clip.clipId, modality: "audio", values: row });
    }
    for (const series of m.auSeries) {
      const stats = auClipStats(series, clip.start, clip.end);
      if (stats !== null) rows.push({ clipId: clip.clipId, modality: "face", values: stats });
    }
    if (wantText) {
      const text = buildClipText(utterances, clip.sessionId, clip.start, clip.end);
      const vec = hashTextVector(text);
      if (vec !== null) rows.push({ clipId: clip.clipId, modality: "text", values: vec });
    }
  }
  return rows;
}

/**
 * Write rows as `clip_id,modality,v0..` with one extra trailing header cell
 * per emitted modality carrying that extractor's version tag.
 */
export function writeEmbeddings(rows: EmbeddingRow[], outPath: string, modalities: Modality[]): void {
  const width = rows.reduce((w, r) => Math.max(w, r.values.length), 0);
  const header = ["clip_id", "modality"];
  for (let i = 0; i < width; i++) header.push(`v${i}`);
  for (const m of MODALITIES) {
    if (modalities.includes(m)) header.push(`${m}=${VERSIONS[m]}`);
  }
  const lines = [header.join(",")];
  for (const row of rows) {
    const cells = [row.clipId, row.modality];
    for (const v of row.values) {
      if (!Number.isFinite(v)) {
        throw new Error(`non-finite ${row.modality} value for clip "${row.clipId}"`);
      }
      cells.push(String(v));
    }
    lines.push(cells.join(","));
  }
  fs.writeFileSync(outPath, lines.join("\n") + "\n");
}
