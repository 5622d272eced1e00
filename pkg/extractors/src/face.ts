import * as fs from "fs";
import * as path from "path";
import Papa from "papaparse";

export const N_ACTION_UNITS = 17;
export const FACE_DIM = 2 * N_ACTION_UNITS;

export interface AuSeries {
  speakerId: string;
  times: number[];
  /** values[i] holds the 17 action-unit intensities at times[i]. */
  values: number[][];
}

/**
 * Read one participant's action-unit series.
 *
 * Expected layout: a header row `time,<au...>` with exactly 17 action-unit
 * columns, then one row per video frame.  Column names are free-form; only
 * the count and order matter.
 */
export function readAuSeries(file: string): AuSeries {
  const parsed = Papa.parse<string[]>(fs.readFileSync(file, "utf8").trim(), {
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`${file}: ${parsed.errors[0].message} (row ${parsed.errors[0].row})`);
  }
  const rows = parsed.data;
  if (rows.length === 0) throw new Error(`${file}: empty action-unit file`);
  const header = rows[0];
  if (header[0] !== "time") throw new Error(`${file}: first column must be "time"`);
  if (header.length !== 1 + N_ACTION_UNITS) {
    throw new Error(`${file}: expected ${N_ACTION_UNITS} action-unit columns, got ${header.length - 1}`);
  }
  const times: number[] = [];
  const values: number[][] = [];
  for (let r = 1; r < rows.length; r++) {
    const row = rows[r];
    if (row.length !== header.length) {
      throw new Error(`${file}: row ${r + 1} has ${row.length} fields, expected ${header.length}`);
    }
    const nums = row.map(Number);
    if (nums.some((v) => !Number.isFinite(v))) {
      throw new Error(`${file}: row ${r + 1} has a non-numeric cell`);
    }
    times.push(nums[0]);
    values.push(nums.slice(1));
  }
  return { speakerId: path.basename(file).replace(/\.aus\.csv$/, ""), times, values };
}

/** All `<speaker>.aus.csv` series in a session directory, sorted by speaker. */
export function readSessionAuSeries(sessionDir: string): AuSeries[] {
  return fs
    .readdirSync(sessionDir)
    .filter((f) => f.endsWith(".aus.csv"))
    .sort()
    .map((f) => readAuSeries(path.join(sessionDir, f)));
}

/**
 * Pool one participant's series over a clip span into mean|std (34 dims).
 *
 * Frames with start <= time < end contribute; std is the population standard
 * deviation per action unit.  Returns null when no frame falls in the span.
 */
export function auClipStats(series: AuSeries, start: number, end: number): Float64Array | null {
  const picked: number[][] = [];
  for (let i = 0; i < series.times.length; i++) {
    if (series.times[i] >= start && series.times[i] < end) picked.push(series.values[i]);
  }
  if (picked.length === 0) return null;
  const n = picked.length;
  const mean = new Float64Array(N_ACTION_UNITS);
  for (const row of picked) {
    for (let j = 0; j < N_ACTION_UNITS; j++) mean[j] += row[j];
  }
  for (let j = 0; j < N_ACTION_UNITS; j++) mean[j] /= n;
  const out = new Float64Array(FACE_DIM);
  out.set(mean, 0);
  for (const row of picked) {
    for (let j = 0; j < N_ACTION_UNITS; j++) {
      const d = row[j] - mean[j];
      out[N_ACTION_UNITS + j] += d * d;
    }
  }
  for (let j = 0; j < N_ACTION_UNITS; j++) {
    out[N_ACTION_UNITS + j] = Math.sqrt(out[N_ACTION_UNITS + j] / n);
  }
  return out;
}
