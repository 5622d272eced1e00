#!/usr/bin/env node
import { parseArgs } from "util";
import { EmbeddingRow, ExtractionJob, MODALITIES, Modality, extract, writeEmbeddings } from "./extract";

const USAGE = `usage: extract_embeddings --manifest m.jsonl --media-root R --out embeddings.csv
                          [--transcripts t.csv] [--modality audio,face,text] [--pool]

Reads session media under <media-root>/<session_id>/ (per-speaker .wav and
.aus.csv files) plus an utterance transcript table, and writes one embedding
row per (clip, modality) in the format the fluidlab toolkit reads.

  --manifest     clip manifest, one JSON object per line
  --media-root   directory of per-session media directories
  --transcripts  utterance table (session_id,speaker,start,end,text); needed
                 when "text" is among the modalities
  --modality     comma list out of audio,face,text (default: all three)
  --out          output embeddings CSV
  --pool         emit one pooled 128-dim audio row per clip instead of the
                 concatenated per-frame embeddings
`;

export function run(argv: string[]): number {
  let values: Record<string, unknown>;
  try {
    values = parseArgs({
      args: argv,
      options: {
        manifest: { type: "string" },
        "media-root": { type: "string" },
        transcripts: { type: "string" },
        modality: { type: "string", default: "audio,face,text" },
        out: { type: "string" },
        pool: { type: "boolean", default: false },
        help: { type: "boolean", default: false },
      },
      allowPositionals: false,
    }).values;
  } catch (exc) {
    console.error(`extract_embeddings: ${(exc as Error).message}`);
    return 1;
  }
  if (values.help) {
    console.log(USAGE);
    return 0;
  }
  for (const flag of ["manifest", "media-root", "out"]) {
    if (!values[flag]) {
      console.error(`extract_embeddings: --${flag} is required`);
      return 1;
    }
  }
  const modalities = String(values.modality)
    .split(",")
    .map((m) => m.trim())
    .filter((m) => m !== "") as Modality[];
  const job: ExtractionJob = {
    manifest: String(values.manifest),
    mediaRoot: String(values["media-root"]),
    transcripts: values.transcripts ? String(values.transcripts) : undefined,
    modalities,
    pool: Boolean(values.pool),
  };
  let rows: EmbeddingRow[];
  try {
    rows = extract(job);
    writeEmbeddings(rows, String(values.out), modalities);
  } catch (exc) {
    console.error(`extract_embeddings: ${(exc as Error).message}`);
    return 1;
  }
  const counts = MODALITIES.map((m) => `${m}=${rows.filter((r) => r.modality === m).length}`);
  console.log(`wrote ${rows.length} rows (${counts.join(", ")}) to ${values.out}`);
  return 0;
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
