import * as fs from "fs";
import * as path from "path";
import { describe, expect, test } from "vitest";
import { TEXT_DIM, buildClipText, hashTextVector, readTranscripts, Utterance } from "../src/text";
import { makeTmpDir } from "./helpers";

function utt(sessionId: string, speaker: string, start: number, end: number, text: string): Utterance {
  return { sessionId, speaker, start, end, text };
}

describe("transcript reading", () => {
  test("parses quoted text with commas", () => {
    const dir = makeTmpDir("tr-");
    const file = path.join(dir, "t.csv");
    fs.writeFileSync(
      file,
      'session_id,speaker,start,end,text\ns1,a,0.0,1.5,"well, hello there"\ns1,b,1.5,2.0,hi\n'
    );
    const utts = readTranscripts(file);
    expect(utts.length).toBe(2);
    expect(utts[0].text).toBe("well, hello there");
    expect(utts[1].speaker).toBe("b");
  });

  test("wrong header is rejected", () => {
    const dir = makeTmpDir("tr-");
    const file = path.join(dir, "t.csv");
    fs.writeFileSync(file, "speaker,start,end,text\na,0,1,hi\n");
    expect(() => readTranscripts(file)).toThrow(/header must be/);
  });

  test("reversed utterance span is rejected", () => {
    const dir = makeTmpDir("tr-");
    const file = path.join(dir, "t.csv");
    fs.writeFileSync(file, "session_id,speaker,start,end,text\ns1,a,2.0,1.0,hi\n");
    expect(() => readTranscripts(file)).toThrow(/bad time span/);
  });
});

describe("clip text assembly", () => {
  const utterances = [
    utt("s1", "b", 4.0, 6.0, "second line"),
    utt("s1", "a", 2.0, 3.5, "first line"),
    utt("s2", "a", 2.0, 3.5, "other session"),
    utt("s1", "c", 9.0, 10.0, "outside the clip"),
  ];

  test("lines are chronological and speaker-prefixed", () => {
    const text = buildClipText(utterances, "s1", 0.0, 8.0);
    expect(text).toBe("Speaker a: first line\nSpeaker b: second line");
  });

  test("only overlapping utterances of the right session count", () => {
    const text = buildClipText(utterances, "s1", 3.0, 5.0);
    expect(text).toBe("Speaker a: first line\nSpeaker b: second line");
    expect(buildClipText(utterances, "s1", 6.0, 8.0)).toBe("");
    // Ending exactly at the clip start is not an overlap.
    expect(buildClipText(utterances, "s1", 3.5, 3.9)).toBe("");
  });
});

describe("hashed text vectors", () => {
  test("fixed width and unit norm", () => {
    const vec = hashTextVector("Speaker a: well, that was fun");
    expect(vec).not.toBeNull();
    expect(vec!.length).toBe(TEXT_DIM);
    let norm = 0;
    for (const v of vec!) norm += v * v;
    expect(Math.sqrt(norm)).toBeCloseTo(1, 12);
  });

  test("deterministic and content sensitive", () => {
    const a1 = hashTextVector("the quick brown fox");
    const a2 = hashTextVector("the quick brown fox");
    const b = hashTextVector("a completely different utterance or at least mostly");
    expect(Array.from(a1!)).toEqual(Array.from(a2!));
    const same = Array.from(a1!).every((v, i) => v === b![i]);
    expect(same).toBe(false);
  });

  test("case folds before hashing", () => {
    const lower = hashTextVector("hello world");
    const upper = hashTextVector("HELLO WORLD");
    expect(Array.from(lower!)).toEqual(Array.from(upper!));
  });

  test("tokenless text gives null", () => {
    expect(hashTextVector("")).toBeNull();
    expect(hashTextVector("?!... --- !!!")).toBeNull();
  });
});
