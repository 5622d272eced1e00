/**
 * Version tags recorded in the output header, one per emitted modality, so
 * downstream tables carry the provenance of the extractor that made them.
 * Bump a tag whenever the corresponding computation changes.
 */
export const VERSIONS = {
  audio: "logmel128/1.0",
  face: "au-meanstd/1.0",
  text: "hashbow384/1.0",
} as const;
