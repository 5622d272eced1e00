export { readWav, writeWav, readSessionTracks, mixTracks } from "./wav";
export { fft, hannWindow, melFilterbank, logMelFrame, nextPowerOfTwo } from "./mel";
export { AUDIO_DIM, FRAME_SECONDS, audioClipFrames, audioClipRow } from "./audio";
export { FACE_DIM, N_ACTION_UNITS, auClipStats, readAuSeries, readSessionAuSeries } from "./face";
export { TEXT_DIM, buildClipText, hashTextVector, readTranscripts } from "./text";
export { CLIP_KINDS, readManifest } from "./manifest";
export { MODALITIES, extract, writeEmbeddings } from "./extract";
export { VERSIONS } from "./versions";
export type { WavData, SessionTracks } from "./wav";
export type { MelFilterbank } from "./mel";
export type { AuSeries } from "./face";
export type { Utterance } from "./text";
export type { Clip } from "./manifest";
export type { EmbeddingRow, ExtractionJob, Modality } from "./extract";
