/**
 * Response schemas mirroring the service's published JSON Schemas
 * (persode/data/api_schemas.json). Every API response is validated against
 * these before anything renders; objects are strict so drift between client
 * and service fails loudly.
 */

import { z } from "zod";

export const ErrorBody = z.strictObject({
  code: z.string(),
  message: z.string(),
  field: z.string().nullable().optional(),
});
export type ErrorBody = z.infer<typeof ErrorBody>;

export const Preferences = z.strictObject({
  schema_version: z.literal(1),
  user_id: z.string(),
  age_band: z.enum(["child", "teen", "young_adult", "adult", "senior"]),
  appearance: z.record(z.string(), z.string()),
  background_aesthetic: z.string(),
  traits: z.array(z.string()),
  emotional_expressiveness: z.number().int().min(1).max(5),
});
export type Preferences = z.infer<typeof Preferences>;

export const User = z.strictObject({
  user_id: z.string(),
  created_at: z.number().int(),
  preferences: Preferences,
});
export type User = z.infer<typeof User>;

export const Session = z.strictObject({
  session_id: z.string(),
  user_id: z.string(),
  opened_at: z.number().int(),
  state: z.enum(["open", "closed"]),
});
export type Session = z.infer<typeof Session>;

export const RankedMemory = z.strictObject({
  fragment_id: z.string(),
  similarity: z.number().min(0).max(1),
  strength: z.number().min(0).max(1),
  combined: z.number().min(0).max(1),
  term: z.enum(["short", "long"]),
  event_summary: z.string(),
  top_emotion: z.string().nullable(),
  age_days: z.number().min(0),
});
export type RankedMemory = z.infer<typeof RankedMemory>;

export const MessageResponse = z.strictObject({
  reply: z.string().min(1),
  cited_memory_ids: z.array(z.string()),
  ranked: z.array(RankedMemory),
});
export type MessageResponse = z.infer<typeof MessageResponse>;

export const DiaryEntry = z.strictObject({
  schema_version: z.literal(1),
  id: z.string(),
  user_id: z.string(),
  diary_text: z.string().min(1),
  image_prompt: z.string(),
  image_ref: z.string().nullable(),
  source_event_ids: z.array(z.string()).min(1),
  created_at: z.number().int(),
  hashtags: z.array(z.string().regex(/^#[A-Za-z0-9]+$/)),
});
export type DiaryEntry = z.infer<typeof DiaryEntry>;

export const CloseResponse = z.strictObject({
  diary: DiaryEntry,
  new_fragment_ids: z.array(z.string()),
  warnings: z.array(z.string()),
});
export type CloseResponse = z.infer<typeof CloseResponse>;

export const DiaryPage = z.strictObject({
  entries: z.array(DiaryEntry),
  page: z.number().int().min(1),
  page_size: z.number().int().min(1),
  total: z.number().int().min(0),
  snapshot: z.number().int().min(0),
});
export type DiaryPage = z.infer<typeof DiaryPage>;

export const Emotion = z.strictObject({
  label: z.string(),
  intensity: z.number().min(0).max(1),
});

export const MemoryView = z.strictObject({
  id: z.string(),
  user_id: z.string(),
  event_summary: z.string(),
  emotions: z.array(Emotion),
  emotional_intensity: z.number().min(0).max(1),
  recall_count: z.number().int().min(0),
  last_recalled_at: z.number().int().nullable(),
  relevance: z.number().min(0).max(1),
  created_at: z.number().int(),
  hashtags: z.array(z.string()),
  people: z.array(z.string()),
  objects: z.array(z.string()),
  places: z.array(z.string()),
  strength: z.number().min(0).max(1),
  term: z.enum(["short", "long"]),
});
export type MemoryView = z.infer<typeof MemoryView>;

export const MemoriesResponse = z.strictObject({
  fragments: z.array(MemoryView),
});
export type MemoriesResponse = z.infer<typeof MemoriesResponse>;

export const Health = z.strictObject({
  status: z.literal("ok"),
  version: z.string(),
  mock_providers: z.boolean(),
});
export type Health = z.infer<typeof Health>;

export const Catalogs = z.strictObject({
  schema_version: z.literal(1),
  age_bands: z.array(z.string()),
  appearance: z.record(z.string(), z.array(z.string())),
  backgrounds: z.array(z.string()),
  traits: z.array(z.string()),
});
export type Catalogs = z.infer<typeof Catalogs>;
