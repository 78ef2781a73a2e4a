import { cpSlice, codePointLength } from "./unicode.js";
import type { EntityType, SpanMapRow } from "./types.js";

/** One rendered run of text in a pane. Highlighted segments carry the index
 * of their span_map row so hovering can light up the counterpart pane; the
 * client never derives highlight positions from the text itself. */
export interface Segment {
  text: string;
  rowIndex: number | null;
  etype: EntityType | null;
  action: string | null;
}

function buildSegments(
  text: string,
  rows: { start: number; end: number; rowIndex: number; etype: EntityType; action: string }[],
): Segment[] {
  const ordered = [...rows].sort((a, b) => a.start - b.start || a.end - b.end);
  const segments: Segment[] = [];
  let cursor = 0;
  for (const row of ordered) {
    if (row.start < cursor) continue; // defensive: server guarantees disjoint rows
    if (row.start > cursor) {
      segments.push({ text: cpSlice(text, cursor, row.start), rowIndex: null, etype: null, action: null });
    }
    segments.push({
      text: cpSlice(text, row.start, row.end),
      rowIndex: row.rowIndex,
      etype: row.etype,
      action: row.action,
    });
    cursor = row.end;
  }
  const total = codePointLength(text);
  if (cursor < total) {
    segments.push({ text: cpSlice(text, cursor, total), rowIndex: null, etype: null, action: null });
  }
  return segments;
}

/** Original pane: highlights sit at each span_map row's source offsets. */
export function originalSegments(originalText: string, spanMap: SpanMapRow[]): Segment[] {
  return buildSegments(
    originalText,
    spanMap.map((row, rowIndex) => ({
      start: row.original.start,
      end: row.original.end,
      rowIndex,
      etype: row.original.type,
      action: row.action,
    })),
  );
}

/** Masked pane: highlights sit at the mapped (shifted) offsets, so alignment
 * survives replacement length drift by construction. */
export function maskedSegments(maskedText: string, spanMap: SpanMapRow[]): Segment[] {
  return buildSegments(
    maskedText,
    spanMap.map((row, rowIndex) => ({
      start: row.new_start,
      end: row.new_end,
      rowIndex,
      etype: row.original.type,
      action: row.action,
    })),
  );
}

/** Sanity check used before rendering: every row's masked slice must equal its
 * recorded replacement. A failure degrades rendering to plain text. */
export function spanMapConsistent(maskedText: string, spanMap: SpanMapRow[]): boolean {
  return spanMap.every(
    (row) => cpSlice(maskedText, row.new_start, row.new_end) === row.replacement,
  );
}
