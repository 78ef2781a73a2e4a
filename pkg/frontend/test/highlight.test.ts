import { describe, expect, it } from "vitest";

import { maskedSegments, originalSegments, spanMapConsistent } from "../src/highlight.js";
import { codePointLength, cpSlice, cpToUtf16, utf16ToCp } from "../src/unicode.js";
import type { SpanMapRow } from "../src/types.js";

function row(
  start: number,
  end: number,
  text: string,
  newStart: number,
  newEnd: number,
  replacement: string,
  type = "NAME",
  action = "replace",
): SpanMapRow {
  return {
    original: { start, end, type: type as SpanMapRow["original"]["type"], source: "rule", text },
    new_start: newStart,
    new_end: newEnd,
    action: action as SpanMapRow["action"],
    replacement,
  };
}

describe("unicode offset conversion", () => {
  it("round-trips code points through utf-16 on multibyte text", () => {
    const text = "x😀y√z𝒜w";
    for (let cp = 0; cp <= codePointLength(text); cp++) {
      const utf16 = cpToUtf16(text, cp);
      expect(utf16ToCp(text, utf16)).toBe(cp);
    }
  });

  it("slices by code points", () => {
    expect(cpSlice("a😀bc", 1, 2)).toBe("😀");
    expect(cpSlice("a😀bc", 2, 4)).toBe("bc");
  });
});

describe("originalSegments", () => {
  it("zero spans yields one unhighlighted run", () => {
    const segments = originalSegments("nothing to see", []);
    expect(segments).toEqual([
      { text: "nothing to see", rowIndex: null, etype: null, action: null },
    ]);
  });

  it("splits around highlighted spans", () => {
    const text = "Dr. John Doe arrived";
    const segments = originalSegments(text, [
      row(4, 12, "John Doe", 4, 12, "XXX-Name", "NAME", "redact"),
    ]);
    expect(segments.map((s) => s.text)).toEqual(["Dr. ", "John Doe", " arrived"]);
    expect(segments[1]!.rowIndex).toBe(0);
    expect(segments[1]!.etype).toBe("NAME");
  });
});

describe("maskedSegments with replacement length drift", () => {
  // "John Doe" (8) -> "Mary Johnson-Smith" (18): later spans shift by +10
  const original = "John Doe saw ENT today";
  const masked = "Mary Johnson-Smith saw XXX-Date today";
  const spanMap = [
    row(0, 8, "John Doe", 0, 18, "Mary Johnson-Smith"),
    row(13, 16, "ENT", 23, 31, "XXX-Date", "DATE", "redact"),
  ];

  it("span map validates", () => {
    expect(spanMapConsistent(masked, spanMap)).toBe(true);
  });

  it("highlights land on the mapped offsets, not the source ones", () => {
    const segments = maskedSegments(masked, spanMap);
    expect(segments.map((s) => s.text)).toEqual([
      "Mary Johnson-Smith",
      " saw ",
      "XXX-Date",
      " today",
    ]);
    expect(segments[0]!.rowIndex).toBe(0);
    expect(segments[2]!.rowIndex).toBe(1);
  });

  it("counterpart rows share indices across panes", () => {
    const orig = originalSegments(original, spanMap).filter((s) => s.rowIndex !== null);
    const mask = maskedSegments(masked, spanMap).filter((s) => s.rowIndex !== null);
    expect(orig.map((s) => s.rowIndex)).toEqual(mask.map((s) => s.rowIndex));
  });

  it("detects a corrupt span map", () => {
    const broken = [row(0, 8, "John Doe", 0, 18, "SOMETHING ELSE!!!!")];
    expect(spanMapConsistent(masked, broken)).toBe(false);
  });

  it("handles multibyte text before a span", () => {
    const text = "😀😀 Beverly ok";
    const segments = originalSegments(text, [
      row(3, 10, "Beverly", 3, 11, "XXX-Name", "NAME", "redact"),
    ]);
    expect(segments.map((s) => s.text)).toEqual(["😀😀 ", "Beverly", " ok"]);
  });
});
