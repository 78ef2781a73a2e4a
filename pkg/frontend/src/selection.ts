import { utf16ToCp } from "./unicode.js";

/** The reviewer's selection mapped to code-point offsets in the ORIGINAL text.
 * Offsets are resolved by summing the text content preceding the anchor/focus
 * nodes inside the pane, then converting UTF-16 indices to code points, so the
 * mapping is exact for any Unicode text. */
export interface SelectionOffsets {
  start: number;
  end: number;
  text: string;
}

function utf16OffsetWithin(root: Node, node: Node, offsetInNode: number): number {
  let total = 0;
  const walk = (current: Node): boolean => {
    if (current === node) {
      total += current.nodeType === Node.TEXT_NODE ? offsetInNode : 0;
      return true;
    }
    if (current.nodeType === Node.TEXT_NODE) {
      total += (current.textContent ?? "").length;
      return false;
    }
    for (const child of Array.from(current.childNodes)) {
      if (walk(child)) return true;
    }
    return false;
  };
  walk(root);
  return total;
}

export function selectionOffsets(paneRoot: HTMLElement, selection: Selection): SelectionOffsets | null {
  if (selection.rangeCount === 0 || selection.isCollapsed) return null;
  const range = selection.getRangeAt(0);
  if (!paneRoot.contains(range.startContainer) || !paneRoot.contains(range.endContainer)) {
    return null;
  }
  const text = paneRoot.textContent ?? "";
  const a = utf16OffsetWithin(paneRoot, range.startContainer, range.startOffset);
  const b = utf16OffsetWithin(paneRoot, range.endContainer, range.endOffset);
  const [lo, hi] = a <= b ? [a, b] : [b, a];
  const start = utf16ToCp(text, lo);
  const end = utf16ToCp(text, hi);
  if (start === end) return null;
  return { start, end, text: text.slice(lo, hi) };
}
