/** Server offsets count Unicode code points; JS strings index UTF-16 units.
 * These helpers convert between the two so highlights and selections stay
 * exact on any text, surrogate pairs included. */

export function codePointLength(text: string): number {
  let n = 0;
  for (const _ of text) n++;
  return n;
}

/** UTF-16 index for a code-point offset (clamped to the string end). */
export function cpToUtf16(text: string, cpOffset: number): number {
  if (cpOffset <= 0) return 0;
  let cp = 0;
  let i = 0;
  while (i < text.length && cp < cpOffset) {
    const code = text.codePointAt(i)!;
    i += code > 0xffff ? 2 : 1;
    cp++;
  }
  return i;
}

/** Code-point offset for a UTF-16 index (indices inside a surrogate pair
 * round down to the pair's start). */
export function utf16ToCp(text: string, utf16Offset: number): number {
  let cp = 0;
  let i = 0;
  while (i < utf16Offset && i < text.length) {
    const code = text.codePointAt(i)!;
    i += code > 0xffff ? 2 : 1;
    cp++;
  }
  return i > utf16Offset ? cp - 1 : cp;
}

/** Slice by code-point offsets. */
export function cpSlice(text: string, cpStart: number, cpEnd: number): string {
  return text.slice(cpToUtf16(text, cpStart), cpToUtf16(text, cpEnd));
}
