import type { BandName, EntityType } from "./types.js";

/** Fixed legend, one color per entity type; backgrounds chosen to keep
 * >= 4.5:1 contrast against the near-black text used in the panes. */
export const ENTITY_COLORS: Record<EntityType, string> = {
  NAME: "#ffd6a5",
  DATE: "#bde0fe",
  AGE: "#caffbf",
  LOCATION: "#ffc6ff",
  PROFESSION: "#fdffb6",
  ID: "#ffadad",
  CONTACT: "#a0e7e5",
  PHI: "#d0d1ff",
};

export const BAND_COLORS: Record<BandName, string> = {
  green: "#2d6a4f",
  yellow: "#9c6f1c",
  red: "#9d2222",
};
